//! Delimited tables with a trailing `#`-prefixed summary block.

use std::fmt::Write as _;

use clap::ValueEnum;
use tracespace::interpolation::Envelope;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Tsv,
}

impl Format {
    fn sep(self) -> char {
        match self {
            Format::Csv => ',',
            Format::Tsv => '\t',
        }
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<String>,
    pub pass: bool,
}

/// Shortest representation that parses back to the same value, in
/// scientific notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Report {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            pass: true,
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    /// Records a named check in the summary and folds it into the verdict.
    pub fn verdict(&mut self, name: &str, ok: bool, detail: String) {
        self.pass &= ok;
        self.note(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
    }

    /// One summary line per envelope.
    pub fn envelopes(&mut self, label: &str, envs: &[Envelope]) {
        for e in envs {
            self.note(format!(
                "{label} J={} count={} min={} median={} max={} width={}",
                e.j_max,
                e.count,
                num(e.min),
                num(e.median),
                num(e.max),
                num(e.width)
            ));
        }
    }

    pub fn render(&self, format: Format) -> String {
        let sep = format.sep().to_string();
        let mut out = String::new();
        writeln!(out, "{}", self.columns.join(&sep)).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", r.join(&sep)).unwrap();
        }
        for s in &self.summary {
            writeln!(out, "# {s}").unwrap();
        }
        writeln!(out, "# verdict: {}", if self.pass { "PASS" } else { "FAIL" }).unwrap();
        out
    }
}
