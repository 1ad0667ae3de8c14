//! Line-oriented text format for coefficient sequences.
//!
//! ```text
//! # dim=2 J=3
//! F 0 0 1.5
//! M 4 3 1 -1 -0.25
//! ```
//!
//! A single family uses the header `# flat dim=<d>` and records `j m_1 .. m_d v`.
//!
//! Values are written with the shortest representation that parses back to
//! the same `f64`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::seq::{CoeffIndex, CoeffSeq, FlatSeq};

pub fn write_coeff_seq(seq: &CoeffSeq) -> String {
    let mut out = format!("# dim={} J={}\n", seq.dim(), seq.j_max());
    for (idx, v) in seq.entries() {
        match idx {
            CoeffIndex::Father(m) => {
                out.push('F');
                for mr in m {
                    write!(out, " {mr}").unwrap();
                }
            }
            CoeffIndex::Mother { ell, j, m } => {
                write!(out, "M {ell} {j}").unwrap();
                for mr in m {
                    write!(out, " {mr}").unwrap();
                }
            }
        }
        writeln!(out, " {v}").unwrap();
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: usize, text: &str) -> Result<(usize, u32)> {
    let body = text
        .strip_prefix('#')
        .ok_or_else(|| perr(line, "expected header '# dim=<d> J=<J>'"))?;
    let (mut dim, mut jm) = (None, None);
    for tok in body.split_whitespace() {
        match tok.split_once('=') {
            Some(("dim", v)) => {
                dim = Some(v.parse::<usize>().map_err(|e| perr(line, format!("dim: {e}")))?)
            }
            Some(("J", v)) => {
                jm = Some(v.parse::<u32>().map_err(|e| perr(line, format!("J: {e}")))?)
            }
            _ => return Err(perr(line, format!("unexpected header token '{tok}'"))),
        }
    }
    match (dim, jm) {
        (Some(d), Some(j)) if (1..=16).contains(&d) => Ok((d, j)),
        (Some(d), Some(_)) => Err(perr(line, format!("dim={d} out of range 1..=16"))),
        _ => Err(perr(line, "header must set both dim and J")),
    }
}

pub fn parse_coeff_seq(text: &str) -> Result<CoeffSeq> {
    let mut seq: Option<CoeffSeq> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        let Some(s) = seq.as_mut() else {
            let (d, j) = parse_header(line, t)?;
            seq = Some(CoeffSeq::new(d, j));
            continue;
        };
        if t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let d = s.dim();
        let int = |k: usize| -> Result<i64> {
            toks[k]
                .parse::<i64>()
                .map_err(|e| perr(line, format!("field {}: '{}': {e}", k + 1, toks[k])))
        };
        let value = |k: usize| -> Result<f64> {
            toks[k]
                .parse::<f64>()
                .map_err(|e| perr(line, format!("value '{}': {e}", toks[k])))
        };
        let res = match toks[0] {
            "F" => {
                if toks.len() != d + 2 {
                    return Err(perr(line, format!("F record needs {} fields", d + 2)));
                }
                let m = (1..=d).map(int).collect::<Result<Vec<_>>>()?;
                s.set_father(m, value(d + 1)?)
            }
            "M" => {
                if toks.len() != d + 4 {
                    return Err(perr(line, format!("M record needs {} fields", d + 4)));
                }
                let ell = int(1)?;
                let j = int(2)?;
                if ell < 0 || j < 0 {
                    return Err(perr(line, "negative family or scale"));
                }
                let m = (3..3 + d).map(int).collect::<Result<Vec<_>>>()?;
                s.set_mother(ell as usize, j as u32, m, value(d + 3)?)
            }
            other => return Err(perr(line, format!("unknown record type '{other}'"))),
        };
        res.map_err(|e| perr(line, e.to_string()))?;
    }
    seq.ok_or_else(|| perr(0, "empty input: missing header"))
}

pub fn write_flat_seq(seq: &FlatSeq) -> String {
    let mut out = format!("# flat dim={}\n", seq.dim());
    for (j, m, v) in seq.iter() {
        write!(out, "{j}").unwrap();
        for mr in m {
            write!(out, " {mr}").unwrap();
        }
        writeln!(out, " {v}").unwrap();
    }
    out
}

fn parse_flat_header(line: usize, text: &str) -> Result<usize> {
    let body = text
        .strip_prefix('#')
        .and_then(|b| b.trim_start().strip_prefix("flat"))
        .ok_or_else(|| perr(line, "expected header '# flat dim=<d>'"))?;
    match body.trim().strip_prefix("dim=").map(str::parse::<usize>) {
        Some(Ok(d)) if (1..=16).contains(&d) => Ok(d),
        Some(Ok(d)) => Err(perr(line, format!("dim={d} out of range 1..=16"))),
        Some(Err(e)) => Err(perr(line, format!("dim: {e}"))),
        None => Err(perr(line, "header must set dim")),
    }
}

pub fn parse_flat_seq(text: &str) -> Result<FlatSeq> {
    let mut seq: Option<FlatSeq> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        let Some(s) = seq.as_mut() else {
            seq = Some(FlatSeq::new(parse_flat_header(line, t)?));
            continue;
        };
        if t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let d = s.dim();
        if toks.len() != d + 2 {
            return Err(perr(line, format!("record needs {} fields", d + 2)));
        }
        let j = toks[0]
            .parse::<u32>()
            .map_err(|e| perr(line, format!("scale '{}': {e}", toks[0])))?;
        let m = toks[1..=d]
            .iter()
            .enumerate()
            .map(|(k, tok)| {
                tok.parse::<i64>()
                    .map_err(|e| perr(line, format!("field {}: '{tok}': {e}", k + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        let v = toks[d + 1]
            .parse::<f64>()
            .map_err(|e| perr(line, format!("value '{}': {e}", toks[d + 1])))?;
        s.set(j, m, v).map_err(|e| perr(line, e.to_string()))?;
    }
    seq.ok_or_else(|| perr(0, "empty input: missing header"))
}
