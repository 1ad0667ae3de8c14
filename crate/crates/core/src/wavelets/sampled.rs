//! Uniform dyadic grids and sampled functions.
//!
//! Serialized form: one header line
//! `SAMPLED dim=<d> G=<G> lo=<a_1,...> hi=<b_1,...> format=<binary|text>`
//! with the box corners as decimals, followed either by the row-major values
//! as little-endian `f64` or by one decimal value per line.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

/// Points `(lo_r + i_r) 2^{-g}`, `0 <= i_r < len_r`, in row-major order
/// (last axis fastest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub g: u32,
    pub lo: Vec<i64>,
    pub len: Vec<usize>,
}

impl GridSpec {
    pub fn new(g: u32, lo: Vec<i64>, len: Vec<usize>) -> Result<Self> {
        if lo.len() != len.len() || lo.is_empty() {
            return Err(Error::Grid("lo and len must have the same positive length".into()));
        }
        if len.iter().any(|&n| n == 0) {
            return Err(Error::Grid("empty grid axis".into()));
        }
        Ok(GridSpec { g, lo, len })
    }

    /// Grid at resolution `2^{-g}` covering `[a_r, b_r]` on each axis, with
    /// integer corners.
    pub fn covering(g: u32, a: &[i64], b: &[i64]) -> Result<Self> {
        let scale = 1i64 << g;
        let lo = a.iter().map(|&x| x * scale).collect();
        let len = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| ((y - x) * scale + 1).max(0) as usize)
            .collect();
        GridSpec::new(g, lo, len)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn num_points(&self) -> usize {
        self.len.iter().product()
    }

    pub fn step(&self) -> f64 {
        (-(self.g as f64)).exp2()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        (self.lo[axis] + i as i64) as f64 * self.step()
    }

    /// Whether `[a 2^{-e}, b 2^{-e}]` lies inside the grid's extent on `axis`.
    pub fn covers(&self, axis: usize, a: i64, b: i64, e: u32) -> bool {
        if e > self.g {
            return false;
        }
        let sh = self.g - e;
        let lo = self.lo[axis];
        let hi = lo + self.len[axis] as i64 - 1;
        (a << sh) >= lo && (b << sh) <= hi
    }

    /// Index of the grid point `x 2^{-g}` on `axis`, if present.
    pub fn index_of(&self, axis: usize, x: i64) -> Option<usize> {
        let i = x - self.lo[axis];
        (i >= 0 && (i as usize) < self.len[axis]).then_some(i as usize)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for r in (0..self.dim().saturating_sub(1)).rev() {
            s[r] = s[r + 1] * self.len[r + 1];
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.num_points();
        SampledFunction {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut out = SampledFunction::zeros(grid);
        let d = out.grid.dim();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        for v in out.values.iter_mut() {
            for r in 0..d {
                x[r] = out.grid.coord(r, idx[r]);
            }
            *v = f(&x);
            for r in (0..d).rev() {
                idx[r] += 1;
                if idx[r] < out.grid.len[r] {
                    break;
                }
                idx[r] = 0;
            }
        }
        out
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        let s = self.grid.strides();
        self.values[idx.iter().zip(&s).map(|(i, s)| i * s).sum::<usize>()]
    }

    /// `sum |f|^2 h^d`.
    pub fn l2_norm(&self) -> f64 {
        let hd = self.grid.step().powi(self.grid.dim() as i32);
        (self.values.iter().map(|v| v * v).sum::<f64>() * hd).sqrt()
    }

    pub fn max_abs_diff(&self, other: &SampledFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Grid("grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    fn header(&self, format: &str) -> String {
        let h = self.grid.step();
        let join = |v: Vec<f64>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let lo = join(self.grid.lo.iter().map(|&a| a as f64 * h).collect());
        let hi = join(
            self.grid
                .lo
                .iter()
                .zip(&self.grid.len)
                .map(|(&a, &n)| (a + n as i64 - 1) as f64 * h)
                .collect(),
        );
        format!(
            "SAMPLED dim={} G={} lo={lo} hi={hi} format={format}\n",
            self.grid.dim(),
            self.grid.g
        )
    }

    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.header("binary").as_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.header("text").as_bytes())?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    /// Reads either variant.
    pub fn read(r: impl Read) -> Result<Self> {
        let mut r = std::io::BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)
            .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
        let (grid, binary) = parse_header(line.trim_end())?;
        let n = grid.num_points();
        let mut values = Vec::with_capacity(n);
        if binary {
            let mut buf = [0u8; 8];
            for i in 0..n {
                r.read_exact(&mut buf).map_err(|e| Error::Parse {
                    line: 2,
                    msg: format!("value {i}: {e}"),
                })?;
                values.push(f64::from_le_bytes(buf));
            }
        } else {
            for (i, l) in r.lines().enumerate() {
                let l = l.map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() })?;
                if l.trim().is_empty() {
                    continue;
                }
                values.push(l.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 2,
                    msg: e.to_string(),
                })?);
            }
            if values.len() != n {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("expected {n} values, found {}", values.len()),
                });
            }
        }
        Ok(SampledFunction { grid, values })
    }
}

fn parse_header(line: &str) -> Result<(GridSpec, bool)> {
    let err = |m: String| Error::Parse { line: 1, msg: m };
    let mut toks = line.split_whitespace();
    if toks.next() != Some("SAMPLED") {
        return Err(err("missing SAMPLED header".into()));
    }
    let (mut dim, mut g, mut lo, mut hi, mut fmt) = (None, None, None, None, None);
    for t in toks {
        let (k, v) = t.split_once('=').ok_or_else(|| err(format!("bad token '{t}'")))?;
        let list = |v: &str| -> Result<Vec<f64>> {
            v.split(',')
                .map(|x| x.parse::<f64>().map_err(|e| err(format!("{k}: {e}"))))
                .collect()
        };
        match k {
            "dim" => dim = Some(v.parse::<usize>().map_err(|e| err(e.to_string()))?),
            "G" => g = Some(v.parse::<u32>().map_err(|e| err(e.to_string()))?),
            "lo" => lo = Some(list(v)?),
            "hi" => hi = Some(list(v)?),
            "format" => fmt = Some(v.to_string()),
            _ => return Err(err(format!("unknown key '{k}'"))),
        }
    }
    let (Some(dim), Some(g), Some(lo), Some(hi)) = (dim, g, lo, hi) else {
        return Err(err("header needs dim, G, lo and hi".into()));
    };
    if lo.len() != dim || hi.len() != dim || g > 52 {
        return Err(err("corner lists do not match dim".into()));
    }
    let scale = (g as f64).exp2();
    let to_int = |x: f64| -> Result<i64> {
        let y = x * scale;
        if y.fract() != 0.0 || !y.is_finite() {
            return Err(err(format!("corner {x} is not on the 2^-{g} grid")));
        }
        Ok(y as i64)
    };
    let lo_i = lo.iter().map(|&x| to_int(x)).collect::<Result<Vec<_>>>()?;
    let hi_i = hi.iter().map(|&x| to_int(x)).collect::<Result<Vec<_>>>()?;
    let len = lo_i
        .iter()
        .zip(&hi_i)
        .map(|(&a, &b)| {
            if b < a {
                Err(err("hi below lo".into()))
            } else {
                Ok((b - a + 1) as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let binary = match fmt.as_deref() {
        None | Some("binary") => true,
        Some("text") => false,
        Some(o) => return Err(err(format!("unknown format '{o}'"))),
    };
    Ok((GridSpec::new(g, lo_i, len)?, binary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn io_roundtrip() {
        let grid = GridSpec::new(3, vec![-4, 2], vec![5, 3]).unwrap();
        let f = SampledFunction::from_fn(grid, |x| x[0] * 10.0 + x[1] / 3.0);
        assert_eq!(f.at(&[0, 0]), -5.0 + 0.25 / 3.0);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(SampledFunction::read(&buf[..]).unwrap(), f);
        let mut buf = Vec::new();
        f.write_text(&mut buf).unwrap();
        assert_eq!(SampledFunction::read(&buf[..]).unwrap(), f);
        assert!(SampledFunction::read(&b"SAMPLED dim=1 G=1 lo=0.3 hi=1\n"[..]).is_err());
    }

    #[test]
    fn coverage() {
        let grid = GridSpec::covering(4, &[0, -1], &[3, 1]).unwrap();
        assert_eq!(grid.len, vec![49, 33]);
        assert!(grid.covers(0, 0, 3, 0));
        assert!(grid.covers(0, 1, 48, 4));
        assert!(!grid.covers(0, 1, 49, 4));
        assert!(!grid.covers(1, -3, 0, 1));
    }
}
