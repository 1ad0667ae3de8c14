//! Coefficient containers: wavelet families, flat `(j, m)` sequences and
//! simple functions on disjoint boxes.

use std::collections::BTreeMap;

use crate::dyadic::{DyadicBox, DyadicCube, WeightAlpha};
use crate::error::{Error, Result};

/// Position of one coefficient in a [`CoeffSeq`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoeffIndex {
    Father(Vec<i64>),
    Mother { ell: usize, j: u32, m: Vec<i64> },
}

/// Finitely supported wavelet coefficients `((lambda_m), (lambda^{j,l}_m))`
/// on `R^d`, with `l` in `2..=2^d` and `0 <= j <= J`.
///
/// Zero entries are not stored. All norms depend only on `|lambda|`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSeq {
    dim: usize,
    j_max: u32,
    father: BTreeMap<Vec<i64>, f64>,
    mother: BTreeMap<(usize, u32, Vec<i64>), f64>,
}

fn check_value(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(v))
    }
}

impl CoeffSeq {
    pub fn new(dim: usize, j_max: u32) -> Self {
        assert!(dim >= 1 && dim <= 16, "dimension {dim} out of range");
        CoeffSeq {
            dim,
            j_max,
            father: BTreeMap::new(),
            mother: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    /// Number of mother families, `2^d - 1`.
    pub fn num_families(&self) -> usize {
        (1 << self.dim) - 1
    }

    fn check_m(&self, m: &[i64]) -> Result<()> {
        if m.len() != self.dim {
            return Err(Error::Index(format!(
                "lattice point has {} coordinates, expected {}",
                m.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn set_father(&mut self, m: Vec<i64>, v: f64) -> Result<()> {
        self.check_m(&m)?;
        check_value(v)?;
        if v == 0.0 {
            self.father.remove(&m);
        } else {
            self.father.insert(m, v);
        }
        Ok(())
    }

    pub fn set_mother(&mut self, ell: usize, j: u32, m: Vec<i64>, v: f64) -> Result<()> {
        self.check_m(&m)?;
        check_value(v)?;
        if ell < 2 || ell > 1 << self.dim {
            return Err(Error::Index(format!(
                "family l = {ell} outside 2..={}",
                1usize << self.dim
            )));
        }
        if j > self.j_max {
            return Err(Error::Index(format!("scale j = {j} exceeds J = {}", self.j_max)));
        }
        if v == 0.0 {
            self.mother.remove(&(ell, j, m));
        } else {
            self.mother.insert((ell, j, m), v);
        }
        Ok(())
    }

    pub fn set(&mut self, idx: &CoeffIndex, v: f64) -> Result<()> {
        match idx {
            CoeffIndex::Father(m) => self.set_father(m.clone(), v),
            CoeffIndex::Mother { ell, j, m } => self.set_mother(*ell, *j, m.clone(), v),
        }
    }

    pub fn get(&self, idx: &CoeffIndex) -> f64 {
        match idx {
            CoeffIndex::Father(m) => self.father.get(m).copied().unwrap_or(0.0),
            CoeffIndex::Mother { ell, j, m } => self
                .mother
                .get(&(*ell, *j, m.clone()))
                .copied()
                .unwrap_or(0.0),
        }
    }

    pub fn father(&self) -> impl Iterator<Item = (&Vec<i64>, f64)> {
        self.father.iter().map(|(m, &v)| (m, v))
    }

    /// Mother entries as `(l, j, m, value)`, ordered by `(l, j, m)`.
    pub fn mother(&self) -> impl Iterator<Item = (usize, u32, &Vec<i64>, f64)> {
        self.mother.iter().map(|((l, j, m), &v)| (*l, *j, m, v))
    }

    /// All stored entries in a fixed order: fathers first, then mothers.
    pub fn entries(&self) -> Vec<(CoeffIndex, f64)> {
        let mut out: Vec<_> = self
            .father
            .iter()
            .map(|(m, &v)| (CoeffIndex::Father(m.clone()), v))
            .collect();
        out.extend(self.mother.iter().map(|((ell, j, m), &v)| {
            (
                CoeffIndex::Mother {
                    ell: *ell,
                    j: *j,
                    m: m.clone(),
                },
                v,
            )
        }));
        out
    }

    pub fn len(&self) -> usize {
        self.father.len() + self.mother.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scaled(&self, c: f64) -> CoeffSeq {
        let mut out = CoeffSeq::new(self.dim, self.j_max);
        for (idx, v) in self.entries() {
            out.set(&idx, c * v).expect("scaling keeps indices valid");
        }
        out
    }

    pub fn add(&self, other: &CoeffSeq) -> Result<CoeffSeq> {
        if self.dim != other.dim {
            return Err(Error::Index("dimension mismatch".into()));
        }
        let mut out = CoeffSeq::new(self.dim, self.j_max.max(other.j_max));
        for (idx, v) in self.entries().into_iter().chain(other.entries()) {
            let cur = out.get(&idx);
            out.set(&idx, cur + v)?;
        }
        Ok(out)
    }

    /// Largest absolute difference over the union of supports.
    pub fn max_abs_diff(&self, other: &CoeffSeq) -> f64 {
        self.entries()
            .iter()
            .chain(other.entries().iter())
            .map(|(idx, _)| (self.get(idx) - other.get(idx)).abs())
            .fold(0.0, f64::max)
    }
}

/// A single family `(lambda_{j,m})` indexed by scale and position in `R^d`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlatSeq {
    dim: usize,
    entries: BTreeMap<(u32, Vec<i64>), f64>,
}

impl FlatSeq {
    pub fn new(dim: usize) -> Self {
        FlatSeq {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&mut self, j: u32, m: Vec<i64>, v: f64) -> Result<()> {
        if m.len() != self.dim {
            return Err(Error::Index(format!(
                "lattice point has {} coordinates, expected {}",
                m.len(),
                self.dim
            )));
        }
        check_value(v)?;
        if v == 0.0 {
            self.entries.remove(&(j, m));
        } else {
            self.entries.insert((j, m), v);
        }
        Ok(())
    }

    pub fn get(&self, j: u32, m: &[i64]) -> f64 {
        self.entries.get(&(j, m.to_vec())).copied().unwrap_or(0.0)
    }

    /// Entries as `(j, m, value)`, ordered by `(j, m)`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &Vec<i64>, f64)> {
        self.entries.iter().map(|((j, m), &v)| (*j, m, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_j(&self) -> Option<u32> {
        self.entries.keys().map(|(j, _)| *j).max()
    }

    pub fn scaled(&self, c: f64) -> FlatSeq {
        let mut out = FlatSeq::new(self.dim);
        for (j, m, v) in self.iter() {
            out.set(j, m.clone(), c * v).expect("scaling keeps indices valid");
        }
        out
    }

    pub fn abs(&self) -> FlatSeq {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v = v.abs();
        }
        out
    }

    pub fn add(&self, other: &FlatSeq) -> FlatSeq {
        let mut out = self.clone();
        for (j, m, v) in other.iter() {
            let cur = out.get(j, m);
            out.set(j, m.clone(), cur + v).expect("same dimension");
        }
        out
    }

    pub fn cube(j: u32, m: &[i64]) -> DyadicCube {
        DyadicCube::new(j, m.to_vec())
    }
}

/// Non-negative simple function on finitely many pairwise disjoint boxes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimpleFunction {
    dim: usize,
    pieces: Vec<(DyadicBox, f64)>,
}

impl SimpleFunction {
    pub fn new(dim: usize) -> Self {
        SimpleFunction {
            dim,
            pieces: Vec::new(),
        }
    }

    /// Validates dimensions, signs and pairwise disjointness.
    pub fn from_pieces(dim: usize, pieces: Vec<(DyadicBox, f64)>) -> Result<Self> {
        for (i, (b, v)) in pieces.iter().enumerate() {
            if b.dim() != dim {
                return Err(Error::Index(format!("piece {i} has dimension {}", b.dim())));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::Domain(format!("piece {i} has value {v}, need finite >= 0")));
            }
            for (b2, _) in &pieces[..i] {
                if b.intersects(b2) {
                    return Err(Error::Domain(format!("pieces {b} and {b2} overlap")));
                }
            }
        }
        Ok(SimpleFunction { dim, pieces })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[(DyadicBox, f64)] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// `(value, mass)` pairs under the given weight.
    pub fn distribution(&self, w: &WeightAlpha) -> Vec<(f64, f64)> {
        self.pieces.iter().map(|(b, v)| (*v, w.mass(b))).collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .find(|(b, _)| {
                b.intervals
                    .iter()
                    .zip(x)
                    .all(|(iv, &xr)| iv.lo.to_f64() < xr && xr < iv.hi.to_f64())
            })
            .map_or(0.0, |(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::EBox;

    #[test]
    fn coeff_seq_validation() {
        let mut s = CoeffSeq::new(2, 3);
        assert!(s.set_mother(1, 0, vec![0, 0], 1.0).is_err());
        assert!(s.set_mother(5, 0, vec![0, 0], 1.0).is_err());
        assert!(s.set_mother(4, 4, vec![0, 0], 1.0).is_err());
        assert!(s.set_father(vec![0], 1.0).is_err());
        assert!(s.set_father(vec![0, 0], f64::NAN).is_err());
        s.set_mother(4, 3, vec![1, -1], 2.0).unwrap();
        s.set_father(vec![0, 0], -1.0).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.num_families(), 3);
        s.set_father(vec![0, 0], 0.0).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn simple_function_rejects_overlap() {
        let a = DyadicCube::new(0, vec![0, 0]).to_box();
        let b = DyadicCube::new(1, vec![0, 0]).to_box();
        assert!(SimpleFunction::from_pieces(2, vec![(a.clone(), 1.0), (b, 1.0)]).is_err());
        let e = EBox::new(DyadicCube::new(0, vec![0]), 1).unwrap().to_box();
        let e2 = EBox::new(DyadicCube::new(1, vec![0]), 1).unwrap().to_box();
        let f = SimpleFunction::from_pieces(2, vec![(e, 1.0), (e2, 2.0)]).unwrap();
        assert_eq!(f.eval(&[0.1, 0.3]), 1.0);
        assert_eq!(f.eval(&[0.1, 0.2]), 2.0);
        assert_eq!(f.eval(&[0.1, 0.6]), 0.0);
    }
}
