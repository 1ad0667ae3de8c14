//! The retraction pair: `R` maps a sequence to cube-supported functions,
//! `P_A` averages such functions back to a sequence.

use std::collections::BTreeMap;

use crate::dyadic::{muckenhoupt_range, DyadicBox, DyadicCube, WeightAlpha};
use crate::error::{Error, Result};
use crate::norms::{box_distribution, check_exponent, check_p, lorentz_of_distribution, lp_of_distribution};
use crate::seq::FlatSeq;

/// A finite family `(g_{j,m})` of signed piecewise constant functions on
/// `R^d`, each given by disjoint boxes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorFunction {
    pub dim: usize,
    pub components: BTreeMap<(u32, Vec<i64>), Vec<(DyadicBox, f64)>>,
}

impl VectorFunction {
    pub fn new(dim: usize) -> Self {
        VectorFunction {
            dim,
            components: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.components.values().all(|c| c.iter().all(|(_, v)| *v == 0.0))
    }

    fn pieces(&self) -> Vec<(DyadicBox, f64)> {
        self.components
            .values()
            .flat_map(|c| c.iter().cloned())
            .filter(|(_, v)| *v != 0.0)
            .collect()
    }

    /// `|| (sum |g_{j,m}|^q)^{1/q} | L_p(w) ||`.
    pub fn lp_lq_norm(&self, p: f64, q: f64, w: &WeightAlpha) -> Result<f64> {
        check_p(p)?;
        lp_of_distribution(&box_distribution(&self.pieces(), q, w)?, p)
    }

    /// `|| (sum |g_{j,m}|^q)^{1/q} | L_{p,r}(w) ||`.
    pub fn lpr_lq_norm(&self, p: f64, r: f64, q: f64, w: &WeightAlpha) -> Result<f64> {
        check_p(p)?;
        lorentz_of_distribution(&box_distribution(&self.pieces(), q, w)?, p, r)
    }
}

/// `R(lambda) = (lambda_{j,m} chi_{j,m})`.
#[allow(non_snake_case)]
pub fn op_R(lam: &FlatSeq) -> VectorFunction {
    let mut out = VectorFunction::new(lam.dim());
    for (j, m, v) in lam.iter() {
        let b = DyadicCube::new(j, m.clone()).to_box();
        out.components.insert((j, m.clone()), vec![(b, v)]);
    }
    out
}

/// Exponents the averaging operator has to respect:
/// `A < min(p1 / r0(w_alpha), p2 / r0(w_alpha), q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetractBounds {
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub alpha: f64,
}

impl RetractBounds {
    pub fn check(&self, a: f64) -> Result<()> {
        check_exponent("A", a)?;
        let r0 = muckenhoupt_range(self.alpha)?.r0;
        let named = [
            ("p1 / r0(w_alpha)", self.p1 / r0),
            ("p2 / r0(w_alpha)", self.p2 / r0),
            ("q", self.q),
        ];
        for (name, bound) in named {
            if !(a < bound) {
                return Err(Error::Domain(format!("A = {a} violates A < {name} = {bound}")));
            }
        }
        Ok(())
    }
}

/// `P_A(g)_{j,m} = ( |Q_{j,m}|^{-1} int_{Q_{j,m}} |g_{j,m}|^A )^{1/A}`.
#[allow(non_snake_case)]
pub fn op_P_A(g: &VectorFunction, a: f64, bounds: &RetractBounds) -> Result<FlatSeq> {
    bounds.check(a)?;
    let mut out = FlatSeq::new(g.dim);
    for ((j, m), pieces) in &g.components {
        let q = DyadicCube::new(*j, m.clone()).to_box();
        let mut integral = 0.0;
        for (b, v) in pieces {
            if b.dim() != g.dim {
                return Err(Error::Index(format!("piece {b} in dimension {}", g.dim)));
            }
            let cut = q.intersection(b);
            if !cut.is_empty() {
                integral += v.abs().powf(a) * cut.volume();
            }
        }
        let mean = (integral / q.volume()).powf(1.0 / a);
        out.set(*j, m.clone(), mean)?;
    }
    Ok(out)
}
