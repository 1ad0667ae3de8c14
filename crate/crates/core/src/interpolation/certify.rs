//! Envelope certification of the interpolation identities on random
//! instances. The equivalences hold up to unspecified constants, so what is
//! checked is that the spread of `lhs / rhs` does not grow with the finest
//! scale `J`.

use super::lattice::LatticeCouple;
use super::theta::{theta_r_norm_with, CurveOptions};
use crate::dyadic::WeightAlpha;
use crate::error::{Error, Result};
use crate::norms::{besov_seq_norm, check_exponent, fqLpr_norm, lambda_s_lorentz_codim, lambda_s_lorentz_direct};
use crate::par::par_map;
use crate::params::SpaceParams;
use crate::seq::{CoeffSeq, FlatSeq};

/// Allowed growth of the envelope width from the coarsest to the finest `J`.
pub const STABILITY_FACTOR: f64 = 1.5;

/// Largest relative disagreement tolerated between the two evaluations of
/// the Lambda^s Lorentz norm.
pub const ORACLE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Instance<T> {
    pub seed: u64,
    pub j_max: u32,
    pub seq: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertRow {
    pub seed: u64,
    pub j_max: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub gap: f64,
}

/// Ratio statistics of all rows with one `J`; `width = max / min`.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub j_max: u32,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertReport {
    pub rows: Vec<CertRow>,
    pub envelopes: Vec<Envelope>,
    pub stable: bool,
}

impl CertReport {
    pub fn from_rows(rows: Vec<CertRow>) -> Self {
        let envelopes = envelopes(&rows);
        let stable = match (envelopes.first(), envelopes.last()) {
            (Some(a), Some(b)) => b.width <= STABILITY_FACTOR * a.width,
            _ => true,
        };
        CertReport { rows, envelopes, stable }
    }

    pub fn max_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.gap).fold(0.0, f64::max)
    }
}

pub fn envelopes(rows: &[CertRow]) -> Vec<Envelope> {
    let mut js: Vec<u32> = rows.iter().map(|r| r.j_max).collect();
    js.sort_unstable();
    js.dedup();
    js.into_iter()
        .map(|j| {
            let mut v: Vec<f64> = rows.iter().filter(|r| r.j_max == j).map(|r| r.ratio).collect();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
            Envelope {
                j_max: j,
                count: n,
                min: v[0],
                max: v[n - 1],
                median,
                width: v[n - 1] / v[0],
            }
        })
        .collect()
}

/// `1/p = (1 - theta)/p1 + theta/p2`.
pub fn interpolated_p(p1: f64, p2: f64, theta: f64) -> f64 {
    1.0 / ((1.0 - theta) / p1 + theta / p2)
}

fn check_couple_exponents(p1: f64, p2: f64, theta: f64, r: f64) -> Result<()> {
    check_exponent("p1", p1)?;
    check_exponent("p2", p2)?;
    check_exponent("r", r)?;
    if !(p1 < p2) || !p2.is_finite() {
        return Err(Error::Domain(format!("need 0 < p1 < p2 < inf, got p1 = {p1}, p2 = {p2}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta = {theta} must lie in (0, 1)")));
    }
    Ok(())
}

/// `(f_{p1,q}(w_alpha), f_{p2,q}(w_alpha))_{theta,r}` against
/// `f_q L_{p,r}(w_alpha)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeqInterpolation {
    pub p1: f64,
    pub p2: f64,
    pub theta: f64,
    pub r: f64,
    pub q: f64,
    pub alpha: f64,
}

impl SeqInterpolation {
    pub fn p(&self) -> f64 {
        interpolated_p(self.p1, self.p2, self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        check_couple_exponents(self.p1, self.p2, self.theta, self.r)?;
        check_exponent("q", self.q)?;
        WeightAlpha::new(self.alpha)?;
        Ok(())
    }

    /// `(lhs, rhs, gap)` for one sequence.
    pub fn evaluate(&self, lam: &FlatSeq, opts: &CurveOptions) -> Result<(f64, f64, f64)> {
        self.validate()?;
        let w = WeightAlpha::new(self.alpha)?;
        let (couple, a) = LatticeCouple::f_couple(lam, self.p1, self.p2, self.q, &w)?;
        let lhs = theta_r_norm_with(&a, &couple, self.theta, self.r, opts)?;
        let rhs = fqLpr_norm(lam, self.p(), self.r, self.q, &w)?;
        Ok((lhs.value, rhs, lhs.gap))
    }
}

fn row(seed: u64, j_max: u32, lhs: f64, rhs: f64, gap: f64) -> CertRow {
    CertRow {
        seed,
        j_max,
        lhs,
        rhs,
        ratio: lhs / rhs,
        gap,
    }
}

pub fn certify_seq_interpolation(
    cfg: &SeqInterpolation,
    instances: &[Instance<FlatSeq>],
    opts: &CurveOptions,
) -> Result<CertReport> {
    cfg.validate()?;
    let rows = par_map(instances, |inst| {
        let (lhs, rhs, gap) = cfg.evaluate(&inst.seq, opts)?;
        Ok(row(inst.seed, inst.j_max, lhs, rhs, gap))
    })?;
    Ok(CertReport::from_rows(rows))
}

/// Where the Lambda^s function lives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BesovForm {
    /// Boundary of codimension `k` in `R^n`, weight `w_alpha`, `alpha > -1`;
    /// both endpoints must be trace admissible.
    Trace { alpha: f64, n: usize, k: usize },
    /// `R^{d+1}` with weight `w_{alpha - 1}`, any real `alpha`.
    Boundary { alpha: f64 },
}

impl BesovForm {
    /// Exponent of `|x_n|` near the boundary.
    pub fn beta(&self) -> f64 {
        match *self {
            BesovForm::Trace { alpha, .. } => alpha,
            BesovForm::Boundary { alpha } => alpha - 1.0,
        }
    }

    pub fn codim(&self) -> usize {
        match *self {
            BesovForm::Trace { k, .. } => k,
            BesovForm::Boundary { .. } => 1,
        }
    }
}

/// `(b^{s_1}_{p1,p1}, b^{s_2}_{p2,p2})_{theta,r}` with
/// `s_i = s - (beta + k)/p_i` against `|| Lambda^s | L_{p,r} ||`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovInterpolation {
    pub s: f64,
    pub p1: f64,
    pub p2: f64,
    pub theta: f64,
    pub r: f64,
    pub form: BesovForm,
}

impl BesovInterpolation {
    pub fn p(&self) -> f64 {
        interpolated_p(self.p1, self.p2, self.theta)
    }

    /// Smoothness of the endpoint with integrability `p`.
    pub fn endpoint_smoothness(&self, p: f64) -> f64 {
        self.s - (self.form.beta() + self.form.codim() as f64) / p
    }

    pub fn validate(&self) -> Result<()> {
        check_couple_exponents(self.p1, self.p2, self.theta, self.r)?;
        if let BesovForm::Trace { alpha, n, k } = self.form {
            for p in [self.p1, self.p2] {
                SpaceParams::new(self.s, p, p, alpha, n, k).check_trace_admissible()?;
            }
        }
        Ok(())
    }

    fn check_dim(&self, lam: &CoeffSeq) -> Result<()> {
        if let BesovForm::Trace { n, k, .. } = self.form {
            if lam.dim() + k != n {
                return Err(Error::Index(format!(
                    "sequence on R^{} for a boundary of R^{n} of codimension {k}",
                    lam.dim()
                )));
            }
        }
        Ok(())
    }

    /// `(lhs, fast rhs, direct rhs, gap)` for one sequence.
    pub fn evaluate(&self, lam: &CoeffSeq, opts: &CurveOptions) -> Result<(f64, f64, f64, f64)> {
        self.validate()?;
        self.check_dim(lam)?;
        let e1 = (self.endpoint_smoothness(self.p1), self.p1, self.p1);
        let e2 = (self.endpoint_smoothness(self.p2), self.p2, self.p2);
        let (couple, a) = LatticeCouple::besov_couple(lam, e1, e2)?;
        let lhs = theta_r_norm_with(&a, &couple, self.theta, self.r, opts)?;
        let (beta, k) = (self.form.beta(), self.form.codim());
        let fast = lambda_s_lorentz_codim(lam, self.s, self.p(), self.r, beta, k)?;
        let direct = lambda_s_lorentz_direct(lam, self.s, self.p(), self.r, beta, k)?;
        Ok((lhs.value, fast, direct, lhs.gap))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BesovReport {
    pub main: CertReport,
    /// Largest relative difference between the level-wise and the
    /// box-integrated Lambda^s norms.
    pub oracle_max_rel_diff: f64,
    /// For `r = p`: the interpolation norm against the Besov norm
    /// `b^{s - (beta + k)/p}_{p,p}`.
    pub diagonal: Option<CertReport>,
}

impl BesovReport {
    pub fn oracle_ok(&self) -> bool {
        self.oracle_max_rel_diff <= ORACLE_TOL
    }
}

pub fn certify_besov_interpolation(
    cfg: &BesovInterpolation,
    instances: &[Instance<CoeffSeq>],
    opts: &CurveOptions,
) -> Result<BesovReport> {
    cfg.validate()?;
    let p = cfg.p();
    let diagonal = (cfg.r - p).abs() <= 1e-12 * p;
    let evals = par_map(instances, |inst| cfg.evaluate(&inst.seq, opts))?;
    let mut rows = Vec::with_capacity(instances.len());
    let mut diag_rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (inst, (lhs, fast, direct, gap)) in instances.iter().zip(evals) {
        let scale = fast.abs().max(direct.abs());
        if scale > 0.0 {
            worst = worst.max((fast - direct).abs() / scale);
        }
        rows.push(row(inst.seed, inst.j_max, lhs, fast, gap));
        if diagonal {
            let b = besov_seq_norm(&inst.seq, cfg.endpoint_smoothness(p), p, p)?;
            diag_rows.push(row(inst.seed, inst.j_max, lhs, b, gap));
        }
    }
    Ok(BesovReport {
        main: CertReport::from_rows(rows),
        oracle_max_rel_diff: worst,
        diagonal: diagonal.then(|| CertReport::from_rows(diag_rows)),
    })
}

/// `I(lambda)`: mother coefficients times `2^{j ds}`. It maps
/// `b^{s - c}_{p,q}` isometrically onto `b^{s + ds - c}_{p,q}`'s preimage
/// under the same shift, and `Lambda^{s}(lambda) = Lambda^{s - ds}(I lambda)`.
pub fn shift_smoothness(lam: &CoeffSeq, ds: f64) -> CoeffSeq {
    let mut out = CoeffSeq::new(lam.dim(), lam.j_max());
    for (m, v) in lam.father() {
        out.set_father(m.clone(), v).expect("valid father");
    }
    for (ell, j, m, v) in lam.mother() {
        out.set_mother(ell, j, m.clone(), (j as f64 * ds).exp2() * v)
            .expect("valid mother");
    }
    out
}
