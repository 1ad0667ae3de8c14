//! K-curves on logarithmic grids and the real interpolation quasi-norm
//! `(int_0^inf [t^{-theta} K(t)]^r dt/t)^{1/r}`.

use super::kfunc::{k_functional_with, minimize_1d, KOptions};
use super::lattice::LatticeCouple;
use crate::error::{Error, Result};
use crate::norms::check_exponent;

/// Relative tolerance for recognising a saturated K value.
const SATURATION: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveOptions {
    pub points_per_octave: u32,
    /// Cap on the distance (in octaves) from the crossover `N1 / N2`.
    pub max_octaves: u32,
    /// The neglected tails must stay below this fraction of the integral.
    pub tail_tol: f64,
    pub k: KOptions,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            points_per_octave: 33,
            max_octaves: 60,
            tail_tol: 1e-7,
            k: KOptions::default(),
        }
    }
}

/// Sampled `t |-> K(t, lambda)`, with the sum-norm bounds
/// `K <= N1 = ||lambda|A_1||` and `K <= t N2 = t ||lambda|A_2||`.
#[derive(Clone, Debug, PartialEq)]
pub struct KCurve {
    pub t: Vec<f64>,
    pub k: Vec<f64>,
    pub n1: f64,
    pub n2: f64,
    /// Largest optimality gap over the samples.
    pub gap: f64,
}

impl KCurve {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn high_saturated(&self, i: usize) -> bool {
        self.k[i] >= self.n1 * (1.0 - SATURATION)
    }

    fn low_saturated(&self, i: usize) -> bool {
        self.k[i] >= self.t[i] * self.n2 * (1.0 - SATURATION)
    }

    /// `K(t) = N1` from the last sample on (exact, by monotonicity).
    pub fn saturated_above(&self) -> bool {
        !self.is_empty() && self.high_saturated(self.len() - 1)
    }

    /// `K(t) = t N2` up to the first sample (exact, since `K(t)/t` does not
    /// increase).
    pub fn saturated_below(&self) -> bool {
        !self.is_empty() && self.low_saturated(0)
    }

    /// Largest relative violation of: `K` nondecreasing, `K(t)/t`
    /// nonincreasing, `K <= min(N1, t N2)`.
    pub fn shape_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            let k = self.k[i];
            let bound = self.n1.min(self.t[i] * self.n2);
            worst = worst.max((k - bound) / bound);
            if i + 1 < self.len() {
                let (k1, t0, t1) = (self.k[i + 1], self.t[i], self.t[i + 1]);
                worst = worst.max((k - k1) / k);
                worst = worst.max((k1 / t1 - k / t0) / (k / t0));
            }
        }
        worst
    }

    /// Two-column `t K` text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (t, k) in self.t.iter().zip(&self.k) {
            s.push_str(&format!("{t:e} {k:e}\n"));
        }
        s
    }
}

/// Grid index to `t = 2^{i / ppo}`.
fn grid_t(i: i64, ppo: u32) -> f64 {
    (i as f64 / ppo as f64).exp2()
}

struct Walker<'a> {
    lam: &'a [f64],
    couple: &'a LatticeCouple,
    opts: &'a CurveOptions,
    n1: f64,
    n2: f64,
}

struct Sample {
    t: f64,
    k: f64,
    theta: Vec<f64>,
    gap: f64,
}

impl Walker<'_> {
    fn eval(&self, t: f64, warm: Option<&[f64]>) -> Result<Sample> {
        let r = k_functional_with(t, self.lam, self.couple, &self.opts.k, warm)?;
        // the sum-norm bounds are attained by the pure splits
        let k = r.value.min(self.n1).min(t * self.n2);
        Ok(Sample {
            t,
            k,
            theta: r.theta,
            gap: r.gap,
        })
    }

    /// Samples from grid index `i0` in steps of `step` until `stop` holds or
    /// the octave cap is reached.
    fn walk(
        &self,
        i0: i64,
        step: i64,
        start: Option<&[f64]>,
        stop: &mut dyn FnMut(&Sample) -> bool,
    ) -> Result<Vec<Sample>> {
        let ppo = self.opts.points_per_octave;
        let cap = self.opts.max_octaves as i64 * ppo as i64;
        let mut out: Vec<Sample> = Vec::new();
        let mut i = i0;
        loop {
            let warm = out.last().map(|s| s.theta.as_slice()).or(start);
            let s = self.eval(grid_t(i, ppo), warm)?;
            let done = stop(&s) || (i - i0).abs() >= cap;
            out.push(s);
            if done {
                return Ok(out);
            }
            i += step;
        }
    }
}

fn prepare<'a>(lam: &'a [f64], couple: &'a LatticeCouple, opts: &'a CurveOptions) -> Result<Walker<'a>> {
    if opts.points_per_octave == 0 {
        return Err(Error::Domain("points_per_octave must be positive".into()));
    }
    if lam.len() != couple.len() {
        return Err(Error::Index(format!(
            "sequence of length {} for a couple on {} coordinates",
            lam.len(),
            couple.len()
        )));
    }
    let a: Vec<f64> = lam.iter().map(|v| v.abs()).collect();
    let n1 = couple.n1.norm(&a);
    let n2 = couple.n2.norm(&a);
    Ok(Walker {
        lam,
        couple,
        opts,
        n1,
        n2,
    })
}

fn center_index(n1: f64, n2: f64, ppo: u32) -> i64 {
    ((n1 / n2).log2() * ppo as f64).round() as i64
}

fn assemble(n1: f64, n2: f64, mut below: Vec<Sample>, above: Vec<Sample>) -> KCurve {
    below.reverse();
    below.extend(above);
    let gap = below.iter().map(|s| s.gap).fold(0.0, f64::max);
    KCurve {
        t: below.iter().map(|s| s.t).collect(),
        k: below.iter().map(|s| s.k).collect(),
        n1,
        n2,
        gap,
    }
}

/// K-curve from the crossover `N1/N2` outwards until both saturations (or
/// the octave cap) are reached.
pub fn k_curve(lam: &[f64], couple: &LatticeCouple, opts: &CurveOptions) -> Result<KCurve> {
    let w = prepare(lam, couple, opts)?;
    if w.n1 == 0.0 {
        return Ok(KCurve {
            t: Vec::new(),
            k: Vec::new(),
            n1: 0.0,
            n2: 0.0,
            gap: 0.0,
        });
    }
    let ic = center_index(w.n1, w.n2, opts.points_per_octave);
    let above = w.walk(ic, 1, None, &mut |s| s.k >= w.n1 * (1.0 - SATURATION))?;
    let warm = above[0].theta.clone();
    let below = w.walk(ic - 1, -1, Some(&warm), &mut |s| s.k >= s.t * w.n2 * (1.0 - SATURATION))?;
    Ok(assemble(w.n1, w.n2, below, above))
}

/// Result of [`theta_r_norm_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaRNorm {
    pub value: f64,
    pub curve: KCurve,
    /// Estimated relative error from quadrature and unresolved tails.
    pub error: f64,
    /// Largest optimizer gap along the curve.
    pub gap: f64,
}

/// `||lambda | (A_1, A_2)_{theta, r}||`.
pub fn theta_r_norm(lam: &[f64], couple: &LatticeCouple, theta: f64, r: f64) -> Result<f64> {
    Ok(theta_r_norm_with(lam, couple, theta, r, &CurveOptions::default())?.value)
}

pub fn theta_r_norm_with(
    lam: &[f64],
    couple: &LatticeCouple,
    theta: f64,
    r: f64,
    opts: &CurveOptions,
) -> Result<ThetaRNorm> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta = {theta} must lie in (0, 1)")));
    }
    check_exponent("r", r)?;
    let w = prepare(lam, couple, opts)?;
    if w.n1 == 0.0 || w.n2 == 0.0 {
        return Ok(ThetaRNorm {
            value: 0.0,
            curve: assemble(w.n1, w.n2, Vec::new(), Vec::new()),
            error: 0.0,
            gap: 0.0,
        });
    }
    let (n1, n2) = (w.n1, w.n2);
    let ppo = opts.points_per_octave;
    let ic = center_index(n1, n2, ppo);
    let infinite = r == f64::INFINITY;
    let integrand = |t: f64, k: f64| {
        if infinite {
            t.powf(-theta) * k
        } else {
            (t.powf(-theta) * k).powf(r)
        }
    };
    // running mass, so that the walk can stop once the tail bound is small
    let h = std::f64::consts::LN_2 / ppo as f64;
    let mut acc = 0.0;
    let tol = opts.tail_tol;
    let mut up_stop = |s: &Sample| {
        let g = integrand(s.t, s.k);
        acc = if infinite { f64::max(acc, g) } else { acc + g * h };
        let tail = if infinite {
            n1 * s.t.powf(-theta)
        } else {
            n1.powf(r) * s.t.powf(-theta * r) / (theta * r)
        };
        s.k >= n1 * (1.0 - SATURATION) || tail <= tol * acc
    };
    let above = w.walk(ic, 1, None, &mut up_stop)?;
    let mut acc_low = above.iter().map(|s| integrand(s.t, s.k)).fold(0.0, |a, g| {
        if infinite {
            f64::max(a, g)
        } else {
            a + g * h
        }
    });
    let mut down_stop = |s: &Sample| {
        let g = integrand(s.t, s.k);
        acc_low = if infinite { f64::max(acc_low, g) } else { acc_low + g * h };
        let tail = if infinite {
            n2 * s.t.powf(1.0 - theta)
        } else {
            n2.powf(r) * s.t.powf((1.0 - theta) * r) / ((1.0 - theta) * r)
        };
        s.k >= s.t * n2 * (1.0 - SATURATION) || tail <= tol * acc_low
    };
    let warm_center = above[0].theta.clone();
    let below = w.walk(ic - 1, -1, Some(&warm_center), &mut down_stop)?;
    let curve = assemble(n1, n2, below, above);
    let (value, error) = if infinite {
        sup_norm(&w, &curve, theta, &warm_center)?
    } else {
        integral_norm(&curve, theta, r)
    };
    Ok(ThetaRNorm {
        value,
        gap: curve.gap,
        curve,
        error,
    })
}

/// `int [t^{-theta} K]^r dt/t` on one grid segment. Segments that go from
/// `K = t N2` to `K = N1` use `min(t N2, N1)`, which is exact when the
/// curve has a single corner there; all others interpolate the integrand
/// as a power of `t`.
fn segment(c: &KCurve, i: usize, j: usize, theta: f64, r: f64) -> f64 {
    let (t0, t1) = (c.t[i], c.t[j]);
    if c.low_saturated(i) && c.high_saturated(j) {
        let ts = (c.n1 / c.n2).clamp(t0, t1);
        let a = (1.0 - theta) * r;
        let b = theta * r;
        return c.n2.powf(r) * (ts.powf(a) - t0.powf(a)) / a + c.n1.powf(r) * (ts.powf(-b) - t1.powf(-b)) / b;
    }
    let g0 = (t0.powf(-theta) * c.k[i]).powf(r);
    let g1 = (t1.powf(-theta) * c.k[j]).powf(r);
    let h = (t1 / t0).ln();
    if g0 <= 0.0 || g1 <= 0.0 {
        return 0.5 * h * (g0 + g1);
    }
    let l = (g1 / g0).ln();
    if l.abs() < 1e-12 {
        h * 0.5 * (g0 + g1)
    } else {
        h * (g1 - g0) / l
    }
}

fn quadrature(c: &KCurve, theta: f64, r: f64, stride: usize) -> f64 {
    let mut idx: Vec<usize> = (0..c.len()).step_by(stride).collect();
    if *idx.last().unwrap() != c.len() - 1 {
        idx.push(c.len() - 1);
    }
    idx.windows(2).map(|w| segment(c, w[0], w[1], theta, r)).sum()
}

/// Returns the norm and its estimated relative error.
fn integral_norm(c: &KCurve, theta: f64, r: f64) -> (f64, f64) {
    let n = c.len();
    let body = quadrature(c, theta, r, 1);
    let coarse = if n > 2 { quadrature(c, theta, r, 2) } else { body };
    // tails: K in [K(T), N1] above, K/t in [K(t0)/t0, N2] below
    let (t_hi, k_hi) = (c.t[n - 1], c.k[n - 1]);
    let up = t_hi.powf(-theta * r) / (theta * r);
    let (up_lo, up_hi) = (k_hi.powf(r) * up, c.n1.powf(r) * up);
    let (t_lo, k_lo) = (c.t[0], c.k[0]);
    let dn = t_lo.powf((1.0 - theta) * r) / ((1.0 - theta) * r);
    let (dn_lo, dn_hi) = ((k_lo / t_lo).powf(r) * dn, c.n2.powf(r) * dn);
    let total = body + 0.5 * (up_lo + up_hi) + 0.5 * (dn_lo + dn_hi);
    let err_abs = (body - coarse).abs() / 3.0 + 0.5 * (up_hi - up_lo) + 0.5 * (dn_hi - dn_lo);
    // relative error of the r-th root
    (total.powf(1.0 / r), err_abs / total / r)
}

fn sup_norm(w: &Walker<'_>, c: &KCurve, theta: f64, warm: &[f64]) -> Result<(f64, f64)> {
    let g: Vec<f64> = c.t.iter().zip(&c.k).map(|(t, k)| t.powf(-theta) * k).collect();
    let mut best = 0;
    for i in 1..g.len() {
        if g[i] > g[best] {
            best = i;
        }
    }
    let mut value = g[best];
    // a corner between saturated neighbours is known exactly
    for i in 0..c.len().saturating_sub(1) {
        if c.low_saturated(i) && c.high_saturated(i + 1) {
            value = value.max(c.n1.powf(1.0 - theta) * c.n2.powf(theta));
        }
    }
    if best > 0 && best + 1 < c.len() {
        let (lo, hi) = (c.t[best - 1].ln(), c.t[best + 1].ln());
        let f = |u: f64| -> f64 {
            let t = u.exp();
            match w.eval(t, Some(warm)) {
                Ok(s) => -(t.powf(-theta) * s.k),
                Err(_) => 0.0,
            }
        };
        let (_, fu) = minimize_1d(&f, lo, hi, c.t[best].ln(), 1e-6);
        value = value.max(-fu);
    }
    let n = c.len();
    let tail_up = if c.saturated_above() { 0.0 } else { c.n1 * c.t[n - 1].powf(-theta) };
    let tail_dn = if c.saturated_below() { 0.0 } else { c.n2 * c.t[0].powf(1.0 - theta) };
    let err = (tail_up.max(tail_dn) - value).max(0.0) / value;
    Ok((value, err))
}
