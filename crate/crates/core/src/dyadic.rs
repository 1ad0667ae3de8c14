//! Exact dyadic geometry and closed-form masses of the power weight `w_alpha`.
//!
//! Coordinates are dyadic rationals `num / 2^exp`, so containment and
//! disjointness of cubes and boxes are decided without rounding. Only the
//! weight integrals are evaluated in floating point.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// The dyadic rational `num / 2^exp`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: i128,
    exp: u32,
}

impl Dyadic {
    pub fn new(mut num: i128, mut exp: u32) -> Self {
        while exp > 0 && num % 2 == 0 {
            num /= 2;
            exp -= 1;
        }
        if num == 0 {
            exp = 0;
        }
        Dyadic { num, exp }
    }

    pub fn int(n: i64) -> Self {
        Dyadic { num: n as i128, exp: 0 }
    }

    pub fn numerator(self) -> i128 {
        self.num
    }

    pub fn exponent(self) -> u32 {
        self.exp
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 * (-(self.exp as f64)).exp2()
    }

    fn aligned(self, other: Dyadic) -> (i128, i128, u32) {
        let e = self.exp.max(other.exp);
        (self.num << (e - self.exp), other.num << (e - other.exp), e)
    }

    pub fn add(self, other: Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        Dyadic::new(a + b, e)
    }

    pub fn sub(self, other: Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        Dyadic::new(a - b, e)
    }

    pub fn mul_int(self, k: i64) -> Dyadic {
        Dyadic::new(self.num * k as i128, self.exp)
    }

    /// Multiplies by `2^-s`.
    pub fn shr(self, s: u32) -> Dyadic {
        Dyadic::new(self.num, self.exp + s)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(*other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

/// Open interval `(lo, hi)` with dyadic endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        Interval { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo < other.hi && other.lo < self.hi && !self.is_empty() && !other.is_empty()
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi.sub(self.lo).to_f64().max(0.0)
    }
}

/// Axis-aligned open box, a product of dyadic intervals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicBox {
    pub intervals: Vec<Interval>,
}

impl DyadicBox {
    pub fn new(intervals: Vec<Interval>) -> Self {
        DyadicBox { intervals }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.iter().any(Interval::is_empty)
    }

    pub fn intersects(&self, other: &DyadicBox) -> bool {
        self.dim() == other.dim()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| a.intersects(b))
    }

    pub fn contains_box(&self, other: &DyadicBox) -> bool {
        self.dim() == other.dim()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| a.contains(b))
    }

    /// Common part of two boxes of equal dimension (possibly empty).
    pub fn intersection(&self, other: &DyadicBox) -> DyadicBox {
        DyadicBox::new(
            self.intervals
                .iter()
                .zip(&other.intervals)
                .map(|(a, b)| Interval::new(a.lo.max(b.lo), a.hi.min(b.hi)))
                .collect(),
        )
    }

    /// Lebesgue measure.
    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(Interval::length).product()
    }

    /// Splits every side at its midpoint, giving `2^d` children.
    pub fn children(&self) -> Vec<DyadicBox> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                let iv = self
                    .intervals
                    .iter()
                    .enumerate()
                    .map(|(r, iv)| {
                        let mid = iv.lo.add(iv.hi).shr(1);
                        if mask >> r & 1 == 0 {
                            Interval::new(iv.lo, mid)
                        } else {
                            Interval::new(mid, iv.hi)
                        }
                    })
                    .collect();
                DyadicBox::new(iv)
            })
            .collect()
    }

    /// Dilation by the integer factor `b` about the box center.
    pub fn dilate(&self, b: i64) -> DyadicBox {
        let iv = self
            .intervals
            .iter()
            .map(|iv| {
                let c2 = iv.lo.add(iv.hi); // twice the center
                let w = iv.hi.sub(iv.lo).mul_int(b);
                Interval::new(c2.sub(w).shr(1), c2.add(w).shr(1))
            })
            .collect();
        DyadicBox::new(iv)
    }
}

impl fmt::Display for DyadicBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, iv) in self.intervals.iter().enumerate() {
            if r > 0 {
                write!(f, " x ")?;
            }
            write!(f, "({}, {})", iv.lo, iv.hi)?;
        }
        Ok(())
    }
}

/// `Q_{j,m} = 2^{-j} m + 2^{-j-1}(-1, 1)^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub j: u32,
    pub m: Vec<i64>,
}

impl DyadicCube {
    pub fn new(j: u32, m: Vec<i64>) -> Self {
        DyadicCube { j, m }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn side(&self) -> f64 {
        (-(self.j as f64)).exp2()
    }

    pub fn to_box(&self) -> DyadicBox {
        let e = self.j + 1;
        DyadicBox::new(
            self.m
                .iter()
                .map(|&mr| {
                    Interval::new(
                        Dyadic::new(2 * mr as i128 - 1, e),
                        Dyadic::new(2 * mr as i128 + 1, e),
                    )
                })
                .collect(),
        )
    }

    /// Half-open membership `[2^{-j}m - 2^{-j-1}, 2^{-j}m + 2^{-j-1})`.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        let h = self.side();
        x.len() == self.dim()
            && self.m.iter().zip(x).all(|(&mr, &xr)| {
                let c = mr as f64 * h;
                xr >= c - 0.5 * h && xr < c + 0.5 * h
            })
    }
}

/// `E_{j,m} = Q^{(n-k)}_{j,m} x (2^{-j-2}, 2^{-j-1})^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EBox {
    pub base: DyadicCube,
    pub k: usize,
}

impl EBox {
    pub fn new(base: DyadicCube, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("E-box codimension must be at least 1".into()));
        }
        Ok(EBox { base, k })
    }

    pub fn j(&self) -> u32 {
        self.base.j
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.base.dim() + self.k
    }

    pub fn to_box(&self) -> DyadicBox {
        let j = self.base.j;
        let mut b = self.base.to_box();
        let normal = Interval::new(Dyadic::new(1, j + 2), Dyadic::new(1, j + 1));
        b.intervals.extend(std::iter::repeat(normal).take(self.k));
        b
    }

    /// The cube `Q^{(n)}_{j,(m,0)}` that contains this box.
    pub fn host_cube(&self) -> DyadicCube {
        let mut m = self.base.m.clone();
        m.extend(std::iter::repeat(0).take(self.k));
        DyadicCube::new(self.base.j, m)
    }
}

/// `w_alpha(x) = |x_axis|^alpha` for `|x_axis| <= 1`, and `1` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightAlpha {
    pub alpha: f64,
    /// Distinguished coordinate; `None` means the last one.
    pub axis: Option<usize>,
}

impl WeightAlpha {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(Error::NotMuckenhoupt(alpha));
        }
        Ok(WeightAlpha { alpha, axis: None })
    }

    pub fn unweighted() -> Self {
        WeightAlpha { alpha: 0.0, axis: None }
    }

    /// `|x_axis|^beta` for any real `beta`. For `beta <= -1` the weight is
    /// not locally integrable; masses stay finite only on sets bounded away
    /// from the hyperplane (such as the E-boxes).
    pub fn off_hyperplane(beta: f64) -> Self {
        WeightAlpha { alpha: beta, axis: None }
    }

    pub fn with_axis(mut self, axis: usize) -> Self {
        self.axis = Some(axis);
        self
    }

    pub fn axis_for(&self, dim: usize) -> usize {
        self.axis.unwrap_or(dim.saturating_sub(1))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let t = x[self.axis_for(x.len())].abs();
        if t <= 1.0 {
            t.powf(self.alpha)
        } else {
            1.0
        }
    }

    /// `int_a^b w(t) dt` along the distinguished axis.
    pub fn integral_1d(&self, a: f64, b: f64) -> f64 {
        weight_integral_1d(self.alpha, a, b)
    }

    /// `int_B w(z) dz`: Lebesgue along the other axes.
    pub fn mass(&self, b: &DyadicBox) -> f64 {
        let axis = self.axis_for(b.dim());
        b.intervals
            .iter()
            .enumerate()
            .map(|(r, iv)| {
                if r == axis {
                    self.integral_1d(iv.lo.to_f64(), iv.hi.to_f64())
                } else {
                    iv.length()
                }
            })
            .product()
    }
}

/// `int_lo^hi t^beta dt` for `0 <= lo < hi`.
pub fn power_integral(beta: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let c = beta + 1.0;
    if c == 0.0 {
        return (hi / lo).ln();
    }
    (hi.powf(c) - lo.powf(c)) / c
}

fn weight_integral_1d(alpha: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut total = 0.0;
    if a < -1.0 {
        total += b.min(-1.0) - a;
    }
    let (lo, hi) = (a.max(-1.0), b.min(0.0));
    if lo < hi {
        total += power_integral(alpha, -hi, -lo);
    }
    let (lo, hi) = (a.max(0.0), b.min(1.0));
    if lo < hi {
        total += power_integral(alpha, lo, hi);
    }
    if b > 1.0 {
        total += b - a.max(1.0);
    }
    total
}

/// Muckenhoupt data of `w_alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuckenhouptRange {
    pub alpha: f64,
    /// `r_0(w_alpha) = max(alpha + 1, 1)`.
    pub r0: f64,
    pub in_a1: bool,
}

impl MuckenhouptRange {
    /// `w_alpha` is in `A_p` iff `-1 < alpha < p - 1`.
    pub fn in_ap(&self, p: f64) -> bool {
        p > 1.0 && self.alpha < p - 1.0
    }
}

pub fn muckenhoupt_range(alpha: f64) -> Result<MuckenhouptRange> {
    WeightAlpha::new(alpha)?;
    Ok(MuckenhouptRange {
        alpha,
        r0: (alpha + 1.0).max(1.0),
        in_a1: alpha <= 0.0,
    })
}

pub fn weight_mass_cube(w: &WeightAlpha, q: &DyadicCube) -> f64 {
    w.mass(&q.to_box())
}

/// `int_{2^{-j-2}}^{2^{-j-1}} t^beta dt` in closed form; any real `beta`.
pub fn e_axis_integral(beta: f64, j: u32) -> f64 {
    let c = beta + 1.0;
    if c == 0.0 {
        return std::f64::consts::LN_2;
    }
    let ln2 = std::f64::consts::LN_2;
    // 2^{-(j+1)c} (1 - 2^{-c}) / c
    (-(j as f64 + 1.0) * c).exp2() * -(-c * ln2).exp_m1() / c
}

/// Closed-form mass of `E_{j,m}` in `R^n` (codimension `k`) under the weight
/// `|x_n|^beta`; the normal coordinates stay inside `(0, 1)`.
pub fn e_box_mass(beta: f64, j: u32, n: usize, k: usize) -> f64 {
    let tangential = (-(j as f64) * (n - k) as f64).exp2();
    let other_normal = (-(j as f64 + 2.0) * (k as f64 - 1.0)).exp2();
    tangential * other_normal * e_axis_integral(beta, j)
}

pub fn weight_mass_e(w: &WeightAlpha, e: &EBox) -> Result<f64> {
    if !(w.alpha > -1.0) {
        return Err(Error::NotMuckenhoupt(w.alpha));
    }
    let n = e.dim();
    let axis = w.axis_for(n);
    if axis < n - e.k || axis >= n {
        return Err(Error::Domain(format!(
            "weight axis {axis} is not a normal coordinate of the E-box (n = {n}, k = {})",
            e.k
        )));
    }
    Ok(e_box_mass(w.alpha, e.j(), n, e.k))
}
