//! Trace on the hyperplane `R^{n-k} x {0}` and the wavelet extension operator
//!
//! `Ext f(x, y) = sum_m lambda_m psi_m(x) chi(y)
//!              + sum_{l,j,m} lambda^{j,l}_m prod_r psi_{G_r}(2^j x_r - m_r) chi(2^j y)`,
//!
//! at coefficient level (atomic decompositions and their norms) and on
//! sampled grids.

use crate::dyadic::{Dyadic, DyadicCube, WeightAlpha};
use crate::error::{Error, Result};
use crate::norms::{besov_seq_norm, f_seq_norm};
use crate::params::SpaceParams;
use crate::seq::{CoeffSeq, FlatSeq};
use crate::wavelets::{add_outer, family, AxisSamples, Factor, GridSpec, SampledFunction, WaveletSystem};

/// Resolution `2^{-j-R}` at which atoms are sampled for validation.
pub const ATOM_RES: u32 = 8;

/// Smooth step `e^{-1/z} / (e^{-1/z} + e^{-1/(1-z)})`, `0` for `z <= 0`, `1` for `z >= 1`.
fn smooth_step(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / z).exp();
        let b = (-1.0 / (1.0 - z)).exp();
        a / (a + b)
    }
}

/// `h = 1` on `[-1/2, 1/2]`, `supp h = [-1, 1]` (vanishing at `+-1`).
pub fn bump(x: f64) -> f64 {
    smooth_step(2.0 * (1.0 - x.abs()))
}

/// `chi(y) = prod_i h(y_i)` on `R^k`.
#[derive(Clone, Debug)]
pub struct CutoffFunction {
    pub k: usize,
    res: u32,
    /// `sup |Delta_h^b h| / h^b` at `h = 2^{-res}`, for `b = 0..=max_order`.
    fd_bounds: Vec<f64>,
}

impl CutoffFunction {
    pub fn new(k: usize, max_order: u32, res: u32) -> Self {
        let n = 1i64 << res;
        let samples: Vec<f64> = (-n..=n).map(|i| bump(i as f64 / n as f64)).collect();
        let fd_bounds = (0..=max_order)
            .map(|b| fd_sup(&samples, b, res))
            .collect();
        CutoffFunction { k, res, fd_bounds }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        y.iter().map(|&t| bump(t)).product()
    }

    pub fn res(&self) -> u32 {
        self.res
    }

    pub fn fd_bound(&self, order: u32) -> Option<f64> {
        self.fd_bounds.get(order as usize).copied()
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `sup |Delta_h^b f| / h^b` over samples at spacing `h = 2^{-e}`, with the
/// function continued by zero outside the samples.
pub fn fd_sup(samples: &[f64], b: u32, e: u32) -> f64 {
    let bu = b as usize;
    let mut padded = vec![0.0; samples.len() + 2 * bu];
    padded[bu..bu + samples.len()].copy_from_slice(samples);
    let coef: Vec<f64> = (0..=b)
        .map(|i| if (b - i) % 2 == 0 { binom(b, i) } else { -binom(b, i) })
        .collect();
    let scale = (b as f64 * e as f64).exp2();
    (0..padded.len() - bu)
        .map(|x| (0..=bu).map(|i| coef[i] * padded[x + i]).sum::<f64>().abs())
        .fold(0.0, f64::max)
        * scale
}

/// Coefficients of `Ext f` on `R^n`: one flat family per `l = 1..=2^{n-k}`,
/// supported on the cubes `Q_{j,(m,0)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicDecomp {
    pub n: usize,
    pub k: usize,
    /// `families[l - 1]`.
    pub families: Vec<FlatSeq>,
}

/// One atom `a^l_{j,(m,0)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomDescriptor {
    pub ell: usize,
    pub j: u32,
    /// Tangential lattice point (length `n - k`).
    pub m: Vec<i64>,
}

impl AtomicDecomp {
    pub fn is_zero(&self) -> bool {
        self.families.iter().all(FlatSeq::is_empty)
    }

    pub fn atoms(&self) -> Vec<AtomDescriptor> {
        let d = self.n - self.k;
        self.families
            .iter()
            .enumerate()
            .flat_map(|(i, fam)| {
                fam.iter().map(move |(j, m, _)| AtomDescriptor {
                    ell: i + 1,
                    j,
                    m: m[..d].to_vec(),
                })
            })
            .collect()
    }
}

fn embed(m: &[i64], k: usize) -> Vec<i64> {
    let mut out = m.to_vec();
    out.extend(std::iter::repeat(0).take(k));
    out
}

/// Family 1 carries `lambda_m` at `(0, (m, 0))`; family `l >= 2` carries
/// `2^{j(s - n/p)} lambda^{j,l}_m` at `(j, (m, 0))`.
pub fn ext_coefficients(lam: &CoeffSeq, params: &SpaceParams) -> Result<AtomicDecomp> {
    params.check_trace_admissible()?;
    let (n, k) = (params.n, params.k);
    if lam.dim() != n - k {
        return Err(Error::Domain(format!(
            "boundary coefficients live on R^{}, expected R^{}",
            lam.dim(),
            n - k
        )));
    }
    let mut families = vec![FlatSeq::new(n); 1 << (n - k)];
    for (m, v) in lam.father() {
        families[0].set(0, embed(m, k), v)?;
    }
    let e = params.s - n as f64 / params.p;
    for (ell, j, m, v) in lam.mother() {
        families[ell - 1].set(j, embed(m, k), (j as f64 * e).exp2() * v)?;
    }
    Ok(AtomicDecomp { n, k, families })
}

/// `Ext f` sampled on an `n`-dimensional grid. The tangential axes must cover
/// the wavelet supports; the normal axes are evaluated pointwise.
pub fn ext_function(
    lam: &CoeffSeq,
    sys: &WaveletSystem,
    chi: &CutoffFunction,
    grid: &GridSpec,
) -> Result<SampledFunction> {
    let d = lam.dim();
    let n = grid.dim();
    if sys.d != d || n != d + chi.k {
        return Err(Error::Grid(format!(
            "dimension mismatch: boundary {d}, system {}, grid {n}, codimension {}",
            sys.d, chi.k
        )));
    }
    let mut out = SampledFunction::zeros(grid.clone());
    for (idx, c) in lam.entries() {
        let (j, kinds, m) = match &idx {
            crate::seq::CoeffIndex::Father(m) => (0, vec![Factor::F; d], m.clone()),
            crate::seq::CoeffIndex::Mother { ell, j, m } => (*j, family(*ell, d), m.clone()),
        };
        let mut facs = Vec::with_capacity(n);
        for r in 0..d {
            let (a, b) = (m[r], m[r] + sys.filter_len() - 1);
            if !grid.covers(r, a, b, j) {
                return Err(Error::Grid(format!(
                    "grid does not cover the support [{a}, {b}] 2^-{j} on axis {r}"
                )));
            }
            facs.push(sys.axis_samples(kinds[r], j, m[r], grid, r)?);
        }
        let scale = (j as f64).exp2();
        for r in d..n {
            let values = (0..grid.len[r]).map(|i| bump(scale * grid.coord(r, i))).collect();
            facs.push(AxisSamples { start: 0, values });
        }
        add_outer(&mut out, c, &facs);
    }
    Ok(out)
}

/// Restriction of samples to the slice where the last `k` coordinates vanish.
pub fn trace_function(f: &SampledFunction, k: usize) -> Result<SampledFunction> {
    let n = f.grid.dim();
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("codimension must satisfy 1 <= k <= n - 1, got k = {k}, n = {n}")));
    }
    let d = n - k;
    let mut zero_idx = Vec::with_capacity(k);
    for r in d..n {
        zero_idx.push(
            f.grid
                .index_of(r, 0)
                .ok_or_else(|| Error::Grid(format!("axis {r} has no grid point at 0")))?,
        );
    }
    let grid = GridSpec::new(f.grid.g, f.grid.lo[..d].to_vec(), f.grid.len[..d].to_vec())?;
    let strides = f.grid.strides();
    let offset: usize = zero_idx.iter().zip(&strides[d..]).map(|(i, s)| i * s).sum();
    let mut out = SampledFunction::zeros(grid);
    let inner = out.grid.strides();
    for (flat, v) in out.values.iter_mut().enumerate() {
        let mut src = offset;
        let mut rem = flat;
        for r in 0..d {
            let i = rem / inner[r];
            rem %= inner[r];
            src += i * strides[r];
        }
        *v = f.values[src];
    }
    Ok(out)
}

/// One factor of a tensor-product atom: samples at `i 2^{-e}` for
/// `i = start, start + 1, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFactor {
    pub start: i64,
    pub e: u32,
    pub values: Vec<f64>,
}

/// Sampled realization of an atom `scale * prod_r f_r(z_r)` attached to the
/// cube `Q_{j,m}` in `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorAtom {
    pub j: u32,
    pub m: Vec<i64>,
    pub scale: f64,
    pub factors: Vec<SampledFactor>,
    /// Mother-type atoms must satisfy moment conditions.
    pub needs_moments: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomReport {
    pub support_ok: bool,
    pub derivative_ok: bool,
    /// `None` when the moment condition does not apply.
    pub moments_ok: Option<bool>,
    /// `max_beta sup |D^beta a| / 2^{-j(s-n/p)+|beta|j}`.
    pub max_derivative_ratio: f64,
    /// Largest `|int z^gamma a| / int |z^gamma a|`.
    pub max_moment_ratio: f64,
}

impl AtomReport {
    pub fn pass(&self) -> bool {
        self.support_ok && self.derivative_ok && self.moments_ok.unwrap_or(true)
    }
}

/// Relative slack for the derivative bound; finite differences of the
/// rescaled atoms reproduce the reference differences up to rounding.
pub const DERIVATIVE_TOL: f64 = 1e-9;
pub const MOMENT_TOL: f64 = 1e-6;

/// Per-factor finite-difference bounds `D_r[b]`, `b = 0..=order`.
fn factor_bounds(f: &SampledFactor, order: u32) -> Vec<f64> {
    (0..=order).map(|b| fd_sup(&f.values, b, f.e)).collect()
}

/// `max_{|beta| <= order} prod_r bound_r[beta_r] * weight^{|beta|}`.
fn max_over_multi_indices(bounds: &[Vec<f64>], order: u32, weight: f64) -> f64 {
    // best[t] = max product over the processed factors with total order t
    let mut best = vec![f64::NEG_INFINITY; order as usize + 1];
    best[0] = 1.0;
    for b in bounds {
        let mut next = vec![f64::NEG_INFINITY; order as usize + 1];
        for (t, &v) in best.iter().enumerate() {
            if v == f64::NEG_INFINITY {
                continue;
            }
            for (o, &bv) in b.iter().enumerate() {
                if t + o <= order as usize {
                    next[t + o] = next[t + o].max(v * bv);
                }
            }
        }
        best = next;
    }
    best.iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(t, v)| v / weight.powi(t as i32))
        .fold(0.0, f64::max)
}

fn factor_moment(f: &SampledFactor, v: u32, c: f64) -> (f64, f64) {
    let h = (-(f.e as f64)).exp2();
    let (mut s, mut a) = (0.0, 0.0);
    for (i, val) in f.values.iter().enumerate() {
        let t = ((f.start + i as i64) as f64 * h - c).powi(v as i32) * val * h;
        s += t;
        a += t.abs();
    }
    (s, a)
}

/// Checks an atom against the support, derivative and moment conditions:
/// `supp a` inside `b Q_{j,m}`, `|D^beta a| <= 2^{-j(s-n/p)+|beta|j}` for
/// `|beta| <= K`, and `int z^gamma a = 0` for `|gamma| < L` (mother type).
pub fn atom_validate(atom: &TensorAtom, k_order: u32, l_order: u32, s: f64, p: f64, b: i64) -> Result<AtomReport> {
    let n = atom.m.len();
    if atom.factors.len() != n {
        return Err(Error::Domain("atom factor count differs from dimension".into()));
    }
    for f in &atom.factors {
        if f.e < atom.j + 2 || f.values.len() < k_order as usize + 2 {
            return Err(Error::Resolution(format!(
                "samples at 2^-{} are too coarse for order-{k_order} differences at scale {}",
                f.e, atom.j
            )));
        }
    }
    // support: closed sample range strictly inside the open dilated cube
    let cube = DyadicCube::new(atom.j, atom.m.clone()).to_box().dilate(b);
    let support_ok = atom.factors.iter().zip(&cube.intervals).all(|(f, iv)| {
        let first = f.values.iter().position(|v| *v != 0.0);
        let last = f.values.iter().rposition(|v| *v != 0.0);
        match (first, last) {
            (Some(a), Some(z)) => {
                let lo = Dyadic::new((f.start + a as i64 - 1) as i128, f.e);
                let hi = Dyadic::new((f.start + z as i64 + 1) as i128, f.e);
                iv.lo < lo && hi < iv.hi
            }
            _ => true,
        }
    });
    let bounds: Vec<Vec<f64>> = atom.factors.iter().map(|f| factor_bounds(f, k_order)).collect();
    let base = (-(atom.j as f64) * (s - n as f64 / p)).exp2();
    let ratio = atom.scale.abs() * max_over_multi_indices(&bounds, k_order, (atom.j as f64).exp2()) / base;
    let derivative_ok = ratio <= 1.0 + DERIVATIVE_TOL;

    let (moments_ok, max_moment_ratio) = if atom.needs_moments && l_order > 0 {
        let h = (-(atom.j as f64)).exp2();
        let per: Vec<Vec<(f64, f64)>> = atom
            .factors
            .iter()
            .zip(&atom.m)
            .map(|(f, &mr)| (0..l_order).map(|v| factor_moment(f, v, mr as f64 * h)).collect())
            .collect();
        let mut worst: f64 = 0.0;
        let mut gamma = vec![0u32; n];
        loop {
            if gamma.iter().sum::<u32>() < l_order {
                let (mut s, mut a) = (1.0, 1.0);
                for (r, &g) in gamma.iter().enumerate() {
                    s *= per[r][g as usize].0;
                    a *= per[r][g as usize].1;
                }
                if a > 0.0 {
                    worst = worst.max(s.abs() / a);
                }
            }
            let mut r = 0;
            while r < n {
                gamma[r] += 1;
                if gamma[r] < l_order {
                    break;
                }
                gamma[r] = 0;
                r += 1;
            }
            if r == n {
                break;
            }
        }
        (Some(worst <= MOMENT_TOL), worst)
    } else {
        (None, 0.0)
    };
    Ok(AtomReport {
        support_ok,
        derivative_ok,
        moments_ok,
        max_derivative_ratio: ratio,
        max_moment_ratio,
    })
}

/// Everything needed to build, normalize and measure the extension atoms for
/// one parameter set.
#[derive(Clone, Debug)]
pub struct ExtensionSetup {
    pub params: SpaceParams,
    pub sys: WaveletSystem,
    pub chi: CutoffFunction,
    pub k_order: u32,
    pub l_order: u32,
    /// Dilation `b = 2C` of the support cubes.
    pub b: i64,
    /// `C_l` for `l = 1..=2^{n-k}` (index `l - 1`).
    pub consts: Vec<f64>,
}

impl ExtensionSetup {
    /// Uses `db_u` with `u = max(u_min, u_floor)`.
    pub fn new(params: SpaceParams, u_floor: u32) -> Result<Self> {
        params.check_trace_admissible()?;
        let u = params.u_min().max(u_floor).max(crate::wavelets::MIN_ORDER);
        let sys = crate::wavelets::build_system_for(&params, u, params.n - params.k)?;
        let k_order = params.k_min();
        let l_order = params.l_min();
        let chi = CutoffFunction::new(params.k, k_order, ATOM_RES);
        let b = 2 * sys.support_radius;
        let mut setup = ExtensionSetup {
            params,
            sys,
            chi,
            k_order,
            l_order,
            b,
            consts: Vec::new(),
        };
        let d = params.n - params.k;
        setup.consts = (1..=1usize << d)
            .map(|ell| {
                let reference = setup.raw_atom(ell, 0, &vec![0; d], 1.0);
                let bounds: Vec<Vec<f64>> = reference
                    .factors
                    .iter()
                    .map(|f| factor_bounds(f, k_order))
                    .collect();
                max_over_multi_indices(&bounds, k_order, 1.0)
            })
            .collect();
        Ok(setup)
    }

    fn raw_atom(&self, ell: usize, j: u32, m: &[i64], scale: f64) -> TensorAtom {
        let d = self.params.n - self.params.k;
        let kinds = family(ell, d);
        let e = j + ATOM_RES;
        let mut factors: Vec<SampledFactor> = (0..d)
            .map(|r| SampledFactor {
                start: m[r] << ATOM_RES,
                e,
                values: self.sys.table.samples(kinds[r], ATOM_RES),
            })
            .collect();
        let half = 1i64 << ATOM_RES;
        let normal: Vec<f64> = (-half..=half).map(|i| bump(i as f64 / half as f64)).collect();
        for _ in 0..self.params.k {
            factors.push(SampledFactor {
                start: -half,
                e,
                values: normal.clone(),
            });
        }
        TensorAtom {
            j,
            m: embed(m, self.params.k),
            scale,
            factors,
            needs_moments: ell >= 2,
        }
    }

    /// The normalized atom `a^l_{j,(m,0)}`.
    pub fn atom(&self, a: &AtomDescriptor) -> TensorAtom {
        let sp = &self.params;
        let e = sp.s - sp.n as f64 / sp.p;
        let scale = (-(a.j as f64) * e).exp2() / self.consts[a.ell - 1];
        self.raw_atom(a.ell, a.j, &a.m, scale)
    }

    pub fn validate(&self, a: &TensorAtom) -> Result<AtomReport> {
        atom_validate(a, self.k_order, self.l_order, self.params.s, self.params.p, self.b)
    }

    pub fn ext_norm_ratio(&self, lam: &CoeffSeq) -> Result<ExtRatio> {
        ext_norm_ratio(lam, &self.params, &self.consts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtRatio {
    pub num: f64,
    pub den: f64,
    pub ratio: f64,
}

/// `num = sum_l C_l ||lambda~^l | f_{p,q}(R^n, w_alpha)||`,
/// `den = ||lambda | b^{s-(alpha+k)/p}_{p,p}||`, `ratio = num/den` (`0/0 = 1`).
pub fn ext_norm_ratio(lam: &CoeffSeq, params: &SpaceParams, consts: &[f64]) -> Result<ExtRatio> {
    let dec = ext_coefficients(lam, params)?;
    if consts.len() != dec.families.len() {
        return Err(Error::Domain(format!(
            "{} normalization constants for {} families",
            consts.len(),
            dec.families.len()
        )));
    }
    let w = WeightAlpha::new(params.alpha)?;
    let mut num = 0.0;
    for (fam, c) in dec.families.iter().zip(consts) {
        num += c * f_seq_norm(fam, params.p, params.q, &w)?;
    }
    let den = besov_seq_norm(lam, params.trace_smoothness(), params.p, params.p)?;
    let ratio = if num == 0.0 && den == 0.0 { 1.0 } else { num / den };
    Ok(ExtRatio { num, den, ratio })
}
