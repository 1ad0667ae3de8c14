//! Tensor-product Daubechies wavelets on truncated dyadic grids.
//!
//! Point values of the scaling function `phi` and the wavelet `psi` come from
//! the cascade scheme: the integer samples of `phi` form the eigenvector of
//! the refinement matrix for eigenvalue one, and every finer dyadic level
//! follows from `phi(x) = sqrt(2) sum_k h_k phi(2x - k)`. Inner products are
//! Riemann sums on the sampling grid.
//!
//! The order `u` selects `db_u` (filter length `2u`, support `[0, 2u - 1]`).

mod filters;
mod sampled;

pub use sampled::{GridSpec, SampledFunction};

use crate::error::{Error, Result};
use crate::params::SpaceParams;
use crate::seq::{CoeffIndex, CoeffSeq};

/// Smallest admitted order; `db_1` (Haar) is discontinuous.
pub const MIN_ORDER: u32 = 2;
pub const MAX_ORDER: u32 = 10;
/// Finest level of the tabulated point values, `2^{-TABLE_RES}`.
pub const TABLE_RES: u32 = 14;
/// Analysis needs `G >= J + ANALYSIS_MARGIN`.
pub const ANALYSIS_MARGIN: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    /// Scaling function `psi_F = phi`.
    F,
    /// Wavelet `psi_M = psi`.
    M,
}

/// Point values of `phi` and `psi` on `[0, L - 1]` at spacing `2^{-res}`.
#[derive(Clone, Debug)]
pub struct Wavelet1d {
    h: Vec<f64>,
    res: u32,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &k| a[i][c].abs().total_cmp(&a[k][c].abs()))
            .unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[i][k] -= f * a[c][k];
                }
                b[i] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

impl Wavelet1d {
    pub fn new(h: &[f64], res: u32) -> Self {
        let l = h.len();
        let s2 = std::f64::consts::SQRT_2;
        // phi at the interior integers 1..=L-2
        let m = l - 2;
        let mut a = vec![vec![0.0; m]; m];
        for i in 0..m {
            for k in 0..m {
                let n = 2 * (i as i64 + 1) - (k as i64 + 1);
                if (0..l as i64).contains(&n) {
                    a[i][k] = s2 * h[n as usize];
                }
            }
            a[i][i] -= 1.0;
        }
        let mut b = vec![0.0; m];
        a[m - 1] = vec![1.0; m];
        b[m - 1] = 1.0;
        let ints = solve_dense(a, b);

        let one = 1usize << res;
        let size = (l - 1) * one + 1;
        let mut phi = vec![0.0; size];
        for (i, v) in ints.iter().enumerate() {
            phi[(i + 1) * one] = *v;
        }
        let refine = |tab: &[f64], t: usize, coef: &dyn Fn(usize) -> f64| -> f64 {
            let mut acc = 0.0;
            for n in 0..l {
                let idx = 2 * t as i64 - (n * one) as i64;
                if idx >= 0 && (idx as usize) < size {
                    acc += coef(n) * tab[idx as usize];
                }
            }
            s2 * acc
        };
        for r in 1..=res {
            let stride = 1usize << (res - r);
            let mut t = stride;
            while t < size {
                phi[t] = refine(&phi, t, &|n| h[n]);
                t += 2 * stride;
            }
        }
        let g = |n: usize| {
            let v = h[l - 1 - n];
            if n % 2 == 0 {
                v
            } else {
                -v
            }
        };
        let psi = (0..size).map(|t| refine(&phi, t, &g)).collect();
        Wavelet1d {
            h: h.to_vec(),
            res,
            phi,
            psi,
        }
    }

    /// Filter length `L`; both functions vanish outside `[0, L - 1]`.
    pub fn filter_len(&self) -> usize {
        self.h.len()
    }

    pub fn res(&self) -> u32 {
        self.res
    }

    /// Value at `k 2^{-rel}`, for `rel <= res`.
    pub fn sample(&self, kind: Factor, k: i64, rel: u32) -> f64 {
        debug_assert!(rel <= self.res);
        let idx = k << (self.res - rel);
        let tab = match kind {
            Factor::F => &self.phi,
            Factor::M => &self.psi,
        };
        if idx < 0 || idx as usize >= tab.len() {
            0.0
        } else {
            tab[idx as usize]
        }
    }

    /// All samples on `[0, L - 1]` at spacing `2^{-rel}`.
    pub fn samples(&self, kind: Factor, rel: u32) -> Vec<f64> {
        let n = ((self.filter_len() - 1) << rel) as i64;
        (0..=n).map(|k| self.sample(kind, k, rel)).collect()
    }

    /// Riemann sum of `(x - c)^v f(x)` at spacing `2^{-rel}`, together with
    /// the same sum of absolute values.
    pub fn moment(&self, kind: Factor, v: u32, c: f64, rel: u32) -> (f64, f64) {
        let h = (-(rel as f64)).exp2();
        let (mut s, mut a) = (0.0, 0.0);
        for (k, f) in self.samples(kind, rel).into_iter().enumerate() {
            let t = (k as f64 * h - c).powi(v as i32) * f * h;
            s += t;
            a += t.abs();
        }
        (s, a)
    }
}

/// Tensor-product Daubechies system on `R^d`.
#[derive(Clone, Debug)]
pub struct WaveletSystem {
    pub u: u32,
    pub d: usize,
    pub scaling_filter: Vec<f64>,
    /// `C` with `supp psi_F, psi_M` inside `(-C, C)`.
    pub support_radius: i64,
    pub table: Wavelet1d,
}

/// Checks `sum_k h_k h_{k+2n} = delta_n` and `sum_k h_k = sqrt(2)`.
pub fn filter_orthonormality_error(h: &[f64]) -> f64 {
    let l = h.len();
    let mut err = (h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs();
    for n in 0..l / 2 {
        let s: f64 = (0..l - 2 * n).map(|k| h[k] * h[k + 2 * n]).sum();
        err = err.max((s - if n == 0 { 1.0 } else { 0.0 }).abs());
    }
    err
}

pub fn build_system(u: u32, d: usize) -> Result<WaveletSystem> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&u) {
        return Err(Error::UnsupportedOrder(
            u,
            format!("{MIN_ORDER}..={MAX_ORDER}; u = 1 is the discontinuous Haar filter"),
        ));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::Domain(format!("function-level dimension must be 1..=3, got {d}")));
    }
    let h = filters::daubechies(u).expect("table covers 1..=10");
    let err = filter_orthonormality_error(h);
    if err > 1e-12 {
        return Err(Error::Domain(format!("filter db{u} violates orthonormality by {err:e}")));
    }
    let table = Wavelet1d::new(h, TABLE_RES);
    let c = (h.len() - 1) as f64 / 2.0;
    for v in 0..u {
        let (m, a) = table.moment(Factor::M, v, c, 8);
        if m.abs() > 1e-8 * a.max(1.0) {
            return Err(Error::Domain(format!("db{u}: moment {v} of psi is {m:e}")));
        }
    }
    Ok(WaveletSystem {
        u,
        d,
        scaling_filter: h.to_vec(),
        support_radius: h.len() as i64,
        table,
    })
}

/// Builds the system for a trace/extension flow, refusing `u < u_min`.
pub fn build_system_for(params: &SpaceParams, u: u32, d: usize) -> Result<WaveletSystem> {
    let need = params.u_min();
    if u < need {
        return Err(Error::UnsupportedOrder(u, format!("u_min = {need} for these parameters")));
    }
    build_system(u, d)
}

/// Factors `G_l` for `l` in `1..=2^d`: bit `r` of `l - 1` selects `M` on axis `r`.
pub fn family(ell: usize, d: usize) -> Vec<Factor> {
    (0..d)
        .map(|r| if (ell - 1) >> r & 1 == 1 { Factor::M } else { Factor::F })
        .collect()
}

/// Values of `x -> f(2^j x - m)` on one grid axis: the first grid index of the
/// support and the samples from there on (clipped to the grid).
pub struct AxisSamples {
    pub start: usize,
    pub values: Vec<f64>,
}

impl WaveletSystem {
    pub fn num_mother_families(&self) -> usize {
        (1 << self.d) - 1
    }

    pub fn filter_len(&self) -> i64 {
        self.scaling_filter.len() as i64
    }

    /// Support of `f(2^j x - m)` per axis: `[m 2^{-j}, (m + L - 1) 2^{-j}]`,
    /// returned as integer endpoints at scale `2^{-j}`.
    pub fn support(&self, m: &[i64]) -> Vec<(i64, i64)> {
        m.iter().map(|&mr| (mr, mr + self.filter_len() - 1)).collect()
    }

    fn check_level(&self, grid: &GridSpec, j: u32) -> Result<u32> {
        if grid.g < j {
            return Err(Error::Resolution(format!("grid level {} is coarser than scale {j}", grid.g)));
        }
        let rel = grid.g - j;
        if rel > self.table.res() {
            return Err(Error::Resolution(format!(
                "relative resolution {rel} exceeds the tabulated {}",
                self.table.res()
            )));
        }
        Ok(rel)
    }

    pub fn axis_samples(
        &self,
        kind: Factor,
        j: u32,
        m: i64,
        grid: &GridSpec,
        axis: usize,
    ) -> Result<AxisSamples> {
        let rel = self.check_level(grid, j)?;
        let first = m << rel;
        let last = (m + self.filter_len() - 1) << rel;
        let lo = grid.lo[axis];
        let hi = lo + grid.len[axis] as i64 - 1;
        let a = first.max(lo);
        let b = last.min(hi);
        if a > b {
            return Ok(AxisSamples {
                start: 0,
                values: Vec::new(),
            });
        }
        Ok(AxisSamples {
            start: (a - lo) as usize,
            values: (a..=b).map(|x| self.table.sample(kind, x - first, rel)).collect(),
        })
    }

    fn factors_of(&self, idx: &CoeffIndex) -> (u32, Vec<Factor>, Vec<i64>) {
        match idx {
            CoeffIndex::Father(m) => (0, vec![Factor::F; self.d], m.clone()),
            CoeffIndex::Mother { ell, j, m } => (*j, family(*ell, self.d), m.clone()),
        }
    }

    fn check_cover(&self, grid: &GridSpec, j: u32, m: &[i64]) -> Result<()> {
        for (r, (a, b)) in self.support(m).into_iter().enumerate() {
            if !grid.covers(r, a, b, j) {
                return Err(Error::Grid(format!(
                    "grid does not cover the support [{a}, {b}] 2^-{j} on axis {r}"
                )));
            }
        }
        Ok(())
    }

    /// `f = sum lambda_m psi_m + sum lambda^{j,l}_m prod_r psi_{G_r}(2^j x_r - m_r)`
    /// sampled on `grid`, which must cover every support.
    pub fn synthesize(&self, lam: &CoeffSeq, grid: &GridSpec) -> Result<SampledFunction> {
        if lam.dim() != self.d || grid.dim() != self.d {
            return Err(Error::Grid("dimension mismatch".into()));
        }
        let mut out = SampledFunction::zeros(grid.clone());
        for (idx, c) in lam.entries() {
            let (j, kinds, m) = self.factors_of(&idx);
            self.check_cover(grid, j, &m)?;
            let facs = (0..self.d)
                .map(|r| self.axis_samples(kinds[r], j, m[r], grid, r))
                .collect::<Result<Vec<_>>>()?;
            add_outer(&mut out, c, &facs);
        }
        Ok(out)
    }

    /// Coefficients of every index inside the window: fathers with
    /// `m in [a, b)`, mothers at scale `j <= J` with `2^{-j} m in [a, b)`.
    /// Inner products are Riemann sums on the grid.
    pub fn analyze(&self, f: &SampledFunction, j_max: u32, a: &[i64], b: &[i64]) -> Result<CoeffSeq> {
        let grid = &f.grid;
        if grid.dim() != self.d || a.len() != self.d || b.len() != self.d {
            return Err(Error::Grid("dimension mismatch".into()));
        }
        if grid.g < j_max + ANALYSIS_MARGIN {
            return Err(Error::Resolution(format!(
                "analysis at J = {j_max} needs G >= {}, got {}",
                j_max + ANALYSIS_MARGIN,
                grid.g
            )));
        }
        let mut out = CoeffSeq::new(self.d, j_max);
        let hd = grid.step().powi(self.d as i32);
        let mut jobs: Vec<(u32, usize)> = vec![(0, 1)];
        for j in 0..=j_max {
            for ell in 2..=1usize << self.d {
                jobs.push((j, ell));
            }
        }
        for (j, ell) in jobs {
            let kinds = family(ell, self.d);
            let ranges: Vec<(i64, i64)> = a.iter().zip(b).map(|(&x, &y)| (x << j, y << j)).collect();
            let corner_lo: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            let corner_hi: Vec<i64> = ranges.iter().map(|r| r.1 - 1).collect();
            self.check_cover(grid, j, &corner_lo)?;
            self.check_cover(grid, j, &corner_hi)?;
            let mut data = Vec::new();
            let mut shape = grid.len.clone();
            for r in 0..self.d {
                let rows = (ranges[r].0..ranges[r].1)
                    .map(|m| self.axis_samples(kinds[r], j, m, grid, r))
                    .collect::<Result<Vec<_>>>()?;
                let src = if r == 0 { &f.values } else { &data };
                let (d2, s2) = mode_product(src, &shape, r, &rows);
                data = d2;
                shape = s2;
            }
            let scale = hd * (j as f64 * self.d as f64).exp2();
            let mut m = vec![0i64; self.d];
            for (flat, v) in data.iter().enumerate() {
                let mut rem = flat;
                for r in (0..self.d).rev() {
                    m[r] = ranges[r].0 + (rem % shape[r]) as i64;
                    rem /= shape[r];
                }
                let val = v * scale;
                if ell == 1 {
                    out.set_father(m.clone(), val)?;
                } else {
                    out.set_mother(ell, j, m.clone(), val)?;
                }
            }
        }
        Ok(out)
    }
}

/// `(sum lambda^2 2^{-jd})^{1/2}`, the L_2 norm of the synthesized function.
pub fn coeff_l2_norm(lam: &CoeffSeq) -> f64 {
    let d = lam.dim() as f64;
    let mut s: f64 = lam.father().map(|(_, v)| v * v).sum();
    s += lam
        .mother()
        .map(|(_, j, _, v)| v * v * (-(j as f64) * d).exp2())
        .sum::<f64>();
    s.sqrt()
}

/// `out += c * (f_0 x f_1 x ... )` over the factor supports.
pub fn add_outer(out: &mut SampledFunction, c: f64, facs: &[AxisSamples]) {
    if facs.iter().any(|f| f.values.is_empty()) || c == 0.0 {
        return;
    }
    let d = facs.len();
    let strides = out.grid.strides();
    let last = &facs[d - 1];
    let mut idx = vec![0usize; d - 1];
    loop {
        let mut coef = c;
        let mut base = last.start;
        for r in 0..d - 1 {
            coef *= facs[r].values[idx[r]];
            base += (facs[r].start + idx[r]) * strides[r];
        }
        if coef != 0.0 {
            let row = &mut out.values[base..base + last.values.len()];
            for (o, v) in row.iter_mut().zip(&last.values) {
                *o += coef * v;
            }
        }
        let mut r = d - 1;
        loop {
            if r == 0 {
                return;
            }
            r -= 1;
            idx[r] += 1;
            if idx[r] < facs[r].values.len() {
                break;
            }
            idx[r] = 0;
        }
    }
}

/// Contracts `axis` of a row-major tensor with banded rows.
fn mode_product(data: &[f64], shape: &[usize], axis: usize, rows: &[AxisSamples]) -> (Vec<f64>, Vec<usize>) {
    let pre: usize = shape[..axis].iter().product();
    let n = shape[axis];
    let post: usize = shape[axis + 1..].iter().product();
    let nr = rows.len();
    let mut out = vec![0.0; pre * nr * post];
    for a in 0..pre {
        for (i, row) in rows.iter().enumerate() {
            let dst = (a * nr + i) * post;
            if post == 1 {
                let src = &data[a * n + row.start..a * n + row.start + row.values.len()];
                out[dst] = src.iter().zip(&row.values).map(|(x, y)| x * y).sum();
                continue;
            }
            for (k, &b) in row.values.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let src = (a * n + row.start + k) * post;
                let (o, s) = (&mut out[dst..dst + post], &data[src..src + post]);
                for (x, y) in o.iter_mut().zip(s) {
                    *x += b * y;
                }
            }
        }
    }
    let mut s = shape.to_vec();
    s[axis] = nr;
    (out, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_range() {
        assert!(matches!(build_system(1, 1), Err(Error::UnsupportedOrder(1, _))));
        assert!(matches!(build_system(11, 1), Err(Error::UnsupportedOrder(11, _))));
        for u in MIN_ORDER..=MAX_ORDER {
            let sys = build_system(u, 1).unwrap();
            assert_eq!(sys.support_radius, 2 * u as i64);
        }
        assert_eq!(build_system(3, 2).unwrap().num_mother_families(), 3);
    }

    #[test]
    fn filters_orthonormal() {
        for u in 1..=10 {
            assert!(filter_orthonormality_error(filters::daubechies(u).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn cascade_partition_of_unity() {
        let t = Wavelet1d::new(filters::daubechies(4).unwrap(), 8);
        // sum_k phi(x - k) = 1 at every dyadic point
        for k in 0..256 {
            let s: f64 = (0..8).map(|n| t.sample(Factor::F, k + (n << 8), 8)).sum();
            assert!((s - 1.0).abs() < 1e-12, "{k} {s}");
        }
    }

    #[test]
    fn third_moment_of_db3_vanishes() {
        let sys = build_system(3, 1).unwrap();
        let (m, _) = sys.table.moment(Factor::M, 2, 0.0, 10);
        assert!(m.abs() < 1e-8);
    }

    #[test]
    fn family_enumeration() {
        assert_eq!(family(1, 2), vec![Factor::F, Factor::F]);
        assert_eq!(family(2, 2), vec![Factor::M, Factor::F]);
        assert_eq!(family(4, 2), vec![Factor::M, Factor::M]);
    }

    #[test]
    fn single_father_samples() {
        let sys = build_system(2, 1).unwrap();
        let mut lam = CoeffSeq::new(1, 0);
        lam.set_father(vec![1], 1.0).unwrap();
        let grid = GridSpec::covering(4, &[0], &[5]).unwrap();
        let f = sys.synthesize(&lam, &grid).unwrap();
        for i in 0..grid.len[0] {
            let want = sys.table.sample(Factor::F, i as i64 - 16, 4);
            assert_eq!(f.values[i], want);
        }
        let small = GridSpec::covering(4, &[0], &[3]).unwrap();
        assert!(matches!(sys.synthesize(&lam, &small), Err(Error::Grid(_))));
    }

    #[test]
    fn analysis_needs_margin() {
        let sys = build_system(2, 1).unwrap();
        let grid = GridSpec::covering(5, &[0], &[8]).unwrap();
        let f = SampledFunction::zeros(grid);
        assert!(matches!(sys.analyze(&f, 2, &[0], &[2]), Err(Error::Resolution(_))));
        let c = sys.analyze(&f, 1, &[0], &[2]).unwrap();
        assert!(c.is_empty());
    }
}
