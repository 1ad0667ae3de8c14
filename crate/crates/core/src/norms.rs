//! Quasi-norms of the coefficient spaces and exact Lorentz norms of simple
//! functions.
//!
//! Every f-type norm integrates a piecewise constant function. The pieces
//! come either from the tree of standard dyadic cells (for cube-indexed
//! sequences) or from a coordinate sweep over arbitrary boxes; both return a
//! list of `(value, mass)` pairs, on which the L_p and Lorentz functionals act.

use std::collections::{BTreeMap, HashMap};

use crate::dyadic::{e_box_mass, DyadicBox, DyadicCube, Dyadic, EBox, WeightAlpha};
use crate::error::{Error, Result};
use crate::seq::{CoeffSeq, FlatSeq, SimpleFunction};

/// Validates an outer exponent `p`, which must be finite and positive.
pub fn check_p(p: f64) -> Result<()> {
    if p == f64::INFINITY {
        return Err(Error::InfiniteP);
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidExponent { name: "p", value: p });
    }
    Ok(())
}

/// Validates an exponent that may be infinite.
pub fn check_exponent(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(Error::InvalidExponent { name, value: v });
    }
    Ok(())
}

/// Measure used to turn pieces into masses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Measure {
    Weight(WeightAlpha),
    /// Every piece has mass one.
    Counting,
}

/// `(sum mass * v^p)^{1/p}`.
pub fn lp_of_distribution(dist: &[(f64, f64)], p: f64) -> Result<f64> {
    check_p(p)?;
    let s: f64 = dist
        .iter()
        .filter(|(v, m)| *v > 0.0 && *m > 0.0)
        .map(|(v, m)| m * v.powf(p))
        .sum();
    Ok(s.powf(1.0 / p))
}

/// Exact `L_{p,r}` quasi-norm of a function with the given `(value, mass)`
/// distribution.
///
/// With distinct values `v_1 > ... > v_K` and cumulative masses `S_i`,
/// the norm is `(sum_i S_i^{r/p} (v_i^r - v_{i+1}^r) / r)^{1/r}`, and
/// `max_i v_i S_i^{1/p}` for `r = inf`.
pub fn lorentz_of_distribution(dist: &[(f64, f64)], p: f64, r: f64) -> Result<f64> {
    check_p(p)?;
    check_exponent("r", r)?;
    let mut pts: Vec<(f64, f64)> = dist
        .iter()
        .copied()
        .filter(|(v, m)| *v > 0.0 && *m > 0.0)
        .collect();
    if pts.is_empty() {
        return Ok(0.0);
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut levels: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    let mut cum = 0.0;
    for (v, m) in pts {
        cum += m;
        match levels.last_mut() {
            Some(last) if last.0 == v => last.1 = cum,
            _ => levels.push((v, cum)),
        }
    }
    if r == f64::INFINITY {
        return Ok(levels
            .iter()
            .map(|(v, s)| v * s.powf(1.0 / p))
            .fold(0.0, f64::max));
    }
    let mut acc = 0.0;
    for (i, (v, s)) in levels.iter().enumerate() {
        let next = levels.get(i + 1).map_or(0.0, |l| l.0.powf(r));
        acc += s.powf(r / p) * (v.powf(r) - next) / r;
    }
    Ok(acc.powf(1.0 / r))
}

pub fn lorentz_norm_discrete(f: &SimpleFunction, measure: &Measure, p: f64, r: f64) -> Result<f64> {
    let dist: Vec<(f64, f64)> = match measure {
        Measure::Weight(w) => f.distribution(w),
        Measure::Counting => f.pieces().iter().map(|(_, v)| (*v, 1.0)).collect(),
    };
    lorentz_of_distribution(&dist, p, r)
}

/// How cube entries are scaled before aggregation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scaling {
    /// `|lambda_{j,m}| 2^{jn/p}` on `Q_{j,m}` (the atomic convention).
    Atomic,
    /// `|lambda_{j,m}|` on `Q_{j,m}`.
    Plain,
}

/// Combines `q`-th powers (or maxima for `q = inf`).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Aggregator {
    q: f64,
}

impl Aggregator {
    pub(crate) fn new(q: f64) -> Self {
        Aggregator { q }
    }
    pub(crate) fn lift(&self, v: f64) -> f64 {
        if self.q == f64::INFINITY || self.q == 1.0 {
            v.abs()
        } else if self.q == 2.0 {
            v * v
        } else {
            v.abs().powf(self.q)
        }
    }
    pub(crate) fn combine(&self, a: f64, b: f64) -> f64 {
        if self.q == f64::INFINITY {
            a.max(b)
        } else {
            a + b
        }
    }
    pub(crate) fn lower(&self, a: f64) -> f64 {
        if self.q == f64::INFINITY || self.q == 1.0 {
            a
        } else if self.q == 2.0 {
            a.sqrt()
        } else {
            a.powf(1.0 / self.q)
        }
    }
}

/// Standard dyadic cell `prod_r [idx_r 2^{-level}, (idx_r + 1) 2^{-level})`.
type Cell = (u32, Vec<i64>);

pub(crate) fn cell_mass(w: &WeightAlpha, level: u32, idx: &[i64]) -> f64 {
    let h = (-(level as f64)).exp2();
    let axis = w.axis_for(idx.len());
    idx.iter()
        .enumerate()
        .map(|(r, &i)| {
            if r == axis {
                w.integral_1d(i as f64 * h, (i + 1) as f64 * h)
            } else {
                h
            }
        })
        .product()
}

/// The `2^d` standard cells at level `j + 1` whose union is `Q_{j,m}`.
pub(crate) fn cube_cells(j: u32, m: &[i64]) -> Vec<Cell> {
    let d = m.len();
    (0..1usize << d)
        .map(|mask| {
            let idx = m
                .iter()
                .enumerate()
                .map(|(r, &mr)| 2 * mr - 1 + ((mask >> r) & 1) as i64)
                .collect();
            (j + 1, idx)
        })
        .collect()
}

/// One region of the arrangement: the part of a tree cell not covered by
/// deeper cells, with the cube entries whose cubes contain it.
#[derive(Clone, Debug)]
pub(crate) struct Region {
    pub mass: f64,
    /// Indices into the entry list that was passed to [`cube_regions`].
    pub covering: Vec<usize>,
}

/// Splits the union of the cubes `Q_{j,m}` into regions on which the set of
/// covering cubes is constant.
pub(crate) fn cube_regions(cubes: &[(u32, Vec<i64>)], w: &WeightAlpha) -> Vec<Region> {
    let mut own: HashMap<Cell, Vec<usize>> = HashMap::new();
    for (e, (j, m)) in cubes.iter().enumerate() {
        for c in cube_cells(*j, m) {
            own.entry(c).or_default().push(e);
        }
    }
    // close the tree under parents, down to level 1
    let mut nodes: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
    for (c, es) in own {
        nodes.entry(c.clone()).or_default().extend(es);
        let (mut lev, mut idx) = c;
        while lev > 1 {
            lev -= 1;
            idx = idx.iter().map(|i| i.div_euclid(2)).collect();
            nodes.entry((lev, idx.clone())).or_default();
        }
    }
    // BTreeMap order visits coarser levels first
    let mut inherited: HashMap<Cell, Vec<usize>> = HashMap::new();
    let mut regions = Vec::with_capacity(nodes.len());
    for ((lev, idx), es) in &nodes {
        let mut cover = if *lev > 1 {
            let parent: Vec<i64> = idx.iter().map(|i| i.div_euclid(2)).collect();
            inherited.get(&(lev - 1, parent)).cloned().unwrap_or_default()
        } else {
            Vec::new()
        };
        cover.extend(es.iter().copied());
        let d = idx.len();
        let children: Vec<Vec<i64>> = (0..1usize << d)
            .map(|mask| {
                idx.iter()
                    .enumerate()
                    .map(|(r, &i)| 2 * i + ((mask >> r) & 1) as i64)
                    .collect()
            })
            .collect();
        let present: Vec<bool> = children
            .iter()
            .map(|c| nodes.contains_key(&(lev + 1, c.clone())))
            .collect();
        let mass = if present.iter().any(|&b| b) {
            children
                .iter()
                .zip(&present)
                .filter(|(_, &p)| !p)
                .map(|(c, _)| cell_mass(w, lev + 1, c))
                .sum()
        } else {
            cell_mass(w, *lev, idx)
        };
        if mass > 0.0 && !cover.is_empty() {
            regions.push(Region {
                mass,
                covering: cover.clone(),
            });
        }
        inherited.insert((*lev, idx.clone()), cover);
    }
    regions
}

fn scaled_entries(lam: &FlatSeq, p: f64, scaling: Scaling) -> Vec<((u32, Vec<i64>), f64)> {
    let n = lam.dim() as f64;
    lam.iter()
        .map(|(j, m, v)| {
            let f = match scaling {
                Scaling::Atomic => (j as f64 * n / p).exp2(),
                Scaling::Plain => 1.0,
            };
            ((j, m.clone()), v.abs() * f)
        })
        .collect()
}

/// `(value, mass)` distribution of `(sum_{j,m} |c_{j,m} chi_{j,m}|^q)^{1/q}`.
pub fn cube_distribution(
    lam: &FlatSeq,
    p: f64,
    q: f64,
    w: &WeightAlpha,
    scaling: Scaling,
) -> Result<Vec<(f64, f64)>> {
    check_p(p)?;
    check_exponent("q", q)?;
    let entries = scaled_entries(lam, p, scaling);
    let cubes: Vec<_> = entries.iter().map(|(k, _)| k.clone()).collect();
    let agg = Aggregator::new(q);
    Ok(cube_regions(&cubes, w)
        .into_iter()
        .map(|reg| {
            let a = reg
                .covering
                .iter()
                .fold(0.0, |acc, &e| agg.combine(acc, agg.lift(entries[e].1)));
            (agg.lower(a), reg.mass)
        })
        .collect())
}

/// `|| (sum |lambda_{j,m} chi^{(p)}_{j,m}|^q)^{1/q} | L_p(w) ||`, where
/// `chi^{(p)}_{j,m} = 2^{jn/p} chi_{j,m}`.
pub fn f_seq_norm(lam: &FlatSeq, p: f64, q: f64, w: &WeightAlpha) -> Result<f64> {
    lp_of_distribution(&cube_distribution(lam, p, q, w, Scaling::Atomic)?, p)
}

/// The same L_p(l_q) functional without the `2^{jn/p}` factor.
pub fn fq_lp_norm(lam: &FlatSeq, p: f64, q: f64, w: &WeightAlpha) -> Result<f64> {
    lp_of_distribution(&cube_distribution(lam, p, q, w, Scaling::Plain)?, p)
}

/// `|| (sum |lambda_{j,m} chi_{j,m}|^q)^{1/q} | L_{p,r}(w) ||`.
#[allow(non_snake_case)]
pub fn fqLpr_norm(lam: &FlatSeq, p: f64, r: f64, q: f64, w: &WeightAlpha) -> Result<f64> {
    lorentz_of_distribution(&cube_distribution(lam, p, q, w, Scaling::Plain)?, p, r)
}

/// `(value, mass)` distribution of `(sum_i |v_i chi_{B_i}|^q)^{1/q}` for
/// arbitrary, possibly overlapping boxes, by a recursive sweep over the
/// breakpoints of each axis.
pub fn box_distribution(pieces: &[(DyadicBox, f64)], q: f64, w: &WeightAlpha) -> Result<Vec<(f64, f64)>> {
    check_exponent("q", q)?;
    let Some(dim) = pieces.first().map(|(b, _)| b.dim()) else {
        return Ok(Vec::new());
    };
    if pieces.iter().any(|(b, _)| b.dim() != dim) {
        return Err(Error::Index("boxes of mixed dimension".into()));
    }
    let agg = Aggregator::new(q);
    let mut out = Vec::new();
    let active: Vec<usize> = (0..pieces.len()).filter(|&i| !pieces[i].0.is_empty()).collect();
    sweep(pieces, &agg, w, w.axis_for(dim), 0, &active, 1.0, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    pieces: &[(DyadicBox, f64)],
    agg: &Aggregator,
    w: &WeightAlpha,
    waxis: usize,
    axis: usize,
    active: &[usize],
    factor: f64,
    out: &mut Vec<(f64, f64)>,
) {
    if active.is_empty() {
        return;
    }
    if axis == pieces[active[0]].0.dim() {
        let a = active
            .iter()
            .fold(0.0, |acc, &i| agg.combine(acc, agg.lift(pieces[i].1)));
        out.push((agg.lower(a), factor));
        return;
    }
    let mut breaks: Vec<Dyadic> = active
        .iter()
        .flat_map(|&i| {
            let iv = pieces[i].0.intervals[axis];
            [iv.lo, iv.hi]
        })
        .collect();
    breaks.sort();
    breaks.dedup();
    for win in breaks.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let sub: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&i| {
                let iv = pieces[i].0.intervals[axis];
                iv.lo <= lo && hi <= iv.hi
            })
            .collect();
        if sub.is_empty() {
            continue;
        }
        let len = if axis == waxis {
            w.integral_1d(lo.to_f64(), hi.to_f64())
        } else {
            hi.sub(lo).to_f64()
        };
        sweep(pieces, agg, w, waxis, axis + 1, &sub, factor * len, out);
    }
}

/// f-type norm with every cube `Q_{j,m}` replaced by a box `E_{j,m}` inside
/// it. `r = None` selects the L_p outer norm, `Some(r)` the `L_{p,r}` one.
/// Each box must satisfy `mass(E) >= c * mass(Q)` under `w`.
#[allow(clippy::too_many_arguments)]
pub fn equivalent_e_norm(
    lam: &FlatSeq,
    p: f64,
    q: f64,
    r: Option<f64>,
    w: &WeightAlpha,
    boxes: &BTreeMap<(u32, Vec<i64>), DyadicBox>,
    c: f64,
    scaling: Scaling,
) -> Result<f64> {
    check_p(p)?;
    let mut pieces = Vec::with_capacity(lam.len());
    for ((j, m), v) in scaled_entries(lam, p, scaling) {
        let b = boxes
            .get(&(j, m.clone()))
            .ok_or_else(|| Error::Index(format!("no box for (j, m) = ({j}, {m:?})")))?;
        let cube = DyadicCube::new(j, m.clone()).to_box();
        if !cube.contains_box(b) {
            return Err(Error::NotContained {
                inner: b.to_string(),
                outer: cube.to_string(),
            });
        }
        let ratio = w.mass(b) / w.mass(&cube);
        if !(ratio >= c) {
            return Err(Error::Domain(format!(
                "box {b} carries a fraction {ratio} of its cube's mass, below {c}"
            )));
        }
        pieces.push((b.clone(), v));
    }
    let dist = box_distribution(&pieces, q, w)?;
    match r {
        None => lp_of_distribution(&dist, p),
        Some(r) => lorentz_of_distribution(&dist, p, r),
    }
}

/// Besov sequence quasi-norm
/// `(sum |lambda_m|^p)^{1/p} + sum_l (sum_j 2^{j(s-d/p)q} (sum_m |lambda^{j,l}_m|^p)^{q/p})^{1/q}`.
pub fn besov_seq_norm(lam: &CoeffSeq, s: f64, p: f64, q: f64) -> Result<f64> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let d = lam.dim() as f64;
    let inner = Aggregator::new(p);
    let outer = Aggregator::new(q);
    let father = inner.lower(lam.father().fold(0.0, |a, (_, v)| inner.combine(a, inner.lift(v))));
    // (l, j) -> inner sum
    let mut levels: BTreeMap<(usize, u32), f64> = BTreeMap::new();
    for (ell, j, _, v) in lam.mother() {
        let e = levels.entry((ell, j)).or_insert(0.0);
        *e = inner.combine(*e, inner.lift(v));
    }
    let mut fams: BTreeMap<usize, f64> = BTreeMap::new();
    for ((ell, j), sum) in levels {
        let dp = if p == f64::INFINITY { 0.0 } else { d / p };
        let val = (j as f64 * (s - dp)).exp2() * inner.lower(sum);
        let e = fams.entry(ell).or_insert(0.0);
        *e = outer.combine(*e, outer.lift(val));
    }
    Ok(father + fams.values().map(|&a| outer.lower(a)).sum::<f64>())
}

/// Pointwise values of `Lambda^s(lambda)` per box `E_{j,m}`: father entries
/// land on `E_{0,m}` with `|lambda_m|`, mother entries on `E_{j,m}` with
/// `2^{js} |lambda^{j,l}_m|`, and contributions on a common box add up.
pub fn lambda_s_values(lam: &CoeffSeq, s: f64) -> BTreeMap<(u32, Vec<i64>), f64> {
    let mut vals: BTreeMap<(u32, Vec<i64>), f64> = BTreeMap::new();
    for (m, v) in lam.father() {
        *vals.entry((0, m.clone())).or_insert(0.0) += v.abs();
    }
    for (_, j, m, v) in lam.mother() {
        *vals.entry((j, m.clone())).or_insert(0.0) += (j as f64 * s).exp2() * v.abs();
    }
    vals
}

/// `Lambda^s(lambda)` as a simple function on `R^{d+k}`.
pub fn lambda_s_build(lam: &CoeffSeq, s: f64, k: usize) -> Result<SimpleFunction> {
    let n = lam.dim() + k;
    let mut pieces = Vec::new();
    for ((j, m), v) in lambda_s_values(lam, s) {
        let e = EBox::new(DyadicCube::new(j, m), k)?;
        pieces.push((e.to_box(), v));
    }
    // E-boxes with distinct (j, m) are disjoint by construction
    SimpleFunction::from_pieces(n, pieces)
}

/// `(value, mass)` pairs of `Lambda^s(lambda)` under `|x_n|^beta`, using the
/// closed-form E-box mass of each level instead of box integration.
pub fn lambda_s_distribution(lam: &CoeffSeq, s: f64, beta: f64, k: usize) -> Vec<(f64, f64)> {
    let n = lam.dim() + k;
    let mut level_mass: HashMap<u32, f64> = HashMap::new();
    lambda_s_values(lam, s)
        .into_iter()
        .map(|((j, _), v)| {
            let m = *level_mass.entry(j).or_insert_with(|| e_box_mass(beta, j, n, k));
            (v, m)
        })
        .collect()
}

/// `|| Lambda^s(lambda) | L_{p,r}(R^{d+k}, |x_n|^beta) ||` from the
/// level-wise distribution function.
pub fn lambda_s_lorentz_codim(lam: &CoeffSeq, s: f64, p: f64, r: f64, beta: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("codimension must be at least 1".into()));
    }
    lorentz_of_distribution(&lambda_s_distribution(lam, s, beta, k), p, r)
}

/// `|| Lambda^s(lambda) | L_{p,r}(R^{d+1}, w_{alpha-1}) ||`, any real `alpha`.
pub fn lambda_s_lorentz_fast(lam: &CoeffSeq, s: f64, p: f64, r: f64, alpha: f64) -> Result<f64> {
    lambda_s_lorentz_codim(lam, s, p, r, alpha - 1.0, 1)
}

/// The same norm through [`lambda_s_build`] and box integration.
pub fn lambda_s_lorentz_direct(lam: &CoeffSeq, s: f64, p: f64, r: f64, beta: f64, k: usize) -> Result<f64> {
    let f = lambda_s_build(lam, s, k)?;
    lorentz_norm_discrete(&f, &Measure::Weight(WeightAlpha::off_hyperplane(beta)), p, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    fn single(j: u32, m: Vec<i64>, v: f64) -> FlatSeq {
        let mut s = FlatSeq::new(m.len());
        s.set(j, m, v).unwrap();
        s
    }

    #[test]
    fn besov_examples() {
        let mut lam = CoeffSeq::new(1, 3);
        lam.set_mother(2, 2, vec![0], 1.0).unwrap();
        assert!(close(besov_seq_norm(&lam, 0.5, 2.0, 2.0).unwrap(), 1.0, 1e-15));
        let mut lam = CoeffSeq::new(1, 0);
        lam.set_father(vec![0], 1.0).unwrap();
        lam.set_mother(2, 0, vec![0], 1.0).unwrap();
        assert!(close(besov_seq_norm(&lam, 0.0, 1.0, 1.0).unwrap(), 2.0, 1e-15));
        assert_eq!(besov_seq_norm(&CoeffSeq::new(2, 1), 1.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn f_seq_single_entries() {
        let w0 = WeightAlpha::unweighted();
        for p in [0.5, 1.0, 2.0, 3.5] {
            for q in [0.5, 1.0, f64::INFINITY] {
                assert!(close(f_seq_norm(&single(0, vec![3, 1], 1.0), p, q, &w0).unwrap(), 1.0, 1e-14));
                for j in 0..6 {
                    let v = f_seq_norm(&single(j, vec![1, -2], 1.0), p, q, &w0).unwrap();
                    assert!(close(v, 1.0, 1e-13), "{j} {p} {q} {v}");
                }
            }
        }
        let w = WeightAlpha::new(1.0).unwrap();
        for j in 0..6 {
            let q = DyadicCube::new(j, vec![2, 0]);
            let want = (2.0 * j as f64 / 2.0).exp2()
                * crate::dyadic::weight_mass_cube(&w, &q).powf(0.5);
            let got = f_seq_norm(&single(j, vec![2, 0], 1.0), 2.0, 1.0, &w).unwrap();
            assert!(close(got, want, 1e-14));
        }
    }

    #[test]
    fn disjoint_entries_ignore_q() {
        let mut s = FlatSeq::new(1);
        s.set(0, vec![0], 2.0).unwrap();
        s.set(0, vec![3], 5.0).unwrap();
        let w0 = WeightAlpha::unweighted();
        for q in [0.3, 1.0, 2.0, f64::INFINITY] {
            let v = f_seq_norm(&s, 3.0, q, &w0).unwrap();
            assert!(close(v, (8.0f64 + 125.0).cbrt(), 1e-14));
        }
    }

    #[test]
    fn nested_cubes_match_sweep() {
        let mut s = FlatSeq::new(2);
        s.set(0, vec![0, 0], 1.0).unwrap();
        s.set(1, vec![0, 0], 2.0).unwrap();
        s.set(2, vec![1, 0], -3.0).unwrap();
        s.set(2, vec![5, 5], 0.5).unwrap();
        let w = WeightAlpha::new(0.7).unwrap();
        for (p, q) in [(1.0, 1.0), (2.0, 0.5), (0.7, f64::INFINITY)] {
            let tree = cube_distribution(&s, p, q, &w, Scaling::Atomic).unwrap();
            let pieces: Vec<_> = s
                .iter()
                .map(|(j, m, v)| {
                    (
                        DyadicCube::new(j, m.clone()).to_box(),
                        v.abs() * (j as f64 * 2.0 / p).exp2(),
                    )
                })
                .collect();
            let sw = box_distribution(&pieces, q, &w).unwrap();
            let a = lp_of_distribution(&tree, p).unwrap();
            let b = lp_of_distribution(&sw, p).unwrap();
            assert!(close(a, b, 1e-13), "{a} {b}");
            let ta: f64 = tree.iter().map(|x| x.1).sum();
            let tb: f64 = sw.iter().map(|x| x.1).sum();
            assert!(close(ta, tb, 1e-13));
        }
    }

    #[test]
    fn lorentz_examples() {
        let b = DyadicCube::new(0, vec![0]).to_box();
        let f = SimpleFunction::from_pieces(1, vec![(b, 2.0)]).unwrap();
        let v = lorentz_of_distribution(&[(2.0, 3.0)], 2.0, 1.0).unwrap();
        assert!(close(v, 2.0 * 3f64.sqrt(), 1e-15));
        assert_eq!(lorentz_of_distribution(&[(0.0, 3.0)], 2.0, 1.0).unwrap(), 0.0);
        assert!(matches!(
            lorentz_norm_discrete(&f, &Measure::Counting, f64::INFINITY, 1.0),
            Err(Error::InfiniteP)
        ));
        let v = lorentz_of_distribution(&[(2.0, 3.0)], 2.0, f64::INFINITY).unwrap();
        assert!(close(v, 2.0 * 3f64.sqrt(), 1e-15));
    }

    #[test]
    fn fqlpr_single_entry() {
        let w0 = WeightAlpha::unweighted();
        for p in [1.0, 1.5, 3.0] {
            for j in 0..5 {
                let s = single(j, vec![0, 1], 1.0);
                let v = fqLpr_norm(&s, p, p, 2.0, &w0).unwrap();
                let want = p.powf(-1.0 / p) * (-(j as f64) * 2.0 / p).exp2();
                assert!(close(v, want, 1e-14));
            }
        }
        let w = WeightAlpha::new(0.5).unwrap();
        let s = single(1, vec![0, 0], 3.0);
        let w0m = crate::dyadic::weight_mass_cube(&w, &DyadicCube::new(1, vec![0, 0]));
        let v = fqLpr_norm(&s, 2.0, f64::INFINITY, 1.0, &w).unwrap();
        assert!(close(v, 3.0 * w0m.sqrt(), 1e-14));
    }

    #[test]
    fn equivalent_e_examples() {
        let w0 = WeightAlpha::unweighted();
        let mut s = FlatSeq::new(2);
        s.set(0, vec![0, 0], 1.0).unwrap();
        s.set(1, vec![1, 0], 2.0).unwrap();
        let full: BTreeMap<_, _> = s
            .iter()
            .map(|(j, m, _)| ((j, m.clone()), DyadicCube::new(j, m.clone()).to_box()))
            .collect();
        let a = equivalent_e_norm(&s, 2.0, 1.0, None, &w0, &full, 1.0, Scaling::Atomic).unwrap();
        let b = f_seq_norm(&s, 2.0, 1.0, &w0).unwrap();
        assert!(close(a, b, 1e-14));
        // half of one cube
        let one = single(0, vec![0, 0], 1.0);
        let q = DyadicCube::new(0, vec![0, 0]).to_box();
        let mut half = q.clone();
        half.intervals[0].hi = Dyadic::new(0, 0);
        let boxes: BTreeMap<_, _> = [((0u32, vec![0i64, 0]), half)].into_iter().collect();
        let v = equivalent_e_norm(&one, 3.0, 1.0, None, &w0, &boxes, 0.25, Scaling::Atomic).unwrap();
        assert!(close(v, 0.5f64.powf(1.0 / 3.0), 1e-14));
        let e = equivalent_e_norm(&FlatSeq::new(2), 3.0, 1.0, None, &w0, &boxes, 0.25, Scaling::Atomic);
        assert_eq!(e.unwrap(), 0.0);
        // not contained
        let boxes: BTreeMap<_, _> = [((0u32, vec![0i64, 0]), DyadicCube::new(0, vec![1, 0]).to_box())]
            .into_iter()
            .collect();
        assert!(matches!(
            equivalent_e_norm(&one, 3.0, 1.0, None, &w0, &boxes, 0.25, Scaling::Atomic),
            Err(Error::NotContained { .. })
        ));
    }

    #[test]
    fn lambda_s_examples() {
        let mut lam = CoeffSeq::new(1, 4);
        lam.set_father(vec![0], 1.0).unwrap();
        let f = lambda_s_build(&lam, 2.0, 1).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.pieces()[0].1, 1.0);
        let mut lam = CoeffSeq::new(1, 4);
        lam.set_mother(2, 3, vec![5], 1.0).unwrap();
        let f = lambda_s_build(&lam, 2.0, 1).unwrap();
        assert_eq!(f.pieces()[0].1, 64.0);
        assert!(lambda_s_build(&CoeffSeq::new(2, 3), 1.0, 1).unwrap().is_empty());
        assert_eq!(lambda_s_lorentz_fast(&CoeffSeq::new(2, 3), 1.0, 2.0, 1.0, 0.3).unwrap(), 0.0);
        for alpha in [-0.5, 0.0, 0.5, 2.0] {
            let mut lam = CoeffSeq::new(1, 0);
            lam.set_father(vec![4], 1.0).unwrap();
            let got = lambda_s_lorentz_fast(&lam, 1.0, 1.0, 1.0, alpha).unwrap();
            assert!(close(got, e_box_mass(alpha - 1.0, 0, 2, 1), 1e-15));
        }
    }
}
