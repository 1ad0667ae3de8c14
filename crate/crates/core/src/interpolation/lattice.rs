//! Lattice quasi-norms on non-negative vectors and the couples built from
//! them.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::dyadic::WeightAlpha;
use crate::error::{Error, Result};
use crate::norms::{check_exponent, check_p, cube_regions, Aggregator, Region, Scaling};
use crate::seq::{CoeffSeq, FlatSeq};

/// A quasi-norm on `[0, inf)^N` that is monotone in every coordinate and
/// positively homogeneous.
pub trait LatticeNorm: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn norm(&self, x: &[f64]) -> f64;

    /// `v |-> norm(x with x_i = v)`, with everything that does not depend on
    /// `x_i` precomputed.
    fn section<'a>(&'a self, x: &[f64], i: usize) -> Box<dyn Fn(f64) -> f64 + 'a>;

    /// Whether the norm is convex (all exponents at least one).
    fn is_convex(&self) -> bool;

    /// A non-negative subgradient `g` at `x`, so `<g, x> = norm(x)` and the
    /// dual norm of `g` is at most one. Where the subdifferential is not a
    /// point, `hint` cut back into the dual ball is used. Convex norms only.
    fn subgradient(&self, x: &[f64], hint: &[f64]) -> Vec<f64>;

    /// Coordinate sets on which the norm has a cone point at zero.
    fn kink_groups(&self) -> Vec<Vec<usize>> {
        Vec::new()
    }
}

/// `p / (p - 1)`.
fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p == f64::INFINITY {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn lp(v: impl Iterator<Item = f64>, p: f64) -> f64 {
    let agg = Aggregator::new(p);
    agg.lower(v.fold(0.0, |a, x| agg.combine(a, agg.lift(x))))
}

/// Derivative of `v |-> ||v||_p` at `v` with `||v||_p = n > 0`, entry `x`.
fn lp_partial(x: f64, n: f64, p: f64, share: f64) -> f64 {
    if p == f64::INFINITY {
        share
    } else if p == 1.0 {
        1.0
    } else {
        (x / n).powf(p - 1.0)
    }
}

/// Weights of a subgradient of `max_i v_i`. The entries within a relative
/// `1e-5` of the maximum are filled up to `cap_i` in increasing order of
/// `cap_i`; the last one takes what is left, so the weights sum to one.
/// Without caps the first exact maximum gets everything.
fn max_shares(v: &[f64], cap: &[f64]) -> Vec<f64> {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<usize> = (0..v.len()).filter(|&i| v[i] >= top * (1.0 - 1e-5)).collect();
    if tied.iter().all(|&i| !(cap[i] > 0.0)) {
        tied = v.iter().position(|&x| x == top).into_iter().collect();
    }
    tied.sort_by(|&i, &j| cap[i].total_cmp(&cap[j]));
    let mut out = vec![0.0; v.len()];
    let mut left = 1.0;
    for (k, &i) in tied.iter().enumerate() {
        let s = if k + 1 == tied.len() { left } else { cap[i].clamp(0.0, left) };
        out[i] = s;
        left -= s;
    }
    out
}

/// Scales `v` by `min(1, 1 / norm)`.
fn cap(v: &mut [f64], norm: f64) {
    if norm > 1.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// One level of a [`Block`]: `weight * ||x_coords||_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub weight: f64,
    pub coords: Vec<usize>,
}

/// `( sum_L (w_L ||x_L||_p)^q )^{1/q}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub p: f64,
    pub q: f64,
    pub levels: Vec<Level>,
}

/// Sum of block norms. Covers weighted `l_p` and Besov sequence norms.
#[derive(Clone, Debug)]
pub struct NestedLp {
    len: usize,
    blocks: Vec<Block>,
    owner: Vec<(usize, usize)>,
}

impl NestedLp {
    /// Every coordinate `0..len` must appear in exactly one level.
    pub fn new(len: usize, blocks: Vec<Block>) -> Result<Self> {
        let mut owner = vec![None; len];
        for (b, blk) in blocks.iter().enumerate() {
            check_exponent("p", blk.p)?;
            check_exponent("q", blk.q)?;
            for (l, lev) in blk.levels.iter().enumerate() {
                if !(lev.weight > 0.0) || !lev.weight.is_finite() {
                    return Err(Error::Domain(format!("level weight {} must be positive", lev.weight)));
                }
                for &i in &lev.coords {
                    match owner.get_mut(i) {
                        Some(slot @ None) => *slot = Some((b, l)),
                        Some(Some(_)) => return Err(Error::Index(format!("coordinate {i} listed twice"))),
                        None => return Err(Error::Index(format!("coordinate {i} out of range {len}"))),
                    }
                }
            }
        }
        let owner = owner
            .into_iter()
            .enumerate()
            .map(|(i, o)| o.ok_or_else(|| Error::Index(format!("coordinate {i} not covered"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(NestedLp { len, blocks, owner })
    }

    /// `( sum_i (w_i x_i)^p )^{1/p}`.
    pub fn weighted_lp(weights: &[f64], p: f64) -> Result<Self> {
        let levels = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| Level { weight: w, coords: vec![i] })
            .collect();
        NestedLp::new(weights.len(), vec![Block { p, q: p, levels }])
    }

    fn level_value(blk: &Block, lev: &Level, x: &[f64], skip: Option<usize>) -> f64 {
        let agg = Aggregator::new(blk.p);
        let s = lev
            .coords
            .iter()
            .filter(|&&i| Some(i) != skip)
            .fold(0.0, |a, &i| agg.combine(a, agg.lift(x[i])));
        s
    }

    fn block_norm(blk: &Block, x: &[f64]) -> f64 {
        let inner = Aggregator::new(blk.p);
        let outer = Aggregator::new(blk.q);
        let s = blk.levels.iter().fold(0.0, |a, lev| {
            let v = lev.weight * inner.lower(Self::level_value(blk, lev, x, None));
            outer.combine(a, outer.lift(v))
        });
        outer.lower(s)
    }
}

impl LatticeNorm for NestedLp {
    fn len(&self) -> usize {
        self.len
    }

    fn norm(&self, x: &[f64]) -> f64 {
        self.blocks.iter().map(|b| Self::block_norm(b, x)).sum()
    }

    fn section<'a>(&'a self, x: &[f64], i: usize) -> Box<dyn Fn(f64) -> f64 + 'a> {
        let (b, l) = self.owner[i];
        let blk = &self.blocks[b];
        let others: f64 = self
            .blocks
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != b)
            .map(|(_, bb)| Self::block_norm(bb, x))
            .sum();
        let inner = Aggregator::new(blk.p);
        let outer = Aggregator::new(blk.q);
        let rest_levels = blk
            .levels
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != l)
            .fold(0.0, |a, (_, lev)| {
                let v = lev.weight * inner.lower(Self::level_value(blk, lev, x, None));
                outer.combine(a, outer.lift(v))
            });
        let lev = &blk.levels[l];
        let rest = Self::level_value(blk, lev, x, Some(i));
        let weight = lev.weight;
        Box::new(move |v| {
            let lv = weight * inner.lower(inner.combine(rest, inner.lift(v)));
            others + outer.lower(outer.combine(rest_levels, outer.lift(lv)))
        })
    }

    fn is_convex(&self) -> bool {
        self.blocks.iter().all(|b| b.p >= 1.0 && b.q >= 1.0)
    }

    fn subgradient(&self, x: &[f64], hint: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.len];
        for blk in &self.blocks {
            let (pp, qq) = (conjugate(blk.p), conjugate(blk.q));
            let n: Vec<f64> = blk
                .levels
                .iter()
                .map(|l| lp(l.coords.iter().map(|&i| x[i]), blk.p))
                .collect();
            let b = lp(blk.levels.iter().zip(&n).map(|(l, n)| l.weight * n), blk.q);
            if b == 0.0 {
                let mut h: Vec<f64> = Vec::new();
                for l in &blk.levels {
                    h.extend(l.coords.iter().map(|&i| hint[i]));
                }
                let dual = lp(
                    blk.levels
                        .iter()
                        .map(|l| lp(l.coords.iter().map(|&i| hint[i]), pp) / l.weight),
                    qq,
                );
                cap(&mut h, dual);
                let mut k = 0;
                for l in &blk.levels {
                    for &i in &l.coords {
                        g[i] = h[k];
                        k += 1;
                    }
                }
                continue;
            }
            let outer_shares = if blk.q == f64::INFINITY {
                let v: Vec<f64> = blk.levels.iter().zip(&n).map(|(l, n)| l.weight * n).collect();
                let cap: Vec<f64> = blk
                    .levels
                    .iter()
                    .map(|l| lp(l.coords.iter().map(|&i| hint[i]), pp) / l.weight)
                    .collect();
                max_shares(&v, &cap)
            } else {
                Vec::new()
            };
            for (m, (l, &nl)) in blk.levels.iter().zip(&n).enumerate() {
                let outer = if blk.q == 1.0 {
                    1.0
                } else {
                    lp_partial(l.weight * nl, b, blk.q, outer_shares.get(m).copied().unwrap_or(0.0))
                };
                let c = outer * l.weight;
                if c == 0.0 {
                    continue;
                }
                if nl == 0.0 && blk.p != 1.0 {
                    let mut h: Vec<f64> = l.coords.iter().map(|&i| hint[i] / c).collect();
                    let dual = lp(h.iter().copied(), pp);
                    cap(&mut h, dual);
                    for (&i, v) in l.coords.iter().zip(h) {
                        g[i] = c * v;
                    }
                } else {
                    let shares = if blk.p == f64::INFINITY {
                        let v: Vec<f64> = l.coords.iter().map(|&i| x[i]).collect();
                        let cap: Vec<f64> = l.coords.iter().map(|&i| hint[i] / c).collect();
                        max_shares(&v, &cap)
                    } else {
                        vec![0.0; l.coords.len()]
                    };
                    for (k, &i) in l.coords.iter().enumerate() {
                        g[i] = c * lp_partial(x[i], nl, blk.p, shares[k]);
                    }
                }
            }
        }
        g
    }

    fn kink_groups(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for blk in &self.blocks {
            if blk.p == 1.0 && blk.q == 1.0 {
                continue;
            }
            let all: Vec<usize> = blk.levels.iter().flat_map(|l| l.coords.iter().copied()).collect();
            if all.len() > 1 {
                out.push(all);
            }
            // ||x_L||_p^q is smooth at zero when q > 1
            if blk.q <= 1.0 && blk.p != 1.0 {
                out.extend(blk.levels.iter().filter(|l| l.coords.len() > 1).map(|l| l.coords.clone()));
            }
        }
        out
    }
}

/// `|| (sum_e |c_e x_e chi_{Q_e}|^q)^{1/q} | L_p(w) ||` for a fixed list of
/// cubes `Q_e`, evaluated on the exact region arrangement.
#[derive(Clone, Debug)]
pub struct FNorm {
    p: f64,
    q: f64,
    scale: Vec<f64>,
    regions: Vec<Region>,
    by_entry: Vec<Vec<usize>>,
}

impl FNorm {
    pub fn new(cubes: &[(u32, Vec<i64>)], p: f64, q: f64, w: &WeightAlpha, scaling: Scaling) -> Result<Self> {
        check_p(p)?;
        check_exponent("q", q)?;
        // regions covered by the same entries only differ in mass
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for mut reg in cube_regions(cubes, w) {
            reg.covering.sort_unstable();
            *merged.entry(reg.covering).or_default() += reg.mass;
        }
        let regions: Vec<Region> = merged
            .into_iter()
            .map(|(covering, mass)| Region { mass, covering })
            .collect();
        let mut by_entry = vec![Vec::new(); cubes.len()];
        for (r, reg) in regions.iter().enumerate() {
            for &e in &reg.covering {
                by_entry[e].push(r);
            }
        }
        let scale = cubes
            .iter()
            .map(|(j, m)| match scaling {
                Scaling::Plain => 1.0,
                Scaling::Atomic => (*j as f64 * m.len() as f64 / p).exp2(),
            })
            .collect();
        Ok(FNorm {
            p,
            q,
            scale,
            regions,
            by_entry,
        })
    }

    fn region_agg(&self, reg: &Region, x: &[f64], skip: Option<usize>) -> f64 {
        let agg = Aggregator::new(self.q);
        reg.covering
            .iter()
            .filter(|&&e| Some(e) != skip)
            .fold(0.0, |a, &e| agg.combine(a, agg.lift(self.scale[e] * x[e])))
    }

    fn contribution(&self, mass: f64, agg_value: f64) -> f64 {
        if self.q == f64::INFINITY {
            mass * agg_value.powf(self.p)
        } else if self.q == self.p {
            mass * agg_value
        } else {
            mass * agg_value.powf(self.p / self.q)
        }
    }
}

impl LatticeNorm for FNorm {
    fn len(&self) -> usize {
        self.scale.len()
    }

    fn norm(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .regions
            .iter()
            .map(|reg| self.contribution(reg.mass, self.region_agg(reg, x, None)))
            .sum();
        s.powf(1.0 / self.p)
    }

    fn section<'a>(&'a self, x: &[f64], i: usize) -> Box<dyn Fn(f64) -> f64 + 'a> {
        let mine = &self.by_entry[i];
        let mut fixed = 0.0;
        let mut k = 0;
        for (r, reg) in self.regions.iter().enumerate() {
            if k < mine.len() && mine[k] == r {
                k += 1;
            } else {
                fixed += self.contribution(reg.mass, self.region_agg(reg, x, None));
            }
        }
        let rests: Vec<(f64, f64)> = mine
            .iter()
            .map(|&r| (self.regions[r].mass, self.region_agg(&self.regions[r], x, Some(i))))
            .collect();
        let agg = Aggregator::new(self.q);
        let c = self.scale[i];
        Box::new(move |v| {
            let lifted = agg.lift(c * v);
            let s: f64 = rests
                .iter()
                .map(|&(m, rest)| self.contribution(m, agg.combine(rest, lifted)))
                .sum();
            (fixed + s).powf(1.0 / self.p)
        })
    }

    fn is_convex(&self) -> bool {
        self.p >= 1.0 && self.q >= 1.0
    }

    fn subgradient(&self, x: &[f64], hint: &[f64]) -> Vec<f64> {
        let n = self.len();
        let (pp, qq) = (conjugate(self.p), conjugate(self.q));
        let inv_p = 1.0 / self.p;
        let r: Vec<f64> = self
            .regions
            .iter()
            .map(|reg| Aggregator::new(self.q).lower(self.region_agg(reg, x, None)))
            .collect();
        let total = self.norm(x);
        let mut g = vec![0.0; n];
        if total == 0.0 {
            // spread hint_e over Q_e in proportion to the region masses
            let mass: Vec<f64> = self
                .by_entry
                .iter()
                .map(|rs| rs.iter().map(|&k| self.regions[k].mass).sum())
                .collect();
            let u = self.regions.iter().map(|reg| {
                let rho = lp(
                    reg.covering
                        .iter()
                        .map(|&e| hint[e] * reg.mass / mass[e] / self.scale[e]),
                    qq,
                );
                rho / reg.mass.powf(inv_p)
            });
            g.copy_from_slice(hint);
            cap(&mut g, lp(u, pp));
            return g;
        }
        for (reg, &rr) in self.regions.iter().zip(&r) {
            let v = reg.mass.powf(inv_p) * rr;
            let outer = if self.p == 1.0 {
                1.0
            } else if v == 0.0 {
                0.0
            } else {
                (v / total).powf(self.p - 1.0)
            };
            let c = outer * reg.mass.powf(inv_p);
            if c == 0.0 {
                continue;
            }
            if rr == 0.0 && self.q != 1.0 {
                let mut h: Vec<f64> = reg.covering.iter().map(|&e| hint[e] / (c * self.scale[e])).collect();
                let dual = lp(h.iter().copied(), qq);
                cap(&mut h, dual);
                for (&e, v) in reg.covering.iter().zip(h) {
                    g[e] += c * self.scale[e] * v;
                }
            } else {
                let shares = if self.q == f64::INFINITY {
                    let v: Vec<f64> = reg.covering.iter().map(|&e| self.scale[e] * x[e]).collect();
                    let cap: Vec<f64> = reg.covering.iter().map(|&e| hint[e] / (c * self.scale[e])).collect();
                    max_shares(&v, &cap)
                } else {
                    vec![0.0; reg.covering.len()]
                };
                for (k, &e) in reg.covering.iter().enumerate() {
                    g[e] += c * self.scale[e] * lp_partial(self.scale[e] * x[e], rr, self.q, shares[k]);
                }
            }
        }
        g
    }

    fn kink_groups(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        if self.p == 1.0 && self.q == 1.0 {
            return out;
        }
        // region terms ||x_R||_q^p are smooth at zero when p > 1
        if self.p <= 1.0 && self.q != 1.0 {
            let set: BTreeSet<Vec<usize>> = self
                .regions
                .iter()
                .filter(|r| r.covering.len() > 1)
                .map(|r| {
                    let mut c = r.covering.clone();
                    c.sort_unstable();
                    c
                })
                .collect();
            out.extend(set);
        }
        if self.len() > 1 {
            out.push((0..self.len()).collect());
        }
        out
    }
}

/// Sum of component norms on consecutive coordinate ranges.
#[derive(Clone)]
pub struct ProductNorm {
    parts: Vec<Arc<dyn LatticeNorm>>,
    offsets: Vec<usize>,
}

impl ProductNorm {
    pub fn new(parts: Vec<Arc<dyn LatticeNorm>>) -> Self {
        let mut offsets = Vec::with_capacity(parts.len() + 1);
        let mut o = 0;
        offsets.push(0);
        for p in &parts {
            o += p.len();
            offsets.push(o);
        }
        ProductNorm { parts, offsets }
    }

    fn locate(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }
}

impl LatticeNorm for ProductNorm {
    fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn norm(&self, x: &[f64]) -> f64 {
        self.parts
            .iter()
            .enumerate()
            .map(|(c, p)| p.norm(&x[self.offsets[c]..self.offsets[c + 1]]))
            .sum()
    }

    fn section<'a>(&'a self, x: &[f64], i: usize) -> Box<dyn Fn(f64) -> f64 + 'a> {
        let c = self.locate(i);
        let others: f64 = self
            .parts
            .iter()
            .enumerate()
            .filter(|&(d, _)| d != c)
            .map(|(d, p)| p.norm(&x[self.offsets[d]..self.offsets[d + 1]]))
            .sum();
        let inner = self.parts[c].section(&x[self.offsets[c]..self.offsets[c + 1]], i - self.offsets[c]);
        Box::new(move |v| others + inner(v))
    }

    fn is_convex(&self) -> bool {
        self.parts.iter().all(|p| p.is_convex())
    }

    fn subgradient(&self, x: &[f64], hint: &[f64]) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.len());
        for (c, p) in self.parts.iter().enumerate() {
            let r = self.offsets[c]..self.offsets[c + 1];
            g.extend(p.subgradient(&x[r.clone()], &hint[r]));
        }
        g
    }

    fn kink_groups(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for (c, p) in self.parts.iter().enumerate() {
            let o = self.offsets[c];
            for g in p.kink_groups() {
                out.push(g.into_iter().map(|i| i + o).collect());
            }
            if p.len() > 1 {
                out.push((o..self.offsets[c + 1]).collect());
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Two lattice quasi-norms on a common index set.
#[derive(Clone)]
pub struct LatticeCouple {
    pub n1: Arc<dyn LatticeNorm>,
    pub n2: Arc<dyn LatticeNorm>,
    pub labels: (String, String),
}

impl std::fmt::Debug for LatticeCouple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LatticeCouple({}, {}; len {})", self.labels.0, self.labels.1, self.len())
    }
}

impl LatticeCouple {
    pub fn new(n1: Arc<dyn LatticeNorm>, n2: Arc<dyn LatticeNorm>, labels: (String, String)) -> Result<Self> {
        if n1.len() != n2.len() {
            return Err(Error::Index(format!("norms act on {} and {} coordinates", n1.len(), n2.len())));
        }
        Ok(LatticeCouple { n1, n2, labels })
    }

    pub fn len(&self) -> usize {
        self.n1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_convex(&self) -> bool {
        self.n1.is_convex() && self.n2.is_convex()
    }

    /// The couple `(A, A)`.
    pub fn diagonal(n: Arc<dyn LatticeNorm>, label: &str) -> Self {
        LatticeCouple {
            n1: n.clone(),
            n2: n,
            labels: (label.to_string(), label.to_string()),
        }
    }

    /// `(f_{p1,q}(w_alpha), f_{p2,q}(w_alpha))` on the support of `lam`,
    /// together with `|lam|` in coordinate order.
    pub fn f_couple(lam: &FlatSeq, p1: f64, p2: f64, q: f64, w: &WeightAlpha) -> Result<(Self, Vec<f64>)> {
        let cubes: Vec<(u32, Vec<i64>)> = lam.iter().map(|(j, m, _)| (j, m.clone())).collect();
        let a: Vec<f64> = lam.iter().map(|(_, _, v)| v.abs()).collect();
        let n1 = FNorm::new(&cubes, p1, q, w, Scaling::Plain)?;
        let n2 = FNorm::new(&cubes, p2, q, w, Scaling::Plain)?;
        let c = LatticeCouple::new(
            Arc::new(n1),
            Arc::new(n2),
            (format!("f_{{{p1},{q}}}"), format!("f_{{{p2},{q}}}")),
        )?;
        Ok((c, a))
    }

    /// `(b^{s1}_{p1,q1}, b^{s2}_{p2,q2})` on the support of `lam`, together
    /// with `|lam|` in the order of [`CoeffSeq::entries`].
    pub fn besov_couple(lam: &CoeffSeq, e1: (f64, f64, f64), e2: (f64, f64, f64)) -> Result<(Self, Vec<f64>)> {
        let n1 = besov_lattice(lam, e1.0, e1.1, e1.2)?;
        let n2 = besov_lattice(lam, e2.0, e2.1, e2.2)?;
        let a = lam.entries().into_iter().map(|(_, v)| v.abs()).collect();
        let c = LatticeCouple::new(
            Arc::new(n1),
            Arc::new(n2),
            (
                format!("b^{{{}}}_{{{},{}}}", e1.0, e1.1, e1.2),
                format!("b^{{{}}}_{{{},{}}}", e2.0, e2.1, e2.2),
            ),
        )?;
        Ok((c, a))
    }
}

/// The Besov sequence norm of [`crate::norms::besov_seq_norm`] as a lattice
/// norm over the entries of `lam`.
pub fn besov_lattice(lam: &CoeffSeq, s: f64, p: f64, q: f64) -> Result<NestedLp> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let d = lam.dim() as f64;
    let nf = lam.father().count();
    let mut blocks = Vec::new();
    if nf > 0 {
        blocks.push(Block {
            p,
            q: p,
            levels: vec![Level {
                weight: 1.0,
                coords: (0..nf).collect(),
            }],
        });
    }
    let mut fams: BTreeMap<usize, BTreeMap<u32, Vec<usize>>> = BTreeMap::new();
    for (i, (ell, j, _, _)) in lam.mother().enumerate() {
        fams.entry(ell).or_default().entry(j).or_default().push(nf + i);
    }
    let dp = if p == f64::INFINITY { 0.0 } else { d / p };
    for (_, levels) in fams {
        blocks.push(Block {
            p,
            q,
            levels: levels
                .into_iter()
                .map(|(j, coords)| Level {
                    weight: (j as f64 * (s - dp)).exp2(),
                    coords,
                })
                .collect(),
        });
    }
    NestedLp::new(lam.len(), blocks)
}

/// Components `(A^1_l, A^2_l)` whose product is normed by the sum.
#[derive(Clone, Debug)]
pub struct ProductCouple {
    pub components: Vec<LatticeCouple>,
}

impl ProductCouple {
    pub fn new(components: Vec<LatticeCouple>) -> Self {
        ProductCouple { components }
    }

    /// The couple `(prod A^1_l, prod A^2_l)` on the concatenated index set.
    pub fn concatenated(&self) -> LatticeCouple {
        let n1 = ProductNorm::new(self.components.iter().map(|c| c.n1.clone()).collect());
        let n2 = ProductNorm::new(self.components.iter().map(|c| c.n2.clone()).collect());
        LatticeCouple {
            n1: Arc::new(n1),
            n2: Arc::new(n2),
            labels: ("prod A1".into(), "prod A2".into()),
        }
    }
}
