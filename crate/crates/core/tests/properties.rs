use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;
use tracespace::dyadic::{weight_mass_cube, DyadicCube, EBox, WeightAlpha};
use tracespace::instances::{rng, InstanceModel};
use tracespace::interpolation::{
    k_curve, k_functional, k_functional_with, op_P_A, op_R, product_k, CurveOptions, FNorm, KOptions,
    LatticeCouple, LatticeNorm, NestedLp, ProductCouple, RetractBounds, SeqInterpolation,
};
use tracespace::norms::{besov_seq_norm, f_seq_norm, fqLpr_norm, fq_lp_norm, Scaling};
use tracespace::{CoeffSeq, FlatSeq};

fn small_model() -> InstanceModel {
    InstanceModel {
        window: 1,
        max_slots: 6,
        density: 0.5,
        log2_min: -4.0,
        log2_max: 4.0,
    }
}

fn flat(seed: u64, d: usize, j: u32) -> FlatSeq {
    small_model().flat_seq(&mut rng(seed), d, j)
}

fn coeffs(seed: u64, d: usize, j: u32) -> CoeffSeq {
    small_model().coeff_seq(&mut rng(seed), d, j)
}

/// `lam` with every entry magnified by a factor in `[1, 3]`.
fn dominating(lam: &FlatSeq, seed: u64) -> FlatSeq {
    let mut g = rng(seed);
    let mut out = FlatSeq::new(lam.dim());
    for (j, m, v) in lam.iter() {
        out.set(j, m.clone(), v * g.gen_range(1.0..3.0)).unwrap();
    }
    out
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(1.5), Just(2.0), Just(3.0), 0.6f64..4.0]
}

fn exponent_or_inf() -> impl Strategy<Value = f64> {
    prop_oneof![exponent(), Just(f64::INFINITY)]
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Every flat-sequence norm, as a closure over the sequence.
fn flat_norms(p: f64, q: f64, r: f64, alpha: f64) -> Vec<(&'static str, Box<dyn Fn(&FlatSeq) -> f64>)> {
    let w = WeightAlpha::new(alpha).unwrap();
    vec![
        ("f_seq", Box::new(move |l: &FlatSeq| f_seq_norm(l, p, q, &w).unwrap())),
        ("fq_lp", Box::new(move |l: &FlatSeq| fq_lp_norm(l, p, q, &w).unwrap())),
        ("fqLpr", Box::new(move |l: &FlatSeq| fqLpr_norm(l, p, r, q, &w).unwrap())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norms_are_homogeneous(
        seed in any::<u64>(), d in 1usize..=2, j in 0u32..=3,
        p in exponent(), q in exponent_or_inf(), r in exponent_or_inf(), alpha in -0.9f64..2.0,
        s in -1.0f64..3.0,
    ) {
        let lam = flat(seed, d, j);
        let b = coeffs(seed, d, j);
        for c in [-2.0, 1.0 / 3.0, 7.0] {
            for (name, n) in flat_norms(p, q, r, alpha) {
                let (a, e) = (n(&lam.scaled(c)), c.abs() * n(&lam));
                prop_assert!(rel(a, e) <= 1e-12, "{} c={}: {} vs {}", name, c, a, e);
            }
            let (a, e) = (besov_seq_norm(&b.scaled(c), s, p, q).unwrap(), c.abs() * besov_seq_norm(&b, s, p, q).unwrap());
            prop_assert!(rel(a, e) <= 1e-12);
        }
    }

    #[test]
    fn norms_are_monotone(
        seed in any::<u64>(), d in 1usize..=2, j in 0u32..=3,
        p in exponent(), q in exponent_or_inf(), r in exponent_or_inf(), alpha in -0.9f64..2.0,
    ) {
        let lam = flat(seed, d, j);
        let big = dominating(&lam, seed ^ 1);
        for (name, n) in flat_norms(p, q, r, alpha) {
            prop_assert!(n(&lam) <= n(&big) * (1.0 + 1e-12), "{}", name);
        }
        let b = coeffs(seed, d, j);
        let mut bigger = CoeffSeq::new(d, j);
        for (idx, v) in b.entries() {
            bigger.set(&idx, 1.5 * v).unwrap();
        }
        prop_assert!(besov_seq_norm(&b, 1.0, p, q).unwrap() <= besov_seq_norm(&bigger, 1.0, p, q).unwrap());
    }

    #[test]
    fn quasi_triangle(
        s1 in any::<u64>(), s2 in any::<u64>(), d in 1usize..=2, j in 0u32..=3,
        p in exponent(), q in exponent_or_inf(), r in exponent_or_inf(), alpha in -0.9f64..2.0,
    ) {
        let (a, b) = (flat(s1, d, j), flat(s2, d, j));
        let sum = a.add(&b);
        let c = (1.0 / p.min(q).min(r).min(1.0) - 1.0).max(0.0).exp2() * 2.0;
        for (name, n) in flat_norms(p, q, r, alpha) {
            prop_assert!(n(&sum) <= c * (n(&a) + n(&b)) * (1.0 + 1e-12), "{}", name);
        }
        let (x, y) = (coeffs(s1, d, j), coeffs(s2, d, j));
        let xy = x.add(&y).unwrap();
        let n = |l: &CoeffSeq| besov_seq_norm(l, 0.5, p, q).unwrap();
        prop_assert!(n(&xy) <= c * (n(&x) + n(&y)) * (1.0 + 1e-12));
    }

    #[test]
    fn lorentz_diagonal_factor(
        seed in any::<u64>(), d in 1usize..=2, j in 0u32..=4, p in exponent(), q in exponent_or_inf(),
        alpha in -0.9f64..2.0,
    ) {
        let lam = flat(seed, d, j);
        let w = WeightAlpha::new(alpha).unwrap();
        let a = fqLpr_norm(&lam, p, p, q, &w).unwrap();
        let b = p.powf(-1.0 / p) * fq_lp_norm(&lam, p, q, &w).unwrap();
        prop_assert!(rel(a, b) <= 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn cube_mass_is_additive(j in 0u32..=8, m in prop::collection::vec(-6i64..6, 1..=3), alpha in -0.9f64..3.0) {
        let w = WeightAlpha::new(alpha).unwrap();
        let cube = DyadicCube::new(j, m);
        let whole = weight_mass_cube(&w, &cube);
        let parts: f64 = cube.to_box().children().iter().map(|c| w.mass(c)).sum();
        prop_assert!(rel(whole, parts) <= 1e-12);
        prop_assert!(whole > 0.0);
    }

    #[test]
    fn e_boxes_are_disjoint(
        a in (0u32..=5, prop::collection::vec(-4i64..4, 1..=2)),
        b in (0u32..=5, prop::collection::vec(-4i64..4, 1..=2)),
        k in 1usize..=2,
    ) {
        prop_assume!(a.1.len() == b.1.len());
        let ea = EBox::new(DyadicCube::new(a.0, a.1.clone()), k).unwrap().to_box();
        let eb = EBox::new(DyadicCube::new(b.0, b.1.clone()), k).unwrap().to_box();
        prop_assert_eq!(ea.intersects(&eb), a == b);
    }

    #[test]
    fn retract_recovers_modulus(seed in any::<u64>(), d in 1usize..=2, j in 0u32..=4, a in 0.05f64..0.9) {
        let lam = flat(seed, d, j);
        let bounds = RetractBounds { p1: 1.0, p2: 2.0, q: 1.0, alpha: 0.0 };
        let back = op_P_A(&op_R(&lam), a, &bounds).unwrap();
        for (j, m, v) in lam.iter() {
            prop_assert!((back.get(j, m) - v.abs()).abs() <= 1e-12 * v.abs());
        }
    }

    #[test]
    fn subgradients_support_the_norm(
        seed in any::<u64>(), p in 1.0f64..4.0, q in prop_oneof![Just(1.0), Just(f64::INFINITY), 1.0f64..4.0],
        alpha in -0.5f64..1.5,
    ) {
        let lam = flat(seed, 1, 3);
        let cubes: Vec<(u32, Vec<i64>)> = lam.iter().map(|(j, m, _)| (j, m.clone())).collect();
        let w = WeightAlpha::new(alpha).unwrap();
        let f: Arc<dyn LatticeNorm> = Arc::new(FNorm::new(&cubes, p, q, &w, Scaling::Plain).unwrap());
        let b = coeffs(seed, 1, 3);
        let nested: Arc<dyn LatticeNorm> = Arc::new(tracespace::interpolation::besov_lattice(&b, 0.7, p, q).unwrap());
        let mut g = rng(seed ^ 7);
        for norm in [f, nested] {
            let n = norm.len();
            for zeros in [false, true] {
                let x: Vec<f64> = (0..n).map(|i| if zeros && i % 2 == 0 { 0.0 } else { g.gen_range(0.0..2.0) }).collect();
                let hint: Vec<f64> = (0..n).map(|_| g.gen_range(0.0..3.0)).collect();
                let sg = norm.subgradient(&x, &hint);
                let nx = norm.norm(&x);
                let dot: f64 = sg.iter().zip(&x).map(|(a, b)| a * b).sum();
                prop_assert!((dot - nx).abs() <= 1e-10 * nx.max(1e-300));
                for _ in 0..8 {
                    let y: Vec<f64> = (0..n).map(|_| g.gen_range(0.0..2.0)).collect();
                    let dy: f64 = sg.iter().zip(&y).map(|(a, b)| a * b).sum();
                    prop_assert!(dy <= norm.norm(&y) * (1.0 + 1e-10), "{} > {}", dy, norm.norm(&y));
                }
            }
        }
    }
}

fn lp_couple(w1: &[f64], p1: f64, w2: &[f64], p2: f64) -> LatticeCouple {
    LatticeCouple::new(
        Arc::new(NestedLp::weighted_lp(w1, p1).unwrap()),
        Arc::new(NestedLp::weighted_lp(w2, p2).unwrap()),
        ("A1".into(), "A2".into()),
    )
    .unwrap()
}

fn split_value(t: f64, a: &[f64], c: &LatticeCouple, th: &[f64]) -> f64 {
    let x1: Vec<f64> = a.iter().zip(th).map(|(a, u)| a * u).collect();
    let x2: Vec<f64> = a.iter().zip(th).map(|(a, u)| a * (1.0 - u)).collect();
    c.n1.norm(&x1) + t * c.n2.norm(&x2)
}

/// `min f` on `[0, 1]` for convex `f`, by ternary search.
fn ternary(f: &dyn Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..90 {
        let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    [0.0, 1.0, 0.5 * (lo + hi)].into_iter().map(f).fold(f64::INFINITY, f64::min)
}

/// Convex minimum by nesting one ternary search per coordinate; minimizing
/// out coordinates keeps the remaining function convex.
fn nested_minimum(t: f64, a: &[f64], c: &LatticeCouple) -> f64 {
    fn rec(th: &[f64], k: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        if k == th.len() {
            return f(th);
        }
        ternary(&|u| {
            let mut v = th.to_vec();
            v[k] = u;
            rec(&v, k + 1, f)
        })
    }
    rec(&vec![0.0; a.len()], 0, &|th| split_value(t, a, c, th))
}

/// Minimum of the split objective over a `steps^n` grid, zoomed in fifteen
/// times around the best point, fourfold each time.
fn grid_minimum(t: f64, a: &[f64], c: &LatticeCouple, steps: usize) -> f64 {
    let n = a.len();
    let f = |th: &[f64]| split_value(t, a, c, th);
    let (mut lo, mut hi) = (vec![0.0; n], vec![1.0; n]);
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for _ in 0..16 {
        let mut idx = vec![0usize; n];
        loop {
            let th: Vec<f64> = (0..n).map(|i| lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (steps - 1) as f64).collect();
            let v = f(&th);
            if v < best.0 {
                best = (v, th);
            }
            let mut i = 0;
            while i < n && idx[i] == steps - 1 {
                idx[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
            idx[i] += 1;
        }
        for i in 0..n {
            let h = (hi[i] - lo[i]) / 8.0;
            lo[i] = (best.1[i] - h).max(0.0);
            hi[i] = (best.1[i] + h).min(1.0);
        }
    }
    best.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn optimizer_beats_grid(
        a in prop::collection::vec(0.01f64..10.0, 1..=2),
        w1 in prop::collection::vec(0.2f64..5.0, 2),
        w2 in prop::collection::vec(0.2f64..5.0, 2),
        p1 in prop_oneof![Just(1.0), Just(1.5), Just(2.0)],
        p2 in prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(f64::INFINITY)],
        lt in -4.0f64..4.0,
    ) {
        let n = a.len();
        let c = lp_couple(&w1[..n], p1, &w2[..n], p2);
        let t = lt.exp2();
        let k = k_functional_with(t, &a, &c, &KOptions::default(), None).unwrap();
        let brute = grid_minimum(t, &a, &c, 41).min(nested_minimum(t, &a, &c));
        prop_assert!(rel(k.value, brute) <= 1e-6, "{} vs {}", k.value, brute);
        // ties inside a max slow descent down and leave the dual certificate loose
        if p2.is_finite() {
            prop_assert!(k.value <= brute * (1.0 + 1e-10), "{} > {}", k.value, brute);
            prop_assert!(k.gap <= 1e-8, "gap {}", k.gap);
        }
    }

    #[test]
    fn k_curve_has_the_right_shape(seed in any::<u64>(), p1 in 1.0f64..2.0, dp in 0.2f64..2.0, q in 1.0f64..3.0) {
        let lam = flat(seed, 1, 3);
        let (c, a) = LatticeCouple::f_couple(&lam, p1, p1 + dp, q, &WeightAlpha::unweighted()).unwrap();
        let opts = CurveOptions { points_per_octave: 8, ..CurveOptions::default() };
        let curve = k_curve(&a, &c, &opts).unwrap();
        prop_assert!(curve.shape_violation() <= 1e-10, "{}", curve.shape_violation());
    }

    #[test]
    fn product_k_is_the_sum(
        parts in prop::collection::vec(
            (prop::collection::vec(0.01f64..10.0, 1..=2), prop::collection::vec(0.2f64..5.0, 2),
             prop::collection::vec(0.2f64..5.0, 2), prop_oneof![Just(1.0), Just(2.0)], prop_oneof![Just(1.5), Just(3.0)]),
            1..=3),
        lt in -3.0f64..3.0,
    ) {
        let t = lt.exp2();
        let mut comps = Vec::new();
        let mut seqs = Vec::new();
        let mut sum = 0.0;
        for (a, w1, w2, p1, p2) in &parts {
            let n = a.len();
            let c = lp_couple(&w1[..n], *p1, &w2[..n], *p2);
            sum += k_functional(t, a, &c).unwrap();
            comps.push(c);
            seqs.push(a.clone());
        }
        let joint = product_k(t, &seqs, &ProductCouple::new(comps)).unwrap();
        prop_assert!(rel(joint, sum) <= 1e-6, "{} vs {}", joint, sum);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn certification_ratio_is_scale_invariant(seed in any::<u64>(), alpha in -0.5f64..1.0) {
        let lam = flat(seed, 1, 3);
        let cfg = SeqInterpolation { p1: 1.0, p2: 2.0, theta: 0.5, r: 3.0, q: 1.0, alpha };
        let opts = CurveOptions { points_per_octave: 8, ..CurveOptions::default() };
        let (l1, r1, _) = cfg.evaluate(&lam, &opts).unwrap();
        let (l2, r2, _) = cfg.evaluate(&lam.scaled(10.0), &opts).unwrap();
        prop_assert!(rel(l1 / r1, l2 / r2) <= 1e-6, "{} vs {}", l1 / r1, l2 / r2);
    }
}
