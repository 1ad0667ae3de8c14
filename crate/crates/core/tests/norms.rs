use std::collections::BTreeMap;

use rand::Rng;
use tracespace::dyadic::{Dyadic, DyadicBox, DyadicCube, WeightAlpha};
use tracespace::instances::{rng, InstanceModel};
use tracespace::norms::{
    equivalent_e_norm, f_seq_norm, lambda_s_lorentz_codim, lambda_s_lorentz_direct, lambda_s_lorentz_fast, Scaling,
};
use tracespace::FlatSeq;

/// Per entry either the whole cube or a half of it, cut across a random
/// axis, whenever that half keeps at least a quarter of the weighted mass.
fn e_boxes(lam: &FlatSeq, w: &WeightAlpha, g: &mut impl Rng) -> BTreeMap<(u32, Vec<i64>), DyadicBox> {
    lam.iter()
        .map(|(j, m, _)| {
            let q = DyadicCube::new(j, m.clone()).to_box();
            let mut e = q.clone();
            if g.gen_bool(0.75) {
                let r = g.gen_range(0..m.len());
                let mid = Dyadic::new(2 * m[r] as i128, j + 1);
                if g.gen_bool(0.5) {
                    e.intervals[r].hi = mid;
                } else {
                    e.intervals[r].lo = mid;
                }
                if w.mass(&e) < 0.25 * w.mass(&q) {
                    e = q;
                }
            }
            ((j, m.clone()), e)
        })
        .collect()
}

#[test]
fn e_norm_ratio_does_not_drift_with_j() {
    let model = InstanceModel::default();
    for (d, p, q, alpha) in [(1usize, 2.0, 2.0, 0.0), (2, 1.5, 1.0, 1.0), (2, 3.0, f64::INFINITY, -0.5)] {
        let w = WeightAlpha::new(alpha).unwrap();
        let mut widths = Vec::new();
        for j in 2..=8u32 {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..40u64 {
                let mut g = rng(7000 + 100 * j as u64 + i);
                let lam = model.flat_seq(&mut g, d, j);
                if lam.is_empty() {
                    continue;
                }
                let boxes = e_boxes(&lam, &w, &mut g);
                let e = equivalent_e_norm(&lam, p, q, None, &w, &boxes, 0.25, Scaling::Atomic).unwrap();
                let ratio = e / f_seq_norm(&lam, p, q, &w).unwrap();
                // E inside Q: the E-norm never exceeds the f-norm
                assert!(ratio <= 1.0 + 1e-12, "{ratio}");
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            widths.push(hi / lo);
        }
        assert!(widths.windows(2).any(|w| w[1] <= w[0]), "range grows with every J: {widths:?}");
        assert!(widths[widths.len() - 1] <= 1.5 * widths[0], "{widths:?}");
    }
}

#[test]
fn lambda_s_fast_matches_direct() {
    let model = InstanceModel::default();
    let mut g = rng(31);
    for i in 0..50 {
        let d = 1 + i % 2;
        let j = g.gen_range(0..=5u32);
        let lam = model.coeff_seq(&mut g, d, j);
        let s = g.gen_range(0.5..4.0);
        let p = g.gen_range(0.5..4.0);
        let r = if i % 7 == 0 { f64::INFINITY } else { g.gen_range(0.5..4.0) };
        let beta = g.gen_range(-0.9..2.0);
        let k = 1 + i % 2;
        let fast = lambda_s_lorentz_codim(&lam, s, p, r, beta, k).unwrap();
        let direct = lambda_s_lorentz_direct(&lam, s, p, r, beta, k).unwrap();
        assert!((fast - direct).abs() <= 1e-12 * fast.abs().max(direct.abs()), "{fast} vs {direct}");
        if k == 1 {
            let v = lambda_s_lorentz_fast(&lam, s, p, r, beta + 1.0).unwrap();
            assert!((v - fast).abs() <= 1e-12 * fast.abs(), "{v} vs {fast}");
        }
    }
}
