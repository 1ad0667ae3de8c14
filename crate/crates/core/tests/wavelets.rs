use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracespace::wavelets::{build_system, coeff_l2_norm, family, Factor, GridSpec, WaveletSystem};
use tracespace::CoeffSeq;

/// Dense coefficients, uniform in [-1, 1], on the window `[0, w)^d`.
fn random_coeffs(d: usize, j_max: u32, w: i64, seed: u64) -> CoeffSeq {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lam = CoeffSeq::new(d, j_max);
    let each = |hi: i64, f: &mut dyn FnMut(Vec<i64>)| {
        let count = (hi as usize).pow(d as u32);
        for flat in 0..count {
            let mut m = vec![0i64; d];
            let mut rem = flat;
            for r in 0..d {
                m[r] = (rem % hi as usize) as i64;
                rem /= hi as usize;
            }
            f(m);
        }
    };
    each(w, &mut |m| lam.set_father(m, rng.gen_range(-1.0..1.0)).unwrap());
    for j in 0..=j_max {
        for ell in 2..=1usize << d {
            each(w << j, &mut |m| lam.set_mother(ell, j, m, rng.gen_range(-1.0..1.0)).unwrap());
        }
    }
    lam
}

fn grid_for(sys: &WaveletSystem, g: u32, w: i64) -> GridSpec {
    let d = sys.d;
    GridSpec::covering(g, &vec![0; d], &vec![w + sys.filter_len() - 1; d]).unwrap()
}

#[test]
fn roundtrip_1d() {
    let sys = build_system(6, 1).unwrap();
    for j_max in 0..=4 {
        let lam = random_coeffs(1, j_max, 2, 10 + j_max as u64);
        let grid = grid_for(&sys, j_max + 6, 2);
        let f = sys.synthesize(&lam, &grid).unwrap();
        let back = sys.analyze(&f, j_max, &[0], &[2]).unwrap();
        let err = back.max_abs_diff(&lam);
        assert!(err <= 1e-6, "J = {j_max}: {err:e}");
        let parseval = (f.l2_norm() - coeff_l2_norm(&lam)).abs();
        assert!(parseval <= 1e-4, "{parseval:e}");
    }
}

#[test]
fn roundtrip_error_decreases_with_resolution() {
    let sys = build_system(4, 1).unwrap();
    let j_max = 3;
    let lam = random_coeffs(1, j_max, 2, 7);
    let errs: Vec<f64> = (j_max + 4..=j_max + 8)
        .map(|g| {
            let f = sys.synthesize(&lam, &grid_for(&sys, g, 2)).unwrap();
            sys.analyze(&f, j_max, &[0], &[2]).unwrap().max_abs_diff(&lam)
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
}

#[test]
fn roundtrip_2d() {
    let sys = build_system(6, 2).unwrap();
    let j_max = 4;
    let lam = random_coeffs(2, j_max, 1, 99);
    let grid = grid_for(&sys, j_max + 6, 1);
    let f = sys.synthesize(&lam, &grid).unwrap();
    let back = sys.analyze(&f, j_max, &[0, 0], &[1, 1]).unwrap();
    let err = back.max_abs_diff(&lam);
    assert!(err <= 1e-6, "{err:e}");
    let parseval = (f.l2_norm() - coeff_l2_norm(&lam)).abs();
    assert!(parseval <= 1e-4, "{parseval:e}");
}

#[test]
fn linearity_and_zero() {
    let sys = build_system(3, 1).unwrap();
    let a = random_coeffs(1, 2, 2, 1);
    let b = random_coeffs(1, 2, 2, 2);
    let grid = grid_for(&sys, 8, 2);
    let fa = sys.synthesize(&a, &grid).unwrap();
    let fb = sys.synthesize(&b, &grid).unwrap();
    let fab = sys.synthesize(&a.add(&b).unwrap(), &grid).unwrap();
    for i in 0..fab.values.len() {
        assert!((fab.values[i] - fa.values[i] - fb.values[i]).abs() <= 1e-12);
    }
    let z = sys.synthesize(&CoeffSeq::new(1, 2), &grid).unwrap();
    assert!(z.values.iter().all(|&v| v == 0.0));
    assert!(sys.analyze(&z, 2, &[0], &[2]).unwrap().is_empty());
}

#[test]
fn single_mother_is_orthonormal() {
    let sys = build_system(6, 2).unwrap();
    let mut lam = CoeffSeq::new(2, 2);
    lam.set_mother(3, 2, vec![1, 2], 1.0).unwrap();
    let grid = grid_for(&sys, 8, 1);
    let f = sys.synthesize(&lam, &grid).unwrap();
    let back = sys.analyze(&f, 2, &[0, 0], &[1, 1]).unwrap();
    for (idx, v) in back.entries() {
        if idx == (tracespace::CoeffIndex::Mother { ell: 3, j: 2, m: vec![1, 2] }) {
            assert!((v - 1.0).abs() <= 1e-6);
        } else {
            assert!(v.abs() <= 1e-6, "{idx:?} {v:e}");
        }
    }
}

#[test]
fn mother_atoms_have_vanishing_moments() {
    // grid quadrature of (x - x0)^v times a synthesized single atom
    for u in [2u32, 3, 6] {
        let sys = build_system(u, 2).unwrap();
        for ell in 2..=4 {
            let j = 2;
            let mut lam = CoeffSeq::new(2, j);
            lam.set_mother(ell, j, vec![1, 1], 1.0).unwrap();
            let grid = grid_for(&sys, j + 6, 1);
            let f = sys.synthesize(&lam, &grid).unwrap();
            let kinds = family(ell, 2);
            let h = grid.step();
            let center = (1.0 + (sys.filter_len() - 1) as f64 / 2.0) / 4.0;
            for v in 0..u {
                for (r, kind) in kinds.iter().enumerate() {
                    if *kind != Factor::M {
                        continue;
                    }
                    let mut idx = [0usize; 2];
                    let (mut s, mut a) = (0.0, 0.0);
                    for (flat, val) in f.values.iter().enumerate() {
                        idx[0] = flat / grid.len[1];
                        idx[1] = flat % grid.len[1];
                        let x = grid.coord(r, idx[r]) - center;
                        let t = x.powi(v as i32) * val * h * h;
                        s += t;
                        a += t.abs();
                    }
                    assert!(s.abs() <= 1e-6 * a.max(1e-3), "u={u} l={ell} v={v}: {s:e}");
                }
            }
        }
    }
}
