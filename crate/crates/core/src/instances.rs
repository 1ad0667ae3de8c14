//! Random coefficient instances.
//!
//! On each scale `j` the admissible slots are the lattice points `m` with
//! `2^{-j} m` in the window `[0, W)^d`. At most `max_slots` of them are drawn
//! (without replacement), each is active with probability `density`, and an
//! active slot gets a value of magnitude `2^U`, `U` uniform on
//! `[log2_min, log2_max]`, with a uniform sign.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seq::{CoeffSeq, FlatSeq};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceModel {
    pub window: i64,
    pub max_slots: usize,
    pub density: f64,
    pub log2_min: f64,
    pub log2_max: f64,
}

impl Default for InstanceModel {
    fn default() -> Self {
        InstanceModel {
            window: 2,
            max_slots: 16,
            density: 0.25,
            log2_min: -8.0,
            log2_max: 8.0,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

impl InstanceModel {
    pub fn value(&self, rng: &mut impl Rng) -> f64 {
        let mag = rng.gen_range(self.log2_min..=self.log2_max).exp2();
        if rng.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    }

    /// Distinct slots at scale `j` in dimension `d`, in a canonical order.
    pub fn slots(&self, rng: &mut impl Rng, j: u32, d: usize) -> Vec<Vec<i64>> {
        let side = (self.window as u128) << j;
        let total = side.checked_pow(d as u32).unwrap_or(u128::MAX);
        let decode = |mut flat: u128| -> Vec<i64> {
            (0..d)
                .map(|_| {
                    let c = (flat % side) as i64;
                    flat /= side;
                    c
                })
                .collect()
        };
        if total <= 4 * self.max_slots as u128 {
            let total = total as usize;
            let mut picked: Vec<usize> = if total <= self.max_slots {
                (0..total).collect()
            } else {
                index::sample(rng, total, self.max_slots).into_vec()
            };
            picked.sort_unstable();
            return picked.into_iter().map(|f| decode(f as u128)).collect();
        }
        let mut set = BTreeSet::new();
        while set.len() < self.max_slots {
            let m: Vec<i64> = (0..d).map(|_| rng.gen_range(0..side as i64)).collect();
            set.insert(m);
        }
        set.into_iter().collect()
    }

    /// Random family `(lambda_{j,m})`, `0 <= j <= J`, never empty.
    pub fn flat_seq(&self, rng: &mut impl Rng, d: usize, j_max: u32) -> FlatSeq {
        let mut out = FlatSeq::new(d);
        for j in 0..=j_max {
            for m in self.slots(rng, j, d) {
                if rng.gen_bool(self.density) {
                    out.set(j, m, self.value(rng)).expect("finite value");
                }
            }
        }
        if out.is_empty() {
            let j = rng.gen_range(0..=j_max);
            let m = self.slots(rng, j, d).swap_remove(0);
            out.set(j, m, self.value(rng)).expect("finite value");
        }
        out
    }

    /// Random wavelet coefficients on `R^d` up to scale `J`, never empty.
    pub fn coeff_seq(&self, rng: &mut impl Rng, d: usize, j_max: u32) -> CoeffSeq {
        let mut out = CoeffSeq::new(d, j_max);
        for m in self.slots(rng, 0, d) {
            if rng.gen_bool(self.density) {
                out.set_father(m, self.value(rng)).expect("finite value");
            }
        }
        for ell in 2..=1usize << d {
            for j in 0..=j_max {
                for m in self.slots(rng, j, d) {
                    if rng.gen_bool(self.density) {
                        out.set_mother(ell, j, m, self.value(rng)).expect("valid index");
                    }
                }
            }
        }
        if out.is_empty() {
            let m = self.slots(rng, 0, d).swap_remove(0);
            out.set_father(m, self.value(rng)).expect("finite value");
        }
        out
    }
}
