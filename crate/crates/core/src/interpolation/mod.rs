//! Real interpolation of lattice sequence spaces.
//!
//! For lattice quasi-norms the K-functional only needs splittings
//! `|lambda| = lambda^1 + lambda^2` with non-negative parts, which turns the
//! infimum into a box-constrained problem in the shares `theta_i`.

mod certify;
mod kfunc;
mod lattice;
mod retract;
mod theta;

pub use certify::{
    certify_besov_interpolation, certify_seq_interpolation, envelopes, interpolated_p, shift_smoothness,
    BesovForm, BesovInterpolation, BesovReport, CertReport, CertRow, Envelope, Instance, SeqInterpolation,
    ORACLE_TOL, STABILITY_FACTOR,
};
pub use kfunc::{k_functional, k_functional_with, KOptions, KResult};
pub use lattice::{besov_lattice, Block, FNorm, LatticeCouple, LatticeNorm, Level, NestedLp, ProductCouple, ProductNorm};
pub use retract::{op_P_A, op_R, RetractBounds, VectorFunction};
pub use theta::{k_curve, theta_r_norm, theta_r_norm_with, CurveOptions, KCurve, ThetaRNorm};

use crate::error::{Error, Result};

/// `K(t, a; B_1, B_2)` for the product couple, computed jointly on the
/// concatenated coordinates.
pub fn product_k(t: f64, a: &[Vec<f64>], pc: &ProductCouple) -> Result<f64> {
    product_k_with(t, a, pc, &KOptions::default()).map(|r| r.value)
}

pub fn product_k_with(t: f64, a: &[Vec<f64>], pc: &ProductCouple, opts: &KOptions) -> Result<KResult> {
    if a.len() != pc.components.len() {
        return Err(Error::Index(format!(
            "{} sequences for {} components",
            a.len(),
            pc.components.len()
        )));
    }
    let flat: Vec<f64> = a.iter().flatten().copied().collect();
    k_functional_with(t, &flat, &pc.concatenated(), opts, None)
}
