//! Weighted coefficient sequence spaces, the trace and extension operators on
//! the hyperplane `R^{n-k}` of `R^n`, and real interpolation norms computed
//! from Peetre K-functionals.
//!
//! Function spaces are represented by their wavelet or atomic coefficient
//! spaces. The weight is `w_alpha(x) = |x_n|^alpha` near the hyperplane and
//! `1` away from it.

pub mod dyadic;
pub mod error;
pub mod instances;
pub mod interpolation;
pub mod norms;
pub mod par;
pub mod params;
pub mod seq;
pub mod textio;
pub mod trace_ext;
pub mod wavelets;

pub use dyadic::{DyadicBox, DyadicCube, EBox, WeightAlpha};
pub use error::{Error, Result};
pub use params::SpaceParams;
pub use seq::{CoeffIndex, CoeffSeq, FlatSeq, SimpleFunction};
