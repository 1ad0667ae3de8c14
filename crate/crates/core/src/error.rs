use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alpha = {0} is not a Muckenhoupt weight in this family (need alpha > -1)")]
    NotMuckenhoupt(f64),

    #[error("invalid exponent {name} = {value}")]
    InvalidExponent { name: &'static str, value: f64 },

    #[error("p = inf is out of scope (L_inf(w) = L_inf degenerate case)")]
    InfiniteP,

    #[error("index out of range: {0}")]
    Index(String),

    #[error("non-finite coefficient value {0}")]
    NonFinite(f64),

    #[error("box {inner} is not contained in {outer}")]
    NotContained { inner: String, outer: String },

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("unsupported wavelet order u = {0} (admitted: {1})")]
    UnsupportedOrder(u32, String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
