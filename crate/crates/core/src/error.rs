use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix entries length {len} is not dim^2 for dim {dim}")]
    BadShape { dim: usize, len: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid subspace selector: {0}")]
    InvalidSelector(String),

    #[error("matrix is not normal (commutator defect {defect:.3e})")]
    NotNormal { defect: f64 },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("matrix is neither Hermitian nor anti-Hermitian")]
    NotHermitian,

    #[error("target does not act block-diagonally on the subspace (leak {leak:.3e})")]
    NotBlockDiagonal { leak: f64 },

    #[error("acceptance probability vanishes (denominator {denominator:.3e})")]
    NoAcceptance { denominator: f64 },

    #[error("degenerate spectrum: fidelity is a point mass at f = {point_mass}")]
    DegenerateSpectrum { point_mass: f64 },

    #[error("monomial integral out of range: n + sum(k) = {total} exceeds {limit}")]
    MonomialTooLarge { total: usize, limit: usize },

    #[error("histogram is incompatible with the distribution: {0}")]
    Histogram(String),

    #[error("objective evaluation failed at {params:?}: {message}")]
    Evaluator { params: Vec<f64>, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
