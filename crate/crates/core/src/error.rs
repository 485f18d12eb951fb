use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("infeasible geometry: {0}")]
    Geometry(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("medium violates its assumptions: {0}")]
    InvalidMedium(String),
    #[error("zero pivot at elimination step {0}")]
    ZeroPivot(usize),
    #[error("factorization of the shifted pencil failed for shift {re}{im:+}i")]
    SingularShift { re: f64, im: f64 },
    #[error("eigenpair is invalid: {0}")]
    InvalidPair(String),
    #[error("correction denominator vanishes (|<S u, u>| = {0:e})")]
    DegenerateDenominator(f64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
