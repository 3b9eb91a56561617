use crate::family::Family;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by lattice construction, family evaluation, solvers and
/// risk estimation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("axis too small: N={n} must exceed order {order} for an unwrapped axis")]
    DimensionTooSmall { n: usize, order: usize },

    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{family} natural parameter {theta} outside domain ({lo}, {hi})")]
    DomainError {
        family: Family,
        theta: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{family} mean value {value} lies on or outside the mean-domain boundary")]
    BoundaryError { family: Family, value: f64 },

    #[error("{family} does not support {what}")]
    UnsupportedFamily { family: Family, what: &'static str },

    #[error("numerically rank-deficient basis (pivot ratio {ratio:.3e}); grid too small for requested orders")]
    RankDeficient { ratio: f64 },

    #[error("problem size {size} exceeds dense-computation limit {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("excluded index set leaves a zero singular value in the sum; enlarge J")]
    ZeroEigenvalueInSum,

    #[error("data must be non-negative integers for PUKL; found {value} at index {index}")]
    NonIntegerData { value: f64, index: usize },

    #[error("criterion {criterion} is not valid for family {family}: {hint}")]
    CriterionMismatch {
        criterion: &'static str,
        family: Family,
        hint: &'static str,
    },

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error("constraint set Theta(K) is empty for {family} with K={k}")]
    EmptyConstraintSet { family: Family, k: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },
}
