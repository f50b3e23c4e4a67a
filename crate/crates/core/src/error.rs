use thiserror::Error;

/// Errors raised by model construction, scans and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {n} is outside the declared range 1..={max}")]
    RowOutOfRange { n: usize, max: usize },

    #[error("row index must be at least 1")]
    ZeroRow,

    #[error("row {n}: weight vector covers {weights} cells but the row has {cells}")]
    WeightLengthMismatch { n: usize, weights: usize, cells: usize },

    #[error("length mismatch: {left} values against {right} weights")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    #[error("cell ({n}, {i}) has no quantile function; it cannot be sampled")]
    MissingQuantile { n: usize, i: usize },

    #[error("unsupported dependence: {0}")]
    UnsupportedDependence(String),

    #[error("slowly varying function: {0}")]
    Svf(String),

    #[error("no regularization anchor below {bound:e}: x^alpha L(x) is not eventually increasing")]
    NoAnchor { bound: f64 },

    #[error("nonpositive L({x}) = {value}")]
    NonPositiveSvf { x: f64, value: f64 },

    #[error("moment function: {0}")]
    MomentFunction(String),

    #[error("domination precheck failed at x = {x}: lhs {lhs} exceeds bound {bound}")]
    DominationPrecheck { x: f64, lhs: f64, bound: f64 },

    #[error("weight scheme: {0}")]
    Weights(String),

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("zero reference: {0}")]
    ZeroReference(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("spec document: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
