use thiserror::Error;

/// Errors produced by the probability engine.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("conditioning event has zero probability")]
    ZeroConditioningEvent,
    #[error("space has no points")]
    EmptySpace,
    #[error("empty point label")]
    EmptyLabel,
    #[error("duplicate point label `{0}`")]
    DuplicateLabel(String),
    #[error("negative weight {weight} for `{label}`")]
    NegativeWeight { label: String, weight: f64 },
    #[error("measure sums to {0}, expected 1")]
    NotNormalized(String),
    #[error("observable has no value for `{0}`")]
    MissingValue(String),
    #[error("observable value for unknown label `{0}`")]
    ExtraValue(String),
    #[error("density integrates to {integral}, expected 1")]
    NormalizationViolation { integral: f64 },
    #[error("{size} points exceed capacity {cap}")]
    CapacityExceeded { size: u128, cap: usize },
    #[error("index {index} out of range for {len} sites")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unsupported basis: {0}")]
    UnsupportedBasis(String),
    #[error("factorial of {0} exceeds exact integer range")]
    FactorialOverflow(u32),
    #[error("not row-stochastic: {0}")]
    NonStochasticMatrix(String),
    #[error("not a generator: {0}")]
    InvalidGenerator(String),
    #[error("series not converged after {terms} terms")]
    TruncationFailure { terms: usize },
    #[error("chain is reducible")]
    Reducible,
    #[error("power iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("propagator is numerically singular")]
    SingularPropagator,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state cutoff too small: boundary mass {boundary_mass}")]
    CutoffTooSmall { boundary_mass: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("time {0} is not a non-negative integer step count")]
    NonIntegerTime(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
