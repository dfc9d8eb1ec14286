use thiserror::Error;

/// Errors from design construction, estimation, simulation, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("probability {0} must lie strictly inside (0, 1)")]
    ProbabilityNotInterior(f64),

    #[error("pool sizes must be at least 1")]
    ZeroPoolSize,

    #[error("a design needs at least one pool")]
    EmptyDesign,

    #[error("outcome vector length {outcomes} does not match design length {pools}")]
    LengthMismatch { pools: usize, outcomes: usize },

    #[error("log-likelihood diverges at p = {p}")]
    LogLikelihoodDiverges { p: f64 },

    #[error("positive-pool count {positives} exceeds test count {tests}")]
    TooManyPositives { positives: u32, tests: u32 },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("spacing q must be finite and at least 1, got {0}")]
    InvalidSpacing(f64),

    #[error("pool size at index {index} ({value:e}) does not fit in a 32-bit size")]
    PoolSizeOverflow { index: usize, value: f64 },

    #[error("invalid prevalence range: need 0 < p_min <= p_max <= 1, got [{p_min}, {p_max}]")]
    InvalidRange { p_min: f64, p_max: f64 },

    #[error("budget {budget} cannot accommodate {tests} pools of minimum size {n0}")]
    InfeasibleBudget { n0: u32, tests: usize, budget: u64 },

    #[error("sweep needs at least one repetition")]
    ZeroRepetitions,

    #[error("confidence level {0} must lie strictly inside (0, 1)")]
    InvalidConfidenceLevel(f64),

    #[error("prevalence grid is empty")]
    EmptyGrid,

    #[error("grid prevalence {0} must lie in (0, 1]")]
    GridValueOutOfRange(f64),

    #[error("a grid from {p_min} to {p_max} needs at least two points")]
    GridTooSmall { p_min: f64, p_max: f64 },

    #[error("points per decade must be positive and finite, got {0}")]
    InvalidPointsPerDecade(f64),

    #[error("cannot compute quantiles of an empty sample")]
    EmptySample,

    #[error("outcome strings may contain only '0' and '1', found {found:?} at position {position}")]
    InvalidOutcomeBit { found: char, position: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
