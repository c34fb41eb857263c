use std::io;

use thiserror::Error;

/// Rejected generation parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("signal dimension N must be at least 2, got {0}")]
    Dimension(usize),
    #[error("aspect ratio alpha must lie in (0, 1), got {0}")]
    AspectRatio(f64),
    #[error("M = round(alpha * N) = {m} must satisfy 0 < M < N = {n}")]
    MeasurementCount { m: usize, n: usize },
    #[error("planted density rho_hat must lie in [0, alpha), got {rho_hat} (alpha = {alpha})")]
    PlantedDensity { rho_hat: f64, alpha: f64 },
    #[error("variance `{name}` must be finite and nonnegative, got {value}")]
    Variance { name: &'static str, value: f64 },
}

/// Failure to read an instance file.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes, not an instance file")]
    Magic,
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
}

impl FormatError {
    pub(crate) fn field(field: &'static str, reason: impl Into<String>) -> Self {
        FormatError::Field {
            field,
            reason: reason.into(),
        }
    }
}

/// Failures of the incremental least-squares cache.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GramError {
    #[error("support size {k} exceeds the measurement count M = {m}")]
    InfeasibleSupport { k: usize, m: usize },
    #[error("restricted Gram matrix is numerically singular (pivot {pivot:e})")]
    SingularSupport { pivot: f64 },
    #[error("column {index} is numerically degenerate (pivot {pivot:e})")]
    Degenerate { index: usize, pivot: f64 },
    #[error("index {index} is out of range or in the wrong set for this operation")]
    InvalidIndex { index: usize },
    #[error("support mask has length {got}, expected N = {expected}")]
    MaskLength { got: usize, expected: usize },
}

/// Invalid sampler, schedule or run configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("sparsity rho = {rho} must lie in (0, alpha = {alpha})")]
    Sparsity { rho: f64, alpha: f64 },
    #[error("support size K = {k} must satisfy 1 <= K <= min(M, N - 1) (M = {m}, N = {n})")]
    SupportSize { k: usize, m: usize, n: usize },
    #[error("schedule growth factor r must exceed 1, got {0}")]
    NonIncreasingTemperature(f64),
    #[error("schedule must have at least one stage")]
    EmptySchedule,
    #[error("inverse temperatures must be finite, nonnegative and strictly increasing (stage {stage})")]
    ScheduleOrder { stage: usize },
    #[error("every stage needs at least one sweep (stage {stage})")]
    ZeroSweeps { stage: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Crate-wide error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Gram(#[from] GramError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("exhaustive search needs {needed} supports, over the budget of {budget}")]
    OracleBudget { needed: f64, budget: u64 },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("{failed} of {total} samples failed, above the 10% abort threshold")]
    TooManyFailures { failed: usize, total: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
