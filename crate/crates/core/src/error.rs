use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("partition needs at least two times, got {0}")]
    TooFewTimes(usize),
    #[error("time {value} at index {index} is not finite")]
    NonFiniteTime { index: usize, value: f64 },
    #[error("times not strictly increasing at index {index}: {prev} then {next}")]
    NotIncreasing { index: usize, prev: f64, next: f64 },
    #[error("time {0} is not a point of the grid")]
    NotOnGrid(f64),
    #[error("partition spans [{start}, {end}] but grid spans [{grid_start}, {grid_end}]")]
    SpanMismatch {
        start: f64,
        end: f64,
        grid_start: f64,
        grid_end: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("value {value} at row {row} is not finite")]
    NonFiniteValue { row: usize, value: f64 },
    #[error("left limit at grid index {0} is not allowed")]
    BadLeftLimit(usize),
    #[error("paths live on different grids")]
    GridMismatch,
    #[error("invalid exponent {name} = {value}: {reason}")]
    InvalidExponent {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("{points} points exceed the exact variation cap of {cap}")]
    TooManyPoints { points: usize, cap: usize },
    #[error("path has jumps; Holder constants need a continuous path")]
    HasJumps,
    #[error("control is not superadditive on ({s}, {u}, {t})")]
    NotSuperadditive { s: f64, u: f64, t: f64 },
    #[error(
        "canonical lift did not settle: finest levels differ by {diff:.3e}, tolerance {tol:.3e}"
    )]
    LiftNotConverged { diff: f64, tol: f64 },
    #[error("partition sequence is empty")]
    EmptySequence,
    #[error("grid mesh {mesh:.3e} exceeds the required {required:.3e}")]
    GridTooCoarse { mesh: f64, required: f64 },
    #[error("covariance matrix is not symmetric positive semidefinite")]
    InvalidCovariance,
    #[error("Hurst index {0} outside (1/2, 1)")]
    InvalidHurst(f64),
    #[error("jump measure has infinite intensity above threshold {0:.3e}")]
    InfiniteIntensity(f64),
    #[error("jump law is invalid: {0}")]
    InvalidJumpLaw(String),
    #[error("scheme state became non-finite at step {step}")]
    NonFiniteState { step: usize },
    #[error("Riemann sums disagree under refinement by {gap:.3e}, tolerance {tol:.3e}")]
    RefinementInconsistent { gap: f64, tol: f64 },
    #[error("Picard iteration failed to contract on [{start}, {end}] after {iterations} sweeps")]
    PicardDiverged {
        start: f64,
        end: f64,
        iterations: usize,
    },
    #[error(
        "reference cross-check failed: Milstein gap {gap:.3e} exceeds 10 x tolerance {tol:.3e}"
    )]
    ReferenceMismatch { gap: f64, tol: f64 },
    #[error("fit needs at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("no jump of size >= {threshold:.3e} was sampled; add a forced jump")]
    NoQualifyingJump { threshold: f64 },
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}
