use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time must be non-zero")]
    ZeroTime,

    #[error("lens time {0} outside (-pi/4, pi/4)")]
    LensTimeOutOfRange(f64),

    /// Mass within the outer tenth of the periodic box exceeded the guard threshold.
    #[error("wrap-around guard violated at t = {time}: boundary mass fraction {fraction:.3e}")]
    GuardViolation { time: f64, fraction: f64 },

    #[error("non-finite samples detected at t = {0}")]
    NonFinite(f64),

    #[error("step budget exhausted: reached t = {reached} of {target} in {steps} steps")]
    StepBudgetExhausted { reached: f64, target: f64, steps: usize },

    #[error("under-resolved field: top-octave mass fraction {0:.3e}")]
    UnderResolved(f64),

    #[error("rescaling leaves mass fraction {0:.3e} outside the target region")]
    SupportOverflow(f64),

    #[error("tail integral diverges for this exponent: {0}")]
    DivergentTail(String),

    #[error("config: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
