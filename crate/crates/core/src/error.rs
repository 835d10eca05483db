use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid piecewise-linear data: {0}")]
    InvalidPl(String),
    #[error("empty interval [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },
    #[error("conjugate requires convexity")]
    NotConvex,
    #[error("not a jump: p- = p+ = {0}")]
    NotAJump(f64),
    #[error("non-finite sample value at x = {0}")]
    NonFinite(f64),
    #[error("time {t} precedes the fan apex time {t0}")]
    BeforeApex { t: f64, t0: f64 },
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("collision budget exceeded ({0} events)")]
    CollisionBudget(usize),
    #[error("stale collision event: shock {0} is no longer alive or adjacent")]
    StaleEvent(usize),
    #[error("box too small: seed gap check failed after {0} enlargements")]
    BoxTooSmall(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("spec error at `{field}`: {message}")]
    Spec { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BoxTooSmall(_) | Error::CollisionBudget(_) | Error::StaleEvent(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
