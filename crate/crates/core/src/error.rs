use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A function was evaluated outside its mathematical domain.
    #[error("{what} requires a strictly positive argument, got {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("capacity exhausted: g({x}) = {capacity} is not positive")]
    CapacityExhausted { x: f64, capacity: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("initial history must be strictly positive, got {value} at t = {t}")]
    NonPositiveHistory { t: f64, value: f64 },

    #[error("history sample at t = {t} is {value}, outside the rate bounds [{lo}, {hi}]")]
    HistoryOutOfBounds {
        t: f64,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("time {t} is outside the buffered span [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("delay {name} = {delay} is not an integer multiple of step {step}")]
    DelayNotMultiple {
        name: &'static str,
        delay: f64,
        step: f64,
    },

    #[error("no step <= {step} is commensurate with tau = {tau} and T = {t_delay}")]
    IncommensurateDelays { step: f64, tau: f64, t_delay: f64 },

    #[error("integration diverged at t = {t}: {reason}")]
    Diverged { t: f64, reason: String },

    #[error("no equilibrium in [{lo}, {hi}]: g(x) - x^e does not change sign")]
    NoEquilibrium { lo: f64, hi: f64 },

    #[error("grid of {grid_n} points is too coarse (need at least {min})")]
    GridTooCoarse { grid_n: usize, min: usize },

    #[error("invalid range [{lo}, {hi}]: {reason}")]
    InvalidRange { lo: f64, hi: f64, reason: String },

    #[error("functional at t = {t} needs history back to {needed}, trajectory starts at {start}")]
    InsufficientHistory { t: f64, needed: f64, start: f64 },

    #[error("horizon {horizon} s is shorter than the required {required} s")]
    HorizonTooShort { horizon: f64, required: f64 },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: `{field}`: {reason}", path.display())]
    Config {
        path: PathBuf,
        field: String,
        reason: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error class (sysexits-style, all >= 64).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Config { .. } | Error::InvalidParameter { .. } => 65,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 66,
            Error::Io { .. } => 74,
            _ => 70,
        }
    }
}
