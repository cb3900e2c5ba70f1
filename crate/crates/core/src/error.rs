use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A size would exceed a configured limit.
    #[error("sizing error: {what} would be {value}, limit is {limit}")]
    Sizing {
        what: &'static str,
        value: u128,
        limit: u128,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// The shifted pencil `sE - A` is singular or nearly so at `s`.
    #[error("pole proximity at s = {re:+.6e}{im:+.6e}i (condition estimate {condition:.3e})")]
    PoleProximity { re: f64, im: f64, condition: f64 },

    #[error("regularity error: {0}")]
    Regularity(String),

    #[error("step-size error: {0}")]
    StepSize(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("selection error: {0}")]
    Selection(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("degenerate ranking: all norms are zero")]
    DegenerateRanking,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("modelling error: {0}")]
    Modelling(String),

    #[error("shift error: expansion point {s0} makes the shifted pencil singular ({condition:.3e})")]
    Shift { s0: f64, condition: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
