use thiserror::Error;

/// Errors raised by the near-field analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid array configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid location: {0}")]
    InvalidLocation(String),

    #[error("antenna index {index} outside [-{half}, {half}]")]
    IndexOutOfRange { index: i64, half: i64 },

    #[error("phase-shifter resolution must be 1..=16 bits, got {0}")]
    InvalidBits(u32),

    #[error("operation requires a discrete phase shifter")]
    ContinuousPhaseShifter,

    #[error("lobe index {0} is outside the Fourier support of the quantizer")]
    NotInSupport(i64),

    #[error("lobe index {k} is not a {expected} lobe")]
    WrongLobeType { k: i64, expected: &'static str },

    #[error("observation grid is empty")]
    EmptyGrid,

    #[error("invalid observation grid: {0}")]
    InvalidGrid(String),

    #[error("ring difference is zero; the power ratio is undefined on a far-field ring")]
    ZeroRingDifference,

    #[error("far-field subarray size is singular at broadside (theta_u = 0)")]
    Broadside,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("zero-forcing failed: users {0} and {1} have collinear effective channels")]
    SingularChannel(usize, usize),

    #[error("csv output failed: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}
