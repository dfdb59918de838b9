use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: car {car_id} has overlapping coverage ({first} and {second})")]
    OverlappingCoverage {
        line: u64,
        car_id: String,
        first: String,
        second: String,
    },

    #[error("car {car_id}: position samples are not sorted by time (t = {t})")]
    UnsortedSamples { car_id: String, t: f64 },

    #[error("car {car_id} at t = {t} lies inside the discs of both {first} and {second}")]
    OverlappingDiscs {
        car_id: String,
        t: f64,
        first: String,
        second: String,
    },

    #[error("no coverage events for edge node {0}")]
    NoEvents(String),

    #[error("car {car_id} references unknown edge node {en_id}")]
    UnknownEn { car_id: String, en_id: String },

    #[error("invalid distribution: {0}")]
    InvalidPdf(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid_arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
