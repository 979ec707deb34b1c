use std::path::PathBuf;

use thiserror::Error;

use crate::des::SimTime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("event scheduled at {at} is in the past (clock is {now})")]
    EventInPast { at: SimTime, now: SimTime },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown instance type `{0}`")]
    UnknownType(String),

    #[error("unknown datacenter `{0}`")]
    UnknownDatacenter(String),

    #[error("market {market} has no price before t={at}")]
    NoPriceYet { market: String, at: SimTime },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance {0} is not running")]
    NotRunning(u32),

    #[error("bidding strategy `{0}` needs a non-empty price history")]
    EmptyHistory(&'static str),

    #[error("no accepted jobs in workload ({skipped} records skipped)")]
    EmptyWorkload { skipped: usize },

    #[error("accounting error: {0}")]
    Accounting(String),

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
