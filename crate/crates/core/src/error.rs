use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a precondition (non-finite sample, bad threshold, short series...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The signal carries no usable variation (constant or below the noise floor).
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// A fit range contained a zero count and cannot be log-transformed.
    #[error("range rejected: {0}")]
    RangeRejected(String),

    #[error("simulation diverged at t = {t}: {detail}")]
    SimulationDiverged { t: f64, detail: String },

    /// Config or CSV parse failure; `line` is 1-based.
    #[error("{}line {line}: {message}", source_prefix(.source_name))]
    Parse {
        source_name: Option<String>,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn source_prefix(name: &Option<String>) -> String {
    match name {
        Some(n) => format!("{n}: "),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateSignal(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            source_name: None,
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a file name to a parse error.
    pub fn in_source(self, name: impl Into<String>) -> Self {
        match self {
            Error::Parse { line, message, .. } => Error::Parse {
                source_name: Some(name.into()),
                line,
                message,
            },
            other => other,
        }
    }
}
