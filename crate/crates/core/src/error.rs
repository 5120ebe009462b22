use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input violated a documented precondition (e.g. a non-Hermitian
    /// matrix handed to the Hermitian eigensolver).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("training diverged at epoch {epoch}: rms {rms:.3e} stayed above 10x the initial rms {initial:.3e}")]
    Divergence { epoch: usize, rms: f64, initial: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    /// Failure inside one cell of a sweep.
    #[error("{cell}: {source}")]
    Cell { cell: String, source: Box<Error> },

    /// Configuration problems. `field` names the offending key when known.
    #[error("config error{}: {message}", location(.line, .field))]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn location(line: &Option<usize>, field: &Option<String>) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!(" at line {l} ({f})"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(f)) => format!(" ({f})"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            field: Some(field.into()),
            message: message.into(),
        }
    }

    pub(crate) fn in_cell(self, cell: impl Into<String>) -> Self {
        Error::Cell { cell: cell.into(), source: Box::new(self) }
    }

    /// Process exit status used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Divergence { .. } => 3,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
            Error::Cell { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
