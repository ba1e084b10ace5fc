use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("malformed measurement file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    #[error("invalid measurement {source_name}: {report}")]
    InvalidMeasurement { source_name: String, report: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] measrepro::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for usage problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
