use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] lebdiff::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use lebdiff::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) | CliError::Csv(_) => "io",
            CliError::Core(e) => match e {
                E::ResourceCap { .. } => "resource_cap",
                E::Invariant(_) => "invariant",
                E::Dimension { .. } | E::DimensionCap(_) => "dimension",
                E::Domain | E::OutOfPartition { .. } | E::Boundary { .. } => "domain",
                E::ZeroMeasure | E::Precondition(_) | E::InvalidInput(_) => "schema",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "resource_cap" => EXIT_CAP,
            "invariant" => EXIT_VIOLATION,
            _ => EXIT_USAGE,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}
