use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Everything that can stop a subcommand. Row and column numbers are 1-based
/// positions in the input file, header line included.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: row {row}, column {column}: cannot parse {value:?} as a number", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{}: row {row}, column {column}: non-finite value {value:?}", path.display())]
    NonFiniteValue {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    /// Ragged rows, empty files and similar shape problems.
    #[error("{}: {message}", path.display())]
    Table { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    /// Too many replicates of a simulation failed for its summary to be
    /// trusted.
    #[error("simulation report invalid: {failures} failed fits over {replicates} replicates")]
    InvalidReport { failures: usize, replicates: usize },

    #[error(transparent)]
    Model(#[from] classo::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse_error",
            CliError::NonFiniteValue { .. } => "non_finite_value",
            CliError::Table { .. } => "table_error",
            CliError::Io { .. } => "io_error",
            CliError::Usage(_) => "usage_error",
            CliError::InvalidReport { .. } => "invalid_report",
            CliError::Model(e) => match e {
                classo::Error::NotPositiveDefinite { .. } => "not_positive_definite",
                classo::Error::SingularSystem { .. } => "singular_system",
                classo::Error::DimensionMismatch { .. } => "dimension_mismatch",
                classo::Error::NonConverged { .. } => "non_converged",
                classo::Error::DegenerateResidual { .. } => "degenerate_residual",
                classo::Error::Config(_) => "invalid_configuration",
            },
        }
    }

    /// 2 for bad invocations, 1 for everything that went wrong afterwards.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Model(classo::Error::Config(_)) => 2,
            _ => 1,
        }
    }

    /// One-line JSON object for standard error.
    pub fn to_json(&self) -> serde_json::Value {
        let mut err = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Parse { row, column, .. } | CliError::NonFiniteValue { row, column, .. } =
            self
        {
            err["row"] = json!(row);
            err["column"] = json!(column);
        }
        json!({ "error": err })
    }
}
