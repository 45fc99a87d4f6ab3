use std::fmt;

use gsdecay_core::Error;

/// Failure classes, each with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid or unreadable configuration (exit 2).
    Config(String),
    /// Eigensolver or discretization failure (exit 3).
    Solver(String),
    /// At least one enabled check failed (exit 4).
    Check(Vec<String>),
    /// Output could not be written (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Check(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Check(failed) => write!(f, "{} check(s) failed: {}", failed.len(), failed.join("; ")),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. }
            | Error::Discretization(_)
            | Error::Singular(_)
            | Error::Consistency { .. } => CliError::Solver(e.to_string()),
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::Domain(_)
            | Error::Configuration(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
