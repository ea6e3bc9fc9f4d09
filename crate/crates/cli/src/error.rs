use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use lsd_cascade::amm::AmmError;
use lsd_cascade::detect::DetectError;
use lsd_cascade::sim::SimError;

/// Failure classes and their exit codes: 1 validation, 2 I/O, 3 numeric.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        })
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<AmmError> for CliError {
    fn from(e: AmmError) -> Self {
        match e {
            AmmError::NoConvergence { .. } | AmmError::Overflow => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Amm(a) => a.into(),
            SimError::Io(_) | SimError::Csv(_) => CliError::Io(e.to_string()),
            SimError::Engine(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<lsd_cascade::analytics::AnalyticsError> for CliError {
    fn from(e: lsd_cascade::analytics::AnalyticsError) -> Self {
        CliError::Validation(e.to_string())
    }
}
