//! CLI error type carrying the process exit code contract:
//! 1 = check failure, 2 = parse/validation error, 3 = capability mismatch.

use measure_fw::FwError;

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Capability(String),
    CheckFailed(String),
    Runtime(String),
}

impl CliError {
    pub fn parse(msg: impl Into<String>) -> Self {
        CliError::Parse(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) | CliError::Runtime(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Capability(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "config error: {m}"),
            CliError::Capability(m) => write!(f, "capability mismatch: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failure: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<FwError> for CliError {
    fn from(e: FwError) -> Self {
        match e {
            FwError::Capability { .. } => CliError::Capability(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
