use std::fmt;

use poe_core::CoreError;
use poe_ledger::LedgerError;
use poe_protocol::ProtocolError;
use poe_reward::RewardError;
use poe_transport::TransportError;
use serde::Serialize;

/// Process exit statuses.
pub mod exit {
    /// The operation ran and was refused (a rejection, a reused code).
    pub const REFUSED: i32 = 1;
    /// Bad flags, config or local files.
    pub const USAGE: i32 = 2;
    /// A node could not be reached or failed authentication.
    pub const CHANNEL: i32 = 3;
}

/// A failure reported as one JSON object on standard error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub code: String,
    pub message: String,
    #[serde(skip)]
    pub exit: i32,
}

impl CliError {
    pub fn new(code: impl Into<String>, message: impl Into<String>, exit: i32) -> Self {
        Self { code: code.into(), message: message.into(), exit }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("UsageError", message, exit::USAGE)
    }

    pub fn refused(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(code, message, exit::REFUSED)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Remote { code, message } => CliError::refused(code, message),
            ProtocolError::Ledger(LedgerError::Unavailable(m)) => CliError::new("Unreachable", m, exit::CHANNEL),
            ProtocolError::Reward(RewardError::Unavailable(m)) => CliError::new("Unreachable", m, exit::CHANNEL),
            other => CliError::refused(other.code(), other.to_string()),
        }
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Session(p) => p.into(),
            TransportError::Credential(_) => CliError::new(e.code(), e.to_string(), exit::USAGE),
            other => CliError::new(other.code(), other.to_string(), exit::CHANNEL),
        }
    }
}

impl From<LedgerError> for CliError {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::Unavailable(m) => CliError::new("Unreachable", m, exit::CHANNEL),
            other => CliError::refused(other.code(), other.to_string()),
        }
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::Unavailable(m) => CliError::new("Unreachable", m, exit::CHANNEL),
            other => CliError::refused(other.code(), other.to_string()),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("IoError", e.to_string(), exit::USAGE)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new("JsonError", e.to_string(), exit::USAGE)
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
