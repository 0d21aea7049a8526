use poe_core::CoreError;
use poe_ledger::LedgerError;
use poe_reward::RewardError;
use thiserror::Error;

use crate::policy::RejectReason;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("engagement data is empty")]
    EmptyEngagement,
    #[error("disclosure policy does not cover field {0:?}")]
    PolicyIncomplete(String),
    #[error("disclosure policy names field {0:?} absent from the data")]
    PolicyUnknownField(String),
    #[error("disclosure policy marks no field plain or committed")]
    NothingDisclosed,
    #[error("engagement rejected: {0}")]
    EngagementRejected(RejectReason),
    #[error("a PoE with this digest was already issued")]
    DuplicatePoe,
    #[error("PoE signature does not verify")]
    PoeInvalid,
    #[error("PoE expired")]
    PoeExpired,
    #[error("PoE signed by an untrusted issuer")]
    UntrustedIssuer,
    #[error("session: {0}")]
    Session(String),
    #[error("reference does not resolve: {0}")]
    RefNotFound(String),
    #[error("ownership chain invalid: {0}")]
    ChainInvalid(String),
    #[error("PoE is not transferable")]
    NotTransferable,
    #[error("signer is not the current owner")]
    NotOwner,
    #[error("draft from the engagement system does not match the request: {0}")]
    DraftMismatch(String),
    #[error("unexpected message {0}")]
    Unexpected(String),
    #[error("peer reported {code}: {message}")]
    Remote { code: String, message: String },
    #[error("malformed message: {0}")]
    Wire(String),
    #[error(transparent)]
    Ledger(LedgerError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl From<LedgerError> for ProtocolError {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::NotOwner => ProtocolError::NotOwner,
            LedgerError::NotTransferable => ProtocolError::NotTransferable,
            LedgerError::RefNotFound(r) => ProtocolError::RefNotFound(r),
            LedgerError::ChainInvalid { height, reason } => {
                ProtocolError::ChainInvalid(format!("height {height}: {reason}"))
            }
            other => ProtocolError::Ledger(other),
        }
    }
}

impl From<serde_json::Error> for ProtocolError {
    fn from(e: serde_json::Error) -> Self {
        ProtocolError::Wire(e.to_string())
    }
}

impl ProtocolError {
    /// Stable machine-readable code, used in ERROR messages and CLI output.
    pub fn code(&self) -> String {
        let s = match self {
            ProtocolError::EmptyEngagement => "EmptyEngagementError",
            ProtocolError::PolicyIncomplete(_) => "PolicyIncomplete",
            ProtocolError::PolicyUnknownField(_) => "PolicyUnknownField",
            ProtocolError::NothingDisclosed => "NothingDisclosed",
            ProtocolError::EngagementRejected(_) => "EngagementRejected",
            ProtocolError::DuplicatePoe => "DuplicatePoeError",
            ProtocolError::PoeInvalid => "PoeInvalid",
            ProtocolError::PoeExpired => "PoeExpired",
            ProtocolError::UntrustedIssuer => "UntrustedIssuer",
            ProtocolError::Session(_) => "SessionError",
            ProtocolError::RefNotFound(_) => "RefNotFound",
            ProtocolError::ChainInvalid(_) => "ChainInvalid",
            ProtocolError::NotTransferable => "NotTransferable",
            ProtocolError::NotOwner => "NotOwner",
            ProtocolError::DraftMismatch(_) => "DraftMismatch",
            ProtocolError::Unexpected(_) => "UnexpectedMessage",
            ProtocolError::Remote { code, .. } => return code.clone(),
            ProtocolError::Wire(_) => "ProtocolError",
            ProtocolError::Ledger(e) => e.code(),
            ProtocolError::Reward(e) => e.code(),
            ProtocolError::Core(e) => match e {
                CoreError::Canonicalization(_) => "CanonicalizationError",
                CoreError::Algorithm(_) => "AlgorithmError",
                CoreError::Field(_) => "FieldError",
                _ => "CoreError",
            },
        };
        s.to_owned()
    }
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;
