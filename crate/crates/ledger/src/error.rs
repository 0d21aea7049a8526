use poe_core::CoreError;
use thiserror::Error;

use crate::tx::TxId;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("mint not signed by a trusted issuer")]
    MintUnauthorized,
    #[error("asset id does not match the digest of the minted PoE")]
    AssetMismatch,
    #[error("asset {0} is already minted")]
    AssetExists(String),
    #[error("minted PoE is invalid: {0}")]
    InvalidPoe(String),
    #[error("previous transaction is missing or belongs to another asset")]
    BadPrev,
    #[error("signer is not the owner established by the previous transaction")]
    NotOwner,
    #[error("signature does not verify")]
    BadSignature,
    #[error("asset is not transferable")]
    NotTransferable,
    #[error("previous transaction {0} was already spent by a transfer")]
    DoubleTransfer(TxId),
    #[error("transaction {0} not found")]
    RefNotFound(String),
    #[error("asset {0} not found")]
    AssetNotFound(String),
    #[error("chain invalid at height {height}: {reason}")]
    ChainInvalid { height: u64, reason: String },
    #[error("ledger log: {0}")]
    Io(#[from] std::io::Error),
    #[error("ledger unavailable: {0}")]
    Unavailable(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LedgerError {
    /// Stable machine-readable code, used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::MintUnauthorized => "MintUnauthorized",
            LedgerError::AssetMismatch => "AssetMismatch",
            LedgerError::AssetExists(_) => "AssetExists",
            LedgerError::InvalidPoe(_) => "InvalidPoe",
            LedgerError::BadPrev => "BadPrev",
            LedgerError::NotOwner => "NotOwner",
            LedgerError::BadSignature => "BadSignature",
            LedgerError::NotTransferable => "NotTransferable",
            LedgerError::DoubleTransfer(_) => "DoubleTransfer",
            LedgerError::RefNotFound(_) => "RefNotFound",
            LedgerError::AssetNotFound(_) => "AssetNotFound",
            LedgerError::ChainInvalid { .. } => "ChainInvalid",
            LedgerError::Io(_) => "LedgerIo",
            LedgerError::Unavailable(_) => "LedgerUnavailable",
            LedgerError::Core(_) => "CoreError",
            LedgerError::Json(_) => "LedgerJson",
        }
    }
}

pub type Result<T, E = LedgerError> = std::result::Result<T, E>;
