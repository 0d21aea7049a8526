//! Simulated append-only ledger: mint transactions register issuer-signed
//! PoEs, transfer transactions hand ownership to a new key, and every
//! asset's history is a single chain from mint to head owner.
//!
//! There is no consensus layer. A single writer orders all appends, and the
//! first transfer spending a given previous transaction wins.

pub mod api;
pub mod chain;
pub mod error;
pub mod ledger;
pub mod tx;

pub use api::LedgerApi;
pub use chain::verify_history;
pub use error::{LedgerError, Result};
pub use ledger::Ledger;
pub use tx::{LedgerTransaction, PoeRef, TxBody, TxId, TxKind, TxSubmission};
