use poe_core::{Digest, PublicKey, SignedPoe};

use crate::error::{LedgerError, Result};
use crate::tx::{LedgerTransaction, PoeRef, TxBody, TxId, TxSubmission};

/// Read/append access to a ledger, local or remote.
pub trait LedgerApi: Send + Sync {
    fn chain_id(&self) -> Result<String>;
    fn append(&self, tx: TxSubmission) -> Result<LedgerTransaction>;
    fn get(&self, tx_id: &TxId) -> Result<LedgerTransaction>;
    fn head_owner(&self, asset_id: &Digest) -> Result<PublicKey>;
    fn history(&self, asset_id: &Digest) -> Result<Vec<LedgerTransaction>>;

    /// Fetch the transaction a reference names; references to other chains
    /// do not resolve.
    fn resolve(&self, r: &PoeRef) -> Result<LedgerTransaction> {
        if r.chain_id != self.chain_id()? {
            return Err(LedgerError::RefNotFound(r.to_string()));
        }
        self.get(&r.tx_id)
    }

    /// The issuer-signed PoE behind any transaction of its asset.
    fn minted_poe(&self, r: &PoeRef) -> Result<SignedPoe> {
        let tx = self.resolve(r)?;
        let history = self.history(tx.asset_id())?;
        match history.first().map(|t| &t.body) {
            Some(TxBody::Mint { payload, .. }) => Ok(payload.clone()),
            _ => Err(LedgerError::ChainInvalid { height: tx.height, reason: "asset has no mint".into() }),
        }
    }
}

impl<T: LedgerApi + ?Sized> LedgerApi for std::sync::Arc<T> {
    fn chain_id(&self) -> Result<String> {
        (**self).chain_id()
    }
    fn append(&self, tx: TxSubmission) -> Result<LedgerTransaction> {
        (**self).append(tx)
    }
    fn get(&self, tx_id: &TxId) -> Result<LedgerTransaction> {
        (**self).get(tx_id)
    }
    fn head_owner(&self, asset_id: &Digest) -> Result<PublicKey> {
        (**self).head_owner(asset_id)
    }
    fn history(&self, asset_id: &Digest) -> Result<Vec<LedgerTransaction>> {
        (**self).history(asset_id)
    }
}
