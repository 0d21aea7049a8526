use poe_core::{KeyPair, PublicKey};
use poe_ledger::{LedgerApi, PoeRef, TxBody};

use crate::error::{ProtocolError, Result};

/// Hand the asset behind `r` to `pk_rec`. The transfer extends the current
/// head of the asset's chain and is signed with the key that owns it.
pub fn transfer_poe(current: &KeyPair, r: &PoeRef, pk_rec: &PublicKey, ledger: &dyn LedgerApi) -> Result<PoeRef> {
    let tx = ledger.resolve(r)?;
    let history = ledger.history(tx.asset_id())?;
    let (Some(mint), Some(head)) = (history.first(), history.last()) else {
        return Err(ProtocolError::ChainInvalid("empty asset history".into()));
    };
    match &mint.body {
        TxBody::Mint { payload, .. } if !payload.document.transferable => return Err(ProtocolError::NotTransferable),
        TxBody::Mint { .. } => {}
        TxBody::Transfer { .. } => return Err(ProtocolError::ChainInvalid("asset has no mint".into())),
    }
    if head.body.resulting_owner()? != current.public {
        return Err(ProtocolError::NotOwner);
    }
    pk_rec.validate()?;
    let body = TxBody::transfer(*tx.asset_id(), head.tx_id, pk_rec.clone(), &current.public);
    let appended = ledger.append(body.sign(current)?)?;
    Ok(PoeRef::new(r.chain_id.clone(), appended.tx_id))
}
