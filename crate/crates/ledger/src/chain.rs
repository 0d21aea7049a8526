//! Validity rules for mint and transfer transactions, and whole-chain
//! re-verification.

use poe_core::{crypto, PublicKey, Signature, TrustStore};

use crate::error::{LedgerError, Result};
use crate::tx::{LedgerTransaction, TxBody};

/// Checks a mint against the issuer trust set. Returns the initial owner.
pub fn check_mint(body: &TxBody, signature: &Signature, minters: &TrustStore) -> Result<PublicKey> {
    let TxBody::Mint { asset_id, payload, signer_pk } = body else {
        return Err(LedgerError::InvalidPoe("expected a mint transaction".into()));
    };
    if !minters.contains(signer_pk) || payload.signer_key_id != signer_pk.key_id() {
        return Err(LedgerError::MintUnauthorized);
    }
    if !crypto::verify(signer_pk, signature, &body.canonical_bytes()?)? {
        return Err(LedgerError::BadSignature);
    }
    if !payload.verify(signer_pk)? {
        return Err(LedgerError::BadSignature);
    }
    if payload.poe_digest()? != *asset_id {
        return Err(LedgerError::AssetMismatch);
    }
    payload.document.validate().map_err(|e| LedgerError::InvalidPoe(e.to_string()))?;
    Ok(payload.document.holder_key()?)
}

/// Checks a transfer against the owner established by its previous
/// transaction. Linkage to the current head is the caller's concern.
pub fn check_transfer(
    body: &TxBody,
    signature: &Signature,
    prev_owner: &PublicKey,
    transferable: bool,
) -> Result<PublicKey> {
    let TxBody::Transfer { payload, signer_pk, .. } = body else {
        return Err(LedgerError::BadPrev);
    };
    if !transferable {
        return Err(LedgerError::NotTransferable);
    }
    if signer_pk != prev_owner {
        return Err(LedgerError::NotOwner);
    }
    let ok = crypto::verify(signer_pk, signature, &body.canonical_bytes()?).unwrap_or_default();
    if !ok {
        return Err(LedgerError::BadSignature);
    }
    payload.validate().map_err(|e| LedgerError::InvalidPoe(format!("recipient key: {e}")))?;
    Ok(payload.clone())
}

/// Re-verify one asset's transactions, mint first, in height order.
/// Returns the head owner, or the first broken link.
pub fn verify_history(history: &[LedgerTransaction], minters: &TrustStore) -> Result<PublicKey> {
    let fault = |tx: &LedgerTransaction, reason: String| LedgerError::ChainInvalid { height: tx.height, reason };

    let Some((mint, transfers)) = history.split_first() else {
        return Err(LedgerError::AssetNotFound("empty history".into()));
    };
    let asset = *mint.asset_id();
    let check_id = |tx: &LedgerTransaction| -> Result<()> {
        let computed = tx.body.tx_id().map_err(|e| fault(tx, e.to_string()))?;
        if computed != tx.tx_id {
            return Err(fault(tx, "transaction id does not match body".into()));
        }
        Ok(())
    };

    check_id(mint)?;
    let mut owner = check_mint(&mint.body, &mint.signature, minters).map_err(|e| fault(mint, e.to_string()))?;
    let transferable = match &mint.body {
        TxBody::Mint { payload, .. } => payload.document.transferable,
        TxBody::Transfer { .. } => unreachable!("check_mint accepted a transfer"),
    };

    let mut prev = mint;
    for tx in transfers {
        check_id(tx)?;
        if *tx.asset_id() != asset {
            return Err(fault(tx, "transaction belongs to another asset".into()));
        }
        if tx.height <= prev.height {
            return Err(fault(tx, "heights are not increasing".into()));
        }
        if tx.body.prev_tx() != Some(&prev.tx_id) {
            return Err(fault(tx, "does not extend the previous transaction".into()));
        }
        owner = check_transfer(&tx.body, &tx.signature, &owner, transferable).map_err(|e| fault(tx, e.to_string()))?;
        prev = tx;
    }
    Ok(owner)
}
