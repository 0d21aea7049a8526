use std::fmt;

use poe_core::canonical::to_canonical_bytes;
use poe_core::{sha256, Digest, KeyPair, PublicKey, Signature, SignedPoe};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub type TxId = Digest;

/// Points at a transaction on a named ledger.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoeRef {
    pub chain_id: String,
    pub tx_id: TxId,
}

impl PoeRef {
    pub fn new(chain_id: impl Into<String>, tx_id: TxId) -> Self {
        Self { chain_id: chain_id.into(), tx_id }
    }
}

impl fmt::Debug for PoeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PoeRef({}:{})", self.chain_id, self.tx_id.short(16))
    }
}

impl fmt::Display for PoeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.chain_id, self.tx_id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxKind {
    Mint,
    Transfer,
}

/// The signed part of a transaction. Its canonical encoding is hashed into
/// the transaction id and is what the signer signs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum TxBody {
    /// Registers an issuer-signed PoE; signed by the issuer.
    Mint { asset_id: Digest, payload: SignedPoe, signer_pk: PublicKey },
    /// `payload` becomes the owner of the asset as of `prev_tx`; signed by
    /// the owner established by `prev_tx`.
    Transfer { asset_id: Digest, prev_tx: TxId, payload: PublicKey, signer_pk: PublicKey },
}

impl TxBody {
    pub fn mint(poe: SignedPoe, issuer: &PublicKey) -> Result<Self> {
        Ok(TxBody::Mint { asset_id: poe.poe_digest()?, payload: poe, signer_pk: issuer.clone() })
    }

    pub fn transfer(asset_id: Digest, prev_tx: TxId, new_owner: PublicKey, current_owner: &PublicKey) -> Self {
        TxBody::Transfer { asset_id, prev_tx, payload: new_owner, signer_pk: current_owner.clone() }
    }

    pub fn kind(&self) -> TxKind {
        match self {
            TxBody::Mint { .. } => TxKind::Mint,
            TxBody::Transfer { .. } => TxKind::Transfer,
        }
    }

    pub fn asset_id(&self) -> &Digest {
        match self {
            TxBody::Mint { asset_id, .. } | TxBody::Transfer { asset_id, .. } => asset_id,
        }
    }

    pub fn signer_pk(&self) -> &PublicKey {
        match self {
            TxBody::Mint { signer_pk, .. } | TxBody::Transfer { signer_pk, .. } => signer_pk,
        }
    }

    pub fn prev_tx(&self) -> Option<&TxId> {
        match self {
            TxBody::Mint { .. } => None,
            TxBody::Transfer { prev_tx, .. } => Some(prev_tx),
        }
    }

    /// Owner after this transaction applies.
    pub fn resulting_owner(&self) -> poe_core::Result<PublicKey> {
        match self {
            TxBody::Mint { payload, .. } => payload.document.holder_key(),
            TxBody::Transfer { payload, .. } => Ok(payload.clone()),
        }
    }

    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        if let TxBody::Mint { payload, .. } = self {
            // Surfaces non-finite coordinates as a canonicalization error.
            payload.document.canonicalize()?;
        }
        Ok(to_canonical_bytes(self)?)
    }

    pub fn tx_id(&self) -> Result<TxId> {
        Ok(sha256(&self.canonical_bytes()?))
    }

    pub fn sign(self, signer: &KeyPair) -> Result<TxSubmission> {
        let signature = signer.sign(&self.canonical_bytes()?)?;
        Ok(TxSubmission { body: self, signature })
    }
}

/// A signed body awaiting a height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TxSubmission {
    #[serde(flatten)]
    pub body: TxBody,
    pub signature: Signature,
}

/// A transaction as recorded on the ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerTransaction {
    pub tx_id: TxId,
    pub height: u64,
    #[serde(flatten)]
    pub body: TxBody,
    pub signature: Signature,
}

impl LedgerTransaction {
    pub fn kind(&self) -> TxKind {
        self.body.kind()
    }

    pub fn asset_id(&self) -> &Digest {
        self.body.asset_id()
    }

    pub fn to_line(&self) -> Result<String> {
        let bytes = to_canonical_bytes(self)?;
        Ok(String::from_utf8(bytes).expect("canonical JSON is UTF-8"))
    }
}
