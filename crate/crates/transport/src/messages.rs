//! Request and reply bodies for the ledger and rewarding-system nodes.

use poe_core::{Digest, PublicKey, Pwd};
use poe_ledger::{LedgerTransaction, TxId};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainIdBody {
    pub chain_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TxIdBody {
    pub tx_id: TxId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetBody {
    pub asset_id: Digest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OwnerBody {
    pub public_key: PublicKey,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryBody {
    pub transactions: Vec<LedgerTransaction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IssueBody {
    pub reward_type: String,
    pub pwd_digest: Digest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RedeemBody {
    pub otc: String,
    pub pwd: Pwd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpendBody {
    pub voucher_id: String,
}
