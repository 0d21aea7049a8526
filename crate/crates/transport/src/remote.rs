//! Clients for the ledger and rewarding-system nodes, implementing the same
//! traits as their in-process counterparts.

use std::sync::Mutex;

use poe_core::{Digest, PublicKey, Pwd};
use poe_ledger::{LedgerApi, LedgerError, LedgerTransaction, TxId, TxSubmission};
use poe_protocol::{Envelope, MsgType, ProtocolError};
use poe_reward::{IssuedReward, RewardError, RewardIssuer, Voucher};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::channel::SecureChannel;
use crate::dial::Dialer;
use crate::error::TransportError;
use crate::messages::*;

enum CallError {
    Remote { code: String, message: String },
    Transport(TransportError),
}

/// One lazily opened channel, reopened after a transport failure. Calls are
/// serialized over it.
struct Link {
    dialer: Dialer,
    session: &'static str,
    chan: Mutex<Option<SecureChannel>>,
}

impl Link {
    fn call<B: Serialize, R: DeserializeOwned>(&self, kind: MsgType, body: &B) -> Result<R, CallError> {
        let req = Envelope::new(kind, self.session, body).map_err(|e| CallError::Transport(e.into()))?;
        let mut guard = self.chan.lock().unwrap();
        if guard.is_none() {
            *guard = Some(self.dialer.open().map_err(CallError::Transport)?);
        }
        let chan = guard.as_mut().expect("opened above");
        let reply = match chan.call(&req) {
            Ok(reply) => reply,
            Err(e) => {
                *guard = None;
                return Err(CallError::Transport(e));
            }
        };
        // Keep channel transcripts from growing without bound.
        chan.take_transcript();
        match reply.expect(MsgType::Ok).and_then(|r| r.body_as::<R>()) {
            Ok(v) => Ok(v),
            Err(ProtocolError::Remote { code, message }) => Err(CallError::Remote { code, message }),
            Err(e) => Err(CallError::Transport(e.into())),
        }
    }
}

/// A ledger reached over a channel.
pub struct RemoteLedger {
    link: Link,
}

impl std::fmt::Debug for RemoteLedger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RemoteLedger({})", self.link.dialer.endpoint)
    }
}

impl RemoteLedger {
    pub fn new(dialer: Dialer) -> Self {
        Self { link: Link { dialer, session: "ledger", chan: Mutex::new(None) } }
    }

    fn call<B: Serialize, R: DeserializeOwned>(&self, kind: MsgType, body: &B, subject: &str) -> poe_ledger::Result<R> {
        self.link.call(kind, body).map_err(|e| match e {
            CallError::Transport(t) => LedgerError::Unavailable(t.to_string()),
            CallError::Remote { code, message } => ledger_error(&code, message, subject),
        })
    }
}

/// Rebuild a ledger error from its wire code. `subject` names the object
/// the request was about, for variants that carry it.
fn ledger_error(code: &str, message: String, subject: &str) -> LedgerError {
    match code {
        "MintUnauthorized" => LedgerError::MintUnauthorized,
        "AssetMismatch" => LedgerError::AssetMismatch,
        "AssetExists" => LedgerError::AssetExists(subject.to_owned()),
        "InvalidPoe" => LedgerError::InvalidPoe(message),
        "BadPrev" => LedgerError::BadPrev,
        "NotOwner" => LedgerError::NotOwner,
        "BadSignature" => LedgerError::BadSignature,
        "NotTransferable" => LedgerError::NotTransferable,
        "DoubleTransfer" => LedgerError::DoubleTransfer(subject.parse().unwrap_or(Digest::ZERO)),
        "RefNotFound" => LedgerError::RefNotFound(subject.to_owned()),
        "AssetNotFound" => LedgerError::AssetNotFound(subject.to_owned()),
        _ => LedgerError::Unavailable(format!("{code}: {message}")),
    }
}

impl LedgerApi for RemoteLedger {
    fn chain_id(&self) -> poe_ledger::Result<String> {
        let body: ChainIdBody = self.call(MsgType::GetChainId, &serde_json::json!({}), "")?;
        Ok(body.chain_id)
    }

    fn append(&self, tx: TxSubmission) -> poe_ledger::Result<LedgerTransaction> {
        let subject = match tx.body.prev_tx() {
            Some(prev) => prev.to_hex(),
            None => tx.body.asset_id().to_hex(),
        };
        self.call(MsgType::Append, &tx, &subject)
    }

    fn get(&self, tx_id: &TxId) -> poe_ledger::Result<LedgerTransaction> {
        self.call(MsgType::GetTx, &TxIdBody { tx_id: *tx_id }, &tx_id.to_hex())
    }

    fn head_owner(&self, asset_id: &Digest) -> poe_ledger::Result<PublicKey> {
        let body: OwnerBody = self.call(MsgType::GetHeadOwner, &AssetBody { asset_id: *asset_id }, &asset_id.to_hex())?;
        Ok(body.public_key)
    }

    fn history(&self, asset_id: &Digest) -> poe_ledger::Result<Vec<LedgerTransaction>> {
        let body: HistoryBody = self.call(MsgType::GetHistory, &AssetBody { asset_id: *asset_id }, &asset_id.to_hex())?;
        Ok(body.transactions)
    }
}

/// A rewarding system reached over a channel. Issuing needs a mutual
/// channel from a pinned engagement system; redeeming and spending do not.
pub struct RemoteRewards {
    link: Link,
}

impl std::fmt::Debug for RemoteRewards {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RemoteRewards({})", self.link.dialer.endpoint)
    }
}

impl RemoteRewards {
    pub fn new(dialer: Dialer) -> Self {
        Self { link: Link { dialer, session: "rs", chan: Mutex::new(None) } }
    }

    fn call<B: Serialize, R: DeserializeOwned>(&self, kind: MsgType, body: &B) -> poe_reward::Result<R> {
        self.link.call(kind, body).map_err(|e| match e {
            CallError::Transport(t) => RewardError::Unavailable(t.to_string()),
            CallError::Remote { code, message } => reward_error(&code, message),
        })
    }

    pub fn redeem(&self, otc: &str, pwd: &Pwd) -> poe_reward::Result<Voucher> {
        self.call(MsgType::Redeem, &RedeemBody { otc: otc.to_owned(), pwd: pwd.clone() })
    }

    pub fn spend(&self, voucher_id: &str) -> poe_reward::Result<Voucher> {
        self.call(MsgType::Spend, &SpendBody { voucher_id: voucher_id.to_owned() })
    }
}

impl RewardIssuer for RemoteRewards {
    fn issue(&self, reward_type: &str, pwd_digest: Digest) -> poe_reward::Result<IssuedReward> {
        self.call(MsgType::Issue, &IssueBody { reward_type: reward_type.to_owned(), pwd_digest })
    }
}

fn reward_error(code: &str, message: String) -> RewardError {
    match code {
        "NoRewardEligible" => RewardError::NoRewardEligible(message),
        "NoSuchRewardType" => RewardError::NoSuchRewardType(message),
        "AlreadyIssued" => RewardError::AlreadyIssued,
        "TicketNotFound" => RewardError::TicketNotFound,
        "BadClaim" => {
            let remaining = message.split(|c: char| !c.is_ascii_digit()).find_map(|t| t.parse().ok()).unwrap_or(0);
            RewardError::BadClaim { remaining }
        }
        "RetriesExhausted" => RewardError::RetriesExhausted,
        "Expired" => RewardError::Expired,
        "AlreadyRedeemed" => RewardError::AlreadyRedeemed,
        "VoucherNotFound" => RewardError::VoucherNotFound,
        "AlreadySpent" => RewardError::AlreadySpent,
        "Unauthorized" => RewardError::Unauthorized,
        _ => RewardError::Unavailable(format!("{code}: {message}")),
    }
}
