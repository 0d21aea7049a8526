//! Message envelopes and bodies. Every frame on every channel is one
//! envelope: `{"v":1,"type":...,"session":...,"body":{...}}`.

use std::collections::BTreeMap;

use poe_core::canonical::to_canonical_bytes;
use poe_core::{DisclosurePackage, PoeDraft, PublicKey, Pwd, SignedPoe};
use poe_ledger::PoeRef;
use poe_reward::IssuedReward;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::client::EngagementRequest;
use crate::error::{ProtocolError, Result};
use crate::policy::RejectReason;

pub const WIRE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MsgType {
    // Generation.
    Engage,
    DraftOk,
    Keys,
    PoeIssued,
    // Exhibition.
    Exhibit,
    Challenge,
    Response,
    Verdict,
    // Transfer between holders.
    TransferPk,
    TransferDone,
    // Ledger node.
    GetChainId,
    GetTx,
    GetHeadOwner,
    GetHistory,
    Append,
    // Rewarding system.
    Issue,
    Redeem,
    Spend,
    // Local wallet API.
    ListPoes,
    GetPoe,
    WalletExhibit,
    WalletTransfer,
    WalletRedeem,
    ListVouchers,
    SpendVoucher,
    // Generic replies.
    Ok,
    Error,
}

impl MsgType {
    pub fn as_str(&self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub v: u32,
    #[serde(rename = "type")]
    pub kind: MsgType,
    pub session: String,
    pub body: Value,
}

impl Envelope {
    pub fn new<B: Serialize>(kind: MsgType, session: impl Into<String>, body: &B) -> Result<Self> {
        Ok(Self { v: WIRE_VERSION, kind, session: session.into(), body: serde_json::to_value(body)? })
    }

    pub fn error(session: impl Into<String>, err: &ProtocolError) -> Self {
        let reason = match err {
            ProtocolError::EngagementRejected(r) => Some(r.clone()),
            _ => None,
        };
        let body = ErrorBody { code: err.code(), message: err.to_string(), reason };
        Self::new(MsgType::Error, session, &body).expect("error body serializes")
    }

    /// Decode the body, turning an ERROR envelope into `Err(Remote)`.
    pub fn body_as<T: DeserializeOwned>(&self) -> Result<T> {
        if self.kind == MsgType::Error {
            return Err(self.remote_error());
        }
        serde_json::from_value(self.body.clone()).map_err(|e| ProtocolError::Wire(format!("{} body: {e}", self.kind.as_str())))
    }

    pub fn remote_error(&self) -> ProtocolError {
        match serde_json::from_value::<ErrorBody>(self.body.clone()) {
            Ok(b) => ProtocolError::Remote { code: b.code, message: b.message },
            Err(e) => ProtocolError::Wire(format!("ERROR body: {e}")),
        }
    }

    /// Require a given type, passing ERROR through as `Err(Remote)`.
    pub fn expect(self, kind: MsgType) -> Result<Self> {
        if self.kind == MsgType::Error {
            return Err(self.remote_error());
        }
        if self.kind != kind {
            return Err(ProtocolError::Unexpected(format!("{} (wanted {})", self.kind.as_str(), kind.as_str())));
        }
        Ok(self)
    }

    /// Canonical JSON bytes, so equal envelopes are equal on the wire.
    pub fn to_bytes(&self) -> Vec<u8> {
        to_canonical_bytes(self).expect("envelope values are finite JSON")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let env: Envelope = serde_json::from_slice(bytes)?;
        if env.v != WIRE_VERSION {
            return Err(ProtocolError::Wire(format!("unsupported version {}", env.v)));
        }
        Ok(env)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<RejectReason>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IssueMode {
    #[default]
    Central,
    Ledger,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngageBody {
    pub mode: IssueMode,
    pub request: EngagementRequest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DraftOkBody {
    pub draft: PoeDraft,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeysBody {
    pub public_key: PublicKey,
    pub pwd: Pwd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoeIssuedBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poe: Option<SignedPoe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poe_ref: Option<PoeRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<IssuedReward>,
    /// Set when a reward was due but could not be obtained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhibitBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poe: Option<SignedPoe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poe_ref: Option<PoeRef>,
    #[serde(default, skip_serializing_if = "DisclosurePackage::is_empty")]
    pub disclosure: DisclosurePackage,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictBody {
    pub accept: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub disclosed: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl VerdictBody {
    pub fn reject(reason: impl Into<String>) -> Self {
        Self { accept: false, disclosed: BTreeMap::new(), reason: Some(reason.into()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferPkBody {
    pub public_key: PublicKey,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferDoneBody {
    pub poe_ref: PoeRef,
}
