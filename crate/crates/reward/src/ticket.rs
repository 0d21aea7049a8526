use std::fmt;

use poe_core::Digest;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TicketState {
    Issued,
    Redeemed,
    Expired,
}

/// RS-side record binding a one-time code to H(Pwd).
///
/// `expires_at` is kept as unix seconds so the persisted store carries no
/// calendar strings.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardTicket {
    pub otc: String,
    pub pwd_digest: Digest,
    pub reward_type: String,
    pub state: TicketState,
    pub expires_at: i64,
    #[serde(default)]
    pub bad_claims: u32,
}

impl fmt::Debug for RewardTicket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RewardTicket")
            .field("otc", &"<redacted>")
            .field("reward_type", &self.reward_type)
            .field("state", &self.state)
            .field("expires_at", &self.expires_at)
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoucherState {
    Live,
    Spent,
}

/// The reward itself. Carries nothing about the client or the PoE.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Voucher {
    pub voucher_id: String,
    pub reward_type: String,
    pub state: VoucherState,
}

/// What the RS hands back to the ES at issuance: (OTC, H(Pwd)).
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuedReward {
    pub otc: String,
    pub pwd_digest: Digest,
}

impl fmt::Debug for IssuedReward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IssuedReward").field("pwd_digest", &self.pwd_digest).finish_non_exhaustive()
    }
}
