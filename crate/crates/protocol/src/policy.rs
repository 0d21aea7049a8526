//! Disclosure choices on the client side and acceptance rules on the
//! engagement-system side.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Duration, Utc};
use poe_core::PoeTime;
use poe_reward::RewardPolicy;
use serde::{Deserialize, Serialize};

/// How one engagement field travels to the engagement system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disclosure {
    /// Written into the PoE's engagement data.
    Plain,
    /// Only a salted commitment enters the PoE; the client keeps the opening.
    Committed,
    /// Never leaves the client.
    Excluded,
}

/// Field name to disclosure choice. File form is a flat JSON object.
pub type DisclosurePolicy = BTreeMap<String, Disclosure>;

/// Why the engagement system refused a request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum RejectReason {
    FieldNotAllowed { field: String },
    MissingRequiredField { field: String },
    OutsideEventWindow { now: PoeTime },
    NothingDisclosed,
    InvalidGps { detail: String },
    InvalidCommitment { field: String },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::FieldNotAllowed { field } => write!(f, "field {field:?} is not accepted"),
            RejectReason::MissingRequiredField { field } => write!(f, "required field {field:?} is missing"),
            RejectReason::OutsideEventWindow { now } => write!(f, "{now} is outside the event window"),
            RejectReason::NothingDisclosed => f.write_str("no field disclosed"),
            RejectReason::InvalidGps { detail } => write!(f, "gps: {detail}"),
            RejectReason::InvalidCommitment { field } => write!(f, "field {field:?} has the same name in plain and committed"),
        }
    }
}

/// Acceptance rules and PoE parameters of an engagement system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsPolicy {
    /// Accept only these fields; `None` accepts any.
    #[serde(default)]
    pub allowed_fields: Option<BTreeSet<String>>,
    /// Fields that must be disclosed, plain or committed.
    #[serde(default)]
    pub required_fields: BTreeSet<String>,
    pub transferable: bool,
    /// PoE lifetime from issuance; `None` means no expiration date.
    #[serde(default, with = "opt_days")]
    pub validity_days: Option<Duration>,
    #[serde(default)]
    pub event_window: Option<(PoeTime, PoeTime)>,
    /// Reward categories; `None` disables rewards.
    #[serde(default)]
    pub reward: Option<RewardPolicy>,
}

impl EsPolicy {
    pub fn open(transferable: bool) -> Self {
        Self {
            allowed_fields: None,
            required_fields: BTreeSet::new(),
            transferable,
            validity_days: None,
            event_window: None,
            reward: None,
        }
    }

    pub(crate) fn in_window(&self, now: DateTime<Utc>) -> bool {
        match &self.event_window {
            Some((from, to)) => from.instant() <= now && now <= to.instant(),
            None => true,
        }
    }
}

mod opt_days {
    use chrono::Duration;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.num_days()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<i64>::deserialize(d)?.map(Duration::days))
    }
}
