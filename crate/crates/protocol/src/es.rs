//! The Engagement System: validates engagement requests, builds and signs
//! PoEs, registers them on a ledger when asked, and relays reward requests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use poe_core::document::{EngagementData, ProofType, TimestampInfo};
use poe_core::{Clock, Digest, Gps, KeyPair, PoeDraft, PoeTime, PublicKey, SignedPoe};
use poe_ledger::{LedgerApi, LedgerError, PoeRef, TxBody};
use poe_reward::{anonymize, IssuedReward, RewardError, RewardIssuer};
use serde_json::Value;

use crate::client::EngagementRequest;
use crate::error::{ProtocolError, Result};
use crate::policy::{EsPolicy, RejectReason};

/// What the ES keeps per issued PoE.
#[derive(Debug, Clone)]
pub struct StoredPoe {
    pub signed: SignedPoe,
    pub pwd_digest: Digest,
    pub poe_ref: Option<PoeRef>,
}

#[derive(Default)]
struct Store {
    poes: BTreeMap<Digest, StoredPoe>,
    rewarded: BTreeSet<Digest>,
}

pub struct EngagementSystem {
    keypair: KeyPair,
    policy: EsPolicy,
    clock: Arc<dyn Clock>,
    ledger: Option<Arc<dyn LedgerApi>>,
    rewards: Option<Arc<dyn RewardIssuer>>,
    store: Mutex<Store>,
}

impl fmt::Debug for EngagementSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EngagementSystem")
            .field("key_id", &self.keypair.public.key_id())
            .field("policy", &self.policy)
            .finish_non_exhaustive()
    }
}

fn reject(reason: RejectReason) -> ProtocolError {
    ProtocolError::EngagementRejected(reason)
}

impl EngagementSystem {
    pub fn new(keypair: KeyPair, policy: EsPolicy, clock: Arc<dyn Clock>) -> Self {
        Self { keypair, policy, clock, ledger: None, rewards: None, store: Mutex::default() }
    }

    pub fn with_ledger(mut self, ledger: Arc<dyn LedgerApi>) -> Self {
        self.ledger = Some(ledger);
        self
    }

    pub fn with_rewards(mut self, rewards: Arc<dyn RewardIssuer>) -> Self {
        self.rewards = Some(rewards);
        self
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.keypair.public
    }

    pub fn policy(&self) -> &EsPolicy {
        &self.policy
    }

    pub fn ledger(&self) -> Option<&Arc<dyn LedgerApi>> {
        self.ledger.as_ref()
    }

    /// Apply the acceptance rules and build the unsigned document.
    pub fn build_draft(&self, req: &EngagementRequest) -> Result<PoeDraft> {
        let plain = &req.engagement_data;
        if let Some(field) = req.committed.keys().find(|k| plain.contains_key(*k)) {
            return Err(reject(RejectReason::InvalidCommitment { field: field.clone() }));
        }
        let fields: BTreeSet<&String> = plain.keys().chain(req.committed.keys()).collect();
        if fields.is_empty() {
            return Err(reject(RejectReason::NothingDisclosed));
        }
        if let Some(allowed) = &self.policy.allowed_fields {
            if let Some(f) = fields.iter().find(|f| !allowed.contains(**f)) {
                return Err(reject(RejectReason::FieldNotAllowed { field: (*f).clone() }));
            }
        }
        if let Some(f) = self.policy.required_fields.iter().find(|f| !fields.contains(f)) {
            return Err(reject(RejectReason::MissingRequiredField { field: f.clone() }));
        }
        let now = self.clock.now();
        if !self.policy.in_window(now) {
            return Err(reject(RejectReason::OutsideEventWindow { now: PoeTime::new(now) }));
        }

        // A plain "gps" record also fills the document's own gps field.
        let gps = match plain.get("gps") {
            None => None,
            Some(v) => {
                let g: Gps = serde_json::from_value(v.clone())
                    .map_err(|e| reject(RejectReason::InvalidGps { detail: e.to_string() }))?;
                g.check().map_err(|e| reject(RejectReason::InvalidGps { detail: e.to_string() }))?;
                Some(g)
            }
        };

        let timestamp = PoeTime::minutes(now);
        let mut draft = PoeDraft {
            proof_type: ProofType,
            transferable: self.policy.transferable,
            timestamp: TimestampInfo::utc(timestamp),
            gps,
            engagement_data: EngagementData::encode(&Value::Object(plain.clone())),
            sensitive_data: req.committed.iter().map(|(k, o)| (k.clone(), o.commitment().to_hex())).collect(),
            other_data: Default::default(),
        };
        if let Some(validity) = self.policy.validity_days {
            draft.set_expiration(timestamp.plus(validity));
        }
        Ok(draft)
    }

    fn complete_and_sign(&self, draft: PoeDraft, client_pk: &PublicKey) -> Result<SignedPoe> {
        client_pk.validate()?;
        let doc = draft.complete(client_pk);
        doc.validate()?;
        Ok(SignedPoe::sign(doc, &self.keypair)?)
    }

    /// Centralized issuance: sign, store, return.
    pub fn issue_poe(&self, draft: PoeDraft, client_pk: &PublicKey, pwd_digest: Digest) -> Result<SignedPoe> {
        let signed = self.complete_and_sign(draft, client_pk)?;
        let digest = signed.poe_digest()?;
        let mut store = self.store.lock().unwrap();
        if store.poes.contains_key(&digest) {
            return Err(ProtocolError::DuplicatePoe);
        }
        store.poes.insert(digest, StoredPoe { signed: signed.clone(), pwd_digest, poe_ref: None });
        Ok(signed)
    }

    /// Ledger issuance: sign, mint, return the reference.
    pub fn issue_poe_onchain(
        &self,
        draft: PoeDraft,
        client_pk: &PublicKey,
        pwd_digest: Digest,
        ledger: &dyn LedgerApi,
    ) -> Result<PoeRef> {
        let signed = self.complete_and_sign(draft, client_pk)?;
        let digest = signed.poe_digest()?;
        // Held across the append so a concurrent duplicate cannot slip in.
        let mut store = self.store.lock().unwrap();
        if store.poes.contains_key(&digest) {
            return Err(ProtocolError::DuplicatePoe);
        }
        let sub = TxBody::mint(signed.clone(), &self.keypair.public)?.sign(&self.keypair)?;
        let tx = ledger.append(sub).map_err(|e| match e {
            LedgerError::AssetExists(_) => ProtocolError::DuplicatePoe,
            other => other.into(),
        })?;
        let poe_ref = PoeRef::new(ledger.chain_id()?, tx.tx_id);
        store.poes.insert(digest, StoredPoe { signed, pwd_digest, poe_ref: Some(poe_ref.clone()) });
        Ok(poe_ref)
    }

    /// Ask the rewarding system for a ticket. Only the reward category and
    /// H(Pwd) leave the ES, and at most one request is made per PoE.
    /// `Ok(None)` when rewards are off or the engagement earns none.
    pub fn request_reward(&self, poe_digest: &Digest, req: &EngagementRequest) -> Result<Option<IssuedReward>> {
        let (Some(policy), Some(rs)) = (&self.policy.reward, &self.rewards) else {
            return Ok(None);
        };
        let tag = match anonymize(&req.full_record(), policy) {
            Ok(tag) => tag,
            Err(RewardError::NoRewardEligible(_)) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let pwd_digest = {
            let mut store = self.store.lock().unwrap();
            let stored = store
                .poes
                .get(poe_digest)
                .ok_or_else(|| ProtocolError::Session("reward requested for an unknown PoE".into()))?;
            let d = stored.pwd_digest;
            if !store.rewarded.insert(*poe_digest) {
                return Err(RewardError::AlreadyIssued.into());
            }
            d
        };
        Ok(Some(rs.issue(&tag, pwd_digest)?))
    }

    pub fn stored(&self, poe_digest: &Digest) -> Option<StoredPoe> {
        self.store.lock().unwrap().poes.get(poe_digest).cloned()
    }

    pub fn issued_count(&self) -> usize {
        self.store.lock().unwrap().poes.len()
    }
}
