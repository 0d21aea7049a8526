#![allow(dead_code)]

use std::sync::Arc;

use chrono::Duration;
use poe_core::crypto::ED25519;
use poe_core::rng::{seeded, PoeRng, SharedRng};
use poe_core::{KeyPair, ManualClock, PoeTime, Pwd, SignedPoe, TrustStore};
use poe_ledger::{Ledger, PoeRef};
use poe_protocol::*;
use poe_reward::{RewardPolicy, RewardingSystem, RsConfig};
use serde_json::{json, Map, Value};

pub const CHAIN: &str = "poe-test";

pub struct World {
    pub clock: Arc<ManualClock>,
    pub es_keys: KeyPair,
    pub es: Arc<EngagementSystem>,
    pub tp: Arc<ThirdParty>,
    pub ledger: Arc<Ledger>,
    pub rs: Arc<RewardingSystem>,
    pub rng: PoeRng,
}

pub fn start_time() -> PoeTime {
    "2025-06-01 T 18:00".parse().unwrap()
}

pub fn reward_policy() -> RewardPolicy {
    RewardPolicy::new("activity").map("exam-pass", "education").map("museum-feedback", "tourism")
}

impl World {
    pub fn new(seed: u64, policy: EsPolicy) -> Self {
        Self::build(seed, policy, false)
    }

    pub fn strict(seed: u64, policy: EsPolicy) -> Self {
        Self::build(seed, policy, true)
    }

    fn build(seed: u64, policy: EsPolicy, strict: bool) -> Self {
        let mut rng = seeded(seed);
        let clock = Arc::new(ManualClock::at(start_time()));
        let es_keys = KeyPair::generate_with(ED25519, &mut rng).unwrap();
        let trust = TrustStore::with_keys([es_keys.public.clone()]);
        let ledger = Arc::new(Ledger::new(CHAIN, trust.clone()));
        let rs = Arc::new(RewardingSystem::new(
            RsConfig::new(["education", "tourism"]),
            clock.clone(),
            SharedRng::new(seeded(seed + 1)),
        ));
        let es = Arc::new(
            EngagementSystem::new(es_keys.clone(), policy, clock.clone())
                .with_ledger(ledger.clone())
                .with_rewards(rs.clone()),
        );
        let tp = Arc::new(
            ThirdParty::new(trust, clock.clone(), SharedRng::new(seeded(seed + 2)))
                .with_ledger(ledger.clone())
                .strict(strict),
        );
        Self { clock, es_keys, es, tp, ledger, rs, rng }
    }

    pub fn client_keys(&mut self) -> KeyPair {
        KeyPair::generate_with(ED25519, &mut self.rng).unwrap()
    }

    /// Issue a PoE for `data` with every field plain.
    pub fn issue(&mut self, data: Value) -> (SignedPoe, KeyPair) {
        let data = obj(data);
        let policy = plain_policy(&data);
        let (req, _) = begin_engagement(&data, &policy, &mut self.rng).unwrap();
        let draft = self.es.build_draft(&req).unwrap();
        let keys = self.client_keys();
        let pwd = Pwd::generate(&mut self.rng);
        (self.es.issue_poe(draft, &keys.public, pwd.digest()).unwrap(), keys)
    }

    pub fn mint(&mut self, data: Value) -> (PoeRef, KeyPair) {
        let data = obj(data);
        let policy = plain_policy(&data);
        let (req, _) = begin_engagement(&data, &policy, &mut self.rng).unwrap();
        let draft = self.es.build_draft(&req).unwrap();
        let keys = self.client_keys();
        let pwd = Pwd::generate(&mut self.rng);
        (self.es.issue_poe_onchain(draft, &keys.public, pwd.digest(), &*self.ledger).unwrap(), keys)
    }

    pub fn advance(&self, secs: i64) {
        self.clock.advance(Duration::seconds(secs));
    }
}

pub fn obj(v: Value) -> Map<String, Value> {
    v.as_object().expect("object").clone()
}

pub fn plain_policy(data: &Map<String, Value>) -> DisclosurePolicy {
    data.keys().map(|k| (k.clone(), Disclosure::Plain)).collect()
}

/// The prototype's seminar record.
pub fn seminar_record() -> Value {
    json!({
        "student_id": "S-1042",
        "name": "Alice",
        "surname": "Rossi",
        "email": "alice.rossi@example.org",
        "gps": {"lat": 45.4642, "lng": 9.19, "alt": 120.0},
        "timestamp": "2025-06-01 T 17:45",
        "activity": "exam-pass"
    })
}
