#![allow(dead_code)]

use std::sync::Arc;

use poe_core::crypto::ED25519;
use poe_core::rng::{derive, SharedRng};
use poe_core::{KeyPair, ManualClock, PoeTime, TrustStore};
use poe_ledger::Ledger;
use poe_protocol::*;
use poe_reward::{RewardPolicy, RewardingSystem, RsConfig};
use poe_transport::*;
use serde_json::{json, Map, Value};

pub const CHAIN: &str = "poe-net";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wiring {
    Fabric,
    Tls,
}

pub struct Creds {
    pub es: Credential,
    pub tp: Credential,
    pub rs: Credential,
    pub ledger: Credential,
}

impl Creds {
    pub fn generate() -> Self {
        Self {
            es: Credential::generate("es").unwrap(),
            tp: Credential::generate("tp").unwrap(),
            rs: Credential::generate("rs").unwrap(),
            ledger: Credential::generate("ledger").unwrap(),
        }
    }

    pub fn pins(&self) -> PinnedPeers {
        PinnedPeers::of([&self.es, &self.tp, &self.rs, &self.ledger].map(|c| c.identity()))
    }
}

/// The four role nodes, deployed on one wiring.
pub struct Net {
    pub wiring: Wiring,
    pub fabric: Fabric,
    pub creds: Creds,
    pub es_keys: KeyPair,
    pub clock: Arc<ManualClock>,
    pub ledger: Arc<Ledger>,
    pub rs: Arc<RewardingSystem>,
    pub es: Arc<EngagementSystem>,
    pub tp: Arc<ThirdParty>,
    pub nodes: Vec<Node>,
}

pub fn reward_policy() -> RewardPolicy {
    RewardPolicy::new("activity").map("exam-pass", "education").map("museum-feedback", "tourism")
}

impl Net {
    pub fn up(wiring: Wiring, seed: u64) -> Self {
        Self::up_with(wiring, seed, Creds::generate())
    }

    pub fn up_with(wiring: Wiring, seed: u64, creds: Creds) -> Self {
        let fabric = Fabric::new();
        let clock = Arc::new(ManualClock::at("2025-06-01 T 18:00".parse::<PoeTime>().unwrap()));
        let es_keys = KeyPair::generate_with(ED25519, &mut derive(seed, "es-key")).unwrap();
        let trust = TrustStore::with_keys([es_keys.public.clone()]);
        let mut nodes = Vec::new();
        let start = |name: &str, cfg: ListenConfig, svc: Arc<dyn Service>| match wiring {
            Wiring::Fabric => Node::on_fabric(&fabric, name, &cfg, svc).unwrap(),
            Wiring::Tls => Node::on_tcp("127.0.0.1:0", &cfg, svc).unwrap(),
        };

        let ledger = Arc::new(Ledger::new(CHAIN, trust.clone()));
        nodes.push(start("ledger", ListenConfig::new(creds.ledger.clone()), Arc::new(LedgerService(ledger.clone()))));
        let ledger_at = nodes[0].endpoint();

        let rs = Arc::new(RewardingSystem::new(
            RsConfig::new(["education", "tourism"]),
            clock.clone(),
            SharedRng::new(derive(seed, "rs")),
        ));
        let es_only = PinnedPeers::of([creds.es.identity()]);
        nodes.push(start(
            "rs",
            ListenConfig::new(creds.rs.clone()).client_auth(ClientAuth::Optional(es_only.clone())),
            Arc::new(RsService { rs: rs.clone(), issuers: es_only }),
        ));
        let rs_at = nodes[1].endpoint();

        let pins = creds.pins();
        let remote_ledger = Arc::new(RemoteLedger::new(Dialer::new(ledger_at, ConnectConfig::one_way(pins.clone()))));
        let remote_rs = Arc::new(RemoteRewards::new(Dialer::new(
            rs_at,
            ConnectConfig::mutual(pins.clone(), Some(creds.es.clone())),
        )));
        let mut policy = EsPolicy::open(true);
        policy.reward = Some(reward_policy());
        let es = Arc::new(
            EngagementSystem::new(es_keys.clone(), policy, clock.clone())
                .with_ledger(remote_ledger.clone())
                .with_rewards(remote_rs),
        );
        nodes.push(start("es", ListenConfig::new(creds.es.clone()), Arc::new(EsService(es.clone()))));

        let tp = Arc::new(
            ThirdParty::new(trust, clock.clone(), SharedRng::new(derive(seed, "tp"))).with_ledger(remote_ledger),
        );
        nodes.push(start("tp", ListenConfig::new(creds.tp.clone()), Arc::new(TpService(tp.clone()))));

        Self { wiring, fabric, creds, es_keys, clock, ledger, rs, es, tp, nodes }
    }

    pub fn at(&self, role: &str) -> Endpoint {
        let i = ["ledger", "rs", "es", "tp"].iter().position(|r| *r == role).expect("known role");
        self.nodes[i].endpoint()
    }

    pub fn client(&self) -> ConnectConfig {
        ConnectConfig::one_way(self.creds.pins())
    }

    pub fn open(&self, role: &str) -> SecureChannel {
        self.at(role).open(&self.client()).unwrap()
    }

    pub fn rewards(&self) -> RemoteRewards {
        RemoteRewards::new(Dialer::new(self.at("rs"), self.client()))
    }

    pub fn remote_ledger(&self) -> RemoteLedger {
        RemoteLedger::new(Dialer::new(self.at("ledger"), self.client()))
    }
}

pub fn obj(v: Value) -> Map<String, Value> {
    v.as_object().expect("object").clone()
}

pub fn plain_policy(data: &Map<String, Value>) -> DisclosurePolicy {
    data.keys().map(|k| (k.clone(), Disclosure::Plain)).collect()
}

pub fn exam_record() -> Map<String, Value> {
    obj(json!({"student_id": "S-1042", "course": "Networks", "activity": "exam-pass"}))
}

pub fn museum_record() -> Map<String, Value> {
    obj(json!({"visit": "Museo Civico", "activity": "museum-feedback", "gps": {"lat": 45.07, "lng": 7.69, "alt": 240.0}}))
}
