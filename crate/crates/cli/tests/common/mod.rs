#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use poe_cli::config::{load, EsConfig, LedgerConfig, Role, RsFileConfig, TpConfig};
use poe_cli::init::{init_deployment, InitOptions};
use poe_core::crypto::ED25519;
use poe_core::PoeTime;
use poe_protocol::{EngagementSystem, ThirdParty};
use poe_transport::{ConnectConfig, Node, PinnedPeers};
use tempfile::TempDir;

pub fn frozen_time() -> PoeTime {
    "2025-06-12 T 09:30".parse().unwrap()
}

/// A deployment written by `init`, rebound to ephemeral ports with frozen
/// clocks and in-memory state.
pub struct Deployment {
    pub dir: TempDir,
    pub ledger: LedgerConfig,
    pub rs: RsFileConfig,
    pub es: EsConfig,
    pub tp: TpConfig,
}

/// Running nodes and their addresses.
pub struct Stack {
    pub ledger: String,
    pub rs: String,
    pub es: String,
    pub tp: String,
    _nodes: Vec<Node>,
}

/// The server side as plain objects, for running protocols without a
/// transport. Ledger and RS still run as nodes.
pub struct Direct {
    pub es: Arc<EngagementSystem>,
    pub tp: Arc<ThirdParty>,
    _nodes: Vec<Node>,
}

fn addr(node: &Node) -> String {
    node.local_addr().expect("tcp node").to_string()
}

impl Deployment {
    pub fn new(seed: u64) -> Self {
        Self::with(seed, |_| {})
    }

    pub fn with(seed: u64, tweak: impl FnOnce(&mut EsConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        init_deployment(&InitOptions { dir: dir.path().into(), base_port: 1, seed: Some(seed), algorithm: ED25519.into() })
            .unwrap();
        let mut ledger: LedgerConfig = load(&dir.path().join("ledger.json")).unwrap();
        let mut rs: RsFileConfig = load(&dir.path().join("rs.json")).unwrap();
        let mut es: EsConfig = load(&dir.path().join("es.json")).unwrap();
        let mut tp: TpConfig = load(&dir.path().join("tp.json")).unwrap();
        for node in [&mut ledger.node, &mut rs.node, &mut es.node, &mut tp.node] {
            node.listen = "127.0.0.1:0".into();
            node.clock = Some(frozen_time());
        }
        ledger.log = None;
        rs.store = None;
        tweak(&mut es);
        Self { dir, ledger, rs, es, tp }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn pins(&self) -> PathBuf {
        self.path("pins.json")
    }

    pub fn connect(&self) -> ConnectConfig {
        ConnectConfig::one_way(PinnedPeers::load(&self.pins()).unwrap())
    }

    fn backends(&self) -> (Node, Node, EsConfig, TpConfig) {
        let ledger = self.ledger.start().unwrap();
        let rs = self.rs.start().unwrap();
        let mut es = self.es.clone();
        es.ledger = Some(addr(&ledger));
        es.rs = Some(addr(&rs));
        let mut tp = self.tp.clone();
        tp.ledger = Some(addr(&ledger));
        (ledger, rs, es, tp)
    }

    pub fn start(&self) -> Stack {
        let (ledger, rs, es, tp) = self.backends();
        let es = es.start().unwrap();
        let tp = tp.start().unwrap();
        Stack { ledger: addr(&ledger), rs: addr(&rs), es: addr(&es), tp: addr(&tp), _nodes: vec![ledger, rs, es, tp] }
    }

    pub fn direct(&self) -> Direct {
        let (ledger, rs, es, tp) = self.backends();
        Direct { es: es.system().unwrap(), tp: tp.system().unwrap(), _nodes: vec![ledger, rs] }
    }
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}
