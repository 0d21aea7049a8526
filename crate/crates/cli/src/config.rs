//! Role daemon configuration files.
//!
//! Each daemon reads one JSON object. Relative paths inside it are taken
//! relative to the file's directory. When `credential`, `pins` or
//! `trusted_issuers` is absent, the path comes from `POE_CREDENTIAL`,
//! `POE_PINS` or `POE_TRUSTED_ISSUERS`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Duration;
use poe_core::rng::{self, SharedRng};
use poe_core::{Clock, KeyPair, ManualClock, PoeTime, SystemClock, TrustStore};
use poe_ledger::{Ledger, LedgerApi};
use poe_protocol::{EngagementSystem, EsPolicy, ThirdParty};
use poe_reward::{RewardingSystem, RsConfig};
use poe_transport::{
    ClientAuth, ConnectConfig, Credential, Dialer, Endpoint, EsService, LedgerService, ListenConfig, Node,
    PinnedPeers, RemoteLedger, RemoteRewards, RsService, Service, TpService,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const ENV_PINS: &str = "POE_PINS";
pub const ENV_CREDENTIAL: &str = "POE_CREDENTIAL";
pub const ENV_TRUSTED_ISSUERS: &str = "POE_TRUSTED_ISSUERS";

/// Settings every daemon has.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeSection {
    /// `host:port` to accept channels on.
    pub listen: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pins: Option<PathBuf>,
    /// Fixes the node's randomness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Freezes the node's clock at this time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<PoeTime>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsConfig {
    #[serde(flatten)]
    pub node: NodeSection,
    pub signing_key: PathBuf,
    pub policy: EsPolicy,
    /// Ledger node address, for ledger-mode issuance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<String>,
    /// Rewarding system address.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rs: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TpConfig {
    #[serde(flatten)]
    pub node: NodeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trusted_issuers: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<String>,
    /// Bind challenge responses to the exhibited PoE's digest.
    #[serde(default)]
    pub strict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ttl_secs: Option<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RsFileConfig {
    #[serde(flatten)]
    pub node: NodeSection,
    /// Names, among the pinned peers, of the engagement systems allowed to
    /// request rewards.
    pub issuers: Vec<String>,
    pub reward_types: Vec<String>,
    /// Append-only store; in memory when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expiry_days: Option<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LedgerConfig {
    #[serde(flatten)]
    pub node: NodeSection,
    pub chain_id: String,
    /// Trust store of the issuers allowed to mint.
    pub minters: PathBuf,
    /// Transaction log; in memory when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

/// Read a config file and anchor its relative paths at its directory.
pub fn load<T: DeserializeOwned + Anchor>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let mut cfg: T =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    cfg.anchor(dir);
    Ok(cfg)
}

pub trait Anchor {
    fn anchor(&mut self, dir: &Path);
}

fn anchor(p: &mut PathBuf, dir: &Path) {
    if p.is_relative() {
        *p = dir.join(&*p);
    }
}

fn anchor_opt(p: &mut Option<PathBuf>, dir: &Path) {
    if let Some(p) = p {
        anchor(p, dir);
    }
}

impl Anchor for NodeSection {
    fn anchor(&mut self, dir: &Path) {
        anchor_opt(&mut self.credential, dir);
        anchor_opt(&mut self.pins, dir);
    }
}

impl Anchor for EsConfig {
    fn anchor(&mut self, dir: &Path) {
        self.node.anchor(dir);
        anchor(&mut self.signing_key, dir);
    }
}

impl Anchor for TpConfig {
    fn anchor(&mut self, dir: &Path) {
        self.node.anchor(dir);
        anchor_opt(&mut self.trusted_issuers, dir);
    }
}

impl Anchor for RsFileConfig {
    fn anchor(&mut self, dir: &Path) {
        self.node.anchor(dir);
        anchor_opt(&mut self.store, dir);
    }
}

impl Anchor for LedgerConfig {
    fn anchor(&mut self, dir: &Path) {
        self.node.anchor(dir);
        anchor(&mut self.minters, dir);
        anchor_opt(&mut self.log, dir);
    }
}

/// A configured path, or the one named by an environment variable.
pub fn path_or_env(configured: Option<&Path>, var: &str, what: &str) -> Result<PathBuf> {
    if let Some(p) = configured {
        return Ok(p.to_owned());
    }
    std::env::var_os(var)
        .map(PathBuf::from)
        .ok_or_else(|| CliError::usage(format!("no {what} configured and {var} is not set")))
}

pub fn load_pins(configured: Option<&Path>) -> Result<PinnedPeers> {
    let path = path_or_env(configured, ENV_PINS, "pinned peers")?;
    Ok(PinnedPeers::load(&path)?)
}

pub fn load_credential(configured: Option<&Path>) -> Result<Credential> {
    let path = path_or_env(configured, ENV_CREDENTIAL, "credential")?;
    Ok(Credential::load(&path)?)
}

pub fn load_keys(path: &Path) -> Result<KeyPair> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

impl NodeSection {
    pub fn clock(&self) -> Arc<dyn Clock> {
        match self.clock {
            Some(t) => Arc::new(ManualClock::at(t)),
            None => Arc::new(SystemClock),
        }
    }

    pub fn rng(&self, label: &str) -> SharedRng {
        SharedRng::new(match self.seed {
            Some(s) => rng::derive(s, label),
            None => rng::from_entropy(),
        })
    }

    pub fn credential(&self) -> Result<Credential> {
        load_credential(self.credential.as_deref())
    }

    pub fn pins(&self) -> Result<PinnedPeers> {
        load_pins(self.pins.as_deref())
    }

    fn listen_config(&self) -> Result<ListenConfig> {
        Ok(ListenConfig::new(self.credential()?))
    }
}

/// A role that can run as a daemon.
pub trait Role {
    fn node(&self) -> &NodeSection;
    fn service(&self) -> Result<(ListenConfig, Arc<dyn Service>)>;

    /// Start accepting channels on the configured address.
    fn start(&self) -> Result<Node> {
        let (listen, service) = self.service()?;
        Ok(Node::on_tcp(&self.node().listen, &listen, service)?)
    }
}

impl EsConfig {
    pub fn system(&self) -> Result<Arc<EngagementSystem>> {
        let keys = load_keys(&self.signing_key)?;
        let mut es = EngagementSystem::new(keys, self.policy.clone(), self.node.clock());
        if let Some(addr) = &self.ledger {
            let dialer = Dialer::new(Endpoint::Tcp(addr.clone()), ConnectConfig::one_way(self.node.pins()?));
            es = es.with_ledger(Arc::new(RemoteLedger::new(dialer)));
        }
        if let Some(addr) = &self.rs {
            let connect = ConnectConfig::mutual(self.node.pins()?, Some(self.node.credential()?));
            es = es.with_rewards(Arc::new(RemoteRewards::new(Dialer::new(Endpoint::Tcp(addr.clone()), connect))));
        }
        Ok(Arc::new(es))
    }
}

impl Role for EsConfig {
    fn node(&self) -> &NodeSection {
        &self.node
    }

    fn service(&self) -> Result<(ListenConfig, Arc<dyn Service>)> {
        Ok((self.node.listen_config()?, Arc::new(EsService(self.system()?))))
    }
}

impl TpConfig {
    pub fn system(&self) -> Result<Arc<ThirdParty>> {
        let path = path_or_env(self.trusted_issuers.as_deref(), ENV_TRUSTED_ISSUERS, "trusted issuers")?;
        let trust = TrustStore::load(&path)?;
        let mut tp = ThirdParty::new(trust, self.node.clock(), self.node.rng("tp")).strict(self.strict);
        if let Some(secs) = self.ttl_secs {
            tp = tp.with_ttl(Duration::seconds(secs));
        }
        if let Some(addr) = &self.ledger {
            let dialer = Dialer::new(Endpoint::Tcp(addr.clone()), ConnectConfig::one_way(self.node.pins()?));
            tp = tp.with_ledger(Arc::new(RemoteLedger::new(dialer)));
        }
        Ok(Arc::new(tp))
    }
}

impl Role for TpConfig {
    fn node(&self) -> &NodeSection {
        &self.node
    }

    fn service(&self) -> Result<(ListenConfig, Arc<dyn Service>)> {
        Ok((self.node.listen_config()?, Arc::new(TpService(self.system()?))))
    }
}

impl RsFileConfig {
    pub fn system(&self) -> Result<Arc<RewardingSystem>> {
        let mut config = RsConfig::new(self.reward_types.iter().cloned());
        if let Some(days) = self.expiry_days {
            config.expiry = Duration::days(days);
        }
        let (clock, rng) = (self.node.clock(), self.node.rng("rs"));
        let rs = match &self.store {
            Some(path) => RewardingSystem::open(config, clock, rng, path)?,
            None => RewardingSystem::new(config, clock, rng),
        };
        Ok(Arc::new(rs))
    }

    /// The pinned identities named in `issuers`.
    pub fn issuer_pins(&self) -> Result<PinnedPeers> {
        let pins = self.node.pins()?;
        let mut out = PinnedPeers::new();
        for name in &self.issuers {
            let found: Vec<_> = pins.identities().into_iter().filter(|id| &id.name == name).collect();
            if found.is_empty() {
                return Err(CliError::usage(format!("issuer {name:?} is not among the pinned peers")));
            }
            for id in found {
                out.insert(id);
            }
        }
        Ok(out)
    }
}

impl Role for RsFileConfig {
    fn node(&self) -> &NodeSection {
        &self.node
    }

    fn service(&self) -> Result<(ListenConfig, Arc<dyn Service>)> {
        let issuers = self.issuer_pins()?;
        let listen = self.node.listen_config()?.client_auth(ClientAuth::Optional(issuers.clone()));
        Ok((listen, Arc::new(RsService { rs: self.system()?, issuers })))
    }
}

impl LedgerConfig {
    pub fn system(&self) -> Result<Arc<Ledger>> {
        let minters = TrustStore::load(&self.minters)?;
        let ledger = match &self.log {
            Some(path) => Ledger::open(&self.chain_id, minters, path)?,
            None => Ledger::new(&self.chain_id, minters),
        };
        Ok(Arc::new(ledger))
    }
}

impl Role for LedgerConfig {
    fn node(&self) -> &NodeSection {
        &self.node
    }

    fn service(&self) -> Result<(ListenConfig, Arc<dyn Service>)> {
        let ledger: Arc<dyn LedgerApi> = self.system()?;
        Ok((self.node.listen_config()?, Arc::new(LedgerService(ledger))))
    }
}
