//! Generate a local deployment: credentials, pins, issuer key and one
//! config file per role, wired to consecutive loopback ports.

use std::fs;
use std::path::{Path, PathBuf};

use poe_core::rng::{derive, from_entropy};
use poe_core::{KeyPair, TrustStore};
use poe_protocol::{Disclosure, DisclosurePolicy, EsPolicy};
use poe_reward::RewardPolicy;
use poe_transport::{Credential, PinnedPeers};
use serde::Serialize;
use serde_json::json;

use crate::config::{EsConfig, LedgerConfig, NodeSection, RsFileConfig, TpConfig};
use crate::error::{CliError, Result};
use crate::wallet::write_atomic;

pub const ROLES: [&str; 4] = ["ledger", "rs", "es", "tp"];

#[derive(Clone, Debug)]
pub struct InitOptions {
    pub dir: PathBuf,
    pub base_port: u16,
    /// Fixes the issuer key and every daemon's randomness.
    pub seed: Option<u64>,
    pub algorithm: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes(), false)
}

fn node(role: &str, port: u16, seed: Option<u64>) -> NodeSection {
    NodeSection {
        listen: format!("127.0.0.1:{port}"),
        credential: Some(PathBuf::from(format!("credentials/{role}.json"))),
        pins: Some(PathBuf::from("pins.json")),
        seed,
        clock: None,
    }
}

pub fn reward_policy() -> RewardPolicy {
    RewardPolicy::new("activity").map("exam-pass", "education").map("museum-feedback", "tourism")
}

/// Write the deployment under `opts.dir`. Returns the files written.
pub fn init_deployment(opts: &InitOptions) -> Result<Vec<PathBuf>> {
    let dir = &opts.dir;
    if dir.join("pins.json").exists() {
        return Err(CliError::usage(format!("{} already holds a deployment", dir.display())));
    }
    for sub in ["credentials", "state", "client"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    let mut written = Vec::new();
    let port = |i: usize| opts.base_port + i as u16;
    let addr = |role: &str| format!("127.0.0.1:{}", port(ROLES.iter().position(|r| *r == role).expect("role")));

    let mut pins = PinnedPeers::new();
    for role in ROLES {
        let cred = Credential::generate(role)?;
        let path = dir.join(format!("credentials/{role}.json"));
        cred.save(&path)?;
        pins.insert(cred.identity());
        written.push(path);
    }
    write_atomic(&dir.join("pins.json"), pins.to_json().as_bytes(), false)?;
    written.push(dir.join("pins.json"));

    let mut rng = match opts.seed {
        Some(s) => derive(s, "es-key"),
        None => from_entropy(),
    };
    let es_key = KeyPair::generate_with(&opts.algorithm, &mut rng)?;
    write_atomic(&dir.join("es-key.json"), serde_json::to_string_pretty(&es_key)?.as_bytes(), true)?;
    let trust = TrustStore::with_keys([es_key.public.clone()]);
    write_atomic(&dir.join("issuers.json"), trust.to_json()?.as_bytes(), false)?;
    written.extend([dir.join("es-key.json"), dir.join("issuers.json")]);

    let ledger = LedgerConfig {
        node: node("ledger", port(0), opts.seed),
        chain_id: "poe-local".into(),
        minters: "issuers.json".into(),
        log: Some("state/ledger.ndjson".into()),
    };
    let rs = RsFileConfig {
        node: node("rs", port(1), opts.seed),
        issuers: vec!["es".into()],
        reward_types: reward_policy().reward_types().map(str::to_owned).collect(),
        store: Some("state/rs.log".into()),
        expiry_days: None,
    };
    let mut policy = EsPolicy::open(true);
    policy.reward = Some(reward_policy());
    let es = EsConfig {
        node: node("es", port(2), opts.seed),
        signing_key: "es-key.json".into(),
        policy,
        ledger: Some(addr("ledger")),
        rs: Some(addr("rs")),
    };
    let tp = TpConfig {
        node: node("tp", port(3), opts.seed),
        trusted_issuers: Some("issuers.json".into()),
        ledger: Some(addr("ledger")),
        strict: false,
        ttl_secs: None,
    };
    for (role, value) in [
        ("ledger", serde_json::to_value(ledger)?),
        ("rs", serde_json::to_value(rs)?),
        ("es", serde_json::to_value(es)?),
        ("tp", serde_json::to_value(tp)?),
    ] {
        let path = dir.join(format!("{role}.json"));
        write_json(&path, &value)?;
        written.push(path);
    }

    let data = json!({
        "visit": "Museo Egizio",
        "feedback": "Loved the papyrus hall",
        "activity": "museum-feedback",
        "gps": {"lat": 45.0684, "lng": 7.6843, "alt": 239.0},
    });
    let disclosure: DisclosurePolicy = [
        ("visit", Disclosure::Plain),
        ("feedback", Disclosure::Committed),
        ("activity", Disclosure::Plain),
        ("gps", Disclosure::Plain),
    ]
    .into_iter()
    .map(|(k, d)| (k.to_owned(), d))
    .collect();
    write_json(&dir.join("client/data.json"), &data)?;
    write_json(&dir.join("client/policy.json"), &disclosure)?;
    written.extend([dir.join("client/data.json"), dir.join("client/policy.json")]);
    Ok(written)
}
