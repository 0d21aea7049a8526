//! Generated deployments and role config files.

mod common;

use std::path::{Path, PathBuf};

use common::*;
use poe_cli::config::{load, path_or_env, EsConfig, LedgerConfig, RsFileConfig, TpConfig};
use poe_cli::init::{init_deployment, InitOptions};
use poe_cli::{ops, WalletStore};
use poe_core::crypto::ED25519;
use poe_core::rng::derive;
use poe_protocol::IssueMode;
use poe_transport::Endpoint;

fn init(dir: &Path, seed: Option<u64>) -> Vec<PathBuf> {
    init_deployment(&InitOptions { dir: dir.into(), base_port: 9100, seed, algorithm: ED25519.into() }).unwrap()
}

#[test]
fn init_writes_every_role_on_consecutive_ports() {
    let dir = tempfile::tempdir().unwrap();
    let files = init(dir.path(), Some(1));
    for f in ["pins.json", "es-key.json", "issuers.json", "client/data.json", "client/policy.json"] {
        assert!(files.contains(&dir.path().join(f)), "{f} missing");
    }
    let ledger: LedgerConfig = load(&dir.path().join("ledger.json")).unwrap();
    let rs: RsFileConfig = load(&dir.path().join("rs.json")).unwrap();
    let es: EsConfig = load(&dir.path().join("es.json")).unwrap();
    let tp: TpConfig = load(&dir.path().join("tp.json")).unwrap();
    assert_eq!(
        [&ledger.node.listen, &rs.node.listen, &es.node.listen, &tp.node.listen],
        ["127.0.0.1:9100", "127.0.0.1:9101", "127.0.0.1:9102", "127.0.0.1:9103"]
    );
    assert_eq!(es.ledger.as_deref(), Some("127.0.0.1:9100"));
    assert_eq!(es.rs.as_deref(), Some("127.0.0.1:9101"));
    // Relative paths resolve against the config's directory.
    assert_eq!(es.signing_key, dir.path().join("es-key.json"));
    assert_eq!(ledger.log, Some(dir.path().join("state/ledger.ndjson")));
    assert!(es.node.credential.as_ref().unwrap().exists());
    assert!(es.system().is_ok());
    assert!(tp.system().is_ok());
    assert!(!rs.issuer_pins().unwrap().is_empty());
}

#[test]
fn seeded_init_is_reproducible_apart_from_credentials() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    init(a.path(), Some(9));
    init(b.path(), Some(9));
    for f in ["es-key.json", "issuers.json", "es.json", "tp.json", "rs.json", "ledger.json"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
}

#[test]
fn init_refuses_an_existing_deployment() {
    let dir = tempfile::tempdir().unwrap();
    init(dir.path(), None);
    let err = init_deployment(&InitOptions { dir: dir.path().into(), base_port: 1, seed: None, algorithm: ED25519.into() })
        .unwrap_err();
    assert_eq!(err.code, "UsageError");
}

#[test]
fn malformed_or_missing_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let err = load::<TpConfig>(&dir.path().join("absent.json")).unwrap_err();
    assert_eq!(err.code, "UsageError");
    std::fs::write(dir.path().join("bad.json"), "{\"listen\": 5}").unwrap();
    assert_eq!(load::<TpConfig>(&dir.path().join("bad.json")).unwrap_err().code, "UsageError");
}

#[test]
fn paths_fall_back_to_the_environment() {
    const VAR: &str = "POE_TEST_ONLY_PINS_FALLBACK";
    std::env::remove_var(VAR);
    assert_eq!(path_or_env(None, VAR, "pins").unwrap_err().code, "UsageError");
    std::env::set_var(VAR, "/etc/pins.json");
    assert_eq!(path_or_env(None, VAR, "pins").unwrap(), PathBuf::from("/etc/pins.json"));
    assert_eq!(path_or_env(Some(Path::new("x.json")), VAR, "pins").unwrap(), PathBuf::from("x.json"));
    std::env::remove_var(VAR);
}

/// The ledger log and the RS store survive a restart.
#[test]
fn persistent_state_is_replayed_on_restart() {
    let mut dep = Deployment::new(41);
    dep.ledger.log = Some(dep.path("state/ledger.ndjson"));
    dep.rs.store = Some(dep.path("state/rs.log"));
    let wallet_dir = tempfile::tempdir().unwrap();
    let wallet = WalletStore::open(wallet_dir.path()).unwrap();
    let (data, policy) = (
        serde_json::from_str(&read(&dep.path("client/data.json"))).unwrap(),
        serde_json::from_str(&read(&dep.path("client/policy.json"))).unwrap(),
    );

    let engaged = {
        let stack = dep.start();
        let es = Endpoint::Tcp(stack.es.clone());
        ops::engage(&wallet, &es, &dep.connect(), data, policy, IssueMode::Ledger, ED25519, derive(1, "client")).unwrap()
    };
    let otc = engaged.outcome.reward.as_ref().unwrap().otc.clone();

    let stack = dep.start();
    let shown = ops::exhibit(&wallet, &Endpoint::Tcp(stack.tp.clone()), &dep.connect(), &engaged.id, &[], derive(2, "client"))
        .unwrap();
    assert!(shown.verdict.accept, "{:?}", shown.verdict);
    let rs = Endpoint::Tcp(stack.rs.clone());
    ops::redeem(&wallet, &rs, &dep.connect(), &otc).unwrap();
    drop(stack);

    let stack = dep.start();
    let again = ops::redeem(&wallet, &Endpoint::Tcp(stack.rs.clone()), &dep.connect(), &otc).unwrap_err();
    assert_eq!(again.code, "AlreadyRedeemed");
}
