//! Role daemons, the wallet client and the demo orchestrator.
//!
//! The binaries are thin: argument parsing lives in `src/bin`, and every
//! operation they run is a function here, so tests drive the same code
//! paths without spawning processes.

pub mod config;
pub mod demo;
pub mod error;
pub mod init;
pub mod ops;
pub mod wallet;
pub mod wallet_api;

pub use error::{exit, CliError, Result};
pub use wallet::{PoeSummary, WalletEntry, WalletStore};

/// Print `err` as JSON on standard error and exit with its status.
pub fn fail(err: &CliError) -> ! {
    eprintln!("{}", err.to_json());
    std::process::exit(err.exit)
}

/// Log to standard error, quiet unless `RUST_LOG` says otherwise.
pub fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
}

/// Load a role config, start its node and block. Prints the bound address
/// as one JSON line once the node accepts channels.
pub fn serve<R>(config: &std::path::Path) -> Result<()>
where
    R: config::Role + config::Anchor + serde::de::DeserializeOwned,
{
    let role: R = config::load(config)?;
    let node = role.start()?;
    if let Some(addr) = node.local_addr() {
        println!("{}", serde_json::json!({ "listening": addr.to_string() }));
    }
    node.wait();
    Ok(())
}
