//! Third-party verifier daemon.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use poe_cli::config::TpConfig;
use poe_cli::{fail, init_logging, serve};

#[derive(Parser)]
#[command(name = "poe-tp", version, about = "Third-party verifier daemon")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Accept channels until killed.
    Serve {
        #[arg(long, env = "POE_CONFIG")]
        config: PathBuf,
    },
}

fn main() {
    init_logging();
    let Command::Serve { config } = Cli::parse().command;
    if let Err(e) = serve::<TpConfig>(&config) {
        fail(&e);
    }
}
