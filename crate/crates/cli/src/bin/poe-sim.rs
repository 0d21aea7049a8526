//! Demo orchestrator and deployment generator.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use poe_core::crypto::DEFAULT_ALGORITHM;
use poe_cli::demo::{run_demo, DemoOptions, DEFAULT_SEED};
use poe_cli::init::{init_deployment, InitOptions};
use poe_cli::{exit, fail, init_logging, CliError, Result};

#[derive(Parser)]
#[command(name = "poe-sim", version, about = "Proof-of-Engagement demo and deployment tool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the university and tourism case studies on the in-memory fabric
    /// and print the transcript.
    Demo {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Flip one byte of each exhibited PoE in flight.
        #[arg(long)]
        tamper: bool,
        /// Also write the transcript here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write credentials, keys and role configs for a loopback deployment.
    Init {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 7401)]
        base_port: u16,
        #[arg(long)]
        seed: Option<u64>,
        /// Signature scheme of the engagement system key.
        #[arg(long, default_value = DEFAULT_ALGORITHM)]
        algorithm: String,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Demo { seed, tamper, out } => {
            let report = run_demo(DemoOptions { seed, tamper })?;
            let transcript = report.transcript();
            print!("{transcript}");
            if let Some(p) = out {
                std::fs::write(p, &transcript)?;
            }
            if report.success() {
                Ok(())
            } else {
                Err(CliError::new("DemoRejected", "a scenario did not end in accept with one voucher", exit::REFUSED))
            }
        }
        Command::Init { dir, base_port, seed, algorithm } => {
            let files = init_deployment(&InitOptions { dir, base_port, seed, algorithm })?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn main() {
    init_logging();
    if let Err(e) = run(Cli::parse()) {
        fail(&e);
    }
}
