//! Wallet client: generation, exhibition, transfer and rewards.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use poe_core::crypto::DEFAULT_ALGORITHM;
use poe_core::PublicKey;
use poe_ledger::PoeRef;
use poe_protocol::{DisclosurePolicy, Envelope, IssueMode};
use poe_transport::{ConnectConfig, Dialer, Endpoint, RemoteLedger};
use serde::Serialize;
use serde_json::{json, Map, Value};

use poe_cli::config::{load_credential, load_pins, ENV_CREDENTIAL, ENV_PINS};
use poe_cli::ops::{self, client_rng};
use poe_cli::wallet_api::{Upstream, WalletApi, WalletApiServer};
use poe_cli::{fail, init_logging, CliError, Result, WalletStore};

#[derive(Parser)]
#[command(name = "poe-client", version, about = "Proof-of-Engagement wallet client")]
struct Cli {
    /// Wallet directory.
    #[arg(long, env = "POE_WALLET", default_value = "wallet", global = true)]
    wallet: PathBuf,
    /// Pinned node identities (JSON list of name and fingerprint).
    #[arg(long, env = ENV_PINS, global = true)]
    pins: Option<PathBuf>,
    /// Client credential, for nodes that require mutual authentication.
    #[arg(long, env = ENV_CREDENTIAL, global = true)]
    credential: Option<PathBuf>,
    /// Fix every random choice (keys, passwords, session ids).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the exchanged envelopes here, one per line.
    #[arg(long, global = true)]
    transcript: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Central,
    Ledger,
}

#[derive(Subcommand)]
enum Command {
    /// Obtain a PoE from an engagement system.
    Engage {
        #[arg(long, env = "POE_ES")]
        es: String,
        /// Engagement record, a JSON object.
        #[arg(long)]
        data: PathBuf,
        /// Field name to plain, committed or excluded.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, value_enum, default_value = "central")]
        mode: Mode,
        /// Signature scheme of the holder key.
        #[arg(long, default_value = DEFAULT_ALGORITHM)]
        algorithm: String,
    },
    /// Show a PoE to a third party.
    Exhibit {
        #[arg(long, env = "POE_TP")]
        tp: String,
        #[arg(long)]
        poe: String,
        /// Committed fields to open, comma separated.
        #[arg(long, value_delimiter = ',')]
        disclose: Vec<String>,
    },
    /// Transfer a ledger PoE to the holder of a public key.
    Transfer {
        #[arg(long, env = "POE_LEDGER")]
        ledger: String,
        #[arg(long)]
        poe: String,
        /// Recipient public key file, as written by `keygen`.
        #[arg(long)]
        to: PathBuf,
    },
    /// Make a key pair to receive a transfer; writes the public half.
    Keygen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = DEFAULT_ALGORITHM)]
        algorithm: String,
    },
    /// File a PoE transferred to one of this wallet's keys.
    Receive {
        #[arg(long, env = "POE_LEDGER")]
        ledger: String,
        /// Reference as `<chain>:<tx id>`.
        #[arg(long = "ref")]
        poe_ref: String,
    },
    /// Trade a one-time code and its password for a voucher.
    Redeem {
        #[arg(long, env = "POE_RS")]
        rs: String,
        #[arg(long)]
        otc: String,
    },
    /// Spend a voucher.
    Spend {
        #[arg(long, env = "POE_RS")]
        rs: String,
        #[arg(long)]
        voucher: String,
    },
    /// List the wallet's PoEs.
    List,
    /// List the wallet's vouchers.
    Vouchers,
    /// Serve the local wallet API for the browser wallet.
    WalletApi {
        #[arg(long, default_value = "127.0.0.1:7400")]
        listen: String,
        #[arg(long, env = "POE_TP")]
        tp: Option<String>,
        #[arg(long, env = "POE_LEDGER")]
        ledger: Option<String>,
        #[arg(long, env = "POE_RS")]
        rs: Option<String>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn parse_ref(s: &str) -> Result<PoeRef> {
    let (chain, tx) = s.rsplit_once(':').ok_or_else(|| CliError::usage("reference must be <chain>:<tx id>"))?;
    Ok(PoeRef::new(chain, tx.parse()?))
}

struct Ctx {
    wallet: WalletStore,
    pins: Option<PathBuf>,
    credential: Option<PathBuf>,
    transcript: Option<PathBuf>,
}

impl Ctx {
    fn connect(&self) -> Result<ConnectConfig> {
        let pins = load_pins(self.pins.as_deref())?;
        Ok(match &self.credential {
            Some(p) => ConnectConfig::mutual(pins, Some(load_credential(Some(p))?)),
            None => ConnectConfig::one_way(pins),
        })
    }

    fn save_transcript(&self, t: &[Envelope]) -> Result<()> {
        match &self.transcript {
            Some(p) => ops::write_transcript(p, t),
            None => Ok(()),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        wallet: WalletStore::open(&cli.wallet)?,
        pins: cli.pins,
        credential: cli.credential,
        transcript: cli.transcript,
    };
    let rng = client_rng(cli.seed);
    match cli.command {
        Command::Engage { es, data, policy, mode, algorithm } => {
            let data: Map<String, Value> = read_json(&data)?;
            let policy: DisclosurePolicy = read_json(&policy)?;
            let mode = match mode {
                Mode::Central => IssueMode::Central,
                Mode::Ledger => IssueMode::Ledger,
            };
            let out = ops::engage(&ctx.wallet, &Endpoint::Tcp(es), &ctx.connect()?, data, policy, mode, &algorithm, rng)?;
            ctx.save_transcript(&out.transcript)?;
            print(&json!({
                "id": out.id,
                "poe_ref": out.outcome.poe_ref.as_ref().map(|r| r.to_string()),
                "reward_otc": out.outcome.reward.as_ref().map(|r| r.otc.clone()),
            }))
        }
        Command::Exhibit { tp, poe, disclose } => {
            let out = ops::exhibit(&ctx.wallet, &Endpoint::Tcp(tp), &ctx.connect()?, &poe, &disclose, rng)?;
            ctx.save_transcript(&out.transcript)?;
            print(&out.verdict)?;
            if out.verdict.accept {
                Ok(())
            } else {
                let reason = out.verdict.reason.unwrap_or_else(|| "Rejected".into());
                Err(CliError::refused(reason, "the third party rejected the exhibition"))
            }
        }
        Command::Transfer { ledger, poe, to } => {
            let pk: PublicKey = read_json(&to)?;
            let new_ref = ops::transfer(&ctx.wallet, &Endpoint::Tcp(ledger), &ctx.connect()?, &poe, &pk)?;
            print(&json!({ "poe_ref": new_ref.to_string() }))
        }
        Command::Keygen { out, algorithm } => {
            let mut rng = rng;
            let pk = ops::new_receive_key(&ctx.wallet, &algorithm, &mut rng)?;
            std::fs::write(&out, serde_json::to_string_pretty(&pk)? + "\n")?;
            print(&json!({ "key_id": pk.key_id(), "public_key": out }))
        }
        Command::Receive { ledger, poe_ref } => {
            let r = parse_ref(&poe_ref)?;
            let remote = RemoteLedger::new(Dialer::new(Endpoint::Tcp(ledger), ctx.connect()?));
            let id = ops::receive(&ctx.wallet, &remote, &r)?;
            print(&json!({ "id": id }))
        }
        Command::Redeem { rs, otc } => print(&ops::redeem(&ctx.wallet, &Endpoint::Tcp(rs), &ctx.connect()?, &otc)?),
        Command::Spend { rs, voucher } => {
            print(&ops::spend(&ctx.wallet, &Endpoint::Tcp(rs), &ctx.connect()?, &voucher)?)
        }
        Command::List => print(&ctx.wallet.list()?),
        Command::Vouchers => print(&ctx.wallet.vouchers()?),
        Command::WalletApi { listen, tp, ledger, rs } => {
            let upstream = Upstream {
                connect: ctx.connect()?,
                tp: tp.map(Endpoint::Tcp),
                ledger: ledger.map(Endpoint::Tcp),
                rs: rs.map(Endpoint::Tcp),
            };
            let api = WalletApi::new(ctx.wallet, upstream, cli.seed);
            let server = WalletApiServer::start(std::sync::Arc::new(api), &listen)?;
            println!("{}", json!({ "listening": server.local_addr().to_string() }));
            server.wait();
            Ok(())
        }
    }
}

fn main() {
    init_logging();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        fail(&e);
    }
}
