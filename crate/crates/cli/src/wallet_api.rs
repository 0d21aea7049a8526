//! Local wallet API for the browser wallet.
//!
//! Same framing and envelope as the protocol channels, but in plain text
//! and bound to loopback only: the peer is a process on this machine
//! acting for the wallet's owner. Replies are `OK` with a body or `ERROR`
//! with a code. Key material and reward passwords never leave the wallet
//! through this API.

use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;

use log::{debug, warn};
use poe_core::rng::{self, PoeRng};
use poe_core::{PoeDocument, PublicKey};
use poe_ledger::PoeRef;
use poe_protocol::wire::ErrorBody;
use poe_protocol::{Envelope, MsgType, VerdictBody};
use poe_reward::Voucher;
use poe_transport::{read_frame, write_frame, ConnectConfig, Endpoint};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::ops;
use crate::wallet::{PoeSummary, WalletStore};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct IdBody {
    pub id: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoeListBody {
    pub poes: Vec<PoeSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoeDetailBody {
    pub poe: PoeSummary,
    pub document: PoeDocument,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WalletExhibitBody {
    pub id: String,
    /// TP address; the API's default TP when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tp: Option<String>,
    #[serde(default)]
    pub disclose: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictReply {
    pub verdict: VerdictBody,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WalletTransferBody {
    pub id: String,
    pub to: PublicKey,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefReply {
    pub poe_ref: PoeRef,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WalletRedeemBody {
    pub otc: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VoucherBody {
    pub voucher: Voucher,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VoucherListBody {
    pub vouchers: Vec<Voucher>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpendVoucherBody {
    pub voucher_id: String,
}

/// Where the wallet's operations go.
#[derive(Clone, Debug)]
pub struct Upstream {
    pub connect: ConnectConfig,
    pub tp: Option<Endpoint>,
    pub ledger: Option<Endpoint>,
    pub rs: Option<Endpoint>,
}

fn need<'a>(e: &'a Option<Endpoint>, role: &str) -> Result<&'a Endpoint> {
    e.as_ref().ok_or_else(|| CliError::usage(format!("no {role} address configured")))
}

pub struct WalletApi {
    wallet: WalletStore,
    upstream: Upstream,
    seed: Option<u64>,
    requests: AtomicU64,
}

impl WalletApi {
    /// `seed` fixes the randomness of every operation run through the API.
    pub fn new(wallet: WalletStore, upstream: Upstream, seed: Option<u64>) -> Self {
        Self { wallet, upstream, seed, requests: AtomicU64::new(0) }
    }

    fn op_rng(&self) -> PoeRng {
        let n = self.requests.fetch_add(1, Ordering::Relaxed);
        match self.seed {
            Some(s) => rng::derive(s, &format!("wallet-api-{n}")),
            None => rng::from_entropy(),
        }
    }

    /// Answer one request.
    pub fn handle(&self, req: &Envelope) -> Envelope {
        debug!("wallet api <- {}", req.kind.as_str());
        match self.dispatch(req) {
            Ok(env) => env,
            Err(e) => {
                let body = ErrorBody { code: e.code.clone(), message: e.message.clone(), reason: None };
                Envelope::new(MsgType::Error, &req.session, &body).expect("error body serializes")
            }
        }
    }

    fn dispatch(&self, req: &Envelope) -> Result<Envelope> {
        fn body<T: DeserializeOwned>(req: &Envelope) -> Result<T> {
            serde_json::from_value(req.body.clone())
                .map_err(|e| CliError::usage(format!("{} body: {e}", req.kind.as_str())))
        }
        let ok = |b: serde_json::Value| -> Result<Envelope> { Ok(Envelope::new(MsgType::Ok, &req.session, &b)?) };
        let up = &self.upstream;
        match req.kind {
            MsgType::ListPoes => ok(json(&PoeListBody { poes: self.wallet.list()? })),
            MsgType::GetPoe => {
                let IdBody { id } = body(req)?;
                let entry = self.wallet.load(&id)?;
                ok(json(&PoeDetailBody { poe: entry.summary(), document: entry.document }))
            }
            MsgType::WalletExhibit => {
                let b: WalletExhibitBody = body(req)?;
                let tp = match b.tp {
                    Some(addr) => Endpoint::Tcp(addr),
                    None => need(&up.tp, "TP")?.clone(),
                };
                let out = ops::exhibit(&self.wallet, &tp, &up.connect, &b.id, &b.disclose, self.op_rng())?;
                ok(json(&VerdictReply { verdict: out.verdict }))
            }
            MsgType::WalletTransfer => {
                let b: WalletTransferBody = body(req)?;
                // Refusals that need no ledger come first.
                ops::check_transferable(&self.wallet.load(&b.id)?)?;
                let poe_ref = ops::transfer(&self.wallet, need(&up.ledger, "ledger")?, &up.connect, &b.id, &b.to)?;
                ok(json(&RefReply { poe_ref }))
            }
            MsgType::WalletRedeem => {
                let WalletRedeemBody { otc } = body(req)?;
                ok(json(&VoucherBody { voucher: ops::redeem(&self.wallet, need(&up.rs, "RS")?, &up.connect, &otc)? }))
            }
            MsgType::ListVouchers => ok(json(&VoucherListBody { vouchers: self.wallet.vouchers()? })),
            MsgType::SpendVoucher => {
                let SpendVoucherBody { voucher_id } = body(req)?;
                ok(json(&VoucherBody { voucher: ops::spend(&self.wallet, need(&up.rs, "RS")?, &up.connect, &voucher_id)? }))
            }
            other => Err(CliError::refused("UnexpectedMessage", format!("{} is not a wallet request", other.as_str()))),
        }
    }
}

fn json<T: Serialize>(body: &T) -> serde_json::Value {
    serde_json::to_value(body).expect("reply bodies serialize")
}

/// A running wallet API listener.
pub struct WalletApiServer {
    addr: SocketAddr,
    handle: Option<thread::JoinHandle<()>>,
}

impl WalletApiServer {
    /// Bind `bind`, which must be a loopback address.
    pub fn start(api: Arc<WalletApi>, bind: &str) -> Result<Self> {
        let listener = TcpListener::bind(bind)?;
        let addr = listener.local_addr()?;
        if !addr.ip().is_loopback() {
            return Err(CliError::usage(format!("the wallet API only binds loopback addresses, not {addr}")));
        }
        let handle = thread::spawn(move || {
            for stream in listener.incoming() {
                match stream {
                    Ok(s) => {
                        let api = api.clone();
                        thread::spawn(move || serve_connection(s, &api));
                    }
                    Err(e) => warn!("wallet api accept: {e}"),
                }
            }
        });
        Ok(Self { addr, handle: Some(handle) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Block until the listener stops.
    pub fn wait(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve_connection(mut stream: TcpStream, api: &WalletApi) {
    loop {
        let frame = match read_frame(&mut stream) {
            Ok(Some(f)) => f,
            Ok(None) => return,
            Err(e) => {
                warn!("wallet api: {e}");
                return;
            }
        };
        let reply = match Envelope::from_bytes(&frame) {
            Ok(req) => api.handle(&req),
            Err(e) => Envelope::error("", &e),
        };
        if write_frame(&mut stream, &reply.to_bytes()).is_err() {
            return;
        }
    }
}

/// One request over a fresh connection, for scripts and tests.
pub fn call(addr: &str, req: &Envelope) -> Result<Envelope> {
    let mut stream = TcpStream::connect(addr)?;
    write_frame(&mut stream, &req.to_bytes())?;
    let frame = read_frame(&mut stream)?.ok_or_else(|| CliError::new("ChannelClosed", "no reply", crate::error::exit::CHANNEL))?;
    Ok(Envelope::from_bytes(&frame)?)
}
