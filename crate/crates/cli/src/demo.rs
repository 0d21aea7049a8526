//! The two case studies, run end to end on the in-memory fabric.
//!
//! * `university`: an exam pass certified by a centralized engagement
//!   system. The PoE is not transferable; the reward is an education
//!   voucher.
//! * `tourism`: a museum visit with feedback, minted on the ledger. The
//!   PoE is transferable and changes hands; the reward is a tourism
//!   voucher.
//!
//! Every envelope a client sends or receives becomes one transcript line:
//! `<scenario> <from>-><to> <TYPE> <canonical envelope>`. Outcomes that
//! need no message are `#` lines.

use std::sync::Arc;

use chrono::Duration;
use poe_core::crypto::ED25519;
use poe_core::rng::{derive, SharedRng};
use poe_core::{KeyPair, ManualClock, PoeTime, TrustStore};
use poe_ledger::{Ledger, LedgerApi, PoeRef};
use poe_protocol::session::new_session_id;
use poe_protocol::{
    ClientEngagement, Disclosure, DisclosurePolicy, EngagementSystem, Envelope, EsPolicy, IssueMode, MsgType,
    OwnerTransferSession, RecipientTransfer, ServerSession, ThirdParty, VerdictBody,
};
use poe_reward::{RewardPolicy, RewardingSystem, RsConfig, Voucher};
use poe_transport::messages::{RedeemBody, SpendBody};
use poe_transport::{
    ClientAuth, ConnectConfig, Credential, Dialer, Endpoint, EsService, Fabric, LedgerService, ListenConfig, Node,
    PeerIdentity, PinnedPeers, RemoteLedger, RemoteRewards, RsService, TamperFn, TpService,
};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};
use crate::ops::{check_transferable, drive, exhibition, received_entry};
use crate::wallet::WalletEntry;

pub const DEMO_CHAIN: &str = "poe-demo";
pub const DEFAULT_SEED: u64 = 7;

#[derive(Clone, Copy, Debug, Default)]
pub struct DemoOptions {
    pub seed: u64,
    /// Flip one byte of every exhibited PoE (or reference) in flight.
    pub tamper: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioResult {
    pub name: String,
    /// The scenario's final exhibition.
    pub verdict: VerdictBody,
    /// Vouchers the scenario's client obtained.
    pub vouchers: Vec<Voucher>,
}

#[derive(Debug)]
pub struct DemoReport {
    pub lines: Vec<String>,
    pub scenarios: Vec<ScenarioResult>,
    /// Serialized rewarding-system state after both scenarios.
    pub rs_state: String,
    /// Engagement values, passwords and key material used in the run.
    pub secrets: Vec<String>,
}

impl DemoReport {
    pub fn transcript(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    /// Both scenarios ended in accept with exactly one voucher each.
    pub fn success(&self) -> bool {
        self.scenarios.iter().all(|s| s.verdict.accept && s.vouchers.len() == 1)
    }
}

pub fn exam_record() -> Map<String, Value> {
    obj(json!({
        "student_id": "S-48213",
        "course": "Distributed Systems",
        "grade": "28/30",
        "activity": "exam-pass",
    }))
}

pub fn exam_policy() -> DisclosurePolicy {
    policy(&[
        ("student_id", Disclosure::Committed),
        ("course", Disclosure::Plain),
        ("grade", Disclosure::Excluded),
        ("activity", Disclosure::Plain),
    ])
}

pub fn museum_record() -> Map<String, Value> {
    obj(json!({
        "visit": "Museo Egizio",
        "feedback": "Loved the papyrus hall",
        "activity": "museum-feedback",
        "gps": {"lat": 45.0684, "lng": 7.6843, "alt": 239.0},
    }))
}

pub fn museum_policy() -> DisclosurePolicy {
    policy(&[
        ("visit", Disclosure::Plain),
        ("feedback", Disclosure::Committed),
        ("activity", Disclosure::Plain),
        ("gps", Disclosure::Plain),
    ])
}

fn obj(v: Value) -> Map<String, Value> {
    v.as_object().expect("object literal").clone()
}

fn policy(fields: &[(&str, Disclosure)]) -> DisclosurePolicy {
    fields.iter().map(|(k, d)| (k.to_string(), *d)).collect()
}

fn at(s: &str) -> PoeTime {
    s.parse().expect("valid demo time")
}

/// Flip one character of an EXHIBIT payload: a letter of the engagement
/// data when the PoE travels in full, a digit of the transaction id when
/// only its reference does. Returns whether anything changed.
pub fn flip_exhibit(payload: &mut [u8]) -> bool {
    if !contains(payload, br#""type":"EXHIBIT""#) {
        return false;
    }
    type Flip = fn(u8) -> Option<u8>;
    let targets: [(&[u8], Flip); 2] = [
        (br#""data":""#, |b| b.is_ascii_alphabetic().then_some(b ^ 0x20)),
        (br#""tx_id":""#, |b| b.is_ascii_digit().then_some(b ^ 1)),
    ];
    for (needle, flip) in targets {
        let Some(start) = find(payload, needle).map(|i| i + needle.len()) else { continue };
        for b in payload[start..].iter_mut().take_while(|b| **b != b'"') {
            if let Some(f) = flip(*b) {
                *b = f;
                return true;
            }
        }
    }
    false
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    find(hay, needle).is_some()
}

/// Leaf values of a JSON value, as text.
fn leaves(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => m.values().for_each(|x| leaves(x, out)),
        Value::Array(a) => a.iter().for_each(|x| leaves(x, out)),
        Value::String(s) => out.push(s.clone()),
        Value::Null => {}
        other => out.push(other.to_string()),
    }
}

/// Public and secret halves of a key pair, base64.
fn key_material(keys: &KeyPair) -> Result<Vec<String>> {
    let v = serde_json::to_value(keys)?;
    Ok(["public_key", "secret_key"].iter().filter_map(|f| v[*f].as_str().map(str::to_owned)).collect())
}

struct World {
    fabric: Fabric,
    clock: Arc<ManualClock>,
    pins: PinnedPeers,
    rs: Arc<RewardingSystem>,
    ledger: Arc<Ledger>,
    es_university: KeyPair,
    holder: Credential,
    _nodes: Vec<Node>,
    lines: Vec<String>,
    secrets: Vec<String>,
}

impl World {
    fn up(seed: u64) -> Result<Self> {
        let fabric = Fabric::new();
        let clock = Arc::new(ManualClock::at(at("2025-06-12 T 09:30")));
        let es_university = KeyPair::generate_with(ED25519, &mut derive(seed, "es-university-key"))?;
        let es_tourism = KeyPair::generate_with(ED25519, &mut derive(seed, "es-tourism-key"))?;
        let trust = TrustStore::with_keys([es_university.public.clone(), es_tourism.public.clone()]);

        let cred = |name: &str| Credential::generate(name);
        let (c_ledger, c_rs, c_uni, c_tour, c_tp, holder) =
            (cred("ledger")?, cred("rs")?, cred("es-university")?, cred("es-tourism")?, cred("tp")?, cred("holder")?);
        let pins = PinnedPeers::of([&c_ledger, &c_rs, &c_uni, &c_tour, &c_tp, &holder].map(|c| c.identity()));
        let mut nodes = Vec::new();
        let mut start = |name: &str, cfg: ListenConfig, svc: Arc<dyn poe_transport::Service>| -> Result<()> {
            nodes.push(Node::on_fabric(&fabric, name, &cfg, svc)?);
            Ok(())
        };
        let endpoint = |name: &str| Endpoint::fabric(&fabric, name);

        let ledger = Arc::new(Ledger::new(DEMO_CHAIN, trust.clone()));
        start("ledger", ListenConfig::new(c_ledger), Arc::new(LedgerService(ledger.clone())))?;

        let rs = Arc::new(RewardingSystem::new(
            RsConfig::new(["education", "tourism"]),
            clock.clone(),
            SharedRng::new(derive(seed, "rs")),
        ));
        let issuers = PinnedPeers::of([c_uni.identity(), c_tour.identity()]);
        start(
            "rs",
            ListenConfig::new(c_rs).client_auth(ClientAuth::Optional(issuers.clone())),
            Arc::new(RsService { rs: rs.clone(), issuers }),
        )?;

        let remote_ledger = Arc::new(RemoteLedger::new(Dialer::new(endpoint("ledger"), ConnectConfig::one_way(pins.clone()))));
        let rewards_for = |c: &Credential| {
            Arc::new(RemoteRewards::new(Dialer::new(endpoint("rs"), ConnectConfig::mutual(pins.clone(), Some(c.clone())))))
        };

        let mut uni_policy = EsPolicy::open(false);
        uni_policy.required_fields = ["student_id", "activity"].map(String::from).into();
        uni_policy.reward = Some(RewardPolicy::new("activity").map("exam-pass", "education"));
        let es = EngagementSystem::new(es_university.clone(), uni_policy, clock.clone()).with_rewards(rewards_for(&c_uni));
        start("es-university", ListenConfig::new(c_uni.clone()), Arc::new(EsService(Arc::new(es))))?;

        let mut tour_policy = EsPolicy::open(true);
        tour_policy.validity_days = Some(Duration::days(365));
        tour_policy.reward = Some(RewardPolicy::new("activity").map("museum-feedback", "tourism"));
        let es = EngagementSystem::new(es_tourism.clone(), tour_policy, clock.clone())
            .with_ledger(remote_ledger.clone())
            .with_rewards(rewards_for(&c_tour));
        start("es-tourism", ListenConfig::new(c_tour.clone()), Arc::new(EsService(Arc::new(es))))?;

        let tp = ThirdParty::new(trust, clock.clone(), SharedRng::new(derive(seed, "tp"))).with_ledger(remote_ledger);
        start("tp", ListenConfig::new(c_tp), Arc::new(TpService(Arc::new(tp))))?;

        let mut secrets = Vec::new();
        for k in [&es_university, &es_tourism] {
            secrets.extend(key_material(k)?);
        }
        Ok(Self {
            fabric,
            clock,
            pins,
            rs,
            ledger,
            es_university,
            holder,
            _nodes: nodes,
            lines: Vec::new(),
            secrets,
        })
    }

    fn at(&self, name: &str) -> Endpoint {
        Endpoint::fabric(&self.fabric, name)
    }

    fn connect(&self) -> ConnectConfig {
        ConnectConfig::one_way(self.pins.clone())
    }

    fn remote_ledger(&self) -> RemoteLedger {
        RemoteLedger::new(Dialer::new(self.at("ledger"), self.connect()))
    }

    /// Client and server alternate, client first.
    fn record(&mut self, scenario: &str, client: &str, server: &str, transcript: &[Envelope]) {
        for (i, env) in transcript.iter().enumerate() {
            let (from, to) = if i % 2 == 0 { (client, server) } else { (server, client) };
            let bytes = env.to_bytes();
            let text = std::str::from_utf8(&bytes).expect("canonical JSON is UTF-8");
            self.lines.push(format!("{scenario} {from}->{to} {} {text}", env.kind.as_str()));
        }
    }

    fn note(&mut self, scenario: &str, text: impl AsRef<str>) {
        self.lines.push(format!("# {scenario} {}", text.as_ref()));
    }

    fn secret_keys(&mut self, keys: &KeyPair) -> Result<()> {
        self.secrets.extend(key_material(keys)?);
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn engage(
        &mut self,
        scenario: &str,
        client: &str,
        es: &str,
        data: Map<String, Value>,
        policy: DisclosurePolicy,
        mode: IssueMode,
        rng_label: &str,
        seed: u64,
    ) -> Result<WalletEntry> {
        leaves(&Value::Object(data.clone()), &mut self.secrets);
        let mut machine = ClientEngagement::new(data, policy, mode, derive(seed, rng_label));
        if mode == IssueMode::Central {
            machine = machine.expect_issuer(self.es_university.public.clone());
        }
        let (out, transcript) = drive(&self.at(es), &self.connect(), &mut machine);
        self.record(scenario, client, es, &transcript);
        let out = out?;
        self.secrets.push(out.pwd.as_str().to_owned());
        self.secret_keys(&out.keys)?;
        WalletEntry::from_outcome(&out, mode)
    }

    fn exhibit(&mut self, scenario: &str, client: &str, entry: &WalletEntry, fields: &[&str], rng_label: &str, seed: u64) -> Result<VerdictBody> {
        let fields: Vec<String> = fields.iter().map(|f| f.to_string()).collect();
        let mut machine = exhibition(entry, &fields, &mut derive(seed, rng_label))?;
        let (verdict, transcript) = drive(&self.at("tp"), &self.connect(), &mut machine);
        self.record(scenario, client, "tp", &transcript);
        let verdict = verdict?;
        let mut summary = if verdict.accept { "accept".to_owned() } else { "reject".to_owned() };
        if let Some(r) = &verdict.reason {
            summary = format!("{summary} ({r})");
        }
        self.note(scenario, format!("{client} exhibition {summary}"));
        Ok(verdict)
    }

    /// One request to the rewarding system; ERROR replies come back as
    /// their code.
    fn rs_call<B: Serialize>(&mut self, scenario: &str, client: &str, kind: MsgType, body: &B) -> Result<Result<Voucher, String>> {
        let mut chan = self.at("rs").open(&self.connect())?;
        let reply = chan.call(&Envelope::new(kind, "rs", body)?)?;
        let transcript = chan.take_transcript();
        self.record(scenario, client, "rs", &transcript);
        Ok(match reply.kind {
            MsgType::Error => Err(reply.remote_error().code()),
            _ => Ok(reply.body_as()?),
        })
    }

    /// Redeem the entry's reward twice and spend the voucher twice. The
    /// second attempt of each must be refused.
    fn claim_reward(&mut self, scenario: &str, client: &str, entry: &WalletEntry) -> Result<Vec<Voucher>> {
        let ticket = entry.ticket.as_ref().ok_or_else(|| CliError::refused("NoReward", "no reward ticket"))?;
        let Some(otc) = ticket.otc.clone() else {
            self.note(scenario, format!("{client} holds no reward code"));
            return Ok(Vec::new());
        };
        let redeem = RedeemBody { otc, pwd: ticket.pwd.clone() };
        let mut vouchers = Vec::new();
        for attempt in ["redeem", "redeem again"] {
            match self.rs_call(scenario, client, MsgType::Redeem, &redeem)? {
                Ok(v) => {
                    self.note(scenario, format!("{client} {attempt}: voucher {} ({})", v.voucher_id, v.reward_type));
                    vouchers.push(v);
                }
                Err(code) => self.note(scenario, format!("{client} {attempt} refused: {code}")),
            }
        }
        for v in vouchers.iter_mut() {
            let spend = SpendBody { voucher_id: v.voucher_id.clone() };
            for attempt in ["spend", "spend again"] {
                match self.rs_call(scenario, client, MsgType::Spend, &spend)? {
                    Ok(spent) => {
                        self.note(scenario, format!("{client} {attempt}: voucher {} spent", spent.voucher_id));
                        *v = spent;
                    }
                    Err(code) => self.note(scenario, format!("{client} {attempt} refused: {code}")),
                }
            }
        }
        Ok(vouchers)
    }
}

fn university(w: &mut World, seed: u64) -> Result<ScenarioResult> {
    const S: &str = "university";
    w.clock.set(at("2025-06-12 T 09:30").instant());
    let entry = w.engage(S, "student", "es-university", exam_record(), exam_policy(), IssueMode::Central, "student", seed)?;
    w.note(S, format!("student holds PoE {} (transferable: {})", entry.id(), entry.document.transferable));

    w.clock.advance(Duration::minutes(20));
    let verdict = w.exhibit(S, "student", &entry, &["student_id"], "student-exhibit", seed)?;

    match check_transferable(&entry) {
        Ok(_) => w.note(S, "student transfer allowed"),
        Err(e) => w.note(S, format!("student transfer refused: {}", e.code)),
    }
    let vouchers = w.claim_reward(S, "student", &entry)?;
    Ok(ScenarioResult { name: S.into(), verdict, vouchers })
}

fn tourism(w: &mut World, seed: u64) -> Result<ScenarioResult> {
    const S: &str = "tourism";
    w.clock.set(at("2025-07-03 T 15:10").instant());
    let entry = w.engage(S, "tourist", "es-tourism", museum_record(), museum_policy(), IssueMode::Ledger, "tourist", seed)?;
    let minted = entry.meta.poe_ref.clone().ok_or_else(|| CliError::refused("NotOnLedger", "no ledger reference"))?;
    w.note(S, format!("tourist holds PoE {} at {minted}", entry.id()));

    w.clock.advance(Duration::minutes(5));
    w.exhibit(S, "tourist", &entry, &["feedback"], "tourist-exhibit", seed)?;
    let vouchers = w.claim_reward(S, "tourist", &entry)?;

    // The tourist hands the PoE to a friend: the friend sends a fresh key,
    // the tourist writes the transfer.
    w.clock.advance(Duration::hours(2));
    let friend_keys = KeyPair::generate(&mut derive(seed, "friend-key"))?;
    w.secret_keys(&friend_keys)?;
    let owner = {
        let (keys, r, ledger) = (entry.keys.clone(), minted.clone(), Arc::new(w.remote_ledger()) as Arc<dyn LedgerApi>);
        let service = move |_: Option<&PeerIdentity>| -> Box<dyn ServerSession> {
            Box::new(OwnerTransferSession::new(keys.clone(), r.clone(), ledger.clone()))
        };
        Node::on_fabric(&w.fabric, "tourist", &ListenConfig::new(w.holder.clone()), Arc::new(service))?
    };
    let session = new_session_id(&mut derive(seed, "friend-session"));
    let mut recipient = RecipientTransfer::new(friend_keys.public.clone(), session);
    let (new_ref, transcript) = drive(&w.at("tourist"), &w.connect(), &mut recipient);
    drop(owner);
    w.record(S, "friend", "tourist", &transcript);
    let new_ref: PoeRef = new_ref?;
    w.note(S, format!("friend owns the PoE at {new_ref}"));

    // The old owner can neither transfer again nor prove ownership.
    match poe_protocol::transfer_poe(&entry.keys, &minted, &entry.keys.public, &w.remote_ledger()) {
        Ok(r) => w.note(S, format!("tourist transferred again to {r}")),
        Err(e) => w.note(S, format!("tourist transfer again refused: {}", e.code())),
    }
    w.exhibit(S, "tourist", &entry, &[], "tourist-stale-exhibit", seed)?;

    let friend_entry = received_entry(&w.remote_ledger(), &new_ref, friend_keys)?;
    let verdict = w.exhibit(S, "friend", &friend_entry, &[], "friend-exhibit", seed)?;
    Ok(ScenarioResult { name: S.into(), verdict, vouchers })
}

/// Run both case studies.
pub fn run_demo(opts: DemoOptions) -> Result<DemoReport> {
    let mut w = World::up(opts.seed)?;
    w.lines.push(format!("# demo seed {}{}", opts.seed, if opts.tamper { " tamper" } else { "" }));
    if opts.tamper {
        let hook: TamperFn = Arc::new(|endpoint: &str, payload: &mut Vec<u8>| {
            if endpoint == "tp" {
                flip_exhibit(payload);
            }
        });
        w.fabric.set_tamper(Some(hook));
    }
    let scenarios = vec![university(&mut w, opts.seed)?, tourism(&mut w, opts.seed)?];
    for s in &scenarios {
        let verdict = if s.verdict.accept { "accept" } else { "reject" };
        w.lines.push(format!("# {} final verdict {verdict}, vouchers {}", s.name, s.vouchers.len()));
    }
    w.lines.push(format!("# ledger {} transactions, digest {}", w.ledger.len(), w.ledger.digest()));
    let stats = w.rs.stats();
    w.lines.push(format!("# rs {} tickets, {} vouchers", stats.tickets_issued, stats.vouchers_minted));
    let rs_state = w.rs.state_json()?;
    Ok(DemoReport { lines: w.lines, scenarios, rs_state, secrets: w.secrets })
}
