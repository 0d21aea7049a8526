//! Per-session state machines. Servers consume one envelope at a time and
//! return the envelopes to send back; clients alternate between sending
//! and waiting until they reach an outcome.

use std::sync::Arc;

use poe_core::rng::PoeRng;
use poe_core::{DisclosurePackage, KeyPair, PoeDocument, PoeDraft, PublicKey, Pwd, SignedPoe};
use poe_ledger::{LedgerApi, PoeRef};
use poe_reward::IssuedReward;
use rand::Rng;
use serde_json::{Map, Value};

use crate::client::{answer_for, begin_engagement, check_draft, gen_pwd, keygen_with, EngagementRequest};
use crate::error::{ProtocolError, Result};
use crate::es::EngagementSystem;
use crate::policy::DisclosurePolicy;
use crate::tp::{Challenge, ChallengeResponse, ThirdParty};
use crate::transfer::transfer_poe;
use crate::wire::*;

/// Random session label for a new channel.
pub fn new_session_id<R: Rng + ?Sized>(rng: &mut R) -> String {
    let mut b = [0u8; 8];
    rng.fill_bytes(&mut b);
    hex::encode(b)
}

/// Server side of one channel.
pub trait ServerSession: Send {
    fn handle(&mut self, msg: Envelope) -> Vec<Envelope>;
    fn finished(&self) -> bool;
}

pub enum Step<T> {
    Send(Envelope),
    Done(T),
}

fn unexpected(msg: &Envelope) -> ProtocolError {
    if msg.kind == MsgType::Error {
        return msg.remote_error();
    }
    ProtocolError::Unexpected(msg.kind.as_str())
}

// ---------------------------------------------------------------- ES side

#[allow(clippy::large_enum_variant)]
enum EsState {
    AwaitEngage,
    AwaitKeys { mode: IssueMode, request: EngagementRequest, draft: PoeDraft },
    Done,
}

/// Generation handshake, engagement system side.
pub struct EsSession {
    es: Arc<EngagementSystem>,
    state: EsState,
}

impl EsSession {
    pub fn new(es: Arc<EngagementSystem>) -> Self {
        Self { es, state: EsState::AwaitEngage }
    }

    fn step(&mut self, msg: &Envelope) -> Result<Envelope> {
        match std::mem::replace(&mut self.state, EsState::Done) {
            EsState::AwaitEngage if msg.kind == MsgType::Engage => {
                let body: EngageBody = msg.body_as()?;
                let draft = self.es.build_draft(&body.request)?;
                let reply = Envelope::new(MsgType::DraftOk, &msg.session, &DraftOkBody { draft: draft.clone() })?;
                self.state = EsState::AwaitKeys { mode: body.mode, request: body.request, draft };
                Ok(reply)
            }
            EsState::AwaitKeys { mode, request, draft } if msg.kind == MsgType::Keys => {
                let keys: KeysBody = msg.body_as()?;
                let pwd_digest = keys.pwd.digest();
                let (poe, poe_ref, digest) = match mode {
                    IssueMode::Central => {
                        let signed = self.es.issue_poe(draft, &keys.public_key, pwd_digest)?;
                        let d = signed.poe_digest()?;
                        (Some(signed), None, d)
                    }
                    IssueMode::Ledger => {
                        let ledger = self
                            .es
                            .ledger()
                            .cloned()
                            .ok_or_else(|| ProtocolError::Session("ledger issuance is not configured".into()))?;
                        let r = self.es.issue_poe_onchain(draft.clone(), &keys.public_key, pwd_digest, &*ledger)?;
                        (None, Some(r), draft.complete(&keys.public_key).digest()?)
                    }
                };
                let (reward, reward_error) = match self.es.request_reward(&digest, &request) {
                    Ok(r) => (r, None),
                    Err(e) => (None, Some(e.code())),
                };
                Envelope::new(MsgType::PoeIssued, &msg.session, &PoeIssuedBody { poe, poe_ref, reward, reward_error })
            }
            _ => Err(unexpected(msg)),
        }
    }
}

impl ServerSession for EsSession {
    fn handle(&mut self, msg: Envelope) -> Vec<Envelope> {
        match self.step(&msg) {
            Ok(reply) => vec![reply],
            Err(e) => {
                self.state = EsState::Done;
                vec![Envelope::error(&msg.session, &e)]
            }
        }
    }

    fn finished(&self) -> bool {
        matches!(self.state, EsState::Done)
    }
}

// ---------------------------------------------------------------- TP side

enum TpState {
    AwaitExhibit,
    AwaitResponse { disclosed: std::collections::BTreeMap<String, bool> },
    Done,
}

/// Exhibition handshake, third-party side.
pub struct TpSession {
    tp: Arc<ThirdParty>,
    state: TpState,
}

impl TpSession {
    pub fn new(tp: Arc<ThirdParty>) -> Self {
        Self { tp, state: TpState::AwaitExhibit }
    }

    fn verdict(session: &str, v: VerdictBody) -> Envelope {
        Envelope::new(MsgType::Verdict, session, &v).expect("verdict serializes")
    }

    fn on_exhibit(&self, body: ExhibitBody) -> Result<(Challenge, std::collections::BTreeMap<String, bool>)> {
        let (challenge, doc): (Challenge, PoeDocument) = match (body.poe, body.poe_ref) {
            (Some(signed), _) => (self.tp.verify_and_challenge(&signed)?, signed.document),
            (None, Some(r)) => {
                let ledger = self
                    .tp
                    .ledger()
                    .ok_or_else(|| ProtocolError::Session("this verifier has no ledger access".into()))?;
                let (ch, minted) = self.tp.exhibit_onchain(&r, &**ledger)?;
                (ch, minted.document)
            }
            (None, None) => return Err(ProtocolError::Wire("EXHIBIT carries neither poe nor poe_ref".into())),
        };
        Ok((challenge, ThirdParty::check_disclosure(&doc, &body.disclosure)))
    }
}

impl ServerSession for TpSession {
    fn handle(&mut self, msg: Envelope) -> Vec<Envelope> {
        let session = msg.session.clone();
        match std::mem::replace(&mut self.state, TpState::Done) {
            TpState::AwaitExhibit if msg.kind == MsgType::Exhibit => {
                let outcome = msg.body_as::<ExhibitBody>().and_then(|b| self.on_exhibit(b));
                match outcome {
                    Ok((challenge, disclosed)) => {
                        self.state = TpState::AwaitResponse { disclosed };
                        vec![Envelope::new(MsgType::Challenge, &session, &challenge).expect("challenge serializes")]
                    }
                    // Verification failed at step (2): the protocol stops here.
                    Err(e) => vec![Self::verdict(&session, VerdictBody::reject(e.code()))],
                }
            }
            TpState::AwaitResponse { disclosed } if msg.kind == MsgType::Response => {
                let verdict = match msg.body_as::<ChallengeResponse>().and_then(|r| self.tp.verify_response(&r)) {
                    Ok(true) if disclosed.values().all(|ok| *ok) => {
                        VerdictBody { accept: true, disclosed, reason: None }
                    }
                    Ok(true) => VerdictBody { accept: false, disclosed, reason: Some("DisclosureMismatch".into()) },
                    Ok(false) => VerdictBody { accept: false, disclosed, reason: Some("BadResponse".into()) },
                    Err(e) => VerdictBody { accept: false, disclosed, reason: Some(e.code()) },
                };
                vec![Self::verdict(&session, verdict)]
            }
            _ => vec![Envelope::error(&session, &unexpected(&msg))],
        }
    }

    fn finished(&self) -> bool {
        matches!(self.state, TpState::Done)
    }
}

// ------------------------------------------------------- transfer owner side

/// Current owner receiving a recipient's key and writing the transfer.
pub struct OwnerTransferSession {
    keys: KeyPair,
    poe_ref: PoeRef,
    ledger: Arc<dyn LedgerApi>,
    result: Option<Result<PoeRef>>,
}

impl OwnerTransferSession {
    pub fn new(keys: KeyPair, poe_ref: PoeRef, ledger: Arc<dyn LedgerApi>) -> Self {
        Self { keys, poe_ref, ledger, result: None }
    }

    /// The new reference, once the transfer ran.
    pub fn outcome(self) -> Option<Result<PoeRef>> {
        self.result
    }
}

impl ServerSession for OwnerTransferSession {
    fn handle(&mut self, msg: Envelope) -> Vec<Envelope> {
        if self.result.is_some() || msg.kind != MsgType::TransferPk {
            let e = unexpected(&msg);
            return vec![Envelope::error(&msg.session, &e)];
        }
        let res = msg
            .body_as::<TransferPkBody>()
            .and_then(|b| transfer_poe(&self.keys, &self.poe_ref, &b.public_key, &*self.ledger));
        let reply = match &res {
            Ok(r) => Envelope::new(MsgType::TransferDone, &msg.session, &TransferDoneBody { poe_ref: r.clone() })
                .expect("ref serializes"),
            Err(e) => Envelope::error(&msg.session, e),
        };
        self.result = Some(res);
        vec![reply]
    }

    fn finished(&self) -> bool {
        self.result.is_some()
    }
}

// ------------------------------------------------------------ client side

/// Everything the client walks away with after generation.
#[derive(Debug, Clone)]
pub struct EngageOutcome {
    /// The document as issued; in ledger mode, as it was minted.
    pub document: PoeDocument,
    pub poe: Option<SignedPoe>,
    pub poe_ref: Option<PoeRef>,
    pub keys: KeyPair,
    pub pwd: Pwd,
    pub disclosure: DisclosurePackage,
    pub reward: Option<IssuedReward>,
}

#[allow(clippy::large_enum_variant)]
enum ClientState {
    Init { data: Map<String, Value>, policy: DisclosurePolicy },
    AwaitDraft { request: EngagementRequest, disclosure: DisclosurePackage },
    AwaitIssued { draft: PoeDraft, keys: KeyPair, pwd: Pwd, disclosure: DisclosurePackage },
    Done,
}

/// Generation handshake, client side.
pub struct ClientEngagement {
    mode: IssueMode,
    algorithm: String,
    es_key: Option<PublicKey>,
    rng: PoeRng,
    session: String,
    state: ClientState,
}

impl ClientEngagement {
    pub fn new(data: Map<String, Value>, policy: DisclosurePolicy, mode: IssueMode, mut rng: PoeRng) -> Self {
        let session = new_session_id(&mut rng);
        Self {
            mode,
            algorithm: poe_core::crypto::DEFAULT_ALGORITHM.to_owned(),
            es_key: None,
            rng,
            session,
            state: ClientState::Init { data, policy },
        }
    }

    /// Signature scheme for the ephemeral key pair.
    pub fn algorithm(mut self, alg: &str) -> Self {
        self.algorithm = alg.to_owned();
        self
    }

    /// Verify the issuer signature on receipt.
    pub fn expect_issuer(mut self, pk: PublicKey) -> Self {
        self.es_key = Some(pk);
        self
    }

    pub fn start(&mut self) -> Result<Envelope> {
        let ClientState::Init { data, policy } = std::mem::replace(&mut self.state, ClientState::Done) else {
            return Err(ProtocolError::Session("already started".into()));
        };
        let (request, disclosure) = begin_engagement(&data, &policy, &mut self.rng)?;
        let env = Envelope::new(MsgType::Engage, &self.session, &EngageBody { mode: self.mode, request: request.clone() })?;
        self.state = ClientState::AwaitDraft { request, disclosure };
        Ok(env)
    }

    pub fn on_message(&mut self, msg: Envelope) -> Result<Step<EngageOutcome>> {
        match std::mem::replace(&mut self.state, ClientState::Done) {
            ClientState::AwaitDraft { request, disclosure } if msg.kind == MsgType::DraftOk => {
                let DraftOkBody { draft } = msg.body_as()?;
                check_draft(&request, &draft)?;
                let keys = keygen_with(&self.algorithm, &mut self.rng)?;
                let pwd = gen_pwd(&mut self.rng);
                let env = Envelope::new(
                    MsgType::Keys,
                    &self.session,
                    &KeysBody { public_key: keys.public.clone(), pwd: pwd.clone() },
                )?;
                self.state = ClientState::AwaitIssued { draft, keys, pwd, disclosure };
                Ok(Step::Send(env))
            }
            ClientState::AwaitIssued { draft, keys, pwd, disclosure } if msg.kind == MsgType::PoeIssued => {
                let body: PoeIssuedBody = msg.body_as()?;
                let expected = draft.complete(&keys.public);
                match (self.mode, &body.poe, &body.poe_ref) {
                    (IssueMode::Central, Some(signed), _) => {
                        if signed.document != expected {
                            return Err(ProtocolError::DraftMismatch("issued PoE differs from the agreed draft".into()));
                        }
                        if let Some(es) = &self.es_key {
                            if !signed.verify(es)? {
                                return Err(ProtocolError::PoeInvalid);
                            }
                        }
                    }
                    (IssueMode::Ledger, _, Some(_)) => {}
                    _ => return Err(ProtocolError::Wire("POE_ISSUED lacks the PoE for this mode".into())),
                }
                if let Some(r) = &body.reward {
                    if r.pwd_digest != pwd.digest() {
                        return Err(ProtocolError::Wire("reward is bound to another password".into()));
                    }
                }
                Ok(Step::Done(EngageOutcome {
                    document: expected,
                    poe: body.poe,
                    poe_ref: body.poe_ref,
                    keys,
                    pwd,
                    disclosure,
                    reward: body.reward,
                }))
            }
            _ => Err(unexpected(&msg)),
        }
    }
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum ExhibitTarget {
    Poe(SignedPoe),
    Ref(PoeRef),
}

enum ExhibitState {
    Init,
    AwaitChallenge,
    AwaitVerdict,
    Done,
}

/// Exhibition handshake, client side.
pub struct ClientExhibition {
    target: ExhibitTarget,
    keys: KeyPair,
    document: PoeDocument,
    disclosure: DisclosurePackage,
    session: String,
    state: ExhibitState,
}

impl ClientExhibition {
    /// `document` is the exhibited PoE's document; it is only used to bind
    /// the digest when the verifier runs in strict mode.
    pub fn new(target: ExhibitTarget, keys: KeyPair, document: PoeDocument, session: impl Into<String>) -> Self {
        Self {
            target,
            keys,
            document,
            disclosure: DisclosurePackage::default(),
            session: session.into(),
            state: ExhibitState::Init,
        }
    }

    pub fn disclose(mut self, pkg: DisclosurePackage) -> Self {
        self.disclosure = pkg;
        self
    }

    pub fn start(&mut self) -> Result<Envelope> {
        let (poe, poe_ref) = match &self.target {
            ExhibitTarget::Poe(p) => (Some(p.clone()), None),
            ExhibitTarget::Ref(r) => (None, Some(r.clone())),
        };
        self.state = ExhibitState::AwaitChallenge;
        Envelope::new(MsgType::Exhibit, &self.session, &ExhibitBody { poe, poe_ref, disclosure: self.disclosure.clone() })
    }

    pub fn on_message(&mut self, msg: Envelope) -> Result<Step<VerdictBody>> {
        match (std::mem::replace(&mut self.state, ExhibitState::Done), msg.kind) {
            (ExhibitState::AwaitChallenge, MsgType::Challenge) => {
                let ch: Challenge = msg.body_as()?;
                let resp = answer_for(&ch, &self.keys, &self.document)?;
                self.state = ExhibitState::AwaitVerdict;
                Ok(Step::Send(Envelope::new(MsgType::Response, &self.session, &resp)?))
            }
            (ExhibitState::AwaitChallenge | ExhibitState::AwaitVerdict, MsgType::Verdict) => {
                Ok(Step::Done(msg.body_as()?))
            }
            _ => Err(unexpected(&msg)),
        }
    }
}

/// Recipient side of a transfer: send a fresh public key, receive the new
/// reference.
pub struct RecipientTransfer {
    public_key: PublicKey,
    session: String,
}

impl RecipientTransfer {
    pub fn new(public_key: PublicKey, session: impl Into<String>) -> Self {
        Self { public_key, session: session.into() }
    }

    pub fn start(&mut self) -> Result<Envelope> {
        Envelope::new(MsgType::TransferPk, &self.session, &TransferPkBody { public_key: self.public_key.clone() })
    }

    pub fn on_message(&mut self, msg: Envelope) -> Result<Step<PoeRef>> {
        let body: TransferDoneBody = msg.expect(MsgType::TransferDone)?.body_as()?;
        Ok(Step::Done(body.poe_ref))
    }
}

// ------------------------------------------------------------ driving

/// A client-side state machine.
pub trait ClientMachine {
    type Outcome;
    fn start(&mut self) -> Result<Envelope>;
    fn on_message(&mut self, msg: Envelope) -> Result<Step<Self::Outcome>>;
}

macro_rules! client_machine {
    ($t:ty, $o:ty) => {
        impl ClientMachine for $t {
            type Outcome = $o;
            fn start(&mut self) -> Result<Envelope> {
                <$t>::start(self)
            }
            fn on_message(&mut self, msg: Envelope) -> Result<Step<$o>> {
                <$t>::on_message(self, msg)
            }
        }
    };
}

client_machine!(ClientEngagement, EngageOutcome);
client_machine!(ClientExhibition, VerdictBody);
client_machine!(RecipientTransfer, PoeRef);

/// Run a client against a server in the same process, recording every
/// envelope in order. Channels in the transport layer produce the same
/// sequence.
pub fn run_direct<C: ClientMachine, S: ServerSession + ?Sized>(
    client: &mut C,
    server: &mut S,
    transcript: &mut Vec<Envelope>,
) -> Result<C::Outcome> {
    let mut outbound = client.start()?;
    loop {
        transcript.push(outbound.clone());
        let replies = server.handle(outbound);
        let mut next = None;
        for reply in replies {
            transcript.push(reply.clone());
            match client.on_message(reply)? {
                Step::Send(env) => next = Some(env),
                Step::Done(out) => return Ok(out),
            }
        }
        outbound = next.ok_or_else(|| ProtocolError::Session("server stopped replying".into()))?;
    }
}
