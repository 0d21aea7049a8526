//! Binding server-side sessions to channels.

use std::sync::Arc;

use log::{debug, warn};
use poe_ledger::{LedgerApi, LedgerError, TxSubmission};
use poe_protocol::wire::ErrorBody;
use poe_protocol::{EngagementSystem, Envelope, EsSession, MsgType, ProtocolError, ServerSession, ThirdParty, TpSession};
use poe_reward::{RewardError, RewardingSystem};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::channel::SecureChannel;
use crate::credential::{PeerIdentity, PinnedPeers};
use crate::error::{Result, TransportError};
use crate::messages::*;

/// Creates one session per accepted channel.
pub trait Service: Send + Sync {
    fn session(&self, peer: Option<&PeerIdentity>) -> Box<dyn ServerSession>;
}

impl<F> Service for F
where
    F: Fn(Option<&PeerIdentity>) -> Box<dyn ServerSession> + Send + Sync,
{
    fn session(&self, peer: Option<&PeerIdentity>) -> Box<dyn ServerSession> {
        self(peer)
    }
}

/// Run one channel to completion: every received envelope goes through the
/// session and its replies go back in order. Returns when the session
/// finishes or the peer closes.
pub fn serve_channel(mut chan: SecureChannel, service: &dyn Service) -> Result<()> {
    let mut session = service.session(chan.peer_identity());
    loop {
        let msg = match chan.try_recv() {
            Ok(Some(msg)) => msg,
            Ok(None) => return Ok(()),
            Err(e @ (TransportError::Malformed(_) | TransportError::FrameTooLarge { .. })) => {
                warn!("dropping channel: {e}");
                let _ = chan.send(&Envelope::error("", &ProtocolError::Wire(e.to_string())));
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        debug!("<- {} {}", msg.kind.as_str(), msg.session);
        for reply in session.handle(msg) {
            chan.send(&reply)?;
        }
        if session.finished() {
            return Ok(());
        }
    }
}

/// Failure carried in an ERROR reply.
struct Fail {
    code: String,
    message: String,
}

impl From<LedgerError> for Fail {
    fn from(e: LedgerError) -> Self {
        Fail { code: e.code().into(), message: e.to_string() }
    }
}

impl From<RewardError> for Fail {
    fn from(e: RewardError) -> Self {
        Fail { code: e.code().into(), message: e.to_string() }
    }
}

impl From<ProtocolError> for Fail {
    fn from(e: ProtocolError) -> Self {
        Fail { code: e.code(), message: e.to_string() }
    }
}

fn respond<T: Serialize>(session: &str, result: std::result::Result<T, Fail>) -> Envelope {
    let made = match result {
        Ok(body) => Envelope::new(MsgType::Ok, session, &body).map_err(Fail::from),
        Err(f) => Err(f),
    };
    made.unwrap_or_else(|f| {
        let body = ErrorBody { code: f.code, message: f.message, reason: None };
        Envelope::new(MsgType::Error, session, &body).expect("error body serializes")
    })
}

fn body<T: DeserializeOwned>(msg: &Envelope) -> std::result::Result<T, Fail> {
    Ok(msg.body_as()?)
}

fn unexpected(msg: &Envelope) -> Fail {
    ProtocolError::Unexpected(msg.kind.as_str()).into()
}

pub struct EsService(pub Arc<EngagementSystem>);

impl Service for EsService {
    fn session(&self, _peer: Option<&PeerIdentity>) -> Box<dyn ServerSession> {
        Box::new(EsSession::new(self.0.clone()))
    }
}

pub struct TpService(pub Arc<ThirdParty>);

impl Service for TpService {
    fn session(&self, _peer: Option<&PeerIdentity>) -> Box<dyn ServerSession> {
        Box::new(TpSession::new(self.0.clone()))
    }
}

/// Ledger node: GET_CHAIN_ID, GET_TX, GET_HEAD_OWNER, GET_HISTORY, APPEND.
pub struct LedgerService(pub Arc<dyn LedgerApi>);

impl Service for LedgerService {
    fn session(&self, _peer: Option<&PeerIdentity>) -> Box<dyn ServerSession> {
        Box::new(LedgerSession { ledger: self.0.clone() })
    }
}

struct LedgerSession {
    ledger: Arc<dyn LedgerApi>,
}

impl ServerSession for LedgerSession {
    fn handle(&mut self, msg: Envelope) -> Vec<Envelope> {
        let s = msg.session.as_str();
        let l = &self.ledger;
        let reply = match msg.kind {
            MsgType::GetChainId => respond(s, l.chain_id().map(|chain_id| ChainIdBody { chain_id }).map_err(Fail::from)),
            MsgType::GetTx => respond(s, body::<TxIdBody>(&msg).and_then(|b| Ok(l.get(&b.tx_id)?))),
            MsgType::GetHeadOwner => respond(
                s,
                body::<AssetBody>(&msg).and_then(|b| Ok(OwnerBody { public_key: l.head_owner(&b.asset_id)? })),
            ),
            MsgType::GetHistory => respond(
                s,
                body::<AssetBody>(&msg).and_then(|b| Ok(HistoryBody { transactions: l.history(&b.asset_id)? })),
            ),
            MsgType::Append => respond(s, body::<TxSubmission>(&msg).and_then(|b| Ok(l.append(b)?))),
            _ => respond::<()>(s, Err(unexpected(&msg))),
        };
        vec![reply]
    }

    fn finished(&self) -> bool {
        false
    }
}

/// Rewarding-system node. ISSUE is honoured only on channels whose client
/// authenticated as one of `issuers`; REDEEM and SPEND are open.
pub struct RsService {
    pub rs: Arc<RewardingSystem>,
    pub issuers: PinnedPeers,
}

impl Service for RsService {
    fn session(&self, peer: Option<&PeerIdentity>) -> Box<dyn ServerSession> {
        let may_issue = peer.is_some_and(|p| self.issuers.contains(p));
        Box::new(RsSession { rs: self.rs.clone(), may_issue })
    }
}

struct RsSession {
    rs: Arc<RewardingSystem>,
    may_issue: bool,
}

impl ServerSession for RsSession {
    fn handle(&mut self, msg: Envelope) -> Vec<Envelope> {
        let s = msg.session.as_str();
        let reply = match msg.kind {
            MsgType::Issue if !self.may_issue => respond::<()>(s, Err(RewardError::Unauthorized.into())),
            MsgType::Issue => respond(s, body::<IssueBody>(&msg).and_then(|b| Ok(self.rs.issue(&b.reward_type, b.pwd_digest)?))),
            MsgType::Redeem => respond(s, body::<RedeemBody>(&msg).and_then(|b| Ok(self.rs.redeem(&b.otc, &b.pwd)?))),
            MsgType::Spend => respond(s, body::<SpendBody>(&msg).and_then(|b| Ok(self.rs.spend(&b.voucher_id)?))),
            _ => respond::<()>(s, Err(unexpected(&msg))),
        };
        vec![reply]
    }

    fn finished(&self) -> bool {
        false
    }
}
