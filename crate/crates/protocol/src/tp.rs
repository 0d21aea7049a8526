//! The Third Party: verifies an exhibited PoE and runs the
//! challenge-response that proves the exhibitor holds its secret key.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Duration, Utc};
use poe_core::rng::SharedRng;
use poe_core::{crypto, Clock, Digest, DisclosurePackage, PoeDocument, PoeTime, PublicKey, Signature, SignedPoe, TrustStore};
use poe_ledger::{verify_history, LedgerApi, PoeRef, TxBody};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ProtocolError, Result};

pub const CHALLENGE_LEN: usize = 32;
pub const SESSION_TTL_SECS: i64 = 120;

/// 256 uniformly random bits, hex on the wire.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChallengeBytes(pub [u8; CHALLENGE_LEN]);

impl fmt::Debug for ChallengeBytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch:{}", hex::encode(&self.0[..8]))
    }
}

impl Serialize for ChallengeBytes {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for ChallengeBytes {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; CHALLENGE_LEN];
        hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(Self(out))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub session_id: String,
    pub ch: ChallengeBytes,
    pub issued_at: PoeTime,
    /// Strict mode: the response must also sign the PoE digest.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub bind_poe: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeResponse {
    pub session_id: String,
    pub z: Signature,
}

/// Bytes the holder signs: ch alone, or ch followed by the PoE digest.
pub fn challenge_message(ch: &ChallengeBytes, poe_digest: Option<&Digest>) -> Vec<u8> {
    let mut m = ch.0.to_vec();
    if let Some(d) = poe_digest {
        m.extend_from_slice(d.as_bytes());
    }
    m
}

#[derive(Debug)]
struct OpenSession {
    ch: ChallengeBytes,
    holder: PublicKey,
    poe_digest: Digest,
    opened: DateTime<Utc>,
    bind: bool,
}

pub struct ThirdParty {
    trust: TrustStore,
    clock: Arc<dyn Clock>,
    rng: SharedRng,
    ttl: Duration,
    strict: bool,
    ledger: Option<Arc<dyn LedgerApi>>,
    sessions: Mutex<HashMap<String, OpenSession>>,
}

impl fmt::Debug for ThirdParty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThirdParty").field("trusted", &self.trust.len()).field("strict", &self.strict).finish()
    }
}

impl ThirdParty {
    pub fn new(trust: TrustStore, clock: Arc<dyn Clock>, rng: SharedRng) -> Self {
        Self {
            trust,
            clock,
            rng,
            ttl: Duration::seconds(SESSION_TTL_SECS),
            strict: false,
            ledger: None,
            sessions: Mutex::default(),
        }
    }

    pub fn with_ledger(mut self, ledger: Arc<dyn LedgerApi>) -> Self {
        self.ledger = Some(ledger);
        self
    }

    /// Require responses to bind the PoE digest as well as the challenge.
    pub fn strict(mut self, on: bool) -> Self {
        self.strict = on;
        self
    }

    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.ttl = ttl;
        self
    }

    pub fn ledger(&self) -> Option<&Arc<dyn LedgerApi>> {
        self.ledger.as_ref()
    }

    /// Issuer trust, issuer signature, structure, expiry.
    pub fn check_poe(&self, signed: &SignedPoe) -> Result<()> {
        let issuer = self.trust.get(&signed.signer_key_id).ok_or(ProtocolError::UntrustedIssuer)?;
        if !signed.verify(issuer).unwrap_or(false) {
            return Err(ProtocolError::PoeInvalid);
        }
        signed.document.validate().map_err(|_| ProtocolError::PoeInvalid)?;
        if signed.document.is_expired_at(self.clock.now()).map_err(|_| ProtocolError::PoeInvalid)? {
            return Err(ProtocolError::PoeExpired);
        }
        Ok(())
    }

    fn open(&self, holder: PublicKey, poe_digest: Digest) -> Challenge {
        let now = self.clock.now();
        let mut sessions = self.sessions.lock().unwrap();
        let session_id = loop {
            let id = hex::encode(self.rng.bytes::<16>());
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let ch = ChallengeBytes(self.rng.bytes());
        sessions.insert(session_id.clone(), OpenSession { ch, holder, poe_digest, opened: now, bind: self.strict });
        Challenge { session_id, ch, issued_at: PoeTime::new(now), bind_poe: self.strict }
    }

    /// Verify a directly exhibited PoE and challenge its public key.
    pub fn verify_and_challenge(&self, signed: &SignedPoe) -> Result<Challenge> {
        self.check_poe(signed)?;
        let holder = signed.document.holder_key().map_err(|_| ProtocolError::PoeInvalid)?;
        Ok(self.open(holder, signed.poe_digest()?))
    }

    /// Fetch the PoE behind `r`, verify its whole ownership chain, and
    /// challenge the current owner's key.
    pub fn exhibit_onchain(&self, r: &PoeRef, ledger: &dyn LedgerApi) -> Result<(Challenge, SignedPoe)> {
        let tx = ledger.resolve(r)?;
        let history = ledger.history(tx.asset_id())?;
        let minted = match history.first().map(|t| &t.body) {
            Some(TxBody::Mint { payload, .. }) => payload.clone(),
            _ => return Err(ProtocolError::ChainInvalid("asset has no mint".into())),
        };
        self.check_poe(&minted)?;
        let owner = verify_history(&history, &self.trust).map_err(ProtocolError::from)?;
        Ok((self.open(owner, *tx.asset_id()), minted))
    }

    /// Close the session and check z. Challenges are single-use: the
    /// session is gone after this call whatever the outcome.
    pub fn verify_response(&self, resp: &ChallengeResponse) -> Result<bool> {
        let session = self
            .sessions
            .lock()
            .unwrap()
            .remove(&resp.session_id)
            .ok_or_else(|| ProtocolError::Session("unknown or closed session".into()))?;
        if self.clock.now() - session.opened > self.ttl {
            return Err(ProtocolError::Session("session expired".into()));
        }
        let msg = challenge_message(&session.ch, session.bind.then_some(&session.poe_digest));
        Ok(crypto::verify(&session.holder, &resp.z, &msg).unwrap_or(false))
    }

    /// Check disclosed openings against the document's commitments.
    pub fn check_disclosure(doc: &PoeDocument, pkg: &DisclosurePackage) -> BTreeMap<String, bool> {
        pkg.entries
            .iter()
            .map(|(field, o)| {
                let ok = poe_core::verify_disclosure(doc, field, &o.value, &o.salt).unwrap_or(false);
                (field.clone(), ok)
            })
            .collect()
    }

    pub fn open_sessions(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    /// Drop sessions older than the TTL.
    pub fn sweep(&self) -> usize {
        let now = self.clock.now();
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| now - s.opened <= self.ttl);
        before - sessions.len()
    }
}
