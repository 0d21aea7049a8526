//! Client-side steps: preparing an engagement request, generating the
//! ephemeral key pair and reward password, and answering challenges.

use std::collections::BTreeMap;
use std::fmt;

use poe_core::canonical::canonical_value;
use poe_core::crypto::DEFAULT_ALGORITHM;
use poe_core::{DisclosurePackage, KeyPair, Opening, PoeDocument, PoeDraft, Pwd, Salt};
use rand::CryptoRng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{ProtocolError, Result};
use crate::policy::{Disclosure, DisclosurePolicy};
use crate::tp::{challenge_message, Challenge, ChallengeResponse};

/// What the client sends at engagement: plain fields verbatim, and
/// (value, salt) openings for the fields to be committed.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementRequest {
    pub engagement_data: Map<String, Value>,
    #[serde(default)]
    pub committed: BTreeMap<String, Opening>,
}

impl fmt::Debug for EngagementRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EngagementRequest")
            .field("plain", &self.engagement_data.keys().collect::<Vec<_>>())
            .field("committed", &self.committed.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl EngagementRequest {
    /// Every value the engagement system sees, plain and committed.
    pub fn full_record(&self) -> Map<String, Value> {
        let mut out = self.engagement_data.clone();
        for (k, o) in &self.committed {
            out.insert(k.clone(), Value::String(o.value.clone()));
        }
        out
    }
}

/// Text that a committed field's commitment is computed over.
pub fn commitment_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => String::from_utf8(canonical_value(other)).expect("canonical JSON is UTF-8"),
    }
}

/// Apply `policy` to `data`. Salts for committed fields are drawn here, on
/// the client, and the returned package is what the client keeps.
pub fn begin_engagement<R: CryptoRng + ?Sized>(
    data: &Map<String, Value>,
    policy: &DisclosurePolicy,
    rng: &mut R,
) -> Result<(EngagementRequest, DisclosurePackage)> {
    if data.is_empty() {
        return Err(ProtocolError::EmptyEngagement);
    }
    let mut req = EngagementRequest { engagement_data: Map::new(), committed: BTreeMap::new() };
    let mut package = DisclosurePackage::default();
    for (field, value) in data {
        match policy.get(field) {
            None => return Err(ProtocolError::PolicyIncomplete(field.clone())),
            Some(Disclosure::Plain) => {
                req.engagement_data.insert(field.clone(), value.clone());
            }
            Some(Disclosure::Committed) => {
                let opening = Opening { value: commitment_text(value), salt: Salt::random(rng) };
                package.entries.insert(field.clone(), opening.clone());
                req.committed.insert(field.clone(), opening);
            }
            Some(Disclosure::Excluded) => {}
        }
    }
    if req.engagement_data.is_empty() && req.committed.is_empty() {
        return Err(ProtocolError::NothingDisclosed);
    }
    Ok((req, package))
}

/// Check that the engagement system built exactly what was asked for.
pub fn check_draft(req: &EngagementRequest, draft: &PoeDraft) -> Result<()> {
    // Compared as canonical bytes: 120.0 and 120 are the same JSON number.
    let sent = canonical_value(&Value::Object(req.engagement_data.clone()));
    if draft.engagement_data.decode_bytes()? != sent {
        return Err(ProtocolError::DraftMismatch("engagement data differs from the plain fields".into()));
    }
    if draft.sensitive_data.len() != req.committed.len() {
        return Err(ProtocolError::DraftMismatch("unexpected set of commitments".into()));
    }
    for (field, opening) in &req.committed {
        match draft.sensitive_data.get(field) {
            Some(d) if *d == opening.commitment().to_hex() => {}
            _ => return Err(ProtocolError::DraftMismatch(format!("commitment for {field:?}"))),
        }
    }
    Ok(())
}

/// Fresh ephemeral key pair under the default algorithm.
pub fn keygen<R: CryptoRng + ?Sized>(rng: &mut R) -> Result<KeyPair> {
    keygen_with(DEFAULT_ALGORITHM, rng)
}

pub fn keygen_with<R: CryptoRng + ?Sized>(algorithm: &str, rng: &mut R) -> Result<KeyPair> {
    Ok(KeyPair::generate_with(algorithm, rng)?)
}

pub fn gen_pwd<R: CryptoRng + ?Sized>(rng: &mut R) -> Pwd {
    Pwd::generate(rng)
}

/// z = Sig(secret_key, ch).
pub fn answer(ch: &Challenge, kp: &KeyPair) -> Result<ChallengeResponse> {
    let z = kp.sign(&challenge_message(&ch.ch, None))?;
    Ok(ChallengeResponse { session_id: ch.session_id.clone(), z })
}

/// Like [`answer`], but also binds the PoE digest when the verifier asks
/// for it.
pub fn answer_for(ch: &Challenge, kp: &KeyPair, doc: &PoeDocument) -> Result<ChallengeResponse> {
    if !ch.bind_poe {
        return answer(ch, kp);
    }
    let digest = doc.digest()?;
    let z = kp.sign(&challenge_message(&ch.ch, Some(&digest)))?;
    Ok(ChallengeResponse { session_id: ch.session_id.clone(), z })
}
