//! The PoE document and its signed envelope.
//!
//! Field names and nesting follow the interchange JSON layout:
//!
//! ```json
//! {
//!     "proof_type" : "PoE",
//!     "transferable" : true,
//!     "public_key" : { "algorithm" : "SHA-256/RSA", "verification_key" : "..." },
//!     "timestamp" : { "time_format" : "UTC", "time" : "2005-10-30 T 10:45" },
//!     "gps" : { "lat" : -34, "lng" : 151, "alt" : 1200 },
//!     "engagement_data" : { "encoding" : "base64", "data" : "..." },
//!     "sensitive_data" : { "data_1" : "<hex digest>" },
//!     "other_data" : { "expiration_date" : { "date_format" : "UTC", "date" : "2035-10-30 T 10:45" } }
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::canonical::{canonical_value, to_canonical_bytes, to_pretty_string};
use crate::crypto::{self, KeyPair, PublicKey, Signature};
use crate::digest::{sha256, Digest, DIGEST_LEN};
use crate::error::{CoreError, Result};
use crate::time::{PoeTime, TIME_FORMAT_UTC};

pub const PROOF_TYPE: &str = "PoE";
pub const ENCODING_BASE64: &str = "base64";
pub const EXPIRATION_DATE: &str = "expiration_date";

/// The literal `"PoE"`; anything else fails to parse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProofType;

impl Serialize for ProofType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(PROOF_TYPE)
    }
}

impl<'de> Deserialize<'de> for ProofType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s == PROOF_TYPE {
            Ok(ProofType)
        } else {
            Err(serde::de::Error::custom(format!("proof_type must be \"{PROOF_TYPE}\", got {s:?}")))
        }
    }
}

/// The holder's verification key as it appears inside a document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKeyInfo {
    pub algorithm: String,
    pub verification_key: String,
}

impl From<&PublicKey> for PublicKeyInfo {
    fn from(pk: &PublicKey) -> Self {
        Self { algorithm: pk.algorithm.clone(), verification_key: pk.to_base64() }
    }
}

impl PublicKeyInfo {
    pub fn decode(&self) -> Result<PublicKey> {
        let pk = PublicKey::from_base64(&self.algorithm, &self.verification_key)?;
        pk.validate()?;
        Ok(pk)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimestampInfo {
    pub time_format: String,
    pub time: PoeTime,
}

impl TimestampInfo {
    pub fn utc(time: PoeTime) -> Self {
        Self { time_format: TIME_FORMAT_UTC.to_owned(), time }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gps {
    pub lat: f64,
    pub lng: f64,
    pub alt: f64,
}

impl Gps {
    /// Rejects non-finite coordinates, which have no JSON form.
    pub fn check(&self) -> Result<()> {
        for (name, v) in [("lat", self.lat), ("lng", self.lng), ("alt", self.alt)] {
            if !v.is_finite() {
                return Err(CoreError::Canonicalization(format!("gps.{name} is {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementData {
    pub encoding: String,
    pub data: String,
}

impl EngagementData {
    /// Base64 of the canonical encoding of `record`.
    pub fn encode(record: &Value) -> Self {
        Self { encoding: ENCODING_BASE64.to_owned(), data: BASE64.encode(canonical_value(record)) }
    }

    pub fn decode_bytes(&self) -> Result<Vec<u8>> {
        if self.encoding != ENCODING_BASE64 {
            return Err(CoreError::InvalidDocument(format!("unsupported engagement encoding {:?}", self.encoding)));
        }
        BASE64
            .decode(self.data.as_bytes())
            .map_err(|e| CoreError::InvalidDocument(format!("engagement_data: {e}")))
    }

    /// The embedded record, when it is JSON.
    pub fn decode_record(&self) -> Result<Value> {
        let bytes = self.decode_bytes()?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpirationDate {
    pub date_format: String,
    pub date: PoeTime,
}

/// Fields shared by a draft and a finished document.
macro_rules! poe_fields {
    ($(#[$meta:meta])* $name:ident { $($extra:tt)* }) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            pub proof_type: ProofType,
            pub transferable: bool,
            $($extra)*
            pub timestamp: TimestampInfo,
            #[serde(default, skip_serializing_if = "Option::is_none")]
            pub gps: Option<Gps>,
            pub engagement_data: EngagementData,
            #[serde(default)]
            pub sensitive_data: BTreeMap<String, String>,
            #[serde(default)]
            pub other_data: Map<String, Value>,
        }
    };
}

poe_fields!(
    /// A proof of engagement.
    PoeDocument {
        pub public_key: PublicKeyInfo,
    }
);

poe_fields!(
    /// A document the issuer has agreed to but that is not yet bound to a
    /// holder key.
    PoeDraft {}
);

fn expiration_of(other: &Map<String, Value>) -> Result<Option<PoeTime>> {
    let Some(raw) = other.get(EXPIRATION_DATE) else {
        return Ok(None);
    };
    let exp: ExpirationDate = serde_json::from_value(raw.clone())
        .map_err(|e| CoreError::InvalidDocument(format!("expiration_date: {e}")))?;
    if exp.date_format != TIME_FORMAT_UTC {
        return Err(CoreError::InvalidDocument(format!("unsupported date_format {:?}", exp.date_format)));
    }
    Ok(Some(exp.date))
}

impl PoeDraft {
    pub fn set_expiration(&mut self, date: PoeTime) {
        let exp = ExpirationDate { date_format: TIME_FORMAT_UTC.to_owned(), date };
        self.other_data
            .insert(EXPIRATION_DATE.to_owned(), serde_json::to_value(exp).expect("plain struct"));
    }

    pub fn expiration(&self) -> Result<Option<PoeTime>> {
        expiration_of(&self.other_data)
    }

    /// Bind the draft to the holder's verification key.
    pub fn complete(self, holder: &PublicKey) -> PoeDocument {
        PoeDocument {
            proof_type: ProofType,
            transferable: self.transferable,
            public_key: holder.into(),
            timestamp: self.timestamp,
            gps: self.gps,
            engagement_data: self.engagement_data,
            sensitive_data: self.sensitive_data,
            other_data: self.other_data,
        }
    }
}

impl PoeDocument {
    /// Deterministic bytes that signatures and digests are computed over.
    pub fn canonicalize(&self) -> Result<Vec<u8>> {
        if let Some(gps) = &self.gps {
            gps.check()?;
        }
        to_canonical_bytes(self)
    }

    /// SHA-256 of the canonical bytes.
    pub fn digest(&self) -> Result<Digest> {
        Ok(sha256(&self.canonicalize()?))
    }

    pub fn holder_key(&self) -> Result<PublicKey> {
        self.public_key.decode()
    }

    pub fn expiration(&self) -> Result<Option<PoeTime>> {
        expiration_of(&self.other_data)
    }

    /// Expired when an expiration date exists and is not after `now`.
    pub fn is_expired_at(&self, now: DateTime<Utc>) -> Result<bool> {
        Ok(self.expiration()?.is_some_and(|exp| exp.instant() <= now))
    }

    /// Check every structural invariant that parsing alone does not.
    pub fn validate(&self) -> Result<()> {
        self.public_key.decode()?;
        if self.timestamp.time_format != TIME_FORMAT_UTC {
            return Err(CoreError::InvalidDocument(format!(
                "unsupported time_format {:?}",
                self.timestamp.time_format
            )));
        }
        if let Some(gps) = &self.gps {
            gps.check()?;
        }
        self.engagement_data.decode_bytes()?;
        for (field, digest) in &self.sensitive_data {
            if digest.len() != DIGEST_LEN * 2 || digest.parse::<Digest>().is_err() {
                return Err(CoreError::InvalidDocument(format!(
                    "sensitive_data.{field} is not a {DIGEST_LEN}-byte hex digest"
                )));
            }
        }
        self.expiration()?;
        Ok(())
    }

    /// Pretty layout for files people read.
    pub fn to_pretty(&self) -> Result<String> {
        if let Some(gps) = &self.gps {
            gps.check()?;
        }
        to_pretty_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A document together with the issuer's signature over its canonical bytes.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedPoe {
    #[serde(rename = "poe")]
    pub document: PoeDocument,
    #[serde(rename = "poe_sign")]
    pub signature: Signature,
    pub signer_key_id: String,
}

impl fmt::Debug for SignedPoe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignedPoe")
            .field("signer_key_id", &self.signer_key_id)
            .field("transferable", &self.document.transferable)
            .finish_non_exhaustive()
    }
}

impl SignedPoe {
    pub fn sign(document: PoeDocument, issuer: &KeyPair) -> Result<Self> {
        let bytes = document.canonicalize()?;
        let signature = issuer.sign(&bytes)?;
        Ok(Self { document, signature, signer_key_id: issuer.public.key_id() })
    }

    /// Accept iff `issuer` is the named signer and the signature verifies.
    pub fn verify(&self, issuer: &PublicKey) -> Result<bool> {
        if issuer.key_id() != self.signer_key_id {
            return Ok(false);
        }
        let bytes = self.document.canonicalize()?;
        crypto::verify(issuer, &self.signature, &bytes)
    }

    pub fn poe_digest(&self) -> Result<Digest> {
        self.document.digest()
    }

    pub fn to_file_string(&self) -> Result<String> {
        to_pretty_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
