//! Salted hash commitments for sensitive fields, and the client-held
//! openings that reveal them.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::digest::{sha256_concat, Digest};
use crate::document::PoeDocument;
use crate::error::{CoreError, Result};

pub const SALT_LEN: usize = 16;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Salt(pub [u8; SALT_LEN]);

impl Salt {
    pub const ZERO: Salt = Salt([0; SALT_LEN]);

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut s = [0u8; SALT_LEN];
        rng.fill_bytes(&mut s);
        Self(s)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let mut out = [0u8; SALT_LEN];
        hex::decode_to_slice(s, &mut out).map_err(|e| CoreError::Encoding(format!("salt: {e}")))?;
        Ok(Self(out))
    }
}

impl fmt::Debug for Salt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Salt({})", self.to_hex())
    }
}

impl Serialize for Salt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Salt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Salt::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// H(salt ‖ value)
pub fn commit_field(value: &str, salt: &Salt) -> Digest {
    sha256_concat(&[&salt.0, value.as_bytes()])
}

/// Check an opening against the digest stored under `field`.
pub fn verify_disclosure(doc: &PoeDocument, field: &str, value: &str, salt: &Salt) -> Result<bool> {
    let stored = doc
        .sensitive_data
        .get(field)
        .ok_or_else(|| CoreError::Field(field.to_owned()))?;
    let Ok(stored) = stored.parse::<Digest>() else {
        return Ok(false);
    };
    Ok(commit_field(value, salt) == stored)
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opening {
    pub value: String,
    #[serde(rename = "salt_hex")]
    pub salt: Salt,
}

impl Opening {
    pub fn commitment(&self) -> Digest {
        commit_field(&self.value, &self.salt)
    }
}

impl fmt::Debug for Opening {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Opening").field("salt", &self.salt).finish_non_exhaustive()
    }
}

/// Raw values and salts for a document's committed fields. Kept by the
/// client and shared field by field on demand.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DisclosurePackage {
    pub entries: BTreeMap<String, Opening>,
}

impl DisclosurePackage {
    pub fn insert(&mut self, field: impl Into<String>, value: impl Into<String>, salt: Salt) {
        self.entries.insert(field.into(), Opening { value: value.into(), salt });
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Restrict to the named fields. Unknown names are an error so a typo
    /// never silently discloses nothing.
    pub fn select<'a, I>(&self, fields: I) -> Result<DisclosurePackage>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out = DisclosurePackage::default();
        for f in fields {
            let opening = self.entries.get(f).ok_or_else(|| CoreError::Field(f.to_owned()))?;
            out.entries.insert(f.to_owned(), opening.clone());
        }
        Ok(out)
    }

    /// Per-field verdicts against `doc`.
    pub fn verify_against(&self, doc: &PoeDocument) -> Result<BTreeMap<String, bool>> {
        self.entries
            .iter()
            .map(|(field, o)| verify_disclosure(doc, field, &o.value, &o.salt).map(|ok| (field.clone(), ok)))
            .collect()
    }
}
