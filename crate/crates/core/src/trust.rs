//! Trust anchors: the issuer keys a verifier accepts, distributed out of band
//! as JSON files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crypto::PublicKey;
use crate::error::{CoreError, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrustStore {
    keys: BTreeMap<String, PublicKey>,
}

#[derive(Serialize, Deserialize)]
struct TrustFile {
    keys: Vec<PublicKey>,
}

impl TrustStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_keys<I: IntoIterator<Item = PublicKey>>(keys: I) -> Self {
        let mut t = Self::new();
        for k in keys {
            t.insert(k);
        }
        t
    }

    pub fn insert(&mut self, key: PublicKey) {
        self.keys.insert(key.key_id(), key);
    }

    pub fn get(&self, key_id: &str) -> Option<&PublicKey> {
        self.keys.get(key_id)
    }

    pub fn contains(&self, key: &PublicKey) -> bool {
        self.keys.get(&key.key_id()).is_some_and(|k| k == key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PublicKey> {
        self.keys.values()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = TrustFile { keys: self.keys.values().cloned().collect() };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TrustFile = serde_json::from_str(text)?;
        for k in &file.keys {
            k.validate()?;
        }
        Ok(Self::with_keys(file.keys))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Encoding(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
