//! Node credentials (self-signed certificates) and fingerprint pinning.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use poe_core::sha256;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TransportError};

/// Who is at the other end of a channel.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PeerIdentity {
    pub name: String,
    /// SHA-256 of the certificate DER, lowercase hex.
    pub fingerprint: String,
}

impl fmt::Display for PeerIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, &self.fingerprint[..16.min(self.fingerprint.len())])
    }
}

pub fn fingerprint(cert_der: &[u8]) -> String {
    sha256(cert_der).to_hex()
}

/// A certificate and its PKCS#8 private key.
#[derive(Clone)]
pub struct Credential {
    pub name: String,
    pub cert_der: Vec<u8>,
    pub key_der: Vec<u8>,
}

impl fmt::Debug for Credential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Credential").field("identity", &self.identity()).finish_non_exhaustive()
    }
}

#[derive(Serialize, Deserialize)]
struct CredentialFile {
    name: String,
    cert: String,
    key: String,
}

impl Credential {
    /// Fresh self-signed P-256 certificate for `name`.
    pub fn generate(name: &str) -> Result<Self> {
        let ck = rcgen::generate_simple_self_signed(vec![name.to_owned()])
            .map_err(|e| TransportError::Credential(e.to_string()))?;
        Ok(Self { name: name.to_owned(), cert_der: ck.cert.der().to_vec(), key_der: ck.key_pair.serialize_der() })
    }

    pub fn identity(&self) -> PeerIdentity {
        PeerIdentity { name: self.name.clone(), fingerprint: fingerprint(&self.cert_der) }
    }

    pub fn to_json(&self) -> String {
        let file = CredentialFile { name: self.name.clone(), cert: B64.encode(&self.cert_der), key: B64.encode(&self.key_der) };
        serde_json::to_string_pretty(&file).expect("credential serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CredentialFile = serde_json::from_str(text).map_err(|e| TransportError::Credential(e.to_string()))?;
        let decode = |s: &str| B64.decode(s).map_err(|e| TransportError::Credential(e.to_string()));
        Ok(Self { name: file.name, cert_der: decode(&file.cert)?, key_der: decode(&file.key)? })
    }

    /// Write with owner-only permissions where the platform has them.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_private(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(unix)]
pub(crate) fn write_private(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    use std::os::unix::fs::OpenOptionsExt;
    let mut f = std::fs::OpenOptions::new().write(true).create(true).truncate(true).mode(0o600).open(path)?;
    f.write_all(bytes)?;
    Ok(())
}

#[cfg(not(unix))]
pub(crate) fn write_private(path: &Path, bytes: &[u8]) -> Result<()> {
    Ok(std::fs::write(path, bytes)?)
}

/// Identities a node accepts, keyed by certificate fingerprint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PinnedPeers(BTreeMap<String, String>);

impl PinnedPeers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn of<I: IntoIterator<Item = PeerIdentity>>(ids: I) -> Self {
        Self(ids.into_iter().map(|id| (id.fingerprint, id.name)).collect())
    }

    pub fn insert(&mut self, id: PeerIdentity) {
        self.0.insert(id.fingerprint, id.name);
    }

    pub fn lookup(&self, fingerprint: &str) -> Option<PeerIdentity> {
        self.0.get(fingerprint).map(|name| PeerIdentity { name: name.clone(), fingerprint: fingerprint.to_owned() })
    }

    pub fn contains(&self, id: &PeerIdentity) -> bool {
        self.0.contains_key(&id.fingerprint)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn identities(&self) -> Vec<PeerIdentity> {
        self.0.iter().map(|(fp, name)| PeerIdentity { name: name.clone(), fingerprint: fp.clone() }).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.identities()).expect("identities serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ids: Vec<PeerIdentity> = serde_json::from_str(text).map_err(|e| TransportError::Credential(e.to_string()))?;
        Ok(Self::of(ids))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
