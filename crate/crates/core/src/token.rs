//! 128-bit random tokens rendered as unpadded RFC 4648 base32.

use std::fmt;

use data_encoding::BASE32_NOPAD;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::digest::{sha256, Digest};

pub const TOKEN_BYTES: usize = 16;
/// ceil(128 / 5)
pub const TOKEN_CHARS: usize = 26;

pub fn random_token<R: Rng + ?Sized>(rng: &mut R) -> String {
    let mut raw = [0u8; TOKEN_BYTES];
    rng.fill_bytes(&mut raw);
    BASE32_NOPAD.encode(&raw)
}

pub fn token_from_bytes(raw: [u8; TOKEN_BYTES]) -> String {
    BASE32_NOPAD.encode(&raw)
}

/// True when `s` decodes to exactly 16 bytes.
pub fn is_token(s: &str) -> bool {
    s.len() == TOKEN_CHARS
        && BASE32_NOPAD
            .decode(s.as_bytes())
            .map(|b| b.len() == TOKEN_BYTES)
            .unwrap_or(false)
}

/// One-time password chosen by the client at PoE generation; its digest
/// later binds a reward claim to the PoE holder.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pwd(String);

impl Pwd {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(random_token(rng))
    }

    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// H(Pwd)
    pub fn digest(&self) -> Digest {
        sha256(self.0.as_bytes())
    }
}

impl fmt::Debug for Pwd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Pwd(<redacted>)")
    }
}
