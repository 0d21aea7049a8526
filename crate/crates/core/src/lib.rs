//! Shared building blocks for Proof-of-Engagement: the document format and
//! its canonical encoding, digests, signature schemes, salted commitments,
//! tokens and clocks.
//!
//! Every role (client, engagement system, third party, ledger, rewarding
//! system) depends on this crate; everything here is a pure function over
//! value types.

pub mod canonical;
pub mod commitment;
pub mod crypto;
pub mod digest;
pub mod document;
pub mod error;
pub mod rng;
pub mod time;
pub mod token;
pub mod trust;

pub use commitment::{commit_field, verify_disclosure, DisclosurePackage, Opening, Salt};
pub use crypto::{sign, verify, KeyPair, PublicKey, SecretKey, Signature};
pub use digest::{sha256, Digest};
pub use document::{Gps, PoeDocument, PoeDraft, PublicKeyInfo, SignedPoe};
pub use error::{CoreError, Result};
pub use time::{Clock, ManualClock, PoeTime, SystemClock};
pub use token::Pwd;
pub use trust::TrustStore;

/// Canonical bytes of a document.
pub fn canonicalize(doc: &PoeDocument) -> Result<Vec<u8>> {
    doc.canonicalize()
}

/// Hash of a document's canonical bytes; the PoE's stable identifier.
pub fn poe_digest(doc: &PoeDocument) -> Result<Digest> {
    doc.digest()
}
