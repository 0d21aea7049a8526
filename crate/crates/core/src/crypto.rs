//! Signature schemes behind a registry keyed by the algorithm string that
//! documents carry in `public_key.algorithm`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::{CryptoRng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rsa::pkcs1v15;
use rsa::pkcs8::{DecodePrivateKey, DecodePublicKey, EncodePrivateKey, EncodePublicKey};
use rsa::signature::{SignatureEncoding, Signer, Verifier};
use rsa::{RsaPrivateKey, RsaPublicKey};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::Sha256;

use crate::digest::sha256;
use crate::error::{CoreError, Result};

/// RSASSA-PKCS1-v1_5 over SHA-256, keys as DER (PKCS#8 secret, SPKI public).
pub const RSA_SHA256: &str = "SHA-256/RSA";
/// Ed25519 with raw 32-byte keys.
pub const ED25519: &str = "Ed25519";
pub const DEFAULT_ALGORITHM: &str = RSA_SHA256;
pub const RSA_KEY_BITS: usize = 2048;

pub trait SignatureScheme: Send + Sync {
    fn name(&self) -> &str;

    /// Derive a fresh key pair from 32 bytes of seed material.
    /// Returns `(secret, public)` encodings.
    fn generate(&self, seed: [u8; 32]) -> Result<(Vec<u8>, Vec<u8>)>;

    fn sign(&self, secret: &[u8], msg: &[u8]) -> Result<Vec<u8>>;

    /// `Ok(false)` for a well-formed key and a non-verifying signature.
    fn verify(&self, public: &[u8], sig: &[u8], msg: &[u8]) -> Result<bool>;

    fn check_public_key(&self, public: &[u8]) -> Result<()>;
}

struct RsaSha256 {
    bits: usize,
}

impl SignatureScheme for RsaSha256 {
    fn name(&self) -> &str {
        RSA_SHA256
    }

    fn generate(&self, seed: [u8; 32]) -> Result<(Vec<u8>, Vec<u8>)> {
        let mut rng = ChaCha20Rng::from_seed(seed);
        let secret = RsaPrivateKey::new(&mut rng, self.bits).map_err(|e| CoreError::Key(e.to_string()))?;
        let public = RsaPublicKey::from(&secret);
        let secret_der = secret.to_pkcs8_der().map_err(|e| CoreError::Key(e.to_string()))?;
        let public_der = public.to_public_key_der().map_err(|e| CoreError::Key(e.to_string()))?;
        Ok((secret_der.as_bytes().to_vec(), public_der.as_bytes().to_vec()))
    }

    fn sign(&self, secret: &[u8], msg: &[u8]) -> Result<Vec<u8>> {
        let key = RsaPrivateKey::from_pkcs8_der(secret).map_err(|e| CoreError::Key(e.to_string()))?;
        let signer = pkcs1v15::SigningKey::<Sha256>::new(key);
        let sig = signer.try_sign(msg).map_err(|e| CoreError::Key(e.to_string()))?;
        Ok(sig.to_vec())
    }

    fn verify(&self, public: &[u8], sig: &[u8], msg: &[u8]) -> Result<bool> {
        let key = RsaPublicKey::from_public_key_der(public).map_err(|e| CoreError::Key(e.to_string()))?;
        let verifier = pkcs1v15::VerifyingKey::<Sha256>::new(key);
        let Ok(sig) = pkcs1v15::Signature::try_from(sig) else {
            return Ok(false);
        };
        Ok(verifier.verify(msg, &sig).is_ok())
    }

    fn check_public_key(&self, public: &[u8]) -> Result<()> {
        RsaPublicKey::from_public_key_der(public)
            .map(|_| ())
            .map_err(|e| CoreError::Key(e.to_string()))
    }
}

struct Ed25519;

impl Ed25519 {
    fn public_key(public: &[u8]) -> Result<ed25519_dalek::VerifyingKey> {
        let bytes: [u8; 32] = public
            .try_into()
            .map_err(|_| CoreError::Key(format!("ed25519 public key must be 32 bytes, got {}", public.len())))?;
        ed25519_dalek::VerifyingKey::from_bytes(&bytes).map_err(|e| CoreError::Key(e.to_string()))
    }
}

impl SignatureScheme for Ed25519 {
    fn name(&self) -> &str {
        ED25519
    }

    fn generate(&self, seed: [u8; 32]) -> Result<(Vec<u8>, Vec<u8>)> {
        let key = ed25519_dalek::SigningKey::from_bytes(&seed);
        Ok((seed.to_vec(), key.verifying_key().to_bytes().to_vec()))
    }

    fn sign(&self, secret: &[u8], msg: &[u8]) -> Result<Vec<u8>> {
        use ed25519_dalek::Signer as _;
        let seed: [u8; 32] = secret
            .try_into()
            .map_err(|_| CoreError::Key("ed25519 secret key must be 32 bytes".into()))?;
        let key = ed25519_dalek::SigningKey::from_bytes(&seed);
        Ok(key.sign(msg).to_bytes().to_vec())
    }

    fn verify(&self, public: &[u8], sig: &[u8], msg: &[u8]) -> Result<bool> {
        use ed25519_dalek::Verifier as _;
        let key = Self::public_key(public)?;
        let Ok(sig) = ed25519_dalek::Signature::from_slice(sig) else {
            return Ok(false);
        };
        Ok(key.verify(msg, &sig).is_ok())
    }

    fn check_public_key(&self, public: &[u8]) -> Result<()> {
        Self::public_key(public).map(|_| ())
    }
}

/// Maps algorithm identifiers to schemes.
#[derive(Clone)]
pub struct Registry {
    schemes: BTreeMap<String, Arc<dyn SignatureScheme>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { schemes: BTreeMap::new() }
    }

    /// RSA-2048 under `SHA-256/RSA` plus Ed25519.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(RsaSha256 { bits: RSA_KEY_BITS }));
        r.register(Arc::new(Ed25519));
        r
    }

    pub fn register(&mut self, scheme: Arc<dyn SignatureScheme>) {
        self.schemes.insert(scheme.name().to_owned(), scheme);
    }

    pub fn get(&self, algorithm: &str) -> Result<&dyn SignatureScheme> {
        self.schemes
            .get(algorithm)
            .map(|s| s.as_ref())
            .ok_or_else(|| CoreError::Algorithm(algorithm.to_owned()))
    }

    pub fn algorithms(&self) -> impl Iterator<Item = &str> {
        self.schemes.keys().map(String::as_str)
    }
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.schemes.keys()).finish()
    }
}

/// Process-wide registry used by the free functions in this module.
pub fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(Registry::standard)
}

/// Verification key tagged with its algorithm.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PublicKey {
    pub algorithm: String,
    pub key: Vec<u8>,
}

impl PublicKey {
    pub fn new(algorithm: impl Into<String>, key: Vec<u8>) -> Self {
        Self { algorithm: algorithm.into(), key }
    }

    /// Hex SHA-256 of the encoded key; stable identifier for trust stores.
    pub fn key_id(&self) -> String {
        sha256(&self.key).to_hex()
    }

    pub fn to_base64(&self) -> String {
        BASE64.encode(&self.key)
    }

    pub fn from_base64(algorithm: &str, b64: &str) -> Result<Self> {
        let key = BASE64.decode(b64.trim()).map_err(|e| CoreError::Key(e.to_string()))?;
        Ok(Self::new(algorithm, key))
    }

    /// Fails on unknown algorithms or undecodable key material.
    pub fn validate(&self) -> Result<()> {
        registry().get(&self.algorithm)?.check_public_key(&self.key)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({}, {})", self.algorithm, &self.key_id()[..16])
    }
}

#[derive(Serialize, Deserialize)]
struct PublicKeyRepr {
    algorithm: String,
    verification_key: String,
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PublicKeyRepr { algorithm: self.algorithm.clone(), verification_key: self.to_base64() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PublicKeyRepr::deserialize(deserializer)?;
        PublicKey::from_base64(&repr.algorithm, &repr.verification_key).map_err(serde::de::Error::custom)
    }
}

/// Signing key bytes. Never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    pub algorithm: String,
    bytes: Vec<u8>,
}

impl SecretKey {
    pub fn new(algorithm: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self { algorithm: algorithm.into(), bytes }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({}, <redacted>)", self.algorithm)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub secret: SecretKey,
}

impl KeyPair {
    /// Generate with the default algorithm.
    pub fn generate<R: CryptoRng + ?Sized>(rng: &mut R) -> Result<Self> {
        Self::generate_with(DEFAULT_ALGORITHM, rng)
    }

    pub fn generate_with<R: CryptoRng + ?Sized>(algorithm: &str, rng: &mut R) -> Result<Self> {
        let scheme = registry().get(algorithm)?;
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let (secret, public) = scheme.generate(seed)?;
        Ok(Self { public: PublicKey::new(algorithm, public), secret: SecretKey::new(algorithm, secret) })
    }

    pub fn algorithm(&self) -> &str {
        &self.public.algorithm
    }

    pub fn sign(&self, msg: &[u8]) -> Result<Signature> {
        sign(&self.secret, msg)
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

#[derive(Serialize, Deserialize)]
struct KeyPairRepr {
    algorithm: String,
    public_key: String,
    secret_key: String,
}

impl Serialize for KeyPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        KeyPairRepr {
            algorithm: self.public.algorithm.clone(),
            public_key: self.public.to_base64(),
            secret_key: BASE64.encode(self.secret.as_bytes()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KeyPair {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = KeyPairRepr::deserialize(deserializer)?;
        let public = PublicKey::from_base64(&repr.algorithm, &repr.public_key).map_err(serde::de::Error::custom)?;
        let secret = BASE64.decode(repr.secret_key.trim()).map_err(serde::de::Error::custom)?;
        Ok(Self { public, secret: SecretKey::new(repr.algorithm, secret) })
    }
}

/// Raw signature bytes, base64 on the wire.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Signature(pub Vec<u8>);

impl Signature {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_base64(&self) -> String {
        BASE64.encode(&self.0)
    }

    pub fn from_base64(s: &str) -> Result<Self> {
        BASE64.decode(s.trim()).map(Self).map_err(|e| CoreError::Encoding(e.to_string()))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({} bytes)", self.0.len())
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_base64())
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Signature::from_base64(&s).map_err(serde::de::Error::custom)
    }
}

pub fn sign(secret: &SecretKey, msg: &[u8]) -> Result<Signature> {
    registry().get(&secret.algorithm)?.sign(secret.as_bytes(), msg).map(Signature)
}

/// `Ok(true)` accept, `Ok(false)` reject. Errors only for unknown algorithms
/// or malformed keys.
pub fn verify(public: &PublicKey, sig: &Signature, msg: &[u8]) -> Result<bool> {
    registry().get(&public.algorithm)?.verify(&public.key, sig.as_bytes(), msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn rsa_round_trip_and_soundness() {
        let mut rng = seeded(1);
        let kp = KeyPair::generate(&mut rng).unwrap();
        let other = KeyPair::generate(&mut rng).unwrap();
        let sig = kp.sign(b"hello").unwrap();
        assert_eq!(sig.as_bytes().len(), RSA_KEY_BITS / 8);
        assert!(verify(&kp.public, &sig, b"hello").unwrap());
        assert!(!verify(&other.public, &sig, b"hello").unwrap());
        assert!(!verify(&kp.public, &sig, b"hellp").unwrap());
        kp.public.validate().unwrap();
    }

    #[test]
    fn ed25519_round_trip() {
        let mut rng = seeded(2);
        let kp = KeyPair::generate_with(ED25519, &mut rng).unwrap();
        let sig = kp.sign(b"m").unwrap();
        assert!(verify(&kp.public, &sig, b"m").unwrap());
        assert!(!verify(&kp.public, &sig, b"n").unwrap());
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = KeyPair::generate_with(ED25519, &mut seeded(9)).unwrap();
        let b = KeyPair::generate_with(ED25519, &mut seeded(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_algorithm() {
        let pk = PublicKey::new("ROT13/DSA", vec![1, 2, 3]);
        assert!(matches!(verify(&pk, &Signature(vec![0]), b"m"), Err(CoreError::Algorithm(a)) if a == "ROT13/DSA"));
        assert!(matches!(KeyPair::generate_with("nope", &mut seeded(0)), Err(CoreError::Algorithm(_))));
    }

    #[test]
    fn malformed_public_key() {
        let pk = PublicKey::new(RSA_SHA256, vec![0x30, 0x00]);
        assert!(matches!(pk.validate(), Err(CoreError::Key(_))));
        assert!(matches!(verify(&pk, &Signature(vec![0; 256]), b"m"), Err(CoreError::Key(_))));
    }

    #[test]
    fn truncated_signature_rejects() {
        let kp = KeyPair::generate_with(ED25519, &mut seeded(3)).unwrap();
        let mut sig = kp.sign(b"m").unwrap();
        sig.0.pop();
        assert!(!verify(&kp.public, &sig, b"m").unwrap());
    }

    #[test]
    fn keypair_serde_round_trip_and_debug_redacts() {
        let kp = KeyPair::generate_with(ED25519, &mut seeded(4)).unwrap();
        let text = serde_json::to_string(&kp).unwrap();
        let back: KeyPair = serde_json::from_str(&text).unwrap();
        assert_eq!(back, kp);
        assert!(!format!("{kp:?}").contains(&BASE64.encode(kp.secret.as_bytes())));
    }
}
