use std::collections::{BTreeMap, HashSet};

use base64::Engine;
use poe_core::crypto::{verify, ED25519};
use poe_core::document::{EngagementData, ProofType, TimestampInfo};
use poe_core::rng::seeded;
use poe_core::{commit_field, Gps, KeyPair, PoeDocument, PoeDraft, Salt};
use proptest::prelude::*;
use rand::{Rng, RngExt};
use serde_json::{json, Map, Value};

fn arb_json() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i32>().prop_map(|n| json!(n)),
        (-1.0e12f64..1.0e12).prop_map(|f| json!(f)),
        "[a-zA-Z0-9 é\"\\\\\n]{0,12}".prop_map(Value::String),
    ];
    leaf.prop_recursive(3, 32, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            prop::collection::btree_map("[a-z_]{1,6}", inner, 0..5)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

fn doc_from(holder: &KeyPair, record: &Value, gps: Option<Gps>, transferable: bool) -> PoeDocument {
    PoeDraft {
        proof_type: ProofType,
        transferable,
        timestamp: TimestampInfo::utc("2025-05-05 T 12:00".parse().unwrap()),
        gps,
        engagement_data: EngagementData::encode(record),
        sensitive_data: BTreeMap::new(),
        other_data: Map::new(),
    }
    .complete(&holder.public)
}

proptest! {
    #[test]
    fn canonicalization_is_idempotent(v in arb_json()) {
        let once = poe_core::canonical::canonical_value(&v);
        let parsed: Value = serde_json::from_slice(&once).unwrap();
        prop_assert_eq!(poe_core::canonical::canonical_value(&parsed), once);
    }

    #[test]
    fn document_canonical_form_is_stable(
        record in arb_json(),
        lat in -90.0f64..90.0,
        lng in -180.0f64..180.0,
        alt in -500.0f64..9000.0,
        transferable in any::<bool>(),
    ) {
        let holder = KeyPair::generate_with(ED25519, &mut seeded(0)).unwrap();
        let doc = doc_from(&holder, &record, Some(Gps { lat, lng, alt }), transferable);
        let bytes = doc.canonicalize().unwrap();
        let reparsed: PoeDocument = serde_json::from_slice(&bytes).unwrap();
        prop_assert_eq!(reparsed.canonicalize().unwrap(), bytes);
        prop_assert_eq!(reparsed, doc);
    }

    #[test]
    fn ed25519_sign_verify(seed in any::<u64>(), msg in prop::collection::vec(any::<u8>(), 0..256)) {
        let mut rng = seeded(seed);
        let kp = KeyPair::generate_with(ED25519, &mut rng).unwrap();
        let other = KeyPair::generate_with(ED25519, &mut rng).unwrap();
        let sig = kp.sign(&msg).unwrap();
        prop_assert!(verify(&kp.public, &sig, &msg).unwrap());
        prop_assert!(!verify(&other.public, &sig, &msg).unwrap());
    }
}

#[test]
fn rsa_bit_flip_fuzz_never_accepts() {
    let mut rng = seeded(0xB17F);
    let kp = KeyPair::generate(&mut rng).unwrap();
    let msg: Vec<u8> = (0..200).map(|_| rng.random()).collect();
    let sig = kp.sign(&msg).unwrap();
    assert!(verify(&kp.public, &sig, &msg).unwrap());

    let mut accepted = 0;
    for trial in 0..1000 {
        let mut m = msg.clone();
        let mut s = sig.clone();
        if trial % 2 == 0 {
            let i = rng.random_range(0..m.len());
            m[i] ^= 1 << rng.random_range(0..8);
        } else {
            let i = rng.random_range(0..s.0.len());
            s.0[i] ^= 1 << rng.random_range(0..8);
        }
        if verify(&kp.public, &s, &m).unwrap() {
            accepted += 1;
        }
    }
    assert_eq!(accepted, 0);
}

#[test]
fn commitments_do_not_collide_over_a_million_trials() {
    let mut rng = seeded(0xC0117);
    let mut seen = HashSet::with_capacity(1_000_000);
    for _ in 0..1_000_000 {
        let value = format!("{:016x}", rng.next_u64());
        let salt = Salt::random(&mut rng);
        // Only the first 16 bytes are kept; a collision there implies one in the full digest.
        let d = commit_field(&value, &salt);
        let mut key = [0u8; 16];
        key.copy_from_slice(&d.as_bytes()[..16]);
        assert!(seen.insert(key), "collision");
    }
}

#[test]
fn canonical_bytes_never_contain_secret_key_material() {
    let b64 = base64::engine::general_purpose::STANDARD;
    let mut rng = seeded(77);
    for algorithm in [poe_core::crypto::RSA_SHA256, ED25519] {
        let holder = KeyPair::generate_with(algorithm, &mut rng).unwrap();
        let doc = doc_from(&holder, &json!({"student_id": "42"}), None, true);
        let text = String::from_utf8(doc.canonicalize().unwrap()).unwrap();
        let secret = holder.secret.as_bytes();
        assert!(!text.contains(&b64.encode(secret)));
        assert!(!text.contains(&hex::encode(secret)));
        // Any 24-character window of the secret's base64 is absent as well.
        let enc = b64.encode(secret);
        for start in (0..enc.len().saturating_sub(24)).step_by(12) {
            assert!(!text.contains(&enc[start..start + 24]));
        }
    }
}
