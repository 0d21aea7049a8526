//! Golden-file checks for the reference example document.
//!
//! Expected bytes and digests were produced with Python's `json` and
//! `hashlib` modules, independently of this crate.

use poe_core::{canonicalize, commit_field, poe_digest, PoeDocument, Salt};

const EXAMPLE_PRETTY: &str = include_str!("fixtures/example_poe.json");
const EXAMPLE_CANONICAL: &str = include_str!("fixtures/example_poe.canonical.json");
const EXAMPLE_DIGEST: &str = "61edad11799b029b933607a77160e2d817a23702e37c80c26f6ac34973d8916a";
const EXAMPLE_NON_TRANSFERABLE_DIGEST: &str = "c7263b44ebef8344e713fb227c19c47a809c154b5769ef870cd955b17c1db20c";

#[test]
fn canonical_bytes_match_oracle() {
    let doc = PoeDocument::from_json(EXAMPLE_PRETTY).unwrap();
    assert_eq!(String::from_utf8(canonicalize(&doc).unwrap()).unwrap(), EXAMPLE_CANONICAL);
}

#[test]
fn digest_matches_oracle() {
    let doc = PoeDocument::from_json(EXAMPLE_PRETTY).unwrap();
    assert_eq!(poe_digest(&doc).unwrap().to_hex(), EXAMPLE_DIGEST);
}

#[test]
fn flipping_transferable_changes_digest() {
    let mut doc = PoeDocument::from_json(EXAMPLE_PRETTY).unwrap();
    doc.transferable = false;
    assert_eq!(poe_digest(&doc).unwrap().to_hex(), EXAMPLE_NON_TRANSFERABLE_DIGEST);
}

#[test]
fn parse_canonicalize_parse_is_byte_stable() {
    let doc = PoeDocument::from_json(EXAMPLE_PRETTY).unwrap();
    let first = canonicalize(&doc).unwrap();
    let reparsed: PoeDocument = serde_json::from_slice(&first).unwrap();
    assert_eq!(reparsed, doc);
    assert_eq!(canonicalize(&reparsed).unwrap(), first);
}

#[test]
fn pretty_form_round_trips_byte_identically() {
    let doc = PoeDocument::from_json(EXAMPLE_PRETTY).unwrap();
    assert_eq!(doc.to_pretty().unwrap(), EXAMPLE_PRETTY);
}

#[test]
fn sensitive_digests_are_zero_salt_commitments() {
    let doc = PoeDocument::from_json(EXAMPLE_PRETTY).unwrap();
    assert_eq!(doc.sensitive_data["data_1"], commit_field("value_1", &Salt::ZERO).to_hex());
    assert_eq!(doc.sensitive_data["data_2"], commit_field("value_2", &Salt::ZERO).to_hex());
}

#[test]
fn example_expiration_is_in_the_future_in_2025() {
    let doc = PoeDocument::from_json(EXAMPLE_PRETTY).unwrap();
    let now: poe_core::PoeTime = "2025-10-30 T 10:45".parse().unwrap();
    assert!(!doc.is_expired_at(now.instant()).unwrap());
}

#[test]
fn truncated_example_key_is_not_a_valid_key() {
    // The example key text is elided, so it cannot decode to a real key.
    let doc = PoeDocument::from_json(EXAMPLE_PRETTY).unwrap();
    assert!(doc.validate().is_err());
}
