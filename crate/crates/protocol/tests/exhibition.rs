mod common;

use std::collections::HashSet;

use common::*;
use poe_core::rng::seeded;
use poe_core::{sha256, Signature, SignedPoe, TrustStore};
use poe_ledger::{Ledger, LedgerApi, PoeRef, TxBody};
use poe_protocol::*;
use serde_json::json;

#[test]
fn valid_poe_gets_a_32_byte_challenge() {
    let mut w = World::new(1, EsPolicy::open(true));
    let (signed, _) = w.issue(json!({"student_id": "42"}));
    let ch = w.tp.verify_and_challenge(&signed).unwrap();
    assert_eq!(ch.ch.0.len(), 32);
    assert_eq!(serde_json::to_value(&ch).unwrap()["ch"].as_str().unwrap().len(), 64);
    assert_eq!(w.tp.open_sessions(), 1);
}

#[test]
fn flipped_signature_byte_is_poe_invalid() {
    let mut w = World::new(2, EsPolicy::open(true));
    let (mut signed, _) = w.issue(json!({"student_id": "42"}));
    signed.signature.0[7] ^= 0x80;
    assert!(matches!(w.tp.verify_and_challenge(&signed), Err(ProtocolError::PoeInvalid)));
    assert_eq!(w.tp.open_sessions(), 0);
}

#[test]
fn unknown_issuer() {
    let mut w = World::new(3, EsPolicy::open(true));
    let (signed, _) = w.issue(json!({"student_id": "42"}));
    let stranger = ThirdParty::new(TrustStore::new(), w.clock.clone(), Default::default());
    assert!(matches!(stranger.verify_and_challenge(&signed), Err(ProtocolError::UntrustedIssuer)));
}

fn with_expiry(w: &mut World, date: &str) -> SignedPoe {
    let (signed, _) = w.issue(json!({"student_id": "42"}));
    let mut doc = signed.document;
    doc.other_data.insert(
        "expiration_date".into(),
        json!({"date_format": "UTC", "date": date}),
    );
    SignedPoe::sign(doc, &w.es_keys).unwrap()
}

#[test]
fn expiration_dates() {
    let mut w = World::new(4, EsPolicy::open(true));
    // The clock reads 2025; a 2035 expiration is still in the future.
    let future = with_expiry(&mut w, "2035-10-30 T 10:45");
    w.tp.verify_and_challenge(&future).unwrap();
    let past = with_expiry(&mut w, "2005-10-30 T 10:45");
    assert!(matches!(w.tp.verify_and_challenge(&past), Err(ProtocolError::PoeExpired)));
    let now = with_expiry(&mut w, "2025-06-01 T 18:00");
    assert!(matches!(w.tp.verify_and_challenge(&now), Err(ProtocolError::PoeExpired)));
}

#[test]
fn honest_response_accepts_once() {
    let mut w = World::new(5, EsPolicy::open(true));
    let (signed, keys) = w.issue(json!({"student_id": "42"}));
    let ch = w.tp.verify_and_challenge(&signed).unwrap();
    let z = answer(&ch, &keys).unwrap();
    assert!(w.tp.verify_response(&z).unwrap());
    // Single use: the session is gone.
    assert!(matches!(w.tp.verify_response(&z), Err(ProtocolError::Session(_))));
}

#[test]
fn unrelated_key_is_rejected() {
    let mut w = World::new(6, EsPolicy::open(true));
    let (signed, _) = w.issue(json!({"student_id": "42"}));
    let impostor = w.client_keys();
    let ch = w.tp.verify_and_challenge(&signed).unwrap();
    assert!(!w.tp.verify_response(&answer(&ch, &impostor).unwrap()).unwrap());
    assert_eq!(w.tp.open_sessions(), 0);
}

#[test]
fn replayed_response_fails_on_a_new_session() {
    let mut w = World::new(7, EsPolicy::open(true));
    let (signed, keys) = w.issue(json!({"student_id": "42"}));
    let ch1 = w.tp.verify_and_challenge(&signed).unwrap();
    let z1 = answer(&ch1, &keys).unwrap();
    assert!(w.tp.verify_response(&z1).unwrap());
    let ch2 = w.tp.verify_and_challenge(&signed).unwrap();
    assert_ne!(ch1.ch, ch2.ch);
    let replay = ChallengeResponse { session_id: ch2.session_id, z: z1.z };
    assert!(!w.tp.verify_response(&replay).unwrap());
}

#[test]
fn unknown_session() {
    let w = World::new(8, EsPolicy::open(true));
    let bogus = ChallengeResponse { session_id: "nope".into(), z: Signature(vec![0; 64]) };
    assert!(matches!(w.tp.verify_response(&bogus), Err(ProtocolError::Session(_))));
}

#[test]
fn session_ttl_is_120_seconds() {
    let mut w = World::new(9, EsPolicy::open(true));
    let (signed, keys) = w.issue(json!({"student_id": "42"}));
    let ch = w.tp.verify_and_challenge(&signed).unwrap();
    w.advance(120);
    assert!(w.tp.verify_response(&answer(&ch, &keys).unwrap()).unwrap());

    let ch = w.tp.verify_and_challenge(&signed).unwrap();
    w.advance(121);
    assert!(matches!(w.tp.verify_response(&answer(&ch, &keys).unwrap()), Err(ProtocolError::Session(_))));

    w.tp.verify_and_challenge(&signed).unwrap();
    w.advance(121);
    assert_eq!(w.tp.sweep(), 1);
}

#[test]
fn strict_mode_binds_the_poe() {
    let mut w = World::strict(10, EsPolicy::open(true));
    let (a, keys) = w.issue(json!({"student_id": "1"}));
    // A second PoE carrying the same holder key.
    let mut doc_b = a.document.clone();
    doc_b.engagement_data = poe_core::document::EngagementData::encode(&json!({"student_id": "2"}));
    let b = SignedPoe::sign(doc_b, &w.es_keys).unwrap();

    let ch = w.tp.verify_and_challenge(&a).unwrap();
    assert!(ch.bind_poe);
    assert!(!w.tp.verify_response(&answer(&ch, &keys).unwrap()).unwrap());
    let ch = w.tp.verify_and_challenge(&a).unwrap();
    assert!(w.tp.verify_response(&answer_for(&ch, &keys, &a.document).unwrap()).unwrap());
    // A response computed for PoE b does not open a session for PoE a.
    let ch = w.tp.verify_and_challenge(&a).unwrap();
    assert!(!w.tp.verify_response(&answer_for(&ch, &keys, &b.document).unwrap()).unwrap());
}

#[test]
fn default_mode_signs_only_the_challenge() {
    let mut w = World::new(11, EsPolicy::open(true));
    let (a, keys) = w.issue(json!({"student_id": "1"}));
    let ch = w.tp.verify_and_challenge(&a).unwrap();
    assert!(!ch.bind_poe);
    assert!(!serde_json::to_string(&ch).unwrap().contains("bind_poe"));
    assert!(w.tp.verify_response(&answer_for(&ch, &keys, &a.document).unwrap()).unwrap());
}

#[test]
fn onchain_exhibition_follows_the_owner() {
    let mut w = World::new(12, EsPolicy::open(true));
    let (r, owner) = w.mint(json!({"visit": "museum"}));
    let (ch, minted) = w.tp.exhibit_onchain(&r, &*w.ledger).unwrap();
    assert_eq!(minted.document.holder_key().unwrap(), owner.public);
    assert!(w.tp.verify_response(&answer(&ch, &owner).unwrap()).unwrap());

    let rec = w.client_keys();
    let r2 = transfer_poe(&owner, &r, &rec.public, &*w.ledger).unwrap();
    for reference in [&r, &r2] {
        let (ch, _) = w.tp.exhibit_onchain(reference, &*w.ledger).unwrap();
        assert!(!w.tp.verify_response(&answer(&ch, &owner).unwrap()).unwrap());
        let (ch, _) = w.tp.exhibit_onchain(reference, &*w.ledger).unwrap();
        assert!(w.tp.verify_response(&answer(&ch, &rec).unwrap()).unwrap());
    }
}

#[test]
fn fabricated_reference() {
    let w = World::new(13, EsPolicy::open(true));
    let fake = PoeRef::new(CHAIN, sha256(b"no such tx"));
    assert!(matches!(w.tp.exhibit_onchain(&fake, &*w.ledger), Err(ProtocolError::RefNotFound(_))));
    let other_chain = PoeRef::new("elsewhere", sha256(b"x"));
    assert!(matches!(w.tp.exhibit_onchain(&other_chain, &*w.ledger), Err(ProtocolError::RefNotFound(_))));
}

#[test]
fn broken_chain() {
    let mut w = World::new(14, EsPolicy::open(true));
    let (r, owner) = w.mint(json!({"visit": "museum"}));
    let rec = w.client_keys();
    transfer_poe(&owner, &r, &rec.public, &*w.ledger).unwrap();
    let mut txs = w.ledger.transactions();
    if let TxBody::Transfer { payload, .. } = &mut txs[1].body {
        *payload = w.es_keys.public.clone();
    }
    let tampered = Ledger::load_unverified(CHAIN, TrustStore::with_keys([w.es_keys.public.clone()]), txs);
    assert!(matches!(w.tp.exhibit_onchain(&r, &tampered), Err(ProtocolError::ChainInvalid(_))));
}

#[test]
fn session_flow_with_disclosure() {
    let w = World::new(15, EsPolicy::open(true));
    let data = obj(seminar_record());
    let mut policy = plain_policy(&data);
    policy.insert("email".into(), Disclosure::Committed);
    policy.insert("name".into(), Disclosure::Committed);
    let mut client = ClientEngagement::new(data, policy, IssueMode::Central, seeded(16)).algorithm(poe_core::crypto::ED25519);
    let out = run_direct(&mut client, &mut EsSession::new(w.es.clone()), &mut Vec::new()).unwrap();
    let signed = out.poe.clone().unwrap();

    let disclose = out.disclosure.select(["email"]).unwrap();
    let mut ex = ClientExhibition::new(ExhibitTarget::Poe(signed.clone()), out.keys.clone(), signed.document.clone(), "x1")
        .disclose(disclose.clone());
    let mut transcript = Vec::new();
    let verdict = run_direct(&mut ex, &mut TpSession::new(w.tp.clone()), &mut transcript).unwrap();
    assert!(verdict.accept);
    assert_eq!(verdict.disclosed.get("email"), Some(&true));
    let kinds: Vec<_> = transcript.iter().map(|e| e.kind).collect();
    assert_eq!(kinds, [MsgType::Exhibit, MsgType::Challenge, MsgType::Response, MsgType::Verdict]);
    // Only the chosen field left the wallet.
    let wire = serde_json::to_string(&transcript).unwrap();
    assert!(wire.contains("alice.rossi@example.org"));
    assert!(!wire.contains("\"Alice\""));

    let mut wrong = disclose;
    wrong.entries.get_mut("email").unwrap().value = "mallory@example.org".into();
    let mut ex = ClientExhibition::new(ExhibitTarget::Poe(signed.clone()), out.keys, signed.document, "x2").disclose(wrong);
    let verdict = run_direct(&mut ex, &mut TpSession::new(w.tp.clone()), &mut Vec::new()).unwrap();
    assert!(!verdict.accept);
    assert_eq!(verdict.reason.as_deref(), Some("DisclosureMismatch"));
}

#[test]
fn tampered_poe_gets_a_reject_verdict() {
    let mut w = World::new(17, EsPolicy::open(true));
    let (mut signed, keys) = w.issue(json!({"student_id": "42"}));
    signed.document.transferable = false;
    let mut ex = ClientExhibition::new(ExhibitTarget::Poe(signed.clone()), keys, signed.document, "t");
    let mut transcript = Vec::new();
    let verdict = run_direct(&mut ex, &mut TpSession::new(w.tp.clone()), &mut transcript).unwrap();
    assert!(!verdict.accept);
    assert_eq!(verdict.reason.as_deref(), Some("PoeInvalid"));
    assert_eq!(transcript.len(), 2);
}

#[test]
fn challenges_are_fresh_over_ten_thousand_sessions() {
    let mut w = World::new(18, EsPolicy::open(true));
    let (signed, _) = w.issue(json!({"student_id": "42"}));
    let mut seen = HashSet::new();
    let mut ids = HashSet::new();
    for _ in 0..10_000 {
        let ch = w.tp.verify_and_challenge(&signed).unwrap();
        assert!(seen.insert(ch.ch.0));
        assert!(ids.insert(ch.session_id));
    }
}

#[test]
fn ledger_exhibition_over_sessions() {
    let mut w = World::new(19, EsPolicy::open(true));
    let (r, owner) = w.mint(json!({"visit": "museum"}));
    let doc = w.ledger.minted_poe(&r).unwrap().document;
    let mut ex = ClientExhibition::new(ExhibitTarget::Ref(r), owner, doc, "l1");
    assert!(run_direct(&mut ex, &mut TpSession::new(w.tp.clone()), &mut Vec::new()).unwrap().accept);
}
