//! Randomized checks of the protocol-level invariants.

mod common;

use common::*;
use poe_core::rng::seeded;
use poe_core::{KeyPair, Pwd, Signature};
use poe_ledger::LedgerApi;
use poe_protocol::*;
use proptest::prelude::*;
use rand::Rng;
use serde_json::{Map, Value};

fn record() -> impl Strategy<Value = Map<String, Value>> {
    prop::collection::btree_map("[a-z]{2,8}", "[ -~]{0,16}", 1..6)
        .prop_map(|m| m.into_iter().map(|(k, v)| (k, Value::String(v))).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The same draft and key give byte-identical documents whether the
    /// PoE is issued directly or minted on the ledger.
    #[test]
    fn centralized_and_ledger_documents_match(data in record(), seed in any::<u64>()) {
        let central = World::new(seed, EsPolicy::open(true));
        let ledger_side = World::new(seed, EsPolicy::open(true));
        let mut rng = seeded(seed);
        let (req, _) = begin_engagement(&data, &plain_policy(&data), &mut rng).unwrap();
        let draft = central.es.build_draft(&req).unwrap();
        prop_assert_eq!(&ledger_side.es.build_draft(&req).unwrap(), &draft);

        let keys = KeyPair::generate_with(poe_core::crypto::ED25519, &mut rng).unwrap();
        let pwd = Pwd::generate(&mut rng);
        let signed = central.es.issue_poe(draft.clone(), &keys.public, pwd.digest()).unwrap();
        let r = ledger_side.es.issue_poe_onchain(draft, &keys.public, pwd.digest(), &*ledger_side.ledger).unwrap();
        let minted = ledger_side.ledger.minted_poe(&r).unwrap();
        prop_assert_eq!(minted.document.canonicalize().unwrap(), signed.document.canonicalize().unwrap());

        let ch = central.tp.verify_and_challenge(&signed).unwrap();
        let direct = central.tp.verify_response(&answer(&ch, &keys).unwrap()).unwrap();
        let (ch, _) = ledger_side.tp.exhibit_onchain(&r, &*ledger_side.ledger).unwrap();
        let onchain = ledger_side.tp.verify_response(&answer(&ch, &keys).unwrap()).unwrap();
        prop_assert!(direct && onchain);
    }

    /// Transfer chains: the head is always the last valid recipient and
    /// every earlier owner fails the challenge.
    #[test]
    fn transfer_chains(hops in 0usize..=10, bogus in prop::collection::vec(any::<bool>(), 10), seed in any::<u64>()) {
        let mut w = World::new(seed, EsPolicy::open(true));
        let (r, first) = w.mint(serde_json::json!({"visit": "museum"}));
        let asset = *w.ledger.resolve(&r).unwrap().asset_id();
        let mut owners = vec![first];
        for &outsider_first in bogus.iter().take(hops) {
            let rec = w.client_keys();
            if outsider_first {
                // A non-owner's attempt changes nothing.
                let outsider = w.client_keys();
                prop_assert!(matches!(transfer_poe(&outsider, &r, &rec.public, &*w.ledger), Err(ProtocolError::NotOwner)));
            }
            transfer_poe(owners.last().unwrap(), &r, &rec.public, &*w.ledger).unwrap();
            owners.push(rec);
        }
        prop_assert_eq!(w.ledger.head_owner(&asset).unwrap(), owners.last().unwrap().public.clone());
        let (stale, current) = owners.split_at(owners.len() - 1);
        for old in stale {
            let (ch, _) = w.tp.exhibit_onchain(&r, &*w.ledger).unwrap();
            prop_assert!(!w.tp.verify_response(&answer(&ch, old).unwrap()).unwrap());
        }
        let (ch, _) = w.tp.exhibit_onchain(&r, &*w.ledger).unwrap();
        prop_assert!(w.tp.verify_response(&answer(&ch, &current[0]).unwrap()).unwrap());
    }
}

#[test]
fn random_signatures_never_pass() {
    let mut w = World::new(99, EsPolicy::open(true));
    let (signed, _) = w.issue(serde_json::json!({"student_id": "42"}));
    let mut rng = seeded(100);
    for _ in 0..200 {
        let ch = w.tp.verify_and_challenge(&signed).unwrap();
        let mut z = vec![0u8; 64];
        rng.fill_bytes(&mut z);
        let resp = ChallengeResponse { session_id: ch.session_id, z: Signature(z) };
        assert!(!w.tp.verify_response(&resp).unwrap());
    }
}
