#![allow(dead_code)]

use std::collections::BTreeMap;

use poe_core::crypto::ED25519;
use poe_core::document::{EngagementData, ProofType, TimestampInfo};
use poe_core::rng::PoeRng;
use poe_core::{KeyPair, PoeDraft, SignedPoe, TrustStore};
use poe_ledger::{Ledger, LedgerTransaction, TxBody};
use serde_json::{json, Map};

pub const CHAIN: &str = "test-chain";

pub fn key(rng: &mut PoeRng) -> KeyPair {
    KeyPair::generate_with(ED25519, rng).unwrap()
}

pub fn signed_poe(issuer: &KeyPair, holder: &KeyPair, transferable: bool, tag: u64) -> SignedPoe {
    let draft = PoeDraft {
        proof_type: ProofType,
        transferable,
        timestamp: TimestampInfo::utc("2025-06-01 T 18:00".parse().unwrap()),
        gps: None,
        engagement_data: EngagementData::encode(&json!({"visit": tag})),
        sensitive_data: BTreeMap::new(),
        other_data: Map::new(),
    };
    SignedPoe::sign(draft.complete(&holder.public), issuer).unwrap()
}

pub fn ledger_for(issuer: &KeyPair) -> Ledger {
    Ledger::new(CHAIN, TrustStore::with_keys([issuer.public.clone()]))
}

pub fn mint(ledger: &Ledger, issuer: &KeyPair, holder: &KeyPair, transferable: bool, tag: u64) -> LedgerTransaction {
    let poe = signed_poe(issuer, holder, transferable, tag);
    let sub = TxBody::mint(poe, &issuer.public).unwrap().sign(issuer).unwrap();
    ledger.append(sub).unwrap()
}

pub fn transfer(ledger: &Ledger, prev: &LedgerTransaction, owner: &KeyPair, to: &KeyPair) -> poe_ledger::Result<LedgerTransaction> {
    let body = TxBody::transfer(*prev.asset_id(), prev.tx_id, to.public.clone(), &owner.public);
    ledger.append(body.sign(owner).unwrap())
}
