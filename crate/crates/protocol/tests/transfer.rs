mod common;

use common::*;
use poe_ledger::LedgerApi;
use poe_protocol::*;
use serde_json::json;

#[test]
fn owner_transfers_to_recipient() {
    let mut w = World::new(1, EsPolicy::open(true));
    let (r, owner) = w.mint(json!({"visit": "museum"}));
    let rec = w.client_keys();
    let r2 = transfer_poe(&owner, &r, &rec.public, &*w.ledger).unwrap();
    let asset = *w.ledger.resolve(&r).unwrap().asset_id();
    assert_eq!(w.ledger.head_owner(&asset).unwrap(), rec.public);
    assert_eq!(*w.ledger.resolve(&r2).unwrap().asset_id(), asset);
}

#[test]
fn non_owner_cannot_transfer() {
    let mut w = World::new(2, EsPolicy::open(true));
    let (r, owner) = w.mint(json!({"visit": "museum"}));
    let thief = w.client_keys();
    assert!(matches!(transfer_poe(&thief, &r, &thief.public, &*w.ledger), Err(ProtocolError::NotOwner)));
    // Nor can a former owner, even through the original reference.
    let rec = w.client_keys();
    transfer_poe(&owner, &r, &rec.public, &*w.ledger).unwrap();
    assert!(matches!(transfer_poe(&owner, &r, &owner.public, &*w.ledger), Err(ProtocolError::NotOwner)));
}

#[test]
fn non_transferable_poe_stays_put() {
    let mut w = World::new(3, EsPolicy::open(false));
    let (r, owner) = w.mint(json!({"student_id": "42"}));
    let rec = w.client_keys();
    assert!(matches!(transfer_poe(&owner, &r, &rec.public, &*w.ledger), Err(ProtocolError::NotTransferable)));
}

#[test]
fn transfer_over_sessions() {
    let mut w = World::new(4, EsPolicy::open(true));
    let (r, owner) = w.mint(json!({"visit": "museum"}));
    let rec = w.client_keys();
    let mut recipient = RecipientTransfer::new(rec.public.clone(), "t1");
    let mut owner_side = OwnerTransferSession::new(owner, r, w.ledger.clone());
    let mut transcript = Vec::new();
    let new_ref = run_direct(&mut recipient, &mut owner_side, &mut transcript).unwrap();
    assert_eq!(transcript.iter().map(|e| e.kind).collect::<Vec<_>>(), [MsgType::TransferPk, MsgType::TransferDone]);
    let asset = *w.ledger.resolve(&new_ref).unwrap().asset_id();
    assert_eq!(w.ledger.head_owner(&asset).unwrap(), rec.public);
}

#[test]
fn refused_transfer_over_sessions() {
    let mut w = World::new(5, EsPolicy::open(false));
    let (r, owner) = w.mint(json!({"student_id": "42"}));
    let rec = w.client_keys();
    let mut recipient = RecipientTransfer::new(rec.public, "t2");
    let mut owner_side = OwnerTransferSession::new(owner, r, w.ledger.clone());
    match run_direct(&mut recipient, &mut owner_side, &mut Vec::new()) {
        Err(ProtocolError::Remote { code, .. }) => assert_eq!(code, "NotTransferable"),
        other => panic!("{other:?}"),
    }
}
