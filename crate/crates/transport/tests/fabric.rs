use std::sync::Arc;
use std::thread;

use poe_protocol::{Envelope, MsgType};
use poe_transport::*;
use serde_json::json;

fn server(name: &str) -> (Credential, ListenConfig) {
    let c = Credential::generate(name).unwrap();
    (c.clone(), ListenConfig::new(c))
}

#[test]
fn one_way_channel_identifies_only_the_server() {
    let fabric = Fabric::new();
    let (es, cfg) = server("es");
    let listener = fabric.listen("es", &cfg).unwrap();
    let client = fabric.connect("es", &ConnectConfig::one_way(PinnedPeers::of([es.identity()]))).unwrap();
    assert_eq!(client.peer_identity(), Some(&es.identity()));
    assert_eq!(listener.accept().unwrap().peer_identity(), None);
}

#[test]
fn mutual_without_credential_fails() {
    let fabric = Fabric::new();
    let (rs, cfg) = server("rs");
    let _l = fabric.listen("rs", &cfg).unwrap();
    let err = fabric.connect("rs", &ConnectConfig::mutual(PinnedPeers::of([rs.identity()]), None)).unwrap_err();
    assert_eq!(err.code(), "ChannelAuthError");
}

#[test]
fn mutual_channel_exposes_both_identities() {
    let fabric = Fabric::new();
    let rs = Credential::generate("rs").unwrap();
    let es = Credential::generate("es").unwrap();
    let cfg = ListenConfig::new(rs.clone()).client_auth(ClientAuth::Required(PinnedPeers::of([es.identity()])));
    let listener = fabric.listen("rs", &cfg).unwrap();
    let client = fabric.connect("rs", &ConnectConfig::mutual(PinnedPeers::of([rs.identity()]), Some(es.clone()))).unwrap();
    assert_eq!(client.peer_identity(), Some(&rs.identity()));
    assert_eq!(listener.accept().unwrap().peer_identity(), Some(&es.identity()));
}

#[test]
fn pinning_is_enforced_both_ways() {
    let fabric = Fabric::new();
    let rs = Credential::generate("rs").unwrap();
    let es = Credential::generate("es").unwrap();
    let stranger = Credential::generate("es").unwrap();
    let cfg = ListenConfig::new(rs.clone()).client_auth(ClientAuth::Required(PinnedPeers::of([es.identity()])));
    let _l = fabric.listen("rs", &cfg).unwrap();
    let pins = PinnedPeers::of([rs.identity()]);

    // Same name, different certificate.
    let err = fabric.connect("rs", &ConnectConfig::mutual(pins.clone(), Some(stranger))).unwrap_err();
    assert_eq!(err.code(), "ChannelAuthError");
    // Required client auth refuses anonymous clients.
    let err = fabric.connect("rs", &ConnectConfig::one_way(pins)).unwrap_err();
    assert_eq!(err.code(), "ChannelAuthError");
    // The client refuses servers it has not pinned.
    let err = fabric.connect("rs", &ConnectConfig::one_way(PinnedPeers::of([es.identity()]))).unwrap_err();
    assert_eq!(err.code(), "ChannelAuthError");
    let err = fabric.connect("rs", &ConnectConfig::one_way(PinnedPeers::new())).unwrap_err();
    assert_eq!(err.code(), "ChannelAuthError");
}

#[test]
fn unknown_endpoint_is_unreachable() {
    let fabric = Fabric::new();
    let (c, _) = server("x");
    let err = fabric.connect("nowhere", &ConnectConfig::one_way(PinnedPeers::of([c.identity()]))).unwrap_err();
    assert!(matches!(err, TransportError::Unreachable(_)));
}

#[test]
fn hundred_thousand_frames_arrive_in_order() {
    const N: u64 = 100_000;
    let fabric = Fabric::new();
    let (c, cfg) = server("sink");
    let listener = fabric.listen("sink", &cfg).unwrap();
    let mut client = fabric.connect("sink", &ConnectConfig::one_way(PinnedPeers::of([c.identity()]))).unwrap();
    let mut accepted = listener.accept().unwrap();
    let reader = thread::spawn(move || {
        let mut expected = 0u64;
        while let Some(frame) = accepted.recv_frame().unwrap() {
            assert_eq!(u64::from_be_bytes(frame[..8].try_into().unwrap()), expected);
            expected += 1;
        }
        expected
    });
    for i in 0..N {
        client.send_frame(&i.to_be_bytes()).unwrap();
    }
    drop(client);
    assert_eq!(reader.join().unwrap(), N);
}

#[test]
fn oversized_frame_is_refused_by_the_sender() {
    let fabric = Fabric::new();
    let (c, cfg) = server("srv");
    let _l = fabric.listen("srv", &cfg).unwrap();
    let mut client = fabric.connect("srv", &ConnectConfig::one_way(PinnedPeers::of([c.identity()]))).unwrap();
    assert!(client.send_frame(&vec![0; MAX_FRAME]).is_ok());
    assert_eq!(client.send_frame(&vec![0; MAX_FRAME + 1]).unwrap_err().code(), "FrameTooLarge");
}

#[test]
fn tamper_hook_rewrites_client_frames() {
    let fabric = Fabric::new();
    let (c, cfg) = server("srv");
    let listener = fabric.listen("srv", &cfg).unwrap();
    let hook: TamperFn = Arc::new(|endpoint: &str, frame: &mut Vec<u8>| {
        assert_eq!(endpoint, "srv");
        if let Some(i) = frame.windows(5).position(|w| w == b"hello") {
            frame[i] = b'j';
        }
    });
    fabric.set_tamper(Some(hook));
    let mut client = fabric.connect("srv", &ConnectConfig::one_way(PinnedPeers::of([c.identity()]))).unwrap();
    let mut accepted = listener.accept().unwrap();
    client.send(&Envelope::new(MsgType::Ok, "s", &json!({"say": "hello"})).unwrap()).unwrap();
    assert_eq!(accepted.recv().unwrap().body["say"], "jello");
    // The sender's transcript shows what it meant to send.
    assert_eq!(client.transcript()[0].body["say"], "hello");
}

#[test]
fn closed_endpoint_stops_its_node() {
    let fabric = Fabric::new();
    let (c, cfg) = server("srv");
    let svc: Arc<dyn Service> = Arc::new(LedgerService(Arc::new(poe_ledger::Ledger::new("x", Default::default()))));
    let node = Node::on_fabric(&fabric, "srv", &cfg, svc).unwrap();
    let pins = PinnedPeers::of([c.identity()]);
    assert!(fabric.connect("srv", &ConnectConfig::one_way(pins.clone())).is_ok());
    drop(node);
    assert!(matches!(fabric.connect("srv", &ConnectConfig::one_way(pins)), Err(TransportError::Unreachable(_))));
}
