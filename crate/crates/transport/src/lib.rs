//! Secure channels for Proof-of-Engagement nodes.
//!
//! Every message is one envelope in a length-prefixed frame. Channels come
//! from either an in-memory [`Fabric`] (tests, the demo) or TLS over TCP
//! with certificates pinned by fingerprint; both enforce the same
//! authentication rules and produce the same transcripts.

pub mod channel;
pub mod credential;
pub mod dial;
pub mod driver;
pub mod error;
pub mod fabric;
pub mod frame;
pub mod messages;
pub mod node;
pub mod remote;
pub mod service;
pub mod tls;

pub use channel::{AuthMode, ClientAuth, ConnectConfig, FrameChannel, ListenConfig, SecureChannel};
pub use credential::{fingerprint, Credential, PeerIdentity, PinnedPeers};
pub use dial::{Dialer, Endpoint};
pub use driver::run_channel;
pub use error::{Result, TransportError};
pub use fabric::{Fabric, FabricListener, TamperFn};
pub use frame::{encode_frame, read_frame, write_frame, MAX_FRAME};
pub use node::Node;
pub use remote::{RemoteLedger, RemoteRewards};
pub use service::{serve_channel, EsService, LedgerService, RsService, Service, TpService};
