//! Proof-of-Engagement protocol roles.
//!
//! * Generation: the client proposes engagement data under a disclosure
//!   policy, the engagement system (ES) answers with a draft, the client
//!   sends a fresh public key and reward password, and the ES returns the
//!   signed PoE (or a ledger reference to it) plus an optional reward code.
//! * Exhibition: the client shows the PoE (or its reference) to a third
//!   party (TP), which checks the issuer signature and ownership chain and
//!   then challenges the holder key.
//! * Transfer: the current owner appends a ledger transaction naming the
//!   recipient's key.
//!
//! The free functions implement single steps; [`session`] wraps them into
//! message-driven state machines that run over any channel.

pub mod client;
pub mod error;
pub mod es;
pub mod policy;
pub mod session;
pub mod tp;
pub mod transfer;
pub mod wire;

pub use client::{answer, answer_for, begin_engagement, check_draft, gen_pwd, keygen, keygen_with, EngagementRequest};
pub use error::{ProtocolError, Result};
pub use es::{EngagementSystem, StoredPoe};
pub use policy::{Disclosure, DisclosurePolicy, EsPolicy, RejectReason};
pub use session::{
    run_direct, ClientEngagement, ClientExhibition, ClientMachine, EngageOutcome, EsSession, ExhibitTarget,
    OwnerTransferSession, RecipientTransfer, ServerSession, Step, TpSession,
};
pub use tp::{Challenge, ChallengeBytes, ChallengeResponse, ThirdParty, SESSION_TTL_SECS};
pub use transfer::transfer_poe;
pub use wire::{Envelope, IssueMode, MsgType, VerdictBody};
