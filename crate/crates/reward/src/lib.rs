//! Anonymous rewards for engagement.
//!
//! The engagement system reduces an engagement record to a reward category
//! ([`anonymize`]) and asks the rewarding system to issue a ticket bound to
//! the digest of a client-chosen password. The client later trades the
//! one-time code and the password for a [`Voucher`] that names nothing but
//! its reward type.

mod anonymize;
pub mod audit;
mod error;
mod issuer;
mod system;
mod ticket;

pub use anonymize::{anonymize, RewardPolicy};
pub use error::{Result, RewardError};
pub use issuer::RewardIssuer;
pub use system::{RewardingSystem, RsConfig, RsState, RsStats, DEFAULT_EXPIRY_DAYS, MAX_BAD_CLAIMS};
pub use ticket::{IssuedReward, RewardTicket, TicketState, Voucher, VoucherState};
