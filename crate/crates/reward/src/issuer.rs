use poe_core::Digest;

use crate::error::Result;
use crate::system::RewardingSystem;
use crate::ticket::IssuedReward;

/// How an engagement system reaches the rewarding system: in process, or
/// over an authenticated channel.
pub trait RewardIssuer: Send + Sync {
    fn issue(&self, reward_type: &str, pwd_digest: Digest) -> Result<IssuedReward>;
}

impl RewardIssuer for RewardingSystem {
    fn issue(&self, reward_type: &str, pwd_digest: Digest) -> Result<IssuedReward> {
        RewardingSystem::issue(self, reward_type, pwd_digest)
    }
}

impl<T: RewardIssuer + ?Sized> RewardIssuer for std::sync::Arc<T> {
    fn issue(&self, reward_type: &str, pwd_digest: Digest) -> Result<IssuedReward> {
        (**self).issue(reward_type, pwd_digest)
    }
}
