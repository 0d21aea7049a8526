use thiserror::Error;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("engagement category {0:?} earns no reward")]
    NoRewardEligible(String),
    #[error("unknown reward type {0:?}")]
    NoSuchRewardType(String),
    #[error("a reward was already issued for this password digest")]
    AlreadyIssued,
    #[error("unknown one-time code")]
    TicketNotFound,
    #[error("password does not match; {remaining} attempts left")]
    BadClaim { remaining: u32 },
    #[error("too many failed claims for this one-time code")]
    RetriesExhausted,
    #[error("reward expired")]
    Expired,
    #[error("reward already redeemed")]
    AlreadyRedeemed,
    #[error("voucher not found")]
    VoucherNotFound,
    #[error("voucher already spent")]
    AlreadySpent,
    #[error("issuance requires an authenticated engagement system")]
    Unauthorized,
    #[error("rewarding system unavailable: {0}")]
    Unavailable(String),
    #[error("reward store: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RewardError {
    pub fn code(&self) -> &'static str {
        match self {
            RewardError::NoRewardEligible(_) => "NoRewardEligible",
            RewardError::NoSuchRewardType(_) => "NoSuchRewardType",
            RewardError::AlreadyIssued => "AlreadyIssued",
            RewardError::TicketNotFound => "TicketNotFound",
            RewardError::BadClaim { .. } => "BadClaim",
            RewardError::RetriesExhausted => "RetriesExhausted",
            RewardError::Expired => "Expired",
            RewardError::AlreadyRedeemed => "AlreadyRedeemed",
            RewardError::VoucherNotFound => "VoucherNotFound",
            RewardError::AlreadySpent => "AlreadySpent",
            RewardError::Unauthorized => "Unauthorized",
            RewardError::Unavailable(_) => "RewardUnavailable",
            RewardError::Io(_) => "RewardIo",
            RewardError::Json(_) => "RewardJson",
        }
    }
}

pub type Result<T, E = RewardError> = std::result::Result<T, E>;
