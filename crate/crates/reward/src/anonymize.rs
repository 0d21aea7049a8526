//! Reduction of an engagement record to a bare reward category.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{RewardError, Result};

/// Maps the value of one designated engagement field to a reward type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardPolicy {
    /// Name of the engagement field carrying the activity category.
    pub category_field: String,
    /// Category value to reward type.
    pub categories: BTreeMap<String, String>,
}

impl RewardPolicy {
    pub fn new(category_field: impl Into<String>) -> Self {
        Self { category_field: category_field.into(), categories: BTreeMap::new() }
    }

    pub fn map(mut self, category: impl Into<String>, reward_type: impl Into<String>) -> Self {
        self.categories.insert(category.into(), reward_type.into());
        self
    }

    /// The reward types this policy can produce.
    pub fn reward_types(&self) -> impl Iterator<Item = &str> {
        self.categories.values().map(String::as_str)
    }
}

/// Keep only the reward type implied by `record`. Nothing else about the
/// record survives: the result is one of the policy's configured tags.
pub fn anonymize(record: &Map<String, Value>, policy: &RewardPolicy) -> Result<String> {
    let category = match record.get(&policy.category_field) {
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
        None => return Err(RewardError::NoRewardEligible(format!("missing {}", policy.category_field))),
    };
    policy
        .categories
        .get(&category)
        .cloned()
        .ok_or(RewardError::NoRewardEligible(category))
}
