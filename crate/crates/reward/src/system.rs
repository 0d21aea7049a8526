//! The Rewarding System store: tickets keyed by one-time code, vouchers
//! keyed by id, and every password digest ever seen.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::Duration;
use poe_core::rng::SharedRng;
use poe_core::{Clock, Digest, Pwd, SystemClock};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RewardError};
use crate::ticket::{IssuedReward, RewardTicket, TicketState, Voucher, VoucherState};

pub const DEFAULT_EXPIRY_DAYS: i64 = 90;
pub const MAX_BAD_CLAIMS: u32 = 5;

#[derive(Debug, Clone)]
pub struct RsConfig {
    pub reward_types: BTreeSet<String>,
    pub expiry: Duration,
    pub max_bad_claims: u32,
}

impl RsConfig {
    pub fn new<I, S>(reward_types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            reward_types: reward_types.into_iter().map(Into::into).collect(),
            expiry: Duration::days(DEFAULT_EXPIRY_DAYS),
            max_bad_claims: MAX_BAD_CLAIMS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RsState {
    pub tickets: BTreeMap<String, RewardTicket>,
    pub vouchers: BTreeMap<String, Voucher>,
    pub seen_digests: BTreeSet<Digest>,
    #[serde(default)]
    pub vouchers_minted: u64,
}

/// Counters for the conservation invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsStats {
    pub digests_seen: usize,
    pub tickets_issued: usize,
    pub vouchers_minted: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum LogEntry {
    Snapshot { state: RsState },
    Issued { ticket: RewardTicket },
    BadClaim { otc: String },
    Expired { otc: String },
    Redeemed { otc: String, voucher: Voucher },
    Spent { voucher_id: String },
}

impl RsState {
    fn apply(&mut self, entry: LogEntry) {
        match entry {
            LogEntry::Snapshot { state } => *self = state,
            LogEntry::Issued { ticket } => {
                self.seen_digests.insert(ticket.pwd_digest);
                self.tickets.insert(ticket.otc.clone(), ticket);
            }
            LogEntry::BadClaim { otc } => {
                if let Some(t) = self.tickets.get_mut(&otc) {
                    t.bad_claims += 1;
                }
            }
            LogEntry::Expired { otc } => {
                if let Some(t) = self.tickets.get_mut(&otc) {
                    t.state = TicketState::Expired;
                }
            }
            LogEntry::Redeemed { otc, voucher } => {
                if let Some(t) = self.tickets.get_mut(&otc) {
                    t.state = TicketState::Redeemed;
                }
                self.vouchers_minted += 1;
                self.vouchers.insert(voucher.voucher_id.clone(), voucher);
            }
            LogEntry::Spent { voucher_id } => {
                if let Some(v) = self.vouchers.get_mut(&voucher_id) {
                    v.state = VoucherState::Spent;
                }
            }
        }
    }
}

struct Journal {
    path: PathBuf,
    file: File,
    entries: usize,
}

struct Inner {
    state: RsState,
    journal: Option<Journal>,
}

impl Inner {
    /// Apply and persist one event. The in-memory state changes only after
    /// the log write succeeds.
    fn commit(&mut self, entry: LogEntry) -> Result<()> {
        if let Some(j) = &mut self.journal {
            writeln!(j.file, "{}", serde_json::to_string(&entry)?)?;
            j.file.flush()?;
            j.entries += 1;
        }
        self.state.apply(entry);
        self.maybe_compact()
    }

    fn maybe_compact(&mut self) -> Result<()> {
        let Some(j) = &self.journal else { return Ok(()) };
        // Compact once the superseded lines outnumber a quarter of the live
        // records, so the rewrite cost stays amortized constant per event.
        let live = self.state.tickets.len() + self.state.vouchers.len();
        if j.entries <= live + (live / 4).max(32) {
            return Ok(());
        }
        self.compact()
    }

    /// Rewrite the log as a single snapshot line.
    fn compact(&mut self) -> Result<()> {
        let Some(j) = &mut self.journal else { return Ok(()) };
        let tmp = j.path.with_extension("compact");
        {
            let mut f = File::create(&tmp)?;
            let line = serde_json::to_string(&LogEntry::Snapshot { state: self.state.clone() })?;
            writeln!(f, "{line}")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &j.path)?;
        j.file = OpenOptions::new().append(true).open(&j.path)?;
        j.entries = 1;
        Ok(())
    }
}

pub struct RewardingSystem {
    config: RsConfig,
    clock: Arc<dyn Clock>,
    rng: SharedRng,
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for RewardingSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RewardingSystem").field("config", &self.config).finish_non_exhaustive()
    }
}

impl RewardingSystem {
    pub fn new(config: RsConfig, clock: Arc<dyn Clock>, rng: SharedRng) -> Self {
        Self { config, clock, rng, inner: Mutex::new(Inner { state: RsState::default(), journal: None }) }
    }

    pub fn with_defaults<I, S>(reward_types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(RsConfig::new(reward_types), Arc::new(SystemClock), SharedRng::default())
    }

    /// Open a store persisted at `path`, replaying its log.
    pub fn open(config: RsConfig, clock: Arc<dyn Clock>, rng: SharedRng, path: &Path) -> Result<Self> {
        let mut state = RsState::default();
        let mut entries = 0;
        if path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                state.apply(serde_json::from_str(&line)?);
                entries += 1;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let journal = Journal { path: path.to_owned(), file, entries };
        Ok(Self { config, clock, rng, inner: Mutex::new(Inner { state, journal: Some(journal) }) })
    }

    pub fn config(&self) -> &RsConfig {
        &self.config
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap()
    }

    /// 128-bit code in lowercase hex. Client passwords are uppercase
    /// base32, so the two alphabets only share the digits 2-7.
    fn fresh_token(&self) -> String {
        hex::encode(self.rng.bytes::<16>())
    }

    /// Issue a ticket for `reward_type` bound to `pwd_digest`. A digest is
    /// accepted at most once over the lifetime of the store.
    pub fn issue(&self, reward_type: &str, pwd_digest: Digest) -> Result<IssuedReward> {
        if !self.config.reward_types.contains(reward_type) {
            return Err(RewardError::NoSuchRewardType(reward_type.to_owned()));
        }
        let mut inner = self.lock();
        if inner.state.seen_digests.contains(&pwd_digest) {
            return Err(RewardError::AlreadyIssued);
        }
        let otc = loop {
            let t = self.fresh_token();
            if !inner.state.tickets.contains_key(&t) {
                break t;
            }
        };
        let expires_at = (self.clock.now() + self.config.expiry).timestamp();
        let ticket = RewardTicket {
            otc: otc.clone(),
            pwd_digest,
            reward_type: reward_type.to_owned(),
            state: TicketState::Issued,
            expires_at,
            bad_claims: 0,
        };
        inner.commit(LogEntry::Issued { ticket })?;
        Ok(IssuedReward { otc, pwd_digest })
    }

    /// Exchange (OTC, Pwd) for a voucher. Check and transition happen under
    /// one lock, so at most one concurrent redeem of a ticket succeeds.
    pub fn redeem(&self, otc: &str, pwd: &Pwd) -> Result<Voucher> {
        let now = self.clock.now().timestamp();
        let mut inner = self.lock();
        let ticket = inner.state.tickets.get(otc).ok_or(RewardError::TicketNotFound)?;
        match ticket.state {
            TicketState::Redeemed => return Err(RewardError::AlreadyRedeemed),
            TicketState::Expired => return Err(RewardError::Expired),
            TicketState::Issued => {}
        }
        if now >= ticket.expires_at {
            inner.commit(LogEntry::Expired { otc: otc.to_owned() })?;
            return Err(RewardError::Expired);
        }
        if ticket.bad_claims >= self.config.max_bad_claims {
            return Err(RewardError::RetriesExhausted);
        }
        if pwd.digest() != ticket.pwd_digest {
            let remaining = self.config.max_bad_claims - ticket.bad_claims - 1;
            inner.commit(LogEntry::BadClaim { otc: otc.to_owned() })?;
            return Err(RewardError::BadClaim { remaining });
        }
        let voucher = Voucher {
            voucher_id: loop {
                let t = self.fresh_token();
                if !inner.state.vouchers.contains_key(&t) {
                    break t;
                }
            },
            reward_type: ticket.reward_type.clone(),
            state: VoucherState::Live,
        };
        inner.commit(LogEntry::Redeemed { otc: otc.to_owned(), voucher: voucher.clone() })?;
        Ok(voucher)
    }

    /// Spend a live voucher. Succeeds exactly once per voucher.
    pub fn spend(&self, voucher_id: &str) -> Result<Voucher> {
        let mut inner = self.lock();
        let v = inner.state.vouchers.get(voucher_id).ok_or(RewardError::VoucherNotFound)?;
        if v.state == VoucherState::Spent {
            return Err(RewardError::AlreadySpent);
        }
        let mut spent = v.clone();
        spent.state = VoucherState::Spent;
        inner.commit(LogEntry::Spent { voucher_id: voucher_id.to_owned() })?;
        Ok(spent)
    }

    /// Mark every overdue issued ticket as expired. Returns how many moved.
    pub fn sweep_expired(&self) -> Result<usize> {
        let now = self.clock.now().timestamp();
        let mut inner = self.lock();
        let overdue: Vec<String> = inner
            .state
            .tickets
            .values()
            .filter(|t| t.state == TicketState::Issued && now >= t.expires_at)
            .map(|t| t.otc.clone())
            .collect();
        for otc in &overdue {
            inner.commit(LogEntry::Expired { otc: otc.clone() })?;
        }
        Ok(overdue.len())
    }

    pub fn ticket(&self, otc: &str) -> Option<RewardTicket> {
        self.lock().state.tickets.get(otc).cloned()
    }

    pub fn voucher(&self, voucher_id: &str) -> Option<Voucher> {
        self.lock().state.vouchers.get(voucher_id).cloned()
    }

    pub fn stats(&self) -> RsStats {
        let inner = self.lock();
        RsStats {
            digests_seen: inner.state.seen_digests.len(),
            tickets_issued: inner.state.tickets.len(),
            vouchers_minted: inner.state.vouchers_minted,
        }
    }

    pub fn state(&self) -> RsState {
        self.lock().state.clone()
    }

    /// The full store as JSON; this is exactly what persistence writes.
    pub fn state_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.lock().state)?)
    }

    /// Force a compaction of the on-disk log.
    pub fn compact(&self) -> Result<()> {
        self.lock().compact()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use poe_core::rng::seeded;
    use poe_core::ManualClock;

    fn rs() -> (RewardingSystem, Arc<ManualClock>) {
        let clock = Arc::new(ManualClock::at("2025-06-01 T 12:00".parse().unwrap()));
        let rs = RewardingSystem::new(
            RsConfig::new(["education", "tourism"]),
            clock.clone(),
            SharedRng::new(seeded(1)),
        );
        (rs, clock)
    }

    #[test]
    fn issue_sets_ninety_day_expiry() {
        let (rs, clock) = rs();
        let pwd = Pwd::new("PWD");
        let issued = rs.issue("education", pwd.digest()).unwrap();
        let t = rs.ticket(&issued.otc).unwrap();
        assert_eq!(t.state, TicketState::Issued);
        assert_eq!(t.expires_at - clock.now().timestamp(), 90 * 86_400);
    }

    #[test]
    fn expiry_is_enforced_and_sticky() {
        let (rs, clock) = rs();
        let pwd = Pwd::new("PWD");
        let issued = rs.issue("tourism", pwd.digest()).unwrap();
        clock.advance(Duration::days(90));
        assert!(matches!(rs.redeem(&issued.otc, &pwd), Err(RewardError::Expired)));
        assert_eq!(rs.ticket(&issued.otc).unwrap().state, TicketState::Expired);
        clock.set(clock.now() - Duration::days(30));
        assert!(matches!(rs.redeem(&issued.otc, &pwd), Err(RewardError::Expired)));
    }

    #[test]
    fn sweep_moves_only_overdue_tickets() {
        let (rs, clock) = rs();
        rs.issue("tourism", Pwd::new("A").digest()).unwrap();
        clock.advance(Duration::days(45));
        rs.issue("tourism", Pwd::new("B").digest()).unwrap();
        clock.advance(Duration::days(46));
        assert_eq!(rs.sweep_expired().unwrap(), 1);
        assert_eq!(rs.sweep_expired().unwrap(), 0);
    }

    #[test]
    fn retry_limit() {
        let (rs, _) = rs();
        let pwd = Pwd::new("RIGHT");
        let issued = rs.issue("education", pwd.digest()).unwrap();
        for left in (0..MAX_BAD_CLAIMS).rev() {
            match rs.redeem(&issued.otc, &Pwd::new("WRONG")) {
                Err(RewardError::BadClaim { remaining }) => assert_eq!(remaining, left),
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(rs.ticket(&issued.otc).unwrap().state, TicketState::Issued);
        assert!(matches!(rs.redeem(&issued.otc, &pwd), Err(RewardError::RetriesExhausted)));
    }

    #[test]
    fn unknown_reward_type_and_otc() {
        let (rs, _) = rs();
        assert!(matches!(rs.issue("parking", Digest::ZERO), Err(RewardError::NoSuchRewardType(_))));
        assert!(matches!(rs.redeem("NOPE", &Pwd::new("x")), Err(RewardError::TicketNotFound)));
    }
}
