//! Timestamps in the document layout `YYYY-MM-DD T HH:MM`, and clocks.

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use chrono::{DateTime, Duration, NaiveDateTime, Timelike, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CoreError;

/// The only time zone label documents carry.
pub const TIME_FORMAT_UTC: &str = "UTC";

const LAYOUT_MINUTES: &str = "%Y-%m-%d T %H:%M";
const LAYOUT_SECONDS: &str = "%Y-%m-%d T %H:%M:%S";

/// A UTC instant rendered as `2005-10-30 T 10:45`.
///
/// Parsing also accepts a trailing `:SS`; rendering emits seconds only when
/// they are non-zero, so parse and render round-trip.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PoeTime(DateTime<Utc>);

impl PoeTime {
    pub fn new(at: DateTime<Utc>) -> Self {
        Self(at.with_nanosecond(0).unwrap_or(at))
    }

    /// Truncated to whole minutes, the layout documents are issued with.
    pub fn minutes(at: DateTime<Utc>) -> Self {
        let t = at.with_second(0).and_then(|t| t.with_nanosecond(0)).unwrap_or(at);
        Self(t)
    }

    pub fn instant(&self) -> DateTime<Utc> {
        self.0
    }

    pub fn unix_seconds(&self) -> i64 {
        self.0.timestamp()
    }

    pub fn from_unix_seconds(secs: i64) -> Option<Self> {
        DateTime::from_timestamp(secs, 0).map(Self)
    }

    pub fn plus(&self, d: Duration) -> Self {
        Self(self.0 + d)
    }
}

impl fmt::Display for PoeTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let layout = if self.0.second() == 0 { LAYOUT_MINUTES } else { LAYOUT_SECONDS };
        write!(f, "{}", self.0.format(layout))
    }
}

impl fmt::Debug for PoeTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PoeTime({self})")
    }
}

impl FromStr for PoeTime {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        NaiveDateTime::parse_from_str(s, LAYOUT_SECONDS)
            .or_else(|_| NaiveDateTime::parse_from_str(s, LAYOUT_MINUTES))
            .map(|naive| Self(naive.and_utc()))
            .map_err(|_| CoreError::Time(s.to_owned()))
    }
}

impl Serialize for PoeTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PoeTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to. Used for reproducible runs.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self(Mutex::new(start))
    }

    pub fn at(start: PoeTime) -> Self {
        Self::new(start.instant())
    }

    pub fn advance(&self, by: Duration) {
        *self.0.lock().unwrap() += by;
    }

    pub fn set(&self, to: DateTime<Utc>) {
        *self.0.lock().unwrap() = to;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap()
    }
}
