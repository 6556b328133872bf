use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const TIMESTAMP_FORMAT: &str = "%d %b %Y %H:%M:%S";

/// A simulated calendar instant, rendered as `DD Mon YYYY HH:MM:SS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(NaiveDateTime);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid timestamp {input:?}: expected \"DD Mon YYYY HH:MM:SS\"")]
pub struct TimestampParseError {
    pub input: String,
}

impl Timestamp {
    pub fn new(datetime: NaiveDateTime) -> Self {
        Self(datetime)
    }

    pub fn from_ymd_hms(year: i32, month: u32, day: u32, h: u32, m: u32, s: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day)
            .and_then(|d| d.and_hms_opt(h, m, s))
            .map(Self)
    }

    pub fn datetime(&self) -> NaiveDateTime {
        self.0
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn plus_seconds(&self, seconds: u64) -> Self {
        Self(self.0 + Duration::seconds(seconds as i64))
    }

    /// Seconds from `earlier` to `self`, negative when `earlier` is later.
    pub fn seconds_since(&self, earlier: &Timestamp) -> i64 {
        (self.0 - earlier.0).num_seconds()
    }

    /// The `[DD Mon YYYY HH:MM:SS]` form used in memory dumps and logs.
    pub fn bracketed(&self) -> String {
        format!("[{self}]")
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format(TIMESTAMP_FORMAT))
    }
}

impl FromStr for Timestamp {
    type Err = TimestampParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TimestampParseError { input: s.to_string() };
        // chrono accepts single-digit days; the rendered form is strict.
        if s.len() != 20 {
            return Err(err());
        }
        let parsed = NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).map_err(|_| err())?;
        let ts = Timestamp(parsed);
        if ts.to_string() != s {
            return Err(err());
        }
        Ok(ts)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Month and day on which formative episodes are dated, written `DD Mon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anniversary {
    pub month: u32,
    pub day: u32,
}

impl Default for Anniversary {
    fn default() -> Self {
        Self { month: 7, day: 3 }
    }
}

impl Anniversary {
    /// Midnight of this anniversary in `year`. 29 Feb falls back to 28 Feb
    /// in non-leap years.
    pub fn in_year(&self, year: i32) -> Timestamp {
        let date = NaiveDate::from_ymd_opt(year, self.month, self.day)
            .or_else(|| NaiveDate::from_ymd_opt(year, self.month, self.day - 1))
            .expect("anniversary validated at parse time");
        Timestamp(date.and_hms_opt(0, 0, 0).expect("midnight"))
    }
}

impl fmt::Display for Anniversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Any leap year renders every valid month/day pair.
        let date = NaiveDate::from_ymd_opt(2000, self.month, self.day).expect("valid anniversary");
        write!(f, "{}", date.format("%d %b"))
    }
}

impl FromStr for Anniversary {
    type Err = TimestampParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TimestampParseError { input: s.to_string() };
        if s.len() != 6 {
            return Err(err());
        }
        let date = NaiveDate::parse_from_str(&format!("{s} 2000"), "%d %b %Y").map_err(|_| err())?;
        Ok(Self {
            month: date.month(),
            day: date.day(),
        })
    }
}

impl Serialize for Anniversary {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Anniversary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_birth_year_offset() -> u32 {
    40
}

fn is_default_anniversary(a: &Anniversary) -> bool {
    *a == Anniversary::default()
}

fn is_default_offset(v: &u32) -> bool {
    *v == default_birth_year_offset()
}

/// Simulation clock: where the run starts and how far each turn advances it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimClock {
    pub start: Timestamp,
    pub round_step_seconds: u64,
    /// Calendar day on which formative episodes are dated.
    #[serde(default, skip_serializing_if = "is_default_anniversary")]
    pub birth_anniversary: Anniversary,
    /// Agents are treated as born `birth_year_offset` years before the start
    /// year, so a formative episode at age `a` is dated in
    /// `start.year - birth_year_offset + a`.
    #[serde(default = "default_birth_year_offset", skip_serializing_if = "is_default_offset")]
    pub birth_year_offset: u32,
}

impl SimClock {
    pub fn new(start: Timestamp, round_step_seconds: u64) -> Self {
        Self {
            start,
            round_step_seconds,
            birth_anniversary: Anniversary::default(),
            birth_year_offset: default_birth_year_offset(),
        }
    }

    pub fn birth_year(&self) -> i32 {
        self.start.year() - self.birth_year_offset as i32
    }

    pub fn formative_timestamp(&self, age: u32) -> Timestamp {
        self.birth_anniversary.in_year(self.birth_year() + age as i32)
    }

    /// Time of the `turn`-th action, counting from 1.
    pub fn turn_time(&self, turn: u64) -> Timestamp {
        self.start.plus_seconds(turn * self.round_step_seconds)
    }
}
