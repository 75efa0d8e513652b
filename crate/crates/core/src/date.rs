//! Calendar dates as days since 1990-01-01.
//!
//! Everything downstream (shard assignment, snapshot comparisons, change-log
//! ordering) works on the day number, so the wrapper is a `u32` and the
//! calendar only appears at the parse/format boundary. Valid range is
//! 1990-01-01 through 2100-12-31 inclusive.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1990, 1, 1).unwrap()
}

/// Day number of 2100-12-31, the last representable date.
pub const MAX_DAYS: u32 = 40_541;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date(u32);

impl Date {
    pub const MIN: Date = Date(0);
    pub const MAX: Date = Date(MAX_DAYS);

    /// Days since 1990-01-01.
    pub fn days(self) -> u32 {
        self.0
    }

    pub fn from_days(days: u32) -> Result<Date> {
        if days > MAX_DAYS {
            return Err(Error::DateOutOfRange(days_to_iso(days)));
        }
        Ok(Date(days))
    }

    pub fn from_ymd(year: i32, month: u32, day: u32) -> Result<Date> {
        let nd = NaiveDate::from_ymd_opt(year, month, day)
            .ok_or_else(|| Error::DateSyntax(format!("{year:04}-{month:02}-{day:02}")))?;
        Date::from_naive(nd)
    }

    /// Parses strict `YYYY-MM-DD`. Malformed text and out-of-range dates are
    /// reported as distinct errors so corpus loading can tell them apart.
    pub fn parse(s: &str) -> Result<Date> {
        let bytes = s.as_bytes();
        let shape_ok = bytes.len() == 10
            && bytes[4] == b'-'
            && bytes[7] == b'-'
            && bytes
                .iter()
                .enumerate()
                .all(|(i, b)| i == 4 || i == 7 || b.is_ascii_digit());
        if !shape_ok {
            return Err(Error::DateSyntax(s.to_string()));
        }
        let nd = NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map_err(|_| Error::DateSyntax(s.to_string()))?;
        Date::from_naive(nd)
    }

    fn from_naive(nd: NaiveDate) -> Result<Date> {
        let days = (nd - epoch()).num_days();
        if !(0..=MAX_DAYS as i64).contains(&days) {
            return Err(Error::DateOutOfRange(nd.format("%Y-%m-%d").to_string()));
        }
        Ok(Date(days as u32))
    }

    pub fn add_days(self, n: u32) -> Result<Date> {
        Date::from_days(self.0 + n)
    }

    pub fn sub_days(self, n: u32) -> Result<Date> {
        self.0
            .checked_sub(n)
            .map(Date)
            .ok_or_else(|| Error::DateOutOfRange(format!("{} - {n} days", self)))
    }

    /// Fractional calendar year, for handing dates to the projection curves.
    pub fn as_year_fraction(self) -> f64 {
        let nd = epoch() + chrono::Days::new(self.0 as u64);
        let year = nd.year();
        let start = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(year + 1, 1, 1).unwrap();
        let into = (nd - start).num_days() as f64;
        let len = (end - start).num_days() as f64;
        year as f64 + into / len
    }
}

/// Formats an arbitrary day offset as ISO, without the `Date` range cap.
/// Shard ranges can end a few days past 2100-12-31 and still need printing.
pub fn days_to_iso(days: u32) -> String {
    (epoch() + chrono::Days::new(days as u64))
        .format("%Y-%m-%d")
        .to_string()
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&days_to_iso(self.0))
    }
}

impl fmt::Debug for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Date({self})")
    }
}

impl Serialize for Date {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Date {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Date, D::Error> {
        let s = String::deserialize(deserializer)?;
        Date::parse(&s).map_err(serde::de::Error::custom)
    }
}
