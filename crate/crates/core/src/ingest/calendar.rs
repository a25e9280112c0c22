use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Calendar month, stored as `year·12 + (month − 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(i32);

impl Month {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month {month} out of range");
        Month(year * 12 + month as i32 - 1)
    }

    pub fn from_index(index: i32) -> Self {
        Month(index)
    }

    pub fn index(self) -> i32 {
        self.0
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    /// 1-based calendar month.
    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn quarter(self) -> Quarter {
        Quarter::new(self.year(), (self.month() - 1) / 3 + 1)
    }

    pub fn succ(self) -> Self {
        Month(self.0 + 1)
    }

    pub fn of(date: NaiveDate) -> Self {
        Month::new(date.year(), date.month())
    }

    pub fn days(self) -> u32 {
        let first = NaiveDate::from_ymd_opt(self.year(), self.month(), 1).expect("valid month");
        let next = self.succ();
        let next_first =
            NaiveDate::from_ymd_opt(next.year(), next.month(), 1).expect("valid month");
        (next_first - first).num_days() as u32
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

/// Parsed calendar date with its month; accepts `YYYY-MM` or `YYYY-MM-DD`.
pub fn parse_date(s: &str) -> Result<(Month, Option<u32>)> {
    let s = s.trim();
    if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok((Month::of(date), Some(date.day())));
    }
    let bad = || Error::SchemaMismatch(format!("unparseable date `{s}`"));
    let (y, m) = s.split_once('-').ok_or_else(bad)?;
    let year: i32 = y.parse().map_err(|_| bad())?;
    let month: u32 = m.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&month) {
        return Err(bad());
    }
    Ok((Month::new(year, month), None))
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_date(s).map(|(m, _)| m)
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Calendar quarter, stored as `year·4 + (q − 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter(i32);

impl Quarter {
    pub fn new(year: i32, q: u32) -> Self {
        assert!((1..=4).contains(&q), "quarter {q} out of range");
        Quarter(year * 4 + q as i32 - 1)
    }

    pub fn from_index(index: i32) -> Self {
        Quarter(index)
    }

    pub fn index(self) -> i32 {
        self.0
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(4)
    }

    /// Quarter of year, 1..=4.
    pub fn q(self) -> u32 {
        self.0.rem_euclid(4) as u32 + 1
    }

    pub fn pred(self) -> Self {
        Quarter(self.0 - 1)
    }

    pub fn offset(self, by: i32) -> Self {
        Quarter(self.0 + by)
    }

    pub fn last_month(self) -> Month {
        Month::new(self.year(), self.q() * 3)
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year(), self.q())
    }
}

impl FromStr for Quarter {
    type Err = Error;

    /// Accepts `2010Q1`, `2010-Q1` and `2010q1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::SchemaMismatch(format!("unparseable quarter `{s}`"));
        let upper = s.trim().to_ascii_uppercase();
        let (y, q) = upper.split_once('Q').ok_or_else(bad)?;
        let year: i32 = y.trim_end_matches('-').parse().map_err(|_| bad())?;
        let q: u32 = q.parse().map_err(|_| bad())?;
        if !(1..=4).contains(&q) {
            return Err(bad());
        }
        Ok(Quarter::new(year, q))
    }
}

impl Serialize for Quarter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quarter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
