//! Calendar axis: month and day labels, cadence, ordered timelines.
//!
//! Months are the unit the analysis runs on. A [`MonthKey`] is a count of
//! months since 0000-01, so epoch arithmetic (`start + i`, baseline windows)
//! is plain integer math regardless of year boundaries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::TimelineError;

/// A calendar month, stored as `year * 12 + (month - 1)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthKey(pub i64);

impl MonthKey {
    pub fn from_ym(year: i64, month: u32) -> Result<Self, TimelineError> {
        if !(1..=12).contains(&month) {
            return Err(TimelineError::BadMonth {
                label: format!("{year:04}-{month:02}"),
            });
        }
        Ok(MonthKey(year * 12 + (month as i64 - 1)))
    }

    pub fn year(self) -> i64 {
        self.0.div_euclid(12)
    }

    /// Calendar month 1..=12.
    pub fn month(self) -> u32 {
        (self.0.rem_euclid(12) + 1) as u32
    }

    /// Calendar month index 0..=11, the bucket used by climatologies.
    pub fn calendar_index(self) -> usize {
        self.0.rem_euclid(12) as usize
    }

    pub fn offset(self, months: i64) -> MonthKey {
        MonthKey(self.0 + months)
    }

    /// Signed month difference `self - other`.
    pub fn months_since(self, other: MonthKey) -> i64 {
        self.0 - other.0
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for MonthKey {
    type Err = TimelineError;

    fn from_str(s: &str) -> Result<Self, TimelineError> {
        let err = || TimelineError::BadMonth { label: s.to_string() };
        let (y, m) = s.split_once('-').ok_or_else(err)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(err());
        }
        let year: i64 = y.parse().map_err(|_| err())?;
        let month: u32 = m.parse().map_err(|_| err())?;
        MonthKey::from_ym(year, month).map_err(|_| err())
    }
}

impl Serialize for MonthKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A calendar day within a month.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DayKey {
    pub month: MonthKey,
    pub day: u32,
}

pub fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 {
                29
            } else {
                28
            }
        }
        _ => unreachable!("month validated on construction"),
    }
}

impl fmt::Display for DayKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:02}", self.month, self.day)
    }
}

impl FromStr for DayKey {
    type Err = TimelineError;

    fn from_str(s: &str) -> Result<Self, TimelineError> {
        let err = || TimelineError::BadDay { label: s.to_string() };
        if s.len() != 10 {
            return Err(err());
        }
        let month: MonthKey = s[..7].parse().map_err(|_| err())?;
        if s.as_bytes()[7] != b'-' {
            return Err(err());
        }
        let day: u32 = s[8..].parse().map_err(|_| err())?;
        if day == 0 || day > days_in_month(month.year(), month.month()) {
            return Err(err());
        }
        Ok(DayKey { month, day })
    }
}

/// Sampling cadence of a raster stack.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cadence {
    Monthly,
    Daily,
}

impl fmt::Display for Cadence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cadence::Monthly => write!(f, "monthly"),
            Cadence::Daily => write!(f, "daily"),
        }
    }
}

/// One entry of a stack timeline: a month or a day, per cadence.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Period {
    Month(MonthKey),
    Day(DayKey),
}

impl Period {
    pub fn parse(label: &str, cadence: Cadence) -> Result<Self, TimelineError> {
        match cadence {
            Cadence::Monthly => Ok(Period::Month(label.parse()?)),
            Cadence::Daily => Ok(Period::Day(label.parse()?)),
        }
    }

    pub fn month(&self) -> MonthKey {
        match self {
            Period::Month(m) => *m,
            Period::Day(d) => d.month,
        }
    }

    /// The immediately following period (used for gap detection).
    pub fn next(&self) -> Period {
        match self {
            Period::Month(m) => Period::Month(m.offset(1)),
            Period::Day(d) => {
                if d.day < days_in_month(d.month.year(), d.month.month()) {
                    Period::Day(DayKey { month: d.month, day: d.day + 1 })
                } else {
                    Period::Day(DayKey { month: d.month.offset(1), day: 1 })
                }
            }
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Month(m) => m.fmt(f),
            Period::Day(d) => d.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_key_round_trip() {
        let m: MonthKey = "2010-07".parse().unwrap();
        assert_eq!(m.year(), 2010);
        assert_eq!(m.month(), 7);
        assert_eq!(m.to_string(), "2010-07");
        assert_eq!(m.offset(6).to_string(), "2011-01");
        assert_eq!(m.offset(-7).to_string(), "2009-12");
    }

    #[test]
    fn month_key_rejects_garbage() {
        for bad in ["2010-13", "2010-00", "2010/01", "10-01", "2010-1", "x"] {
            assert!(bad.parse::<MonthKey>().is_err(), "{bad}");
        }
    }

    #[test]
    fn day_key_validation() {
        assert!("2020-02-29".parse::<DayKey>().is_ok());
        assert!("2021-02-29".parse::<DayKey>().is_err());
        assert!("1900-02-29".parse::<DayKey>().is_err());
        assert!("2000-02-29".parse::<DayKey>().is_ok());
        assert!("2010-04-31".parse::<DayKey>().is_err());
        assert!("2010-04-00".parse::<DayKey>().is_err());
    }

    #[test]
    fn period_next_crosses_boundaries() {
        let p = Period::parse("2010-12-31", Cadence::Daily).unwrap();
        assert_eq!(p.next().to_string(), "2011-01-01");
        let m = Period::parse("2010-12", Cadence::Monthly).unwrap();
        assert_eq!(m.next().to_string(), "2011-01");
    }

    #[test]
    fn calendar_index_is_zero_based() {
        let m: MonthKey = "1999-01".parse().unwrap();
        assert_eq!(m.calendar_index(), 0);
        let m: MonthKey = "1999-12".parse().unwrap();
        assert_eq!(m.calendar_index(), 11);
    }
}
