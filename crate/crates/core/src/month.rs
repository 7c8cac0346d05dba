//! Calendar month arithmetic.
//!
//! The panel is indexed by calendar months; values are anchored at the last
//! calendar day of each month.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A calendar month (year, month), ordered chronologically.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Month {
    year: i32,
    month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(CoreError::InvalidArgument(format!(
                "month {month} out of range 1..=12"
            )));
        }
        Ok(Self { year, month })
    }

    pub fn from_date(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    /// First calendar day of the month.
    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    /// Last calendar day of the month: the panel's anchor date.
    pub fn end_date(&self) -> NaiveDate {
        self.add_months(1).first_day().pred_opt().expect("valid date")
    }

    pub fn next(&self) -> Self {
        self.add_months(1)
    }

    pub fn add_months(&self, n: i32) -> Self {
        let total = self.year * 12 + (self.month as i32 - 1) + n;
        Self {
            year: total.div_euclid(12),
            month: (total.rem_euclid(12) + 1) as u32,
        }
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn months_since(&self, earlier: Month) -> i32 {
        (self.year - earlier.year) * 12 + self.month as i32 - earlier.month as i32
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl fmt::Debug for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Month {
    type Err = CoreError;

    /// Parses "YYYY-MM".
    fn from_str(s: &str) -> Result<Self> {
        let bad = || CoreError::InvalidArgument(format!("'{s}' is not a YYYY-MM month"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        Month::new(year, month).map_err(|_| bad())
    }
}

impl TryFrom<String> for Month {
    type Error = CoreError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Month> for String {
    fn from(m: Month) -> String {
        m.to_string()
    }
}

/// Inclusive month range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonthRange {
    pub first: Month,
    pub last: Month,
}

impl MonthRange {
    pub fn new(first: Month, last: Month) -> Result<Self> {
        if first > last {
            return Err(CoreError::InvalidArgument(format!(
                "month range {first}..{last} is empty"
            )));
        }
        Ok(Self { first, last })
    }

    pub fn len(&self) -> usize {
        (self.last.months_since(self.first) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = Month> + '_ {
        let first = self.first;
        (0..self.len() as i32).map(move |i| first.add_months(i))
    }

    /// Intersection of two ranges, if non-empty.
    pub fn intersect(&self, other: &MonthRange) -> Option<MonthRange> {
        let first = self.first.max(other.first);
        let last = self.last.min(other.last);
        (first <= last).then_some(MonthRange { first, last })
    }
}
