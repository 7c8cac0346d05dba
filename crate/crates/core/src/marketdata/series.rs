//! Raw observation series and CSV ingestion.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// One dated observation. Values are always finite; NaN/inf never enter a
/// `RawSeries`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub date: NaiveDate,
    pub value: f64,
}

/// Native reporting frequency of a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
    Monthly,
    Quarterly,
    Annual,
}

impl Frequency {
    /// Sub-monthly series are sampled at the month-end anchor; coarser ones
    /// are interpolated between observations.
    pub fn is_sampled(&self) -> bool {
        matches!(self, Frequency::Daily | Frequency::Weekly)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Frequency::Daily => "daily",
            Frequency::Weekly => "weekly",
            Frequency::Monthly => "monthly",
            Frequency::Quarterly => "quarterly",
            Frequency::Annual => "annual",
        };
        f.write_str(s)
    }
}

impl FromStr for Frequency {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "daily" => Ok(Frequency::Daily),
            "weekly" => Ok(Frequency::Weekly),
            "monthly" => Ok(Frequency::Monthly),
            "quarterly" => Ok(Frequency::Quarterly),
            "annual" => Ok(Frequency::Annual),
            other => Err(CoreError::InvalidArgument(format!(
                "unknown frequency '{other}' (expected daily|weekly|monthly|quarterly|annual)"
            ))),
        }
    }
}

/// A named series of date-ascending observations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawSeries {
    pub name: String,
    pub frequency: Frequency,
    pub observations: Vec<Observation>,
    /// Rows discarded during parsing because their value cell was empty.
    #[serde(default)]
    pub dropped_rows: usize,
}

impl RawSeries {
    /// Validates and normalizes: sorts ascending, rejects duplicates,
    /// non-finite values, and series shorter than two observations.
    pub fn new(
        name: impl Into<String>,
        frequency: Frequency,
        mut observations: Vec<Observation>,
    ) -> Result<Self> {
        let name = name.into();
        for obs in &observations {
            if !obs.value.is_finite() {
                return Err(CoreError::NonFinite {
                    name,
                    context: obs.date.to_string(),
                });
            }
        }
        observations.sort_by_key(|o| o.date);
        if let Some(pair) = observations.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(CoreError::DuplicateDate {
                name,
                date: pair[0].date.to_string(),
            });
        }
        if observations.len() < 2 {
            return Err(CoreError::InsufficientObservations {
                name,
                count: observations.len(),
            });
        }
        Ok(Self {
            name,
            frequency,
            observations,
            dropped_rows: 0,
        })
    }

    pub fn first_date(&self) -> NaiveDate {
        self.observations[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.observations[self.observations.len() - 1].date
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Reads a `date,value` CSV (ISO-8601 dates, `.` decimal separator, UTF-8)
/// into a validated series. Rows with an empty value cell are dropped and
/// counted; out-of-order rows are sorted.
pub fn parse_series_csv(
    path: impl AsRef<Path>,
    name: impl Into<String>,
    frequency: Frequency,
) -> Result<RawSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let mut observations = Vec::new();
    let mut dropped = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let row = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if idx == 0 && looks_like_header(line) {
            continue;
        }
        let (date_cell, value_cell) = line.split_once(',').ok_or_else(|| CoreError::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("expected 'date,value', got '{line}'"),
        })?;
        let date =
            NaiveDate::parse_from_str(date_cell.trim(), "%Y-%m-%d").map_err(|e| CoreError::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("bad date '{}': {e}", date_cell.trim()),
            })?;
        let value_cell = value_cell.trim();
        if value_cell.is_empty() {
            dropped += 1;
            continue;
        }
        let value: f64 = value_cell.parse().map_err(|_| CoreError::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("bad number '{value_cell}'"),
        })?;
        if !value.is_finite() {
            return Err(CoreError::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("non-finite value '{value_cell}'"),
            });
        }
        observations.push(Observation { date, value });
    }

    let mut series = RawSeries::new(name, frequency, observations)?;
    series.dropped_rows = dropped;
    Ok(series)
}

fn looks_like_header(line: &str) -> bool {
    let lower = line.to_ascii_lowercase();
    lower.starts_with("date") && lower.contains("value")
}
