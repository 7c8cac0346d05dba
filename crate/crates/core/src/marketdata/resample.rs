//! Monthly resampling at month-end anchors.
//!
//! Monthly and coarser series are linearly interpolated in day counts
//! between the two raw observations surrounding each anchor; an observation
//! falling exactly on the anchor is used verbatim. Daily and weekly series
//! are sampled: the last observation at or before the anchor. No
//! extrapolation ever happens; a span outside coverage is an error.

use chrono::NaiveDate;

use crate::error::{CoreError, Result};
use crate::month::{Month, MonthRange};

use super::series::RawSeries;

/// Resampling output plus bookkeeping for ingestion reports.
#[derive(Clone, Debug)]
pub struct Resampled {
    pub values: Vec<f64>,
    /// Months whose value came from interpolation between two observations.
    pub interpolated: usize,
    /// Months whose anchor coincided with a raw observation.
    pub exact_hits: usize,
}

/// The months this series can serve without extrapolating.
///
/// Sampled series (daily/weekly) cover every month from the month of their
/// first observation through the month of their last: the anchor value is
/// the most recent observation, which exists throughout that range.
/// Interpolated series need an observation on both sides of the anchor, so
/// the last covered month is the last whose anchor is at or before the
/// final observation.
pub fn coverage_months(series: &RawSeries) -> Result<MonthRange> {
    let first = Month::from_date(series.first_date());
    let last_date = series.last_date();
    let last = if series.frequency.is_sampled() {
        Month::from_date(last_date)
    } else {
        let m = Month::from_date(last_date);
        if m.end_date() <= last_date {
            m
        } else {
            m.add_months(-1)
        }
    };
    if first > last {
        return Err(CoreError::InsufficientObservations {
            name: series.name.clone(),
            count: series.len(),
        });
    }
    MonthRange::new(first, last)
}

/// Values of `series` at the month-end anchors of `span`.
pub fn resample_monthly(series: &RawSeries, span: MonthRange) -> Result<Vec<f64>> {
    resample_detailed(series, span).map(|r| r.values)
}

pub fn resample_detailed(series: &RawSeries, span: MonthRange) -> Result<Resampled> {
    let coverage = coverage_months(series)?;
    if span.first < coverage.first {
        return Err(coverage_error(series, "start", span.first, &coverage));
    }
    if span.last > coverage.last {
        return Err(coverage_error(series, "end", span.last, &coverage));
    }

    let mut values = Vec::with_capacity(span.len());
    let mut interpolated = 0usize;
    let mut exact_hits = 0usize;
    for month in span.iter() {
        let anchor = month.end_date();
        if series.frequency.is_sampled() {
            values.push(sample_at(series, anchor));
        } else {
            let (v, exact) = interpolate_at(series, anchor);
            if exact {
                exact_hits += 1;
            } else {
                interpolated += 1;
            }
            values.push(v);
        }
    }
    Ok(Resampled {
        values,
        interpolated,
        exact_hits,
    })
}

fn coverage_error(
    series: &RawSeries,
    which: &'static str,
    month: Month,
    coverage: &MonthRange,
) -> CoreError {
    CoreError::CoverageExceeded {
        name: series.name.clone(),
        which,
        month: month.to_string(),
        first: coverage.first.to_string(),
        last: coverage.last.to_string(),
    }
}

/// Last observation at or before `anchor`. Coverage was checked upstream.
fn sample_at(series: &RawSeries, anchor: NaiveDate) -> f64 {
    let obs = &series.observations;
    let idx = obs.partition_point(|o| o.date <= anchor);
    debug_assert!(idx > 0, "coverage check admitted an uncovered anchor");
    obs[idx - 1].value
}

/// Linear interpolation in day counts between the observations surrounding
/// `anchor`; exact anchor hits are returned verbatim.
fn interpolate_at(series: &RawSeries, anchor: NaiveDate) -> (f64, bool) {
    let obs = &series.observations;
    let idx = obs.partition_point(|o| o.date < anchor);
    if idx < obs.len() && obs[idx].date == anchor {
        return (obs[idx].value, true);
    }
    debug_assert!(idx > 0 && idx < obs.len(), "anchor outside coverage");
    let before = obs[idx - 1];
    let after = obs[idx];
    let total = (after.date - before.date).num_days() as f64;
    let elapsed = (anchor - before.date).num_days() as f64;
    let value = before.value + (after.value - before.value) * elapsed / total;
    (value, false)
}
