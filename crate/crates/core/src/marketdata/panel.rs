//! The aligned monthly panel of macro features and sector prices.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::month::{Month, MonthRange};

use super::resample::{coverage_months, resample_detailed};
use super::series::RawSeries;

/// Ordered (sector name, ticker) pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorUniverse {
    pub sectors: Vec<(String, String)>,
}

impl SectorUniverse {
    /// The eight iShares sector ETFs used by default.
    pub fn default_eight() -> Self {
        let pairs = [
            ("healthcare", "IYH"),
            ("energy", "IYE"),
            ("utilities", "IDU"),
            ("finance", "IYG"),
            ("technology", "IYW"),
            ("materials", "IYM"),
            ("industrials", "IYJ"),
            ("consumer goods", "IYK"),
        ];
        Self {
            sectors: pairs
                .iter()
                .map(|(s, t)| (s.to_string(), t.to_string()))
                .collect(),
        }
    }

    pub fn custom(sectors: Vec<(String, String)>) -> Result<Self> {
        if sectors.is_empty() {
            return Err(CoreError::InvalidArgument("empty sector universe".into()));
        }
        for i in 0..sectors.len() {
            for j in (i + 1)..sectors.len() {
                if sectors[i].1 == sectors[j].1 {
                    return Err(CoreError::InvalidArgument(format!(
                        "duplicate ticker '{}' in universe",
                        sectors[i].1
                    )));
                }
            }
        }
        Ok(Self { sectors })
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.sectors.iter().map(|(_, t)| t.as_str())
    }

    pub fn sector_for_ticker(&self, ticker: &str) -> Option<&str> {
        self.sectors
            .iter()
            .find(|(_, t)| t == ticker)
            .map(|(s, _)| s.as_str())
    }
}

/// A named column of per-month values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Rectangular monthly matrix: every column holds exactly one finite value
/// per month, and the month axis is contiguous.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonthlyPanel {
    pub months: Vec<Month>,
    pub features: Vec<Column>,
    pub prices: Vec<Column>,
    pub universe: SectorUniverse,
}

impl MonthlyPanel {
    pub fn n_months(&self) -> usize {
        self.months.len()
    }

    pub fn span(&self) -> MonthRange {
        MonthRange::new(self.months[0], self.months[self.months.len() - 1])
            .expect("panel spans at least one month")
    }

    pub fn month_index(&self, month: Month) -> Option<usize> {
        let offset = month.months_since(self.months[0]);
        (0..self.months.len() as i32)
            .contains(&offset)
            .then_some(offset as usize)
    }

    pub fn feature(&self, name: &str) -> Option<&Column> {
        self.features.iter().find(|c| c.name == name)
    }

    pub fn price(&self, ticker: &str) -> Option<&Column> {
        self.prices.iter().find(|c| c.name == ticker)
    }

    /// Checks the rectangularity and contiguity invariants; used by tests
    /// and after artifact deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.months.is_empty() {
            return Err(CoreError::InvalidArgument("panel has no months".into()));
        }
        for w in self.months.windows(2) {
            if w[1] != w[0].next() {
                return Err(CoreError::InvalidArgument(format!(
                    "panel months not contiguous at {}..{}",
                    w[0], w[1]
                )));
            }
        }
        for col in self.features.iter().chain(self.prices.iter()) {
            if col.values.len() != self.months.len() {
                return Err(CoreError::DimensionMismatch(format!(
                    "column '{}' has {} values for {} months",
                    col.name,
                    col.values.len(),
                    self.months.len()
                )));
            }
            if let Some(i) = col.values.iter().position(|v| !v.is_finite()) {
                return Err(CoreError::NonFinite {
                    name: col.name.clone(),
                    context: self.months[i].to_string(),
                });
            }
        }
        for ticker in self.universe.tickers() {
            if self.price(ticker).is_none() {
                return Err(CoreError::MissingSector(ticker.to_string()));
            }
        }
        Ok(())
    }
}

/// Per-series ingestion bookkeeping for the panel build report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesCoverage {
    pub name: String,
    pub frequency: String,
    pub raw_observations: usize,
    pub dropped_rows: usize,
    pub first_date: String,
    pub last_date: String,
    pub first_month: Month,
    pub last_month: Month,
    pub interpolated_months: usize,
    pub exact_anchor_hits: usize,
    /// True when this series' coverage determined the panel's start (resp.
    /// end): the binding constraint on the common span.
    pub binds_start: bool,
    pub binds_end: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PanelBuildReport {
    pub span: (Month, Month),
    pub n_months: usize,
    pub series: Vec<SeriesCoverage>,
}

/// Aligns all inputs onto the intersection of their monthly coverages and
/// assembles the rectangular panel. Price series are sampled at month-end;
/// macro series follow their frequency's resampling rule.
pub fn build_panel(
    price_series: &[RawSeries],
    macro_series: &[RawSeries],
    universe: &SectorUniverse,
) -> Result<(MonthlyPanel, PanelBuildReport)> {
    for ticker in universe.tickers() {
        if !price_series.iter().any(|s| s.name == ticker) {
            return Err(CoreError::MissingSector(ticker.to_string()));
        }
    }

    let ordered_prices: Vec<&RawSeries> = universe
        .tickers()
        .map(|t| price_series.iter().find(|s| s.name == t).unwrap())
        .collect();
    let all: Vec<&RawSeries> = ordered_prices
        .iter()
        .copied()
        .chain(macro_series.iter())
        .collect();

    let mut span: Option<MonthRange> = None;
    let mut coverages = Vec::with_capacity(all.len());
    for series in &all {
        let cov = coverage_months(series)?;
        coverages.push(cov);
        span = Some(match span {
            None => cov,
            Some(s) => s.intersect(&cov).ok_or(CoreError::EmptySpanIntersection)?,
        });
    }
    let span = span.ok_or(CoreError::EmptySpanIntersection)?;

    let mut features = Vec::with_capacity(macro_series.len());
    let mut prices = Vec::with_capacity(ordered_prices.len());
    let mut report_rows = Vec::with_capacity(all.len());
    for (series, cov) in all.iter().zip(&coverages) {
        let resampled = resample_detailed(series, span)?;
        report_rows.push(SeriesCoverage {
            name: series.name.clone(),
            frequency: series.frequency.to_string(),
            raw_observations: series.len(),
            dropped_rows: series.dropped_rows,
            first_date: series.first_date().to_string(),
            last_date: series.last_date().to_string(),
            first_month: cov.first,
            last_month: cov.last,
            interpolated_months: resampled.interpolated,
            exact_anchor_hits: resampled.exact_hits,
            binds_start: cov.first == span.first,
            binds_end: cov.last == span.last,
        });
        let column = Column {
            name: series.name.clone(),
            values: resampled.values,
        };
        if prices.len() < ordered_prices.len() {
            prices.push(column);
        } else {
            features.push(column);
        }
    }

    let panel = MonthlyPanel {
        months: span.iter().collect(),
        features,
        prices,
        universe: universe.clone(),
    };
    panel.validate()?;
    let report = PanelBuildReport {
        span: (span.first, span.last),
        n_months: panel.n_months(),
        series: report_rows,
    };
    Ok((panel, report))
}

/// Fractional price change from `p0` to `p1`.
pub fn rate_of_return(p0: f64, p1: f64) -> Result<f64> {
    if !(p0 > 0.0) {
        return Err(CoreError::InvalidArgument(format!(
            "rate_of_return requires a positive base price, got {p0}"
        )));
    }
    Ok((p1 - p0) / p0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::series::{Frequency, Observation};
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;

    fn daily_series(name: &str, first: &str, last: &str, start_value: f64) -> RawSeries {
        let first: NaiveDate = first.parse().unwrap();
        let last: NaiveDate = last.parse().unwrap();
        let mut observations = Vec::new();
        let mut d = first;
        let mut v = start_value;
        while d <= last {
            observations.push(Observation { date: d, value: v });
            d = d.succ_opt().unwrap();
            v += 0.01;
        }
        RawSeries::new(name, Frequency::Daily, observations).unwrap()
    }

    fn monthly_series(name: &str, first: Month, n: usize) -> RawSeries {
        let observations = (0..n)
            .map(|i| Observation {
                date: first.add_months(i as i32).end_date(),
                value: 1.0 + i as f64,
            })
            .collect();
        RawSeries::new(name, Frequency::Monthly, observations).unwrap()
    }

    fn two_sector_universe() -> SectorUniverse {
        SectorUniverse::custom(vec![
            ("alpha".into(), "AAA".into()),
            ("beta".into(), "BBB".into()),
        ])
        .unwrap()
    }

    #[test]
    fn span_is_intersection_of_coverages() {
        let a = monthly_series("m1", Month::new(2001, 1).unwrap(), 120); // 2001-01..2010-12
        let b = monthly_series("m2", Month::new(2005, 1).unwrap(), 132); // 2005-01..2015-12
        let p1 = daily_series("AAA", "2000-01-01", "2016-12-31", 100.0);
        let p2 = daily_series("BBB", "2000-01-01", "2016-12-31", 50.0);
        let (panel, _) = build_panel(&[p1, p2], &[a, b], &two_sector_universe()).unwrap();
        assert_eq!(panel.months[0].to_string(), "2005-01");
        assert_eq!(panel.months.last().unwrap().to_string(), "2010-12");
    }

    #[test]
    fn paper_era_price_span_yields_233_rows() {
        let p1 = daily_series("AAA", "2000-07-14", "2019-11-10", 100.0);
        let p2 = daily_series("BBB", "2000-07-14", "2019-11-10", 50.0);
        let m = monthly_series("cpi", Month::new(2000, 1).unwrap(), 250); // through 2020-10
        let (panel, report) = build_panel(&[p1, p2], &[m], &two_sector_universe()).unwrap();
        assert_eq!(panel.n_months(), 233);
        assert_eq!(panel.months[0].to_string(), "2000-07");
        assert_eq!(panel.months.last().unwrap().to_string(), "2019-11");
        assert!(report.series.iter().any(|s| s.name == "AAA" && s.binds_start));
        assert!(report.series.iter().any(|s| s.name == "AAA" && s.binds_end));
    }

    #[test]
    fn missing_ticker_is_reported_by_name() {
        let p1 = daily_series("AAA", "2000-01-01", "2001-12-31", 100.0);
        let m = monthly_series("cpi", Month::new(2000, 1).unwrap(), 30);
        let err = build_panel(&[p1], &[m], &two_sector_universe()).unwrap_err();
        match err {
            CoreError::MissingSector(t) => assert_eq!(t, "BBB"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn disjoint_coverages_error() {
        let a = monthly_series("m1", Month::new(2000, 1).unwrap(), 12);
        let b = monthly_series("m2", Month::new(2002, 1).unwrap(), 12);
        let p1 = daily_series("AAA", "1999-01-01", "2003-12-31", 100.0);
        let p2 = daily_series("BBB", "1999-01-01", "2003-12-31", 50.0);
        let err = build_panel(&[p1, p2], &[a, b], &two_sector_universe()).unwrap_err();
        assert!(matches!(err, CoreError::EmptySpanIntersection));
    }

    #[test]
    fn panel_is_rectangular() {
        let p1 = daily_series("AAA", "2000-01-01", "2002-12-31", 100.0);
        let p2 = daily_series("BBB", "2000-01-01", "2002-12-31", 50.0);
        let m1 = monthly_series("cpi", Month::new(2000, 1).unwrap(), 40);
        let m2 = monthly_series("gdp", Month::new(2000, 1).unwrap(), 40);
        let (panel, _) = build_panel(&[p1, p2], &[m1, m2], &two_sector_universe()).unwrap();
        for col in panel.features.iter().chain(panel.prices.iter()) {
            assert_eq!(col.values.len(), panel.n_months());
        }
        panel.validate().unwrap();
    }

    #[test]
    fn rate_of_return_examples() {
        assert_abs_diff_eq!(rate_of_return(100.0, 110.0).unwrap(), 0.10, epsilon = 1e-15);
        assert_abs_diff_eq!(rate_of_return(100.0, 100.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rate_of_return(80.0, 60.0).unwrap(), -0.25, epsilon = 1e-15);
        assert!(rate_of_return(0.0, 1.0).is_err());
        assert!(rate_of_return(-5.0, 1.0).is_err());
    }

    #[test]
    fn default_universe_is_the_eight_etfs() {
        let u = SectorUniverse::default_eight();
        assert_eq!(u.len(), 8);
        let tickers: Vec<&str> = u.tickers().collect();
        assert_eq!(
            tickers,
            ["IYH", "IYE", "IDU", "IYG", "IYW", "IYM", "IYJ", "IYK"]
        );
        assert_eq!(u.sector_for_ticker("IYW"), Some("technology"));
    }

    #[test]
    fn duplicate_tickers_rejected() {
        assert!(SectorUniverse::custom(vec![
            ("a".into(), "AAA".into()),
            ("b".into(), "AAA".into()),
        ])
        .is_err());
    }
}
