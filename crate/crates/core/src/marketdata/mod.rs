//! Raw series ingestion and monthly panel assembly.
//!
//! Mixed-frequency inputs (daily prices, weekly/monthly/quarterly/annual
//! macro series) are brought onto a common monthly grid anchored at the
//! last calendar day of each month: sub-monthly series are sampled at the
//! anchor, monthly-and-coarser series are linearly interpolated in day
//! counts between their surrounding observations.

pub mod manifest;
pub mod panel;
pub mod resample;
pub mod series;

pub use manifest::{PanelManifest, SeriesEntry};
pub use panel::{
    build_panel, rate_of_return, Column, MonthlyPanel, PanelBuildReport, SectorUniverse,
    SeriesCoverage,
};
pub use resample::{coverage_months, resample_monthly, Resampled};
pub use series::{parse_series_csv, Frequency, Observation, RawSeries};
