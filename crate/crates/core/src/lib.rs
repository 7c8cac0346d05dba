//! Sector ranking engine.
//!
//! Two-stage pipeline over a monthly panel of macroeconomic features and
//! sector ETF prices: per-sector feature selection (recursive elimination
//! driven by random-forest importances) feeding one of four price
//! forecasting models (ridge, LSTM, GRU, echo state network), followed by
//! return-based ranking, top-k equal-weight portfolio construction, and
//! metric-grid backtesting across lookback windows and prediction horizons.

pub mod backtest;
pub mod error;
pub mod forest;
pub mod linalg;
pub mod marketdata;
pub mod metrics;
pub mod month;
pub mod predictors;
pub mod rfe;
pub mod rng;
pub mod synthetic;

pub use error::{CoreError, Result};
pub use marketdata::{MonthlyPanel, RawSeries, SectorUniverse};
pub use month::Month;
