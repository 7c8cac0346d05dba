//! Stage two: predicted returns per sector, ranking, top-k equal-weight
//! portfolios against the equal-weight benchmark, over a (model x lookback
//! x horizon) grid with a train/test split.

pub mod grid;
pub mod path;
pub mod ranking;

pub use grid::{
    default_grid, run_grid, BenchmarkResult, CellOutcome, CellResult, CellSpec, CompletedCell,
    GridConfig, GridOutcome, SpanResult,
};
pub use path::{benchmark_path, run_path, PortfolioPath, PortfolioPeriod};
pub use ranking::{predict_returns, select_top_k, BacktestParams, RankedPrediction, SectorPrediction};
