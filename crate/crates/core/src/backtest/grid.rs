//! The (model x lookback x horizon) experiment grid with train/test split.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::marketdata::MonthlyPanel;
use crate::metrics::{report, MetricsReport};
use crate::month::{Month, MonthRange};
use crate::predictors::{ModelHyperparams, ModelKind};
use crate::rfe::FeatureSelection;
use crate::rng::SeedStream;

use super::path::{benchmark_path, run_path, PortfolioPath};
use super::ranking::BacktestParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSpec {
    pub model: ModelKind,
    pub lookback: usize,
    pub horizon: usize,
}

/// The default grid: per horizon, the lookbacks the experiment tables
/// sweep.
pub fn default_lookbacks(horizon: usize) -> Vec<usize> {
    match horizon {
        1 => vec![6, 12, 18, 24, 30, 36],
        3 | 6 | 12 => vec![12, 24, 36, 48],
        24 => vec![12, 24, 36, 48, 60],
        _ => vec![12, 24, 36],
    }
}

pub fn default_horizons() -> Vec<usize> {
    vec![1, 3, 6, 12, 24]
}

/// Full default grid over the given models, ordered by horizon, lookback,
/// then model.
pub fn default_grid(models: &[ModelKind]) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for &horizon in &default_horizons() {
        for &lookback in &default_lookbacks(horizon) {
            for &model in models {
                cells.push(CellSpec {
                    model,
                    lookback,
                    horizon,
                });
            }
        }
    }
    cells
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpanResult {
    pub span: (Month, Month),
    pub path: PortfolioPath,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletedCell {
    pub in_sample: SpanResult,
    pub out_sample: SpanResult,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum CellOutcome {
    Completed(Box<CompletedCell>),
    Failed { reason: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellResult {
    pub spec: CellSpec,
    pub seed: u64,
    pub outcome: CellOutcome,
}

/// Equal-weight benchmark paths for one horizon, shared by every cell of
/// that horizon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub horizon: usize,
    pub in_sample: SpanResult,
    pub out_sample: SpanResult,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridOutcome {
    pub split: Month,
    pub cells: Vec<CellResult>,
    pub benchmarks: Vec<BenchmarkResult>,
}

#[derive(Clone, Debug)]
pub struct GridConfig {
    pub top_k: usize,
    pub min_history_blocks: usize,
    pub risk_free_rate: f64,
    pub hyper: ModelHyperparams,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            top_k: 4,
            min_history_blocks: 24,
            risk_free_rate: 0.0,
            hyper: ModelHyperparams::default(),
        }
    }
}

/// The split month used when the config names none: the month closing the
/// first 80% of the panel.
pub fn default_split(panel: &MonthlyPanel) -> Month {
    let n = panel.n_months();
    let idx = ((n as f64 * 0.8).floor() as usize).clamp(1, n) - 1;
    panel.months[idx]
}

/// Earliest as-of month index at which a (lookback, horizon) cell has the
/// required training history.
fn earliest_feasible_index(lookback: usize, horizon: usize, min_history: usize) -> usize {
    lookback + horizon + min_history - 2
}

/// Runs every cell: in-sample path over [earliest feasible, split],
/// out-of-sample over (split, panel end], walk-forward refits throughout.
/// Infeasible or erroring cells become `Failed` entries; the grid never
/// aborts on them.
pub fn run_grid(
    panel: &MonthlyPanel,
    selections: &[FeatureSelection],
    specs: &[CellSpec],
    split: Month,
    cfg: &GridConfig,
    global_seed: u64,
) -> Result<GridOutcome> {
    if specs.is_empty() {
        return Err(CoreError::InvalidArgument("empty grid".into()));
    }
    let split_idx = panel
        .month_index(split)
        .ok_or_else(|| CoreError::InvalidArgument(format!("split month {split} not in panel")))?;
    let last_idx = panel.n_months() - 1;

    // One benchmark per horizon, spanning the widest feasible windows.
    let mut horizons: Vec<usize> = specs.iter().map(|s| s.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let benchmarks: Vec<BenchmarkResult> = horizons
        .iter()
        .map(|&horizon| {
            let n = 12.0 / horizon as f64;
            let in_span = MonthRange::new(panel.months[0], split)?;
            let in_path = benchmark_path(panel, in_span, horizon)?;
            let out_span = MonthRange::new(split, panel.months[last_idx])?;
            let out_path = benchmark_path(panel, out_span, horizon)?;
            Ok(BenchmarkResult {
                horizon,
                in_sample: SpanResult {
                    span: (in_span.first, in_span.last),
                    metrics: report(&in_path, n, cfg.risk_free_rate)?,
                    path: in_path,
                },
                out_sample: SpanResult {
                    span: (out_span.first, out_span.last),
                    metrics: report(&out_path, n, cfg.risk_free_rate)?,
                    path: out_path,
                },
            })
        })
        .collect::<Result<_>>()?;

    let root = SeedStream::root(global_seed);
    let cells: Vec<CellResult> = specs
        .par_iter()
        .map(|spec| {
            let seed = root
                .child_str(spec.model.as_str())
                .child(spec.lookback as u64)
                .child(spec.horizon as u64);
            let outcome = run_cell(panel, selections, spec, split_idx, cfg, seed)
                .unwrap_or_else(|e| CellOutcome::Failed {
                    reason: e.to_string(),
                });
            CellResult {
                spec: *spec,
                seed: seed.value(),
                outcome,
            }
        })
        .collect();

    Ok(GridOutcome {
        split,
        cells,
        benchmarks,
    })
}

fn run_cell(
    panel: &MonthlyPanel,
    selections: &[FeatureSelection],
    spec: &CellSpec,
    split_idx: usize,
    cfg: &GridConfig,
    seed: SeedStream,
) -> Result<CellOutcome> {
    let last_idx = panel.n_months() - 1;
    let e0 = earliest_feasible_index(spec.lookback, spec.horizon, cfg.min_history_blocks);
    if e0 + spec.horizon > split_idx {
        return Ok(CellOutcome::Failed {
            reason: format!(
                "infeasible: first feasible rebalance (month index {e0}) leaves no complete \
                 {}-month period before the split",
                spec.horizon
            ),
        });
    }
    if split_idx + spec.horizon > last_idx {
        return Ok(CellOutcome::Failed {
            reason: format!(
                "infeasible: no complete {}-month period after the split",
                spec.horizon
            ),
        });
    }

    let params = BacktestParams {
        model: spec.model,
        lookback: spec.lookback,
        horizon: spec.horizon,
        min_history_blocks: cfg.min_history_blocks,
        hyper: cfg.hyper.clone(),
    };
    let n = 12.0 / spec.horizon as f64;

    let in_span = MonthRange::new(panel.months[e0], panel.months[split_idx])?;
    let in_path = run_path(panel, selections, &params, in_span, cfg.top_k, seed)?;
    let out_span = MonthRange::new(panel.months[split_idx], panel.months[last_idx])?;
    let out_path = run_path(panel, selections, &params, out_span, cfg.top_k, seed)?;

    Ok(CellOutcome::Completed(Box::new(CompletedCell {
        in_sample: SpanResult {
            span: (in_span.first, in_span.last),
            metrics: report(&in_path, n, cfg.risk_free_rate)?,
            path: in_path,
        },
        out_sample: SpanResult {
            span: (out_span.first, out_span.last),
            metrics: report(&out_path, n, cfg.risk_free_rate)?,
            path: out_path,
        },
    })))
}
