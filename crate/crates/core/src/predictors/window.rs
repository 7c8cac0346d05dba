//! Supervised lookback windows over the monthly panel.

use ndarray::Array2;

use crate::error::{CoreError, Result};
use crate::marketdata::MonthlyPanel;
use crate::month::Month;

/// Lookback blocks paired with the sector price `horizon` months past each
/// block's last month.
#[derive(Clone, Debug)]
pub struct SupervisedWindowSet {
    /// One `lookback x n_features` matrix per block, ordered by end month.
    pub inputs: Vec<Array2<f64>>,
    /// Sector price at `end month + horizon` for each block.
    pub targets: Vec<f64>,
    /// Last month of each block, for traceability.
    pub end_months: Vec<Month>,
    pub lookback: usize,
    pub horizon: usize,
    pub n_features: usize,
}

impl SupervisedWindowSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Month each block's target refers to.
    pub fn target_month(&self, block: usize) -> Month {
        self.end_months[block].add_months(self.horizon as i32)
    }

    /// The subset usable for fitting as of `month`: blocks whose target is
    /// at or before it. Nothing dated later can leak into a fit.
    pub fn up_to_target(&self, month: Month) -> SupervisedWindowSet {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&b| self.target_month(b) <= month)
            .collect();
        SupervisedWindowSet {
            inputs: keep.iter().map(|&b| self.inputs[b].clone()).collect(),
            targets: keep.iter().map(|&b| self.targets[b]).collect(),
            end_months: keep.iter().map(|&b| self.end_months[b]).collect(),
            lookback: self.lookback,
            horizon: self.horizon,
            n_features: self.n_features,
        }
    }
}

/// Builds one block per month `m` where both the trailing `lookback` months
/// and the `m + horizon` target month exist in the panel.
pub fn make_supervised(
    panel: &MonthlyPanel,
    ticker: &str,
    features: &[String],
    lookback: usize,
    horizon: usize,
) -> Result<SupervisedWindowSet> {
    if lookback == 0 || horizon == 0 {
        return Err(CoreError::InvalidArgument(
            "lookback and horizon must be >= 1".into(),
        ));
    }
    let n = panel.n_months();
    if lookback + horizon > n {
        return Err(CoreError::InvalidArgument(format!(
            "panel has {n} months; lookback {lookback} + horizon {horizon} needs more"
        )));
    }
    let price = panel
        .price(ticker)
        .ok_or_else(|| CoreError::MissingSector(ticker.to_string()))?;
    let columns: Vec<&[f64]> = features
        .iter()
        .map(|name| {
            panel
                .feature(name)
                .map(|c| c.values.as_slice())
                .ok_or_else(|| {
                    CoreError::InvalidArgument(format!("feature '{name}' not in panel"))
                })
        })
        .collect::<Result<_>>()?;

    let p = columns.len();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut end_months = Vec::new();
    for end in (lookback - 1)..(n - horizon) {
        let start = end + 1 - lookback;
        let block = Array2::from_shape_fn((lookback, p), |(t, j)| columns[j][start + t]);
        inputs.push(block);
        targets.push(price.values[end + horizon]);
        end_months.push(panel.months[end]);
    }
    Ok(SupervisedWindowSet {
        inputs,
        targets,
        end_months,
        lookback,
        horizon,
        n_features: p,
    })
}

/// The single raw input block whose last row is `end`: the features over
/// `[end - lookback + 1, end]`, used to predict the price at
/// `end + horizon`.
pub fn prediction_block(
    panel: &MonthlyPanel,
    features: &[String],
    lookback: usize,
    end: Month,
) -> Result<Array2<f64>> {
    let end_idx = panel
        .month_index(end)
        .ok_or_else(|| CoreError::InvalidArgument(format!("month {end} not in panel")))?;
    if end_idx + 1 < lookback {
        return Err(CoreError::InvalidArgument(format!(
            "not enough history before {end} for a {lookback}-month block"
        )));
    }
    let start = end_idx + 1 - lookback;
    let columns: Vec<&[f64]> = features
        .iter()
        .map(|name| {
            panel
                .feature(name)
                .map(|c| c.values.as_slice())
                .ok_or_else(|| {
                    CoreError::InvalidArgument(format!("feature '{name}' not in panel"))
                })
        })
        .collect::<Result<_>>()?;
    Ok(Array2::from_shape_fn(
        (lookback, columns.len()),
        |(t, j)| columns[j][start + t],
    ))
}
