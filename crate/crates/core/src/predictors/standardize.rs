//! Per-feature z-scoring fitted on a training window set.
//!
//! Raw macro levels span wildly different magnitudes (GDP vs rates), so all
//! models see standardized inputs and targets; predictions are mapped back
//! to price units on the way out.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

use super::window::SupervisedWindowSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
    /// Features whose training variance was zero; their std was pinned to 1
    /// so transforms stay defined.
    pub constant_features: Vec<usize>,
    /// True when the target itself was constant (std pinned to 1).
    pub constant_target: bool,
}

impl Standardizer {
    /// Estimates moments across every row of every training block.
    pub fn fit(windows: &SupervisedWindowSet) -> Result<Self> {
        if windows.is_empty() {
            return Err(CoreError::InvalidArgument(
                "cannot standardize an empty window set".into(),
            ));
        }
        let p = windows.n_features;
        let rows = (windows.len() * windows.lookback) as f64;

        let mut mean = vec![0.0; p];
        for block in &windows.inputs {
            for row in block.rows() {
                for (m, v) in mean.iter_mut().zip(row.iter()) {
                    *m += v;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= rows);

        let mut var = vec![0.0; p];
        for block in &windows.inputs {
            for row in block.rows() {
                for ((s, v), m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
                    *s += (v - m).powi(2);
                }
            }
        }
        var.iter_mut().for_each(|s| *s /= rows);

        let mut constant_features = Vec::new();
        let std: Vec<f64> = var
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let s = v.sqrt();
                if s > 0.0 {
                    s
                } else {
                    constant_features.push(j);
                    1.0
                }
            })
            .collect();

        let n = windows.len() as f64;
        let t_mean = windows.targets.iter().sum::<f64>() / n;
        let t_var = windows
            .targets
            .iter()
            .map(|t| (t - t_mean).powi(2))
            .sum::<f64>()
            / n;
        let t_std = t_var.sqrt();
        let constant_target = t_std <= 0.0;

        Ok(Self {
            feature_mean: mean,
            feature_std: std,
            target_mean: t_mean,
            target_std: if constant_target { 1.0 } else { t_std },
            constant_features,
            constant_target,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn transform_block(&self, block: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if block.ncols() != self.n_features() {
            return Err(CoreError::DimensionMismatch(format!(
                "block has {} features, standardizer expects {}",
                block.ncols(),
                self.n_features()
            )));
        }
        Ok(Array2::from_shape_fn(block.dim(), |(i, j)| {
            (block[[i, j]] - self.feature_mean[j]) / self.feature_std[j]
        }))
    }

    pub fn standardize_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn destandardize_target(&self, z: f64) -> f64 {
        z * self.target_std + self.target_mean
    }
}
