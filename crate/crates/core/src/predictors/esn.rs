//! Echo state network: a fixed random reservoir with a trained ridge
//! readout.
//!
//! State update (leaky integrator, tanh activation):
//!
//! ```text
//! x(t+1) = (1 - alpha) x(t) + tanh(W_in u(t+1) + W x(t))
//! ```
//!
//! where the stored `W_in` already carries the input scaling and the stored
//! `W` is rescaled so its spectral radius equals the configured value. The
//! readout is linear over the terminal concatenation `[x; u_last]`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::spectral_radius;
use crate::rng::SeedStream;

use super::ridge::solve_ridge;
use super::standardize::Standardizer;
use super::window::SupervisedWindowSet;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsnConfig {
    pub reservoir_size: usize,
    pub leaking_rate: f64,
    pub spectral_radius: f64,
    pub density: f64,
    pub input_scaling: f64,
    pub readout_lambda: f64,
    /// Collected states discarded before the readout fit (transient).
    pub washout: usize,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            reservoir_size: 100,
            leaking_rate: 0.5,
            spectral_radius: 1.0,
            density: 0.5,
            input_scaling: 1.0,
            readout_lambda: 1.0,
            washout: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsnNetwork {
    /// Input weights, entries uniform in [-s_in, s_in].
    pub w_in: Array2<f64>,
    /// Reservoir weights, rescaled to the configured spectral radius.
    pub w: Array2<f64>,
    /// Readout over [x; u_last] with intercept last; set by `fit_readout`.
    pub w_out: Option<Vec<f64>>,
    pub config: EsnConfig,
    pub standardizer: Option<Standardizer>,
    pub input_dim: usize,
}

const RADIUS_TOL: f64 = 1e-8;
const RADIUS_MAX_ITER: usize = 10_000;
const MAX_INIT_ATTEMPTS: usize = 10;

/// Draws the fixed random matrices: `W_in` uniform in [-s_in, s_in], `W`
/// uniform in [-1, 1] under a Bernoulli(density) mask, rescaled so its
/// maximum absolute eigenvalue equals the configured spectral radius
/// (power-iteration estimate). A degenerate draw (zero or non-converging
/// radius) is redrawn from an incremented sub-seed, at most 10 times.
pub fn esn_init(input_dim: usize, config: EsnConfig, seed: SeedStream) -> Result<EsnNetwork> {
    if input_dim == 0 || config.reservoir_size == 0 {
        return Err(CoreError::InvalidArgument(
            "esn needs input_dim >= 1 and reservoir_size >= 1".into(),
        ));
    }
    if !(config.density > 0.0 && config.density <= 1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "reservoir density {} outside (0, 1]",
            config.density
        )));
    }

    let n = config.reservoir_size;
    let mut last_reason = String::new();
    for attempt in 0..MAX_INIT_ATTEMPTS {
        let mut rng = seed.child(attempt as u64).rng();
        let s_in = config.input_scaling;
        let w_in = Array2::from_shape_fn((n, input_dim), |_| rng.random_range(-s_in..=s_in));
        let mut w = Array2::from_shape_fn((n, n), |_| {
            let keep = rng.random::<f64>() < config.density;
            let value = rng.random_range(-1.0..1.0);
            if keep {
                value
            } else {
                0.0
            }
        });

        match spectral_radius(&w.view(), RADIUS_TOL, RADIUS_MAX_ITER) {
            Some(rho) if rho > 1e-12 => {
                let scale = config.spectral_radius / rho;
                w.mapv_inplace(|v| v * scale);
                return Ok(EsnNetwork {
                    w_in,
                    w,
                    w_out: None,
                    config,
                    standardizer: None,
                    input_dim,
                });
            }
            Some(_) => last_reason = "reservoir draw has (near-)zero spectral radius".into(),
            None => last_reason = "spectral radius estimate did not converge".into(),
        }
    }
    Err(CoreError::ReservoirInit {
        attempts: MAX_INIT_ATTEMPTS,
        reason: last_reason,
    })
}

impl EsnNetwork {
    pub fn reservoir_size(&self) -> usize {
        self.config.reservoir_size
    }

    pub fn zero_state(&self) -> Array1<f64> {
        Array1::zeros(self.reservoir_size())
    }

    /// One leaky-integrator update; writes the new state in place.
    pub fn update_state(&self, state: &mut Array1<f64>, input: &ArrayView1<f64>) -> Result<()> {
        if state.len() != self.reservoir_size() || input.len() != self.input_dim {
            return Err(CoreError::DimensionMismatch(format!(
                "esn update: state {} input {} vs ({}, {})",
                state.len(),
                input.len(),
                self.reservoir_size(),
                self.input_dim
            )));
        }
        let alpha = self.config.leaking_rate;
        let drive = (self.w_in.dot(input) + self.w.dot(&*state)).mapv(f64::tanh);
        state.zip_mut_with(&drive, |x, &d| *x = (1.0 - alpha) * *x + d);
        Ok(())
    }

    /// Runs a standardized block from a zero state; returns the terminal
    /// readout features [x; u_last].
    fn terminal_features(&self, block_std: &ArrayView2<f64>) -> Result<Vec<f64>> {
        let mut state = self.zero_state();
        for row in block_std.rows() {
            self.update_state(&mut state, &row)?;
        }
        let last = block_std.row(block_std.nrows() - 1);
        let mut features = Vec::with_capacity(self.reservoir_size() + self.input_dim);
        features.extend(state.iter());
        features.extend(last.iter());
        Ok(features)
    }

    /// Fits the linear readout by ridge regression (unpenalized intercept)
    /// against standardized targets. With washout w, the first w collected
    /// states are discarded; the default transient is zero, so every block
    /// counts.
    pub fn fit_readout(&mut self, windows: &SupervisedWindowSet) -> Result<()> {
        if windows.is_empty() {
            return Err(CoreError::InvalidArgument(
                "esn readout needs at least one block".into(),
            ));
        }
        if windows.n_features != self.input_dim {
            return Err(CoreError::DimensionMismatch(format!(
                "windows have {} features, esn expects {}",
                windows.n_features, self.input_dim
            )));
        }
        let standardizer = Standardizer::fit(windows)?;
        let usable = windows.len().saturating_sub(self.config.washout);
        if usable == 0 {
            return Err(CoreError::InvalidArgument(format!(
                "washout {} discards all {} blocks",
                self.config.washout,
                windows.len()
            )));
        }

        let d = self.reservoir_size() + self.input_dim;
        let mut design = Array2::<f64>::zeros((usable, d));
        let mut targets = Array1::<f64>::zeros(usable);
        for (row, b) in (self.config.washout..windows.len()).enumerate() {
            let z = standardizer.transform_block(&windows.inputs[b].view())?;
            let features = self.terminal_features(&z.view())?;
            for (j, v) in features.into_iter().enumerate() {
                design[[row, j]] = v;
            }
            targets[row] = standardizer.standardize_target(windows.targets[b]);
        }

        let beta = solve_ridge(
            &design.view(),
            &targets.view(),
            self.config.readout_lambda,
            true,
        )?;
        self.w_out = Some(beta.to_vec());
        self.standardizer = Some(standardizer);
        Ok(())
    }

    pub fn predict(&self, block: &ArrayView2<f64>) -> Result<f64> {
        let w_out = self
            .w_out
            .as_ref()
            .ok_or_else(|| CoreError::NotFitted("esn readout".into()))?;
        let standardizer = self
            .standardizer
            .as_ref()
            .ok_or_else(|| CoreError::NotFitted("esn standardizer".into()))?;
        if block.nrows() == 0 || block.ncols() != self.input_dim {
            return Err(CoreError::DimensionMismatch(format!(
                "block {:?} vs input_dim {}",
                block.dim(),
                self.input_dim
            )));
        }
        let z = standardizer.transform_block(block)?;
        let features = self.terminal_features(&z.view())?;
        let mut out = w_out[w_out.len() - 1]; // intercept
        for (f, w) in features.iter().zip(w_out.iter()) {
            out += f * w;
        }
        Ok(standardizer.destandardize_target(out))
    }

    /// Fraction of nonzero reservoir entries.
    pub fn nonzero_fraction(&self) -> f64 {
        let nz = self.w.iter().filter(|v| **v != 0.0).count();
        nz as f64 / self.w.len() as f64
    }
}
