//! The four forecasting models over supervised lookback windows.
//!
//! All models share the same contract: fit on standardized lookback blocks
//! against the sector price `h` months past each block, predict a price in
//! original units from a raw block.

pub mod checkpoint;
pub mod esn;
pub mod gru;
pub mod lstm;
pub mod ridge;
pub mod rnn;
pub mod standardize;
pub mod window;

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::SeedStream;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use esn::{esn_init, EsnConfig, EsnNetwork};
pub use gru::{GruLayer, GruNetwork};
pub use lstm::{LstmLayer, LstmNetwork};
pub use ridge::{ridge_fit, solve_ridge, RidgeModel};
pub use rnn::{Gate, TrainConfig};
pub use standardize::Standardizer;
pub use window::{make_supervised, prediction_block, SupervisedWindowSet};

/// Which forecasting model a cell runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ridge,
    Lstm,
    Gru,
    Esn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Ridge,
        ModelKind::Lstm,
        ModelKind::Gru,
        ModelKind::Esn,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Ridge => "ridge",
            ModelKind::Lstm => "lstm",
            ModelKind::Gru => "gru",
            ModelKind::Esn => "esn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridge" => Ok(ModelKind::Ridge),
            "lstm" => Ok(ModelKind::Lstm),
            "gru" => Ok(ModelKind::Gru),
            "esn" => Ok(ModelKind::Esn),
            other => Err(CoreError::InvalidArgument(format!(
                "unknown model '{other}' (expected ridge|lstm|gru|esn)"
            ))),
        }
    }
}

/// Architecture plus training settings for one gated recurrent model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RnnHyperparams {
    pub layer_sizes: Vec<usize>,
    pub train: TrainConfig,
}

/// Hyperparameters for all four models, config-overridable as a bundle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelHyperparams {
    pub ridge_lambda: f64,
    pub lstm: RnnHyperparams,
    pub gru: RnnHyperparams,
    pub esn: EsnConfig,
}

impl Default for ModelHyperparams {
    fn default() -> Self {
        Self {
            ridge_lambda: 10.0,
            lstm: RnnHyperparams {
                layer_sizes: vec![16, 256, 64],
                train: TrainConfig::lstm_default(),
            },
            gru: RnnHyperparams {
                layer_sizes: vec![32, 256, 64],
                train: TrainConfig::gru_default(),
            },
            esn: EsnConfig::default(),
        }
    }
}

/// A fitted model of any kind, carrying its standardizer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum PredictorModel {
    Ridge(RidgeModel),
    Lstm(LstmNetwork),
    Gru(GruNetwork),
    Esn(EsnNetwork),
}

impl PredictorModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            PredictorModel::Ridge(_) => ModelKind::Ridge,
            PredictorModel::Lstm(_) => ModelKind::Lstm,
            PredictorModel::Gru(_) => ModelKind::Gru,
            PredictorModel::Esn(_) => ModelKind::Esn,
        }
    }

    /// Standardizes the raw block, runs the model forward, and maps the
    /// output back to price units.
    pub fn predict_price(&self, block: &ArrayView2<f64>) -> Result<f64> {
        match self {
            PredictorModel::Ridge(m) => m.predict(block),
            PredictorModel::Lstm(m) => m.predict(block),
            PredictorModel::Gru(m) => m.predict(block),
            PredictorModel::Esn(m) => m.predict(block),
        }
    }
}

/// Fits the chosen model kind on the supervised windows.
pub fn fit_predictor(
    kind: ModelKind,
    windows: &SupervisedWindowSet,
    hyper: &ModelHyperparams,
    seed: SeedStream,
) -> Result<PredictorModel> {
    match kind {
        ModelKind::Ridge => Ok(PredictorModel::Ridge(ridge_fit(
            windows,
            hyper.ridge_lambda,
        )?)),
        ModelKind::Lstm => {
            let mut net = LstmNetwork::new(
                windows.n_features,
                &hyper.lstm.layer_sizes,
                hyper.lstm.train.interlayer_relu,
                seed,
            )?;
            net.fit(windows, &hyper.lstm.train)?;
            Ok(PredictorModel::Lstm(net))
        }
        ModelKind::Gru => {
            let mut net = GruNetwork::new(
                windows.n_features,
                &hyper.gru.layer_sizes,
                hyper.gru.train.interlayer_relu,
                seed,
            )?;
            net.fit(windows, &hyper.gru.train)?;
            Ok(PredictorModel::Gru(net))
        }
        ModelKind::Esn => {
            let mut net = esn_init(windows.n_features, hyper.esn.clone(), seed)?;
            net.fit_readout(windows)?;
            Ok(PredictorModel::Esn(net))
        }
    }
}
