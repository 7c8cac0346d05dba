//! Per-sector walk-forward prediction and return-based ranking.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::marketdata::{rate_of_return, MonthlyPanel};
use crate::month::Month;
use crate::predictors::{
    fit_predictor, make_supervised, prediction_block, ModelHyperparams, ModelKind,
};
use crate::rfe::FeatureSelection;
use crate::rng::SeedStream;

/// One sector's predicted price and return at an as-of month.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorPrediction {
    pub sector: String,
    pub ticker: String,
    pub current_price: f64,
    pub predicted_price: f64,
    pub predicted_return: f64,
}

/// All sectors ranked by predicted return, descending; ties break by
/// ticker ascending.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub as_of: Month,
    pub horizon: usize,
    pub ranking: Vec<SectorPrediction>,
}

/// Everything a prediction cell needs besides the data.
#[derive(Clone, Debug)]
pub struct BacktestParams {
    pub model: ModelKind,
    pub lookback: usize,
    pub horizon: usize,
    /// Minimum training blocks required before a prediction is allowed.
    pub min_history_blocks: usize,
    pub hyper: ModelHyperparams,
}

impl BacktestParams {
    pub fn new(model: ModelKind, lookback: usize, horizon: usize) -> Self {
        Self {
            model,
            lookback,
            horizon,
            min_history_blocks: 24,
            hyper: ModelHyperparams::default(),
        }
    }
}

fn selection_for<'a>(
    selections: &'a [FeatureSelection],
    sector: &str,
) -> Result<&'a FeatureSelection> {
    selections
        .iter()
        .find(|s| s.sector == sector)
        .ok_or_else(|| CoreError::InvalidArgument(format!("no feature selection for '{sector}'")))
}

/// Fits each sector's model on every supervised block whose target month is
/// at or before `as_of`, predicts the price at `as_of + horizon` from the
/// block ending at `as_of`, and ranks sectors by predicted return. Nothing
/// dated after `as_of` can influence the result.
pub fn predict_returns(
    panel: &MonthlyPanel,
    selections: &[FeatureSelection],
    params: &BacktestParams,
    as_of: Month,
    seed: SeedStream,
) -> Result<RankedPrediction> {
    let as_of_idx = panel
        .month_index(as_of)
        .ok_or_else(|| CoreError::InvalidArgument(format!("as-of month {as_of} not in panel")))?;

    let mut ranking = Vec::with_capacity(panel.universe.len());
    for (sector, ticker) in &panel.universe.sectors {
        let selection = selection_for(selections, sector)?;
        let windows = make_supervised(
            panel,
            ticker,
            &selection.kept,
            params.lookback,
            params.horizon,
        )?;
        let train = windows.up_to_target(as_of);
        if train.len() < params.min_history_blocks {
            return Err(CoreError::InsufficientHistory {
                available: train.len(),
                required: params.min_history_blocks,
            });
        }

        let model = fit_predictor(
            params.model,
            &train,
            &params.hyper,
            seed.child_str(ticker),
        )?;
        let block = prediction_block(panel, &selection.kept, params.lookback, as_of)?;
        let predicted_price = model.predict_price(&block.view())?;
        if !predicted_price.is_finite() {
            return Err(CoreError::NonFinite {
                name: format!("{ticker} prediction"),
                context: as_of.to_string(),
            });
        }
        let current_price = panel.price(ticker).unwrap().values[as_of_idx];
        let predicted_return = rate_of_return(current_price, predicted_price)?;
        ranking.push(SectorPrediction {
            sector: sector.clone(),
            ticker: ticker.clone(),
            current_price,
            predicted_price,
            predicted_return,
        });
    }

    sort_ranking(&mut ranking);
    Ok(RankedPrediction {
        as_of,
        horizon: params.horizon,
        ranking,
    })
}

pub(crate) fn sort_ranking(ranking: &mut [SectorPrediction]) {
    ranking.sort_by(|a, b| {
        b.predicted_return
            .total_cmp(&a.predicted_return)
            .then_with(|| a.ticker.cmp(&b.ticker))
    });
}

/// First `k` of the ranking.
pub fn select_top_k(ranked: &RankedPrediction, k: usize) -> Result<Vec<String>> {
    if k > ranked.ranking.len() {
        return Err(CoreError::InvalidArgument(format!(
            "top-{k} requested from a universe of {}",
            ranked.ranking.len()
        )));
    }
    Ok(ranked.ranking[..k]
        .iter()
        .map(|p| p.ticker.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prediction(ticker: &str, ret: f64) -> SectorPrediction {
        SectorPrediction {
            sector: ticker.to_lowercase(),
            ticker: ticker.to_string(),
            current_price: 100.0,
            predicted_price: 100.0 * (1.0 + ret),
            predicted_return: ret,
        }
    }

    fn ranked(returns: &[(&str, f64)]) -> RankedPrediction {
        let mut ranking: Vec<SectorPrediction> =
            returns.iter().map(|(t, r)| prediction(t, *r)).collect();
        sort_ranking(&mut ranking);
        RankedPrediction {
            as_of: Month::new(2015, 6).unwrap(),
            horizon: 1,
            ranking,
        }
    }

    #[test]
    fn ranking_sorts_descending_and_top4_matches() {
        let r = ranked(&[
            ("IYH", 0.05),
            ("IYE", -0.01),
            ("IDU", 0.03),
            ("IYG", 0.02),
            ("IYW", 0.07),
            ("IYM", 0.00),
            ("IYJ", 0.04),
            ("IYK", 0.01),
        ]);
        let top = select_top_k(&r, 4).unwrap();
        assert_eq!(top, ["IYW", "IYH", "IYJ", "IDU"]);
    }

    #[test]
    fn equal_returns_fall_back_to_ticker_order() {
        let r = ranked(&[
            ("IYH", 0.0),
            ("IYE", 0.0),
            ("IDU", 0.0),
            ("IYG", 0.0),
            ("IYW", 0.0),
            ("IYM", 0.0),
            ("IYJ", 0.0),
            ("IYK", 0.0),
        ]);
        let top = select_top_k(&r, 4).unwrap();
        assert_eq!(top, ["IDU", "IYE", "IYG", "IYH"]);
    }

    #[test]
    fn k_equal_to_universe_returns_everything() {
        let r = ranked(&[("IYH", 0.01), ("IYE", 0.03), ("IDU", 0.02)]);
        let top = select_top_k(&r, 3).unwrap();
        assert_eq!(top.len(), 3);
        assert!(select_top_k(&r, 4).is_err());
    }
}
