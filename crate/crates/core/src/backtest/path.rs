//! Portfolio paths: walk the span in horizon-sized periods, rebalance into
//! the top-k prediction each period, compound realized returns.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::marketdata::{rate_of_return, MonthlyPanel};
use crate::month::{Month, MonthRange};
use crate::rng::SeedStream;

use super::ranking::{predict_returns, select_top_k, BacktestParams, RankedPrediction};

/// One holding period: equal weights over `holdings` from `start` to `end`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PortfolioPeriod {
    pub start: Month,
    pub end: Month,
    pub holdings: Vec<String>,
    pub period_return: f64,
}

/// Non-overlapping period sequence with the compounded wealth curve
/// (`wealth[0] == 1.0`, one more entry than periods).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PortfolioPath {
    pub periods: Vec<PortfolioPeriod>,
    pub wealth: Vec<f64>,
}

impl PortfolioPath {
    pub fn final_wealth(&self) -> f64 {
        *self.wealth.last().unwrap_or(&1.0)
    }
}

/// Mean realized return of `tickers` from `start` to `start + h`.
fn realized_mean_return(
    panel: &MonthlyPanel,
    tickers: &[String],
    start: Month,
    horizon: usize,
) -> Result<f64> {
    let i0 = panel
        .month_index(start)
        .ok_or_else(|| CoreError::InvalidArgument(format!("month {start} not in panel")))?;
    let i1 = panel
        .month_index(start.add_months(horizon as i32))
        .ok_or_else(|| {
            CoreError::InvalidArgument(format!("period past the panel end at {start}+{horizon}"))
        })?;
    let mut sum = 0.0;
    for t in tickers {
        let prices = &panel
            .price(t)
            .ok_or_else(|| CoreError::MissingSector(t.clone()))?
            .values;
        sum += rate_of_return(prices[i0], prices[i1])?;
    }
    Ok(sum / tickers.len() as f64)
}

/// Core period walk, parameterized over the ranking source so tests can
/// inject oracle rankings. Holdings are the top `k` of each prediction.
pub(crate) fn run_path_with(
    panel: &MonthlyPanel,
    span: MonthRange,
    horizon: usize,
    k: usize,
    mut predict: impl FnMut(Month) -> Result<RankedPrediction>,
) -> Result<PortfolioPath> {
    if horizon == 0 {
        return Err(CoreError::InvalidArgument("horizon must be >= 1".into()));
    }
    let mut periods = Vec::new();
    let mut wealth = vec![1.0];
    let mut m = span.first;
    while m.add_months(horizon as i32) <= span.last {
        let end = m.add_months(horizon as i32);
        let ranked = predict(m)?;
        let holdings = select_top_k(&ranked, k)?;
        let period_return = realized_mean_return(panel, &holdings, m, horizon)?;
        let w = wealth.last().unwrap() * (1.0 + period_return);
        wealth.push(w);
        periods.push(PortfolioPeriod {
            start: m,
            end,
            holdings,
            period_return,
        });
        m = end;
    }
    if periods.is_empty() {
        return Err(CoreError::InvalidArgument(format!(
            "span {}..{} holds no complete {horizon}-month period",
            span.first, span.last
        )));
    }
    Ok(PortfolioPath { periods, wealth })
}

/// Walk-forward strategy path: at each rebalance the models are refit on
/// everything known up to that month.
pub fn run_path(
    panel: &MonthlyPanel,
    selections: &[crate::rfe::FeatureSelection],
    params: &BacktestParams,
    span: MonthRange,
    k: usize,
    seed: SeedStream,
) -> Result<PortfolioPath> {
    run_path_with(panel, span, params.horizon, k, |m| {
        predict_returns(panel, selections, params, m, seed)
    })
}

/// Equal-weight benchmark: hold every sector at weight 1/n, reset each
/// period.
pub fn benchmark_path(panel: &MonthlyPanel, span: MonthRange, horizon: usize) -> Result<PortfolioPath> {
    let n = panel.universe.len();
    let all: Vec<crate::backtest::SectorPrediction> = panel
        .universe
        .sectors
        .iter()
        .map(|(s, t)| crate::backtest::SectorPrediction {
            sector: s.clone(),
            ticker: t.clone(),
            current_price: 1.0,
            predicted_price: 1.0,
            predicted_return: 0.0,
        })
        .collect();
    run_path_with(panel, span, horizon, n, |m| {
        Ok(RankedPrediction {
            as_of: m,
            horizon,
            ranking: all.clone(),
        })
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::backtest::ranking::sort_ranking;
    use crate::backtest::SectorPrediction;
    use crate::marketdata::{Column, SectorUniverse};

    /// Eight-sector panel with fixed per-month growth rates per sector.
    pub(crate) fn growth_panel(n_months: usize, rates: &[f64; 8]) -> MonthlyPanel {
        let tickers = ["IYH", "IYE", "IDU", "IYG", "IYW", "IYM", "IYJ", "IYK"];
        let first = Month::new(2005, 1).unwrap();
        let months: Vec<Month> = (0..n_months).map(|i| first.add_months(i as i32)).collect();
        let prices = tickers
            .iter()
            .zip(rates)
            .map(|(t, &g)| Column {
                name: t.to_string(),
                values: (0..n_months).map(|i| 100.0 * (1.0 + g).powi(i as i32)).collect(),
            })
            .collect();
        let features = vec![Column {
            name: "f0".into(),
            values: (0..n_months).map(|i| i as f64).collect(),
        }];
        MonthlyPanel {
            months,
            features,
            prices,
            universe: SectorUniverse::default_eight(),
        }
    }

    /// Ranking oracle that reads true future returns off the panel.
    pub(crate) fn oracle_ranking(
        panel: &MonthlyPanel,
        m: Month,
        horizon: usize,
    ) -> RankedPrediction {
        let i0 = panel.month_index(m).unwrap();
        let i1 = panel.month_index(m.add_months(horizon as i32)).unwrap();
        let mut ranking: Vec<SectorPrediction> = panel
            .universe
            .sectors
            .iter()
            .map(|(s, t)| {
                let prices = &panel.price(t).unwrap().values;
                let r = (prices[i1] - prices[i0]) / prices[i0];
                SectorPrediction {
                    sector: s.clone(),
                    ticker: t.clone(),
                    current_price: prices[i0],
                    predicted_price: prices[i1],
                    predicted_return: r,
                }
            })
            .collect();
        sort_ranking(&mut ranking);
        RankedPrediction {
            as_of: m,
            horizon,
            ranking,
        }
    }

    fn span_of(panel: &MonthlyPanel) -> MonthRange {
        panel.span()
    }

    #[test]
    fn single_period_when_horizon_spans_whole_range() {
        let rates = [0.02, 0.01, 0.0, 0.0, 0.0, 0.0, 0.0, -0.01];
        let panel = growth_panel(13, &rates);
        let span = span_of(&panel);
        let path = run_path_with(&panel, span, 12, 4, |m| Ok(oracle_ranking(&panel, m, 12)))
            .unwrap();
        assert_eq!(path.periods.len(), 1);
        assert_eq!(path.wealth.len(), 2);
    }

    #[test]
    fn oracle_model_matches_hand_rolled_loop() {
        let rates = [0.03, 0.02, 0.015, 0.01, 0.005, 0.0, -0.005, -0.01];
        let panel = growth_panel(25, &rates);
        let span = span_of(&panel);
        let h = 2;
        let path =
            run_path_with(&panel, span, h, 4, |m| Ok(oracle_ranking(&panel, m, h))).unwrap();

        // Hand-rolled: top-4 true growers are the first four tickers.
        let expected_tickers = ["IYH", "IYE", "IDU", "IYG"];
        for p in &path.periods {
            let mut held = p.holdings.clone();
            held.sort();
            let mut expect: Vec<String> =
                expected_tickers.iter().map(|s| s.to_string()).collect();
            expect.sort();
            assert_eq!(held, expect);
            let mean: f64 = expected_tickers
                .iter()
                .map(|t| {
                    let prices = &panel.price(t).unwrap().values;
                    let i0 = panel.month_index(p.start).unwrap();
                    let i1 = panel.month_index(p.end).unwrap();
                    (prices[i1] - prices[i0]) / prices[i0]
                })
                .sum::<f64>()
                / 4.0;
            assert!((p.period_return - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn benchmark_averages_all_sectors() {
        // One sector +8%, seven flat: period return is 1%.
        let mut rates = [0.0; 8];
        rates[0] = 0.08;
        let panel = growth_panel(3, &rates);
        let span = span_of(&panel);
        let path = benchmark_path(&panel, span, 1).unwrap();
        for p in &path.periods {
            assert!((p.period_return - 0.01).abs() < 1e-12);
            assert_eq!(p.holdings.len(), 8);
        }
    }

    #[test]
    fn benchmark_of_identical_sectors_returns_that_rate() {
        let rates = [0.01; 8];
        let panel = growth_panel(6, &rates);
        let path = benchmark_path(&panel, span_of(&panel), 1).unwrap();
        for p in &path.periods {
            assert!((p.period_return - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_prices_keep_wealth_flat() {
        let rates = [0.0; 8];
        let panel = growth_panel(8, &rates);
        let path = benchmark_path(&panel, span_of(&panel), 1).unwrap();
        for w in &path.wealth {
            assert!((w - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn top_k_equal_to_universe_matches_benchmark() {
        let rates = [0.02, -0.01, 0.005, 0.0, 0.03, 0.01, -0.02, 0.015];
        let panel = growth_panel(10, &rates);
        let span = span_of(&panel);
        let strategy = run_path_with(&panel, span, 1, 8, |m| Ok(oracle_ranking(&panel, m, 1)))
            .unwrap();
        let benchmark = benchmark_path(&panel, span, 1).unwrap();
        for (a, b) in strategy.periods.iter().zip(&benchmark.periods) {
            assert!((a.period_return - b.period_return).abs() < 1e-12);
        }
    }

    #[test]
    fn wealth_recursion_holds() {
        let rates = [0.03, 0.02, 0.015, 0.01, 0.005, 0.0, -0.005, -0.01];
        let panel = growth_panel(20, &rates);
        let path = run_path_with(&panel, span_of(&panel), 1, 4, |m| {
            Ok(oracle_ranking(&panel, m, 1))
        })
        .unwrap();
        for (i, p) in path.periods.iter().enumerate() {
            let ratio = path.wealth[i + 1] / path.wealth[i] - 1.0;
            assert!((ratio - p.period_return).abs() < 1e-12);
            assert_eq!(p.holdings.len(), 4);
            let mut distinct = p.holdings.clone();
            distinct.dedup();
            assert_eq!(distinct.len(), 4);
        }
    }

    #[test]
    fn oracle_strategy_weakly_dominates_benchmark_each_period() {
        // Mean of the true top 4 can never lose to the mean of all 8.
        let rates = [0.03, -0.02, 0.015, 0.01, -0.005, 0.0, 0.025, -0.01];
        let panel = growth_panel(30, &rates);
        let span = span_of(&panel);
        let strategy =
            run_path_with(&panel, span, 3, 4, |m| Ok(oracle_ranking(&panel, m, 3))).unwrap();
        let benchmark = benchmark_path(&panel, span, 3).unwrap();
        for (s, b) in strategy.periods.iter().zip(&benchmark.periods) {
            assert!(s.period_return >= b.period_return - 1e-12);
        }
    }
}
