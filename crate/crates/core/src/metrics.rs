//! Portfolio performance metrics: annualized return, annualized Sharpe,
//! max drawdown, Calmar.

use serde::{Deserialize, Serialize};

use crate::backtest::PortfolioPath;
use crate::error::{CoreError, Result};

/// Metrics over one portfolio path. Ratios that have no defined value
/// (zero variance, zero drawdown) are `None` and serialize as the literal
/// token `undefined` in reports, never as infinities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub total_return: f64,
    pub annualized_return_pct: f64,
    pub sharpe: Option<f64>,
    pub annualized_sharpe: Option<f64>,
    pub max_drawdown: f64,
    pub calmar: Option<f64>,
    pub periods_per_year: f64,
    pub risk_free_rate: f64,
    pub n_periods: usize,
}

/// Geometric annualization: `((1 + total)^(n/N) - 1) * 100`, with `n`
/// periods per year over `N` observed periods.
pub fn annualized_return(total_return: f64, periods_per_year: f64, n_periods: usize) -> Result<f64> {
    if total_return <= -1.0 {
        return Err(CoreError::InvalidArgument(format!(
            "total return {total_return} must exceed -1"
        )));
    }
    if n_periods == 0 {
        return Err(CoreError::InvalidArgument("no periods".into()));
    }
    let exponent = periods_per_year / n_periods as f64;
    Ok(((1.0 + total_return).powf(exponent) - 1.0) * 100.0)
}

/// Mean excess return over its sample (N-1) standard deviation. Zero
/// variance makes the ratio undefined.
pub fn sharpe(period_returns: &[f64], risk_free_rate: f64) -> Result<Option<f64>> {
    if period_returns.len() < 2 {
        return Err(CoreError::InvalidArgument(format!(
            "sharpe needs at least 2 returns, got {}",
            period_returns.len()
        )));
    }
    let n = period_returns.len() as f64;
    let excess: Vec<f64> = period_returns.iter().map(|r| r - risk_free_rate).collect();
    let mean = excess.iter().sum::<f64>() / n;
    let var = excess.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if std <= 0.0 {
        return Ok(None);
    }
    Ok(Some(mean / std))
}

pub fn annualized_sharpe(sharpe: Option<f64>, periods_per_year: f64) -> Option<f64> {
    sharpe.map(|s| s * periods_per_year.sqrt())
}

/// Largest peak-to-trough fractional loss of the wealth curve; the trough
/// always follows its peak.
pub fn max_drawdown(wealth: &[f64]) -> Result<f64> {
    if wealth.is_empty() {
        return Err(CoreError::InvalidArgument("empty wealth sequence".into()));
    }
    if wealth.iter().any(|w| !(*w > 0.0)) {
        return Err(CoreError::InvalidArgument(
            "wealth must stay positive".into(),
        ));
    }
    let mut peak = wealth[0];
    let mut mdd = 0.0f64;
    for &w in wealth {
        if w > peak {
            peak = w;
        }
        mdd = mdd.max((peak - w) / peak);
    }
    Ok(mdd)
}

/// Annualized return (as a fraction) over max drawdown; undefined when the
/// curve never drew down.
pub fn calmar(annualized_return_pct: f64, max_drawdown: f64) -> Option<f64> {
    if max_drawdown <= 0.0 {
        return None;
    }
    Some(annualized_return_pct / 100.0 / max_drawdown)
}

/// Composes the metrics over a portfolio path.
pub fn report(
    path: &PortfolioPath,
    periods_per_year: f64,
    risk_free_rate: f64,
) -> Result<MetricsReport> {
    if path.periods.is_empty() {
        return Err(CoreError::InvalidArgument("empty portfolio path".into()));
    }
    let total_return = path.wealth.last().unwrap() - 1.0;
    let n_periods = path.periods.len();
    let ann_return = annualized_return(total_return, periods_per_year, n_periods)?;
    let returns: Vec<f64> = path.periods.iter().map(|p| p.period_return).collect();
    let sharpe_ratio = if returns.len() >= 2 {
        sharpe(&returns, risk_free_rate)?
    } else {
        None
    };
    let mdd = max_drawdown(&path.wealth)?;
    Ok(MetricsReport {
        total_return,
        annualized_return_pct: ann_return,
        sharpe: sharpe_ratio,
        annualized_sharpe: annualized_sharpe(sharpe_ratio, periods_per_year),
        max_drawdown: mdd,
        calmar: calmar(ann_return, mdd),
        periods_per_year,
        risk_free_rate,
        n_periods,
    })
}

/// Formats an optional ratio for reports: `undefined` when absent.
pub fn fmt_opt(value: Option<f64>, precision: usize) -> String {
    match value {
        Some(v) => format!("{v:.precision$}"),
        None => "undefined".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::PortfolioPeriod;
    use crate::month::Month;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn annualized_return_examples() {
        assert_abs_diff_eq!(annualized_return(0.0, 12.0, 24).unwrap(), 0.0);
        // 21% over 24 monthly periods: (1.21)^(1/2) - 1 = 10% exactly.
        assert_abs_diff_eq!(
            annualized_return(0.21, 12.0, 24).unwrap(),
            10.0,
            epsilon = 1e-10
        );
        // Exponent 1 is the identity.
        assert_abs_diff_eq!(
            annualized_return(0.126825, 12.0, 12).unwrap(),
            12.6825,
            epsilon = 1e-10
        );
        assert!(annualized_return(-1.0, 12.0, 12).is_err());
    }

    #[test]
    fn sharpe_examples() {
        assert_abs_diff_eq!(
            sharpe(&[0.01, -0.01], 0.0).unwrap().unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(sharpe(&[0.02, 0.02, 0.02], 0.0).unwrap(), None);
        // mean 2%, sample std 1% -> 2.0
        assert_abs_diff_eq!(
            sharpe(&[0.01, 0.02, 0.03], 0.0).unwrap().unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert!(sharpe(&[0.01], 0.0).is_err());
    }

    #[test]
    fn annualized_sharpe_examples() {
        assert_eq!(annualized_sharpe(Some(0.0), 12.0), Some(0.0));
        assert_abs_diff_eq!(annualized_sharpe(Some(1.0), 4.0).unwrap(), 2.0);
        assert_abs_diff_eq!(
            annualized_sharpe(Some(0.5), 12.0).unwrap(),
            0.5 * 12f64.sqrt(),
            epsilon = 1e-7
        );
        assert_eq!(annualized_sharpe(None, 12.0), None);
    }

    /// Exhaustive oracle: max over all peak/trough index pairs (i <= j).
    fn mdd_oracle(wealth: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for i in 0..wealth.len() {
            for j in i..wealth.len() {
                best = best.max((wealth[i] - wealth[j]) / wealth[i]);
            }
        }
        best
    }

    #[test]
    fn max_drawdown_examples() {
        assert_eq!(max_drawdown(&[1.0, 1.1, 1.2, 1.3]).unwrap(), 0.0);
        let w = [1.00, 1.20, 0.90, 1.10];
        assert_abs_diff_eq!(max_drawdown(&w).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(max_drawdown(&w).unwrap(), mdd_oracle(&w), epsilon = 1e-15);
        let w = [1.0, 0.5, 1.0, 0.4];
        assert_abs_diff_eq!(max_drawdown(&w).unwrap(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(max_drawdown(&w).unwrap(), mdd_oracle(&w), epsilon = 1e-15);
        assert!(max_drawdown(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn calmar_examples() {
        assert_abs_diff_eq!(calmar(10.0, 0.25).unwrap(), 0.4, epsilon = 1e-15);
        assert_eq!(calmar(0.0, 0.3), Some(0.0));
        assert_eq!(calmar(5.0, 0.0), None);
    }

    fn path_from_returns(returns: &[f64]) -> PortfolioPath {
        let m0 = Month::new(2010, 1).unwrap();
        let mut wealth = vec![1.0];
        let mut periods = Vec::new();
        for (i, &r) in returns.iter().enumerate() {
            let w = wealth.last().unwrap() * (1.0 + r);
            wealth.push(w);
            periods.push(PortfolioPeriod {
                start: m0.add_months(i as i32),
                end: m0.add_months(i as i32 + 1),
                holdings: vec!["AAA".into()],
                period_return: r,
            });
        }
        PortfolioPath { periods, wealth }
    }

    #[test]
    fn report_single_period_compounds_directly() {
        let p = path_from_returns(&[0.10]);
        let r = report(&p, 12.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            r.annualized_return_pct,
            (1.1f64.powi(12) - 1.0) * 100.0,
            epsilon = 1e-9
        );
        assert_eq!(r.sharpe, None); // single period: no variance estimate
    }

    #[test]
    fn report_flat_path_has_undefined_ratios() {
        let p = path_from_returns(&[0.0, 0.0, 0.0]);
        let r = report(&p, 12.0, 0.0).unwrap();
        assert_eq!(r.annualized_return_pct, 0.0);
        assert_eq!(r.max_drawdown, 0.0);
        assert_eq!(r.sharpe, None);
        assert_eq!(r.calmar, None);
        assert_eq!(fmt_opt(r.calmar, 3), "undefined");
    }

    #[test]
    fn report_two_period_up_down() {
        let p = path_from_returns(&[0.10, -0.10]);
        let r = report(&p, 12.0, 0.0).unwrap();
        assert_abs_diff_eq!(r.total_return, -0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(r.max_drawdown, 0.10, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn mdd_matches_pair_enumeration(returns in prop::collection::vec(-0.5f64..0.5, 1..40)) {
            let p = path_from_returns(&returns);
            let ours = max_drawdown(&p.wealth).unwrap();
            let oracle = mdd_oracle(&p.wealth);
            prop_assert!((ours - oracle).abs() < 1e-12);
        }

        #[test]
        fn mdd_is_scale_invariant(returns in prop::collection::vec(-0.5f64..0.5, 1..30), c in 0.1f64..100.0) {
            let p = path_from_returns(&returns);
            let scaled: Vec<f64> = p.wealth.iter().map(|w| w * c).collect();
            let a = max_drawdown(&p.wealth).unwrap();
            let b = max_drawdown(&scaled).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn sharpe_is_translation_invariant(
            returns in prop::collection::vec(-0.1f64..0.1, 3..30),
            c in -0.05f64..0.05,
        ) {
            let base = sharpe(&returns, 0.0).unwrap();
            let shifted: Vec<f64> = returns.iter().map(|r| r + c).collect();
            let moved = sharpe(&shifted, c).unwrap();
            match (base, moved) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9),
                (None, None) => {}
                other => prop_assert!(false, "mismatch {other:?}"),
            }
        }

        #[test]
        fn one_year_annualization_is_identity(r in -0.9f64..5.0) {
            let pct = annualized_return(r, 12.0, 12).unwrap();
            prop_assert!((pct - 100.0 * r).abs() < 1e-9 * (1.0 + r.abs() * 100.0));
        }
    }
}
