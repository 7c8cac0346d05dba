//! Closed-form ridge regression over flattened lookback windows.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::solve_symmetric;

use super::standardize::Standardizer;
use super::window::SupervisedWindowSet;

/// Solves `(X'X + lambda D) beta = X'y` through a symmetric factorization
/// (never an explicit inverse). With `with_intercept`, a ones column is
/// appended and its diagonal penalty entry is zero; the returned vector
/// then carries the intercept last.
pub fn solve_ridge(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    lambda: f64,
    with_intercept: bool,
) -> Result<Array1<f64>> {
    if x.nrows() != y.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "{} rows vs {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite {
            name: "ridge design".into(),
            context: "fit".into(),
        });
    }
    if lambda < 0.0 {
        return Err(CoreError::InvalidArgument(format!(
            "ridge penalty must be >= 0, got {lambda}"
        )));
    }

    let n = x.nrows();
    let p = x.ncols();
    let d = if with_intercept { p + 1 } else { p };

    let design = |i: usize, j: usize| -> f64 {
        if j < p {
            x[[i, j]]
        } else {
            1.0
        }
    };

    let mut a = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in i..d {
            let mut s = 0.0;
            for r in 0..n {
                s += design(r, i) * design(r, j);
            }
            a[[i, j]] = s;
            a[[j, i]] = s;
        }
    }
    for j in 0..p {
        a[[j, j]] += lambda; // intercept entry stays unpenalized
    }

    let mut b = Array1::<f64>::zeros(d);
    for j in 0..d {
        b[j] = (0..n).map(|r| design(r, j) * y[r]).sum();
    }

    solve_symmetric(&a, &b)
}

/// Ridge model over standardized flattened windows (row-major: time step,
/// then feature) with an unpenalized intercept.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RidgeModel {
    pub lambda: f64,
    /// Length `lookback * n_features + 1`; intercept last.
    pub beta: Vec<f64>,
    pub standardizer: Standardizer,
    pub lookback: usize,
    pub n_features: usize,
}

pub fn ridge_fit(windows: &SupervisedWindowSet, lambda: f64) -> Result<RidgeModel> {
    if windows.is_empty() {
        return Err(CoreError::InvalidArgument(
            "ridge_fit needs at least one block".into(),
        ));
    }
    let standardizer = Standardizer::fit(windows)?;
    let n = windows.len();
    let d = windows.lookback * windows.n_features;

    let mut x = Array2::<f64>::zeros((n, d));
    let mut y = Array1::<f64>::zeros(n);
    for (b, block) in windows.inputs.iter().enumerate() {
        let z = standardizer.transform_block(&block.view())?;
        for t in 0..windows.lookback {
            for j in 0..windows.n_features {
                x[[b, t * windows.n_features + j]] = z[[t, j]];
            }
        }
        y[b] = standardizer.standardize_target(windows.targets[b]);
    }

    let beta = solve_ridge(&x.view(), &y.view(), lambda, true)?;
    Ok(RidgeModel {
        lambda,
        beta: beta.to_vec(),
        standardizer,
        lookback: windows.lookback,
        n_features: windows.n_features,
    })
}

impl RidgeModel {
    pub fn predict(&self, block: &ArrayView2<f64>) -> Result<f64> {
        if block.dim() != (self.lookback, self.n_features) {
            return Err(CoreError::DimensionMismatch(format!(
                "block is {:?}, model expects ({}, {})",
                block.dim(),
                self.lookback,
                self.n_features
            )));
        }
        let z = self.standardizer.transform_block(block)?;
        let mut out = self.beta[self.beta.len() - 1]; // intercept
        for t in 0..self.lookback {
            for j in 0..self.n_features {
                out += self.beta[t * self.n_features + j] * z[[t, j]];
            }
        }
        Ok(self.standardizer.destandardize_target(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictors::window::tests::toy_panel;
    use crate::predictors::window::make_supervised;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn identity_design_shrinks_by_one_plus_lambda() {
        // With X = I and no intercept, beta_i = y_i / (1 + lambda) exactly.
        let n = 6;
        let x = Array2::<f64>::eye(n);
        let y = Array1::from_vec(vec![3.0, -1.5, 0.25, 8.0, -4.0, 1.0]);
        for lambda in [0.0, 1.0, 10.0] {
            let beta = solve_ridge(&x.view(), &y.view(), lambda, false).unwrap();
            for i in 0..n {
                assert_abs_diff_eq!(beta[i], y[i] / (1.0 + lambda), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_penalty_recovers_least_squares() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_fn((20, 3), |_| rng.random_range(-1.0..1.0));
        let coef = [2.0, -1.0, 0.5];
        let y = Array1::from_shape_fn(20, |i| {
            (0..3).map(|j| coef[j] * x[[i, j]]).sum::<f64>()
        });
        let beta = solve_ridge(&x.view(), &y.view(), 0.0, false).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(beta[j], coef[j], epsilon = 1e-9);
        }
    }

    /// Brute-force oracle: beta = inv(X'X + lambda D) X'y via a dense
    /// inverse from an independent library.
    fn dense_oracle(x: &Array2<f64>, y: &Array1<f64>, lambda: f64, intercept: bool) -> Vec<f64> {
        let n = x.nrows();
        let p = x.ncols();
        let d = if intercept { p + 1 } else { p };
        let xm = nalgebra::DMatrix::from_fn(n, d, |i, j| if j < p { x[[i, j]] } else { 1.0 });
        let yv = nalgebra::DVector::from_fn(n, |i, _| y[i]);
        let mut a = xm.transpose() * &xm;
        for j in 0..p {
            a[(j, j)] += lambda;
        }
        let beta = a.try_inverse().unwrap() * xm.transpose() * yv;
        beta.iter().copied().collect()
    }

    #[test]
    fn random_problems_match_dense_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10 {
            let x = Array2::from_shape_fn((20, 5), |_| rng.random_range(-2.0..2.0));
            let y = Array1::from_shape_fn(20, |_| rng.random_range(-2.0..2.0));
            for intercept in [false, true] {
                let ours = solve_ridge(&x.view(), &y.view(), 10.0, intercept).unwrap();
                let oracle = dense_oracle(&x, &y, 10.0, intercept);
                for (a, b) in ours.iter().zip(oracle.iter()) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-8);
                }
            }
            let _ = trial;
        }
    }

    #[test]
    fn solution_satisfies_normal_equations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = Array2::from_shape_fn((15, 4), |_| rng.random_range(-1.0..1.0));
            let y = Array1::from_shape_fn(15, |_| rng.random_range(-1.0..1.0));
            let lambda = 10.0;
            let beta = solve_ridge(&x.view(), &y.view(), lambda, false).unwrap();
            let xtx = x.t().dot(&x) + lambda * Array2::eye(4);
            let xty = x.t().dot(&y);
            let resid = crate::linalg::residual_inf(&xtx.view(), &beta.view(), &xty.view());
            assert!(resid < 1e-8, "residual {resid}");
        }
    }

    #[test]
    fn fit_and_predict_on_linear_panel() {
        // toy_panel prices are an exact linear function of f0.
        let panel = toy_panel(30);
        let w = make_supervised(&panel, "AAA", &["f0".into(), "f1".into()], 3, 1).unwrap();
        let model = ridge_fit(&w, 1e-9).unwrap();
        for b in 0..w.len() {
            let pred = model.predict(&w.inputs[b].view()).unwrap();
            assert_abs_diff_eq!(pred, w.targets[b], epsilon = 1e-5);
        }
    }

    #[test]
    fn zero_coefficients_predict_training_target_mean() {
        let panel = toy_panel(20);
        let w = make_supervised(&panel, "AAA", &["f0".into(), "f1".into()], 2, 1).unwrap();
        let mut model = ridge_fit(&w, 10.0).unwrap();
        model.beta.iter_mut().for_each(|b| *b = 0.0);
        let pred = model.predict(&w.inputs[0].view()).unwrap();
        let mean = w.targets.iter().sum::<f64>() / w.len() as f64;
        assert_abs_diff_eq!(pred, mean, epsilon = 1e-12);
    }

    #[test]
    fn wrong_block_shape_is_rejected() {
        let panel = toy_panel(20);
        let w = make_supervised(&panel, "AAA", &["f0".into(), "f1".into()], 2, 1).unwrap();
        let model = ridge_fit(&w, 10.0).unwrap();
        let wrong = Array2::<f64>::zeros((3, 2));
        assert!(model.predict(&wrong.view()).is_err());
    }
}
