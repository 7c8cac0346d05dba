//! Bootstrap ensemble of regression trees.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::SeedStream;

use super::tree::{fit_tree, validate_input, TreeNode};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    /// `None` grows trees until the other stopping rules bite.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features scanned per split; `None` uses ceil(p/3), `Some(usize::MAX)`
    /// scans all.
    pub features_per_split_override: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            features_per_split_override: None,
            bootstrap: true,
        }
    }
}

impl ForestHyperparams {
    pub fn features_per_split(&self, p: usize) -> usize {
        match self.features_per_split_override {
            Some(k) => k.min(p).max(1),
            None => p.div_ceil(3),
        }
    }
}

/// Per-feature nonnegative scores; they sum to 1 unless no split occurred
/// anywhere in the forest, in which case the vector is all-zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub scores: Vec<f64>,
}

impl ImportanceVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn argmax(&self) -> usize {
        self.scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct RandomForestModel {
    pub trees: Vec<TreeNode>,
    pub n_features: usize,
    pub hyperparams: ForestHyperparams,
    pub seed: SeedStream,
}

impl RandomForestModel {
    /// Mean of per-tree predictions.
    pub fn predict(&self, x: &ArrayView1<f64>) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(CoreError::DimensionMismatch(format!(
                "forest expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    /// Mean-decrease-in-impurity importances: per feature, the
    /// sample-count-weighted impurity decrease summed over each tree's
    /// nodes, averaged across trees and normalized to sum 1.
    pub fn importances(&self) -> ImportanceVector {
        let mut acc = vec![0.0; self.n_features];
        let mut per_tree = vec![0.0; self.n_features];
        for tree in &self.trees {
            per_tree.iter_mut().for_each(|v| *v = 0.0);
            tree.accumulate_importance(&mut per_tree);
            for (a, v) in acc.iter_mut().zip(&per_tree) {
                *a += v / self.trees.len() as f64;
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|v| *v /= total);
        }
        ImportanceVector { scores: acc }
    }
}

/// Fits `n_trees` trees, each from its own `(seed, tree index)` stream and,
/// when `bootstrap` is set, on its own same-size resample drawn with
/// replacement. Identical output regardless of parallelism.
pub fn fit_forest(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    hp: &ForestHyperparams,
    seed: SeedStream,
) -> Result<RandomForestModel> {
    validate_input(x, y)?;
    if hp.n_trees == 0 {
        return Err(CoreError::InvalidArgument("n_trees must be >= 1".into()));
    }
    let n = x.nrows();
    let trees: Vec<TreeNode> = (0..hp.n_trees)
        .into_par_iter()
        .map(|tree_index| {
            let mut rng = seed.child(tree_index as u64).rng();
            if hp.bootstrap {
                let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let bx = Array2::from_shape_fn((n, x.ncols()), |(i, j)| x[[picks[i], j]]);
                let by = Array1::from_shape_fn(n, |i| y[picks[i]]);
                fit_tree(&bx.view(), &by.view(), hp, &mut rng)
            } else {
                fit_tree(x, y, hp, &mut rng)
            }
        })
        .collect::<Result<_>>()?;
    Ok(RandomForestModel {
        trees,
        n_features: x.ncols(),
        hyperparams: hp.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};
    use rand::Rng;

    fn planted_signal(seed: u64, n: usize, p: usize) -> (Array2<f64>, Array1<f64>) {
        let mut rng = SeedStream::root(seed).rng();
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |i| 3.0 * x[[i, 0]] + rng.random_range(-0.01..0.01));
        (x, y)
    }

    #[test]
    fn single_tree_no_bootstrap_equals_tree_prediction() {
        let (x, y) = planted_signal(11, 40, 3);
        let hp = ForestHyperparams {
            n_trees: 1,
            bootstrap: false,
            features_per_split_override: Some(usize::MAX),
            ..Default::default()
        };
        let seed = SeedStream::root(11);
        let forest = fit_forest(&x.view(), &y.view(), &hp, seed).unwrap();
        let mut rng = seed.child(0).rng();
        let tree = fit_tree(&x.view(), &y.view(), &hp, &mut rng).unwrap();
        for i in 0..x.nrows() {
            assert_eq!(forest.predict(&x.row(i)).unwrap(), tree.predict(&x.row(i)));
        }
    }

    #[test]
    fn same_seed_gives_bitwise_identical_importances() {
        let (x, y) = planted_signal(2, 60, 5);
        let hp = ForestHyperparams {
            n_trees: 20,
            ..Default::default()
        };
        let a = fit_forest(&x.view(), &y.view(), &hp, SeedStream::root(9)).unwrap();
        let b = fit_forest(&x.view(), &y.view(), &hp, SeedStream::root(9)).unwrap();
        assert_eq!(a.importances(), b.importances());
    }

    #[test]
    fn planted_signal_dominates_importances() {
        let (x, y) = planted_signal(42, 100, 8);
        let hp = ForestHyperparams {
            n_trees: 100,
            ..Default::default()
        };
        let forest = fit_forest(&x.view(), &y.view(), &hp, SeedStream::root(42)).unwrap();
        let imp = forest.importances();
        assert!(imp.scores[0] > 0.9, "importance[0] = {}", imp.scores[0]);
        assert_eq!(imp.argmax(), 0);
    }

    #[test]
    fn importances_sum_to_one_when_splits_exist() {
        let (x, y) = planted_signal(5, 50, 4);
        let forest = fit_forest(
            &x.view(),
            &y.view(),
            &ForestHyperparams::default(),
            SeedStream::root(5),
        )
        .unwrap();
        let sum: f64 = forest.importances().scores.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn all_leaf_forest_has_zero_importances() {
        let x = array![[1.0], [2.0], [3.0]];
        let y = array![4.0, 4.0, 4.0];
        let hp = ForestHyperparams {
            n_trees: 3,
            ..Default::default()
        };
        let forest = fit_forest(&x.view(), &y.view(), &hp, SeedStream::root(1)).unwrap();
        assert_eq!(forest.importances().scores, vec![0.0]);
    }

    #[test]
    fn single_split_feature_takes_all_importance() {
        let x = array![[0.0, 1.0], [0.0, 2.0], [0.0, 3.0], [0.0, 4.0]];
        let y = array![0.0, 0.0, 10.0, 10.0];
        let hp = ForestHyperparams {
            n_trees: 1,
            bootstrap: false,
            max_depth: Some(1),
            features_per_split_override: Some(usize::MAX),
            ..Default::default()
        };
        let forest = fit_forest(&x.view(), &y.view(), &hp, SeedStream::root(1)).unwrap();
        let imp = forest.importances();
        assert_eq!(imp.scores, vec![0.0, 1.0]);
    }

    #[test]
    fn leaf_only_trees_average_their_predictions() {
        let model = RandomForestModel {
            trees: vec![
                TreeNode::Leaf {
                    prediction: 1.0,
                    samples: 1,
                },
                TreeNode::Leaf {
                    prediction: 3.0,
                    samples: 1,
                },
            ],
            n_features: 2,
            hyperparams: ForestHyperparams::default(),
            seed: SeedStream::root(0),
        };
        assert_eq!(model.predict(&array![0.0, 0.0].view()).unwrap(), 2.0);
        assert!(model.predict(&array![0.0].view()).is_err());
    }

    #[test]
    fn permuting_columns_permutes_importances() {
        // Full feature scan removes subset randomness; bootstrap is on, and
        // its draws do not depend on feature order.
        let (x, y) = planted_signal(17, 80, 4);
        let hp = ForestHyperparams {
            n_trees: 10,
            features_per_split_override: Some(usize::MAX),
            ..Default::default()
        };
        let perm = [2usize, 0, 3, 1];
        let xp = Array2::from_shape_fn(x.dim(), |(i, j)| x[[i, perm[j]]]);
        let base = fit_forest(&x.view(), &y.view(), &hp, SeedStream::root(17))
            .unwrap()
            .importances();
        let permuted = fit_forest(&xp.view(), &y.view(), &hp, SeedStream::root(17))
            .unwrap()
            .importances();
        for (j, &src) in perm.iter().enumerate() {
            assert!(
                (permuted.scores[j] - base.scores[src]).abs() < 1e-12,
                "column {j} (source {src}): {} vs {}",
                permuted.scores[j],
                base.scores[src]
            );
        }
    }

    #[test]
    fn trees_never_reference_out_of_range_features() {
        let (x, y) = planted_signal(23, 50, 6);
        let forest = fit_forest(
            &x.view(),
            &y.view(),
            &ForestHyperparams::default(),
            SeedStream::root(23),
        )
        .unwrap();
        for tree in &forest.trees {
            if let Some(max) = tree.max_feature_index() {
                assert!(max < forest.n_features);
            }
        }
    }
}
