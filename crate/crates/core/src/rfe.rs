//! Recursive feature elimination: fit a forest, drop the least important
//! candidate, repeat until the target count remains.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::forest::{fit_forest, ForestHyperparams, ImportanceVector};
use crate::marketdata::MonthlyPanel;
use crate::rng::SeedStream;

/// Outcome of one sector's backward selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub sector: String,
    /// Kept feature names, ordered by final importance descending.
    pub kept: Vec<String>,
    /// Final importances aligned with `kept`.
    pub kept_scores: Vec<f64>,
    /// Dropped features as (name, elimination round), in drop order.
    pub eliminated: Vec<(String, usize)>,
}

impl FeatureSelection {
    pub fn importances(&self) -> ImportanceVector {
        ImportanceVector {
            scores: self.kept_scores.clone(),
        }
    }
}

/// Runs RFE over candidate columns of `x`. One feature is removed per
/// round; the forest is refit each round from the `(seed, round)` stream.
/// Bottom-score ties drop the highest candidate index.
pub fn rfe_select(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    feature_names: &[String],
    target_k: usize,
    hp: &ForestHyperparams,
    seed: SeedStream,
    sector: impl Into<String>,
) -> Result<FeatureSelection> {
    let p = x.ncols();
    if feature_names.len() != p {
        return Err(CoreError::DimensionMismatch(format!(
            "{} feature names for {} columns",
            feature_names.len(),
            p
        )));
    }
    if target_k == 0 || target_k > p {
        return Err(CoreError::InvalidArgument(format!(
            "target_k {target_k} must be in 1..={p}"
        )));
    }

    let mut remaining: Vec<usize> = (0..p).collect();
    let mut eliminated = Vec::with_capacity(p - target_k);
    let mut round = 0usize;
    loop {
        let sub = Array2::from_shape_fn((x.nrows(), remaining.len()), |(i, j)| {
            x[[i, remaining[j]]]
        });
        let forest = fit_forest(&sub.view(), y, hp, seed.child(round as u64))?;
        let imp = forest.importances();

        if remaining.len() == target_k {
            // Order the survivors by this final fit's importances.
            let mut order: Vec<usize> = (0..remaining.len()).collect();
            order.sort_by(|&a, &b| {
                imp.scores[b]
                    .total_cmp(&imp.scores[a])
                    .then(remaining[a].cmp(&remaining[b]))
            });
            return Ok(FeatureSelection {
                sector: sector.into(),
                kept: order
                    .iter()
                    .map(|&j| feature_names[remaining[j]].clone())
                    .collect(),
                kept_scores: order.iter().map(|&j| imp.scores[j]).collect(),
                eliminated,
            });
        }

        // Least important goes; ties drop the highest candidate index.
        let mut drop_pos = 0usize;
        for j in 1..remaining.len() {
            let s = imp.scores[j];
            let best = imp.scores[drop_pos];
            if s < best || (s == best && remaining[j] > remaining[drop_pos]) {
                drop_pos = j;
            }
        }
        let dropped = remaining.remove(drop_pos);
        eliminated.push((feature_names[dropped].clone(), round));
        round += 1;
    }
}

/// Backward selection for every sector of the panel, each from its own
/// sector-labelled seed stream. `candidates` pairs each sector name with
/// its candidate feature columns.
pub fn select_universe(
    panel: &MonthlyPanel,
    candidates: &[(String, Vec<String>)],
    target_k: usize,
    hp: &ForestHyperparams,
    seed: SeedStream,
) -> Result<Vec<FeatureSelection>> {
    candidates
        .par_iter()
        .map(|(sector, features)| {
            let ticker = panel
                .universe
                .sectors
                .iter()
                .find(|(s, _)| s == sector)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| CoreError::MissingSector(sector.clone()))?;
            let price = panel
                .price(&ticker)
                .ok_or_else(|| CoreError::MissingSector(ticker.clone()))?;
            let n = panel.n_months();
            let mut x = Array2::zeros((n, features.len()));
            for (j, name) in features.iter().enumerate() {
                let col = panel.feature(name).ok_or_else(|| {
                    CoreError::InvalidArgument(format!(
                        "sector '{sector}': candidate feature '{name}' not in panel"
                    ))
                })?;
                for i in 0..n {
                    x[[i, j]] = col.values[i];
                }
            }
            let y = ndarray::Array1::from_vec(price.values.clone());
            rfe_select(
                &x.view(),
                &y.view(),
                features,
                target_k,
                hp,
                seed.child_str(sector),
                sector.clone(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};
    use rand::Rng;

    fn two_signal_data(seed: u64, n: usize, p: usize) -> (Array2<f64>, Array1<f64>) {
        let mut rng = SeedStream::root(seed).rng();
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |i| {
            x[[i, 0]] + 2.0 * x[[i, 1]] + rng.random_range(-0.01..0.01)
        });
        (x, y)
    }

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn no_elimination_when_target_equals_candidates() {
        let (x, y) = two_signal_data(1, 80, 4);
        let sel = rfe_select(
            &x.view(),
            &y.view(),
            &names(4),
            4,
            &ForestHyperparams::default(),
            SeedStream::root(1),
            "s",
        )
        .unwrap();
        assert!(sel.eliminated.is_empty());
        assert_eq!(sel.kept.len(), 4);
        // Ordered by one fitted forest's importances, descending.
        for w in sel.kept_scores.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn recovers_planted_signals_with_strongest_first() {
        let (x, y) = two_signal_data(3, 150, 6);
        let sel = rfe_select(
            &x.view(),
            &y.view(),
            &names(6),
            2,
            &ForestHyperparams::default(),
            SeedStream::root(3),
            "s",
        )
        .unwrap();
        assert_eq!(sel.kept, vec!["x1".to_string(), "x0".to_string()]);
        assert_eq!(sel.eliminated.len(), 4);
    }

    #[test]
    fn target_larger_than_candidates_errors() {
        let (x, y) = two_signal_data(1, 30, 6);
        assert!(rfe_select(
            &x.view(),
            &y.view(),
            &names(6),
            7,
            &ForestHyperparams::default(),
            SeedStream::root(1),
            "s",
        )
        .is_err());
    }

    #[test]
    fn one_feature_removed_per_round() {
        let (x, y) = two_signal_data(9, 100, 7);
        let sel = rfe_select(
            &x.view(),
            &y.view(),
            &names(7),
            3,
            &ForestHyperparams::default(),
            SeedStream::root(9),
            "s",
        )
        .unwrap();
        assert_eq!(sel.eliminated.len(), 4);
        let rounds: Vec<usize> = sel.eliminated.iter().map(|(_, r)| *r).collect();
        assert_eq!(rounds, vec![0, 1, 2, 3]);
        let mut all: Vec<String> = sel.kept.clone();
        all.extend(sel.eliminated.iter().map(|(n, _)| n.clone()));
        all.sort();
        let mut expected = names(7);
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = two_signal_data(12, 90, 6);
        let run = || {
            rfe_select(
                &x.view(),
                &y.view(),
                &names(6),
                3,
                &ForestHyperparams::default(),
                SeedStream::root(77),
                "s",
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn constant_column_never_displaces_informative_features() {
        let (x, y) = two_signal_data(21, 120, 5);
        let sel_base = rfe_select(
            &x.view(),
            &y.view(),
            &names(5),
            2,
            &ForestHyperparams::default(),
            SeedStream::root(21),
            "s",
        )
        .unwrap();

        let mut with_const = Array2::zeros((x.nrows(), 6));
        with_const.slice_mut(ndarray::s![.., ..5]).assign(&x);
        with_const.column_mut(5).fill(7.5);
        let mut names6 = names(5);
        names6.push("constant".into());
        let sel = rfe_select(
            &with_const.view(),
            &y.view(),
            &names6,
            2,
            &ForestHyperparams::default(),
            SeedStream::root(21),
            "s",
        )
        .unwrap();

        let mut a = sel_base.kept.clone();
        let mut b = sel.kept.clone();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(sel.eliminated.iter().any(|(n, _)| n == "constant"));
    }
}
