//! Greedy best-split regression tree (CART with variance impurity).

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample as sample_indices;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};

use super::forest::ForestHyperparams;

/// A fitted tree node. Internal nodes route `feature <= threshold` left.
#[derive(Clone, Debug)]
pub enum TreeNode {
    Leaf {
        prediction: f64,
        samples: usize,
    },
    Internal {
        feature: usize,
        threshold: f64,
        /// Variance reduction achieved by this split (parent impurity minus
        /// sample-weighted child impurities), always >= 0.
        impurity_decrease: f64,
        samples: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &ArrayView1<f64>) -> f64 {
        match self {
            TreeNode::Leaf { prediction, .. } => *prediction,
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    pub fn samples(&self) -> usize {
        match self {
            TreeNode::Leaf { samples, .. } => *samples,
            TreeNode::Internal { samples, .. } => *samples,
        }
    }

    /// Accumulates sample-count-weighted impurity decreases per feature.
    pub fn accumulate_importance(&self, out: &mut [f64]) {
        if let TreeNode::Internal {
            feature,
            impurity_decrease,
            samples,
            left,
            right,
            ..
        } = self
        {
            out[*feature] += *samples as f64 * impurity_decrease;
            left.accumulate_importance(out);
            right.accumulate_importance(out);
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Internal {
                feature,
                left,
                right,
                ..
            } => [left.max_feature_index(), right.max_feature_index()]
                .into_iter()
                .flatten()
                .chain(std::iter::once(*feature))
                .max(),
        }
    }
}

/// Fits one regression tree on the given rows. The split search scans a
/// uniformly sampled feature subset; candidate thresholds are midpoints
/// between consecutive distinct sorted values; ties in split score break
/// toward the lowest feature index, then the lowest threshold.
pub fn fit_tree(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    hp: &ForestHyperparams,
    rng: &mut ChaCha8Rng,
) -> Result<TreeNode> {
    validate_input(x, y)?;
    let indices: Vec<usize> = (0..x.nrows()).collect();
    Ok(grow(x, y, &indices, hp, rng, 0))
}

pub(crate) fn validate_input(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(CoreError::InvalidArgument("empty training data".into()));
    }
    if x.nrows() != y.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "{} rows vs {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite {
            name: "training data".into(),
            context: "tree fit".into(),
        });
    }
    Ok(())
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Sum of left and right sums of squared deviations (lower is better).
    child_ssd: f64,
}

pub(crate) fn grow(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    indices: &[usize],
    hp: &ForestHyperparams,
    rng: &mut ChaCha8Rng,
    depth: usize,
) -> TreeNode {
    let n = indices.len();
    let (sum, ssd) = sum_and_ssd(y, indices);
    let mean = sum / n as f64;

    let depth_stop = hp.max_depth.is_some_and(|d| depth >= d);
    if depth_stop || n < hp.min_samples_split || ssd <= 0.0 {
        return TreeNode::Leaf {
            prediction: mean,
            samples: n,
        };
    }

    let p = x.ncols();
    let k = hp.features_per_split(p);
    let candidates: Vec<usize> = if k >= p {
        (0..p).collect()
    } else {
        let mut picked = sample_indices(rng, p, k).into_vec();
        picked.sort_unstable();
        picked
    };

    let best = candidates
        .iter()
        .filter_map(|&feature| best_split_on_feature(x, y, indices, feature))
        .fold(None::<Split>, |acc, s| match acc {
            Some(best) if best.child_ssd <= s.child_ssd => Some(best),
            _ => Some(s),
        });

    let Some(split) = best else {
        // Every candidate feature is constant on this node.
        return TreeNode::Leaf {
            prediction: mean,
            samples: n,
        };
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| x[[i, split.feature]] <= split.threshold);
    debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());

    let impurity_decrease = ((ssd - split.child_ssd) / n as f64).max(0.0);
    TreeNode::Internal {
        feature: split.feature,
        threshold: split.threshold,
        impurity_decrease,
        samples: n,
        left: Box::new(grow(x, y, &left_idx, hp, rng, depth + 1)),
        right: Box::new(grow(x, y, &right_idx, hp, rng, depth + 1)),
    }
}

fn sum_and_ssd(y: &ArrayView1<f64>, indices: &[usize]) -> (f64, f64) {
    let n = indices.len() as f64;
    let sum: f64 = indices.iter().map(|&i| y[i]).sum();
    let mean = sum / n;
    let ssd: f64 = indices.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    (sum, ssd)
}

/// Best threshold for one feature by exact scan over sorted values with
/// prefix sums; `None` when the feature is constant on these rows.
fn best_split_on_feature(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    indices: &[usize],
    feature: usize,
) -> Option<Split> {
    let mut pairs: Vec<(f64, f64)> = indices.iter().map(|&i| (x[[i, feature]], y[i])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = pairs.len();
    let total_sum: f64 = pairs.iter().map(|(_, yv)| yv).sum();
    let total_sq: f64 = pairs.iter().map(|(_, yv)| yv * yv).sum();

    let mut best: Option<Split> = None;
    let mut left_sum = 0.0;
    let mut left_sq = 0.0;
    for i in 0..n - 1 {
        left_sum += pairs[i].1;
        left_sq += pairs[i].1 * pairs[i].1;
        if pairs[i].0 == pairs[i + 1].0 {
            continue; // no threshold separates equal values
        }
        let nl = (i + 1) as f64;
        let nr = (n - i - 1) as f64;
        let right_sum = total_sum - left_sum;
        let right_sq = total_sq - left_sq;
        let child_ssd =
            (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
        let child_ssd = child_ssd.max(0.0);
        let threshold = 0.5 * (pairs[i].0 + pairs[i + 1].0);
        let better = match &best {
            None => true,
            Some(b) => child_ssd < b.child_ssd,
        };
        if better {
            best = Some(Split {
                feature,
                threshold,
                child_ssd,
            });
        }
    }
    best
}
