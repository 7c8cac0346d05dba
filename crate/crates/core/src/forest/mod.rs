//! Variance-reduction regression trees and a random-forest regressor with
//! mean-decrease-in-impurity feature importances.

pub mod forest;
pub mod tree;

pub use forest::{fit_forest, ForestHyperparams, ImportanceVector, RandomForestModel};
pub use tree::{fit_tree, TreeNode};
