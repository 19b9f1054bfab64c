//! Step 2: boosted decision trees fitted to one bit's codes.

mod adaboost;
mod stump;
mod tree;

pub use adaboost::{
    fit_hash_function, hash_apply, BoostConfig, BoostedHashFunction, FitReport, StopReason,
    ERROR_FLOOR, LOSS_TOLERANCE,
};
pub use stump::{train_stump, Stump, StumpFit, TIE_TOLERANCE};
pub use tree::{train_tree, DecisionTree, TreeNode, TreeParams};
