//! Centered random forests for imbalanced binary classification: subsampled
//! forests of data-independent dyadic trees, rebalanced variants with an
//! importance-sampling correction, analytic reference quantities and a
//! seeded Monte Carlo harness.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod data;
pub mod error;
pub mod fmt;
pub mod forest;
pub mod harness;
pub mod oracles;
pub mod rebalance;
pub mod rng;
pub mod tree;

pub use data::{calibrate_intercept, class_counts, generate_logistic_dataset, Dataset, LogisticScenario};
pub use error::{Error, Result};
pub use forest::{forest_predict, forest_predict_with, hyperparams_from_exponents, ForestConfig, ForestPrediction, PathSampler, PredictOptions};
pub use rebalance::{draw_rebalanced_sample, is_debias, rb_forest_predict, DebiasInputs, RebalanceMode, RebalanceSpec};
pub use rng::Stream;
pub use tree::{build_tree, sample_query_path, tree_predict, CenteredTree, LeafCell};
