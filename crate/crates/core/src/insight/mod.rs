//! Archetypes from sample clouds: clustering, CART trees, reassignment.

mod cluster;
mod dataset;
mod metrics;
mod tree;

use thiserror::Error;

pub use cluster::{
    auto_gamma, dissimilarity, kmeans, kprototypes, select_k, ClusterExport, ClusterModel, ClusterOptions, KDiagnostics,
    DEFAULT_GAMMA,
};
pub use dataset::Dataset;
pub use metrics::{adjusted_rand_index, silhouette};
pub use tree::{fit_cart, gini, reassign, DecisionTree, TreeNode, TreeOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InsightError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
}
