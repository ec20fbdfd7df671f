//! Convex hulls in general dimension.

pub mod hull;
pub mod linalg;

use thiserror::Error;

pub use hull::{ConvexHull, Facet, HullOptions, Simplex, DEFAULT_GEOM_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("no points given")]
    Empty,
    #[error("points must have dimension {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("degenerate point cloud: affine rank {rank} in {dim} dimensions")]
    Degenerate { rank: usize, dim: usize },
    #[error("hull construction failed: {0}")]
    Numerical(String),
}
