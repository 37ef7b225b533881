//! KMeans, internal validity indices, partition agreement and subsampling
//! stability.

mod kmeans;
mod metrics;
mod stability;

use thiserror::Error;

pub use kmeans::{kmeans, ClusterResult, KMEANS_MAX_ITER, KMEANS_TOLERANCE};
pub use metrics::{
    adjusted_rand_index, calinski_harabasz, davies_bouldin, quality_scores, silhouette,
    QualityScores,
};
pub use stability::{bootstrap_stability, StabilityResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("{n} points cannot form {k} clusters")]
    TooFewPoints { n: usize, k: usize },
    #[error("only one cluster present")]
    SingleCluster,
    #[error("clusters {0} and {1} have identical centroids")]
    IdenticalCentroids(usize, usize),
    #[error("within-cluster scatter is zero")]
    ZeroWithinScatter,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub(crate) fn sq_euclidean(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}
