//! Normalisation, PCA, exact t-SNE and trustworthiness.

mod affinity;
mod normalize;
mod pca;
mod trust;
mod tsne;

use thiserror::Error;

use crate::matrix::MatrixError;

pub use affinity::{compute_affinities, AffinityMatrix};
pub use normalize::{zscore_normalize, ZScoreStats};
pub use pca::{fit_pca, PcaModel};
pub use trust::trustworthiness;
pub use tsne::{kl_divergence, kl_gradient, run_tsne, Embedding, TsneConfig};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("need at least {required} samples, got {found}")]
    TooFewSamples { found: usize, required: usize },
    #[error("perplexity {perplexity} is too large for {n} samples (must be below n/3)")]
    PerplexityTooLarge { perplexity: f64, n: usize },
    #[error("k = {k} neighbours needs k < n/2, but n = {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("requested {k} components from a {n}x{d} matrix")]
    TooManyComponents { k: usize, n: usize, d: usize },
    #[error("original has {original} rows but embedding has {embedded}")]
    RowMismatch { original: usize, embedded: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Squared Euclidean distances between all rows.
pub(crate) fn squared_distances(x: &ndarray::Array2<f64>) -> ndarray::Array2<f64> {
    use rayon::prelude::*;
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (0..n)
                .map(|j| {
                    xi.iter()
                        .zip(x.row(j).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum()
                })
                .collect()
        })
        .collect();
    ndarray::Array2::from_shape_fn((n, n), |(i, j)| rows[i][j])
}
