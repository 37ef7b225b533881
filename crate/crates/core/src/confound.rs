//! Pathological/linguistic overlap in a shared low-dimensional space,
//! calibrated against a label-permutation null.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{kmeans, ClusterError, ClusterResult};
use crate::embedding::{EmbeddingError, PcaModel};
use crate::matrix::FeatureMatrix;

pub const MAX_SHARED_DIMS: usize = 10;
pub const DEFAULT_BOUNDED_THRESHOLD: f64 = 0.21;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfoundError {
    #[error("{set} set has {found} samples; at least {required} needed")]
    TooFewSamples {
        set: &'static str,
        found: usize,
        required: usize,
    },
    #[error("linguistic cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("pathological coordinates have {path} columns but linguistic have {ling}")]
    DimensionMismatch { path: usize, ling: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("{0}")]
    Projection(String),
}

impl From<EmbeddingError> for ConfoundError {
    fn from(e: EmbeddingError) -> Self {
        ConfoundError::Projection(e.to_string())
    }
}

/// Both feature sets in `d_shared` comparable coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedSubspace {
    pub d_shared: usize,
    pub projected_path: Array2<f64>,
    pub projected_ling: Array2<f64>,
    /// Variance captured by each retained component, per set (empty when
    /// built from given coordinates).
    pub path_explained_variance: Vec<f64>,
    pub ling_explained_variance: Vec<f64>,
    /// Projected dimensions with zero variance, left at 0.
    pub path_zero_variance: Vec<usize>,
    pub ling_zero_variance: Vec<usize>,
}

impl SharedSubspace {
    /// Each set is projected by its own PCA onto `min(d_path, d_ling, 10)`
    /// components and every projected dimension is z-scored.
    pub fn build(path: &FeatureMatrix, ling: &FeatureMatrix) -> Result<Self, ConfoundError> {
        let d_shared = path.n_features().min(ling.n_features()).min(MAX_SHARED_DIMS);
        for (set, m) in [("pathological", path), ("linguistic", ling)] {
            if m.n_samples() < d_shared + 1 {
                return Err(ConfoundError::TooFewSamples {
                    set,
                    found: m.n_samples(),
                    required: d_shared + 1,
                });
            }
        }
        let project = |m: &FeatureMatrix| -> Result<(Array2<f64>, Vec<f64>, Vec<usize>), ConfoundError> {
            let pca = PcaModel::fit(m.values().view(), d_shared)?;
            let (z, zero) = zscore_columns(pca.transform(m.values().view()));
            Ok((z, pca.explained_variance, zero))
        };
        let (projected_path, path_explained_variance, path_zero_variance) = project(path)?;
        let (projected_ling, ling_explained_variance, ling_zero_variance) = project(ling)?;
        Ok(Self {
            d_shared,
            projected_path,
            projected_ling,
            path_explained_variance,
            ling_explained_variance,
            path_zero_variance,
            ling_zero_variance,
        })
    }

    /// Uses coordinates that are already comparable, unchanged.
    pub fn from_coordinates(path: Array2<f64>, ling: Array2<f64>) -> Result<Self, ConfoundError> {
        if path.ncols() != ling.ncols() {
            return Err(ConfoundError::DimensionMismatch {
                path: path.ncols(),
                ling: ling.ncols(),
            });
        }
        for (set, m) in [("pathological", &path), ("linguistic", &ling)] {
            if m.nrows() == 0 {
                return Err(ConfoundError::TooFewSamples {
                    set,
                    found: 0,
                    required: 1,
                });
            }
        }
        Ok(Self {
            d_shared: path.ncols(),
            projected_path: path,
            projected_ling: ling,
            path_explained_variance: vec![],
            ling_explained_variance: vec![],
            path_zero_variance: vec![],
            ling_zero_variance: vec![],
        })
    }
}

pub fn build_shared_subspace(
    path: &FeatureMatrix,
    ling: &FeatureMatrix,
) -> Result<SharedSubspace, ConfoundError> {
    SharedSubspace::build(path, ling)
}

fn zscore_columns(mut x: Array2<f64>) -> (Array2<f64>, Vec<usize>) {
    let n = x.nrows() as f64;
    let mut zero = vec![];
    for (c, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
        let mean = col.sum() / n;
        let std = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if std == 0.0 || std <= 1e-12 * scale {
            zero.push(c);
            col.fill(0.0);
        } else {
            col.mapv_inplace(|v| (v - mean) / std);
        }
    }
    (x, zero)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    /// Fraction of pathological points within 2σ of each linguistic centroid.
    pub per_cluster: Vec<f64>,
    pub mean_overlap: f64,
    pub max_overlap: f64,
    pub k_ling: usize,
    /// Clusters with σ = 0, whose overlap is 0.
    pub zero_sigma_clusters: Vec<usize>,
}

/// Overlap of the pathological set with each linguistic cluster.
pub fn overlap(shared: &SharedSubspace, ling_clusters: &ClusterResult) -> Result<OverlapResult, ConfoundError> {
    overlap_of(
        shared.projected_path.view(),
        shared.projected_ling.view(),
        &ling_clusters.labels,
        ling_clusters.k(),
    )
}

/// For cluster j with centroid μ and σ the mean per-dimension population
/// std of its members: the fraction of `path` rows with ‖x − μ‖ < 2σ.
pub fn overlap_of(
    path: ArrayView2<f64>,
    ling: ArrayView2<f64>,
    labels: &[usize],
    k: usize,
) -> Result<OverlapResult, ConfoundError> {
    if labels.len() != ling.nrows() {
        return Err(ClusterError::LengthMismatch(ling.nrows(), labels.len()).into());
    }
    if path.ncols() != ling.ncols() {
        return Err(ConfoundError::DimensionMismatch {
            path: path.ncols(),
            ling: ling.ncols(),
        });
    }
    if path.nrows() == 0 {
        return Err(ConfoundError::TooFewSamples {
            set: "pathological",
            found: 0,
            required: 1,
        });
    }
    let d = ling.ncols();
    let mut per_cluster = Vec::with_capacity(k);
    let mut zero_sigma_clusters = vec![];
    for j in 0..k {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == j).collect();
        if members.is_empty() {
            return Err(ConfoundError::EmptyCluster(j));
        }
        let sub = ling.select(Axis(0), &members);
        let mu = sub.mean_axis(Axis(0)).expect("non-empty");
        let m = members.len() as f64;
        let sigma = (0..d)
            .map(|c| {
                (sub.column(c).iter().map(|v| (v - mu[c]) * (v - mu[c])).sum::<f64>() / m).sqrt()
            })
            .sum::<f64>()
            / d as f64;
        if sigma == 0.0 {
            zero_sigma_clusters.push(j);
            per_cluster.push(0.0);
            continue;
        }
        let radius = 2.0 * sigma;
        let inside = path
            .rows()
            .into_iter()
            .filter(|x| {
                x.iter()
                    .zip(mu.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    < radius
            })
            .count();
        per_cluster.push(inside as f64 / path.nrows() as f64);
    }
    let mean_overlap = per_cluster.iter().sum::<f64>() / k as f64;
    let max_overlap = per_cluster.iter().copied().fold(0.0, f64::max);
    Ok(OverlapResult {
        per_cluster,
        mean_overlap,
        max_overlap,
        k_ling: k,
        zero_sigma_clusters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationNull {
    pub n_perm: usize,
    pub null_values: Vec<f64>,
    pub mean_null: f64,
    pub p5: f64,
    pub p95: f64,
}

/// Mean overlap under random reassignment of pooled rows to groups of the
/// original sizes. Permutation `r` uses seed `seed + r` for the shuffle and
/// for KMeans on the pseudo-linguistic group.
pub fn permutation_null(
    shared: &SharedSubspace,
    n_perm: usize,
    k: usize,
    n_init: usize,
    seed: u64,
) -> Result<PermutationNull, ConfoundError> {
    if n_perm < 2 {
        return Err(ConfoundError::InvalidParameter(format!(
            "n_perm must be at least 2, got {n_perm}"
        )));
    }
    let pool = concatenate(
        Axis(0),
        &[shared.projected_path.view(), shared.projected_ling.view()],
    )
    .map_err(|e| ConfoundError::InvalidParameter(e.to_string()))?;
    let n_path = shared.projected_path.nrows();
    let null_values = (0..n_perm)
        .into_par_iter()
        .map(|r| {
            let s = seed.wrapping_add(r as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut order: Vec<usize> = (0..pool.nrows()).collect();
            order.shuffle(&mut rng);
            let pseudo_path = pool.select(Axis(0), &order[..n_path]);
            let pseudo_ling = pool.select(Axis(0), &order[n_path..]);
            let clusters = kmeans(pseudo_ling.view(), k, n_init, s)?;
            Ok(overlap_of(pseudo_path.view(), pseudo_ling.view(), &clusters.labels, k)?.mean_overlap)
        })
        .collect::<Result<Vec<f64>, ConfoundError>>()?;
    Ok(PermutationNull {
        n_perm,
        mean_null: null_values.iter().sum::<f64>() / n_perm as f64,
        p5: quantile(&null_values, 0.05),
        p95: quantile(&null_values, 0.95),
        null_values,
    })
}

/// Linear-interpolation quantile (position `q·(n − 1)` in sorted order).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfoundVerdict {
    pub exceeds_null: bool,
    pub bounded: bool,
    pub headline: f64,
    pub bounded_threshold: f64,
}

/// Headline is the mean overlap; it exceeds the null when above p95 and is
/// bounded when below `bounded_threshold`.
pub fn confound_verdict(
    obs: &OverlapResult,
    null: &PermutationNull,
    bounded_threshold: f64,
) -> ConfoundVerdict {
    let headline = obs.mean_overlap;
    ConfoundVerdict {
        exceeds_null: headline > null.p95,
        bounded: headline < bounded_threshold,
        headline,
        bounded_threshold,
    }
}
