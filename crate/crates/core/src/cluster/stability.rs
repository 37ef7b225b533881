use ndarray::{ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, ClusterResult};
use super::metrics::adjusted_rand_index;
use super::ClusterError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub mean_ari: f64,
    pub per_iteration_ari: Vec<f64>,
    pub b: usize,
    pub subsample_fraction: f64,
}

/// Re-cluster `b` subsamples of `floor(fraction·N)` points drawn without
/// replacement and compare each with the full clustering on the same points.
/// Iteration `i` (1-based) uses seed `seed + i` for both the draw and KMeans.
pub fn bootstrap_stability(
    points: ArrayView2<f64>,
    full: &ClusterResult,
    b: usize,
    fraction: f64,
    seed: u64,
) -> Result<StabilityResult, ClusterError> {
    let n = points.nrows();
    if full.labels.len() != n {
        return Err(ClusterError::LengthMismatch(n, full.labels.len()));
    }
    if b == 0 || !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ClusterError::InvalidParameter(format!(
            "need b > 0 and fraction in (0, 1], got b = {b}, fraction = {fraction}"
        )));
    }
    let k = full.k();
    let m = (fraction * n as f64).floor() as usize;
    if m < k.max(2) {
        return Err(ClusterError::TooFewPoints { n: m, k });
    }
    let per_iteration_ari = (1..=b)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
            idx.sort_unstable();
            let sub = points.select(Axis(0), &idx);
            let result = kmeans(sub.view(), k, full.n_init_used, s)?;
            let reference: Vec<usize> = idx.iter().map(|&j| full.labels[j]).collect();
            adjusted_rand_index(&reference, &result.labels)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(StabilityResult {
        mean_ari: per_iteration_ari.iter().sum::<f64>() / b as f64,
        per_iteration_ari,
        b,
        subsample_fraction: fraction,
    })
}
