use ndarray::Array2;
use rayon::prelude::*;

use super::{squared_distances, EmbeddingError};
use crate::matrix::FeatureMatrix;

const MAX_BISECTION_STEPS: usize = 50;
const ENTROPY_TOLERANCE: f64 = 1e-10;
const P_FLOOR: f64 = 1e-12;

/// Symmetric joint probabilities over pairs of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    /// N×N, zero diagonal, off-diagonal entries sum to 1.
    pub p: Array2<f64>,
    pub perplexity_used: f64,
    /// Per-point Gaussian precision `β_i = 1 / (2σ_i²)` on squared distances.
    pub beta: Vec<f64>,
}

/// Gaussian conditional affinities calibrated to `perplexity`, symmetrised
/// and normalised.
pub fn compute_affinities(m: &FeatureMatrix, perplexity: f64) -> Result<AffinityMatrix, EmbeddingError> {
    affinities_from_distances(&squared_distances(m.values()), perplexity)
}

pub(crate) fn affinities_from_distances(
    d2: &Array2<f64>,
    perplexity: f64,
) -> Result<AffinityMatrix, EmbeddingError> {
    let n = d2.nrows();
    if n < 2 {
        return Err(EmbeddingError::TooFewSamples { found: n, required: 2 });
    }
    if !(perplexity > 0.0) {
        return Err(EmbeddingError::InvalidParameter(format!(
            "perplexity must be positive, got {perplexity}"
        )));
    }
    if perplexity >= n as f64 / 3.0 {
        return Err(EmbeddingError::PerplexityTooLarge { perplexity, n });
    }
    let target = perplexity.log2();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d2[[i, j]]).collect();
            calibrate_row(&dist, target)
        })
        .collect();

    let mut conditional = Array2::<f64>::zeros((n, n));
    let mut beta = Vec::with_capacity(n);
    for (i, (row, b)) in rows.into_iter().enumerate() {
        let others = (0..n).filter(|&j| j != i);
        for (j, v) in others.zip(row) {
            conditional[[i, j]] = v;
        }
        beta.push(b);
    }
    let mut p = Array2::<f64>::zeros((n, n));
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = ((conditional[[i, j]] + conditional[[j, i]]) / (2.0 * n as f64)).max(P_FLOOR);
                p[[i, j]] = v;
                total += v;
            }
        }
    }
    p.mapv_inplace(|v| v / total);
    Ok(AffinityMatrix {
        p,
        perplexity_used: perplexity,
        beta,
    })
}

/// Conditional distribution `exp(−β·d)` normalised, with its entropy in bits.
pub(crate) fn conditional_row(dist: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let d_min = dist.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = dist.iter().map(|d| (-beta * (d - d_min)).exp()).collect();
    let sum: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|v| v / sum).collect();
    let h = -p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.log2())
        .sum::<f64>();
    (p, h)
}

/// Bisection on `ln β` so the row entropy matches `target` bits.
fn calibrate_row(dist: &[f64], target: f64) -> (Vec<f64>, f64) {
    let d_max = dist.iter().copied().fold(0.0, f64::max);
    if d_max == 0.0 {
        return conditional_row(dist, 1.0);
    }
    let d_min = dist.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = dist
        .iter()
        .map(|d| d - d_min)
        .filter(|g| *g > 0.0)
        .fold(f64::INFINITY, f64::min);
    let gap = if gap.is_finite() { gap } else { d_max };
    let mut lo = (1e-6 / d_max).ln();
    let mut hi = (50.0 / gap).ln();
    if hi < lo {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut beta = ((lo + hi) / 2.0).exp();
    let mut row = conditional_row(dist, beta).0;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = (lo + hi) / 2.0;
        beta = mid.exp();
        let (p, h) = conditional_row(dist, beta);
        row = p;
        let diff = h - target;
        if diff.abs() < ENTROPY_TOLERANCE {
            break;
        }
        if diff > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (row, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DimensionTag;
    use ndarray::array;

    #[test]
    fn regular_simplex_is_uniform() {
        let x = array![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0]
        ];
        let m = FeatureMatrix::from_values(x, DimensionTag::Emotional).unwrap();
        let a = compute_affinities(&m, 1.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 0.0 } else { 1.0 / 12.0 };
                assert!((a.p[[i, j]] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn perplexity_bound() {
        let x = Array2::from_shape_fn((9, 2), |(r, c)| ((r * 3 + c) as f64).sin());
        let m = FeatureMatrix::from_values(x, DimensionTag::Emotional).unwrap();
        assert!(matches!(
            compute_affinities(&m, 3.0),
            Err(EmbeddingError::PerplexityTooLarge { .. })
        ));
        assert!(compute_affinities(&m, 2.9).is_ok());
    }
}
