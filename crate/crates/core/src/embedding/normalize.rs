use ndarray::Array2;

use super::EmbeddingError;
use crate::matrix::FeatureMatrix;

/// Column means and population standard deviations used by [`zscore_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns with zero variance, set to all zeros.
    pub zero_variance: Vec<usize>,
}

/// Standardise each column to mean 0 and population std 1.
pub fn zscore_normalize(m: &FeatureMatrix) -> Result<(FeatureMatrix, ZScoreStats), EmbeddingError> {
    let (n, d) = m.values().dim();
    if n < 2 {
        return Err(EmbeddingError::TooFewSamples { found: n, required: 2 });
    }
    let x = m.values();
    let mut out = Array2::<f64>::zeros((n, d));
    let mut stats = ZScoreStats {
        means: Vec::with_capacity(d),
        stds: Vec::with_capacity(d),
        zero_variance: vec![],
    };
    for c in 0..d {
        let col = x.column(c);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        // Spread at rounding level counts as constant.
        let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if std <= 1e-12 * scale.max(f64::MIN_POSITIVE) || std == 0.0 {
            stats.zero_variance.push(c);
        } else {
            for r in 0..n {
                out[[r, c]] = (x[[r, c]] - mean) / std;
            }
        }
        stats.means.push(mean);
        stats.stds.push(std);
    }
    Ok((m.with_values(out)?, stats))
}
