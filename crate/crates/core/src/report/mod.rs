//! Serializable audit results, cross-result statistics and plot data.

mod emit;
mod kde;
mod types;

use std::path::PathBuf;

use thiserror::Error;

pub use emit::{emit_report, EmbeddingPlot, PlotData};
pub use kde::{kde_2d, KdeConfig, KdeGrid};
pub use types::{
    AuditReport, ConfoundReport, DimensionReport, EmbeddingBlock, Meta, NullBlock, ObservedBlock,
    RawSpaceBlock, StabilityBlock, StageFailure, SummaryBlock, VerdictBlock, TOOL_VERSION,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("need at least {required} values, got {found}")]
    TooFewValues { found: usize, required: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("input is constant")]
    ConstantInput,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot write `{path}`: {reason}")]
    Io { path: PathBuf, reason: String },
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64, ReportError> {
    if x.len() != y.len() {
        return Err(ReportError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(ReportError::TooFewValues {
            found: x.len(),
            required: 3,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ReportError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlations() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let down: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_correlation(&x, &up).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_correlation(&x, &down).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn four_point_value() {
        // Σdxdy = 5.5, Σdx² = 5, Σdy² = 8.75.
        let r = pearson_correlation(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 5.0]).unwrap();
        assert!((r - 5.5 / (5.0f64 * 8.75).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            pearson_correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(ReportError::ConstantInput)
        ));
        assert!(matches!(
            pearson_correlation(&[1.0, 2.0], &[1.0, 2.0]),
            Err(ReportError::TooFewValues { .. })
        ));
        assert!(matches!(
            pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(ReportError::LengthMismatch(3, 2))
        ));
    }
}
