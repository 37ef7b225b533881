//! End-to-end orchestration: configuration, seeding, ingestion, per-combination
//! audits and cross-combination summaries.

mod config;
mod ingest;
mod run;
mod suite;

use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    discover_combinations, BootstrapParams, CombinationSpec, ConfoundParams, KMeansParams,
    KdeParams, RunConfig, TsneParams,
};
pub use ingest::{ingest_dimension, read_feature_csv, write_feature_csv, Ingested};
pub use run::{run_combination, write_combination, CombinationOutput};
pub use suite::{
    run_suite, summarize, write_suite, CellMetrics, CombinationRow, DimensionSummary,
    MetricSummary, OverlapPoint, SuiteOutcome, SuiteSummary, TrustRow,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("input `{0}` does not exist")]
    MissingInput(PathBuf),
    #[error("`{path}` does not match the schema: {reason}")]
    SchemaMismatch { path: PathBuf, reason: String },
    #[error("no usable samples in `{0}`")]
    EmptyCorpus(PathBuf),
    #[error("cannot access `{path}`: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error(transparent)]
    Acoustics(#[from] crate::acoustics::AcousticsError),
    #[error(transparent)]
    Matrix(#[from] crate::matrix::MatrixError),
    #[error(transparent)]
    Embedding(#[from] crate::embedding::EmbeddingError),
    #[error(transparent)]
    Cluster(#[from] crate::cluster::ClusterError),
    #[error(transparent)]
    Confound(#[from] crate::confound::ConfoundError),
    #[error(transparent)]
    Report(#[from] crate::report::ReportError),
}

/// Stage seed: the first eight bytes (little-endian) of
/// `SHA-256("{master}\0{combination}\0{stage}")`.
pub fn derive_seed(master: u64, combination: &str, stage: &str) -> u64 {
    let digest = Sha256::digest(format!("{master}\0{combination}\0{stage}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = derive_seed(0, "RAV-L2A-UAS", "tsne:emotional");
        assert_eq!(a, derive_seed(0, "RAV-L2A-UAS", "tsne:emotional"));
        assert_ne!(a, derive_seed(1, "RAV-L2A-UAS", "tsne:emotional"));
        assert_ne!(a, derive_seed(0, "RAV-L2A-TOR", "tsne:emotional"));
        assert_ne!(a, derive_seed(0, "RAV-L2A-UAS", "tsne:linguistic"));
        assert_ne!(derive_seed(1, "2x", "s"), derive_seed(12, "x", "s"));
    }
}
