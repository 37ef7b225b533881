use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::acoustics::SchemaEntry;
use crate::cluster::StabilityResult;
use crate::confound::{ConfoundVerdict, OverlapResult, PermutationNull};
use crate::embedding::Embedding;
use crate::matrix::DimensionTag;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything measured for one corpus combination. Values that could not be
/// computed are `None` and come with an entry in `meta.warnings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub combination: String,
    pub dimensions: BTreeMap<DimensionTag, DimensionReport>,
    pub confound: Option<ConfoundReport>,
    pub summary: SummaryBlock,
    pub meta: Meta,
}

impl AuditReport {
    pub fn new(combination: impl Into<String>) -> Self {
        Self {
            combination: combination.into(),
            dimensions: BTreeMap::new(),
            confound: None,
            summary: SummaryBlock::default(),
            meta: Meta::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite or null")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn is_partial(&self) -> bool {
        !self.meta.failures.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub n: usize,
    pub n_features: usize,
    pub schema_fingerprint: String,
    pub schema: Vec<SchemaEntry>,
    /// Cluster validity of KMeans on the 2-D embedding.
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    pub stability: Option<StabilityBlock>,
    pub trustworthiness: Option<f64>,
    pub embedding: Option<EmbeddingBlock>,
    /// The same indices for KMeans on the z-scored features.
    pub raw_space: Option<RawSpaceBlock>,
    pub imputed_values: usize,
    pub zero_variance_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityBlock {
    pub mean_ari: f64,
    pub values: Vec<f64>,
    pub b: usize,
    pub subsample_fraction: f64,
}

impl From<&StabilityResult> for StabilityBlock {
    fn from(s: &StabilityResult) -> Self {
        Self {
            mean_ari: s.mean_ari,
            values: s.per_iteration_ari.clone(),
            b: s.b,
            subsample_fraction: s.subsample_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingBlock {
    pub perplexity: f64,
    pub iterations: usize,
    pub final_kl: f64,
    pub seed: u64,
}

impl From<&Embedding> for EmbeddingBlock {
    fn from(e: &Embedding) -> Self {
        Self {
            perplexity: e.perplexity,
            iterations: e.iterations_run,
            final_kl: e.final_kl,
            seed: e.seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawSpaceBlock {
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub calinski_harabasz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfoundReport {
    pub d_shared: usize,
    /// How the two sets were brought into common coordinates.
    pub subspace: String,
    pub observed: ObservedBlock,
    pub null: NullBlock,
    pub verdict: VerdictBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedBlock {
    pub per_cluster: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub zero_sigma_clusters: Vec<usize>,
}

impl From<&OverlapResult> for ObservedBlock {
    fn from(o: &OverlapResult) -> Self {
        Self {
            per_cluster: o.per_cluster.clone(),
            mean: o.mean_overlap,
            max: o.max_overlap,
            zero_sigma_clusters: o.zero_sigma_clusters.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullBlock {
    pub n_perm: usize,
    pub mean: f64,
    pub p5: f64,
    pub p95: f64,
    pub values: Vec<f64>,
}

impl From<&PermutationNull> for NullBlock {
    fn from(p: &PermutationNull) -> Self {
        Self {
            n_perm: p.n_perm,
            mean: p.mean_null,
            p5: p.p5,
            p95: p.p95,
            values: p.null_values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictBlock {
    pub exceeds_null: bool,
    pub bounded: bool,
    pub headline: f64,
    pub bounded_threshold: f64,
}

impl From<&ConfoundVerdict> for VerdictBlock {
    fn from(v: &ConfoundVerdict) -> Self {
        Self {
            exceeds_null: v.exceeds_null,
            bounded: v.bounded,
            headline: v.headline,
            bounded_threshold: v.bounded_threshold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryBlock {
    /// Pearson r between embedding silhouette and mean ARI across dimensions.
    pub silhouette_stability_r: Option<f64>,
    pub mean_silhouette: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub master_seed: u64,
    /// Derived seed per stage.
    pub seeds: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
    pub failures: Vec<StageFailure>,
    /// Wall-clock seconds per stage, only when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl Default for Meta {
    fn default() -> Self {
        Self {
            version: TOOL_VERSION.to_string(),
            master_seed: 0,
            seeds: BTreeMap::new(),
            warnings: vec![],
            failures: vec![],
            timings: None,
        }
    }
}
