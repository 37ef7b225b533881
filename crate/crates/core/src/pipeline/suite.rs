use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CombinationSpec, RunConfig};
use super::run::{run_combination, write_combination, CombinationOutput};
use super::PipelineError;
use crate::matrix::DimensionTag;
use crate::report::{pearson_correlation, AuditReport, DimensionReport, TOOL_VERSION};

/// Mean and sample standard deviation over the combinations where a value
/// exists. `sd` is `None` with fewer than two values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
}

impl MetricSummary {
    fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = (n > 1).then(|| {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Self {
            mean: Some(mean),
            sd,
            n,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub silhouette: MetricSummary,
    pub davies_bouldin: MetricSummary,
    pub calinski_harabasz: MetricSummary,
    pub stability: MetricSummary,
    pub trustworthiness: MetricSummary,
}

/// One combination's headline values per dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    pub stability: Option<f64>,
    pub trustworthiness: Option<f64>,
}

impl From<&DimensionReport> for CellMetrics {
    fn from(d: &DimensionReport) -> Self {
        Self {
            silhouette: d.silhouette,
            davies_bouldin: d.davies_bouldin,
            calinski_harabasz: d.calinski_harabasz,
            stability: d.stability.as_ref().map(|s| s.mean_ari),
            trustworthiness: d.trustworthiness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationRow {
    pub combination: String,
    pub partial: bool,
    pub dimensions: BTreeMap<DimensionTag, CellMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustRow {
    pub combination: String,
    pub emotional: Option<f64>,
    pub linguistic: Option<f64>,
    pub pathological: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapPoint {
    pub combination: String,
    pub observed: f64,
    pub null_mean: f64,
    pub p5: f64,
    pub p95: f64,
    pub exceeds_null: bool,
    pub bounded: bool,
}

/// Cross-combination aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub version: String,
    pub master_seed: u64,
    pub rows: Vec<CombinationRow>,
    pub per_dimension: BTreeMap<DimensionTag, DimensionSummary>,
    pub trustworthiness: Vec<TrustRow>,
    pub overlap: Vec<OverlapPoint>,
    /// Pearson r of silhouette against mean bootstrap ARI over every
    /// (dimension, combination) cell where both exist.
    pub silhouette_stability_r: Option<f64>,
    pub correlation_cells: usize,
    pub failed_combinations: Vec<String>,
    pub warnings: Vec<String>,
}

impl SuiteSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary values are finite or null")
    }
}

pub fn summarize(reports: &[AuditReport], master_seed: u64) -> SuiteSummary {
    let mut warnings = vec![];
    let rows: Vec<CombinationRow> = reports
        .iter()
        .map(|r| CombinationRow {
            combination: r.combination.clone(),
            partial: r.is_partial(),
            dimensions: r.dimensions.iter().map(|(t, d)| (*t, d.into())).collect(),
        })
        .collect();

    let mut per_dimension = BTreeMap::new();
    for tag in DimensionTag::ALL {
        let cells: Vec<&CellMetrics> = rows.iter().filter_map(|r| r.dimensions.get(&tag)).collect();
        let collect = |f: fn(&CellMetrics) -> Option<f64>| -> Vec<f64> {
            cells.iter().filter_map(|c| f(c)).collect()
        };
        let s = DimensionSummary {
            silhouette: MetricSummary::of(&collect(|c| c.silhouette)),
            davies_bouldin: MetricSummary::of(&collect(|c| c.davies_bouldin)),
            calinski_harabasz: MetricSummary::of(&collect(|c| c.calinski_harabasz)),
            stability: MetricSummary::of(&collect(|c| c.stability)),
            trustworthiness: MetricSummary::of(&collect(|c| c.trustworthiness)),
        };
        if s.silhouette.n < 2 {
            warnings.push(format!(
                "{tag}: standard deviations need at least two combinations, have {}",
                s.silhouette.n
            ));
        }
        per_dimension.insert(tag, s);
    }

    let trustworthiness = rows
        .iter()
        .map(|r| {
            let t = |tag| r.dimensions.get(&tag).and_then(|c| c.trustworthiness);
            TrustRow {
                combination: r.combination.clone(),
                emotional: t(DimensionTag::Emotional),
                linguistic: t(DimensionTag::Linguistic),
                pathological: t(DimensionTag::Pathological),
            }
        })
        .collect();

    let overlap = reports
        .iter()
        .filter_map(|r| {
            let c = r.confound.as_ref()?;
            Some(OverlapPoint {
                combination: r.combination.clone(),
                observed: c.observed.mean,
                null_mean: c.null.mean,
                p5: c.null.p5,
                p95: c.null.p95,
                exceeds_null: c.verdict.exceeds_null,
                bounded: c.verdict.bounded,
            })
        })
        .collect();

    let (sil, ari): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .flat_map(|r| r.dimensions.values())
        .filter_map(|c| Some((c.silhouette?, c.stability?)))
        .unzip();
    let silhouette_stability_r = match pearson_correlation(&sil, &ari) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("silhouette-stability correlation: {e}"));
            None
        }
    };

    SuiteSummary {
        version: TOOL_VERSION.to_string(),
        master_seed,
        rows,
        per_dimension,
        trustworthiness,
        overlap,
        silhouette_stability_r,
        correlation_cells: sil.len(),
        failed_combinations: reports
            .iter()
            .filter(|r| r.is_partial())
            .map(|r| r.combination.clone())
            .collect(),
        warnings,
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub outputs: Vec<CombinationOutput>,
    pub summary: SuiteSummary,
}

impl SuiteOutcome {
    pub fn any_failed(&self) -> bool {
        !self.summary.failed_combinations.is_empty()
    }
}

/// Runs every combination concurrently and aggregates. A failing
/// combination is reported in its own output and in the summary; it does not
/// affect the others.
pub fn run_suite(cfg: &RunConfig, combos: &[CombinationSpec]) -> Result<SuiteOutcome, PipelineError> {
    cfg.validate()?;
    if combos.is_empty() {
        return Err(PipelineError::Config("no combinations to run".into()));
    }
    let schemas = cfg.schemas_resolved()?;
    let outputs: Vec<CombinationOutput> = combos
        .par_iter()
        .map(|c| run_combination(cfg, c, &schemas))
        .collect();
    let reports: Vec<AuditReport> = outputs.iter().map(|o| o.report.clone()).collect();
    let summary = summarize(&reports, cfg.seed);
    Ok(SuiteOutcome { outputs, summary })
}

/// Writes each combination into `<dir>/<id>/` and `summary.json` into `dir`.
pub fn write_suite(outcome: &SuiteOutcome, dir: &Path) -> Result<(), PipelineError> {
    for out in &outcome.outputs {
        write_combination(out, &dir.join(&out.report.combination))?;
    }
    let path = dir.join("summary.json");
    let mut json = outcome.summary.to_json();
    json.push('\n');
    fs::write(&path, json).map_err(|e| PipelineError::Io {
        path,
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::StabilityBlock;

    fn report(id: &str, sil: [f64; 3], ari: [f64; 3]) -> AuditReport {
        let mut r = AuditReport::new(id);
        for (i, tag) in DimensionTag::ALL.into_iter().enumerate() {
            r.dimensions.insert(
                tag,
                DimensionReport {
                    silhouette: Some(sil[i]),
                    stability: Some(StabilityBlock {
                        mean_ari: ari[i],
                        values: vec![ari[i]],
                        b: 1,
                        subsample_fraction: 0.8,
                    }),
                    trustworthiness: Some(0.9),
                    ..DimensionReport::default()
                },
            );
        }
        r
    }

    #[test]
    fn aggregates_mean_and_sample_sd() {
        let reports = [
            report("a", [0.2, 0.1, 0.3], [0.5, 0.4, 0.7]),
            report("b", [0.4, 0.1, 0.1], [0.9, 0.3, 0.2]),
        ];
        let s = summarize(&reports, 0);
        let e = &s.per_dimension[&DimensionTag::Emotional].silhouette;
        assert!((e.mean.unwrap() - 0.3).abs() < 1e-12);
        assert!((e.sd.unwrap() - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.correlation_cells, 6);
        assert!(s.silhouette_stability_r.unwrap() > 0.0);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn single_combination_has_null_sd_and_warning() {
        let s = summarize(&[report("a", [0.2, 0.1, 0.3], [0.5, 0.4, 0.7])], 0);
        for d in s.per_dimension.values() {
            assert!(d.silhouette.sd.is_none());
            assert!(d.silhouette.mean.is_some());
        }
        assert_eq!(s.warnings.len(), 3);
    }
}
