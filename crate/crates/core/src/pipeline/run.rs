use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{concatenate, ArrayView2, Axis};

use super::config::{CombinationSpec, RunConfig};
use super::ingest::ingest_dimension;
use super::{derive_seed, PipelineError};
use crate::acoustics::FeatureSchema;
use crate::cluster::{
    bootstrap_stability, calinski_harabasz, davies_bouldin, kmeans, silhouette, ClusterError,
};
use crate::confound::{confound_verdict, overlap, permutation_null, SharedSubspace, MAX_SHARED_DIMS};
use crate::embedding::{
    run_tsne, trustworthiness, zscore_normalize, EmbeddingError, PcaModel, TsneConfig,
};
use crate::matrix::{DimensionTag, FeatureMatrix};
use crate::report::{
    emit_report, kde_2d, pearson_correlation, AuditReport, ConfoundReport, DimensionReport,
    EmbeddingBlock, EmbeddingPlot, KdeConfig, PlotData, RawSpaceBlock, StabilityBlock,
    StageFailure,
};

#[derive(Debug, Clone)]
pub struct CombinationOutput {
    pub report: AuditReport,
    pub plots: PlotData,
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    id: String,
    report: AuditReport,
    plots: PlotData,
    timings: BTreeMap<String, f64>,
}

impl Runner<'_> {
    fn seed(&mut self, stage: &str) -> u64 {
        let s = derive_seed(self.cfg.seed, &self.id, stage);
        self.report.meta.seeds.insert(stage.to_string(), s);
        s
    }

    fn warn(&mut self, msg: impl Into<String>) {
        self.report.meta.warnings.push(msg.into());
    }

    /// Runs a stage, recording its time; a failure is recorded and `None`
    /// returned so the caller can stop.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T, PipelineError>) -> Option<T> {
        let start = Instant::now();
        let out = f();
        self.timings
            .insert(name.to_string(), start.elapsed().as_secs_f64());
        match out {
            Ok(v) => Some(v),
            Err(e) => {
                self.report.meta.failures.push(StageFailure {
                    stage: name.to_string(),
                    error: e.to_string(),
                });
                None
            }
        }
    }

    /// A validity index that may be undefined for the partition at hand.
    fn index(
        &mut self,
        name: &str,
        f: fn(ArrayView2<f64>, &[usize]) -> Result<f64, ClusterError>,
        points: ArrayView2<f64>,
        labels: &[usize],
    ) -> Option<f64> {
        match f(points, labels) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                self.warn(format!("{name}: non-finite value {v}"));
                None
            }
            Err(e) => {
                self.warn(format!("{name}: {e}"));
                None
            }
        }
    }

    fn dimension(&mut self, tag: DimensionTag, input: &Path, schema: &FeatureSchema) -> Option<FeatureMatrix> {
        let cfg = self.cfg;
        let ingested = self.stage(&format!("ingest:{tag}"), || {
            ingest_dimension(input, schema, cfg.sample_rate)
        })?;
        for w in &ingested.warnings {
            self.warn(format!("{tag}: {w}"));
        }
        let (z, stats) = self.stage(&format!("zscore:{tag}"), || {
            Ok(zscore_normalize(&ingested.matrix)?)
        })?;
        let zero_variance_columns: Vec<String> = stats
            .zero_variance
            .iter()
            .map(|&c| z.column_names()[c].clone())
            .collect();
        if !zero_variance_columns.is_empty() {
            self.warn(format!(
                "{tag}: zero-variance columns set to 0: {}",
                zero_variance_columns.join(", ")
            ));
        }
        self.report.dimensions.insert(
            tag,
            DimensionReport {
                n: z.n_samples(),
                n_features: z.n_features(),
                schema_fingerprint: schema.fingerprint(),
                schema: schema.entries().to_vec(),
                imputed_values: ingested.imputed_values,
                zero_variance_columns,
                ..DimensionReport::default()
            },
        );

        let tsne_seed = self.seed(&format!("tsne:{tag}"));
        let embedding = self.stage(&format!("tsne:{tag}"), || {
            Ok(run_tsne(
                &z,
                &TsneConfig {
                    perplexity: cfg.tsne.perplexity,
                    iterations: cfg.tsne.iterations,
                    seed: tsne_seed,
                    ..TsneConfig::default()
                },
            )?)
        })?;
        for w in &embedding.warnings {
            self.warn(format!("{tag}: {w}"));
        }
        let y = embedding.y.clone();

        let km_seed = self.seed(&format!("kmeans:{tag}"));
        let clusters = self.stage(&format!("kmeans:{tag}"), || {
            Ok(kmeans(y.view(), cfg.kmeans.k, cfg.kmeans.n_init, km_seed)?)
        })?;
        let sil = self.index(&format!("{tag}: silhouette"), silhouette, y.view(), &clusters.labels);
        let db = self.index(&format!("{tag}: davies_bouldin"), davies_bouldin, y.view(), &clusters.labels);
        let ch = self.index(
            &format!("{tag}: calinski_harabasz"),
            calinski_harabasz,
            y.view(),
            &clusters.labels,
        );

        let boot_seed = self.seed(&format!("bootstrap:{tag}"));
        let stability = self.stage(&format!("bootstrap:{tag}"), || {
            Ok(bootstrap_stability(
                y.view(),
                &clusters,
                cfg.bootstrap.b,
                cfg.bootstrap.fraction,
                boot_seed,
            )?)
        })?;

        let trust = match trustworthiness(z.values(), &y, cfg.trustworthiness_k) {
            Ok(t) => Some(t),
            Err(e @ EmbeddingError::KTooLarge { .. }) => {
                self.warn(format!("{tag}: trustworthiness: {e}"));
                None
            }
            Err(e) => {
                self.report.meta.failures.push(StageFailure {
                    stage: format!("trustworthiness:{tag}"),
                    error: e.to_string(),
                });
                return None;
            }
        };

        let raw_seed = self.seed(&format!("kmeans_raw:{tag}"));
        let raw_clusters = self.stage(&format!("kmeans_raw:{tag}"), || {
            Ok(kmeans(z.values().view(), cfg.kmeans.k, cfg.kmeans.n_init, raw_seed)?)
        })?;
        let x = z.values().view();
        let raw = RawSpaceBlock {
            silhouette: self.index(&format!("{tag}: raw silhouette"), silhouette, x, &raw_clusters.labels),
            davies_bouldin: self.index(&format!("{tag}: raw davies_bouldin"), davies_bouldin, x, &raw_clusters.labels),
            calinski_harabasz: self.index(
                &format!("{tag}: raw calinski_harabasz"),
                calinski_harabasz,
                x,
                &raw_clusters.labels,
            ),
        };

        let kde_cfg = KdeConfig {
            bandwidth: cfg.kde.bandwidth,
            resolution: cfg.kde.resolution,
            isoline_fraction: cfg.kde.isoline,
        };
        let grid = self.stage(&format!("kde:{tag}"), || Ok(kde_2d(y.view(), &kde_cfg)?))?;
        self.plots.kde.insert(tag, grid);
        self.plots.embeddings.insert(
            tag,
            EmbeddingPlot {
                sample_ids: embedding.sample_ids.clone(),
                y: y.clone(),
                groups: vec![],
            },
        );

        let entry = self.report.dimensions.get_mut(&tag).expect("inserted above");
        entry.silhouette = sil;
        entry.davies_bouldin = db;
        entry.calinski_harabasz = ch;
        entry.stability = Some(StabilityBlock::from(&stability));
        entry.trustworthiness = trust;
        entry.embedding = Some(EmbeddingBlock::from(&embedding));
        entry.raw_space = Some(raw);
        Some(z)
    }

    fn confound(&mut self, path: &FeatureMatrix, ling: &FeatureMatrix) -> Option<()> {
        let cfg = self.cfg;
        let shared = self.stage("confound:subspace", || Ok(SharedSubspace::build(path, ling)?))?;
        let km_seed = self.seed("confound:kmeans");
        let clusters = self.stage("confound:kmeans", || {
            Ok(kmeans(
                shared.projected_ling.view(),
                cfg.kmeans.k,
                cfg.kmeans.n_init,
                km_seed,
            )?)
        })?;
        let observed = self.stage("confound:overlap", || Ok(overlap(&shared, &clusters)?))?;
        if !observed.zero_sigma_clusters.is_empty() {
            self.warn(format!(
                "confound: linguistic clusters with zero spread: {:?}",
                observed.zero_sigma_clusters
            ));
        }
        let null_seed = self.seed("confound:null");
        let null = self.stage("confound:null", || {
            Ok(permutation_null(
                &shared,
                cfg.confound.n_perm,
                cfg.kmeans.k,
                cfg.kmeans.n_init,
                null_seed,
            )?)
        })?;
        let verdict = confound_verdict(&observed, &null, cfg.confound.bounded_threshold);
        self.report.confound = Some(ConfoundReport {
            d_shared: shared.d_shared,
            subspace: format!(
                "per-set PCA to {} components, each component z-scored",
                shared.d_shared
            ),
            observed: (&observed).into(),
            null: (&null).into(),
            verdict: (&verdict).into(),
        });
        Some(())
    }

    /// All three normalized sets in one t-SNE map: each reduced by its own
    /// PCA to a common width and z-scored, then stacked.
    fn pooled(&mut self, sets: &[(DimensionTag, FeatureMatrix)]) {
        let cfg = self.cfg;
        let seed = self.seed("tsne:pooled");
        let start = Instant::now();
        let result = (|| -> Result<EmbeddingPlot, PipelineError> {
            let width = sets
                .iter()
                .map(|(_, m)| m.n_features())
                .min()
                .unwrap_or(0)
                .min(MAX_SHARED_DIMS);
            let mut blocks = vec![];
            let mut ids = vec![];
            let mut groups = vec![];
            for (tag, m) in sets {
                let scores = PcaModel::fit(m.values().view(), width)?.transform(m.values().view());
                let (z, _) = zscore_normalize(&FeatureMatrix::from_values(scores, *tag)?)?;
                blocks.push(z.values().clone());
                ids.extend(m.sample_ids().iter().cloned());
                groups.extend(std::iter::repeat(tag.to_string()).take(m.n_samples()));
            }
            let views: Vec<ArrayView2<f64>> = blocks.iter().map(|b| b.view()).collect();
            let stacked = concatenate(Axis(0), &views).expect("equal widths");
            let names = (0..width).map(|c| format!("pc{c}")).collect();
            let pooled = FeatureMatrix::new(stacked, names, ids.clone(), DimensionTag::Emotional)?;
            let e = run_tsne(
                &pooled,
                &TsneConfig {
                    perplexity: cfg.tsne.perplexity,
                    iterations: cfg.tsne.iterations,
                    seed,
                    ..TsneConfig::default()
                },
            )?;
            Ok(EmbeddingPlot {
                sample_ids: ids,
                y: e.y,
                groups,
            })
        })();
        self.timings
            .insert("tsne:pooled".into(), start.elapsed().as_secs_f64());
        match result {
            Ok(plot) => self.plots.pooled = Some(plot),
            Err(e) => self.warn(format!("pooled embedding skipped: {e}")),
        }
    }

    fn summarize(&mut self) {
        let cells: Vec<(f64, f64)> = self
            .report
            .dimensions
            .values()
            .filter_map(|d| Some((d.silhouette?, d.stability.as_ref()?.mean_ari)))
            .collect();
        if !cells.is_empty() {
            self.report.summary.mean_silhouette =
                Some(cells.iter().map(|c| c.0).sum::<f64>() / cells.len() as f64);
        }
        let (sil, ari): (Vec<f64>, Vec<f64>) = cells.into_iter().unzip();
        match pearson_correlation(&sil, &ari) {
            Ok(r) => self.report.summary.silhouette_stability_r = Some(r),
            Err(e) => self.warn(format!("silhouette-stability correlation: {e}")),
        }
    }
}

/// Audits one combination. Stage failures end the run early and are recorded
/// in `meta.failures`; everything completed before the failure is kept.
pub fn run_combination(
    cfg: &RunConfig,
    combo: &CombinationSpec,
    schemas: &BTreeMap<DimensionTag, FeatureSchema>,
) -> CombinationOutput {
    let start = Instant::now();
    let mut r = Runner {
        cfg,
        id: combo.id.clone(),
        report: AuditReport::new(&combo.id),
        plots: PlotData::default(),
        timings: BTreeMap::new(),
    };
    r.report.meta.master_seed = cfg.seed;

    let mut normalized = vec![];
    let mut complete = true;
    for tag in DimensionTag::ALL {
        let schema = schemas
            .get(&tag)
            .cloned()
            .unwrap_or_else(|| FeatureSchema::default_for(tag));
        match r.dimension(tag, combo.input(tag), &schema) {
            Some(z) => normalized.push((tag, z)),
            None => {
                complete = false;
                break;
            }
        }
    }
    if complete {
        let path = &normalized[2].1;
        let ling = &normalized[1].1;
        complete = r.confound(path, ling).is_some();
    }
    if complete && cfg.pooled_embedding {
        r.pooled(&normalized);
    }
    r.summarize();
    if cfg.record_timings {
        r.timings.insert("total".into(), start.elapsed().as_secs_f64());
        r.report.meta.timings = Some(r.timings);
    }
    CombinationOutput {
        report: r.report,
        plots: r.plots,
    }
}

/// Writes the report and plot files into `dir`.
pub fn write_combination(out: &CombinationOutput, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    Ok(emit_report(&out.report, &out.plots, dir)?)
}
