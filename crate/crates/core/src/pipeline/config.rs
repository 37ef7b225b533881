use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::acoustics::{FeatureSchema, DEFAULT_SAMPLE_RATE};
use crate::matrix::DimensionTag;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansParams {
    pub k: usize,
    pub n_init: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self { k: 3, n_init: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapParams {
    pub b: usize,
    pub fraction: f64,
}

impl Default for BootstrapParams {
    fn default() -> Self {
        Self { b: 20, fraction: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfoundParams {
    pub n_perm: usize,
    pub bounded_threshold: f64,
}

impl Default for ConfoundParams {
    fn default() -> Self {
        Self {
            n_perm: 200,
            bounded_threshold: crate::confound::DEFAULT_BOUNDED_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KdeParams {
    pub bandwidth: f64,
    pub isoline: f64,
    pub resolution: usize,
}

impl Default for KdeParams {
    fn default() -> Self {
        Self {
            bandwidth: 0.4,
            isoline: 0.30,
            resolution: 200,
        }
    }
}

/// Inputs for one corpus combination. Each path is either a directory of
/// WAV files or a feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinationSpec {
    pub id: String,
    pub emotional: PathBuf,
    pub linguistic: PathBuf,
    pub pathological: PathBuf,
}

impl CombinationSpec {
    pub fn input(&self, tag: DimensionTag) -> &Path {
        match tag {
            DimensionTag::Emotional => &self.emotional,
            DimensionTag::Linguistic => &self.linguistic,
            DimensionTag::Pathological => &self.pathological,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub sample_rate: u32,
    pub tsne: TsneParams,
    pub kmeans: KMeansParams,
    pub bootstrap: BootstrapParams,
    pub confound: ConfoundParams,
    pub trustworthiness_k: usize,
    pub kde: KdeParams,
    /// Also embed all three dimensions together for plotting.
    pub pooled_embedding: bool,
    pub record_timings: bool,
    /// Per dimension: a built-in schema name or a schema file.
    pub schemas: BTreeMap<DimensionTag, String>,
    /// `<root>/<dimension>/<CORPUS>` layout; every cross-dimension pairing
    /// becomes a combination.
    pub corpus_root: Option<PathBuf>,
    pub combinations: Vec<CombinationSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            sample_rate: DEFAULT_SAMPLE_RATE,
            tsne: TsneParams::default(),
            kmeans: KMeansParams::default(),
            bootstrap: BootstrapParams::default(),
            confound: ConfoundParams::default(),
            trustworthiness_k: 15,
            kde: KdeParams::default(),
            pooled_embedding: true,
            record_timings: false,
            schemas: BTreeMap::new(),
            corpus_root: None,
            combinations: vec![],
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read `{}`: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.out_dir);
        if let Some(root) = &mut self.corpus_root {
            join(root);
        }
        for c in &mut self.combinations {
            join(&mut c.emotional);
            join(&mut c.linguistic);
            join(&mut c.pathological);
        }
        for value in self.schemas.values_mut() {
            if is_builtin_schema(value).is_none() && Path::new(value.as_str()).is_relative() {
                *value = base.join(value.as_str()).display().to_string();
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range checks on every parameter.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if !(self.tsne.perplexity.is_finite() && self.tsne.perplexity > 0.0) {
            return bad(format!("tsne.perplexity must be positive, got {}", self.tsne.perplexity));
        }
        if self.tsne.iterations == 0 {
            return bad("tsne.iterations must be at least 1".into());
        }
        if self.kmeans.k < 2 {
            return bad(format!("kmeans.k must be at least 2, got {}", self.kmeans.k));
        }
        if self.kmeans.n_init == 0 {
            return bad("kmeans.n_init must be at least 1".into());
        }
        if self.bootstrap.b == 0 {
            return bad("bootstrap.b must be at least 1".into());
        }
        if !(self.bootstrap.fraction > 0.0 && self.bootstrap.fraction <= 1.0) {
            return bad(format!("bootstrap.fraction must be in (0, 1], got {}", self.bootstrap.fraction));
        }
        if self.confound.n_perm < 2 {
            return bad(format!("confound.n_perm must be at least 2, got {}", self.confound.n_perm));
        }
        let t = self.confound.bounded_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return bad(format!("confound.bounded_threshold must be in (0, 1], got {t}"));
        }
        if self.trustworthiness_k == 0 {
            return bad("trustworthiness_k must be at least 1".into());
        }
        if !(self.kde.bandwidth.is_finite() && self.kde.bandwidth > 0.0) {
            return bad(format!("kde.bandwidth must be positive, got {}", self.kde.bandwidth));
        }
        if !(self.kde.isoline > 0.0 && self.kde.isoline <= 1.0) {
            return bad(format!("kde.isoline must be in (0, 1], got {}", self.kde.isoline));
        }
        if self.kde.resolution < 2 {
            return bad("kde.resolution must be at least 2".into());
        }
        if self.sample_rate < 8000 {
            return bad(format!("sample_rate must be at least 8000 Hz, got {}", self.sample_rate));
        }
        let mut ids = BTreeSet::new();
        for c in &self.combinations {
            if c.id.trim().is_empty() || c.id.contains(['/', '\\']) {
                return bad(format!("invalid combination id `{}`", c.id));
            }
            if !ids.insert(c.id.as_str()) {
                return bad(format!("duplicate combination id `{}`", c.id));
            }
        }
        self.schemas_resolved()?;
        Ok(())
    }

    /// The schema used for each dimension.
    pub fn schemas_resolved(&self) -> Result<BTreeMap<DimensionTag, FeatureSchema>, PipelineError> {
        let mut out = BTreeMap::new();
        for tag in DimensionTag::ALL {
            let schema = match self.schemas.get(&tag) {
                None => FeatureSchema::default_for(tag),
                Some(name) => match is_builtin_schema(name) {
                    Some(builtin) => FeatureSchema::default_for(builtin),
                    None => {
                        let text = fs::read_to_string(name).map_err(|e| {
                            PipelineError::Config(format!("cannot read schema `{name}`: {e}"))
                        })?;
                        FeatureSchema::parse(&text)
                            .map_err(|e| PipelineError::Config(format!("schema `{name}`: {e}")))?
                    }
                },
            };
            if schema.tag() != tag {
                return Err(PipelineError::Config(format!(
                    "schema for {tag} declares dimension {}",
                    schema.tag()
                )));
            }
            out.insert(tag, schema);
        }
        Ok(out)
    }

    /// Explicit combinations followed by those discovered under
    /// `corpus_root`, which must not repeat an id.
    pub fn resolved_combinations(&self) -> Result<Vec<CombinationSpec>, PipelineError> {
        let mut out = self.combinations.clone();
        if let Some(root) = &self.corpus_root {
            for c in discover_combinations(root)? {
                if out.iter().any(|o| o.id == c.id) {
                    return Err(PipelineError::Config(format!("duplicate combination id `{}`", c.id)));
                }
                out.push(c);
            }
        }
        Ok(out)
    }
}

fn is_builtin_schema(name: &str) -> Option<DimensionTag> {
    name.parse().ok()
}

/// Corpora are the entries of `<root>/<dimension>/`: directories, or `.csv`
/// files named after the corpus. Combinations are every pairing, ordered by
/// emotional, then linguistic, then pathological corpus name, with ids
/// `<EMO>-<LING>-<PATH>`.
pub fn discover_combinations(root: &Path) -> Result<Vec<CombinationSpec>, PipelineError> {
    let mut corpora: BTreeMap<DimensionTag, Vec<(String, PathBuf)>> = BTreeMap::new();
    for tag in DimensionTag::ALL {
        let dir = root.join(tag.as_str());
        let entries = fs::read_dir(&dir).map_err(|_| PipelineError::MissingInput(dir.clone()))?;
        let mut found = vec![];
        for entry in entries.flatten() {
            let path = entry.path();
            let name = if path.is_dir() {
                path.file_name().map(|s| s.to_string_lossy().into_owned())
            } else if has_extension(&path, "csv") {
                path.file_stem().map(|s| s.to_string_lossy().into_owned())
            } else {
                None
            };
            if let Some(name) = name.filter(|n| !n.starts_with('.')) {
                found.push((name, path));
            }
        }
        if found.is_empty() {
            return Err(PipelineError::EmptyCorpus(dir));
        }
        found.sort();
        corpora.insert(tag, found);
    }
    let mut out = vec![];
    for (e, ep) in &corpora[&DimensionTag::Emotional] {
        for (l, lp) in &corpora[&DimensionTag::Linguistic] {
            for (p, pp) in &corpora[&DimensionTag::Pathological] {
                out.push(CombinationSpec {
                    id: format!("{e}-{l}-{p}"),
                    emotional: ep.clone(),
                    linguistic: lp.clone(),
                    pathological: pp.clone(),
                });
            }
        }
    }
    Ok(out)
}

pub(crate) fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .is_some_and(|e| e.to_string_lossy().eq_ignore_ascii_case(ext))
}
