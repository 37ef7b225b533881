use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use disaudit::acoustics::FeatureSchema;
use disaudit::matrix::DimensionTag;
use disaudit::pipeline::{
    derive_seed, ingest_dimension, run_suite, write_feature_csv, write_suite, CombinationSpec,
    PipelineError, RunConfig,
};
use disaudit::synth::{generate_blobs, write_blobs_csv, BlobSpec};

#[derive(Parser)]
#[command(name = "disaudit", version, about = "Geometric disentanglement audit of speech feature sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract a feature CSV from a directory of WAV files.
    Extract(ExtractArgs),
    /// Audit one combination.
    Audit(RunArgs),
    /// Audit many combinations and summarise them.
    Suite(RunArgs),
    /// Write a synthetic corpus layout with a matching config.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Directory of WAV files.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dimension: DimensionTag,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Built-in schema name or schema file; defaults to the dimension's schema.
    #[arg(long)]
    schema: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sample_rate: Option<u32>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to these combination ids (repeatable).
    #[arg(long = "combination")]
    combinations: Vec<String>,
    #[arg(long)]
    corpus_root: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    bootstrap_b: Option<usize>,
    #[arg(long)]
    bootstrap_fraction: Option<f64>,
    #[arg(long)]
    n_perm: Option<usize>,
    #[arg(long)]
    bounded_threshold: Option<f64>,
    #[arg(long)]
    trust_k: Option<usize>,
    #[arg(long)]
    kde_bandwidth: Option<f64>,
    #[arg(long)]
    kde_isoline: Option<f64>,
    #[arg(long)]
    kde_resolution: Option<usize>,
    #[arg(long)]
    sample_rate: Option<u32>,
    /// Record per-stage wall-clock times in each report.
    #[arg(long)]
    timings: bool,
    /// Skip the pooled three-dimension embedding.
    #[arg(long)]
    no_pooled: bool,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        fn set<T: Copy>(dst: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *dst = v;
            }
        }
        set(&mut c.tsne.perplexity, self.perplexity);
        set(&mut c.tsne.iterations, self.iterations);
        set(&mut c.kmeans.k, self.k);
        set(&mut c.kmeans.n_init, self.n_init);
        set(&mut c.bootstrap.b, self.bootstrap_b);
        set(&mut c.bootstrap.fraction, self.bootstrap_fraction);
        set(&mut c.confound.n_perm, self.n_perm);
        set(&mut c.confound.bounded_threshold, self.bounded_threshold);
        set(&mut c.trustworthiness_k, self.trust_k);
        set(&mut c.kde.bandwidth, self.kde_bandwidth);
        set(&mut c.kde.isoline, self.kde_isoline);
        set(&mut c.kde.resolution, self.kde_resolution);
        set(&mut c.sample_rate, self.sample_rate);
        c.record_timings |= self.timings;
        if self.no_pooled {
            c.pooled_embedding = false;
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpora per dimension; the suite has this many cubed combinations.
    #[arg(long, default_value_t = 2)]
    corpora: usize,
    #[arg(long, default_value_t = 100)]
    points_per_cluster: usize,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 10)]
    dimension: usize,
    /// Centre separations for emotional, linguistic and pathological sets.
    #[arg(long, num_args = 3, value_delimiter = ',', default_values_t = [8.0, 2.0, 4.0])]
    separations: Vec<f64>,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Extract(a) => extract(a),
        Command::Audit(a) => run(a, true),
        Command::Suite(a) => run(a, false),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("DISAUDIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("DISAUDIT_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn extract(a: ExtractArgs) -> Result<u8, Failure> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(rate) = a.sample_rate {
        cfg.sample_rate = rate;
    }
    if let Some(s) = a.schema {
        cfg.schemas.insert(a.dimension, s);
    }
    cfg.validate()?;
    let schema: FeatureSchema = cfg.schemas_resolved()?.remove(&a.dimension).expect("every dimension resolved");
    if !a.input.is_dir() {
        return Err(Failure::Config(format!("`{}` is not a directory", a.input.display())));
    }
    let ingested = ingest_dimension(&a.input, &schema, cfg.sample_rate)?;
    for w in &ingested.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::Run(format!("{}: {e}", parent.display())))?;
    }
    write_feature_csv(&ingested.matrix, &a.out)?;
    println!(
        "{}: {} samples x {} features ({} imputed values)",
        a.out.display(),
        ingested.matrix.n_samples(),
        ingested.matrix.n_features(),
        ingested.imputed_values
    );
    Ok(0)
}

fn run(a: RunArgs, single: bool) -> Result<u8, Failure> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(out) = a.out {
        cfg.out_dir = out;
    }
    if let Some(root) = a.corpus_root {
        cfg.corpus_root = Some(root);
    }
    a.overrides.apply(&mut cfg);
    cfg.validate()?;

    let all = cfg.resolved_combinations()?;
    let combos: Vec<CombinationSpec> = if a.combinations.is_empty() {
        all
    } else {
        a.combinations
            .iter()
            .map(|id| {
                all.iter()
                    .find(|c| &c.id == id)
                    .cloned()
                    .ok_or_else(|| Failure::Config(format!("unknown combination `{id}`")))
            })
            .collect::<Result<_, _>>()?
    };
    if single && combos.len() != 1 {
        return Err(Failure::Config(format!(
            "audit needs exactly one combination, {} configured; use --combination",
            combos.len()
        )));
    }

    let outcome = run_suite(&cfg, &combos)?;
    if single {
        let out = &outcome.outputs[0];
        disaudit::pipeline::write_combination(out, &cfg.out_dir)?;
    } else {
        write_suite(&outcome, &cfg.out_dir)?;
    }
    for out in &outcome.outputs {
        let r = &out.report;
        let status = if r.is_partial() { "partial" } else { "ok" };
        println!("{}: {status}", r.combination);
        for f in &r.meta.failures {
            eprintln!("  {} failed: {}", f.stage, f.error);
        }
    }
    println!("wrote {}", cfg.out_dir.display());
    Ok(if outcome.any_failed() { 1 } else { 0 })
}

fn synth(a: SynthArgs) -> Result<u8, Failure> {
    if a.corpora == 0 {
        return Err(Failure::Config("--corpora must be at least 1".into()));
    }
    let io = |p: &Path, e: std::io::Error| Failure::Run(format!("{}: {e}", p.display()));
    let mut cfg = RunConfig {
        seed: a.seed,
        corpus_root: Some(PathBuf::from("data")),
        ..RunConfig::default()
    };
    let schema_dir = a.out.join("schemas");
    fs::create_dir_all(&schema_dir).map_err(|e| io(&schema_dir, e))?;
    for (tag, sep) in DimensionTag::ALL.into_iter().zip(a.separations.iter().copied()) {
        let dir = a.out.join("data").join(tag.as_str());
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        let prefix = match tag {
            DimensionTag::Emotional => "SE",
            DimensionTag::Linguistic => "SL",
            DimensionTag::Pathological => "SP",
        };
        for i in 1..=a.corpora {
            let name = format!("{prefix}{i}");
            let spec = BlobSpec {
                n_clusters: a.clusters,
                points_per_cluster: a.points_per_cluster,
                center_separation: sep,
                dimension: a.dimension,
                seed: derive_seed(a.seed, "synth", &format!("{tag}/{name}")),
            };
            let blobs = generate_blobs(&spec, tag).map_err(|e| Failure::Config(e.to_string()))?;
            let path = dir.join(format!("{name}.csv"));
            write_blobs_csv(&blobs, &path).map_err(|e| Failure::Run(e.to_string()))?;
        }
        let mut text = format!("dimension: {tag}\n");
        for c in 0..a.dimension {
            text.push_str(&format!("x{c}, mfcc.{}, mean\n", c % 13 + 1));
        }
        let path = schema_dir.join(format!("{tag}.schema"));
        fs::write(&path, text).map_err(|e| io(&path, e))?;
        cfg.schemas.insert(tag, format!("schemas/{tag}.schema"));
    }
    let path = a.out.join("config.toml");
    fs::write(&path, cfg.to_toml()).map_err(|e| io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(0)
}
