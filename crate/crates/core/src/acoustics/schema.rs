//! Feature schemas: ordered `(name, extractor, aggregation)` entries that fix
//! the layout of one dimension's feature vector.
//!
//! Text form, one entry per line:
//!
//! ```text
//! # comment
//! dimension: pathological
//! jitter_local, jitter_local, value
//! f0_std, f0, std
//! ```

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::matrix::DimensionTag;

pub const N_MFCC_COEFFS: usize = 13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown extractor `{0}`")]
    UnknownExtractor(String),
    #[error("unknown aggregation `{0}`")]
    UnknownAggregation(String),
    #[error("entry `{name}`: aggregation `{aggregation}` does not apply to extractor `{extractor}`")]
    IncompatibleAggregation {
        name: String,
        extractor: String,
        aggregation: String,
    },
    #[error("duplicate feature name `{0}`")]
    DuplicateName(String),
    #[error("schema has no entries")]
    Empty,
    #[error("schema text has no `dimension:` line")]
    MissingDimension,
}

/// Source of a frame series or a per-utterance scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Extractor {
    /// Voiced-frame F0 values in Hz.
    F0,
    /// 1 for voiced frames, 0 otherwise.
    Voicing,
    JitterLocal,
    JitterRap,
    JitterPpq5,
    ShimmerLocal,
    ShimmerApq3,
    ShimmerApq5,
    /// Per-voiced-frame HNR in dB.
    Hnr,
    Rms,
    Centroid,
    Flux,
    Rolloff,
    /// MFCC coefficient, 1-based.
    Mfcc(usize),
    DeltaMfcc(usize),
    Delta2Mfcc(usize),
    /// Formant frequency F1–F3, 1-based.
    Formant(usize),
    /// Formant bandwidth B1–B3, 1-based.
    Bandwidth(usize),
    /// |ΔF2|/Δt between consecutive analysed frames.
    F2Velocity,
    Tempo,
    Duration,
}

impl Extractor {
    /// Scalar extractors produce one number per utterance and take the
    /// `value` aggregation; the rest produce frame series.
    pub fn is_scalar(self) -> bool {
        matches!(
            self,
            Extractor::JitterLocal
                | Extractor::JitterRap
                | Extractor::JitterPpq5
                | Extractor::ShimmerLocal
                | Extractor::ShimmerApq3
                | Extractor::ShimmerApq5
                | Extractor::Tempo
                | Extractor::Duration
        )
    }
}

impl fmt::Display for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extractor::F0 => f.write_str("f0"),
            Extractor::Voicing => f.write_str("voicing"),
            Extractor::JitterLocal => f.write_str("jitter_local"),
            Extractor::JitterRap => f.write_str("jitter_rap"),
            Extractor::JitterPpq5 => f.write_str("jitter_ppq5"),
            Extractor::ShimmerLocal => f.write_str("shimmer_local"),
            Extractor::ShimmerApq3 => f.write_str("shimmer_apq3"),
            Extractor::ShimmerApq5 => f.write_str("shimmer_apq5"),
            Extractor::Hnr => f.write_str("hnr"),
            Extractor::Rms => f.write_str("rms"),
            Extractor::Centroid => f.write_str("centroid"),
            Extractor::Flux => f.write_str("flux"),
            Extractor::Rolloff => f.write_str("rolloff"),
            Extractor::Mfcc(i) => write!(f, "mfcc.{i}"),
            Extractor::DeltaMfcc(i) => write!(f, "delta_mfcc.{i}"),
            Extractor::Delta2Mfcc(i) => write!(f, "delta2_mfcc.{i}"),
            Extractor::Formant(i) => write!(f, "formant.{i}"),
            Extractor::Bandwidth(i) => write!(f, "bandwidth.{i}"),
            Extractor::F2Velocity => f.write_str("f2_velocity"),
            Extractor::Tempo => f.write_str("tempo"),
            Extractor::Duration => f.write_str("duration"),
        }
    }
}

impl FromStr for Extractor {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || SchemaError::UnknownExtractor(s.to_string());
        if let Some((base, index)) = s.split_once('.') {
            let i: usize = index.parse().map_err(|_| unknown())?;
            let (ctor, max): (fn(usize) -> Extractor, usize) = match base {
                "mfcc" => (Extractor::Mfcc, N_MFCC_COEFFS),
                "delta_mfcc" => (Extractor::DeltaMfcc, N_MFCC_COEFFS),
                "delta2_mfcc" => (Extractor::Delta2Mfcc, N_MFCC_COEFFS),
                "formant" => (Extractor::Formant, 3),
                "bandwidth" => (Extractor::Bandwidth, 3),
                _ => return Err(unknown()),
            };
            if i == 0 || i > max {
                return Err(unknown());
            }
            return Ok(ctor(i));
        }
        Ok(match s {
            "f0" => Extractor::F0,
            "voicing" => Extractor::Voicing,
            "jitter_local" => Extractor::JitterLocal,
            "jitter_rap" => Extractor::JitterRap,
            "jitter_ppq5" => Extractor::JitterPpq5,
            "shimmer_local" => Extractor::ShimmerLocal,
            "shimmer_apq3" => Extractor::ShimmerApq3,
            "shimmer_apq5" => Extractor::ShimmerApq5,
            "hnr" => Extractor::Hnr,
            "rms" => Extractor::Rms,
            "centroid" => Extractor::Centroid,
            "flux" => Extractor::Flux,
            "rolloff" => Extractor::Rolloff,
            "f2_velocity" => Extractor::F2Velocity,
            "tempo" => Extractor::Tempo,
            "duration" => Extractor::Duration,
            _ => return Err(unknown()),
        })
    }
}

impl From<Extractor> for String {
    fn from(e: Extractor) -> Self {
        e.to_string()
    }
}

impl TryFrom<String> for Extractor {
    type Error = SchemaError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Statistic reducing a frame series (or passing a scalar through).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    /// Population standard deviation.
    Std,
    Min,
    Max,
    Range,
    Median,
    Q1,
    Q3,
    /// Population std over mean.
    Cv,
    /// Scalar pass-through.
    Value,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Std => "std",
            Aggregation::Min => "min",
            Aggregation::Max => "max",
            Aggregation::Range => "range",
            Aggregation::Median => "median",
            Aggregation::Q1 => "q1",
            Aggregation::Q3 => "q3",
            Aggregation::Cv => "cv",
            Aggregation::Value => "value",
        }
    }

    /// Reduce a series. `None` when the series is too short for the
    /// statistic (empty; fewer than two values or zero mean for `cv`).
    pub fn apply(self, series: &[f64]) -> Option<f64> {
        if series.is_empty() {
            return None;
        }
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        let std = || (series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let min = || series.iter().copied().fold(f64::INFINITY, f64::min);
        let max = || series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(match self {
            Aggregation::Mean => mean,
            Aggregation::Std => std(),
            Aggregation::Min => min(),
            Aggregation::Max => max(),
            Aggregation::Range => max() - min(),
            Aggregation::Median => quantile(series, 0.5),
            Aggregation::Q1 => quantile(series, 0.25),
            Aggregation::Q3 => quantile(series, 0.75),
            Aggregation::Cv => {
                if series.len() < 2 || mean == 0.0 {
                    return None;
                }
                std() / mean
            }
            Aggregation::Value => {
                if series.len() != 1 {
                    return None;
                }
                series[0]
            }
        })
    }
}

/// Linear-interpolation quantile of a non-empty slice.
fn quantile(series: &[f64], q: f64) -> f64 {
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregation {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "mean" => Aggregation::Mean,
            "std" => Aggregation::Std,
            "min" => Aggregation::Min,
            "max" => Aggregation::Max,
            "range" => Aggregation::Range,
            "median" => Aggregation::Median,
            "q1" => Aggregation::Q1,
            "q3" => Aggregation::Q3,
            "cv" => Aggregation::Cv,
            "value" => Aggregation::Value,
            _ => return Err(SchemaError::UnknownAggregation(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub extractor: Extractor,
    pub aggregation: Aggregation,
}

impl SchemaEntry {
    fn new(name: impl Into<String>, extractor: Extractor, aggregation: Aggregation) -> Self {
        Self {
            name: name.into(),
            extractor,
            aggregation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    tag: DimensionTag,
    entries: Vec<SchemaEntry>,
}

impl FeatureSchema {
    pub fn new(tag: DimensionTag, entries: Vec<SchemaEntry>) -> Result<Self, SchemaError> {
        if entries.is_empty() {
            return Err(SchemaError::Empty);
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(SchemaError::DuplicateName(e.name.clone()));
            }
            let scalar = e.extractor.is_scalar();
            if scalar != (e.aggregation == Aggregation::Value) {
                return Err(SchemaError::IncompatibleAggregation {
                    name: e.name.clone(),
                    extractor: e.extractor.to_string(),
                    aggregation: e.aggregation.to_string(),
                });
            }
        }
        Ok(Self { tag, entries })
    }

    pub fn tag(&self) -> DimensionTag {
        self.tag
    }

    pub fn entries(&self) -> &[SchemaEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn default_for(tag: DimensionTag) -> Self {
        match tag {
            DimensionTag::Emotional => Self::emotional(),
            DimensionTag::Linguistic => Self::linguistic(),
            DimensionTag::Pathological => Self::pathological(),
        }
    }

    /// Prosody, voice quality, energy and spectral shape: 28 entries.
    pub fn emotional() -> Self {
        use Aggregation::*;
        let mut e = vec![];
        for agg in [Mean, Std, Range, Median, Q1, Q3] {
            e.push(SchemaEntry::new(format!("f0_{agg}"), Extractor::F0, agg));
        }
        e.extend(perturbation_entries());
        for agg in [Mean, Std, Max] {
            e.push(SchemaEntry::new(format!("rms_{agg}"), Extractor::Rms, agg));
        }
        for (label, ex) in [
            ("centroid", Extractor::Centroid),
            ("flux", Extractor::Flux),
            ("rolloff", Extractor::Rolloff),
        ] {
            for agg in [Mean, Std] {
                e.push(SchemaEntry::new(format!("{label}_{agg}"), ex, agg));
            }
        }
        for i in 1..=5 {
            e.push(SchemaEntry::new(format!("mfcc{i}_mean"), Extractor::Mfcc(i), Mean));
        }
        Self::new(DimensionTag::Emotional, e).expect("emotional default schema is valid")
    }

    /// Vocal-tract resonances, cepstrum and tempo: 33 entries.
    pub fn linguistic() -> Self {
        use Aggregation::*;
        let mut e = vec![];
        for k in 1..=3 {
            e.push(SchemaEntry::new(format!("f{k}_mean"), Extractor::Formant(k), Mean));
        }
        for k in 1..=3 {
            e.push(SchemaEntry::new(format!("b{k}_mean"), Extractor::Bandwidth(k), Mean));
        }
        for i in 1..=N_MFCC_COEFFS {
            e.push(SchemaEntry::new(format!("mfcc{i}_mean"), Extractor::Mfcc(i), Mean));
        }
        for i in 1..=N_MFCC_COEFFS {
            e.push(SchemaEntry::new(
                format!("delta2_mfcc{i}_mean"),
                Extractor::Delta2Mfcc(i),
                Mean,
            ));
        }
        e.push(SchemaEntry::new("tempo", Extractor::Tempo, Value));
        Self::new(DimensionTag::Linguistic, e).expect("linguistic default schema is valid")
    }

    /// Perturbation, formant stability and articulation dynamics: 16 entries.
    pub fn pathological() -> Self {
        use Aggregation::*;
        let mut e = perturbation_entries();
        for k in 1..=3 {
            e.push(SchemaEntry::new(format!("cv_f{k}"), Extractor::Formant(k), Cv));
        }
        e.push(SchemaEntry::new("f2_velocity_mean", Extractor::F2Velocity, Mean));
        e.push(SchemaEntry::new("f2_velocity_max", Extractor::F2Velocity, Max));
        e.push(SchemaEntry::new("f0_std", Extractor::F0, Std));
        e.push(SchemaEntry::new("rms_std", Extractor::Rms, Std));
        e.push(SchemaEntry::new("voiced_fraction", Extractor::Voicing, Mean));
        Self::new(DimensionTag::Pathological, e).expect("pathological default schema is valid")
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let mut tag = None;
        let mut entries = vec![];
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("dimension:") {
                let t = rest.trim().parse::<DimensionTag>().map_err(|e| SchemaError::Parse {
                    line: line_no,
                    reason: e.to_string(),
                })?;
                tag = Some(t);
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [name, extractor, aggregation] = fields[..] else {
                return Err(SchemaError::Parse {
                    line: line_no,
                    reason: format!("expected `name, extractor, aggregation`, got {} fields", fields.len()),
                });
            };
            if name.is_empty() {
                return Err(SchemaError::Parse {
                    line: line_no,
                    reason: "empty feature name".into(),
                });
            }
            entries.push(SchemaEntry::new(name, extractor.parse()?, aggregation.parse()?));
        }
        Self::new(tag.ok_or(SchemaError::MissingDimension)?, entries)
    }

    /// Canonical text form; [`FeatureSchema::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = format!("dimension: {}\n", self.tag);
        for e in &self.entries {
            out.push_str(&format!("{}, {}, {}\n", e.name, e.extractor, e.aggregation));
        }
        out
    }

    /// Lower-case hex SHA-256 of the canonical text.
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn perturbation_entries() -> Vec<SchemaEntry> {
    use Aggregation::*;
    vec![
        SchemaEntry::new("jitter_local", Extractor::JitterLocal, Value),
        SchemaEntry::new("jitter_rap", Extractor::JitterRap, Value),
        SchemaEntry::new("jitter_ppq5", Extractor::JitterPpq5, Value),
        SchemaEntry::new("shimmer_local", Extractor::ShimmerLocal, Value),
        SchemaEntry::new("shimmer_apq3", Extractor::ShimmerApq3, Value),
        SchemaEntry::new("shimmer_apq5", Extractor::ShimmerApq5, Value),
        SchemaEntry::new("hnr_mean", Extractor::Hnr, Mean),
        SchemaEntry::new("hnr_std", Extractor::Hnr, Std),
    ]
}
