//! Source/filter acoustic descriptors.
//!
//! Audio is decoded to mono, resampled to a common rate, and analysed with a
//! small set of frame-based extractors (pitch, perturbation, formants, MFCC,
//! energy/spectral statistics, rhythm). [`assemble_features`] turns the
//! extractor outputs into one fixed-length vector per utterance according to
//! a [`FeatureSchema`].

mod audio;
mod dsp;
mod features;
mod formant;
mod pitch;
mod schema;
mod spectral;

use std::path::PathBuf;

use thiserror::Error;

pub use audio::{load_audio, resample, write_wav, AudioClip, DEFAULT_SAMPLE_RATE};
pub use features::{assemble_features, feature_matrix, FeatureVector};
pub use formant::{
    burg_lpc, estimate_formants, lpc_formants, pathology_dynamics, FormantFrame, FormantTrack,
    PathologyDynamics,
};
pub use pitch::{
    estimate_f0, glottal_pulses, perturbation_measures, F0Track, PerturbationMeasures,
    F0_MAX_DEFAULT, F0_MIN_DEFAULT, VOICING_THRESHOLD,
};
pub use schema::{Aggregation, Extractor, FeatureSchema, SchemaEntry, SchemaError};
pub use spectral::{
    delta, mfcc_features, rhythm_features, spectral_energy_stats, MfccFeatures, RhythmFeatures,
    SpectralEnergyStats,
};

#[derive(Debug, Error)]
pub enum AcousticsError {
    #[error("cannot read `{path}`: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("clip of {duration:.4} s is shorter than the {required:.4} s this analysis needs")]
    ClipTooShort { duration: f64, required: f64 },
    #[error("fewer voiced cycles than needed ({found} found, {required} required)")]
    InsufficientVoicing { found: usize, required: usize },
    #[error("fewer frames with formants than needed ({found} found, {required} required)")]
    InsufficientFrames { found: usize, required: usize },
    #[error("invalid analysis parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot write `{path}`: {reason}")]
    WriteFailed { path: PathBuf, reason: String },
}
