//! Schema-driven assembly of per-utterance feature vectors.

use ndarray::Array2;

use super::formant::{estimate_formants, FormantTrack};
use super::pitch::{estimate_f0, perturbation_measures, F0Track, PerturbationMeasures};
use super::pitch::{F0_MAX_DEFAULT, F0_MIN_DEFAULT};
use super::schema::{Extractor, FeatureSchema};
use super::spectral::{mfcc_features, rhythm_features, spectral_frames, MfccFeatures, SpectralFrames};
use super::{AcousticsError, AudioClip};
use crate::matrix::{FeatureMatrix, MatrixError};

/// One utterance's features in schema order.
///
/// Entries whose extractor failed hold a provisional 0 and are listed in
/// `imputed`; [`feature_matrix`] replaces them with the column mean of the
/// successfully extracted rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub source_id: String,
    pub values: Vec<f64>,
    pub imputed: Vec<usize>,
    pub warnings: Vec<String>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Extractor outputs, each computed at most once per clip.
#[derive(Default)]
struct Cache<'a> {
    clip: Option<&'a AudioClip>,
    pitch: Option<Result<F0Track, String>>,
    perturbation: Option<Result<PerturbationMeasures, String>>,
    formants: Option<Result<FormantTrack, String>>,
    mfcc: Option<Result<MfccFeatures, String>>,
    spectral: Option<SpectralFrames>,
    rhythm: Option<Result<f64, String>>,
}

impl<'a> Cache<'a> {
    fn clip(&self) -> &'a AudioClip {
        self.clip.expect("cache bound to a clip")
    }

    fn pitch(&mut self) -> Result<&F0Track, String> {
        let clip = self.clip();
        self.pitch
            .get_or_insert_with(|| {
                estimate_f0(clip, F0_MIN_DEFAULT, F0_MAX_DEFAULT).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn perturbation(&mut self) -> Result<&PerturbationMeasures, String> {
        if self.perturbation.is_none() {
            let clip = self.clip();
            let result = match self.pitch() {
                Ok(track) => perturbation_measures(clip, track).map_err(|e| e.to_string()),
                Err(e) => Err(e),
            };
            self.perturbation = Some(result);
        }
        self.perturbation
            .as_ref()
            .expect("just filled")
            .as_ref()
            .map_err(Clone::clone)
    }

    fn formants(&mut self) -> Result<&FormantTrack, String> {
        let clip = self.clip();
        self.formants
            .get_or_insert_with(|| estimate_formants(clip).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn mfcc(&mut self) -> Result<&MfccFeatures, String> {
        let clip = self.clip();
        self.mfcc
            .get_or_insert_with(|| mfcc_features(clip).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn spectral(&mut self) -> &SpectralFrames {
        let clip = self.clip();
        self.spectral.get_or_insert_with(|| spectral_frames(clip))
    }

    fn tempo(&mut self) -> Result<f64, String> {
        let clip = self.clip();
        self.rhythm
            .get_or_insert_with(|| {
                let r = rhythm_features(clip);
                if r.tempo_detected {
                    Ok(r.tempo)
                } else {
                    Err("no periodic onset pattern".to_string())
                }
            })
            .clone()
    }

    /// Frame series (or a one-element scalar) for an extractor.
    fn series(&mut self, extractor: Extractor) -> Result<Vec<f64>, String> {
        let mfcc_column = |m: &ndarray::Array2<f64>, i: usize| m.column(i - 1).to_vec();
        Ok(match extractor {
            Extractor::F0 => self.pitch()?.voiced_values(),
            Extractor::Voicing => self
                .pitch()?
                .voicing
                .iter()
                .map(|&v| if v { 1.0 } else { 0.0 })
                .collect(),
            Extractor::Hnr => self.pitch()?.hnr_series(),
            Extractor::JitterLocal => vec![self.perturbation()?.jitter_local],
            Extractor::JitterRap => vec![self.perturbation()?.jitter_rap],
            Extractor::JitterPpq5 => vec![self.perturbation()?.jitter_ppq5],
            Extractor::ShimmerLocal => vec![self.perturbation()?.shimmer_local],
            Extractor::ShimmerApq3 => vec![self.perturbation()?.shimmer_apq3],
            Extractor::ShimmerApq5 => vec![self.perturbation()?.shimmer_apq5],
            Extractor::Rms => self.spectral().rms.clone(),
            Extractor::Centroid => self.spectral().centroid.clone(),
            Extractor::Flux => self.spectral().flux.clone(),
            Extractor::Rolloff => self.spectral().rolloff.clone(),
            Extractor::Mfcc(i) => mfcc_column(&self.mfcc()?.mfcc, i),
            Extractor::DeltaMfcc(i) => mfcc_column(&self.mfcc()?.delta, i),
            Extractor::Delta2Mfcc(i) => mfcc_column(&self.mfcc()?.delta2, i),
            Extractor::Formant(k) => self.formants()?.frequencies(k - 1),
            Extractor::Bandwidth(k) => self.formants()?.bandwidths(k - 1),
            Extractor::F2Velocity => self.formants()?.f2_velocities(),
            Extractor::Tempo => vec![self.tempo()?],
            Extractor::Duration => vec![self.clip().duration()],
        })
    }
}

/// Run the extractors the schema needs (each once) and aggregate every entry.
///
/// An entry whose extractor fails, or whose series is too short for its
/// aggregation, is imputed and gets a warning.
pub fn assemble_features(
    clip: &AudioClip,
    schema: &FeatureSchema,
) -> Result<FeatureVector, AcousticsError> {
    if clip.is_empty() {
        return Err(AcousticsError::EmptyAudio);
    }
    let mut cache = Cache {
        clip: Some(clip),
        ..Cache::default()
    };
    let mut out = FeatureVector {
        source_id: clip.source_id().to_string(),
        values: Vec::with_capacity(schema.len()),
        imputed: vec![],
        warnings: vec![],
    };
    for (i, entry) in schema.entries().iter().enumerate() {
        let value = cache.series(entry.extractor).and_then(|s| {
            entry
                .aggregation
                .apply(&s)
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("{} values are too few for `{}`", s.len(), entry.aggregation))
        });
        match value {
            Ok(v) => out.values.push(v),
            Err(reason) => {
                out.values.push(0.0);
                out.imputed.push(i);
                out.warnings.push(format!(
                    "{}: `{}` imputed ({reason})",
                    out.source_id, entry.name
                ));
            }
        }
    }
    Ok(out)
}

/// Stack feature vectors into a matrix, replacing imputed entries with the
/// mean of that column over the rows where extraction succeeded (0 when no
/// row succeeded). Returns the matrix and the number of imputed cells.
pub fn feature_matrix(
    vectors: &[FeatureVector],
    schema: &FeatureSchema,
) -> Result<(FeatureMatrix, usize), MatrixError> {
    let d = schema.len();
    let n = vectors.len();
    let mut values = Array2::<f64>::zeros((n, d));
    let mut is_imputed = Array2::<bool>::from_elem((n, d), false);
    for (r, v) in vectors.iter().enumerate() {
        if v.values.len() != d {
            return Err(MatrixError::ShapeMismatch {
                rows: n,
                cols: v.values.len(),
                ids: n,
                names: d,
            });
        }
        for (c, &x) in v.values.iter().enumerate() {
            values[[r, c]] = x;
        }
        for &c in &v.imputed {
            is_imputed[[r, c]] = true;
        }
    }
    let mut count = 0;
    for c in 0..d {
        let observed: Vec<f64> = (0..n)
            .filter(|&r| !is_imputed[[r, c]])
            .map(|r| values[[r, c]])
            .collect();
        let fill = if observed.is_empty() {
            0.0
        } else {
            observed.iter().sum::<f64>() / observed.len() as f64
        };
        for r in 0..n {
            if is_imputed[[r, c]] {
                values[[r, c]] = fill;
                count += 1;
            }
        }
    }
    let ids = vectors.iter().map(|v| v.source_id.clone()).collect();
    let matrix = FeatureMatrix::new(values, schema.names(), ids, schema.tag())?;
    Ok((matrix, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DimensionTag;
    use crate::synth::{generate_signal, SignalKind};

    fn voiced_clip() -> AudioClip {
        generate_signal(
            &SignalKind::PulseTrainFiltered {
                f0: 140.0,
                poles: vec![(600.0, 80.0), (1400.0, 90.0), (2600.0, 120.0)],
                amp: 0.6,
                duration: 1.0,
                rate: 16_000,
            },
            3,
        )
        .unwrap()
        .clip
    }

    #[test]
    fn default_schema_lengths() {
        let clip = voiced_clip();
        for (tag, len) in [
            (DimensionTag::Emotional, 28),
            (DimensionTag::Linguistic, 33),
            (DimensionTag::Pathological, 16),
        ] {
            let v = assemble_features(&clip, &FeatureSchema::default_for(tag)).unwrap();
            assert_eq!(v.len(), len);
            assert!(v.values.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn voiced_clip_needs_no_perturbation_imputation() {
        let v = assemble_features(&voiced_clip(), &FeatureSchema::pathological()).unwrap();
        assert!(v.imputed.iter().all(|&i| i >= 8), "{:?}", v.warnings);
    }

    #[test]
    fn silence_imputes_perturbation_entries() {
        let clip = AudioClip::new(vec![0.0; 16_000], 16_000, "quiet").unwrap();
        let schema = FeatureSchema::pathological();
        let v = assemble_features(&clip, &schema).unwrap();
        assert_eq!(v.len(), 16);
        for i in 0..8 {
            assert!(v.imputed.contains(&i), "entry {i} not imputed");
        }
        assert_eq!(v.warnings.len(), v.imputed.len());
        let voiced = schema.names().iter().position(|n| n == "voiced_fraction").unwrap();
        assert!(!v.imputed.contains(&voiced));
        assert_eq!(v.values[voiced], 0.0);
    }

    #[test]
    fn assembly_is_deterministic() {
        let clip = voiced_clip();
        let s = FeatureSchema::linguistic();
        let a = assemble_features(&clip, &s).unwrap();
        let b = assemble_features(&clip, &s).unwrap();
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn imputed_cells_take_column_mean() {
        let schema = FeatureSchema::parse("dimension: emotional\na, f0, mean\nb, rms, mean\n").unwrap();
        let mk = |id: &str, values: Vec<f64>, imputed: Vec<usize>| FeatureVector {
            source_id: id.into(),
            values,
            imputed,
            warnings: vec![],
        };
        let vectors = vec![
            mk("x", vec![1.0, 5.0], vec![]),
            mk("y", vec![3.0, 0.0], vec![1]),
            mk("z", vec![0.0, 0.0], vec![0, 1]),
        ];
        let (m, count) = feature_matrix(&vectors, &schema).unwrap();
        assert_eq!(count, 3);
        assert_eq!(m.values()[[2, 0]], 2.0);
        assert_eq!(m.values()[[1, 1]], 5.0);
        assert_eq!(m.values()[[2, 1]], 5.0);
    }
}
