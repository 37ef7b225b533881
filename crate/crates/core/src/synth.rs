//! Seeded synthetic fixtures with known ground truth: Gaussian cluster
//! mixtures with controllable separation and test signals for the acoustic
//! extractors.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::acoustics::{AcousticsError, AudioClip};
use crate::matrix::{DimensionTag, FeatureMatrix, MatrixError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Audio(#[from] AcousticsError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("cannot write `{path}`: {reason}")]
    Io { path: String, reason: String },
}

/// Parameters of an isotropic Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    /// Distance between every pair of cluster centres, in within-cluster
    /// standard deviations.
    pub center_separation: f64,
    pub dimension: usize,
    pub seed: u64,
}

/// Generated points with their generating cluster index.
#[derive(Debug, Clone)]
pub struct Blobs {
    pub matrix: FeatureMatrix,
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
}

/// Unit-variance Gaussian clusters whose centres form a regular simplex with
/// edge `center_separation`, oriented along a seeded random orthonormal frame.
pub fn generate_blobs(spec: &BlobSpec, tag: DimensionTag) -> Result<Blobs, SynthError> {
    let BlobSpec {
        n_clusters: k,
        points_per_cluster: m,
        center_separation: sep,
        dimension: d,
        seed,
    } = *spec;
    if k == 0 || m == 0 || d == 0 {
        return Err(SynthError::InvalidParams("counts must be at least 1".into()));
    }
    if !(sep.is_finite() && sep >= 0.0) {
        return Err(SynthError::InvalidParams("separation must be >= 0".into()));
    }
    if d + 1 < k {
        return Err(SynthError::InvalidParams(format!(
            "{k} equidistant centres need at least {} dimensions",
            k - 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let simplex = simplex_vertices(k);
    let frame = random_orthonormal(d, k.saturating_sub(1), &mut rng);
    // Simplex edges have length sqrt(2) before scaling.
    let scale = sep / std::f64::consts::SQRT_2;
    let mut centers = Array2::<f64>::zeros((k, d));
    for c in 0..k {
        for (a, coord) in simplex[c].iter().enumerate() {
            for j in 0..d {
                centers[[c, j]] += scale * coord * frame[[j, a]];
            }
        }
    }

    let mut values = Array2::<f64>::zeros((k * m, d));
    let mut labels = Vec::with_capacity(k * m);
    for c in 0..k {
        for p in 0..m {
            let row = c * m + p;
            for j in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                values[[row, j]] = centers[[c, j]] + z;
            }
            labels.push(c);
        }
    }
    Ok(Blobs {
        matrix: FeatureMatrix::from_values(values, tag)?,
        labels,
        centers,
    })
}

/// Vertices of a regular simplex with edge sqrt(2), centred, in `k - 1` coordinates.
fn simplex_vertices(k: usize) -> Vec<Vec<f64>> {
    // Centred standard basis e_i - 1/k lives in the hyperplane orthogonal to
    // the all-ones vector; express it in an orthonormal basis of that plane.
    let centred: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { 1.0 } else { 0.0 } - 1.0 / k as f64)
                .collect()
        })
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in centred.iter().take(k.saturating_sub(1)) {
        let mut u = v.clone();
        for b in &basis {
            let dot: f64 = u.iter().zip(b).map(|(x, y)| x * y).sum();
            u.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.push(u.into_iter().map(|x| x / norm).collect());
    }
    centred
        .iter()
        .map(|v| {
            basis
                .iter()
                .map(|b| v.iter().zip(b).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect()
}

/// `d × r` matrix with orthonormal columns (Gram–Schmidt on Gaussian draws).
fn random_orthonormal(d: usize, r: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut frame = Array2::<f64>::zeros((d, r));
    let mut col = 0;
    while col < r {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for prev in 0..col {
            let dot: f64 = (0..d).map(|j| v[j] * frame[[j, prev]]).sum();
            (0..d).for_each(|j| v[j] -= dot * frame[[j, prev]]);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        (0..d).for_each(|j| frame[[j, col]] = v[j] / norm);
        col += 1;
    }
    frame
}

/// Distribution of relative cycle-period perturbations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// Zero-mean Gaussian with this relative standard deviation.
    Gaussian(f64),
    /// Uniform on `[-w, w]` relative to the nominal period.
    Uniform(f64),
}

/// What to synthesise. All durations in seconds, frequencies in Hz.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    Sine {
        freq: f64,
        amp: f64,
        duration: f64,
        rate: u32,
    },
    /// Sine whose individual cycles have perturbed periods.
    JitteredSine {
        freq: f64,
        amp: f64,
        duration: f64,
        rate: u32,
        perturbation: Perturbation,
    },
    /// Unit impulse train at `f0` through an all-pole filter with one
    /// resonance per `(frequency, bandwidth)` pair; normalised to peak `amp`.
    PulseTrainFiltered {
        f0: f64,
        poles: Vec<(f64, f64)>,
        amp: f64,
        duration: f64,
        rate: u32,
    },
    /// Uniform white noise on `[-amp, amp]`.
    Noise { amp: f64, duration: f64, rate: u32 },
    Silence { duration: f64, rate: u32 },
}

/// Ground truth that accompanies a synthetic signal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalTruth {
    /// Exact cycle periods (seconds) of a jittered sine.
    pub periods: Vec<f64>,
    /// `(frequency, bandwidth)` of each resonance of a filtered pulse train.
    pub poles: Vec<(f64, f64)>,
}

impl SignalTruth {
    /// Local jitter computed directly from the recorded period sequence.
    pub fn jitter_local(&self) -> Option<f64> {
        if self.periods.len() < 2 {
            return None;
        }
        let diffs: f64 = self
            .periods
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .sum::<f64>()
            / (self.periods.len() - 1) as f64;
        let mean = self.periods.iter().sum::<f64>() / self.periods.len() as f64;
        Some(diffs / mean)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSignal {
    pub clip: AudioClip,
    pub truth: SignalTruth,
}

pub fn generate_signal(kind: &SignalKind, seed: u64) -> Result<SyntheticSignal, SynthError> {
    let invalid = |msg: &str| Err(SynthError::InvalidParams(msg.to_string()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let check = |duration: f64, rate: u32| -> Result<(usize, f64), SynthError> {
        if rate == 0 || !(duration > 0.0 && duration.is_finite()) {
            return Err(SynthError::InvalidParams(
                "duration and rate must be positive".into(),
            ));
        }
        let n = (duration * f64::from(rate)).round() as usize;
        if n == 0 {
            return Err(SynthError::InvalidParams("signal has no samples".into()));
        }
        Ok((n, f64::from(rate)))
    };
    let valid_amp = |amp: f64| amp.is_finite() && amp >= 0.0;

    let (samples, rate, truth) = match kind {
        &SignalKind::Sine {
            freq,
            amp,
            duration,
            rate,
        } => {
            let (n, fs) = check(duration, rate)?;
            if !(freq > 0.0 && freq < fs / 2.0) || !valid_amp(amp) {
                return invalid("sine needs 0 < freq < Nyquist and amp >= 0");
            }
            let x = (0..n)
                .map(|i| amp * (2.0 * PI * freq * i as f64 / fs).sin())
                .collect();
            (x, rate, SignalTruth::default())
        }
        &SignalKind::JitteredSine {
            freq,
            amp,
            duration,
            rate,
            perturbation,
        } => {
            let (n, fs) = check(duration, rate)?;
            let width = match perturbation {
                Perturbation::Gaussian(w) | Perturbation::Uniform(w) => w,
            };
            if !(freq > 0.0 && freq < fs / 2.0) || !valid_amp(amp) || !(0.0..0.5).contains(&width)
            {
                return invalid("jittered sine needs 0 < freq < Nyquist, amp >= 0, 0 <= jitter < 0.5");
            }
            let nominal = 1.0 / freq;
            let mut periods = Vec::new();
            let mut x = Vec::with_capacity(n);
            let mut start = 0.0;
            let mut period = 0.0;
            for i in 0..n {
                let t = i as f64 / fs;
                while t >= start + period {
                    start += period;
                    let rel = match perturbation {
                        Perturbation::Gaussian(s) => {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            (s * z).clamp(-0.45, 0.45)
                        }
                        Perturbation::Uniform(w) => {
                            if w > 0.0 {
                                rng.random_range(-w..=w)
                            } else {
                                0.0
                            }
                        }
                    };
                    period = nominal * (1.0 + rel);
                    periods.push(period);
                }
                x.push(amp * (2.0 * PI * (t - start) / period).sin());
            }
            // The final cycle is usually cut short by the end of the clip.
            periods.pop();
            (
                x,
                rate,
                SignalTruth {
                    periods,
                    poles: Vec::new(),
                },
            )
        }
        SignalKind::PulseTrainFiltered {
            f0,
            poles,
            amp,
            duration,
            rate,
        } => {
            let (n, fs) = check(*duration, *rate)?;
            if !(*f0 > 0.0) || !valid_amp(*amp) {
                return invalid("pulse train needs f0 > 0 and amp >= 0");
            }
            if poles
                .iter()
                .any(|&(f, bw)| !(f > 0.0 && f < fs / 2.0 && bw > 0.0))
            {
                return invalid("poles need 0 < frequency < Nyquist and bandwidth > 0");
            }
            let period = fs / f0;
            let mut x: Vec<f64> = vec![0.0; n];
            let mut next = 0.0_f64;
            while (next.round() as usize) < n {
                x[next.round() as usize] = 1.0;
                next += period;
            }
            for &(f, bw) in poles {
                let r = (-PI * bw / fs).exp();
                let a1 = 2.0 * r * (2.0 * PI * f / fs).cos();
                let a2 = -r * r;
                let (mut y1, mut y2) = (0.0, 0.0);
                for v in x.iter_mut() {
                    let y = *v + a1 * y1 + a2 * y2;
                    y2 = y1;
                    y1 = y;
                    *v = y;
                }
            }
            let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak > 0.0 {
                x.iter_mut().for_each(|v| *v *= amp / peak);
            }
            (
                x,
                *rate,
                SignalTruth {
                    periods: Vec::new(),
                    poles: poles.clone(),
                },
            )
        }
        &SignalKind::Noise {
            amp,
            duration,
            rate,
        } => {
            let (n, _) = check(duration, rate)?;
            if !valid_amp(amp) {
                return invalid("noise amplitude must be >= 0");
            }
            let x = (0..n)
                .map(|_| {
                    if amp > 0.0 {
                        rng.random_range(-amp..=amp)
                    } else {
                        0.0
                    }
                })
                .collect();
            (x, rate, SignalTruth::default())
        }
        &SignalKind::Silence { duration, rate } => {
            let (n, _) = check(duration, rate)?;
            (vec![0.0; n], rate, SignalTruth::default())
        }
    };
    Ok(SyntheticSignal {
        clip: AudioClip::new(samples, rate, kind_name(kind))?,
        truth,
    })
}

fn kind_name(kind: &SignalKind) -> &'static str {
    match kind {
        SignalKind::Sine { .. } => "sine",
        SignalKind::JitteredSine { .. } => "jittered_sine",
        SignalKind::PulseTrainFiltered { .. } => "pulse_train_filtered",
        SignalKind::Noise { .. } => "noise",
        SignalKind::Silence { .. } => "silence",
    }
}

/// Writes generated points as a feature CSV (`source_id,x0,..`) plus a
/// `label` column holding the generating cluster.
pub fn write_blobs_csv(blobs: &Blobs, path: &Path) -> Result<(), SynthError> {
    let io = |e: csv::Error| SynthError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let m = &blobs.matrix;
    let mut header = vec!["source_id".to_string()];
    header.extend(m.column_names().iter().cloned());
    header.push("label".into());
    w.write_record(&header).map_err(io)?;
    for (i, id) in m.sample_ids().iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(m.values().row(i).iter().map(|v| v.to_string()));
        rec.push(blobs.labels[i].to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| SynthError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}
