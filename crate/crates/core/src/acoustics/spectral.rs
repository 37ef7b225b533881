//! Short-time spectral descriptors: MFCCs with regression deltas,
//! energy/spectral-shape statistics, and onset-based tempo.
//!
//! All of them share one framing: 25 ms Hann frames, 10 ms hop, 512-point FFT.

use std::f64::consts::PI;

use ndarray::Array2;

use super::dsp::{self, ms_to_samples, Spectrogram};
use super::{AcousticsError, AudioClip};

const FRAME_MS: f64 = 25.0;
const HOP_MS: f64 = 10.0;
const FFT_SIZE: usize = 512;
const N_MEL: usize = 26;
const N_MFCC: usize = 13;
const MEL_FMAX: f64 = 8000.0;
const DELTA_WIDTH: usize = 2;
const ROLLOFF_FRACTION: f64 = 0.85;
const LOG_FLOOR: f64 = 1e-10;
const TEMPO_MIN_BPM: f64 = 40.0;
const TEMPO_MAX_BPM: f64 = 220.0;
/// Minimum normalised onset autocorrelation for a tempo to count as detected.
const TEMPO_MIN_PERIODICITY: f64 = 0.1;

struct Framing {
    frame_len: usize,
    hop: usize,
}

impl Framing {
    fn for_rate(rate: u32) -> Self {
        Self {
            frame_len: ms_to_samples(FRAME_MS, rate),
            hop: ms_to_samples(HOP_MS, rate),
        }
    }

    /// Full frames of the signal; a signal shorter than one frame yields a
    /// single zero-padded frame when `pad_short` is set.
    fn frames<'a>(&self, x: &'a [f64], pad_short: bool) -> Vec<&'a [f64]> {
        let n = dsp::frame_count(x.len(), self.frame_len, self.hop);
        if n == 0 && pad_short {
            return vec![x];
        }
        (0..n)
            .map(|i| &x[i * self.hop..i * self.hop + self.frame_len])
            .collect()
    }
}

/// 13 MFCCs per frame plus first and second regression deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccFeatures {
    pub mfcc: Array2<f64>,
    pub delta: Array2<f64>,
    pub delta2: Array2<f64>,
}

impl MfccFeatures {
    pub fn n_frames(&self) -> usize {
        self.mfcc.nrows()
    }
}

pub fn mfcc_features(clip: &AudioClip) -> Result<MfccFeatures, AcousticsError> {
    let rate = clip.sample_rate();
    let framing = Framing::for_rate(rate);
    let frames = framing.frames(clip.samples(), false);
    if frames.is_empty() {
        return Err(AcousticsError::ClipTooShort {
            duration: clip.duration(),
            required: framing.frame_len as f64 / f64::from(rate),
        });
    }
    let fft_size = FFT_SIZE.max(framing.frame_len.next_power_of_two());
    let spec = Spectrogram::new(framing.frame_len, fft_size);
    let bank = mel_filterbank(N_MEL, fft_size, f64::from(rate), MEL_FMAX.min(f64::from(rate) / 2.0));
    let dct = dct_matrix(N_MFCC, N_MEL);

    let mut mfcc = Array2::<f64>::zeros((frames.len(), N_MFCC));
    for (t, frame) in frames.iter().enumerate() {
        let power: Vec<f64> = spec.magnitude(frame).iter().map(|m| m * m).collect();
        let log_mel: Vec<f64> = bank
            .iter()
            .map(|filter| {
                let e: f64 = filter.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(LOG_FLOOR).ln()
            })
            .collect();
        for (c, row) in dct.iter().enumerate() {
            mfcc[[t, c]] = row.iter().zip(&log_mel).map(|(d, l)| d * l).sum();
        }
    }
    let delta_1 = delta(&mfcc);
    let delta_2 = delta(&delta_1);
    Ok(MfccFeatures {
        mfcc,
        delta: delta_1,
        delta2: delta_2,
    })
}

/// Regression delta over ±2 frames with edge replication:
/// `d[t] = Σ_{n=1}^{2} n·(c[t+n] − c[t−n]) / (2·Σ n²)`.
pub fn delta(features: &Array2<f64>) -> Array2<f64> {
    let (frames, dims) = features.dim();
    let denom = 2.0 * (1..=DELTA_WIDTH).map(|n| (n * n) as f64).sum::<f64>();
    let mut out = Array2::<f64>::zeros((frames, dims));
    if frames == 0 {
        return out;
    }
    let last = frames - 1;
    for t in 0..frames {
        for c in 0..dims {
            let mut acc = 0.0;
            for n in 1..=DELTA_WIDTH {
                let ahead = features[[(t + n).min(last), c]];
                let behind = features[[t.saturating_sub(n), c]];
                acc += n as f64 * (ahead - behind);
            }
            out[[t, c]] = acc / denom;
        }
    }
    out
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters evenly spaced on the mel scale over `[0, fmax]`.
fn mel_filterbank(n_filters: usize, fft_size: usize, fs: f64, fmax: f64) -> Vec<Vec<f64>> {
    let mel_max = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_filters + 1) as f64))
        .collect();
    let bins = fft_size / 2 + 1;
    (0..n_filters)
        .map(|m| {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * fs / fft_size as f64;
                    let up = (f - lo) / (center - lo);
                    let down = (hi - f) / (hi - center);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Rows of the orthonormal DCT-II.
fn dct_matrix(n_out: usize, n_in: usize) -> Vec<Vec<f64>> {
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / n_in as f64).sqrt()
            } else {
                (2.0 / n_in as f64).sqrt()
            };
            (0..n_in)
                .map(|m| scale * (PI * k as f64 * (m as f64 + 0.5) / n_in as f64).cos())
                .collect()
        })
        .collect()
}

/// Frame-wise energy and spectral-shape series.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SpectralFrames {
    pub rms: Vec<f64>,
    pub centroid: Vec<f64>,
    /// One value per frame after the first.
    pub flux: Vec<f64>,
    pub rolloff: Vec<f64>,
    /// Half-wave rectified flux, zero for the first frame.
    pub onset: Vec<f64>,
    pub frame_rate: f64,
    /// Frames whose spectrum was all zero.
    pub silent_frames: usize,
}

pub(crate) fn spectral_frames(clip: &AudioClip) -> SpectralFrames {
    let rate = clip.sample_rate();
    let fs = f64::from(rate);
    let framing = Framing::for_rate(rate);
    let frames = framing.frames(clip.samples(), true);
    let fft_size = FFT_SIZE.max(framing.frame_len.next_power_of_two());
    let spec = Spectrogram::new(framing.frame_len, fft_size);
    let bin_hz = fs / spec.fft_size() as f64;

    let mut out = SpectralFrames {
        rms: Vec::with_capacity(frames.len()),
        centroid: Vec::with_capacity(frames.len()),
        flux: Vec::with_capacity(frames.len()),
        rolloff: Vec::with_capacity(frames.len()),
        onset: Vec::with_capacity(frames.len()),
        frame_rate: fs / framing.hop as f64,
        silent_frames: 0,
    };
    let mut previous: Option<Vec<f64>> = None;
    for frame in frames {
        out.rms
            .push((frame.iter().map(|v| v * v).sum::<f64>() / framing.frame_len as f64).sqrt());
        let mag = spec.magnitude(frame);
        let total: f64 = mag.iter().sum();
        if total > 0.0 {
            let weighted: f64 = mag.iter().enumerate().map(|(k, m)| k as f64 * bin_hz * m).sum();
            out.centroid.push(weighted / total);
            let energy: Vec<f64> = mag.iter().map(|m| m * m).collect();
            let threshold = ROLLOFF_FRACTION * energy.iter().sum::<f64>();
            let mut cumulative = 0.0;
            let k = energy
                .iter()
                .position(|e| {
                    cumulative += e;
                    cumulative >= threshold
                })
                .unwrap_or(energy.len() - 1);
            out.rolloff.push(k as f64 * bin_hz);
        } else {
            out.silent_frames += 1;
            out.centroid.push(0.0);
            out.rolloff.push(0.0);
        }
        match &previous {
            Some(prev) => {
                let (sq, pos) = mag.iter().zip(prev).fold((0.0, 0.0), |(sq, pos), (m, p)| {
                    let d = m - p;
                    (sq + d * d, pos + d.max(0.0))
                });
                out.flux.push(sq.sqrt());
                out.onset.push(pos);
            }
            None => out.onset.push(0.0),
        }
        previous = Some(mag);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEnergyStats {
    pub rms_mean: f64,
    pub rms_std: f64,
    pub rms_max: f64,
    pub centroid_mean: f64,
    pub centroid_std: f64,
    pub flux_mean: f64,
    pub flux_std: f64,
    pub rolloff_mean: f64,
    pub rolloff_std: f64,
}

/// RMS, spectral centroid, flux and 85 % roll-off summarised over frames.
/// Silent frames have centroid and roll-off 0.
pub fn spectral_energy_stats(clip: &AudioClip) -> SpectralEnergyStats {
    let s = spectral_frames(clip);
    SpectralEnergyStats {
        rms_mean: dsp::mean(&s.rms),
        rms_std: dsp::std_dev(&s.rms),
        rms_max: s.rms.iter().copied().fold(0.0, f64::max),
        centroid_mean: dsp::mean(&s.centroid),
        centroid_std: dsp::std_dev(&s.centroid),
        flux_mean: dsp::mean(&s.flux),
        flux_std: dsp::std_dev(&s.flux),
        rolloff_mean: dsp::mean(&s.rolloff),
        rolloff_std: dsp::std_dev(&s.rolloff),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhythmFeatures {
    /// Beats per minute, 0 when no periodic onset pattern was found.
    pub tempo: f64,
    pub duration: f64,
    pub tempo_detected: bool,
}

/// Duration plus tempo from the autocorrelation of onset strength,
/// searched over 40–220 BPM.
pub fn rhythm_features(clip: &AudioClip) -> RhythmFeatures {
    let duration = clip.duration();
    let s = spectral_frames(clip);
    let undetected = RhythmFeatures {
        tempo: 0.0,
        duration,
        tempo_detected: false,
    };
    let m = dsp::mean(&s.onset);
    let centred: Vec<f64> = s.onset.iter().map(|o| o - m).collect();
    let lag_min = (60.0 * s.frame_rate / TEMPO_MAX_BPM).ceil() as usize;
    let lag_max = ((60.0 * s.frame_rate / TEMPO_MIN_BPM).floor() as usize)
        .min(centred.len().saturating_sub(2));
    if lag_min < 1 || lag_max <= lag_min {
        return undetected;
    }
    let ac = dsp::autocorrelation(&centred, lag_max + 1);
    if ac[0] <= 0.0 {
        return undetected;
    }
    let best = (lag_min..=lag_max)
        .filter(|&l| ac[l] >= ac[l - 1] && ac[l] >= ac[l + 1])
        .max_by(|&a, &b| ac[a].total_cmp(&ac[b]).then(b.cmp(&a)));
    match best {
        Some(lag) if ac[lag] / ac[0] >= TEMPO_MIN_PERIODICITY => {
            let refined = lag as f64 + dsp::parabolic_offset(ac[lag - 1], ac[lag], ac[lag + 1]);
            RhythmFeatures {
                tempo: 60.0 * s.frame_rate / refined,
                duration,
                tempo_detected: true,
            }
        }
        _ => undetected,
    }
}
