//! Formant tracking by Burg LPC and polynomial root solving.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::dsp::{self, ms_to_samples};
use super::{AcousticsError, AudioClip};

const ANALYSIS_RATE: u32 = 10_000;
const FRAME_MS: f64 = 25.0;
const HOP_MS: f64 = 10.0;
const PRE_EMPHASIS: f64 = 0.97;
const LPC_ORDER: usize = 10;
const MIN_FORMANT_HZ: f64 = 90.0;
const MAX_FORMANT_HZ: f64 = 4800.0;
const MAX_BANDWIDTH_HZ: f64 = 700.0;

/// The first three formants of one frame; frequencies strictly increasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormantFrame {
    pub f: [f64; 3],
    pub b: [f64; 3],
}

/// Frames for which three admissible formants were found.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FormantTrack {
    pub frame_times: Vec<f64>,
    pub frames: Vec<FormantFrame>,
    pub frames_analysed: usize,
    /// All-zero frames, skipped without analysis.
    pub degenerate_frames: usize,
}

impl FormantTrack {
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frequencies of formant `k` (0-based) over the emitted frames.
    pub fn frequencies(&self, k: usize) -> Vec<f64> {
        self.frames.iter().map(|fr| fr.f[k]).collect()
    }

    pub fn bandwidths(&self, k: usize) -> Vec<f64> {
        self.frames.iter().map(|fr| fr.b[k]).collect()
    }

    /// `|ΔF2| / Δt` between consecutive emitted frames, in Hz/s.
    pub fn f2_velocities(&self) -> Vec<f64> {
        self.frames
            .windows(2)
            .zip(self.frame_times.windows(2))
            .map(|(f, t)| (f[1].f[1] - f[0].f[1]).abs() / (t[1] - t[0]))
            .collect()
    }
}

/// Burg's method. Returns `a` with `a[0] = 1` such that the prediction
/// error is `e[n] = Σ_j a[j]·x[n-j]`, and the final error power.
pub fn burg_lpc(x: &[f64], order: usize) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = x.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64;
    let mut fwd = x.to_vec();
    let mut bwd = x.to_vec();
    for m in 0..order.min(n.saturating_sub(1)) {
        let (mut num, mut den) = (0.0, 0.0);
        for i in (m + 1)..n {
            num += fwd[i] * bwd[i - 1];
            den += fwd[i] * fwd[i] + bwd[i - 1] * bwd[i - 1];
        }
        if den <= 0.0 {
            break;
        }
        let k = -2.0 * num / den;
        let prev = a.clone();
        for j in 1..=m + 1 {
            a[j] = prev[j] + k * prev[m + 1 - j];
        }
        for i in ((m + 1)..n).rev() {
            let f = fwd[i];
            fwd[i] = f + k * bwd[i - 1];
            bwd[i] = bwd[i - 1] + k * f;
        }
        err *= 1.0 - k * k;
    }
    (a, err)
}

/// Admissible `(frequency, bandwidth)` pairs from LPC polynomial roots,
/// sorted by frequency.
pub fn lpc_formants(a: &[f64], fs: f64) -> Vec<(f64, f64)> {
    let p = a.len() - 1;
    if p == 0 {
        return Vec::new();
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        companion[(0, j)] = -a[j + 1] / a[0];
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    let mut out: Vec<(f64, f64)> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im > 0.0)
        .map(|z| {
            let freq = z.im.atan2(z.re) * fs / (2.0 * PI);
            let bw = -(fs / PI) * z.norm().ln();
            (freq, bw)
        })
        .filter(|&(f, bw)| {
            (MIN_FORMANT_HZ..=MAX_FORMANT_HZ).contains(&f) && bw > 0.0 && bw < MAX_BANDWIDTH_HZ
        })
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out.dedup_by(|x, y| x.0 <= y.0);
    out
}

/// F1–F3 and B1–B3 per 25 ms frame (10 ms hop) of the pre-emphasised signal
/// resampled to 10 kHz. Frames with fewer than three admissible roots and
/// all-zero frames are left out.
pub fn estimate_formants(clip: &AudioClip) -> Result<FormantTrack, AcousticsError> {
    let analysed = clip.resampled(ANALYSIS_RATE)?;
    let fs = f64::from(ANALYSIS_RATE);
    let x = analysed.samples();
    let mut emphasised = Vec::with_capacity(x.len());
    emphasised.push(x[0]);
    emphasised.extend(x.windows(2).map(|w| w[1] - PRE_EMPHASIS * w[0]));

    let frame_len = ms_to_samples(FRAME_MS, ANALYSIS_RATE);
    let hop = ms_to_samples(HOP_MS, ANALYSIS_RATE);
    let window = dsp::hamming(frame_len);
    let n_frames = dsp::frame_count(emphasised.len(), frame_len, hop);

    let mut track = FormantTrack {
        frames_analysed: n_frames,
        ..FormantTrack::default()
    };
    let mut frame = vec![0.0; frame_len];
    for i in 0..n_frames {
        let start = i * hop;
        let raw = &emphasised[start..start + frame_len];
        if raw.iter().all(|v| *v == 0.0) {
            track.degenerate_frames += 1;
            continue;
        }
        for ((slot, v), w) in frame.iter_mut().zip(raw).zip(&window) {
            *slot = v * w;
        }
        let (a, _) = burg_lpc(&frame, LPC_ORDER);
        let found = lpc_formants(&a, fs);
        if found.len() < 3 {
            continue;
        }
        track
            .frame_times
            .push((start as f64 + frame_len as f64 / 2.0) / fs);
        track.frames.push(FormantFrame {
            f: [found[0].0, found[1].0, found[2].0],
            b: [found[0].1, found[1].1, found[2].1],
        });
    }
    Ok(track)
}

/// Formant stability and F2 transition speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathologyDynamics {
    pub cv_f1: f64,
    pub cv_f2: f64,
    pub cv_f3: f64,
    pub f2_velocity_mean: f64,
    pub f2_velocity_max: f64,
}

pub fn pathology_dynamics(track: &FormantTrack) -> Result<PathologyDynamics, AcousticsError> {
    if track.frames.len() < 2 {
        return Err(AcousticsError::InsufficientFrames {
            found: track.frames.len(),
            required: 2,
        });
    }
    let cv = |k: usize| {
        let f = track.frequencies(k);
        dsp::std_dev(&f) / dsp::mean(&f)
    };
    let velocities = track.f2_velocities();
    Ok(PathologyDynamics {
        cv_f1: cv(0),
        cv_f2: cv(1),
        cv_f3: cv(2),
        f2_velocity_mean: dsp::mean(&velocities),
        f2_velocity_max: velocities.iter().copied().fold(0.0, f64::max),
    })
}
