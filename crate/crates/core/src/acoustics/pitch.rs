//! Autocorrelation pitch tracking and cycle-to-cycle perturbation.
//!
//! Each 40 ms frame is mean-removed, Hann-windowed and autocorrelated; the
//! autocorrelation is divided by that of the window so a perfectly periodic
//! signal scores 1 at its period. The smallest lag whose interpolated peak is
//! within 90 % of the strongest candidate wins, which suppresses octave-down
//! errors. Jitter and shimmer are measured on individual glottal cycles,
//! delimited by positive-going zero crossings chosen to follow the frame F0.

use super::dsp::{self, ms_to_samples};
use super::{AcousticsError, AudioClip};

pub const F0_MIN_DEFAULT: f64 = 75.0;
pub const F0_MAX_DEFAULT: f64 = 500.0;
pub const VOICING_THRESHOLD: f64 = 0.45;

const WINDOW_MS: f64 = 40.0;
const HOP_MS: f64 = 10.0;
/// Frames whose peak is below this fraction of the clip peak are silent.
const SILENCE_THRESHOLD: f64 = 0.03;
/// A later (shorter-lag) candidate wins when it reaches this share of the best.
const OCTAVE_RATIO: f64 = 0.9;
/// HNR saturates at 60 dB.
const MAX_PERIODICITY: f64 = 1.0 - 1e-6;

/// Frame-wise F0 estimate. `f0[i]` is `Some` exactly when `voicing[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    pub frame_times: Vec<f64>,
    pub f0: Vec<Option<f64>>,
    pub voicing: Vec<bool>,
    /// Normalised autocorrelation at the chosen lag (0 for silent frames).
    pub strength: Vec<f64>,
    pub hop: f64,
}

impl F0Track {
    pub fn voiced_values(&self) -> Vec<f64> {
        self.f0.iter().flatten().copied().collect()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.voicing.is_empty() {
            return 0.0;
        }
        self.voicing.iter().filter(|v| **v).count() as f64 / self.voicing.len() as f64
    }

    /// Per voiced frame harmonics-to-noise ratio in dB.
    pub fn hnr_series(&self) -> Vec<f64> {
        self.voicing
            .iter()
            .zip(&self.strength)
            .filter(|(v, _)| **v)
            .map(|(_, &r)| {
                let r = r.clamp(1e-9, MAX_PERIODICITY);
                10.0 * (r / (1.0 - r)).log10()
            })
            .collect()
    }

    /// Length of the longest run of consecutive voiced frames.
    pub fn longest_voiced_run(&self) -> usize {
        let mut best = 0;
        let mut run = 0;
        for &v in &self.voicing {
            run = if v { run + 1 } else { 0 };
            best = best.max(run);
        }
        best
    }

    fn nearest_frame(&self, t: f64) -> usize {
        let first = self.frame_times.first().copied().unwrap_or(0.0);
        let idx = ((t - first) / self.hop).round().max(0.0) as usize;
        idx.min(self.frame_times.len().saturating_sub(1))
    }
}

/// Frame-wise autocorrelation pitch estimate (40 ms window, 10 ms hop).
pub fn estimate_f0(clip: &AudioClip, f0_min: f64, f0_max: f64) -> Result<F0Track, AcousticsError> {
    let rate = clip.sample_rate();
    let fs = f64::from(rate);
    if !(f0_min > 0.0 && f0_min < f0_max && f0_max < fs / 2.0) {
        return Err(AcousticsError::InvalidParameter(format!(
            "pitch range [{f0_min}, {f0_max}] Hz is invalid at {rate} Hz"
        )));
    }
    let required = 2.0 / f0_min;
    if clip.duration() < required {
        return Err(AcousticsError::ClipTooShort {
            duration: clip.duration(),
            required,
        });
    }

    let win = ms_to_samples(WINDOW_MS, rate);
    let hop = ms_to_samples(HOP_MS, rate);
    let samples = clip.samples();
    let n_frames = dsp::frame_count(samples.len(), win, hop).max(1);

    let min_lag = ((fs / f0_max).floor() as usize).max(2);
    let max_lag = ((fs / f0_min).ceil() as usize).min(win - 2);
    let window = dsp::hann(win);
    let window_ac = dsp::autocorrelation(&window, max_lag + 1);

    let global_peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));

    let mut track = F0Track {
        frame_times: Vec::with_capacity(n_frames),
        f0: Vec::with_capacity(n_frames),
        voicing: Vec::with_capacity(n_frames),
        strength: Vec::with_capacity(n_frames),
        hop: hop as f64 / fs,
    };
    let mut frame = vec![0.0; win];
    for i in 0..n_frames {
        let start = i * hop;
        let end = (start + win).min(samples.len());
        frame.iter_mut().for_each(|v| *v = 0.0);
        frame[..end - start].copy_from_slice(&samples[start..end]);
        track
            .frame_times
            .push((start as f64 + win as f64 / 2.0) / fs);

        let peak = frame.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let pick = if global_peak > 0.0 && peak >= SILENCE_THRESHOLD * global_peak {
            pick_period(&frame, &window, &window_ac, min_lag, max_lag)
        } else {
            None
        };
        match pick {
            Some((lag, strength)) if strength >= VOICING_THRESHOLD => {
                let f0 = fs / lag;
                if (f0_min..=f0_max).contains(&f0) {
                    track.f0.push(Some(f0));
                    track.voicing.push(true);
                } else {
                    track.f0.push(None);
                    track.voicing.push(false);
                }
                track.strength.push(strength);
            }
            Some((_, strength)) => {
                track.f0.push(None);
                track.voicing.push(false);
                track.strength.push(strength.max(0.0));
            }
            None => {
                track.f0.push(None);
                track.voicing.push(false);
                track.strength.push(0.0);
            }
        }
    }
    Ok(track)
}

/// Returns `(fractional lag, normalised peak)` for one frame.
fn pick_period(
    frame: &[f64],
    window: &[f64],
    window_ac: &[f64],
    min_lag: usize,
    max_lag: usize,
) -> Option<(f64, f64)> {
    let m = dsp::mean(frame);
    let weighted: Vec<f64> = frame
        .iter()
        .zip(window)
        .map(|(x, w)| (x - m) * w)
        .collect();
    let ac = dsp::autocorrelation(&weighted, max_lag + 1);
    if ac[0] <= 1e-20 {
        return None;
    }
    let norm: Vec<f64> = ac
        .iter()
        .zip(window_ac)
        .map(|(r, rw)| (r / ac[0]) / (rw / window_ac[0]))
        .collect();

    let candidates: Vec<(f64, f64)> = (min_lag.max(1)..=max_lag)
        .filter(|&lag| norm[lag] >= norm[lag - 1] && norm[lag] > norm[lag + 1])
        .map(|lag| {
            let (l, c, r) = (norm[lag - 1], norm[lag], norm[lag + 1]);
            (
                lag as f64 + dsp::parabolic_offset(l, c, r),
                dsp::parabolic_peak(l, c, r),
            )
        })
        .collect();
    let best = candidates.iter().map(|c| c.1).fold(f64::MIN, f64::max);
    candidates
        .into_iter()
        .find(|c| c.1 >= OCTAVE_RATIO * best)
}

/// Cycle-level perturbation statistics. Jitter values are ratios of the
/// mean period, shimmer values ratios of the mean peak-to-peak amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationMeasures {
    pub jitter_local: f64,
    pub jitter_rap: f64,
    pub jitter_ppq5: f64,
    pub shimmer_local: f64,
    pub shimmer_apq3: f64,
    pub shimmer_apq5: f64,
    pub hnr_mean: f64,
    pub hnr_std: f64,
    pub n_periods: usize,
}

/// Glottal cycle onsets (seconds), grouped into runs of consecutive cycles.
pub fn glottal_pulses(clip: &AudioClip, track: &F0Track) -> Vec<Vec<f64>> {
    let fs = f64::from(clip.sample_rate());
    let samples = clip.samples();
    let dc = dsp::mean(samples);
    let x = |i: usize| samples[i] - dc;

    let mut runs = Vec::new();
    let mut i = 0;
    while i < track.voicing.len() {
        if !track.voicing[i] {
            i += 1;
            continue;
        }
        let first = i;
        while i < track.voicing.len() && track.voicing[i] {
            i += 1;
        }
        let last = i - 1;
        let t0 = (track.frame_times[first] - track.hop / 2.0).max(0.0);
        let t1 = track.frame_times[last] + track.hop / 2.0;
        let s0 = (t0 * fs).floor() as usize;
        let s1 = ((t1 * fs).ceil() as usize).min(samples.len().saturating_sub(1));

        let crossings: Vec<f64> = (s0..s1)
            .filter(|&n| x(n) <= 0.0 && x(n + 1) > 0.0)
            .map(|n| (n as f64 + (-x(n)) / (x(n + 1) - x(n))) / fs)
            .collect();
        runs.extend(follow_crossings(&crossings, track));
    }
    runs.retain(|r: &Vec<f64>| r.len() >= 2);
    runs
}

/// Chains zero crossings whose spacing matches the local pitch period.
fn follow_crossings(crossings: &[f64], track: &F0Track) -> Vec<Vec<f64>> {
    let mut runs = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut k = 0;
    while k < crossings.len() {
        let Some(&last) = current.last() else {
            current.push(crossings[k]);
            k += 1;
            continue;
        };
        let period = track.f0[track.nearest_frame(last)].map(|f| 1.0 / f);
        let Some(period) = period else {
            runs.push(std::mem::take(&mut current));
            continue;
        };
        let lo = last + 0.7 * period;
        let hi = last + 1.4 * period;
        let target = last + period;
        let mut best: Option<usize> = None;
        let mut j = k;
        while j < crossings.len() && crossings[j] <= hi {
            if crossings[j] >= lo
                && best.map_or(true, |b| {
                    (crossings[j] - target).abs() < (crossings[b] - target).abs()
                })
            {
                best = Some(j);
            }
            j += 1;
        }
        match best {
            Some(b) => {
                current.push(crossings[b]);
                k = b + 1;
            }
            None => {
                runs.push(std::mem::take(&mut current));
                // Restart from the first crossing past the search window.
                k = j;
            }
        }
    }
    runs.push(current);
    runs
}

/// Jitter, shimmer and HNR over the voiced part of a clip.
pub fn perturbation_measures(
    clip: &AudioClip,
    track: &F0Track,
) -> Result<PerturbationMeasures, AcousticsError> {
    let voiced_run = track.longest_voiced_run();
    if voiced_run < 3 {
        return Err(AcousticsError::InsufficientVoicing {
            found: voiced_run,
            required: 3,
        });
    }
    let fs = f64::from(clip.sample_rate());
    let samples = clip.samples();
    let (min_period, max_period) = (1.0 / F0_MAX_DEFAULT, 1.0 / F0_MIN_DEFAULT);

    // (periods, amplitudes) per run of consecutive valid cycles.
    let mut cycles: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for pulses in glottal_pulses(clip, track) {
        let mut periods = Vec::new();
        let mut amps = Vec::new();
        for w in pulses.windows(2) {
            let period = w[1] - w[0];
            if !(min_period..=max_period).contains(&period) {
                if !periods.is_empty() {
                    cycles.push((std::mem::take(&mut periods), std::mem::take(&mut amps)));
                }
                continue;
            }
            let a = (w[0] * fs).round() as usize;
            let b = ((w[1] * fs).round() as usize).min(samples.len());
            let (lo, hi) = samples[a..b]
                .iter()
                .fold((f64::MAX, f64::MIN), |(lo, hi), &s| (lo.min(s), hi.max(s)));
            periods.push(period);
            amps.push(hi - lo);
        }
        if !periods.is_empty() {
            cycles.push((periods, amps));
        }
    }

    let n_periods: usize = cycles.iter().map(|c| c.0.len()).sum();
    let longest = cycles.iter().map(|c| c.0.len()).max().unwrap_or(0);
    if longest < 5 {
        return Err(AcousticsError::InsufficientVoicing {
            found: longest,
            required: 5,
        });
    }

    let periods: Vec<&[f64]> = cycles.iter().map(|c| c.0.as_slice()).collect();
    let amps: Vec<&[f64]> = cycles.iter().map(|c| c.1.as_slice()).collect();
    let hnr = track.hnr_series();
    Ok(PerturbationMeasures {
        jitter_local: local_perturbation(&periods),
        jitter_rap: smoothed_perturbation(&periods, 1),
        jitter_ppq5: smoothed_perturbation(&periods, 2),
        shimmer_local: local_perturbation(&amps),
        shimmer_apq3: smoothed_perturbation(&amps, 1),
        shimmer_apq5: smoothed_perturbation(&amps, 2),
        hnr_mean: dsp::mean(&hnr),
        hnr_std: dsp::std_dev(&hnr),
        n_periods,
    })
}

fn overall_mean(runs: &[&[f64]]) -> f64 {
    let n: usize = runs.iter().map(|r| r.len()).sum();
    runs.iter().flat_map(|r| r.iter()).sum::<f64>() / n as f64
}

/// Mean absolute difference of consecutive values over their mean.
fn local_perturbation(runs: &[&[f64]]) -> f64 {
    let diffs: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.windows(2).map(|w| (w[1] - w[0]).abs()))
        .collect();
    if diffs.is_empty() {
        return 0.0;
    }
    dsp::mean(&diffs) / overall_mean(runs)
}

/// Mean absolute deviation from a centred moving average of `2·half + 1`
/// points, over the overall mean (RAP / APQ3 for half = 1, PPQ5 / APQ5 for half = 2).
fn smoothed_perturbation(runs: &[&[f64]], half: usize) -> f64 {
    let width = 2 * half + 1;
    let devs: Vec<f64> = runs
        .iter()
        .flat_map(|r| {
            r.windows(width).map(move |w| {
                let avg = w.iter().sum::<f64>() / width as f64;
                (w[half] - avg).abs()
            })
        })
        .collect();
    if devs.is_empty() {
        return 0.0;
    }
    dsp::mean(&devs) / overall_mean(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_signal, Perturbation, SignalKind};
    use std::f64::consts::PI;

    fn sine(freq: f64, secs: f64) -> AudioClip {
        generate_signal(
            &SignalKind::Sine {
                freq,
                amp: 0.5,
                duration: secs,
                rate: 16_000,
            },
            0,
        )
        .unwrap()
        .clip
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    #[test]
    fn pure_sine_is_voiced_at_its_frequency() {
        let track = estimate_f0(&sine(220.0, 1.0), F0_MIN_DEFAULT, F0_MAX_DEFAULT).unwrap();
        assert!(track.voicing.iter().all(|v| *v));
        let med = median(track.voiced_values());
        assert!((218.0..=222.0).contains(&med), "median F0 {med}");
    }

    #[test]
    fn white_noise_is_mostly_unvoiced() {
        let clip = generate_signal(
            &SignalKind::Noise {
                amp: 0.5,
                duration: 1.0,
                rate: 16_000,
            },
            11,
        )
        .unwrap()
        .clip;
        let track = estimate_f0(&clip, F0_MIN_DEFAULT, F0_MAX_DEFAULT).unwrap();
        assert!(1.0 - track.voiced_fraction() >= 0.9, "{}", track.voiced_fraction());
    }

    #[test]
    fn silence_is_unvoiced() {
        let clip = AudioClip::new(vec![0.0; 16_000], 16_000, "s").unwrap();
        let track = estimate_f0(&clip, F0_MIN_DEFAULT, F0_MAX_DEFAULT).unwrap();
        assert!(track.voicing.iter().all(|v| !*v));
        assert!(matches!(
            perturbation_measures(&clip, &track),
            Err(AcousticsError::InsufficientVoicing { .. })
        ));
    }

    #[test]
    fn too_short_clip_is_rejected() {
        let clip = AudioClip::new(vec![0.1; 200], 16_000, "s").unwrap();
        assert!(matches!(
            estimate_f0(&clip, 75.0, 500.0),
            Err(AcousticsError::ClipTooShort { .. })
        ));
    }

    #[test]
    fn pure_sine_perturbation() {
        let clip = sine(220.0, 1.0);
        let track = estimate_f0(&clip, F0_MIN_DEFAULT, F0_MAX_DEFAULT).unwrap();
        let p = perturbation_measures(&clip, &track).unwrap();
        assert!(p.jitter_local < 0.002, "{p:?}");
        assert!(p.shimmer_local < 0.01, "{p:?}");
        assert!(p.hnr_mean > 30.0, "{p:?}");
    }

    #[test]
    fn uniform_five_percent_period_perturbation() {
        let sig = generate_signal(
            &SignalKind::JitteredSine {
                freq: 200.0,
                amp: 0.5,
                duration: 1.5,
                rate: 16_000,
                perturbation: Perturbation::Uniform(0.05),
            },
            5,
        )
        .unwrap();
        let truth = sig.truth.jitter_local().unwrap();
        let track = estimate_f0(&sig.clip, F0_MIN_DEFAULT, F0_MAX_DEFAULT).unwrap();
        let p = perturbation_measures(&sig.clip, &track).unwrap();
        assert!((0.03..=0.07).contains(&p.jitter_local), "{p:?}");
        assert!((p.jitter_local - truth).abs() / truth < 0.2, "{} vs {truth}", p.jitter_local);
    }

    #[test]
    fn perturbation_is_scale_invariant() {
        let sig = generate_signal(
            &SignalKind::JitteredSine {
                freq: 180.0,
                amp: 0.4,
                duration: 1.0,
                rate: 16_000,
                perturbation: Perturbation::Gaussian(0.03),
            },
            2,
        )
        .unwrap();
        let scaled = AudioClip::new(
            sig.clip.samples().iter().map(|s| s * 2.5).collect(),
            16_000,
            "scaled",
        )
        .unwrap();
        let measure = |c: &AudioClip| {
            let t = estimate_f0(c, F0_MIN_DEFAULT, F0_MAX_DEFAULT).unwrap();
            perturbation_measures(c, &t).unwrap()
        };
        let (a, b) = (measure(&sig.clip), measure(&scaled));
        for (x, y) in [
            (a.jitter_local, b.jitter_local),
            (a.jitter_rap, b.jitter_rap),
            (a.jitter_ppq5, b.jitter_ppq5),
            (a.shimmer_local, b.shimmer_local),
            (a.shimmer_apq3, b.shimmer_apq3),
            (a.shimmer_apq5, b.shimmer_apq5),
        ] {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-12), "{x} vs {y}");
        }
    }

    #[test]
    fn leading_silence_barely_moves_jitter_and_hnr() {
        let sig = generate_signal(
            &SignalKind::JitteredSine {
                freq: 150.0,
                amp: 0.5,
                duration: 1.0,
                rate: 16_000,
                perturbation: Perturbation::Gaussian(0.02),
            },
            9,
        )
        .unwrap();
        let mut shifted = vec![0.0; 80];
        shifted.extend_from_slice(sig.clip.samples());
        let shifted = AudioClip::new(shifted, 16_000, "shifted").unwrap();
        let measure = |c: &AudioClip| {
            let t = estimate_f0(c, F0_MIN_DEFAULT, F0_MAX_DEFAULT).unwrap();
            perturbation_measures(c, &t).unwrap()
        };
        let (a, b) = (measure(&sig.clip), measure(&shifted));
        assert!((a.jitter_local - b.jitter_local).abs() / a.jitter_local < 0.01);
        assert!((a.hnr_mean - b.hnr_mean).abs() / a.hnr_mean.abs() < 0.01);
    }

    #[test]
    fn periodic_pulse_shape_tracks_correct_octave() {
        // Strong second harmonic: a classic octave-error trap.
        let fs = 16_000.0;
        let samples: Vec<f64> = (0..16_000)
            .map(|n| {
                let t = n as f64 / fs;
                0.3 * (2.0 * PI * 120.0 * t).sin() + 0.5 * (2.0 * PI * 240.0 * t).sin()
            })
            .collect();
        let clip = AudioClip::new(samples, 16_000, "h").unwrap();
        let track = estimate_f0(&clip, F0_MIN_DEFAULT, F0_MAX_DEFAULT).unwrap();
        let med = median(track.voiced_values());
        assert!((med - 120.0).abs() < 2.0, "median {med}");
    }
}
