//! Framing, windows and FFT helpers shared by the extractors.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Number of samples in `ms` milliseconds at `rate`, rounded.
pub(crate) fn ms_to_samples(ms: f64, rate: u32) -> usize {
    (ms * f64::from(rate) / 1000.0).round() as usize
}

/// Number of full frames of `frame_len` at `hop` spacing in a signal of `len` samples.
pub(crate) fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len < frame_len || frame_len == 0 || hop == 0 {
        0
    } else {
        1 + (len - frame_len) / hop
    }
}

/// Periodic Hann window.
pub(crate) fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

pub(crate) fn hamming(len: usize) -> Vec<f64> {
    if len < 2 {
        return vec![1.0; len];
    }
    (0..len)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Windowed magnitude spectra of fixed-size frames, zero-padded to `fft_size`.
pub(crate) struct Spectrogram {
    fft: Arc<dyn Fft<f64>>,
    fft_size: usize,
    window: Vec<f64>,
}

impl Spectrogram {
    pub(crate) fn new(frame_len: usize, fft_size: usize) -> Self {
        assert!(frame_len <= fft_size, "frame longer than FFT");
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Self {
            fft,
            fft_size,
            window: hann(frame_len),
        }
    }

    pub(crate) fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub(crate) fn fft_size(&self) -> usize {
        self.fft_size
    }

    /// Magnitude spectrum (`fft_size / 2 + 1` bins) of one frame. Short
    /// frames are zero-padded.
    pub(crate) fn magnitude(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_size];
        for ((slot, &x), &w) in buf.iter_mut().zip(frame).zip(&self.window) {
            slot.re = x * w;
        }
        self.fft.process(&mut buf);
        buf[..self.bins()].iter().map(|c| c.norm()).collect()
    }
}

/// Unnormalised autocorrelation `r[τ] = Σ x[n]·x[n+τ]` for `τ ∈ [0, max_lag]`.
pub(crate) fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag.min(x.len().saturating_sub(1)))
        .map(|lag| x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum())
        .collect()
}

/// Vertex offset of the parabola through three equally spaced samples,
/// in `[-0.5, 0.5]` when `center` is a local maximum.
pub(crate) fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
    }
}

/// Value at the vertex of that parabola.
pub(crate) fn parabolic_peak(left: f64, center: f64, right: f64) -> f64 {
    let off = parabolic_offset(left, center, right);
    center - 0.25 * (left - right) * off
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Population standard deviation.
pub(crate) fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}
