use std::f64::consts::PI;
use std::path::Path;

use super::AcousticsError;

/// Analysis rate every clip is brought to before feature extraction.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// A mono audio signal with amplitudes nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
    source_id: String,
}

impl AudioClip {
    pub fn new(
        samples: Vec<f64>,
        sample_rate: u32,
        source_id: impl Into<String>,
    ) -> Result<Self, AcousticsError> {
        if sample_rate == 0 {
            return Err(AcousticsError::InvalidParameter(
                "sample rate must be positive".into(),
            ));
        }
        if samples.is_empty() {
            return Err(AcousticsError::EmptyAudio);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(AcousticsError::InvalidParameter(
                "samples must be finite".into(),
            ));
        }
        Ok(Self {
            samples,
            sample_rate,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Returns the same clip at `target_rate`.
    pub fn resampled(&self, target_rate: u32) -> Result<Self, AcousticsError> {
        if target_rate == self.sample_rate {
            return Ok(self.clone());
        }
        let samples = resample(&self.samples, self.sample_rate, target_rate)?;
        Self::new(samples, target_rate, self.source_id.clone())
    }
}

/// Decodes a RIFF/WAVE file (PCM 8/16/24/32-bit or 32-bit float), mixes it
/// down to mono and resamples it to `target_rate`.
pub fn load_audio(path: &Path, target_rate: u32) -> Result<AudioClip, AcousticsError> {
    let unreadable = |reason: String| AcousticsError::UnreadableFile {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::Unsupported => {
            AcousticsError::UnsupportedEncoding("unsupported WAV format".into())
        }
        other => unreadable(other.to_string()),
    })?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(AcousticsError::UnsupportedEncoding("zero channels".into()));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| unreadable(e.to_string()))?,
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 2f64.powi(i32::from(bits) - 1);
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| unreadable(e.to_string()))?
        }
        (format, bits) => {
            return Err(AcousticsError::UnsupportedEncoding(format!(
                "{format:?} with {bits} bits per sample"
            )))
        }
    };
    if interleaved.is_empty() {
        return Err(AcousticsError::EmptyAudio);
    }

    let mono: Vec<f64> = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f64>() / frame.len() as f64)
        .collect();
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    AudioClip::new(mono, spec.sample_rate, source_id)?.resampled(target_rate)
}

/// Writes a clip as a mono 32-bit float WAV file.
pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<(), AcousticsError> {
    let failed = |reason: String| AcousticsError::WriteFailed {
        path: path.to_path_buf(),
        reason,
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| failed(e.to_string()))?;
    for &s in clip.samples() {
        writer
            .write_sample(s as f32)
            .map_err(|e| failed(e.to_string()))?;
    }
    writer.finalize().map_err(|e| failed(e.to_string()))
}

/// Linear-interpolation resampler. When downsampling the input is first
/// low-passed with a Blackman-windowed sinc at 0.9 × the target Nyquist.
pub fn resample(samples: &[f64], from: u32, to: u32) -> Result<Vec<f64>, AcousticsError> {
    if from == 0 || to == 0 {
        return Err(AcousticsError::InvalidParameter(
            "sample rates must be positive".into(),
        ));
    }
    if samples.is_empty() {
        return Err(AcousticsError::EmptyAudio);
    }
    if from == to {
        return Ok(samples.to_vec());
    }
    let ratio = f64::from(from) / f64::from(to);
    let filtered;
    let source = if to < from {
        filtered = low_pass(samples, 0.45 / ratio, (16.0 * ratio).ceil() as usize);
        filtered.as_slice()
    } else {
        samples
    };

    let out_len = ((samples.len() as f64) / ratio).round().max(1.0) as usize;
    let last = source.len() - 1;
    Ok((0..out_len)
        .map(|m| {
            let pos = m as f64 * ratio;
            let i = pos.floor() as usize;
            if i >= last {
                return source[last];
            }
            let frac = pos - i as f64;
            source[i] * (1.0 - frac) + source[i + 1] * frac
        })
        .collect())
}

/// Zero-phase FIR low-pass; `cutoff` is in cycles per sample, `half_len` taps per side.
fn low_pass(samples: &[f64], cutoff: f64, half_len: usize) -> Vec<f64> {
    let m = half_len as isize;
    let taps: Vec<f64> = (-m..=m)
        .map(|k| {
            let x = k as f64;
            let sinc = if k == 0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * x).sin() / (PI * x)
            };
            // Blackman window evaluated on [0, 2m].
            let phase = 2.0 * PI * (x + m as f64) / (2 * m) as f64;
            let blackman = 0.42 - 0.5 * phase.cos() + 0.08 * (2.0 * phase).cos();
            sinc * blackman
        })
        .collect();
    let gain: f64 = taps.iter().sum();
    let n = samples.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, tap) in taps.iter().enumerate() {
                let idx = i + j as isize - m;
                if (0..n).contains(&idx) {
                    acc += tap * samples[idx as usize];
                }
            }
            acc / gain
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, secs: f64) -> Vec<f64> {
        let n = (f64::from(rate) * secs) as usize;
        (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / f64::from(rate)).sin())
            .collect()
    }

    /// Magnitude of the DFT at a single frequency, evaluated directly.
    fn dft_magnitude(x: &[f64], rate: f64, freq: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (n, v) in x.iter().enumerate() {
            let phase = 2.0 * PI * freq * n as f64 / rate;
            re += v * phase.cos();
            im -= v * phase.sin();
        }
        (re * re + im * im).sqrt()
    }

    #[test]
    fn resampled_sine_keeps_its_frequency() {
        let out = resample(&sine(440.0, 48_000, 1.0), 48_000, 16_000).unwrap();
        assert_eq!(out.len(), 16_000);
        let peak = (380..=500)
            .map(|f| (f, dft_magnitude(&out, 16_000.0, f as f64)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!((peak.0 as f64 - 440.0).abs() <= 2.0, "peak at {} Hz", peak.0);
    }

    #[test]
    fn downsampling_suppresses_content_above_target_nyquist() {
        // 10 kHz cannot be represented at 16 kHz; it must not alias to 6 kHz.
        let tone = sine(10_000.0, 48_000, 0.5);
        let out = resample(&tone, 48_000, 16_000).unwrap();
        let rms = (out.iter().map(|v| v * v).sum::<f64>() / out.len() as f64).sqrt();
        assert!(rms < 0.01, "aliased energy rms {rms}");
    }

    #[test]
    fn upsampling_length_arithmetic() {
        let out = resample(&vec![0.25; 8_000], 8_000, 16_000).unwrap();
        assert_eq!(out.len(), 16_000);
        assert!(out.iter().all(|v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            resample(&[], 8_000, 16_000),
            Err(AcousticsError::EmptyAudio)
        ));
        assert!(matches!(
            AudioClip::new(vec![], 16_000, "x"),
            Err(AcousticsError::EmptyAudio)
        ));
    }
}
