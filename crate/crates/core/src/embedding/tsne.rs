use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::affinity::affinities_from_distances;
use super::pca::PcaModel;
use super::{squared_distances, EmbeddingError};
use crate::matrix::FeatureMatrix;

const MIN_GAIN: f64 = 0.01;
const INIT_SCALE: f64 = 1e-4;
const KL_TRACE_EVERY: usize = 50;
const MIN_SAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    /// `None` selects `max(N / 12, 50)`.
    pub learning_rate: Option<f64>,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            seed: 0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            learning_rate: None,
        }
    }
}

/// Two-dimensional t-SNE coordinates, one row per input sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub y: Array2<f64>,
    /// KL(P‖Q) in nats at the end of optimisation.
    pub final_kl: f64,
    /// KL(P‖Q) of the initial configuration.
    pub initial_kl: f64,
    /// `(iteration, KL)` every 50 iterations.
    pub kl_trace: Vec<(usize, f64)>,
    pub iterations_run: usize,
    pub seed: u64,
    pub perplexity: f64,
    pub sample_ids: Vec<String>,
    pub warnings: Vec<String>,
}

/// Exact-gradient t-SNE with PCA initialisation, early exaggeration,
/// momentum and per-coordinate adaptive gains.
pub fn run_tsne(m: &FeatureMatrix, cfg: &TsneConfig) -> Result<Embedding, EmbeddingError> {
    let n = m.n_samples();
    if n < MIN_SAMPLES {
        return Err(EmbeddingError::TooFewSamples {
            found: n,
            required: MIN_SAMPLES,
        });
    }
    if cfg.learning_rate.is_some_and(|lr| !(lr > 0.0)) {
        return Err(EmbeddingError::InvalidParameter("learning rate must be positive".into()));
    }
    let mut warnings = vec![];
    let mut perplexity = cfg.perplexity;
    if 3.0 * perplexity >= n as f64 {
        let reduced = ((n - 1) / 3) as f64;
        warnings.push(format!(
            "perplexity {perplexity} too large for {n} samples; reduced to {reduced}"
        ));
        perplexity = reduced;
    }
    let p = flat(&affinities_from_distances(&squared_distances(m.values()), perplexity)?.p);

    let y0 = initial_layout(m, cfg.seed, &mut warnings);
    let lr = cfg.learning_rate.unwrap_or((n as f64 / 12.0).max(50.0));
    let mut y = flat(&y0);
    let initial_kl = kl_flat(&p, &y);

    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0_f64; 2 * n];
    let mut grad = vec![0.0; 2 * n];
    let mut kl_trace = vec![];
    for it in 0..cfg.iterations {
        let early = it < cfg.exaggeration_iterations;
        let exaggeration = if early { cfg.early_exaggeration } else { 1.0 };
        let momentum = if early {
            cfg.momentum_initial
        } else {
            cfg.momentum_final
        };
        gradient_flat(&p, &y, exaggeration, &mut grad);
        for c in 0..2 * n {
            let (g, u) = (grad[c], update[c]);
            gains[c] = if g * u < 0.0 {
                gains[c] + 0.2
            } else {
                (gains[c] * 0.8).max(MIN_GAIN)
            };
            update[c] = momentum * u - lr * gains[c] * g;
            y[c] += update[c];
        }
        if (it + 1) % KL_TRACE_EVERY == 0 {
            kl_trace.push((it + 1, kl_flat(&p, &y)));
        }
    }
    let final_kl = match kl_trace.last() {
        Some(&(it, kl)) if it == cfg.iterations => kl,
        _ => kl_flat(&p, &y),
    };
    let y = Array2::from_shape_vec((n, 2), y).expect("n×2");
    if y.iter().any(|v| !v.is_finite()) {
        return Err(EmbeddingError::InvalidParameter("optimisation diverged".into()));
    }
    Ok(Embedding {
        y,
        final_kl,
        initial_kl,
        kl_trace,
        iterations_run: cfg.iterations,
        seed: cfg.seed,
        perplexity,
        sample_ids: m.sample_ids().to_vec(),
        warnings,
    })
}

/// First two principal coordinates scaled so the first has std 1e-4;
/// seeded Gaussian noise of the same scale when the data has rank < 2.
fn initial_layout(m: &FeatureMatrix, seed: u64, warnings: &mut Vec<String>) -> Array2<f64> {
    let n = m.n_samples();
    if let Ok(pca) = PcaModel::fit(m.values().view(), 2) {
        if pca.rank_deficient.is_empty() {
            let scores = pca.transform(m.values().view());
            let first = scores.column(0);
            let mean = first.sum() / n as f64;
            let std = (first.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
            if std > 0.0 {
                return scores.mapv(|v| v / std * INIT_SCALE);
            }
        }
    }
    warnings.push("data has rank below 2; t-SNE initialised from seeded noise".into());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, 2), || {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * INIT_SCALE
    })
}

/// Exact KL gradient over flat row-major buffers in one pass: per row
/// `Σ p_ij w_ij Δ`, `Σ w_ij² Δ` and `Σ w_ij` with `w_ij = (1 + ‖y_i − y_j‖²)^{-1}`,
/// combined once the normaliser `Z = Σ w` is known.
fn gradient_flat(p: &[f64], y: &[f64], exaggeration: f64, grad: &mut [f64]) {
    let n = y.len() / 2;
    let rows: Vec<[f64; 5]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (yi0, yi1) = (y[2 * i], y[2 * i + 1]);
            let p_row = &p[i * n..(i + 1) * n];
            let mut acc = [0.0; 5];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dx = yi0 - y[2 * j];
                let dy = yi1 - y[2 * j + 1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                let pw = p_row[j] * w;
                let ww = w * w;
                acc[0] += pw * dx;
                acc[1] += pw * dy;
                acc[2] += ww * dx;
                acc[3] += ww * dy;
                acc[4] += w;
            }
            acc
        })
        .collect();
    let z: f64 = rows.iter().map(|r| r[4]).sum();
    for (i, r) in rows.iter().enumerate() {
        grad[2 * i] = 4.0 * (exaggeration * r[0] - r[2] / z);
        grad[2 * i + 1] = 4.0 * (exaggeration * r[1] - r[3] / z);
    }
}

fn kl_flat(p: &[f64], y: &[f64]) -> f64 {
    let n = y.len() / 2;
    let w = |i: usize, j: usize| {
        let dx = y[2 * i] - y[2 * j];
        let dy = y[2 * i + 1] - y[2 * j + 1];
        1.0 / (1.0 + dx * dx + dy * dy)
    };
    let z_rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).filter(|&j| j != i).map(|j| w(i, j)).sum())
        .collect();
    let log_z = z_rows.iter().sum::<f64>().ln();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && p[i * n + j] > 0.0)
                .map(|j| {
                    let pij = p[i * n + j];
                    pij * (pij.ln() - (w(i, j).ln() - log_z))
                })
                .sum()
        })
        .collect();
    rows.iter().sum()
}

fn flat(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

/// Gradient of KL(P‖Q) with respect to the N×2 layout.
pub fn kl_gradient(p: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    let n = y.nrows();
    let mut grad = vec![0.0; 2 * n];
    gradient_flat(&flat(p), &flat(y), 1.0, &mut grad);
    Array2::from_shape_vec((n, 2), grad).expect("n×2")
}

/// KL(P‖Q) in nats, Q the Student-t similarities of the layout `y`.
pub fn kl_divergence(p: &Array2<f64>, y: &Array2<f64>) -> f64 {
    kl_flat(&flat(p), &flat(y))
}
