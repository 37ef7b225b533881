//! Library results against independent textbook computations.

use disaudit::cluster::kmeans;
use disaudit::confound::{overlap, quantile, SharedSubspace};
use disaudit::embedding::{run_tsne, trustworthiness, zscore_normalize, PcaModel, TsneConfig};
use disaudit::matrix::{DimensionTag, FeatureMatrix};
use disaudit::report::{kde_2d, pearson_correlation, KdeConfig};
use ndarray::{array, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, d), || StandardNormal.sample(&mut rng))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[test]
fn pca_agrees_with_covariance_eigenvectors() {
    let mut x = gaussian(120, 5, 3);
    for (c, scale) in [3.0, 2.0, 1.5, 1.0, 0.5].iter().enumerate() {
        x.column_mut(c).mapv_inplace(|v| v * scale);
    }
    let (n, d) = x.dim();
    let mean: Vec<f64> = (0..d).map(|c| x.column(c).sum() / n as f64).collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..n).map(|r| (x[[r, i]] - mean[i]) * (x[[r, j]] - mean[j])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect();
    let (vals, vecs) = jacobi(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

    let pca = PcaModel::fit(x.view(), 3).unwrap();
    for (slot, &idx) in order.iter().take(3).enumerate() {
        assert!((pca.explained_variance[slot] - vals[idx]).abs() < 1e-9 * vals[idx]);
        let dot: f64 = (0..d).map(|c| pca.components[[c, slot]] * vecs[c][idx]).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8, "component {slot}: |dot| = {}", dot.abs());
    }
}

fn sse(points: &Array2<f64>, labels: &[usize], k: usize) -> f64 {
    (0..k)
        .map(|j| {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == j).collect();
            if members.is_empty() {
                return f64::INFINITY;
            }
            let d = points.ncols();
            let mu: Vec<f64> = (0..d).map(|c| members.iter().map(|&i| points[[i, c]]).sum::<f64>() / members.len() as f64).collect();
            members
                .iter()
                .map(|&i| (0..d).map(|c| (points[[i, c]] - mu[c]).powi(2)).sum::<f64>())
                .sum()
        })
        .sum()
}

#[test]
fn kmeans_reaches_exhaustive_optimum_on_small_sets() {
    for seed in 0..5 {
        let mut x = gaussian(9, 2, 100 + seed);
        for i in 0..9 {
            x[[i, 0]] += 6.0 * (i % 3) as f64;
        }
        let k = 3;
        let n = x.nrows();
        let mut best = f64::INFINITY;
        let mut labels = vec![0usize; n];
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            for l in labels.iter_mut() {
                *l = c % k;
                c /= k;
            }
            best = best.min(sse(&x, &labels, k));
        }
        let r = kmeans(x.view(), k, 10, seed).unwrap();
        assert!((r.inertia - best).abs() < 1e-9, "seed {seed}: {} vs {best}", r.inertia);
        assert!((sse(&x, &r.labels, k) - r.inertia).abs() < 1e-9);
    }
}

#[test]
fn overlap_counts_points_inside_twice_mean_spread() {
    let ling = gaussian(40, 3, 7);
    let path = gaussian(60, 3, 8).mapv(|v| v * 1.3 + 0.2);
    let shared = SharedSubspace::from_coordinates(path.clone(), ling.clone()).unwrap();
    let clusters = kmeans(ling.view(), 3, 5, 1).unwrap();
    let got = overlap(&shared, &clusters).unwrap();
    for j in 0..3 {
        let members: Vec<usize> = (0..40).filter(|&i| clusters.labels[i] == j).collect();
        let m = members.len() as f64;
        let mu: Vec<f64> = (0..3).map(|c| members.iter().map(|&i| ling[[i, c]]).sum::<f64>() / m).collect();
        let sigma = (0..3)
            .map(|c| (members.iter().map(|&i| (ling[[i, c]] - mu[c]).powi(2)).sum::<f64>() / m).sqrt())
            .sum::<f64>()
            / 3.0;
        let inside = (0..60)
            .filter(|&r| (0..3).map(|c| (path[[r, c]] - mu[c]).powi(2)).sum::<f64>().sqrt() < 2.0 * sigma)
            .count();
        assert_eq!(got.per_cluster[j], inside as f64 / 60.0);
    }
    assert!((got.mean_overlap - got.per_cluster.iter().sum::<f64>() / 3.0).abs() < 1e-15);
}

#[test]
fn kde_matches_direct_sum_and_integrates_to_one() {
    let pts = array![[0.0, 0.0], [1.0, 0.5], [-0.5, 2.0], [0.3, -1.0]];
    let cfg = KdeConfig {
        bandwidth: 0.4,
        resolution: 120,
        isoline_fraction: 0.3,
    };
    let g = kde_2d(pts.view(), &cfg).unwrap();
    let h: f64 = 0.4;
    for &(ix, iy) in &[(0, 0), (37, 81), (60, 60), (119, 5)] {
        let (x, y) = (g.grid_x[ix], g.grid_y[iy]);
        let direct: f64 = pts
            .rows()
            .into_iter()
            .map(|p| (-((x - p[0]).powi(2) + (y - p[1]).powi(2)) / (2.0 * h * h)).exp() / (2.0 * std::f64::consts::PI * h * h))
            .sum::<f64>()
            / 4.0;
        assert!((g.density[iy][ix] - direct).abs() < 1e-12);
    }
    let mass: f64 = g.density.iter().flatten().sum::<f64>() * g.cell_area();
    assert!((mass - 1.0).abs() < 0.02, "mass {mass}");
    assert!((g.isoline_level - 0.3 * g.max_density()).abs() < 1e-15);
}

#[test]
fn pearson_matches_raw_moment_formula() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let y = [2.1, 3.9, 6.2, 7.8, 10.1, 12.5];
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    assert!((pearson_correlation(&x, &y).unwrap() - r).abs() < 1e-12);
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    assert!((pearson_correlation(&x, &neg).unwrap() + r).abs() < 1e-12);
}

#[test]
fn zscore_gives_unit_population_moments() {
    let m = FeatureMatrix::from_values(gaussian(50, 4, 2).mapv(|v| 3.0 * v + 10.0), DimensionTag::Emotional).unwrap();
    let (z, stats) = zscore_normalize(&m).unwrap();
    for c in 0..4 {
        let col = z.values().column(c);
        let mean = col.sum() / 50.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 50.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        assert!((stats.means[c] - m.values().column(c).sum() / 50.0).abs() < 1e-12);
    }
}

#[test]
fn quantile_interpolates_between_order_statistics() {
    let v: Vec<f64> = (0..11).rev().map(f64::from).collect();
    assert_eq!(quantile(&v, 0.05), 0.5);
    assert_eq!(quantile(&v, 0.95), 9.5);
    assert_eq!(quantile(&v, 0.5), 5.0);
}

#[test]
fn tsne_on_separated_blobs_keeps_neighbourhoods() {
    let mut x = gaussian(90, 5, 11);
    for i in 0..90 {
        x[[i, 0]] += 10.0 * (i % 3) as f64;
    }
    let m = FeatureMatrix::from_values(x.clone(), DimensionTag::Linguistic).unwrap();
    let cfg = TsneConfig {
        perplexity: 10.0,
        iterations: 400,
        seed: 5,
        ..TsneConfig::default()
    };
    let e = run_tsne(&m, &cfg).unwrap();
    assert!(e.final_kl < e.initial_kl);
    assert_eq!(e, run_tsne(&m, &cfg).unwrap());
    assert!(trustworthiness(&x, &e.y, 5).unwrap() > 0.9);
    assert_eq!(trustworthiness(&x, &x, 5).unwrap(), 1.0);
}
