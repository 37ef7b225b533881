//! From-definition reference implementations used by the acceptance suite.
//! Everything here is deliberately naive: quadratic or cubic loops straight
//! from the definitions, no shared code with the library.

#![allow(dead_code)]

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn clusters(labels: &[usize]) -> Vec<usize> {
    let mut c: Vec<usize> = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

fn centroid(points: &[Vec<f64>], labels: &[usize], c: usize) -> Vec<f64> {
    let d = points[0].len();
    let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
    (0..d)
        .map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64)
        .collect()
}

pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let cs = clusters(labels);
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        let own_size = labels.iter().filter(|&&l| l == own).count();
        if own_size == 1 {
            continue;
        }
        let mean_to = |c: usize, skip_self: bool| {
            let mut s = 0.0;
            let mut m = 0;
            for j in 0..n {
                if labels[j] == c && !(skip_self && j == i) {
                    s += dist(&points[i], &points[j]);
                    m += 1;
                }
            }
            s / m as f64
        };
        let a = mean_to(own, true);
        let b = cs
            .iter()
            .filter(|&&c| c != own)
            .map(|&c| mean_to(c, false))
            .fold(f64::INFINITY, f64::min);
        let s = if a.max(b) == 0.0 { 0.0 } else { (b - a) / a.max(b) };
        total += s;
    }
    total / n as f64
}

pub fn davies_bouldin(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let cs = clusters(labels);
    let cents: Vec<Vec<f64>> = cs.iter().map(|&c| centroid(points, labels, c)).collect();
    let scatter: Vec<f64> = cs
        .iter()
        .zip(&cents)
        .map(|(&c, cen)| {
            let m: Vec<f64> = points
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(p, _)| dist(p, cen))
                .collect();
            m.iter().sum::<f64>() / m.len() as f64
        })
        .collect();
    let k = cs.len();
    (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| (scatter[i] + scatter[j]) / dist(&cents[i], &cents[j]))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum::<f64>()
        / k as f64
}

pub fn calinski_harabasz(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let cs = clusters(labels);
    let k = cs.len();
    let all: Vec<usize> = vec![0; n];
    let grand = centroid(points, &all, 0);
    let mut between = 0.0;
    let mut within = 0.0;
    for &c in &cs {
        let cen = centroid(points, labels, c);
        let size = labels.iter().filter(|&&l| l == c).count() as f64;
        between += size * dist(&cen, &grand).powi(2);
        for (p, _) in points.iter().zip(labels).filter(|(_, &l)| l == c) {
            within += dist(p, &cen).powi(2);
        }
    }
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

/// Pair-counting form: over all unordered pairs count agreements.
pub fn ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut n11, mut n10, mut n01, mut n00) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    2.0 * (n00 * n11 - n01 * n10) / ((n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11))
}

/// 1-based rank of `j` among the neighbours of `i`, counting every point that
/// is strictly closer or equally close with a smaller index.
fn rank(points: &[Vec<f64>], i: usize, j: usize) -> usize {
    let dij = dist(&points[i], &points[j]);
    1 + (0..points.len())
        .filter(|&l| l != i && l != j)
        .filter(|&l| {
            let dil = dist(&points[i], &points[l]);
            dil < dij || (dil == dij && l < j)
        })
        .count()
}

pub fn trustworthiness(original: &[Vec<f64>], embedded: &[Vec<f64>], k: usize) -> f64 {
    let n = original.len();
    let mut penalty = 0usize;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            if rank(embedded, i, j) <= k {
                let r = rank(original, i, j);
                if r > k {
                    penalty += r - k;
                }
            }
        }
    }
    let (n, k) = (n as f64, k as f64);
    1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty as f64
}

/// Shannon entropy in bits of the Gaussian conditional row of point `i`
/// with precision `beta` on squared distances.
pub fn conditional_entropy_bits(points: &[Vec<f64>], i: usize, beta: f64) -> f64 {
    let d2: Vec<f64> = (0..points.len())
        .filter(|&j| j != i)
        .map(|j| dist(&points[i], &points[j]).powi(2))
        .collect();
    let min = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = d2.iter().map(|d| (-beta * (d - min)).exp()).collect();
    let z: f64 = w.iter().sum();
    -w.iter()
        .map(|v| v / z)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

/// KL(P‖Q) with Student-t Q, straight from the definition.
pub fn kl(p: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z += 1.0 / (1.0 + dist(&y[i], &y[j]).powi(2));
            }
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && p[i][j] > 0.0 {
                let q = 1.0 / (1.0 + dist(&y[i], &y[j]).powi(2)) / z;
                total += p[i][j] * (p[i][j] / q).ln();
            }
        }
    }
    total
}

/// Central differences of [`kl`] with step `h`.
pub fn kl_gradient_fd(p: &[Vec<f64>], y: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; y[0].len()]; y.len()];
    for i in 0..y.len() {
        for c in 0..y[0].len() {
            let mut plus = y.to_vec();
            let mut minus = y.to_vec();
            plus[i][c] += h;
            minus[i][c] -= h;
            g[i][c] = (kl(p, &plus) - kl(p, &minus)) / (2.0 * h);
        }
    }
    g
}
