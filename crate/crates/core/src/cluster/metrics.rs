use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sq_euclidean, ClusterError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub silhouette: f64,
    pub davies_bouldin: f64,
    pub calinski_harabasz: f64,
    pub n: usize,
    pub k: usize,
}

/// Labels mapped to dense indices `0..k` in sorted label order, with member lists.
struct Partition {
    dense: Vec<usize>,
    members: Vec<Vec<usize>>,
}

fn partition(points: ArrayView2<f64>, labels: &[usize]) -> Result<Partition, ClusterError> {
    if points.nrows() != labels.len() {
        return Err(ClusterError::LengthMismatch(points.nrows(), labels.len()));
    }
    let mut index: BTreeMap<usize, usize> = labels.iter().map(|&l| (l, 0)).collect();
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let dense: Vec<usize> = labels.iter().map(|l| index[l]).collect();
    let mut members = vec![vec![]; index.len()];
    for (i, &c) in dense.iter().enumerate() {
        members[c].push(i);
    }
    if members.len() < 2 {
        return Err(ClusterError::SingleCluster);
    }
    Ok(Partition { dense, members })
}

fn centroids(points: ArrayView2<f64>, p: &Partition) -> Array2<f64> {
    let mut c = Array2::<f64>::zeros((p.members.len(), points.ncols()));
    for (j, m) in p.members.iter().enumerate() {
        for &i in m {
            let mut row = c.row_mut(j);
            row += &points.row(i);
        }
        c.row_mut(j).mapv_inplace(|v| v / m.len() as f64);
    }
    c
}

/// Mean silhouette width. Members of singleton clusters score 0, as do
/// points with `a = b = 0`.
pub fn silhouette(points: ArrayView2<f64>, labels: &[usize]) -> Result<f64, ClusterError> {
    let p = partition(points, labels)?;
    let n = points.nrows();
    let k = p.members.len();
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = p.dense[i];
            if p.members[own].len() == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[p.dense[j]] += sq_euclidean(points.row(i), points.row(j)).sqrt();
                }
            }
            let a = sums[own] / (p.members[own].len() - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / p.members[c].len() as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / n as f64)
}

/// Davies–Bouldin index with σ the mean member-to-centroid distance.
pub fn davies_bouldin(points: ArrayView2<f64>, labels: &[usize]) -> Result<f64, ClusterError> {
    let p = partition(points, labels)?;
    let c = centroids(points, &p);
    let k = p.members.len();
    let sigma: Vec<f64> = p
        .members
        .iter()
        .enumerate()
        .map(|(j, m)| {
            m.iter()
                .map(|&i| sq_euclidean(points.row(i), c.row(j)).sqrt())
                .sum::<f64>()
                / m.len() as f64
        })
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = sq_euclidean(c.row(i), c.row(j)).sqrt();
            if d == 0.0 {
                return Err(ClusterError::IdenticalCentroids(i.min(j), i.max(j)));
            }
            worst = worst.max((sigma[i] + sigma[j]) / d);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Between- over within-cluster dispersion, each per degree of freedom.
pub fn calinski_harabasz(points: ArrayView2<f64>, labels: &[usize]) -> Result<f64, ClusterError> {
    let p = partition(points, labels)?;
    let n = points.nrows();
    let k = p.members.len();
    if n <= k {
        return Err(ClusterError::TooFewPoints { n, k });
    }
    let c = centroids(points, &p);
    let grand = points.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let ss_b: f64 = p
        .members
        .iter()
        .enumerate()
        .map(|(j, m)| m.len() as f64 * sq_euclidean(c.row(j), grand.view()))
        .sum();
    let ss_w: f64 = (0..n)
        .map(|i| sq_euclidean(points.row(i), c.row(p.dense[i])))
        .sum();
    if ss_w == 0.0 {
        return Err(ClusterError::ZeroWithinScatter);
    }
    Ok((ss_b / (k - 1) as f64) / (ss_w / (n - k) as f64))
}

pub fn quality_scores(points: ArrayView2<f64>, labels: &[usize]) -> Result<QualityScores, ClusterError> {
    let k = partition(points, labels)?.members.len();
    Ok(QualityScores {
        silhouette: silhouette(points, labels)?,
        davies_bouldin: davies_bouldin(points, labels)?,
        calinski_harabasz: calinski_harabasz(points, labels)?,
        n: points.nrows(),
        k,
    })
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index from the contingency table. When both partitions
/// are trivial (max index equals expected index) the result is 1 for
/// identical partitions and 0 otherwise.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64, ClusterError> {
    if a.len() != b.len() {
        return Err(ClusterError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(ClusterError::TooFewPoints { n, k: 2 });
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let expected = sum_a * sum_b / pairs(n as u64);
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        let identical = table.len() == rows.len() && table.len() == cols.len();
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}
