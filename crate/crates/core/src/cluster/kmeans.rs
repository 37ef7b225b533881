use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ClusterError;

pub const KMEANS_MAX_ITER: usize = 300;
/// Lloyd stops once no centroid moves farther than this.
pub const KMEANS_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Cluster index in `[0, k)` per point.
    pub labels: Vec<usize>,
    /// k×d.
    pub centroids: Array2<f64>,
    /// `Σ ‖x − c_label(x)‖²`.
    pub inertia: f64,
    pub seed: u64,
    pub n_init_used: usize,
}

impl ClusterResult {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }
}

/// Best of `n_init` k-means++-seeded Lloyd runs by inertia. Restart `r`
/// uses seed `seed + r`; equal inertia goes to the lowest `r`.
pub fn kmeans(
    points: ArrayView2<f64>,
    k: usize,
    n_init: usize,
    seed: u64,
) -> Result<ClusterResult, ClusterError> {
    let n = points.nrows();
    if k == 0 || n_init == 0 {
        return Err(ClusterError::InvalidParameter("k and n_init must be positive".into()));
    }
    if n < k {
        return Err(ClusterError::TooFewPoints { n, k });
    }
    let x = Points::new(points);
    let runs: Vec<(Vec<usize>, Centroids, f64)> = (0..n_init)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            lloyd(&x, plus_plus(&x, k, &mut rng), k)
        })
        .collect();
    let (labels, centroids, inertia) = runs
        .into_iter()
        .reduce(|best, run| if run.2 < best.2 { run } else { best })
        .expect("n_init > 0");
    Ok(ClusterResult {
        labels,
        centroids: Array2::from_shape_vec((k, x.d), centroids).expect("k×d"),
        inertia,
        seed,
        n_init_used: n_init,
    })
}

/// Row-major copy of the points with their width.
struct Points {
    data: Vec<f64>,
    d: usize,
}

impl Points {
    fn new(x: ArrayView2<f64>) -> Self {
        Self {
            data: x.iter().copied().collect(),
            d: x.ncols(),
        }
    }

    fn len(&self) -> usize {
        self.data.len() / self.d
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k×d centroids, row-major.
type Centroids = Vec<f64>;

fn plus_plus(x: &Points, k: usize, rng: &mut ChaCha8Rng) -> Centroids {
    let n = x.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    chosen.iter().flat_map(|&c| x.row(c).iter().copied()).collect()
}

/// Nearest centroid per point (lowest index on ties) and its squared distance.
fn assign(x: &Points, c: &[f64], labels: &mut [usize], dist: &mut [f64]) {
    let d = x.d;
    for i in 0..x.len() {
        let row = x.row(i);
        let mut best = (0, f64::INFINITY);
        for (j, cen) in c.chunks_exact(d).enumerate() {
            let dd = sq_dist(row, cen);
            if dd < best.1 {
                best = (j, dd);
            }
        }
        labels[i] = best.0;
        dist[i] = best.1;
    }
}

/// Give every empty cluster the point currently farthest from its centroid.
fn fill_empty(labels: &mut [usize], dist: &mut [f64], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
            .expect("n >= k leaves a cluster with two members");
        labels[donor] = empty;
        dist[donor] = 0.0;
    }
}

fn means(x: &Points, labels: &[usize], k: usize) -> Centroids {
    let d = x.d;
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            sums[j * d..(j + 1) * d].iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

fn lloyd(x: &Points, mut centroids: Centroids, k: usize) -> (Vec<usize>, Centroids, f64) {
    let d = x.d;
    let n = x.len();
    let mut labels = vec![0usize; n];
    let mut dist = vec![0.0; n];
    for _ in 0..KMEANS_MAX_ITER {
        assign(x, &centroids, &mut labels, &mut dist);
        fill_empty(&mut labels, &mut dist, k);
        let updated = means(x, &labels, k);
        let shift = updated
            .chunks_exact(d)
            .zip(centroids.chunks_exact(d))
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < KMEANS_TOLERANCE {
            break;
        }
    }
    assign(x, &centroids, &mut labels, &mut dist);
    let before = labels.clone();
    fill_empty(&mut labels, &mut dist, k);
    if labels != before {
        centroids = means(x, &labels, k);
    }
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(x.row(i), &centroids[l * d..(l + 1) * d]))
        .sum();
    (labels, centroids, inertia)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::sq_euclidean;
    use ndarray::array;

    #[test]
    fn each_point_its_own_cluster() {
        let x = array![[0.0, 0.0], [5.0, 1.0], [-3.0, 4.0]];
        let r = kmeans(x.view(), 3, 10, 0).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut labels = r.labels.clone();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let x = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        let r = kmeans(x.view(), 2, 3, 4).unwrap();
        assert!(r.labels.contains(&0) && r.labels.contains(&1));
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn inertia_matches_labels() {
        let x = Array2::from_shape_fn((60, 3), |(r, c)| ((r * 13 + c * 7) as f64 * 0.71).sin() * 3.0);
        let r = kmeans(x.view(), 4, 5, 11).unwrap();
        let recomputed: f64 = r
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| sq_euclidean(x.row(i), r.centroids.row(l)))
            .sum();
        assert!((recomputed - r.inertia).abs() < 1e-8);
        let again = kmeans(x.view(), 4, 5, 11).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn too_few_points() {
        let x = array![[0.0], [1.0]];
        assert_eq!(
            kmeans(x.view(), 3, 1, 0),
            Err(ClusterError::TooFewPoints { n: 2, k: 3 })
        );
    }
}
