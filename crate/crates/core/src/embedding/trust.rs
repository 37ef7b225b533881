use ndarray::Array2;
use rayon::prelude::*;

use super::{squared_distances, EmbeddingError};

/// Trustworthiness of an embedding at `k` neighbours: 1 minus the
/// normalised rank excess of embedding neighbours that are not original
/// neighbours. Euclidean distances, ties broken by sample index.
pub fn trustworthiness(
    original: &Array2<f64>,
    embedded: &Array2<f64>,
    k: usize,
) -> Result<f64, EmbeddingError> {
    let n = original.nrows();
    if embedded.nrows() != n {
        return Err(EmbeddingError::RowMismatch {
            original: n,
            embedded: embedded.nrows(),
        });
    }
    if k == 0 || 2 * k >= n {
        return Err(EmbeddingError::KTooLarge { k, n });
    }
    let d_orig = squared_distances(original);
    let d_emb = squared_distances(embedded);
    let penalties: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            let orig_order = neighbour_order(&d_orig, i);
            let mut rank = vec![0usize; n];
            for (r, &j) in orig_order.iter().enumerate() {
                rank[j] = r + 1;
            }
            neighbour_order(&d_emb, i)
                .into_iter()
                .take(k)
                .filter(|&j| rank[j] > k)
                .map(|j| rank[j] - k)
                .sum()
        })
        .collect();
    let total: usize = penalties.iter().sum();
    let (nf, kf) = (n as f64, k as f64);
    Ok(1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * total as f64)
}

/// Other samples sorted by distance from `i`, then by index.
fn neighbour_order(d: &Array2<f64>, i: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.nrows()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| d[[i, a]].total_cmp(&d[[i, b]]).then(a.cmp(&b)));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn similarity_transform_is_perfect() {
        let x = Array2::from_shape_fn((30, 2), |(r, c)| ((r * 7 + c * 3) as f64 * 0.37).sin() * (r + 1) as f64);
        let (s, c) = (0.6f64.sin(), 0.6f64.cos());
        let rot = array![[3.0 * c, 3.0 * s], [-3.0 * s, 3.0 * c]];
        let y = x.dot(&rot);
        assert_eq!(trustworthiness(&x, &y, 5).unwrap(), 1.0);
    }

    #[test]
    fn k_bound() {
        let x = Array2::<f64>::zeros((10, 2));
        assert!(matches!(trustworthiness(&x, &x, 5), Err(EmbeddingError::KTooLarge { .. })));
        assert!(trustworthiness(&x, &x, 4).is_ok());
    }
}
