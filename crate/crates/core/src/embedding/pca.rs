use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};

use super::EmbeddingError;
use crate::matrix::FeatureMatrix;

/// Principal axes of a centred data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// d×k, orthonormal columns (zero columns past the numerical rank).
    pub components: Array2<f64>,
    /// Sample variance along each component, `s² / (N − 1)`.
    pub explained_variance: Vec<f64>,
    /// Components beyond the numerical rank of the data.
    pub rank_deficient: Vec<usize>,
}

impl PcaModel {
    /// Top-`k` right singular vectors of the centred rows of `x`, by
    /// decreasing singular value. Each component's largest-magnitude entry
    /// is positive.
    pub fn fit(x: ArrayView2<f64>, k: usize) -> Result<Self, EmbeddingError> {
        let (n, d) = x.dim();
        if k == 0 || k > n.min(d) {
            return Err(EmbeddingError::TooManyComponents { k, n, d });
        }
        let mean = x.mean_axis(ndarray::Axis(0)).expect("non-empty");
        let centred = DMatrix::from_fn(n, d, |r, c| x[[r, c]] - mean[c]);
        let svd = centred.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let s = svd.singular_values;

        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        let s_max = s.iter().copied().fold(0.0, f64::max);
        let tol = n.max(d) as f64 * f64::EPSILON * s_max;

        let mut components = Array2::<f64>::zeros((d, k));
        let mut explained_variance = Vec::with_capacity(k);
        let mut rank_deficient = vec![];
        let denom = (n.max(2) - 1) as f64;
        for (slot, &idx) in order.iter().take(k).enumerate() {
            if s[idx] <= tol || s_max == 0.0 {
                rank_deficient.push(slot);
                explained_variance.push(0.0);
                continue;
            }
            let row = v_t.row(idx);
            let pivot = (0..d)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()).then(b.cmp(&a)))
                .expect("d > 0");
            let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
            for c in 0..d {
                components[[c, slot]] = sign * row[c];
            }
            explained_variance.push(s[idx] * s[idx] / denom);
        }
        Ok(Self {
            mean,
            components,
            explained_variance,
            rank_deficient,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    /// Coordinates of rows of `x` along the components.
    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let centred = &x - &self.mean.view().insert_axis(ndarray::Axis(0));
        centred.dot(&self.components)
    }

    /// Back-projection of component coordinates to the original space.
    pub fn inverse_transform(&self, scores: ArrayView2<f64>) -> Array2<f64> {
        scores.dot(&self.components.t()) + &self.mean.view().insert_axis(ndarray::Axis(0))
    }
}

pub fn fit_pca(m: &FeatureMatrix, k: usize) -> Result<PcaModel, EmbeddingError> {
    PcaModel::fit(m.values().view(), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_line() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let pca = PcaModel::fit(x.view(), 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pca.components[[0, 0]] - h).abs() < 1e-12);
        assert!((pca.components[[1, 0]] - h).abs() < 1e-12);
        assert!(pca.explained_variance[1].abs() < 1e-12);
        assert_eq!(pca.rank_deficient, vec![1]);
        assert!(pca.components.column(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn full_rank_round_trip() {
        let x = array![[1.0, 2.0, 0.5], [-1.0, 0.3, 2.0], [0.7, -1.2, 1.1], [2.0, 0.0, -0.4]];
        let pca = PcaModel::fit(x.view(), 3).unwrap();
        let back = pca.inverse_transform(pca.transform(x.view()).view());
        for (a, b) in x.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_too_many_components() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        assert!(matches!(
            PcaModel::fit(x.view(), 3),
            Err(EmbeddingError::TooManyComponents { .. })
        ));
    }
}
