//! Principal component analysis on the sample covariance (divisor `n`).

use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::linalg::{eig_sym, Matrix};
use crate::Scalar;

/// Fitted PCA: feature means, the top-`k` eigenvectors of the covariance as
/// columns, and the full eigenvalue spectrum in descending order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel<S: Scalar> {
    mean: Vec<S>,
    components: Matrix<S>,
    eigenvalues: Vec<S>,
}

impl<S: Scalar> PcaModel<S> {
    pub fn k(&self) -> usize {
        self.components.cols()
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    /// Eigenvector matrix, `m x k`, columns in descending eigenvalue order.
    pub fn components(&self) -> &Matrix<S> {
        &self.components
    }

    /// All `m` covariance eigenvalues in descending order, not just the
    /// retained ones; the tail is what a `k`-component reconstruction loses.
    pub fn eigenvalues(&self) -> &[S] {
        &self.eigenvalues
    }

    /// Projects rows onto the retained components: `(x - mean) V_k`.
    pub fn transform(&self, x: &Matrix<S>) -> Matrix<S> {
        x.sub_row_broadcast(&self.mean).matmul(&self.components)
    }

    /// Maps scores back through the transposed components and re-adds the
    /// mean.
    pub fn inverse_transform(&self, scores: &Matrix<S>) -> Matrix<S> {
        scores.matmul_t(&self.components).add_row_broadcast(&self.mean)
    }

    pub fn reconstruct(&self, x: &Matrix<S>) -> Matrix<S> {
        self.inverse_transform(&self.transform(x))
    }
}

/// Covariance of already-centered rows with divisor `n`.
pub(super) fn covariance<S: Scalar>(centered: &Matrix<S>) -> Matrix<S> {
    let n = S::from_usize(centered.rows()).unwrap();
    centered.t_matmul(centered).scale(n.recip())
}

/// Fits PCA with `k` components. Requires `1 <= k <= m` and at least two
/// rows.
pub fn pca_fit<S: Scalar>(x: &Matrix<S>, k: usize) -> Result<PcaModel<S>, BaselineError> {
    let m = x.cols();
    if k == 0 || k > m {
        return Err(BaselineError::RankError { k, m });
    }
    assert!(x.rows() >= 2, "pca needs at least two rows");
    let mean = x.col_means();
    let centered = x.sub_row_broadcast(&mean);
    let (eigenvalues, vectors) = eig_sym(&covariance(&centered))?;
    let mut components = Matrix::zeros(m, k);
    for j in 0..k {
        for i in 0..m {
            components[(i, j)] = vectors[(i, j)];
        }
    }
    Ok(PcaModel { mean, components, eigenvalues })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_normal, Rng};
    use crate::Mat;

    fn mse(a: &Mat, b: &Mat) -> f64 {
        let diff = a.sub(b);
        let total: f64 = diff.data().iter().map(|d| d * d).sum();
        total / (a.rows() * a.cols()) as f64
    }

    /// Random data with strong linear structure: a few latent directions
    /// plus small isotropic noise.
    fn structured(n: usize, m: usize, factors: usize, seed: u64) -> Mat {
        let mut rng = Rng::new(seed);
        let z = sample_normal::<f64>(&mut rng, n, factors);
        let w = sample_normal::<f64>(&mut rng, factors, m);
        let noise = sample_normal::<f64>(&mut rng, n, m).scale(0.05);
        z.matmul(&w).add(&noise)
    }

    #[test]
    fn line_data_reconstructs_exactly_with_one_component() {
        // Points on y = 2x lie in a one-dimensional subspace.
        let x = Mat::from_rows(&[
            vec![1.0, 2.0],
            vec![2.0, 4.0],
            vec![-1.0, -2.0],
            vec![0.5, 1.0],
        ]);
        let model = pca_fit(&x, 1).unwrap();
        let recon = model.reconstruct(&x);
        assert!(mse(&recon, &x) < 1e-10);
    }

    #[test]
    fn full_rank_reconstruction_is_exact() {
        let x = structured(40, 5, 5, 7);
        let model = pca_fit(&x, 5).unwrap();
        assert!(mse(&model.reconstruct(&x), &x) < 1e-10);
    }

    #[test]
    fn training_mse_equals_sum_of_discarded_eigenvalues() {
        // The optimal k-dim linear reconstruction loses exactly the energy
        // in the dropped eigendirections, averaged per coordinate.
        let x = structured(50, 8, 3, 11);
        let model = pca_fit(&x, 3).unwrap();
        let discarded: f64 = model.eigenvalues()[3..].iter().sum();
        let expected = discarded / 8.0;
        let got = mse(&model.reconstruct(&x), &x);
        assert!(
            (got - expected).abs() < 1e-10,
            "mse {got} vs discarded-eigenvalue prediction {expected}"
        );
    }

    #[test]
    fn training_mse_is_monotone_in_k() {
        let x = structured(60, 6, 4, 13);
        let mut previous = f64::INFINITY;
        for k in 1..=6 {
            let model = pca_fit(&x, k).unwrap();
            let err = mse(&model.reconstruct(&x), &x);
            assert!(
                err <= previous + 1e-12,
                "k={k}: error {err} rose above {previous}"
            );
            previous = err;
        }
    }

    #[test]
    fn scores_are_decorrelated() {
        let x = structured(80, 7, 7, 17);
        let model = pca_fit(&x, 4).unwrap();
        let scores = model.transform(&x);
        let centered = scores.sub_row_broadcast(&scores.col_means());
        let cov = covariance(&centered);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(cov[(i, j)].abs() < 1e-8, "cov[{i},{j}] = {}", cov[(i, j)]);
                }
            }
        }
        // Score variances are the retained eigenvalues.
        for i in 0..4 {
            assert!((cov[(i, i)] - model.eigenvalues()[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_k_larger_than_feature_count() {
        let x = structured(10, 3, 3, 19);
        assert!(matches!(
            pca_fit(&x, 4),
            Err(BaselineError::RankError { k: 4, m: 3 })
        ));
        assert!(matches!(pca_fit(&x, 0), Err(BaselineError::RankError { .. })));
    }

    #[test]
    fn transform_centers_with_training_mean() {
        let x = Mat::from_rows(&[vec![10.0, 0.0], vec![12.0, 0.0], vec![14.0, 0.0]]);
        let model = pca_fit(&x, 1).unwrap();
        // The component is the x-axis; the mean row maps to score zero.
        let mid = Mat::from_rows(&[vec![12.0, 0.0]]);
        let score = model.transform(&mid);
        assert!(score[(0, 0)].abs() < 1e-12);
    }
}
