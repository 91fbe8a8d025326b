//! Least-squares linear map from an embedding back to feature space, used
//! to give non-invertible reducers (t-SNE) a reconstruction pathway.

use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::linalg::{pinv, Matrix};
use crate::Scalar;

/// Affine decoder `x_hat = z W + b` fitted by ordinary least squares.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearDecoder<S: Scalar> {
    weights: Matrix<S>,
    intercept: Vec<S>,
}

impl<S: Scalar> LinearDecoder<S> {
    /// Weight matrix, `k x m`.
    pub fn weights(&self) -> &Matrix<S> {
        &self.weights
    }

    pub fn intercept(&self) -> &[S] {
        &self.intercept
    }

    pub fn predict(&self, z: &Matrix<S>) -> Matrix<S> {
        z.matmul(&self.weights).add_row_broadcast(&self.intercept)
    }
}

/// Fits the decoder on paired rows of `z` (`n x k`) and `x` (`n x m`) by
/// solving the normal equations through a pseudo-inverse of `[z | 1]`, so
/// rank-deficient embeddings get the minimum-norm solution.
pub fn linear_decoder_fit<S: Scalar>(
    z: &Matrix<S>,
    x: &Matrix<S>,
) -> Result<LinearDecoder<S>, BaselineError> {
    assert_eq!(z.rows(), x.rows(), "embedding and target row counts differ");
    let (n, k) = z.shape();
    let mut augmented = Matrix::zeros(n, k + 1);
    for i in 0..n {
        for j in 0..k {
            augmented[(i, j)] = z[(i, j)];
        }
        augmented[(i, k)] = S::one();
    }
    let solution = pinv(&augmented)?.matmul(x);
    let m = x.cols();
    let mut weights = Matrix::zeros(k, m);
    for i in 0..k {
        for j in 0..m {
            weights[(i, j)] = solution[(i, j)];
        }
    }
    let intercept = (0..m).map(|j| solution[(k, j)]).collect();
    Ok(LinearDecoder { weights, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::pca_fit;
    use crate::linalg::{sample_normal, Rng};
    use crate::Mat;

    fn mse(a: &Mat, b: &Mat) -> f64 {
        let diff = a.sub(b);
        let total: f64 = diff.data().iter().map(|d| d * d).sum();
        total / (a.rows() * a.cols()) as f64
    }

    #[test]
    fn recovers_an_exact_affine_map() {
        let mut rng = Rng::new(41);
        let z = sample_normal::<f64>(&mut rng, 30, 3);
        let w = sample_normal::<f64>(&mut rng, 3, 5);
        let b = vec![1.0, -2.0, 0.5, 0.0, 3.0];
        let x = z.matmul(&w).add_row_broadcast(&b);
        let dec = linear_decoder_fit(&z, &x).unwrap();
        assert!(mse(&dec.predict(&z), &x) < 1e-10);
    }

    #[test]
    fn identity_embedding_reproduces_the_data() {
        let mut rng = Rng::new(43);
        let x = sample_normal::<f64>(&mut rng, 20, 4);
        let dec = linear_decoder_fit(&x, &x).unwrap();
        assert!(mse(&dec.predict(&x), &x) < 1e-10);
    }

    #[test]
    fn decoder_on_pca_scores_matches_pca_reconstruction() {
        // Least squares from PCA scores cannot beat the PCA decoder, and
        // the PCA decoder is already least-squares optimal, so the two
        // reconstructions coincide.
        let mut rng = Rng::new(47);
        let latent = sample_normal::<f64>(&mut rng, 60, 3);
        let mix = sample_normal::<f64>(&mut rng, 3, 7);
        let x = latent
            .matmul(&mix)
            .add(&sample_normal::<f64>(&mut rng, 60, 7).scale(0.1));
        let model = pca_fit(&x, 3).unwrap();
        let scores = model.transform(&x);
        let dec = linear_decoder_fit(&scores, &x).unwrap();
        let via_decoder = dec.predict(&scores);
        let via_pca = model.reconstruct(&x);
        assert!(mse(&via_decoder, &via_pca) < 1e-8);
    }

    #[test]
    fn constant_embedding_predicts_column_means() {
        let x = Mat::from_rows(&[vec![1.0, 10.0], vec![3.0, 20.0], vec![5.0, 30.0]]);
        let z = Mat::from_vec(3, 1, vec![2.0, 2.0, 2.0]);
        let dec = linear_decoder_fit(&z, &x).unwrap();
        let pred = dec.predict(&z);
        for i in 0..3 {
            assert!((pred[(i, 0)] - 3.0).abs() < 1e-9);
            assert!((pred[(i, 1)] - 20.0).abs() < 1e-9);
        }
    }
}
