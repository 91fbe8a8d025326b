//! FastICA with PCA whitening, the logcosh contrast, and symmetric
//! decorrelation.

use serde::{Deserialize, Serialize};

use super::pca::covariance;
use super::BaselineError;
use crate::linalg::{eig_sym, pinv, sym_inv_sqrt, Matrix, Rng};
use crate::Scalar;

/// Fitted ICA model. `whitening` maps centered data to unit-covariance
/// coordinates, `unmixing` is the orthogonal rotation found by FastICA in
/// that space, and `mixing_pinv` maps sources straight back to feature
/// space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IcaModel<S: Scalar> {
    mean: Vec<S>,
    whitening: Matrix<S>,
    unmixing: Matrix<S>,
    mixing_pinv: Matrix<S>,
    converged: bool,
    iterations: usize,
    decorrelation_gap: f64,
}

impl<S: Scalar> IcaModel<S> {
    pub fn k(&self) -> usize {
        self.unmixing.rows()
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    /// Whitening matrix, `m x k`: `whitened = (x - mean) * whitening`.
    pub fn whitening(&self) -> &Matrix<S> {
        &self.whitening
    }

    /// Orthogonal unmixing matrix, `k x k`, rows unit-norm.
    pub fn unmixing(&self) -> &Matrix<S> {
        &self.unmixing
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Largest deviation of `W W^T` from the identity seen after any
    /// decorrelation step during fitting.
    pub fn decorrelation_gap(&self) -> f64 {
        self.decorrelation_gap
    }

    /// Estimated sources: `(x - mean) * whitening * W^T`.
    pub fn transform(&self, x: &Matrix<S>) -> Matrix<S> {
        x.sub_row_broadcast(&self.mean)
            .matmul(&self.whitening)
            .matmul_t(&self.unmixing)
    }

    /// Maps sources back through the pseudo-inverse of the whole unmixing
    /// chain; equals the rank-`k` PCA subspace projection of the input.
    pub fn reconstruct(&self, x: &Matrix<S>) -> Matrix<S> {
        self.transform(x)
            .matmul(&self.mixing_pinv)
            .add_row_broadcast(&self.mean)
    }
}

/// Fits FastICA with `k` components. Stops once every unmixing row moves by
/// less than `tol` (as `1 - |<w_new, w_old>|`) in one sweep, or flags
/// non-convergence after `max_iter` sweeps and keeps the best-so-far
/// rotation. `rng` seeds the initial rotation only.
pub fn ica_fit<S: Scalar>(
    x: &Matrix<S>,
    k: usize,
    max_iter: usize,
    tol: f64,
    rng: &mut Rng,
) -> Result<IcaModel<S>, BaselineError> {
    let (n, m) = x.shape();
    if k == 0 || k > m {
        return Err(BaselineError::RankError { k, m });
    }
    assert!(n >= 2, "ica needs at least two rows");
    let mean = x.col_means();
    let centered = x.sub_row_broadcast(&mean);
    let (eigenvalues, vectors) = eig_sym(&covariance(&centered))?;

    // Whitening from the top-k eigenpairs; eigenvalues are floored so
    // rank-deficient input stays finite (the result is then meaningless but
    // well defined).
    let floor = (eigenvalues[0] * S::cast(1e-12)).max(S::cast(f64::MIN_POSITIVE));
    let mut whitening = Matrix::zeros(m, k);
    for j in 0..k {
        let scale = eigenvalues[j].max(floor).sqrt().recip();
        for i in 0..m {
            whitening[(i, j)] = vectors[(i, j)] * scale;
        }
    }
    let white = centered.matmul(&whitening);
    let n_scalar = S::from_usize(n).unwrap();

    let decorrelate = |w: &Matrix<S>| -> Result<Matrix<S>, BaselineError> {
        Ok(sym_inv_sqrt(&w.matmul_t(w))?.matmul(w))
    };
    let identity_gap = |w: &Matrix<S>| -> f64 {
        let gram = w.matmul_t(w);
        let mut gap: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                gap = gap.max((gram[(i, j)].to_f64_lossy() - target).abs());
            }
        }
        gap
    };

    let mut w = decorrelate(&crate::linalg::sample_normal::<S>(rng, k, k))?;
    let mut decorrelation_gap = identity_gap(&w);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..max_iter {
        // logcosh contrast with a = 1: g = tanh, g' = 1 - tanh^2.
        let sources = white.matmul_t(&w);
        let g = sources.map(|v| v.tanh());
        let mut g_prime_mean = vec![S::zero(); k];
        for i in 0..n {
            for j in 0..k {
                g_prime_mean[j] += S::one() - g[(i, j)] * g[(i, j)];
            }
        }
        let mut w_next = g.t_matmul(&white).scale(n_scalar.recip());
        for j in 0..k {
            let shrink = g_prime_mean[j] / n_scalar;
            for c in 0..k {
                w_next[(j, c)] -= shrink * w[(j, c)];
            }
        }
        let w_next = decorrelate(&w_next)?;
        decorrelation_gap = decorrelation_gap.max(identity_gap(&w_next));

        let mut drift: f64 = 0.0;
        for j in 0..k {
            let mut dot = S::zero();
            for c in 0..k {
                dot += w_next[(j, c)] * w[(j, c)];
            }
            drift = drift.max(1.0 - dot.abs().to_f64_lossy());
        }
        w = w_next;
        iterations = iter + 1;
        if drift < tol {
            converged = true;
            break;
        }
    }

    let mixing_pinv = w.matmul(&pinv(&whitening)?);
    Ok(IcaModel {
        mean,
        whitening,
        unmixing: w,
        mixing_pinv,
        converged,
        iterations,
        decorrelation_gap,
    })
}
