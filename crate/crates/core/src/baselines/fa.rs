//! Factor analysis fitted by expectation-maximization.
//!
//! The generative model is `x = mean + Lambda z + eps` with `z ~ N(0, I_k)`
//! and diagonal noise `eps ~ N(0, diag(psi))`, so the model covariance is
//! `Lambda Lambda^T + diag(psi)`. EM runs on the sample covariance; the
//! small `k x k` system `I + Lambda^T Psi^{-1} Lambda` carries all the
//! inversions (Woodbury), so cost per iteration stays at `O(k m^2)`.

use serde::{Deserialize, Serialize};

use super::pca::covariance;
use super::BaselineError;
use crate::linalg::{eig_sym, Matrix};
use crate::Scalar;

/// Uniquenesses are floored here; keeps `Psi^{-1}` finite for
/// zero-variance columns.
const PSI_FLOOR: f64 = 1e-6;

/// Fitted factor-analysis model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaModel<S: Scalar> {
    mean: Vec<S>,
    loadings: Matrix<S>,
    psi: Vec<S>,
    converged: bool,
    iterations: usize,
    log_likelihood: Vec<f64>,
}

impl<S: Scalar> FaModel<S> {
    pub fn k(&self) -> usize {
        self.loadings.cols()
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    /// Loading matrix, `m x k`.
    pub fn loadings(&self) -> &Matrix<S> {
        &self.loadings
    }

    /// Per-feature noise variances, each at least the `1e-6` floor.
    pub fn psi(&self) -> &[S] {
        &self.psi
    }

    /// False when EM hit its iteration cap before the log-likelihood change
    /// dropped below tolerance; the model still holds the best fit found.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Average per-sample log-likelihood after each EM iteration.
    pub fn log_likelihood_history(&self) -> &[f64] {
        &self.log_likelihood
    }

    /// Posterior factor scores by the regression method:
    /// `z = (I + Lambda^T Psi^{-1} Lambda)^{-1} Lambda^T Psi^{-1} (x - mean)`.
    pub fn transform(&self, x: &Matrix<S>) -> Matrix<S> {
        let centered = x.sub_row_broadcast(&self.mean);
        let projector = regression_projector(&self.loadings, &self.psi);
        centered.matmul_t(&projector)
    }

    pub fn reconstruct(&self, x: &Matrix<S>) -> Matrix<S> {
        self.transform(x)
            .matmul_t(&self.loadings)
            .add_row_broadcast(&self.mean)
    }
}

/// `Lambda^T` with every column `j` divided by `psi_j`, i.e.
/// `Lambda^T Psi^{-1}` (`k x m`).
fn loadings_over_psi<S: Scalar>(loadings: &Matrix<S>, psi: &[S]) -> Matrix<S> {
    let (m, k) = loadings.shape();
    let mut out = Matrix::zeros(k, m);
    for i in 0..m {
        for j in 0..k {
            out[(j, i)] = loadings[(i, j)] / psi[i];
        }
    }
    out
}

/// `M = I + Lambda^T Psi^{-1} Lambda`, its eigendecomposition inverted, as
/// `(M^{-1}, ln det M)`. Eigenvalues of `M` are >= 1, so the inverse is
/// safe.
fn posterior_gram<S: Scalar>(
    lt_psi_inv: &Matrix<S>,
    loadings: &Matrix<S>,
) -> Result<(Matrix<S>, f64), BaselineError> {
    let k = loadings.cols();
    let mut m_mat = lt_psi_inv.matmul(loadings);
    for j in 0..k {
        m_mat[(j, j)] += S::one();
    }
    // Symmetrize away accumulation noise before the eigensolve.
    let m_sym = m_mat.add(&m_mat.transpose()).scale(S::cast(0.5));
    let (values, vectors) = eig_sym(&m_sym)?;
    let mut log_det = 0.0;
    let mut scaled = Matrix::zeros(k, k);
    for j in 0..k {
        log_det += values[j].to_f64_lossy().ln();
        for i in 0..k {
            scaled[(i, j)] = vectors[(i, j)] / values[j];
        }
    }
    Ok((scaled.matmul_t(&vectors), log_det))
}

/// Regression score matrix `(I + Lambda^T Psi^{-1} Lambda)^{-1} Lambda^T
/// Psi^{-1}` (`k x m`).
fn regression_projector<S: Scalar>(loadings: &Matrix<S>, psi: &[S]) -> Matrix<S> {
    let lt_psi_inv = loadings_over_psi(loadings, psi);
    let (m_inv, _) = posterior_gram(&lt_psi_inv, loadings)
        .expect("posterior gram of a fitted model is well conditioned");
    m_inv.matmul(&lt_psi_inv)
}

fn floor_psi<S: Scalar>(psi: &mut [S]) {
    let floor = S::cast(PSI_FLOOR);
    for p in psi.iter_mut() {
        if *p < floor {
            *p = floor;
        }
    }
}

/// Fits factor analysis with `k` factors by EM on the sample covariance.
/// Stops when the average per-sample log-likelihood changes by less than
/// `tol`, or flags non-convergence after `max_iter` iterations and returns
/// the best fit so far.
pub fn fa_fit<S: Scalar>(
    x: &Matrix<S>,
    k: usize,
    max_iter: usize,
    tol: f64,
) -> Result<FaModel<S>, BaselineError> {
    let (n, m) = x.shape();
    if k == 0 || k >= m {
        return Err(BaselineError::RankError { k, m });
    }
    assert!(n >= 2, "factor analysis needs at least two rows");
    let mean = x.col_means();
    let centered = x.sub_row_broadcast(&mean);
    let sample_cov = covariance(&centered);

    // Deterministic init from the covariance eigenstructure: loadings carry
    // the top-k directions at their observed scale, psi picks up the rest
    // of the diagonal.
    let (eigenvalues, vectors) = eig_sym(&sample_cov)?;
    let mut loadings = Matrix::zeros(m, k);
    for j in 0..k {
        let scale = eigenvalues[j].max(S::zero()).sqrt();
        for i in 0..m {
            loadings[(i, j)] = vectors[(i, j)] * scale;
        }
    }
    let mut psi: Vec<S> = (0..m)
        .map(|i| {
            let explained: S = (0..k).map(|j| loadings[(i, j)] * loadings[(i, j)]).sum();
            sample_cov[(i, i)] - explained
        })
        .collect();
    floor_psi(&mut psi);

    let half_m_ln_2pi = 0.5 * m as f64 * (2.0 * std::f64::consts::PI).ln();
    let mut history = Vec::with_capacity(max_iter);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..max_iter {
        let lt_psi_inv = loadings_over_psi(&loadings, &psi);
        let (m_inv, log_det_m) = posterior_gram(&lt_psi_inv, &loadings)?;

        // Average log-likelihood under the current parameters, using
        // ln det(Sigma) = ln det(M) + sum ln psi and the Woodbury form of
        // tr(Sigma^{-1} S).
        let beta = m_inv.matmul(&lt_psi_inv);
        let beta_s = beta.matmul(&sample_cov);
        let mut log_det_sigma = log_det_m;
        let mut trace = 0.0;
        for i in 0..m {
            let p = psi[i].to_f64_lossy();
            log_det_sigma += p.ln();
            trace += sample_cov[(i, i)].to_f64_lossy() / p;
        }
        for i in 0..m {
            for j in 0..k {
                trace -=
                    (loadings[(i, j)] / psi[i]).to_f64_lossy() * beta_s[(j, i)].to_f64_lossy();
            }
        }
        let ll = -half_m_ln_2pi - 0.5 * (log_det_sigma + trace);
        let improved_below_tol = history
            .last()
            .is_some_and(|prev: &f64| (ll - prev).abs() < tol);
        history.push(ll);
        iterations = iter + 1;
        if improved_below_tol {
            converged = true;
            break;
        }

        // M-step. E[z z^T] averaged over the data is M^{-1} + beta S beta^T.
        let ezz = m_inv.add(&beta_s.matmul_t(&beta));
        let (ezz_vals, ezz_vecs) = eig_sym(&ezz.add(&ezz.transpose()).scale(S::cast(0.5)))?;
        let cutoff = S::cast(1e-12) * ezz_vals[0].max(S::epsilon());
        let mut scaled = Matrix::zeros(k, k);
        for j in 0..k {
            if ezz_vals[j] > cutoff {
                for i in 0..k {
                    scaled[(i, j)] = ezz_vecs[(i, j)] / ezz_vals[j];
                }
            }
        }
        let ezz_inv = scaled.matmul_t(&ezz_vecs);
        loadings = beta_s.transpose().matmul(&ezz_inv);
        for i in 0..m {
            let mut cross = S::zero();
            for j in 0..k {
                cross += loadings[(i, j)] * beta_s[(j, i)];
            }
            psi[i] = sample_cov[(i, i)] - cross;
        }
        floor_psi(&mut psi);
    }

    Ok(FaModel {
        mean,
        loadings,
        psi,
        converged,
        iterations,
        log_likelihood: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_normal, Rng};
    use crate::Mat;

    /// One-factor data: x = z lambda^T + sigma * noise.
    fn one_factor(n: usize, lambda: &[f64], sigma: f64, seed: u64) -> (Mat, Mat) {
        let mut rng = Rng::new(seed);
        let m = lambda.len();
        let z = sample_normal::<f64>(&mut rng, n, 1);
        let mut x = Mat::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] = z[(i, 0)] * lambda[j] + sigma * rng.normal::<f64>();
            }
        }
        (x, z)
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    #[test]
    fn recovers_a_single_loading_direction() {
        let lambda = [2.0, -1.0, 0.5, 1.5, -0.25, 1.0];
        let (x, _) = one_factor(500, &lambda, 0.01, 101);
        let model = fa_fit(&x, 1, 200, 1e-6).unwrap();
        let fitted: Vec<f64> = (0..6).map(|i| model.loadings()[(i, 0)]).collect();
        let corr = correlation(&fitted, &lambda);
        assert!(corr.abs() > 0.99, "loading correlation {corr}");
    }

    #[test]
    fn reconstruction_error_tracks_the_generative_noise() {
        let lambda = [2.0, -1.0, 0.5, 1.5, -0.25, 1.0];
        let sigma = 0.01;
        let (x, _) = one_factor(500, &lambda, sigma, 103);
        let model = fa_fit(&x, 1, 200, 1e-6).unwrap();
        let recon = model.reconstruct(&x);
        let diff = recon.sub(&x);
        let mse: f64 =
            diff.data().iter().map(|d| d * d).sum::<f64>() / (diff.rows() * diff.cols()) as f64;
        assert!(mse < 2.0 * sigma * sigma, "mse {mse}");
    }

    #[test]
    fn pure_noise_yields_near_diagonal_model_covariance() {
        let mut rng = Rng::new(107);
        let x = sample_normal::<f64>(&mut rng, 2000, 5);
        let model = fa_fit(&x, 1, 200, 1e-6).unwrap();
        // With no shared structure the loadings capture only sampling
        // noise, so the off-diagonal part of Lambda Lambda^T stays small
        // and the reconstruction hugs the column means.
        let lam = model.loadings();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    let off = lam[(i, 0)] * lam[(j, 0)];
                    assert!(off.abs() < 0.2, "model cov [{i},{j}] = {off}");
                }
            }
        }
        let recon = model.reconstruct(&x);
        let means = x.col_means();
        let mut total = 0.0;
        for i in 0..recon.rows() {
            for j in 0..5 {
                total += (recon[(i, j)] - means[j]).abs();
            }
        }
        let mean_abs_dev = total / (recon.rows() * 5) as f64;
        assert!(mean_abs_dev < 0.25, "reconstruction drifts from means: {mean_abs_dev}");
    }

    #[test]
    fn zero_variance_column_hits_the_psi_floor_without_blowup() {
        let lambda = [1.0, -0.5, 0.75];
        let (base, _) = one_factor(200, &lambda, 0.05, 109);
        // Append a constant column.
        let mut x = Mat::zeros(200, 4);
        for i in 0..200 {
            for j in 0..3 {
                x[(i, j)] = base[(i, j)];
            }
            x[(i, 3)] = 7.0;
        }
        let model = fa_fit(&x, 1, 200, 1e-6).unwrap();
        assert_eq!(model.psi()[3], 1e-6);
        assert!(model.loadings().all_finite());
        assert!(model.reconstruct(&x).all_finite());
        // The constant column reconstructs as its constant.
        let recon = model.reconstruct(&x);
        for i in 0..200 {
            assert!((recon[(i, 3)] - 7.0).abs() < 1e-6);
        }
    }

    #[test]
    fn log_likelihood_is_non_decreasing() {
        let lambda = [1.0, 2.0, -1.0, 0.5, 0.25];
        let (x, _) = one_factor(300, &lambda, 0.2, 113);
        let model = fa_fit(&x, 2, 200, 0.0).unwrap();
        let history = model.log_likelihood_history();
        assert!(history.len() > 2);
        for w in history.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-9,
                "log-likelihood dropped: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn flags_non_convergence_at_the_iteration_cap() {
        let lambda = [1.0, 2.0, -1.0, 0.5];
        let (x, _) = one_factor(150, &lambda, 0.3, 127);
        let model = fa_fit(&x, 2, 2, 0.0).unwrap();
        assert!(!model.converged());
        assert_eq!(model.iterations(), 2);
        assert!(model.loadings().all_finite());
        // A generous budget with a realistic tolerance converges.
        let model = fa_fit(&x, 2, 200, 1e-6).unwrap();
        assert!(model.converged());
    }

    #[test]
    fn rejects_k_not_below_feature_count() {
        let (x, _) = one_factor(50, &[1.0, 2.0, 3.0], 0.1, 131);
        assert!(matches!(fa_fit(&x, 3, 10, 1e-6), Err(BaselineError::RankError { .. })));
        assert!(matches!(fa_fit(&x, 0, 10, 1e-6), Err(BaselineError::RankError { .. })));
    }

    #[test]
    fn scores_come_from_the_regression_formula() {
        // Hand-check the projector on a tiny fitted model.
        let lambda = [1.5, -1.0, 0.5, 2.0];
        let (x, _) = one_factor(400, &lambda, 0.05, 137);
        let model = fa_fit(&x, 1, 200, 1e-6).unwrap();
        let z = model.transform(&x);
        // Independent recomputation, scalar k=1 case:
        // z = (1 + sum l_j^2/psi_j)^{-1} * sum l_j (x_j - mean_j)/psi_j.
        let l: Vec<f64> = (0..4).map(|i| model.loadings()[(i, 0)]).collect();
        let psi = model.psi();
        let denom = 1.0 + l.iter().zip(psi).map(|(lj, pj)| lj * lj / pj).sum::<f64>();
        for i in [0usize, 17, 399] {
            let mut num = 0.0;
            for j in 0..4 {
                num += l[j] * (x[(i, j)] - model.mean()[j]) / psi[j];
            }
            assert!((z[(i, 0)] - num / denom).abs() < 1e-10);
        }
    }
}
