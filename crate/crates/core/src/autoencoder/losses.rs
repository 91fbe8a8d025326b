use super::model::LOG_VAR_CLAMP;
use crate::{Matrix, Scalar};

/// Reconstruction loss: mean over samples of the squared L2 residual,
/// `(1/n) sum_i |x_i - x_hat_i|^2`. Deliberately not divided by the
/// feature count; per-element errors live in [`per_sample_errors`].
///
/// Panics if the shapes differ.
pub fn loss_eq1<S: Scalar>(x: &Matrix<S>, x_hat: &Matrix<S>) -> S {
    assert_eq!(x.shape(), x_hat.shape(), "loss over mismatched shapes");
    let n = S::cast(x.rows() as f64);
    let mut total = S::zero();
    for (a, b) in x.data().iter().zip(x_hat.data()) {
        let d = *a - *b;
        total += d * d;
    }
    total / n
}

/// KL divergence between the diagonal Gaussian `N(mu, diag(sigma^2))` and
/// the standard normal, averaged over the batch:
/// `mean_i (1/2) sum_j (mu_j^2 + sigma_j^2 - log sigma_j^2 - 1)`.
/// Log-variances are clamped to `[-10, 10]` before exponentiation.
pub fn kl_divergence<S: Scalar>(mu: &Matrix<S>, log_var: &Matrix<S>) -> S {
    assert_eq!(mu.shape(), log_var.shape(), "kl over mismatched shapes");
    let clamp = S::cast(LOG_VAR_CLAMP);
    let half = S::cast(0.5);
    let n = S::cast(mu.rows() as f64);
    let mut total = S::zero();
    for (m, lv) in mu.data().iter().zip(log_var.data()) {
        let lv = (*lv).max(-clamp).min(clamp);
        total += half * (*m * *m + lv.exp() - lv - S::one());
    }
    total / n
}

/// Variational loss: reconstruction plus `beta` times the KL term.
/// `beta = 1` is the plain unweighted sum. Returns (total, recon, kl).
pub fn loss_eq2<S: Scalar>(
    x: &Matrix<S>,
    x_hat: &Matrix<S>,
    mu: &Matrix<S>,
    log_var: &Matrix<S>,
    beta: S,
) -> (S, S, S) {
    let recon = loss_eq1(x, x_hat);
    let kl = kl_divergence(mu, log_var);
    (recon + beta * kl, recon, kl)
}

/// Per-sample reconstruction errors `|x_i - x_hat_i|^2 / m`. Dividing by
/// the width makes scores comparable across feature counts; multiplying
/// the mean by `m` recovers [`loss_eq1`].
pub fn per_sample_errors<S: Scalar>(x: &Matrix<S>, x_hat: &Matrix<S>) -> Vec<S> {
    assert_eq!(x.shape(), x_hat.shape(), "errors over mismatched shapes");
    let m = S::cast(x.cols() as f64);
    (0..x.rows())
        .map(|i| {
            let mut acc = S::zero();
            for (a, b) in x.row(i).iter().zip(x_hat.row(i)) {
                let d = *a - *b;
                acc += d * d;
            }
            acc / m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_normal, Rng};
    use crate::Mat;

    #[test]
    fn perfect_reconstruction_costs_nothing() {
        let x = Mat::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]);
        assert_eq!(loss_eq1(&x, &x), 0.0);
    }

    #[test]
    fn single_row_squared_norm() {
        let x = Mat::from_rows(&[vec![1.0, 2.0]]);
        let x_hat = Mat::zeros(1, 2);
        assert_eq!(loss_eq1(&x, &x_hat), 5.0);
    }

    #[test]
    fn loss_averages_per_row_norms() {
        // Row norms 5 and 3; mean 4. No division by the width.
        let x = Mat::from_rows(&[vec![1.0, 2.0], vec![1.0, 1.0]]);
        let x_hat = Mat::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0 - 2.0f64.sqrt()]]);
        assert!((loss_eq1(&x, &x_hat) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn loss_is_row_permutation_invariant() {
        let mut rng = Rng::new(2);
        let x = sample_normal::<f64>(&mut rng, 6, 4);
        let x_hat = sample_normal::<f64>(&mut rng, 6, 4);
        let perm = [3usize, 0, 5, 1, 4, 2];
        let a = loss_eq1(&x, &x_hat);
        let b = loss_eq1(&x.select_rows(&perm), &x_hat.select_rows(&perm));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn standard_normal_code_has_zero_kl() {
        let mu = Mat::zeros(3, 4);
        let lv = Mat::zeros(3, 4);
        assert_eq!(kl_divergence(&mu, &lv), 0.0);
    }

    #[test]
    fn unit_mean_shift_costs_half() {
        let mu = Mat::from_rows(&[vec![1.0]]);
        let lv = Mat::zeros(1, 1);
        assert!((kl_divergence(&mu, &lv) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn doubled_deviation_matches_closed_form() {
        let mu = Mat::zeros(1, 1);
        let lv = Mat::from_rows(&[vec![4.0f64.ln()]]);
        let expected = 0.5 * (4.0 - 4.0f64.ln() - 1.0);
        assert!((kl_divergence(&mu, &lv) - expected).abs() < 1e-12);
    }

    #[test]
    fn kl_is_nonnegative_and_zero_only_at_the_prior() {
        let mut rng = Rng::new(5);
        for _ in 0..200 {
            let mu = sample_normal::<f64>(&mut rng, 2, 3).scale(2.0);
            let lv = sample_normal::<f64>(&mut rng, 2, 3).scale(3.0);
            let kl = kl_divergence(&mu, &lv);
            assert!(kl >= 0.0);
            if kl < 1e-12 {
                assert!(mu.max_abs() < 1e-5 && lv.max_abs() < 1e-5);
            }
        }
    }

    #[test]
    fn extreme_log_var_is_clamped_not_infinite() {
        let mu = Mat::zeros(1, 1);
        let lv = Mat::from_rows(&[vec![1e6]]);
        let kl = kl_divergence(&mu, &lv);
        assert!(kl.is_finite());
        let expected = 0.5 * (10f64.exp() - 10.0 - 1.0);
        assert!((kl - expected).abs() < 1e-9);
    }

    #[test]
    fn total_is_recon_plus_beta_kl() {
        let mut rng = Rng::new(8);
        let x = sample_normal::<f64>(&mut rng, 4, 3);
        let x_hat = sample_normal::<f64>(&mut rng, 4, 3);
        let mu = sample_normal::<f64>(&mut rng, 4, 2);
        let lv = sample_normal::<f64>(&mut rng, 4, 2);
        let (total, recon, kl) = loss_eq2(&x, &x_hat, &mu, &lv, 1.0);
        assert!((total - (recon + kl)).abs() < 1e-12);
        let (total0, recon0, _) = loss_eq2(&x, &x_hat, &mu, &lv, 0.0);
        assert_eq!(total0, recon0);
        let (total2, ..) = loss_eq2(&x, &x_hat, &mu, &lv, 2.5);
        assert!((total2 - (recon + 2.5 * kl)).abs() < 1e-12);
    }

    #[test]
    fn per_sample_errors_divide_by_width() {
        let x = Mat::from_rows(&[vec![1.0, 1.0]]);
        let x_hat = Mat::zeros(1, 2);
        assert_eq!(per_sample_errors(&x, &x_hat), vec![1.0]);
    }

    #[test]
    fn mean_error_times_width_recovers_the_loss() {
        let mut rng = Rng::new(13);
        let x = sample_normal::<f64>(&mut rng, 9, 5);
        let x_hat = sample_normal::<f64>(&mut rng, 9, 5);
        let errors = per_sample_errors(&x, &x_hat);
        let mean: f64 = errors.iter().sum::<f64>() / errors.len() as f64;
        assert!((mean * 5.0 - loss_eq1(&x, &x_hat)).abs() < 1e-12);
    }
}
