use super::model::{AutoencoderModel, DenseLayer, ForwardCache, LOG_VAR_CLAMP};
use super::AeError;
use crate::{Matrix, Scalar};

/// Parameter gradients, shaped exactly like the model. Tensor order
/// matches `AutoencoderModel::param_slices_mut`.
#[derive(Clone, Debug)]
pub struct Gradients<S> {
    pub(super) encoder: Vec<(Matrix<S>, Vec<S>)>,
    pub(super) mu_head: Option<(Matrix<S>, Vec<S>)>,
    pub(super) logvar_head: Option<(Matrix<S>, Vec<S>)>,
    pub(super) decoder: Vec<(Matrix<S>, Vec<S>)>,
}

impl<S: Scalar> Gradients<S> {
    /// Flat views of every gradient tensor, in the same order as
    /// `AutoencoderModel::param_slices`.
    pub fn slices(&self) -> Vec<&[S]> {
        let mut out = Vec::new();
        for (w, b) in self
            .encoder
            .iter()
            .chain(self.mu_head.iter())
            .chain(self.logvar_head.iter())
            .chain(self.decoder.iter())
        {
            out.push(w.data());
            out.push(b.as_slice());
        }
        out
    }

    pub fn max_abs(&self) -> S {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(S::zero(), |acc, v| acc.max(v.abs()))
    }
}

fn col_sums<S: Scalar>(m: &Matrix<S>) -> Vec<S> {
    let mut out = vec![S::zero(); m.cols()];
    for r in 0..m.rows() {
        for (c, v) in m.row(r).iter().enumerate() {
            out[c] += *v;
        }
    }
    out
}

/// Backprop through one dense layer. Returns the gradient with respect to
/// the layer input.
fn layer_backward<S: Scalar>(
    layer: &DenseLayer<S>,
    input: &Matrix<S>,
    pre: &Matrix<S>,
    d_post: &Matrix<S>,
    grad_out: &mut (Matrix<S>, Vec<S>),
) -> Matrix<S> {
    let d_pre = d_post.zip_with(pre, |g, p| g * layer.activation.derivative(p));
    grad_out.0 = input.t_matmul(&d_pre);
    grad_out.1 = col_sums(&d_pre);
    d_pre.matmul_t(&layer.w)
}

impl<S: Scalar> AutoencoderModel<S> {
    /// Analytic gradients of the active loss for the batch recorded in
    /// `cache`: the reconstruction loss in plain mode, reconstruction plus
    /// `beta` times the KL term in variational mode (including the
    /// reparameterized pathway through the sampled code).
    pub fn backward(&self, cache: &ForwardCache<S>, beta: S) -> Result<Gradients<S>, AeError> {
        if cache.version != self.version {
            return Err(AeError::StaleCache);
        }
        let n = S::cast(cache.input.rows() as f64);
        let two = S::cast(2.0);

        let x_hat = cache.dec_post.last().expect("decoder is never empty");
        // d(recon)/d(x_hat) for (1/n) sum of squared L2 row norms.
        let mut d = x_hat.sub(&cache.input).scale(two / n);

        let mut decoder_grads: Vec<(Matrix<S>, Vec<S>)> = self
            .decoder
            .iter()
            .map(|l| (Matrix::zeros(l.w.rows(), l.w.cols()), vec![S::zero(); l.b.len()]))
            .collect();
        for idx in (0..self.decoder.len()).rev() {
            let input = if idx == 0 {
                &cache.z
            } else {
                &cache.dec_post[idx - 1]
            };
            d = layer_backward(
                &self.decoder[idx],
                input,
                &cache.dec_pre[idx],
                &d,
                &mut decoder_grads[idx],
            );
        }
        let dz = d;

        let mut encoder_grads: Vec<(Matrix<S>, Vec<S>)> = self
            .encoder
            .iter()
            .map(|l| (Matrix::zeros(l.w.rows(), l.w.cols()), vec![S::zero(); l.b.len()]))
            .collect();
        let mut mu_grads = None;
        let mut logvar_grads = None;

        let mut d_body = match (&self.mu_head, &self.logvar_head) {
            (None, None) => dz,
            (Some(mu_head), Some(lv_head)) => {
                let mu = cache.mu.as_ref().expect("variational cache has mu");
                let lv = cache.log_var.as_ref().expect("variational cache has log_var");
                let lv_raw = cache
                    .log_var_raw
                    .as_ref()
                    .expect("variational cache has raw log_var");
                let eps = cache.eps.as_ref().expect("variational cache has eps");
                let half = S::cast(0.5);
                let clamp = S::cast(LOG_VAR_CLAMP);

                // z = mu + exp(lv/2) * eps pushes dz into both heads; the
                // KL term adds its own derivative. Clamped entries pass no
                // gradient to the raw head output.
                let d_mu = dz.zip_with(mu, |g, m| g + beta * m / n);
                let mut d_lv = Matrix::zeros(dz.rows(), dz.cols());
                for r in 0..dz.rows() {
                    for c in 0..dz.cols() {
                        let sigma = (half * lv[(r, c)]).exp();
                        let from_z = dz[(r, c)] * eps[(r, c)] * half * sigma;
                        let from_kl = beta * half * (lv[(r, c)].exp() - S::one()) / n;
                        let masked = if lv_raw[(r, c)].abs() < clamp {
                            S::one()
                        } else {
                            S::zero()
                        };
                        d_lv[(r, c)] = (from_z + from_kl) * masked;
                    }
                }

                let body = cache.enc_post.last().unwrap_or(&cache.input);
                let mut mg = (Matrix::zeros(0, 0), Vec::new());
                let mut lg = (Matrix::zeros(0, 0), Vec::new());
                // Heads are linear; pre-activation equals the head output.
                let d_from_mu = layer_backward(mu_head, body, mu, &d_mu, &mut mg);
                let d_from_lv = layer_backward(lv_head, body, lv_raw, &d_lv, &mut lg);
                mu_grads = Some(mg);
                logvar_grads = Some(lg);
                d_from_mu.add(&d_from_lv)
            }
            _ => unreachable!("heads exist in pairs"),
        };

        for idx in (0..self.encoder.len()).rev() {
            let input = if idx == 0 {
                &cache.input
            } else {
                &cache.enc_post[idx - 1]
            };
            d_body = layer_backward(
                &self.encoder[idx],
                input,
                &cache.enc_pre[idx],
                &d_body,
                &mut encoder_grads[idx],
            );
        }

        Ok(Gradients {
            encoder: encoder_grads,
            mu_head: mu_grads,
            logvar_head: logvar_grads,
            decoder: decoder_grads,
        })
    }
}
