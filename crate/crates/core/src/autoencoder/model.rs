use serde::{Deserialize, Serialize};

use super::AeError;
use crate::linalg::Rng;
use crate::{Matrix, Scalar};

/// Log-variance head outputs are clamped to this symmetric range before
/// exponentiation.
pub(super) const LOG_VAR_CLAMP: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn apply<S: Scalar>(self, pre: &Matrix<S>) -> Matrix<S> {
        match self {
            Activation::Relu => pre.map(|v| v.max(S::zero())),
            Activation::Linear => pre.clone(),
        }
    }

    /// Derivative as a function of the pre-activation value.
    pub(super) fn derivative<S: Scalar>(self, pre: S) -> S {
        match self {
            Activation::Relu => {
                if pre > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Linear => S::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_width: usize, output_width: usize, activation: Activation) -> Self {
        LayerSpec {
            input_width,
            output_width,
            activation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Plain,
    Variational,
}

#[derive(Clone, Debug, PartialEq)]
pub(super) struct DenseLayer<S> {
    pub(super) w: Matrix<S>,
    pub(super) b: Vec<S>,
    pub(super) activation: Activation,
}

impl<S: Scalar> DenseLayer<S> {
    fn init(spec: LayerSpec, rng: &mut Rng) -> Self {
        let bound = S::cast((6.0 / (spec.input_width + spec.output_width) as f64).sqrt());
        let mut w = Matrix::zeros(spec.input_width, spec.output_width);
        for v in w.data_mut() {
            *v = rng.uniform_in(-bound, bound);
        }
        DenseLayer {
            w,
            b: vec![S::zero(); spec.output_width],
            activation: spec.activation,
        }
    }

    pub(super) fn spec(&self) -> LayerSpec {
        LayerSpec {
            input_width: self.w.rows(),
            output_width: self.w.cols(),
            activation: self.activation,
        }
    }

    fn pre_activation(&self, x: &Matrix<S>) -> Matrix<S> {
        x.matmul(&self.w).add_row_broadcast(&self.b)
    }
}

/// Intermediate activations recorded by a forward pass, consumed by
/// [`AutoencoderModel::backward`]. Tied to the parameter version that
/// produced it.
#[derive(Clone, Debug)]
pub struct ForwardCache<S> {
    pub(super) version: u64,
    pub(super) input: Matrix<S>,
    pub(super) enc_pre: Vec<Matrix<S>>,
    pub(super) enc_post: Vec<Matrix<S>>,
    pub(super) mu: Option<Matrix<S>>,
    pub(super) log_var_raw: Option<Matrix<S>>,
    pub(super) log_var: Option<Matrix<S>>,
    pub(super) eps: Option<Matrix<S>>,
    pub(super) z: Matrix<S>,
    pub(super) dec_pre: Vec<Matrix<S>>,
    pub(super) dec_post: Vec<Matrix<S>>,
}

/// Mirror-symmetric dense autoencoder.
///
/// In plain mode the encoder ends in a linear layer producing the code
/// directly; in variational mode the last encoder layer is replaced by two
/// parallel linear heads producing the mean and the log-variance of a
/// diagonal Gaussian over codes.
#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderModel<S> {
    pub(super) encoder: Vec<DenseLayer<S>>,
    pub(super) mu_head: Option<DenseLayer<S>>,
    pub(super) logvar_head: Option<DenseLayer<S>>,
    pub(super) decoder: Vec<DenseLayer<S>>,
    input_dim: usize,
    latent_dim: usize,
    mode: Mode,
    /// Bumped on every parameter update; forward caches record it.
    pub(super) version: u64,
}

/// Default layer chain `m -> 64 -> 32 -> k -> 32 -> 64 -> m` with ReLU
/// hidden layers and linear latent/output layers.
pub fn default_layer_specs(input_dim: usize, latent_dim: usize) -> Vec<LayerSpec> {
    symmetric_layer_specs(input_dim, &[64, 32], latent_dim)
}

/// Builds a symmetric chain through the given hidden widths.
pub fn symmetric_layer_specs(
    input_dim: usize,
    hidden: &[usize],
    latent_dim: usize,
) -> Vec<LayerSpec> {
    let mut widths = vec![input_dim];
    widths.extend_from_slice(hidden);
    widths.push(latent_dim);
    let mut specs = Vec::new();
    for i in 0..widths.len() - 1 {
        let act = if i + 2 == widths.len() {
            Activation::Linear
        } else {
            Activation::Relu
        };
        specs.push(LayerSpec::new(widths[i], widths[i + 1], act));
    }
    for i in (0..widths.len() - 1).rev() {
        let act = if i == 0 { Activation::Linear } else { Activation::Relu };
        specs.push(LayerSpec::new(widths[i + 1], widths[i], act));
    }
    specs
}

impl<S: Scalar> AutoencoderModel<S> {
    /// Initializes a model from a full symmetric chain
    /// `m -> ... -> k -> ... -> m`. Weights are Glorot-uniform in
    /// `±sqrt(6 / (fan_in + fan_out))`, biases zero; the draw order is
    /// encoder, then the variational heads, then decoder, so results are
    /// reproducible for a given seed.
    pub fn init(specs: &[LayerSpec], mode: Mode, rng: &mut Rng) -> Result<Self, AeError> {
        validate_specs(specs)?;
        let half = specs.len() / 2;
        let (enc_specs, dec_specs) = specs.split_at(half);
        let input_dim = enc_specs[0].input_width;
        let latent_dim = enc_specs[half - 1].output_width;

        let (encoder_specs, head_spec) = match mode {
            Mode::Plain => (enc_specs, None),
            Mode::Variational => {
                let (body, last) = enc_specs.split_at(half - 1);
                (body, Some(LayerSpec::new(last[0].input_width, latent_dim, Activation::Linear)))
            }
        };

        let encoder: Vec<DenseLayer<S>> = encoder_specs
            .iter()
            .map(|&s| DenseLayer::init(s, rng))
            .collect();
        let (mu_head, logvar_head) = match head_spec {
            Some(spec) => (
                Some(DenseLayer::init(spec, rng)),
                Some(DenseLayer::init(spec, rng)),
            ),
            None => (None, None),
        };
        let decoder: Vec<DenseLayer<S>> = dec_specs
            .iter()
            .map(|&s| DenseLayer::init(s, rng))
            .collect();

        Ok(AutoencoderModel {
            encoder,
            mu_head,
            logvar_head,
            decoder,
            input_dim,
            latent_dim,
            mode,
            version: 0,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn check_input(&self, op: &'static str, x: &Matrix<S>) -> Result<(), AeError> {
        if x.cols() != self.input_dim {
            return Err(AeError::ShapeMismatch {
                op,
                expected: self.input_dim,
                found: x.cols(),
            });
        }
        Ok(())
    }

    fn run_encoder_body(
        &self,
        x: &Matrix<S>,
        pre_out: &mut Vec<Matrix<S>>,
        post_out: &mut Vec<Matrix<S>>,
    ) -> Matrix<S> {
        let mut current = x.clone();
        for layer in &self.encoder {
            let pre = layer.pre_activation(&current);
            current = layer.activation.apply(&pre);
            pre_out.push(pre);
            post_out.push(current.clone());
        }
        current
    }

    fn run_decoder(
        &self,
        z: &Matrix<S>,
        pre_out: &mut Vec<Matrix<S>>,
        post_out: &mut Vec<Matrix<S>>,
    ) -> Matrix<S> {
        let mut current = z.clone();
        for layer in &self.decoder {
            let pre = layer.pre_activation(&current);
            current = layer.activation.apply(&pre);
            pre_out.push(pre);
            post_out.push(current.clone());
        }
        current
    }

    /// Plain-mode forward pass: returns the reconstruction, the code, and
    /// the cache needed for backprop.
    #[allow(clippy::type_complexity)]
    pub fn forward(
        &self,
        x: &Matrix<S>,
    ) -> Result<(Matrix<S>, Matrix<S>, ForwardCache<S>), AeError> {
        if self.mode != Mode::Plain {
            return Err(AeError::ModeMismatch {
                op: "forward",
                required: "plain",
            });
        }
        self.check_input("forward", x)?;
        let mut enc_pre = Vec::new();
        let mut enc_post = Vec::new();
        let z = self.run_encoder_body(x, &mut enc_pre, &mut enc_post);
        let mut dec_pre = Vec::new();
        let mut dec_post = Vec::new();
        let x_hat = self.run_decoder(&z, &mut dec_pre, &mut dec_post);
        let cache = ForwardCache {
            version: self.version,
            input: x.clone(),
            enc_pre,
            enc_post,
            mu: None,
            log_var_raw: None,
            log_var: None,
            eps: None,
            z: z.clone(),
            dec_pre,
            dec_post,
        };
        Ok((x_hat, z, cache))
    }

    /// Variational forward pass with reparameterization noise drawn from
    /// `rng`: `z = mu + exp(log_var / 2) * eps`.
    #[allow(clippy::type_complexity)]
    pub fn vae_forward(
        &self,
        x: &Matrix<S>,
        rng: &mut Rng,
    ) -> Result<(Matrix<S>, Matrix<S>, Matrix<S>, Matrix<S>, ForwardCache<S>), AeError> {
        self.require_variational("vae_forward")?;
        self.check_input("vae_forward", x)?;
        let mut eps = Matrix::zeros(x.rows(), self.latent_dim);
        for v in eps.data_mut() {
            *v = rng.normal();
        }
        self.vae_forward_with_noise(x, eps)
    }

    /// Variational forward pass with caller-supplied noise; the test hook
    /// behind `vae_forward`. Passing zeros gives `z = mu` exactly.
    #[allow(clippy::type_complexity)]
    pub fn vae_forward_with_noise(
        &self,
        x: &Matrix<S>,
        eps: Matrix<S>,
    ) -> Result<(Matrix<S>, Matrix<S>, Matrix<S>, Matrix<S>, ForwardCache<S>), AeError> {
        self.require_variational("vae_forward")?;
        self.check_input("vae_forward", x)?;
        assert_eq!(
            eps.shape(),
            (x.rows(), self.latent_dim),
            "noise shape must be (batch, latent_dim)"
        );
        let mut enc_pre = Vec::new();
        let mut enc_post = Vec::new();
        let body = self.run_encoder_body(x, &mut enc_pre, &mut enc_post);

        let mu_head = self.mu_head.as_ref().expect("variational mode has heads");
        let lv_head = self.logvar_head.as_ref().expect("variational mode has heads");
        let mu = mu_head.pre_activation(&body);
        let log_var_raw = lv_head.pre_activation(&body);
        let clamp = S::cast(LOG_VAR_CLAMP);
        let log_var = log_var_raw.map(|v| v.max(-clamp).min(clamp));

        // z = mu + sigma * eps with sigma = exp(log_var / 2).
        let half = S::cast(0.5);
        let mut z = Matrix::zeros(x.rows(), self.latent_dim);
        for r in 0..z.rows() {
            for c in 0..z.cols() {
                let sigma = (half * log_var[(r, c)]).exp();
                z[(r, c)] = mu[(r, c)] + sigma * eps[(r, c)];
            }
        }

        let mut dec_pre = Vec::new();
        let mut dec_post = Vec::new();
        let x_hat = self.run_decoder(&z, &mut dec_pre, &mut dec_post);
        let eps_out = eps.clone();
        let cache = ForwardCache {
            version: self.version,
            input: x.clone(),
            enc_pre,
            enc_post,
            mu: Some(mu.clone()),
            log_var_raw: Some(log_var_raw),
            log_var: Some(log_var.clone()),
            eps: Some(eps),
            z: z.clone(),
            dec_pre,
            dec_post,
        };
        Ok((x_hat, mu, log_var, eps_out, cache))
    }

    pub(super) fn require_variational(&self, op: &'static str) -> Result<(), AeError> {
        if self.mode != Mode::Variational {
            return Err(AeError::ModeMismatch {
                op,
                required: "variational",
            });
        }
        Ok(())
    }

    /// Deterministic code for a batch: the encoder output in plain mode,
    /// the mean head in variational mode. Never samples.
    pub fn encode(&self, x: &Matrix<S>) -> Result<Matrix<S>, AeError> {
        self.check_input("encode", x)?;
        let mut pre = Vec::new();
        let mut post = Vec::new();
        let body = self.run_encoder_body(x, &mut pre, &mut post);
        match self.mode {
            Mode::Plain => Ok(body),
            Mode::Variational => {
                let mu_head = self.mu_head.as_ref().expect("variational mode has heads");
                Ok(mu_head.pre_activation(&body))
            }
        }
    }

    /// Runs the decoder on a batch of codes.
    pub fn decode(&self, z: &Matrix<S>) -> Result<Matrix<S>, AeError> {
        if z.cols() != self.latent_dim {
            return Err(AeError::ShapeMismatch {
                op: "decode",
                expected: self.latent_dim,
                found: z.cols(),
            });
        }
        let mut pre = Vec::new();
        let mut post = Vec::new();
        Ok(self.run_decoder(z, &mut pre, &mut post))
    }

    /// Deterministic reconstruction `g(f(x))`; the mean-code path in
    /// variational mode.
    pub fn reconstruct(&self, x: &Matrix<S>) -> Result<Matrix<S>, AeError> {
        let z = self.encode(x)?;
        self.decode(&z)
    }

    /// Per-sample reconstruction errors `|x_i - g(f(x_i))|^2 / m`; the
    /// division by width makes scores comparable across feature counts.
    pub fn reconstruction_errors(&self, x: &Matrix<S>) -> Result<Vec<S>, AeError> {
        let x_hat = self.reconstruct(x)?;
        Ok(super::per_sample_errors(x, &x_hat))
    }

    /// Flat views of every parameter tensor, in the fixed order encoder
    /// weights/biases, mean head, log-variance head, decoder. Gradient
    /// containers use the same order.
    /// Mutable flat views of every parameter tensor, ordered layer by layer
    /// (weights then bias) through encoder, variational heads, decoder.
    /// Taking them invalidates previously recorded forward caches.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [S]> {
        self.version += 1;
        let mut slices = Vec::new();
        for layer in self
            .encoder
            .iter_mut()
            .chain(self.mu_head.iter_mut())
            .chain(self.logvar_head.iter_mut())
            .chain(self.decoder.iter_mut())
        {
            slices.push(layer.w.data_mut());
            slices.push(layer.b.as_mut_slice());
        }
        slices
    }

    /// Read-only counterpart of [`param_slices_mut`](Self::param_slices_mut),
    /// in the same tensor order.
    pub fn param_slices(&self) -> Vec<&[S]> {
        let mut slices = Vec::new();
        for layer in self
            .encoder
            .iter()
            .chain(self.mu_head.iter())
            .chain(self.logvar_head.iter())
            .chain(self.decoder.iter())
        {
            slices.push(layer.w.data());
            slices.push(layer.b.as_slice());
        }
        slices
    }

    pub(super) fn param_lens(&self) -> Vec<usize> {
        self.param_slices().iter().map(|s| s.len()).collect()
    }

    /// Total number of trainable parameters across all layers.
    pub fn param_count(&self) -> usize {
        self.encoder
            .iter()
            .chain(self.mu_head.iter())
            .chain(self.logvar_head.iter())
            .chain(self.decoder.iter())
            .map(|l| l.w.data().len() + l.b.len())
            .sum()
    }

    /// True when every weight and bias is finite.
    pub fn all_finite(&self) -> bool {
        self.encoder
            .iter()
            .chain(self.mu_head.iter())
            .chain(self.logvar_head.iter())
            .chain(self.decoder.iter())
            .all(|l| l.w.all_finite() && l.b.iter().all(|v| v.is_finite()))
    }

    pub(super) fn bump_version(&mut self) {
        self.version += 1;
    }

    pub(super) fn from_parts(
        encoder: Vec<DenseLayer<S>>,
        mu_head: Option<DenseLayer<S>>,
        logvar_head: Option<DenseLayer<S>>,
        decoder: Vec<DenseLayer<S>>,
        mode: Mode,
    ) -> Result<Self, AeError> {
        let input_dim = encoder
            .first()
            .map(|l| l.w.rows())
            .ok_or_else(|| AeError::InvalidSpec {
                reason: "empty encoder".into(),
            })?;
        let latent_dim = match mode {
            Mode::Plain => encoder.last().expect("non-empty").w.cols(),
            Mode::Variational => {
                let head = mu_head.as_ref().ok_or_else(|| AeError::InvalidSpec {
                    reason: "variational model without heads".into(),
                })?;
                head.w.cols()
            }
        };
        let model = AutoencoderModel {
            encoder,
            mu_head,
            logvar_head,
            decoder,
            input_dim,
            latent_dim,
            mode,
            version: 0,
        };
        model.validate_chain()?;
        Ok(model)
    }

    fn validate_chain(&self) -> Result<(), AeError> {
        let mut width = self.input_dim;
        for layer in &self.encoder {
            if layer.w.rows() != width {
                return Err(AeError::InvalidSpec {
                    reason: "encoder layer widths do not chain".into(),
                });
            }
            width = layer.w.cols();
        }
        if let (Some(mu), Some(lv)) = (&self.mu_head, &self.logvar_head) {
            if mu.w.rows() != width || lv.w.rows() != width || mu.w.cols() != lv.w.cols() {
                return Err(AeError::InvalidSpec {
                    reason: "variational heads do not match the encoder body".into(),
                });
            }
            width = mu.w.cols();
        }
        if width != self.latent_dim {
            return Err(AeError::InvalidSpec {
                reason: "encoder does not end at the latent width".into(),
            });
        }
        for layer in &self.decoder {
            if layer.w.rows() != width {
                return Err(AeError::InvalidSpec {
                    reason: "decoder layer widths do not chain".into(),
                });
            }
            width = layer.w.cols();
        }
        if width != self.input_dim {
            return Err(AeError::InvalidSpec {
                reason: "decoder does not end at the input width".into(),
            });
        }
        Ok(())
    }
}

pub(super) fn validate_specs(specs: &[LayerSpec]) -> Result<(), AeError> {
    if specs.len() < 2 || !specs.len().is_multiple_of(2) {
        return Err(AeError::InvalidSpec {
            reason: format!(
                "need an even number of layers (encoder + mirrored decoder), got {}",
                specs.len()
            ),
        });
    }
    for s in specs {
        if s.input_width == 0 || s.output_width == 0 {
            return Err(AeError::InvalidSpec {
                reason: "layer widths must be at least 1".into(),
            });
        }
    }
    for pair in specs.windows(2) {
        if pair[0].output_width != pair[1].input_width {
            return Err(AeError::InvalidSpec {
                reason: format!(
                    "layer widths do not chain: {} -> {}",
                    pair[0].output_width, pair[1].input_width
                ),
            });
        }
    }
    let n = specs.len();
    for i in 0..n {
        if specs[i].input_width != specs[n - 1 - i].output_width {
            return Err(AeError::InvalidSpec {
                reason: "chain is not mirror-symmetric".into(),
            });
        }
    }
    if specs[n - 1].activation != Activation::Linear {
        return Err(AeError::InvalidSpec {
            reason: "decoder output layer must be linear".into(),
        });
    }
    if specs[n / 2 - 1].activation != Activation::Linear {
        return Err(AeError::InvalidSpec {
            reason: "latent layer must be linear".into(),
        });
    }
    Ok(())
}
