use serde::{Deserialize, Serialize};

use super::backward::Gradients;
use super::model::AutoencoderModel;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first and second moment accumulators plus the shared
/// step counter, bias-corrected on every step.
#[derive(Clone, Debug)]
pub struct AdamState<S> {
    t: u64,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
    lr: S,
    beta1: S,
    beta2: S,
    eps: S,
}

impl<S: Scalar> AdamState<S> {
    /// `tensor_lens` gives the flat length of each parameter tensor, in
    /// the same order the step call will receive them.
    pub fn new(tensor_lens: &[usize], config: &AdamConfig) -> Self {
        AdamState {
            t: 0,
            m: tensor_lens.iter().map(|&l| vec![S::zero(); l]).collect(),
            v: tensor_lens.iter().map(|&l| vec![S::zero(); l]).collect(),
            lr: S::cast(config.lr),
            beta1: S::cast(config.beta1),
            beta2: S::cast(config.beta2),
            eps: S::cast(config.eps),
        }
    }

    pub fn for_model(model: &AutoencoderModel<S>, config: &AdamConfig) -> Self {
        Self::new(&model.param_lens(), config)
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// One Adam update over every tensor. The counter increments once per
    /// call, not once per tensor.
    pub fn step(&mut self, params: &mut [&mut [S]], grads: &[&[S]]) {
        assert_eq!(params.len(), self.m.len(), "tensor count mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        self.t += 1;
        let c1 = S::one() - self.beta1.powi(self.t as i32);
        let c2 = S::one() - self.beta2.powi(self.t as i32);
        for ((target, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert_eq!(target.len(), m.len(), "tensor shape drifted");
            assert_eq!(grad.len(), m.len(), "gradient shape drifted");
            for i in 0..m.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (S::one() - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (S::one() - self.beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                target[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

impl<S: Scalar> AutoencoderModel<S> {
    /// Applies one Adam step to every parameter. `weight_decay` adds an
    /// L2 pull on weight matrices only; biases are never decayed.
    pub fn adam_update(
        &mut self,
        state: &mut AdamState<S>,
        grads: &Gradients<S>,
        weight_decay: S,
    ) {
        let effective: Option<Vec<Vec<S>>> = if weight_decay != S::zero() {
            Some(
                self.param_slices()
                    .iter()
                    .zip(grads.slices())
                    .enumerate()
                    .map(|(i, (p, g))| {
                        if i % 2 == 0 {
                            p.iter()
                                .zip(g.iter())
                                .map(|(&theta, &grad)| grad + weight_decay * theta)
                                .collect()
                        } else {
                            g.to_vec()
                        }
                    })
                    .collect(),
            )
        } else {
            None
        };
        let grad_slices: Vec<&[S]> = match &effective {
            Some(e) => e.iter().map(|v| v.as_slice()).collect(),
            None => grads.slices(),
        };
        let mut params = self.param_slices_mut();
        state.step(&mut params, &grad_slices);
        drop(params);
        self.bump_version();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_state(config: &AdamConfig) -> AdamState<f64> {
        AdamState::new(&[1], config)
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut state = AdamState::<f64>::new(&[3, 2], &AdamConfig::default());
        let mut a = vec![1.0, -2.0, 0.5];
        let mut b = vec![4.0, 4.0];
        for _ in 0..5 {
            let mut params: Vec<&mut [f64]> = vec![&mut a, &mut b];
            state.step(&mut params, &[&[0.0; 3], &[0.0; 2]]);
        }
        assert_eq!(a, vec![1.0, -2.0, 0.5]);
        assert_eq!(b, vec![4.0, 4.0]);
        assert_eq!(state.t(), 5);
    }

    #[test]
    fn first_step_follows_the_closed_form() {
        // After one step the bias corrections cancel: m_hat = g and
        // sqrt(v_hat) = |g|, so the move is -lr * g / (|g| + eps),
        // which is nearly -lr * sign(g) whenever |g| >> eps.
        let config = AdamConfig::default();
        for &g in &[3.0f64, -0.25, 1e-3] {
            let mut state = scalar_state(&config);
            let mut theta = vec![0.7];
            let mut params: Vec<&mut [f64]> = vec![&mut theta];
            state.step(&mut params, &[&[g]]);
            let expected = 0.7 - config.lr * g / (g.abs() + config.eps);
            assert!(
                (theta[0] - expected).abs() < 1e-6 * config.lr,
                "g={g}: {} vs {expected}",
                theta[0]
            );
        }
        // For a unit-scale gradient the signed-step reading holds too.
        let mut state = scalar_state(&config);
        let mut theta = vec![0.0];
        let mut params: Vec<&mut [f64]> = vec![&mut theta];
        state.step(&mut params, &[&[-2.0]]);
        assert!((theta[0] - config.lr).abs() < 1e-6 * config.lr);
    }

    #[test]
    fn two_steps_match_a_hand_rolled_oracle() {
        let config = AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        };
        let grads = [0.3, -1.4];
        let mut theta = vec![2.0];
        let mut state = scalar_state(&config);
        for g in grads {
            let mut params: Vec<&mut [f64]> = vec![&mut theta];
            state.step(&mut params, &[&[g]]);
        }

        // Straight transcription of the published update rule.
        let (mut m, mut v, mut reference) = (0.0f64, 0.0f64, 2.0f64);
        for (k, g) in grads.iter().enumerate() {
            let t = (k + 1) as i32;
            m = config.beta1 * m + (1.0 - config.beta1) * g;
            v = config.beta2 * v + (1.0 - config.beta2) * g * g;
            let m_hat = m / (1.0 - config.beta1.powi(t));
            let v_hat = v / (1.0 - config.beta2.powi(t));
            reference -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
        }
        assert!((theta[0] - reference).abs() < 1e-12);
    }

    #[test]
    fn counter_increments_once_per_step_call() {
        let mut state = AdamState::<f64>::new(&[1, 1, 1], &AdamConfig::default());
        let mut a = vec![0.0];
        let mut b = vec![0.0];
        let mut c = vec![0.0];
        let mut params: Vec<&mut [f64]> = vec![&mut a, &mut b, &mut c];
        state.step(&mut params, &[&[1.0], &[1.0], &[1.0]]);
        assert_eq!(state.t(), 1);
    }
}
