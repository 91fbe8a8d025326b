use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::losses::{loss_eq1, loss_eq2};
use super::model::{AutoencoderModel, Mode};
use super::AeError;
use crate::linalg::{sample_normal, Rng};
use crate::{Matrix, Scalar};

/// Independent random streams derived from the training seed, so that
/// adding or removing evaluation passes cannot shift the batch order.
const STREAM_SHUFFLE: u64 = 1;
const STREAM_REPARAM: u64 = 2;
const STREAM_EVAL: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// KL weight for the variational loss; 1 is the plain unweighted sum.
    pub beta: f64,
    /// L2 penalty on weight matrices; off by default.
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 128,
            adam: AdamConfig::default(),
            seed: 0,
            beta: 1.0,
            weight_decay: 0.0,
        }
    }
}

/// Per-epoch loss history from one training run. `test_loss` stays empty
/// when no test split was supplied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
    pub epochs: usize,
    pub seed: u64,
}

fn evaluate<S: Scalar>(
    model: &AutoencoderModel<S>,
    x: &Matrix<S>,
    beta: S,
    eval_rng: &mut Rng,
) -> Result<f64, AeError> {
    let loss = match model.mode() {
        Mode::Plain => {
            let x_hat = model.reconstruct(x)?;
            loss_eq1(x, &x_hat)
        }
        Mode::Variational => {
            let (x_hat, mu, log_var, _, _) = model.vae_forward(x, eval_rng)?;
            loss_eq2(x, &x_hat, &mu, &log_var, beta).0
        }
    };
    Ok(loss.to_f64_lossy())
}

/// Mini-batch training driven by a seeded shuffle. After every epoch the
/// full-pass train loss (and test loss, when given) is appended to the
/// report; a non-finite value aborts with [`AeError::NonFiniteLoss`].
pub fn train<S: Scalar>(
    model: &mut AutoencoderModel<S>,
    train_x: &Matrix<S>,
    test_x: Option<&Matrix<S>>,
    config: &TrainConfig,
) -> Result<TrainReport, AeError> {
    assert!(train_x.rows() > 0, "training set must be non-empty");
    assert!(config.batch_size > 0, "batch size must be at least 1");

    let mut shuffle_rng = Rng::derive(config.seed, STREAM_SHUFFLE);
    let mut reparam_rng = Rng::derive(config.seed, STREAM_REPARAM);
    let mut eval_rng = Rng::derive(config.seed, STREAM_EVAL);

    let beta = S::cast(config.beta);
    let weight_decay = S::cast(config.weight_decay);
    let mut state = AdamState::for_model(model, &config.adam);
    let mut report = TrainReport {
        train_loss: Vec::with_capacity(config.epochs),
        test_loss: Vec::new(),
        epochs: 0,
        seed: config.seed,
    };

    let n = train_x.rows();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        shuffle_rng.shuffle(&mut order);
        for batch_indices in order.chunks(config.batch_size) {
            let batch = train_x.select_rows(batch_indices);
            let cache = match model.mode() {
                Mode::Plain => model.forward(&batch)?.2,
                Mode::Variational => {
                    let eps =
                        sample_normal(&mut reparam_rng, batch.rows(), model.latent_dim());
                    model.vae_forward_with_noise(&batch, eps)?.4
                }
            };
            let grads = model.backward(&cache, beta)?;
            model.adam_update(&mut state, &grads, weight_decay);
        }

        let train_loss = evaluate(model, train_x, beta, &mut eval_rng)?;
        if !train_loss.is_finite() {
            return Err(AeError::NonFiniteLoss { epoch });
        }
        report.train_loss.push(train_loss);
        if let Some(test) = test_x {
            let test_loss = evaluate(model, test, beta, &mut eval_rng)?;
            if !test_loss.is_finite() {
                return Err(AeError::NonFiniteLoss { epoch });
            }
            report.test_loss.push(test_loss);
        }
        report.epochs = epoch + 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::model::symmetric_layer_specs;
    use super::super::LayerSpec;
    use super::*;
    use crate::autoencoder::Activation;
    use crate::Mat;

    fn rank_one_data(n: usize) -> Mat {
        let mut rows = Vec::new();
        for i in 0..n {
            let t = (i as f64 / n as f64) * 2.0 - 1.0;
            rows.push(vec![t, 2.0 * t]);
        }
        Mat::from_rows(&rows)
    }

    fn linear_specs(m: usize, k: usize) -> Vec<LayerSpec> {
        vec![
            LayerSpec::new(m, k, Activation::Linear),
            LayerSpec::new(k, m, Activation::Linear),
        ]
    }

    #[test]
    fn zero_epochs_change_nothing() {
        let mut rng = Rng::new(3);
        let mut model =
            AutoencoderModel::<f64>::init(&linear_specs(2, 1), Mode::Plain, &mut rng).unwrap();
        let before = model.clone();
        let x = rank_one_data(16);
        let report = train(
            &mut model,
            &x,
            None,
            &TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(model, before);
        assert!(report.train_loss.is_empty());
        assert_eq!(report.epochs, 0);
    }

    #[test]
    fn rank_one_data_is_learned_by_a_one_dim_code() {
        let mut rng = Rng::new(7);
        let mut model =
            AutoencoderModel::<f64>::init(&linear_specs(2, 1), Mode::Plain, &mut rng).unwrap();
        let x = rank_one_data(64);
        let initial = loss_eq1(&x, &model.reconstruct(&x).unwrap());
        let config = TrainConfig {
            epochs: 50,
            batch_size: 16,
            adam: AdamConfig {
                lr: 0.02,
                ..AdamConfig::default()
            },
            seed: 1,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &x, None, &config).unwrap();
        let last = *report.train_loss.last().unwrap();
        assert!(
            last < 0.01 * initial,
            "loss {last} did not reach 1% of initial {initial}"
        );
    }

    #[test]
    fn wide_code_drives_loss_to_the_identity_floor() {
        let mut rng = Rng::new(11);
        let mut model =
            AutoencoderModel::<f64>::init(&linear_specs(3, 3), Mode::Plain, &mut rng).unwrap();
        let x = {
            let mut rows = Vec::new();
            let mut data_rng = Rng::new(99);
            for _ in 0..50 {
                rows.push(vec![
                    data_rng.normal::<f64>(),
                    data_rng.normal::<f64>(),
                    data_rng.normal::<f64>(),
                ]);
            }
            Mat::from_rows(&rows)
        };
        let initial = loss_eq1(&x, &model.reconstruct(&x).unwrap());
        let config = TrainConfig {
            epochs: 400,
            batch_size: 25,
            adam: AdamConfig {
                lr: 0.02,
                ..AdamConfig::default()
            },
            seed: 5,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &x, None, &config).unwrap();
        let last = *report.train_loss.last().unwrap();
        assert!(
            last < 1e-3 * initial,
            "loss {last} vs initial {initial}"
        );
        assert!(model.all_finite());
    }

    #[test]
    fn histories_are_bitwise_reproducible() {
        let run = || {
            let mut rng = Rng::new(17);
            let specs = symmetric_layer_specs(4, &[3], 2);
            let mut model =
                AutoencoderModel::<f64>::init(&specs, Mode::Variational, &mut rng).unwrap();
            let mut data_rng = Rng::new(23);
            let x = sample_normal::<f64>(&mut data_rng, 40, 4);
            let test = sample_normal::<f64>(&mut data_rng, 10, 4);
            let config = TrainConfig {
                epochs: 5,
                batch_size: 8,
                seed: 9,
                ..TrainConfig::default()
            };
            train(&mut model, &x, Some(&test), &config).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert_eq!(a.train_loss.len(), 5);
        assert_eq!(a.test_loss.len(), 5);
    }

    #[test]
    fn divergence_is_reported_not_swallowed() {
        let mut rng = Rng::new(2);
        let specs = symmetric_layer_specs(3, &[4], 2);
        let mut model = AutoencoderModel::<f64>::init(&specs, Mode::Plain, &mut rng).unwrap();
        let x = sample_normal::<f64>(&mut rng, 20, 3);
        let config = TrainConfig {
            epochs: 10,
            batch_size: 5,
            adam: AdamConfig {
                lr: 1e200,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&mut model, &x, None, &config),
            Err(AeError::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn variational_training_reduces_the_loss() {
        let mut rng = Rng::new(29);
        let specs = symmetric_layer_specs(6, &[8], 2);
        let mut model =
            AutoencoderModel::<f64>::init(&specs, Mode::Variational, &mut rng).unwrap();
        // Correlated inputs so there is structure to compress.
        let mut data_rng = Rng::new(31);
        let base = sample_normal::<f64>(&mut data_rng, 120, 2);
        let mix = sample_normal::<f64>(&mut data_rng, 2, 6);
        let x = base.matmul(&mix);
        let config = TrainConfig {
            epochs: 40,
            batch_size: 30,
            adam: AdamConfig {
                lr: 5e-3,
                ..AdamConfig::default()
            },
            seed: 3,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &x, None, &config).unwrap();
        let first = report.train_loss[0];
        let last = *report.train_loss.last().unwrap();
        assert!(last < first, "loss went {first} -> {last}");
        assert!(report.train_loss.iter().all(|l| *l >= 0.0));
    }
}
