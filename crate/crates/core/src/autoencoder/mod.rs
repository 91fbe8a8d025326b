//! Dense autoencoder and variational autoencoder.
//!
//! The model is a mirror-symmetric stack of fully connected layers with
//! ReLU hidden activations and linear latent/output layers. The
//! variational mode swaps the last encoder layer for parallel linear mean
//! and log-variance heads and samples the code by reparameterization.
//! Gradients are analytic and checked against finite differences in the
//! test suite; optimization is Adam with bias correction.

mod adam;
mod backward;
mod losses;
mod model;
mod snapshot;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use backward::Gradients;
pub use losses::{kl_divergence, loss_eq1, loss_eq2, per_sample_errors};
pub use model::{
    default_layer_specs, symmetric_layer_specs, Activation, AutoencoderModel, ForwardCache,
    LayerSpec, Mode,
};
pub use snapshot::{load_model, save_model};
pub use train::{train, TrainConfig, TrainReport};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AeError {
    #[error("{op}: expected width {expected}, found {found}")]
    ShapeMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{op} requires a model in {required} mode")]
    ModeMismatch {
        op: &'static str,
        required: &'static str,
    },
    #[error("forward cache is stale: the model was updated after it was recorded")]
    StaleCache,
    #[error("non-finite loss at epoch {epoch}; training diverged, lower the learning rate")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid layer chain: {reason}")]
    InvalidSpec { reason: String },
}
