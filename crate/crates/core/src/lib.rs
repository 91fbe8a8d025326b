//! Autoencoder-driven feature extraction and dimensionality reduction for
//! tabular data, with classical baselines and downstream validation.
//!
//! The crate is organised around the stages of an experiment:
//!
//! * [`linalg`]: dense matrices, symmetric eigendecomposition, pseudo-inverse
//!   and a seeded, portable random number generator.
//! * [`dataio`]: schema-driven CSV ingestion, standardization + one-hot
//!   preprocessing, stratified splitting and test-set noise injection.
//! * [`autoencoder`]: dense autoencoder / variational autoencoder with
//!   analytic backprop, Adam, and a deterministic mini-batch training loop.
//! * [`baselines`]: PCA, factor analysis, FastICA and exact t-SNE under one
//!   fit/transform/reconstruct contract.
//! * [`analysis`]: reconstruction-error anomaly detection, latent feature
//!   extraction and k-means clustering in latent space.
//! * [`evaluation`]: RE/RMSE metrics, logistic-regression and linear-SVM
//!   downstream validation, the method-comparison harness and file export.
//! * [`synthetic`]: fixed in-repo data generators used by the test suite and
//!   the bundled demo configuration.
//! * [`storage`]: versioned on-disk persistence for dense matrices.
//!
//! All numeric kernels are generic over the scalar type via [`Scalar`];
//! the pipeline itself runs in `f64` (see the type aliases below).

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

pub mod analysis;
pub mod autoencoder;
pub mod baselines;
pub mod dataio;
pub mod evaluation;
pub mod linalg;
pub mod storage;
pub mod synthetic;

/// Floating-point scalar the numeric kernels are generic over.
///
/// Implemented for `f32` and `f64`. `f64` is the working type of the
/// pipeline; `f32` instantiations exist for callers that trade precision
/// for footprint.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + fmt::Debug + fmt::Display + Default + 'static
{
    /// Shorthand for converting an `f64` constant into this scalar type.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Conversion back to `f64`, used when assembling reports.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Working matrix type of the pipeline.
pub type Mat = linalg::Matrix<f64>;
/// Single-precision matrix alias.
pub type Mat32 = linalg::Matrix<f32>;

pub use linalg::{Matrix, Rng};
