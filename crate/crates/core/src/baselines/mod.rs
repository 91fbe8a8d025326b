//! Classical dimensionality-reduction baselines: PCA, factor analysis,
//! FastICA, and exact t-SNE, each exposed through a shared [`ReducerModel`]
//! facade so downstream comparison code can treat them uniformly.
//!
//! All four share the same geometry conventions as the autoencoder: rows are
//! samples, columns are features, and a fitted model maps `n x m` data to
//! `n x k` scores and back. t-SNE has no parametric inverse, so its
//! reconstruction goes through a least-squares [`LinearDecoder`] fitted on
//! the embedding.

mod decoder;
mod fa;
mod ica;
mod pca;
mod tsne;

pub use decoder::{linear_decoder_fit, LinearDecoder};
pub use fa::{fa_fit, FaModel};
pub use ica::{ica_fit, IcaModel};
pub use pca::{pca_fit, PcaModel};
pub use tsne::{tsne_embed, TsneConfig, TsneModel};

use crate::linalg::{LinalgError, Matrix};
use crate::Scalar;

/// Errors from fitting or applying a baseline reducer.
#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    /// Requested more components than the data has features.
    #[error("cannot extract {k} components from {m} features")]
    RankError { k: usize, m: usize },
    /// t-SNE needs at least `3 * perplexity + 1` rows to calibrate
    /// bandwidths.
    #[error("perplexity {perplexity} needs at least {needed} rows, got {n}")]
    PerplexityTooLarge { perplexity: f64, n: usize, needed: usize },
    /// t-SNE can only score rows that were present at fit time.
    #[error("{count} rows were not part of the fitted t-SNE input")]
    TsneUnseenRows { count: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which baseline a [`ReducerModel`] wraps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReducerKind {
    Pca,
    Fa,
    Ica,
    Tsne,
}

impl std::fmt::Display for ReducerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ReducerKind::Pca => "pca",
            ReducerKind::Fa => "fa",
            ReducerKind::Ica => "ica",
            ReducerKind::Tsne => "tsne",
        };
        f.write_str(s)
    }
}

/// A fitted baseline, dispatching [`transform`](Self::transform) and
/// [`reconstruct`](Self::reconstruct) to the wrapped model.
#[derive(Debug, Clone)]
pub enum ReducerModel<S: Scalar> {
    Pca(PcaModel<S>),
    Fa(FaModel<S>),
    Ica(IcaModel<S>),
    Tsne(TsneModel<S>),
}

impl<S: Scalar> ReducerModel<S> {
    pub fn kind(&self) -> ReducerKind {
        match self {
            ReducerModel::Pca(_) => ReducerKind::Pca,
            ReducerModel::Fa(_) => ReducerKind::Fa,
            ReducerModel::Ica(_) => ReducerKind::Ica,
            ReducerModel::Tsne(_) => ReducerKind::Tsne,
        }
    }

    /// Latent width of the fitted model.
    pub fn k(&self) -> usize {
        match self {
            ReducerModel::Pca(m) => m.k(),
            ReducerModel::Fa(m) => m.k(),
            ReducerModel::Ica(m) => m.k(),
            ReducerModel::Tsne(m) => m.k(),
        }
    }

    /// False when an iterative fit stopped at its iteration cap instead of
    /// meeting its tolerance. PCA and t-SNE always report true.
    pub fn converged(&self) -> bool {
        match self {
            ReducerModel::Pca(_) | ReducerModel::Tsne(_) => true,
            ReducerModel::Fa(m) => m.converged(),
            ReducerModel::Ica(m) => m.converged(),
        }
    }

    pub fn transform(&self, x: &Matrix<S>) -> Result<Matrix<S>, BaselineError> {
        match self {
            ReducerModel::Pca(m) => Ok(m.transform(x)),
            ReducerModel::Fa(m) => Ok(m.transform(x)),
            ReducerModel::Ica(m) => Ok(m.transform(x)),
            ReducerModel::Tsne(m) => m.transform(x),
        }
    }

    pub fn reconstruct(&self, x: &Matrix<S>) -> Result<Matrix<S>, BaselineError> {
        match self {
            ReducerModel::Pca(m) => Ok(m.reconstruct(x)),
            ReducerModel::Fa(m) => Ok(m.reconstruct(x)),
            ReducerModel::Ica(m) => Ok(m.reconstruct(x)),
            ReducerModel::Tsne(m) => m.reconstruct(x),
        }
    }
}
