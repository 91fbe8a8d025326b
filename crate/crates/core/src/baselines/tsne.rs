//! Exact (quadratic) t-SNE with per-point bandwidth calibration, momentum
//! gradient descent, and a linear decoder fitted on the final embedding so
//! the reducer facade can report reconstructions.
//!
//! There is no out-of-sample extension: transform and reconstruct only
//! accept rows that were part of the fitted input, matched by exact bit
//! pattern.

use serde::{Deserialize, Serialize};

use super::decoder::{linear_decoder_fit, LinearDecoder};
use super::pca::pca_fit;
use super::BaselineError;
use crate::linalg::{sample_normal, Matrix, Rng};
use crate::Scalar;

/// Rng stream tags so subsampling and init draw from independent
/// sequences of the same seed.
const STREAM_SUBSAMPLE: u64 = 1;
const STREAM_INIT: u64 = 2;

/// Bandwidth binary search budget per point.
const BANDWIDTH_TRIES: usize = 200;
/// Entropy tolerance, in bits.
const ENTROPY_TOL: f64 = 1e-4;

/// Gradient-descent knobs. Defaults follow common practice for the exact
/// algorithm.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub iters: usize,
    pub early_exaggeration: f64,
    /// Iterations that run with the exaggerated affinities.
    pub early_iters: usize,
    pub lr: f64,
    pub seed: u64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// Iteration at which momentum switches from initial to final.
    pub momentum_switch: usize,
    /// Inputs with more rows are seeded-subsampled down to this many.
    pub row_cap: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            iters: 1000,
            early_exaggeration: 12.0,
            early_iters: 250,
            lr: 200.0,
            seed: 0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            row_cap: 5000,
        }
    }
}

/// Fitted t-SNE embedding plus its reconstruction decoder.
#[derive(Debug, Clone)]
pub struct TsneModel<S: Scalar> {
    fitted_rows: Matrix<S>,
    /// `(row hash, row index)` sorted for lookup during matching.
    row_keys: Vec<(u64, usize)>,
    embedding: Matrix<S>,
    decoder: LinearDecoder<S>,
    fitted_indices: Vec<usize>,
    subsampled: bool,
    duplicate_collapse: bool,
}

impl<S: Scalar> TsneModel<S> {
    pub fn k(&self) -> usize {
        self.embedding.cols()
    }

    /// Embedding of the fitted rows, in fitted-row order.
    pub fn embedding(&self) -> &Matrix<S> {
        &self.embedding
    }

    /// Indices into the original fit input that were actually embedded;
    /// the identity unless the row cap forced a subsample.
    pub fn fitted_indices(&self) -> &[usize] {
        &self.fitted_indices
    }

    /// True when the input exceeded the row cap and only a seeded subsample
    /// was embedded.
    pub fn subsampled(&self) -> bool {
        self.subsampled
    }

    /// True when the bandwidth search could not hit its entropy target for
    /// some point, which happens when duplicates dominate a neighborhood.
    pub fn duplicate_collapse(&self) -> bool {
        self.duplicate_collapse
    }

    fn find_row(&self, x: &Matrix<S>, i: usize) -> Option<usize> {
        let h = hash_row(x, i);
        let start = self.row_keys.partition_point(|&(key, _)| key < h);
        for &(key, idx) in &self.row_keys[start..] {
            if key != h {
                break;
            }
            if rows_bit_equal(x, i, &self.fitted_rows, idx) {
                return Some(idx);
            }
        }
        None
    }

    /// Returns the stored embedding rows for `x`, which must consist solely
    /// of rows seen at fit time.
    pub fn transform(&self, x: &Matrix<S>) -> Result<Matrix<S>, BaselineError> {
        assert_eq!(x.cols(), self.fitted_rows.cols(), "feature width changed");
        let mut out = Matrix::zeros(x.rows(), self.k());
        let mut unseen = 0usize;
        for i in 0..x.rows() {
            match self.find_row(x, i) {
                Some(idx) => {
                    for j in 0..self.k() {
                        out[(i, j)] = self.embedding[(idx, j)];
                    }
                }
                None => unseen += 1,
            }
        }
        if unseen > 0 {
            return Err(BaselineError::TsneUnseenRows { count: unseen });
        }
        Ok(out)
    }

    pub fn reconstruct(&self, x: &Matrix<S>) -> Result<Matrix<S>, BaselineError> {
        Ok(self.decoder.predict(&self.transform(x)?))
    }
}

fn hash_row<S: Scalar>(x: &Matrix<S>, i: usize) -> u64 {
    // FNV-1a over the widened bit patterns.
    let mut h: u64 = 0xcbf29ce484222325;
    for j in 0..x.cols() {
        let bits = x[(i, j)].to_f64_lossy().to_bits();
        for shift in [0u32, 32] {
            h ^= u64::from((bits >> shift) as u32);
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

fn rows_bit_equal<S: Scalar>(a: &Matrix<S>, i: usize, b: &Matrix<S>, j: usize) -> bool {
    (0..a.cols()).all(|c| a[(i, c)].to_f64_lossy().to_bits() == b[(j, c)].to_f64_lossy().to_bits())
}

/// Pairwise squared distances, zero diagonal.
fn squared_distances<S: Scalar>(x: &Matrix<S>) -> Matrix<S> {
    let n = x.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = x.row_dist_sq(i, x, j);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Conditional affinities `P(j|i)` with per-row precision found by binary
/// search so each row's entropy is `log2(perplexity)` bits. Returns the
/// row-stochastic matrix and how many rows failed to calibrate.
fn conditional_affinities<S: Scalar>(d2: &Matrix<S>, perplexity: f64) -> (Matrix<S>, usize) {
    let n = d2.rows();
    let target = perplexity.log2();
    let mut p = Matrix::zeros(n, n);
    let mut failures = 0usize;
    let mut shifted = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for i in 0..n {
        // Shift by the nearest-neighbor distance so exp never underflows
        // for the closest point; entropy is shift-invariant.
        let mut dmin = f64::INFINITY;
        for j in 0..n {
            if j != i {
                shifted[j] = d2[(i, j)].to_f64_lossy();
                dmin = dmin.min(shifted[j]);
            }
        }
        for (j, s) in shifted.iter_mut().enumerate() {
            if j != i {
                *s -= dmin;
            }
        }

        let mut beta = 1.0f64;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut calibrated = false;
        for _ in 0..BANDWIDTH_TRIES {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                if j == i {
                    weights[j] = 0.0;
                    continue;
                }
                let w = (-beta * shifted[j]).exp();
                weights[j] = w;
                sum += w;
                weighted += w * shifted[j];
            }
            // Entropy in bits of the normalized row.
            let entropy = (sum.ln() + beta * weighted / sum) / std::f64::consts::LN_2;
            let gap = entropy - target;
            if gap.abs() < ENTROPY_TOL {
                calibrated = true;
                for j in 0..n {
                    p[(i, j)] = S::cast(weights[j] / sum);
                }
                break;
            }
            if gap > 0.0 {
                // Entropy too high: tighten the kernel.
                lo = beta;
                beta = if hi.is_infinite() { beta * 2.0 } else { 0.5 * (beta + hi) };
            } else {
                hi = beta;
                beta = if lo == f64::NEG_INFINITY { beta / 2.0 } else { 0.5 * (beta + lo) };
            }
        }
        if !calibrated {
            failures += 1;
            // Keep the last attempt so the row still participates.
            let sum: f64 = weights.iter().sum();
            if sum > 0.0 {
                for j in 0..n {
                    p[(i, j)] = S::cast(weights[j] / sum);
                }
            }
        }
    }
    (p, failures)
}

/// Symmetrized joint affinities `(P + P^T) / 2n`; sums to one when every
/// conditional row does.
fn joint_affinities<S: Scalar>(conditional: &Matrix<S>) -> Matrix<S> {
    let n = conditional.rows();
    let norm = S::cast(2.0) * S::from_usize(n).unwrap();
    let mut joint = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (conditional[(i, j)] + conditional[(j, i)]) / norm;
            joint[(i, j)] = v;
            joint[(j, i)] = v;
        }
    }
    joint
}

/// Embeds `x` into `k` dimensions. Rows beyond the configured cap are
/// seeded-subsampled first (flagged on the model); every embedded row must
/// later be presented bit-identically to transform or reconstruct.
pub fn tsne_embed<S: Scalar>(
    x: &Matrix<S>,
    k: usize,
    perplexity: f64,
    config: &TsneConfig,
) -> Result<TsneModel<S>, BaselineError> {
    assert!(perplexity > 1.0, "perplexity must exceed 1");
    assert!(k >= 1, "embedding needs at least one dimension");
    let n_input = x.rows();

    let (fitted_indices, subsampled) = if n_input > config.row_cap {
        let mut order: Vec<usize> = (0..n_input).collect();
        Rng::derive(config.seed, STREAM_SUBSAMPLE).shuffle(&mut order);
        let mut keep: Vec<usize> = order[..config.row_cap].to_vec();
        keep.sort_unstable();
        (keep, true)
    } else {
        ((0..n_input).collect(), false)
    };
    let n = fitted_indices.len();
    let needed = (3.0 * perplexity + 1.0).ceil() as usize;
    if n < needed {
        return Err(BaselineError::PerplexityTooLarge { perplexity, n, needed });
    }
    let fitted = x.select_rows(&fitted_indices);

    let d2 = squared_distances(&fitted);
    let (conditional, failures) = conditional_affinities(&d2, perplexity);
    let p = joint_affinities(&conditional);

    // PCA init scaled so the first embedding column has std 1e-4; falls
    // back to seeded noise when the data has no variance at all.
    let mut y = match pca_fit(&fitted, k) {
        Ok(model) => model.transform(&fitted),
        Err(BaselineError::RankError { .. }) => {
            return Err(BaselineError::RankError { k, m: fitted.cols() })
        }
        Err(e) => return Err(e),
    };
    let first_std = y.col_stds()[0];
    if first_std > S::zero() {
        y = y.scale(S::cast(1e-4) / first_std);
    } else {
        let mut rng = Rng::derive(config.seed, STREAM_INIT);
        y = sample_normal::<S>(&mut rng, n, k).scale(S::cast(1e-4));
    }

    let mut velocity = Matrix::zeros(n, k);
    let mut weights = Matrix::zeros(n, n);
    let four = S::cast(4.0);
    let lr = S::cast(config.lr);
    for iter in 0..config.iters {
        // Student-t kernel weights and their total.
        let mut sum_w = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = (S::one() + y.row_dist_sq(i, &y, j)).recip();
                weights[(i, j)] = w;
                weights[(j, i)] = w;
                sum_w += w + w;
            }
        }
        let sum_w = sum_w.max(S::cast(f64::MIN_POSITIVE));

        let exaggeration = if iter < config.early_iters {
            S::cast(config.early_exaggeration)
        } else {
            S::one()
        };
        let momentum = if iter < config.momentum_switch {
            S::cast(config.initial_momentum)
        } else {
            S::cast(config.final_momentum)
        };

        for i in 0..n {
            let mut grad = vec![S::zero(); k];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let w = weights[(i, j)];
                let coeff = (exaggeration * p[(i, j)] - w / sum_w) * w;
                for c in 0..k {
                    grad[c] += coeff * (y[(i, c)] - y[(j, c)]);
                }
            }
            for c in 0..k {
                velocity[(i, c)] = momentum * velocity[(i, c)] - lr * four * grad[c];
            }
        }
        for i in 0..n {
            for c in 0..k {
                y[(i, c)] += velocity[(i, c)];
            }
        }
        let centers = y.col_means();
        y = y.sub_row_broadcast(&centers);
    }

    let decoder = linear_decoder_fit(&y, &fitted)?;
    let mut row_keys: Vec<(u64, usize)> =
        (0..n).map(|i| (hash_row(&fitted, i), i)).collect();
    row_keys.sort_unstable();
    Ok(TsneModel {
        fitted_rows: fitted,
        row_keys,
        embedding: y,
        decoder,
        fitted_indices,
        subsampled,
        duplicate_collapse: failures > 0,
    })
}
