//! Downstream linear classifiers used to validate extracted features:
//! logistic regression and a linear soft-margin SVM, both trained with
//! deterministic full-batch (sub-)gradient descent from zero initialisation,
//! plus accuracy / ROC-AUC scoring.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::linalg::Matrix;
use crate::Scalar;

/// Linear decision function `v = x·w + b`; the positive class is `v >= 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearClassifier<S> {
    weights: Vec<S>,
    bias: S,
}

impl<S: Scalar> LinearClassifier<S> {
    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn bias(&self) -> S {
        self.bias
    }

    /// Raw decision values, one per row of `x`.
    pub fn decision_values(&self, x: &Matrix<S>) -> Vec<S> {
        assert_eq!(x.cols(), self.weights.len(), "feature width mismatch");
        (0..x.rows())
            .map(|i| {
                let mut v = self.bias;
                for (j, &w) in self.weights.iter().enumerate() {
                    v += x[(i, j)] * w;
                }
                v
            })
            .collect()
    }

    /// Class predictions at the natural threshold (decision value >= 0,
    /// i.e. predicted probability >= 0.5 for logistic regression).
    pub fn predict(&self, x: &Matrix<S>) -> Vec<bool> {
        self.decision_values(x)
            .into_iter()
            .map(|v| v >= S::zero())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 200, l2: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub lr: f64,
    pub epochs: usize,
    pub c: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 200, c: 1.0 }
    }
}

fn check_labels(n: usize, y: &[bool]) -> Result<(), EvalError> {
    assert_eq!(n, y.len(), "label count must match row count");
    if y.iter().all(|&b| b) || y.iter().all(|&b| !b) {
        return Err(EvalError::SingleClass);
    }
    Ok(())
}

fn sigmoid<S: Scalar>(v: S) -> S {
    if v >= S::zero() {
        S::one() / (S::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (S::one() + e)
    }
}

/// Full-batch gradient descent on L2-regularized log-loss. The bias is not
/// regularized. Zero initialisation makes the result deterministic.
pub fn logreg_train<S: Scalar>(
    x: &Matrix<S>,
    y: &[bool],
    config: &LogRegConfig,
) -> Result<LinearClassifier<S>, EvalError> {
    let n = x.rows();
    let m = x.cols();
    check_labels(n, y)?;
    let lr = S::cast(config.lr);
    let l2 = S::cast(config.l2);
    let inv_n = S::cast(1.0 / n as f64);
    let mut clf = LinearClassifier { weights: vec![S::zero(); m], bias: S::zero() };
    for _ in 0..config.epochs {
        let values = clf.decision_values(x);
        let mut grad_w = vec![S::zero(); m];
        let mut grad_b = S::zero();
        for (i, v) in values.into_iter().enumerate() {
            let target = if y[i] { S::one() } else { S::zero() };
            let residual = (sigmoid(v) - target) * inv_n;
            for (j, g) in grad_w.iter_mut().enumerate() {
                *g += residual * x[(i, j)];
            }
            grad_b += residual;
        }
        for (w, g) in clf.weights.iter_mut().zip(&grad_w) {
            *w -= lr * (*g + l2 * *w);
        }
        clf.bias -= lr * grad_b;
    }
    Ok(clf)
}

/// Mean log-loss of the classifier on `(x, y)`, without the L2 term.
pub fn log_loss<S: Scalar>(clf: &LinearClassifier<S>, x: &Matrix<S>, y: &[bool]) -> f64 {
    fn softplus(t: f64) -> f64 {
        t.max(0.0) + (-t.abs()).exp().ln_1p()
    }
    let values = clf.decision_values(x);
    let total: f64 = values
        .iter()
        .zip(y)
        .map(|(&v, &label)| {
            let v = v.to_f64_lossy();
            if label {
                softplus(-v)
            } else {
                softplus(v)
            }
        })
        .sum();
    total / y.len() as f64
}

/// Sub-gradient descent on `0.5·‖w‖² + C·mean(hinge)` with labels mapped to
/// ±1. Linear kernel only; zero initialisation, deterministic.
pub fn linear_svm_train<S: Scalar>(
    x: &Matrix<S>,
    y: &[bool],
    config: &SvmConfig,
) -> Result<LinearClassifier<S>, EvalError> {
    let n = x.rows();
    let m = x.cols();
    check_labels(n, y)?;
    let lr = S::cast(config.lr);
    let c_over_n = S::cast(config.c / n as f64);
    let mut clf = LinearClassifier { weights: vec![S::zero(); m], bias: S::zero() };
    for _ in 0..config.epochs {
        let values = clf.decision_values(x);
        let mut grad_w = clf.weights.clone();
        let mut grad_b = S::zero();
        for (i, v) in values.into_iter().enumerate() {
            let sign = if y[i] { S::one() } else { -S::one() };
            if sign * v < S::one() {
                for (j, g) in grad_w.iter_mut().enumerate() {
                    *g -= c_over_n * sign * x[(i, j)];
                }
                grad_b -= c_over_n * sign;
            }
        }
        for (w, g) in clf.weights.iter_mut().zip(&grad_w) {
            *w -= lr * *g;
        }
        clf.bias -= lr * grad_b;
    }
    Ok(clf)
}

/// Mean hinge loss `mean(max(0, 1 − s·v))` with ±1 labels, without the L2 term.
pub fn hinge_loss<S: Scalar>(clf: &LinearClassifier<S>, x: &Matrix<S>, y: &[bool]) -> f64 {
    let values = clf.decision_values(x);
    let total: f64 = values
        .iter()
        .zip(y)
        .map(|(&v, &label)| {
            let s = if label { 1.0 } else { -1.0 };
            (1.0 - s * v.to_f64_lossy()).max(0.0)
        })
        .sum();
    total / y.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierScores {
    pub accuracy: f64,
    pub roc_auc: f64,
}

/// Rank-statistic ROC-AUC; tied scores get the midrank of their tie group.
pub fn roc_auc(scores: &[f64], y: &[bool]) -> Result<f64, EvalError> {
    check_labels(scores.len(), y)?;
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores must not be NaN"));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            if y[idx] {
                rank_sum_pos += midrank;
            }
        }
        start = end;
    }
    let n_pos = y.iter().filter(|&&b| b).count() as f64;
    let n_neg = n as f64 - n_pos;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Accuracy at the decision-value threshold and midrank ROC-AUC on `(x, y)`.
pub fn classifier_scores<S: Scalar>(
    clf: &LinearClassifier<S>,
    x: &Matrix<S>,
    y: &[bool],
) -> Result<ClassifierScores, EvalError> {
    let predictions = clf.predict(x);
    let hits = predictions.iter().zip(y).filter(|(p, l)| p == l).count();
    let scores: Vec<f64> = clf
        .decision_values(x)
        .into_iter()
        .map(Scalar::to_f64_lossy)
        .collect();
    Ok(ClassifierScores {
        accuracy: hits as f64 / y.len() as f64,
        roc_auc: roc_auc(&scores, y)?,
    })
}
