use super::{LinalgError, Matrix};
use crate::Scalar;

/// Iteration cap for the Jacobi sweep loop.
const MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending and the matching eigenvectors as
/// matrix columns. Convergence is declared when the off-diagonal norm drops
/// below `1e-12` (floored at machine epsilon for narrower scalar types)
/// times the Frobenius norm of the input; the sweep cap is 100.
///
/// Column signs are canonicalised so the largest-magnitude entry of each
/// eigenvector is positive, which keeps results reproducible bit-for-bit.
pub fn eig_sym<S: Scalar>(a: &Matrix<S>) -> Result<(Vec<S>, Matrix<S>), LinalgError> {
    let n = a.rows();
    check_symmetric(a)?;

    let mut work = a.clone();
    let mut vectors = Matrix::identity(n);
    let fro = a.frobenius_norm();
    let threshold = S::cast(1e-12).max(S::epsilon()) * fro;

    let mut converged = off_diagonal_norm(&work) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence {
                what: "Jacobi eigendecomposition",
                iterations: MAX_SWEEPS,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut work, &mut vectors, p, q);
            }
        }
        sweeps += 1;
        converged = off_diagonal_norm(&work) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        work[(j, j)]
            .partial_cmp(&work[(i, i)])
            .expect("eigenvalues are finite")
            .then(i.cmp(&j))
    });

    let eigenvalues: Vec<S> = order.iter().map(|&i| work[(i, i)]).collect();
    let mut sorted = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut extreme = S::zero();
        let mut flip = false;
        for r in 0..n {
            let v = vectors[(r, src)];
            if v.abs() > extreme {
                extreme = v.abs();
                flip = v < S::zero();
            }
        }
        for r in 0..n {
            let v = vectors[(r, src)];
            sorted[(r, dst)] = if flip { -v } else { v };
        }
    }

    Ok((eigenvalues, sorted))
}

fn check_symmetric<S: Scalar>(a: &Matrix<S>) -> Result<(), LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::ShapeMismatch {
            op: "eig_sym",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: a.cols(),
            right_cols: a.rows(),
        });
    }
    let tolerance = S::cast(1e-9) * a.max_abs();
    for i in 0..n {
        for j in (i + 1)..n {
            let deviation = (a[(i, j)] - a[(j, i)]).abs();
            if deviation > tolerance {
                return Err(LinalgError::NonSymmetric {
                    row: i,
                    col: j,
                    deviation: deviation.to_f64_lossy(),
                    tolerance: tolerance.to_f64_lossy(),
                });
            }
        }
    }
    Ok(())
}

fn off_diagonal_norm<S: Scalar>(a: &Matrix<S>) -> S {
    let n = a.rows();
    let mut acc = S::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// One Jacobi rotation zeroing `work[(p, q)]`, accumulated into `vectors`.
fn rotate<S: Scalar>(work: &mut Matrix<S>, vectors: &mut Matrix<S>, p: usize, q: usize) {
    let apq = work[(p, q)];
    if apq == S::zero() {
        return;
    }
    let app = work[(p, p)];
    let aqq = work[(q, q)];
    let theta = (aqq - app) / (S::cast(2.0) * apq);
    let t = if theta.abs() > S::cast(1e150) {
        // sqrt(theta^2) would overflow; the limit is 1/(2*theta).
        (S::cast(2.0) * theta).recip()
    } else {
        let sign = if theta >= S::zero() { S::one() } else { -S::one() };
        sign / (theta.abs() + (theta * theta + S::one()).sqrt())
    };
    let c = (t * t + S::one()).sqrt().recip();
    let s = t * c;

    work[(p, p)] = app - t * apq;
    work[(q, q)] = aqq + t * apq;
    work[(p, q)] = S::zero();
    work[(q, p)] = S::zero();

    let n = work.rows();
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let aip = work[(i, p)];
        let aiq = work[(i, q)];
        work[(i, p)] = c * aip - s * aiq;
        work[(p, i)] = work[(i, p)];
        work[(i, q)] = s * aip + c * aiq;
        work[(q, i)] = work[(i, q)];
    }
    for i in 0..n {
        let vip = vectors[(i, p)];
        let viq = vectors[(i, q)];
        vectors[(i, p)] = c * vip - s * viq;
        vectors[(i, q)] = s * vip + c * viq;
    }
}

/// Applies `f` to the eigenvalues of a symmetric matrix and reassembles
/// `V f(Lambda) V^T`. Eigenvalues at or below `cutoff * max|lambda|` map
/// to zero instead.
fn sym_spectral_map<S: Scalar>(
    a: &Matrix<S>,
    cutoff: S,
    f: impl Fn(S) -> S,
) -> Result<Matrix<S>, LinalgError> {
    let (eigenvalues, vectors) = eig_sym(a)?;
    let n = a.rows();
    let largest = eigenvalues
        .iter()
        .fold(S::zero(), |acc, &l| acc.max(l.abs()));
    let threshold = cutoff * largest;
    let mut scaled = Matrix::zeros(n, n);
    for j in 0..n {
        if eigenvalues[j].abs() > threshold {
            let mapped = f(eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] = vectors[(i, j)] * mapped;
            }
        }
    }
    Ok(scaled.matmul_t(&vectors))
}

/// Pseudo-inverse of a symmetric matrix straight from its own
/// eigendecomposition; cheaper and better conditioned than [`pinv`] when
/// symmetry is known.
pub fn sym_pinv<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>, LinalgError> {
    sym_spectral_map(a, S::cast(1e-12).max(S::epsilon()), |l| l.recip())
}

/// Inverse square root `a^{-1/2}` of a symmetric positive semi-definite
/// matrix; eigenvalues at numerical-noise scale are dropped.
pub fn sym_inv_sqrt<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>, LinalgError> {
    sym_spectral_map(a, S::cast(1e-12).max(S::epsilon()), |l| {
        l.max(S::zero()).sqrt().recip()
    })
}

/// Moore–Penrose pseudo-inverse via the symmetric eigendecomposition of
/// `a^T a` (or `a a^T` for wide inputs). Singular values below
/// `1e-12 * sigma_max` are truncated, so rank-deficient inputs are fine.
pub fn pinv<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>, LinalgError> {
    assert!(a.rows() > 0 && a.cols() > 0, "pinv of an empty matrix");
    if a.rows() < a.cols() {
        return Ok(pinv(&a.transpose())?.transpose());
    }

    let gram = a.t_matmul(a);
    let (eigenvalues, vectors) = eig_sym(&gram)?;

    let sigma_max = eigenvalues
        .first()
        .map(|&l| l.max(S::zero()).sqrt())
        .unwrap_or_else(S::zero);
    let cutoff = S::cast(1e-12).max(S::epsilon()) * sigma_max;

    // gram^+ = V diag(1/lambda) V^T over the retained spectrum.
    let c = a.cols();
    let mut scaled = Matrix::zeros(c, c);
    for j in 0..c {
        let lambda = eigenvalues[j].max(S::zero());
        let sigma = lambda.sqrt();
        if sigma > cutoff && sigma > S::zero() {
            let inv = lambda.recip();
            for i in 0..c {
                scaled[(i, j)] = vectors[(i, j)] * inv;
            }
        }
    }
    let gram_pinv = scaled.matmul_t(&vectors);
    Ok(gram_pinv.matmul(&a.transpose()))
}
