use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Dense row-major matrix.
///
/// Indexing is `(row, col)`; values are immutable once a matrix leaves the
/// function that built it, so sharing across threads is safe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    /// Matrix of the given shape filled with zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    /// Build from a row-major vector. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "matrix data length {} does not match {}x{}",
            data.len(),
            rows,
            cols
        );
        Self { rows, cols, data }
    }

    /// Build from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for row in rows {
            assert_eq!(row.len(), m, "ragged row in Matrix::from_rows");
            data.extend_from_slice(row);
        }
        Self { rows: n, cols: m, data }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    /// Borrow row `i` as a slice.
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of column `j`.
    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// New matrix holding the listed rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Matrix product `self * other`. Panics on incompatible shapes.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let lhs_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &lhs) in lhs_row.iter().enumerate() {
                if lhs == S::zero() {
                    continue;
                }
                let rhs_row = other.row(k);
                for (o, &r) in out_row.iter_mut().zip(rhs_row) {
                    *o += lhs * r;
                }
            }
        }
        out
    }

    /// `self^T * other` without materialising the transpose.
    pub fn t_matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.rows, other.rows,
            "t_matmul shape mismatch: {}x{} vs {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let lhs_row = self.row(r);
            let rhs_row = other.row(r);
            for (i, &l) in lhs_row.iter().enumerate() {
                if l == S::zero() {
                    continue;
                }
                let out_row = out.row_mut(i);
                for (o, &v) in out_row.iter_mut().zip(rhs_row) {
                    *o += l * v;
                }
            }
        }
        out
    }

    /// `self * other^T` without materialising the transpose.
    pub fn matmul_t(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.cols,
            "matmul_t shape mismatch: {}x{} vs {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let lhs_row = self.row(i);
            for j in 0..other.rows {
                let rhs_row = other.row(j);
                let mut acc = S::zero();
                for (&l, &r) in lhs_row.iter().zip(rhs_row) {
                    acc += l * r;
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: S) -> Self {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        assert_eq!(self.shape(), other.shape(), "elementwise shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Add a row vector to every row.
    pub fn add_row_broadcast(&self, row: &[S]) -> Self {
        assert_eq!(row.len(), self.cols, "broadcast width mismatch");
        let mut out = self.clone();
        for i in 0..self.rows {
            for (v, &b) in out.row_mut(i).iter_mut().zip(row) {
                *v += b;
            }
        }
        out
    }

    /// Per-column means.
    pub fn col_means(&self) -> Vec<S> {
        let mut means = vec![S::zero(); self.cols];
        for i in 0..self.rows {
            for (m, &v) in means.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        let n = S::cast(self.rows as f64);
        for m in &mut means {
            *m /= n;
        }
        means
    }

    /// Per-column population standard deviations (divisor `n`).
    pub fn col_stds(&self) -> Vec<S> {
        let means = self.col_means();
        let mut acc = vec![S::zero(); self.cols];
        for i in 0..self.rows {
            for ((a, &v), &m) in acc.iter_mut().zip(self.row(i)).zip(&means) {
                let d = v - m;
                *a += d * d;
            }
        }
        let n = S::cast(self.rows as f64);
        acc.into_iter().map(|a| (a / n).sqrt()).collect()
    }

    /// Subtract a row vector from every row.
    pub fn sub_row_broadcast(&self, row: &[S]) -> Self {
        assert_eq!(row.len(), self.cols, "broadcast width mismatch");
        let mut out = self.clone();
        for i in 0..self.rows {
            for (v, &b) in out.row_mut(i).iter_mut().zip(row) {
                *v -= b;
            }
        }
        out
    }

    /// Largest absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> S {
        self.data
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> S {
        self.data
            .iter()
            .map(|&v| v * v)
            .fold(S::zero(), |a, b| a + b)
            .sqrt()
    }

    /// True when every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Squared Euclidean distance between rows `i` of `self` and `j` of `other`.
    pub fn row_dist_sq(&self, i: usize, other: &Self, j: usize) -> S {
        let mut acc = S::zero();
        for (&a, &b) in self.row(i).iter().zip(other.row(j)) {
            let d = a - b;
            acc += d * d;
        }
        acc
    }

    /// Append `other` to the right of `self`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let mut data = Vec::with_capacity(self.rows * (self.cols + other.cols));
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Self {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        }
    }

    /// Append `other` below `self`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }
}

impl<S: Scalar> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    fn index(&self, (r, c): (usize, usize)) -> &S {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<S: Scalar> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}
