//! Small dense linear algebra.
//!
//! Matrices are row-major `f64` storage. [`TransposedView`] gives a lazy,
//! zero-copy transpose that composes with [`matmul`] and [`matvec`], so that
//! products such as `A * B^T` are evaluated without materializing `B^T`.

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use crate::{Error, Result};

/// Read access to a matrix-like object.
pub trait MatrixRead {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn get(&self, i: usize, j: usize) -> f64;

    fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows(), self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out[(i, j)] = self.get(i, j);
            }
        }
        out
    }
}

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: data.to_vec(),
        })
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Materialized transpose.
    pub fn transposed(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Largest absolute entrywise difference; `INFINITY` when shapes differ.
    pub fn max_abs_diff(&self, other: &impl MatrixRead) -> f64 {
        if self.rows != other.rows() || self.cols != other.cols() {
            return f64::INFINITY;
        }
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self[(i, j)] - other.get(i, j)).abs());
            }
        }
        d
    }
}

impl MatrixRead for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        write!(f, "DenseMatrix{rows:?}")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenseVector(pub Vec<f64>);

impl DenseVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Lazy transpose of a borrowed matrix.
#[derive(Clone, Copy, Debug)]
pub struct TransposedView<'a, M: ?Sized> {
    inner: &'a M,
}

pub fn transposed_view<M: MatrixRead + ?Sized>(m: &M) -> TransposedView<'_, M> {
    TransposedView { inner: m }
}

impl<'a, M: MatrixRead + ?Sized> TransposedView<'a, M> {
    /// The matrix this view transposes.
    pub fn inner(&self) -> &'a M {
        self.inner
    }
}

impl<M: MatrixRead + ?Sized> MatrixRead for TransposedView<'_, M> {
    fn rows(&self) -> usize {
        self.inner.cols()
    }
    fn cols(&self) -> usize {
        self.inner.rows()
    }
    fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(j, i)
    }
}

/// Materialized transpose.
pub fn transpose(a: &impl MatrixRead) -> DenseMatrix {
    DenseMatrix::from_fn(a.cols(), a.rows(), |i, j| a.get(j, i))
}

pub fn matmul(a: &impl MatrixRead, b: &impl MatrixRead) -> Result<DenseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut c = DenseMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            let aik = a.get(i, k);
            for j in 0..b.cols() {
                c[(i, j)] += aik * b.get(k, j);
            }
        }
    }
    Ok(c)
}

pub fn matvec(a: &impl MatrixRead, x: &[f64]) -> Result<DenseVector> {
    if a.cols() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "cannot apply {}x{} matrix to vector of length {}",
            a.rows(),
            a.cols(),
            x.len()
        )));
    }
    let y = (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| a.get(i, j) * x[j]).sum())
        .collect();
    Ok(DenseVector(y))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cholesky factor `L` (lower triangular, `G = L L^T`) of a symmetric matrix.
///
/// A pivot at or below `1e-13 * max|G|` is reported as singular.
pub fn cholesky(g: &DenseMatrix) -> Result<DenseMatrix> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "cholesky of non-square {}x{} matrix",
            n,
            g.cols()
        )));
    }
    let tolerance = 1e-13 * g.max_abs();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        // negated so that NaN is rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(d > tolerance) {
            return Err(Error::Singular {
                pivot: d,
                tolerance,
            });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L L^T X = B` in place, column by column.
fn cholesky_solve(l: &DenseMatrix, b: &mut DenseMatrix) {
    let n = l.rows();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = b[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * b[(k, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * b[(k, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
    }
}

/// Gram matrix `A^T A` of a matrix given through any reader.
fn gram_of_columns(a: &impl MatrixRead) -> DenseMatrix {
    let n = a.cols();
    let mut g = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..a.rows()).map(|k| a.get(k, i) * a.get(k, j)).sum();
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
    g
}

/// Left pseudo-inverse `(A^T A)^{-1} A^T` of an `m x n` matrix with `m >= n`.
pub fn left_pseudo_inverse(a: &impl MatrixRead) -> Result<DenseMatrix> {
    if a.rows() < a.cols() {
        return Err(Error::ShapeMismatch(format!(
            "left pseudo-inverse needs rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let l = cholesky(&gram_of_columns(a))?;
    let mut x = transpose(a);
    cholesky_solve(&l, &mut x);
    Ok(x)
}

/// Right pseudo-inverse `A^T (A A^T)^{-1}` of an `m x n` matrix with `m <= n`.
pub fn right_pseudo_inverse(a: &impl MatrixRead) -> Result<DenseMatrix> {
    if a.rows() > a.cols() {
        return Err(Error::ShapeMismatch(format!(
            "right pseudo-inverse needs rows <= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let at = transposed_view(a);
    let l = cholesky(&gram_of_columns(&at))?;
    // (A A^T)^{-1} A is the transpose of the result; A A^T is symmetric.
    let mut x = a.to_dense();
    cholesky_solve(&l, &mut x);
    Ok(x.transposed())
}

/// LU factorization with partial pivoting, stored compactly.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "LU of non-square {}x{} matrix",
                n,
                a.cols()
            )));
        }
        let tolerance = 1e-14 * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[(x, k)].abs().total_cmp(&lu[(y, k)].abs()))
                .unwrap_or(k);
            let pivot = lu[(p, k)];
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(pivot.abs() > tolerance) {
                return Err(Error::Singular {
                    pivot: pivot.abs(),
                    tolerance,
                });
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[(i, k)] * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> DenseMatrix {
        let n = self.lu.rows();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv
    }

    pub fn determinant(&self) -> f64 {
        (0..self.lu.rows()).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }
}

/// Determinant of a square matrix; zero when elimination finds no pivot.
pub fn determinant(a: &DenseMatrix) -> Result<f64> {
    if a.rows() != a.cols() {
        return Err(Error::ShapeMismatch(format!(
            "determinant of non-square {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    match a.rows() {
        0 => Ok(1.0),
        1 => Ok(a[(0, 0)]),
        2 => Ok(a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]),
        3 => Ok(a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
            - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
            + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])),
        _ => match Lu::new(a) {
            Ok(lu) => Ok(lu.determinant()),
            Err(Error::Singular { .. }) => Ok(0.0),
            Err(e) => Err(e),
        },
    }
}
