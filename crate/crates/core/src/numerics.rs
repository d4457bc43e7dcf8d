//! Dense linear algebra: matrix storage, Cholesky, small linear solves.
//!
//! Storage is column-major so that design columns are contiguous slices,
//! which is what coordinate descent touches in its inner loop.

use std::fmt;

use crate::error::{Error, Result};

/// Reciprocal-condition floor below which [`solve`] reports a singular system.
pub const DEFAULT_MIN_RCOND: f64 = 1e-12;

/// Pivot floor for [`cholesky`], relative to the largest diagonal entry.
const CHOLESKY_PIVOT_FLOOR: f64 = 1e-14;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row: Vec<String> = (0..self.cols.min(8))
                .map(|j| format!("{:.6}", self.get(i, j)))
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::config(
                "matrix must have at least one row and column",
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Matrix::from_row_major",
                expected: rows * cols,
                found: entries.len(),
            });
        }
        check_finite(entries)?;
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, entries[i * cols + j]);
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch {
                context: "Matrix::from_rows",
                expected: ncols,
                found: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Matrix::from_row_major(rows.len(), ncols, &flat)
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let nrows = columns.first().map_or(0, Vec::len);
        if nrows == 0 {
            return Err(Error::config(
                "matrix must have at least one row and column",
            ));
        }
        let mut data = Vec::with_capacity(nrows * columns.len());
        for c in columns {
            if c.len() != nrows {
                return Err(Error::DimensionMismatch {
                    context: "Matrix::from_columns",
                    expected: nrows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        check_finite(&data)?;
        Ok(Matrix {
            rows: nrows,
            cols: columns.len(),
            data,
        })
    }

    /// Single-column matrix holding `v`.
    pub fn column_vector(v: &[f64]) -> Self {
        assert!(!v.is_empty());
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] = value;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Entries in column-major order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for (i, v) in self.column(j).iter().enumerate() {
                t.set(j, i, *v);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "Matrix::matmul",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = out.column_mut(j);
            for (k, &b) in other.column(j).iter().enumerate() {
                if b != 0.0 {
                    axpy(b, &self.data[k * self.rows..(k + 1) * self.rows], dst);
                }
            }
        }
        Ok(out)
    }

    /// `self · v`
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for (j, &b) in v.iter().enumerate() {
            if b != 0.0 {
                axpy(b, self.column(j), &mut out);
            }
        }
        out
    }

    /// `selfᵀ · v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tr_matvec dimension mismatch");
        (0..self.cols).map(|j| dot(self.column(j), v)).collect()
    }

    /// `selfᵀ · self`
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for j in 0..self.cols {
            for k in 0..=j {
                let v = dot(self.column(j), self.column(k));
                g.set(j, k, v);
                g.set(k, j, v);
            }
        }
        g
    }

    /// `selfᵀ · other`
    pub fn tr_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                context: "Matrix::tr_matmul",
                expected: self.rows,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            for i in 0..self.cols {
                out.set(i, j, dot(self.column(i), other.column(j)));
            }
        }
        Ok(out)
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        assert!(!idx.is_empty());
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.column(j));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| self.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        (0..self.rows)
            .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol * scale))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "Matrix::sub",
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

fn check_finite(entries: &[f64]) -> Result<()> {
    match entries.iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::config(format!(
            "non-finite matrix entry at flat position {pos}"
        ))),
        None => Ok(()),
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorise; the summation order is
    // fixed, so results stay deterministic.
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let k = 4 * c;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `y += a·x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Lower-triangular `L` with `L·Lᵀ` equal to the factored matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    lower: Matrix,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn into_lower(self) -> Matrix {
        self.lower
    }

    pub fn reconstruct(&self) -> Matrix {
        self.lower
            .matmul(&self.lower.transpose())
            .expect("square factor")
    }

    /// Solve `L·Lᵀ·X = B`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.lower.nrows();
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "CholeskyFactor::solve",
                expected: n,
                found: b.nrows(),
            });
        }
        let l = &self.lower;
        let mut x = b.clone();
        for c in 0..x.ncols() {
            let col = x.column_mut(c);
            for i in 0..n {
                let mut s = col[i];
                for k in 0..i {
                    s -= l.get(i, k) * col[k];
                }
                col[i] = s / l.get(i, i);
            }
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in i + 1..n {
                    s -= l.get(k, i) * col[k];
                }
                col[i] = s / l.get(i, i);
            }
        }
        Ok(x)
    }
}

pub fn cholesky(sigma: &Matrix) -> Result<CholeskyFactor> {
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch {
            context: "cholesky",
            expected: sigma.nrows(),
            found: sigma.ncols(),
        });
    }
    if !sigma.is_symmetric(1e-12) {
        return Err(Error::config("cholesky input is not symmetric"));
    }
    let n = sigma.nrows();
    let floor = CHOLESKY_PIVOT_FLOOR * (0..n).map(|i| sigma.get(i, i).abs()).fold(1.0, f64::max);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = sigma.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d <= floor || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..n {
            let mut s = sigma.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(CholeskyFactor { lower: l })
}

struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &Matrix) -> Option<Lu> {
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu.get(i, k).abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pmax == 0.0 || !pmax.is_finite() {
                return None;
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, t);
                }
            }
            let piv = lu.get(k, k);
            for i in k + 1..n {
                let f = lu.get(i, k) / piv;
                lu.set(i, k, f);
                if f != 0.0 {
                    for j in k + 1..n {
                        let v = lu.get(i, j) - f * lu.get(k, j);
                        lu.set(i, j, v);
                    }
                }
            }
        }
        Some(Lu { lu, perm })
    }

    fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.nrows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu.get(i, k) * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu.get(i, k) * x[k];
            }
            x[i] /= self.lu.get(i, i);
        }
        x
    }
}

/// Residual `b − A·x` with each dot product accumulated in double-double.
fn compensated_residual(a: &Matrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    (0..n)
        .map(|i| {
            let (mut hi, mut lo) = (b[i], 0.0);
            for (k, &xk) in x.iter().enumerate() {
                let p = -a.get(i, k) * xk;
                let perr = (-a.get(i, k)).mul_add(xk, -p);
                let s = hi + p;
                let bp = s - hi;
                let serr = (hi - (s - bp)) + (p - bp);
                hi = s;
                lo += serr + perr;
            }
            hi + lo
        })
        .collect()
}

/// Solve `A·X = B` with the default reciprocal-condition floor.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    solve_with_threshold(a, b, DEFAULT_MIN_RCOND)
}

/// LU with partial pivoting, an exact 1-norm condition estimate, and two
/// steps of mixed-precision iterative refinement.
pub fn solve_with_threshold(a: &Matrix, b: &Matrix, min_rcond: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "solve (square A)",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "solve (rows of B)",
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let n = a.nrows();
    let lu = Lu::factor(a).ok_or(Error::SingularSystem { rcond: 0.0 })?;
    let mut inv_norm: f64 = 0.0;
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = lu.solve_vec(&e);
        inv_norm = inv_norm.max(norm1(&col));
    }
    let rcond = 1.0 / (a.norm_one() * inv_norm);
    if !(rcond >= min_rcond) {
        return Err(Error::SingularSystem {
            rcond: if rcond.is_finite() { rcond } else { 0.0 },
        });
    }
    let mut out = Matrix::zeros(n, b.ncols());
    for c in 0..b.ncols() {
        let rhs = b.column(c);
        let mut x = lu.solve_vec(rhs);
        for _ in 0..2 {
            let r = compensated_residual(a, &x, rhs);
            let dx = lu.solve_vec(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        out.column_mut(c).copy_from_slice(&x);
    }
    Ok(out)
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    solve(a, &Matrix::identity(a.nrows()))
}
