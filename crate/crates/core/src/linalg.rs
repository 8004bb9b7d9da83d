//! Dense small-dimension linear algebra.
//!
//! Matrices here are square and tiny (d is at most a few dozen), so everything
//! is stored row-major in a flat `Vec<f64>` and implemented directly. Vectors
//! are plain slices.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative asymmetry accepted by [`symmetric_eigen`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Smallest singular value for which a matrix counts as invertible.
pub const SINGULAR_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NonSymmetric(f64),
    #[error("Jacobi iteration did not converge after {0} sweeps")]
    NonConvergent(usize),
    #[error("matrix is singular (smallest singular value {0:.3e})")]
    Singular(f64),
    #[error("matrix rows have inconsistent lengths or the matrix is not square")]
    NotSquare,
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

/// Square real matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = LinalgError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.rows().map(<[f64]>::to_vec).collect()
    }
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(LinalgError::NotSquare);
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    /// Builds from a flat row-major buffer of length `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != dim * dim {
            return Err(LinalgError::NotSquare);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    /// Plane rotation by `angle` in the (i, j) coordinate plane.
    pub fn rotation(dim: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut m = Self::identity(dim);
        let (s, c) = angle.sin_cos();
        m.set(i, i, c);
        m.set(j, j, c);
        m.set(i, j, -s);
        m.set(j, i, s);
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// `M x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (o, row) in out.iter_mut().zip(self.rows()) {
            *o = dot(row, x);
        }
    }

    /// `Mᵀ x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for (i, row) in self.rows().enumerate() {
            axpy(x[i], row, &mut out);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scaled(-1.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `max |Mᵢⱼ − Mⱼᵢ| / max(‖M‖_F, tiny)`; zero for the zero matrix.
    pub fn relative_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        if worst == 0.0 {
            return 0.0;
        }
        worst / self.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.relative_asymmetry() <= rel_tol
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| (0..n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// Outer product `a bᵀ`.
    pub fn outer(a: &[f64], b: &[f64]) -> Matrix {
        assert_eq!(a.len(), b.len());
        let n = a.len();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = a[i] * b[j];
            }
        }
        m
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: Matrix,
}

impl EigenDecomposition {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// The input is symmetrized as `(M + Mᵀ)/2` after the asymmetry check. Each
/// eigenvector is sign-normalized so its largest-magnitude entry is positive,
/// which makes the output a pure function of the input bytes.
pub fn symmetric_eigen(m: &Matrix) -> Result<EigenDecomposition, LinalgError> {
    let asym = m.relative_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(LinalgError::NonSymmetric(asym));
    }
    let (decomp, converged) = jacobi(m);
    if !converged {
        return Err(LinalgError::NonConvergent(JACOBI_MAX_SWEEPS));
    }
    Ok(decomp)
}

fn jacobi(m: &Matrix) -> (EigenDecomposition, bool) {
    let n = m.dim();
    let mut a = m.add(&m.transpose()).scaled(0.5);
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let threshold = JACOBI_TOL * scale;

    let off_norm = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.get(i, j) * a.get(i, j);
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J on rows/cols p, q
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec = v.column(src);
        let lead = vec
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0_f64), |(bi, bv), (i, x)| if x.abs() > bv.abs() + 1e-14 { (i, x) } else { (bi, bv) })
            .0;
        if vec[lead] < 0.0 {
            vec.iter_mut().for_each(|x| *x = -*x);
        }
        for (row, x) in vec.into_iter().enumerate() {
            vectors.set(row, col, x);
        }
    }
    (EigenDecomposition { values, vectors }, converged)
}

/// `(σ_min, σ_max)` from the extreme eigenvalues of `MᵀM`.
pub fn singular_extremes(m: &Matrix) -> (f64, f64) {
    let gram = m.transpose().matmul(m);
    let (decomp, _) = jacobi(&gram);
    let hi = decomp.values.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    let lo = decomp.values.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    (lo.min(hi), hi)
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn invert(m: &Matrix) -> Result<Matrix, LinalgError> {
    let (smin, _) = singular_extremes(m);
    if smin <= SINGULAR_TOL {
        return Err(LinalgError::Singular(smin));
    }
    let n = m.dim();
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a.get(i, col).abs().total_cmp(&a.get(j, col).abs()))
            .expect("non-empty pivot range");
        if a.get(pivot, col) == 0.0 {
            return Err(LinalgError::Singular(0.0));
        }
        if pivot != col {
            for k in 0..n {
                let (x, y) = (a.get(col, k), a.get(pivot, k));
                a.set(col, k, y);
                a.set(pivot, k, x);
                let (x, y) = (inv.get(col, k), inv.get(pivot, k));
                inv.set(col, k, y);
                inv.set(pivot, k, x);
            }
        }
        let d = a.get(col, col);
        for k in 0..n {
            a.set(col, k, a.get(col, k) / d);
            inv.set(col, k, inv.get(col, k) / d);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a.get(r, col);
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                a.set(r, k, a.get(r, k) - f * a.get(col, k));
                inv.set(r, k, inv.get(r, k) - f * inv.get(col, k));
            }
        }
    }
    Ok(inv)
}
