//! Dense real matrices and the handful of spectral routines the metrics need.
//!
//! Singular values are obtained from the eigenvalues of the Gram matrix of the
//! smaller dimension, diagonalized with cyclic Jacobi rotations. Feature widths
//! here are small (tens of columns), so the Gram matrix stays tiny even for
//! graphs with thousands of nodes.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Default residual tolerance for [`power_iteration`].
pub const POWER_TOL: f64 = 1e-12;
/// Default iteration budget for [`power_iteration`].
pub const POWER_MAX_ITER: usize = 100_000;

const JACOBI_MAX_SWEEPS: usize = 60;
const JACOBI_TOL: f64 = 1e-14;

/// Gram eigenvalues at or below this fraction of the largest one are below the
/// resolution of the Gram route and are reported as exact zeros.
pub const GRAM_FLOOR: f64 = 1e-13;

/// Row-major matrix of finite `f64` values.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes, a length
    /// mismatch and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::shape(format!(
                    "row {i} has {} entries, expected {d}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, d, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty shape");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj;
            }
        }
        m
    }

    /// Builds a matrix by evaluating `f(i, j)` for every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `vᵀ M` as a vector of length `cols`.
    pub fn vec_mat(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::shape(format!(
                "cannot multiply a vector of length {} by {}x{}",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += vi * x;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|x| x * c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.add(&other.scale(-1.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    /// Gram matrix of the smaller dimension: `MᵀM` when `cols <= rows`,
    /// otherwise `MMᵀ`. Both share the nonzero eigenvalues.
    pub fn small_gram(&self) -> DenseMatrix {
        if self.cols <= self.rows {
            let d = self.cols;
            let mut g = Self::zeros(d, d);
            for i in 0..self.rows {
                let r = self.row(i);
                for a in 0..d {
                    let ra = r[a];
                    if ra == 0.0 {
                        continue;
                    }
                    let g_row = &mut g.data[a * d..(a + 1) * d];
                    for b in a..d {
                        g_row[b] += ra * r[b];
                    }
                }
            }
            for a in 0..d {
                for b in 0..a {
                    g.data[a * d + b] = g.data[b * d + a];
                }
            }
            g
        } else {
            let n = self.rows;
            let mut g = Self::zeros(n, n);
            for a in 0..n {
                for b in a..n {
                    let v = dot(self.row(a), self.row(b));
                    g[(a, b)] = v;
                    g[(b, a)] = v;
                }
            }
            g
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Square root of the sum of squared entries.
pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    // scaled accumulation keeps huge and tiny features representable
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let ss: f64 = m.data.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * ss.sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, unsorted.
///
/// Converges when the off-diagonal Frobenius mass falls below `1e-14` times
/// the diagonal mass; gives up after 60 sweeps.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::shape(format!(
            "eigenvalues of a non-square {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut m = a.data.clone();
    let at = |m: &Vec<f64>, i: usize, j: usize| m[i * n + j];

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = at(&m, i, j);
                if i == j {
                    diag += x * x;
                } else {
                    off += x * x;
                }
            }
        }
        if off == 0.0 || off.sqrt() < JACOBI_TOL * diag.sqrt() {
            return Ok((0..n).map(|i| at(&m, i, i)).collect());
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = at(&m, p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = at(&m, p, p);
                let aqq = at(&m, q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = at(&m, k, p);
                    let akq = at(&m, k, q);
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    m[k * n + p] = new_kp;
                    m[p * n + k] = new_kp;
                    m[k * n + q] = new_kq;
                    m[q * n + k] = new_kq;
                }
            }
        }
    }
    Err(Error::ConvergenceFailure {
        algorithm: "jacobi",
        iterations: JACOBI_MAX_SWEEPS,
    })
}

/// Singular values in nonincreasing order, `min(rows, cols)` of them.
///
/// Computed as square roots of the Gram eigenvalues; eigenvalues that are
/// negative or below [`GRAM_FLOOR`] times the largest are reported as zero.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    // rescale so the Gram matrix neither overflows nor underflows
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(vec![0.0; m.rows.min(m.cols)]);
    }
    let g = m.scale(1.0 / scale).small_gram();
    let mut eig = symmetric_eigenvalues(&g)?;
    eig.sort_by(|a, b| b.total_cmp(a));
    let top = eig[0].max(0.0);
    Ok(eig
        .into_iter()
        .map(|l| {
            if l <= GRAM_FLOOR * top {
                0.0
            } else {
                scale * l.sqrt()
            }
        })
        .collect())
}

/// Largest singular value, from power iteration on the small Gram matrix.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let g = m.scale(1.0 / scale).small_gram();
    let pair = power_iteration(&g, POWER_TOL, POWER_MAX_ITER)?;
    Ok(scale * pair.value.max(0.0).sqrt())
}

/// Dominant eigenpair returned by [`power_iteration`].
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// Unit 2-norm; the first non-negligible component is positive.
    pub vector: Vec<f64>,
}

/// Power iteration from the normalized all-ones vector.
///
/// Stops once `‖Av − λv‖ ≤ tol·|λ|` with `λ` the Rayleigh quotient. Fails with
/// [`Error::ConvergenceFailure`] when the dominant eigenvalue is not simple in
/// modulus (oscillating or stagnating iterates).
pub fn power_iteration(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<Eigenpair> {
    if !a.is_square() {
        return Err(Error::shape(format!(
            "power iteration on a non-square {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..max_iter {
        let w = a.mat_vec(&v)?;
        let lambda = dot(&v, &w);
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * lambda.abs() {
            return Ok(Eigenpair {
                value: lambda,
                vector: canonical_sign(v),
            });
        }
        let norm = norm2(&w);
        if norm == 0.0 {
            // v lies in the null space: an exact eigenpair for 0
            return Ok(Eigenpair {
                value: 0.0,
                vector: canonical_sign(v),
            });
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Err(Error::ConvergenceFailure {
        algorithm: "power iteration",
        iterations: max_iter,
    })
}

fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    v
}

/// `|λ₂/λ₁|` via power iteration and rank-one deflation with the left
/// dominant eigenvector.
pub fn spectral_gap(a: &DenseMatrix) -> Result<f64> {
    let right = power_iteration(a, POWER_TOL, POWER_MAX_ITER)?;
    if right.value == 0.0 {
        return Err(Error::DegenerateSpectrum(
            "dominant eigenvalue is zero".into(),
        ));
    }
    let left = power_iteration(&a.transpose(), POWER_TOL, POWER_MAX_ITER)?;
    let overlap = dot(&left.vector, &right.vector);
    if overlap.abs() < 1e-12 {
        return Err(Error::DegenerateSpectrum(
            "left and right dominant eigenvectors are orthogonal".into(),
        ));
    }
    let coeff = right.value / overlap;
    let mut deflated = a.clone();
    for i in 0..a.rows {
        for j in 0..a.cols {
            deflated[(i, j)] -= coeff * right.vector[i] * left.vector[j];
        }
    }
    let second = power_iteration(&deflated, POWER_TOL, POWER_MAX_ITER)?;
    Ok((second.value / right.value).abs().min(1.0))
}

/// Determinant by LU factorization with partial pivoting.
pub fn determinant(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::shape("determinant of a non-square matrix"));
    }
    let n = a.rows;
    let mut m = a.data.clone();
    let mut det = 1.0;
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs()))
            .unwrap();
        if m[pivot * n + k] == 0.0 {
            return Ok(0.0);
        }
        if pivot != k {
            for j in 0..n {
                m.swap(k * n + j, pivot * n + j);
            }
            det = -det;
        }
        let p = m[k * n + k];
        det *= p;
        for i in (k + 1)..n {
            let f = m[i * n + k] / p;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
        }
    }
    Ok(det)
}
