//! Dense eigensolvers and least squares (backed by faer), plus a small
//! scalar abstraction so sparse kernels work for real and complex sectors.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

use faer::{linalg::solvers::SolveLstsq, MatRef, Side};

pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + MulAssign
    + 'static
{
    const IS_COMPLEX: bool;

    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    /// Complex value as `Self`; real scalars keep only the real part.
    fn from_complex(z: Complex64) -> Self;
    fn conj(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn re(self) -> f64;
    fn to_complex(self) -> Complex64;
    fn scale(self, s: f64) -> Self;

    /// Eigen-decomposition of a Hermitian matrix stored column-major in `a`.
    /// On return `a` holds the eigenvectors as columns when `vectors` is set.
    fn eigh(a: &mut [Self], n: usize, vectors: bool) -> Result<Vec<f64>>;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn conj(self) -> Self {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn eigh(a: &mut [Self], n: usize, vectors: bool) -> Result<Vec<f64>> {
        symmetric_eigh(a, n, vectors)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn eigh(a: &mut [Self], n: usize, vectors: bool) -> Result<Vec<f64>> {
        hermitian_eigh(a, n, vectors)
    }
}

fn eigen_error(what: &str, err: impl Debug) -> Error {
    Error::Accuracy(format!("{what} did not converge: {err:?}"))
}

fn check_square<T>(a: &[T], n: usize) -> Result<()> {
    if a.len() != n * n {
        return Err(Error::invalid(format!("expected {n}x{n} matrix, got {} entries", a.len())));
    }
    Ok(())
}

/// Real symmetric eigensolver on the lower triangle of a column-major
/// matrix. Eigenvalues ascending; with `vectors` the columns of `a` are
/// overwritten by the eigenvectors.
pub fn symmetric_eigh(a: &mut [f64], n: usize, vectors: bool) -> Result<Vec<f64>> {
    check_square(a, n)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = MatRef::from_column_major_slice(a, n, n);
    if !vectors {
        return m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| eigen_error("symmetric eigensolver", e));
    }
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| eigen_error("symmetric eigensolver", e))?;
    let w: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let u = evd.U();
    for j in 0..n {
        for i in 0..n {
            a[j * n + i] = u[(i, j)];
        }
    }
    Ok(w)
}

/// Complex Hermitian counterpart of [`symmetric_eigh`].
pub fn hermitian_eigh(a: &mut [Complex64], n: usize, vectors: bool) -> Result<Vec<f64>> {
    check_square(a, n)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = MatRef::from_column_major_slice(a, n, n);
    if !vectors {
        return m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| eigen_error("Hermitian eigensolver", e));
    }
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| eigen_error("Hermitian eigensolver", e))?;
    let w: Vec<f64> = (0..n).map(|i| evd.S()[i].re).collect();
    let u = evd.U();
    for j in 0..n {
        for i in 0..n {
            a[j * n + i] = u[(i, j)];
        }
    }
    Ok(w)
}

/// Symmetric tridiagonal eigenproblem. Returns eigenvalues (ascending) and the
/// column-major eigenvector matrix.
pub fn tridiagonal_eigh(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if off.len() + 1 != n {
        return Err(Error::invalid("off-diagonal must have one entry fewer than the diagonal"));
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = diag[i];
        if i + 1 < n {
            a[i * n + i + 1] = off[i];
            a[(i + 1) * n + i] = off[i];
        }
    }
    let w = symmetric_eigh(&mut a, n, true)?;
    Ok((w, a))
}

/// Least-squares solution of `A x ≈ b` for a full-rank `m x n` column-major
/// `A` with `m >= n`.
pub fn least_squares(a: &[f64], m: usize, n: usize, b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != m * n || b.len() != m || m < n {
        return Err(Error::invalid("least_squares: inconsistent dimensions"));
    }
    let a = MatRef::from_column_major_slice(a, m, n);
    let b = MatRef::from_column_major_slice(b, m, 1);
    let x = a.qr().solve_lstsq(b);
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
