//! Lanczos propagator for `exp(-i H t)` on a sparse real symmetric `H`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::SparseMatrix;
use crate::linalg::tridiagonal_eigh;

pub const DEFAULT_KRYLOV_DIM: usize = 30;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn matvec(h: &SparseMatrix<f64>, x: &[Complex64], y: &mut [Complex64]) {
    for (r, out) in y.iter_mut().enumerate() {
        *out = h.row(r).fold(ZERO, |acc, (c, v)| acc + x[c] * v);
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn reorthogonalize(vectors: &[Vec<Complex64>], w: &mut [Complex64]) {
    let coefficients: Vec<Complex64> = vectors.iter().map(|v| inner(v, w)).collect();
    for (c, v) in coefficients.iter().zip(vectors) {
        for (x, y) in w.iter_mut().zip(v) {
            *x -= c * y;
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovPropagator {
    h: SparseMatrix<f64>,
    dim: usize,
    tolerance: f64,
    /// Sub-step length that last met the tolerance.
    step_hint: f64,
    pub substeps: usize,
}

struct Subspace {
    vectors: Vec<Vec<Complex64>>,
    eigenvalues: Vec<f64>,
    /// Column-major eigenvectors of the tridiagonal matrix.
    eigenvectors: Vec<f64>,
    /// Residual coupling out of the subspace; zero on an invariant subspace.
    beta_out: f64,
    scale: f64,
}

impl Subspace {
    fn coefficients(&self, tau: f64) -> Vec<Complex64> {
        let k = self.eigenvalues.len();
        let mut c = vec![ZERO; k];
        for (j, &e) in self.eigenvalues.iter().enumerate() {
            let q = &self.eigenvectors[j * k..(j + 1) * k];
            let w = Complex64::from_polar(q[0], -e * tau);
            for (ci, &qi) in c.iter_mut().zip(q) {
                *ci += w * qi;
            }
        }
        c
    }

    fn error(&self, c: &[Complex64]) -> f64 {
        self.scale * self.beta_out * c.last().map_or(0.0, |x| x.norm())
    }
}

impl KrylovPropagator {
    pub fn new(h: SparseMatrix<f64>, dim: usize, tolerance: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("Krylov dimension must be at least 2"));
        }
        Ok(Self { h, dim, tolerance, step_hint: f64::INFINITY, substeps: 0 })
    }

    pub fn hamiltonian(&self) -> &SparseMatrix<f64> {
        &self.h
    }

    fn build(&self, psi: &[Complex64]) -> Subspace {
        let n = psi.len();
        let scale = norm(psi);
        let mut vectors = vec![psi.iter().map(|x| x / scale).collect::<Vec<_>>()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![ZERO; n];
        let mut beta_out = 0.0;
        for j in 0..self.dim.min(n) {
            matvec(&self.h, &vectors[j], &mut w);
            let a = inner(&vectors[j], &w).re;
            alpha.push(a);
            for (x, v) in w.iter_mut().zip(&vectors[j]) {
                *x -= v * a;
            }
            if j > 0 {
                let b = beta[j - 1];
                for (x, v) in w.iter_mut().zip(&vectors[j - 1]) {
                    *x -= v * b;
                }
            }
            // Full reorthogonalization; a second pass only after heavy cancellation.
            let before = norm(&w);
            reorthogonalize(&vectors, &mut w);
            if norm(&w) < 0.5 * before {
                reorthogonalize(&vectors, &mut w);
            }
            let b = norm(&w);
            if b < 1e-12 || j + 1 == self.dim.min(n) {
                beta_out = if b < 1e-12 { 0.0 } else { b };
                break;
            }
            beta.push(b);
            vectors.push(w.iter().map(|x| x / b).collect());
        }
        let (eigenvalues, eigenvectors) = tridiagonal_eigh(&alpha, &beta).expect("small tridiagonal problem");
        Subspace { vectors, eigenvalues, eigenvectors, beta_out, scale }
    }

    /// Advances `psi` by `dt` in place, splitting into sub-steps as needed.
    pub fn advance(&mut self, psi: &mut [Complex64], dt: f64) -> Result<()> {
        let mut remaining = dt;
        while remaining > 0.0 {
            let space = self.build(psi);
            let mut tau = remaining.min(self.step_hint * 2.0);
            let mut halvings = 0;
            let coefficients = loop {
                let c = space.coefficients(tau);
                if space.error(&c) <= self.tolerance {
                    break c;
                }
                tau *= 0.5;
                halvings += 1;
                if halvings > 60 {
                    return Err(Error::Accuracy(
                        "Krylov step cannot meet the error tolerance; raise the Krylov dimension".into(),
                    ));
                }
            };
            for x in psi.iter_mut() {
                *x = ZERO;
            }
            for (c, v) in coefficients.iter().zip(&space.vectors) {
                let c = c * space.scale;
                for (x, y) in psi.iter_mut().zip(v) {
                    *x += c * y;
                }
            }
            self.step_hint = tau;
            self.substeps += 1;
            remaining -= tau;
            if remaining < 1e-14 * dt.abs().max(1.0) {
                break;
            }
        }
        Ok(())
    }
}
