//! Dense diagonalization of blocks, density of states, level statistics and
//! zero modes.

pub mod levels;
pub mod zero_modes;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{assemble, OperatorMatrix, OperatorSpec, SparseMatrix, SparseOperator};
use crate::linalg::Scalar;
use crate::symmetry::{Block, BlockLabel};

pub use levels::{level_statistics, standard_window, LevelStatistics};
pub use zero_modes::{sublattice_imbalance_bound, zero_modes, ZeroModeOptions, ZeroModeReport};

/// Dimension above which dense diagonalization is refused.
pub const DEFAULT_DENSE_CAP: usize = 14000;
pub const DENSE_CAP_ENV: &str = "SCARLAB_DENSE_CAP";

pub fn dense_cap() -> usize {
    std::env::var(DENSE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_CAP)
}

/// Column-major eigenvector matrix.
#[derive(Clone, Debug)]
pub enum Eigenvectors {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub block: Block,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Eigenvectors>,
}

impl SpectrumResult {
    pub fn label(&self) -> BlockLabel {
        self.block.label()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn has_vectors(&self) -> bool {
        self.eigenvectors.is_some()
    }

    fn require_vectors(&self) -> Result<&Eigenvectors> {
        self.eigenvectors
            .as_ref()
            .ok_or_else(|| Error::invalid("spectrum was computed without eigenvectors"))
    }

    /// Eigenvector `j` of a real block.
    pub fn vector_real(&self, j: usize) -> Result<&[f64]> {
        let n = self.dim();
        match self.require_vectors()? {
            Eigenvectors::Real(v) => Ok(&v[j * n..(j + 1) * n]),
            Eigenvectors::Complex(_) => Err(Error::invalid("block has complex eigenvectors")),
        }
    }

    pub fn vector(&self, j: usize) -> Result<Vec<Complex64>> {
        let n = self.dim();
        Ok(match self.require_vectors()? {
            Eigenvectors::Real(v) => v[j * n..(j + 1) * n].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Eigenvectors::Complex(v) => v[j * n..(j + 1) * n].to_vec(),
        })
    }

    /// `|<ref|E_j>|^2` for every eigenvector, `reference` in block coordinates.
    pub fn overlaps(&self, reference: &[Complex64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if reference.len() != n {
            return Err(Error::invalid("reference vector does not match block dimension"));
        }
        Ok(match self.require_vectors()? {
            Eigenvectors::Real(v) => v
                .chunks_exact(n)
                .map(|col| col.iter().zip(reference).map(|(&a, b)| b.conj() * a).sum::<Complex64>().norm_sqr())
                .collect(),
            Eigenvectors::Complex(v) => v
                .chunks_exact(n)
                .map(|col| col.iter().zip(reference).map(|(a, b)| b.conj() * a).sum::<Complex64>().norm_sqr())
                .collect(),
        })
    }

    /// `sum_alpha |c_alpha|^4` for eigenvector `j`.
    pub fn participation_ratio(&self, j: usize) -> Result<f64> {
        let n = self.dim();
        Ok(match self.require_vectors()? {
            Eigenvectors::Real(v) => v[j * n..(j + 1) * n].iter().map(|x| x.powi(4)).sum(),
            Eigenvectors::Complex(v) => v[j * n..(j + 1) * n].iter().map(|x| x.norm_sqr().powi(2)).sum(),
        })
    }

    /// `max_i |E_i + E_{D-1-i}|`.
    pub fn reflection_defect(&self) -> f64 {
        let e = &self.eigenvalues;
        (0..e.len()).map(|i| (e[i] + e[e.len() - 1 - i]).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_energy(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()))
    }

    /// Eigenvalues with `|E| < tol * max|E|`.
    pub fn zero_mode_count(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.max_abs_energy();
        self.eigenvalues.iter().filter(|e| e.abs() < cut).count()
    }
}

fn residual_check<T: Scalar>(m: &SparseMatrix<T>, w: &[f64], vecs: &[T]) -> Result<()> {
    let n = m.dim();
    let scale = w.iter().fold(0.0f64, |a, e| a.max(e.abs())).max(1.0);
    let mut y = vec![T::zero(); n];
    for (j, col) in vecs.chunks_exact(n).enumerate() {
        m.matvec_into(col, &mut y);
        let res = y
            .iter()
            .zip(col)
            .map(|(&hy, &v)| (hy - v.scale(w[j])).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res > 1e-8 * scale {
            return Err(Error::Accuracy(format!("eigenpair {j} has residual {res:.3e}")));
        }
        let norm = crate::linalg::norm(col);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Accuracy(format!("eigenvector {j} has norm {norm}")));
        }
    }
    Ok(())
}

fn dense_eigh<T: Scalar>(m: &SparseMatrix<T>, vectors: bool) -> Result<(Vec<f64>, Option<Vec<T>>)> {
    let n = m.dim();
    let mut a = m.to_dense();
    let w = T::eigh(&mut a, n, vectors)?;
    if vectors {
        residual_check(m, &w, &a)?;
        Ok((w, Some(a)))
    } else {
        Ok((w, None))
    }
}

fn check_cap(dim: usize) -> Result<()> {
    let cap = dense_cap();
    if dim > cap {
        return Err(Error::Capacity(format!(
            "dimension {dim} exceeds the dense diagonalization cap {cap}; set {DENSE_CAP_ENV} to raise it \
             (iterative solvers are not provided)"
        )));
    }
    Ok(())
}

/// Full eigendecomposition of `H` on a block.
pub fn diagonalize(block: &Block, vectors: bool) -> Result<SpectrumResult> {
    check_cap(block.len())?;
    let op = assemble(&OperatorSpec::pxp(), block)?;
    diagonalize_operator(block, &op, vectors)
}

/// Full eigendecomposition of an already assembled Hermitian operator.
pub fn diagonalize_operator(block: &Block, op: &SparseOperator, vectors: bool) -> Result<SpectrumResult> {
    check_cap(op.dim())?;
    if op.dim() != block.len() {
        return Err(Error::invalid("operator dimension does not match block"));
    }
    let (eigenvalues, eigenvectors) = match &op.matrix {
        OperatorMatrix::Real(m) => {
            let (w, v) = dense_eigh(m, vectors)?;
            (w, v.map(Eigenvectors::Real))
        }
        OperatorMatrix::Complex(m) => {
            let (w, v) = dense_eigh(m, vectors)?;
            (w, v.map(Eigenvectors::Complex))
        }
    };
    Ok(SpectrumResult { block: block.clone(), eigenvalues, eigenvectors })
}

/// Histogram of the spectrum with the exact-zero count reported separately.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityOfStates {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub zero_modes: usize,
    pub mean: f64,
    pub std_dev: f64,
}

pub fn density_of_states(eigenvalues: &[f64], bins: usize) -> Result<DensityOfStates> {
    if eigenvalues.is_empty() || bins == 0 {
        return Err(Error::invalid("density of states needs a non-empty spectrum and at least one bin"));
    }
    let lo = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &e in eigenvalues {
        let b = (((e - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let scale = lo.abs().max(hi.abs());
    let zero_modes = eigenvalues.iter().filter(|e| e.abs() < 1e-10 * scale).count();
    let n = eigenvalues.len() as f64;
    let mean = eigenvalues.iter().sum::<f64>() / n;
    let var = eigenvalues.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    Ok(DensityOfStates { edges, counts, zero_modes, mean, std_dev: var.sqrt() })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::basis::{Boundary, ConstrainedBasis};
    use crate::symmetry::Parity;

    #[test]
    fn l4_sector_spectrum() {
        let basis = Arc::new(ConstrainedBasis::enumerate(4, Boundary::Periodic).unwrap());
        let block = Block::sector(basis, 0, Some(Parity::Even)).unwrap();
        let s = diagonalize(&block, true).unwrap();
        assert_eq!(s.dim(), 3);
        assert!(s.eigenvalues[1].abs() < 1e-12);
        assert!((s.eigenvalues[0] + s.eigenvalues[2]).abs() < 1e-12);
        assert!(s.eigenvalues[2] > 0.0);
    }

    #[test]
    fn capacity_error() {
        // Run in-process without touching the environment: compare against
        // a block that is larger than any sensible cap.
        let err = check_cap(usize::MAX).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn dos_of_full_spectrum() {
        let basis = Arc::new(ConstrainedBasis::enumerate(12, Boundary::Periodic).unwrap());
        let s = diagonalize(&Block::full(basis), false).unwrap();
        let dos = density_of_states(&s.eigenvalues, 20).unwrap();
        assert_eq!(dos.counts.iter().sum::<usize>(), s.dim());
        assert!(dos.mean.abs() < 1e-10);
        assert!(dos.zero_modes > 0);
    }

    #[test]
    fn participation_bounds() {
        let basis = Arc::new(ConstrainedBasis::enumerate(10, Boundary::Periodic).unwrap());
        let block = Block::sector(basis, 0, Some(Parity::Even)).unwrap();
        let s = diagonalize(&block, true).unwrap();
        let d = s.dim() as f64;
        for j in 0..s.dim() {
            let pr = s.participation_ratio(j).unwrap();
            assert!(pr >= 1.0 / d - 1e-12 && pr <= 1.0 + 1e-12);
        }
    }
}
