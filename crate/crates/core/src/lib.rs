//! Exact numerics for the constrained PXP ("Fibonacci") chain.
//!
//! The crate enumerates the blockade-constrained Hilbert space, resolves
//! translation and inversion symmetry, diagonalizes sectors densely, and
//! provides the analyses built on top: scar-band detection, the forward
//! scattering approximation, zero-mode counting with exact integer kernels,
//! level statistics and quench dynamics.

pub mod basis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod fsa;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod scars;
pub mod spectral;
pub mod symmetry;

pub use basis::{Boundary, ConstrainedBasis, HilbertGraph, Pattern, SpinConfiguration};
pub use error::{Error, Result};
pub use hamiltonian::{OperatorKind, OperatorSpec, SparseMatrix, SparseOperator};
pub use symmetry::{Block, BlockLabel, Parity, SectorVector, SymmetrySector};
