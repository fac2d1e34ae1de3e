//! Exact quench evolution: fidelity, nearest-neighbour correlator and
//! half-chain entanglement entropy on a time grid.

pub mod analysis;
pub mod entanglement;
pub mod krylov;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{Boundary, ConstrainedBasis, SpinConfiguration};
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble_full, OperatorSpec, SparseMatrix};
use crate::io::{Cell, CsvWriter};
use crate::spectral::{diagonalize, Eigenvectors};
use crate::symmetry::{Block, Parity};

pub use analysis::{linear_fit, oscillation_analysis, AnalysisOptions, LinearFit, Oscillation};
pub use entanglement::{entanglement_entropy, Bipartition};
pub use krylov::KrylovPropagator;

pub const NORM_TOLERANCE: f64 = 1e-10;
pub const ENERGY_TOLERANCE: f64 = 1e-8;
/// Fraction of the Schmidt-rank bound at which a run is flagged as saturated.
pub const SATURATION_FRACTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
            return Err(Error::invalid(format!("invalid time grid start={start} stop={stop} step={step}")));
        }
        Ok(Self { start, stop, step })
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid points computed as `start + i * step` so they do not accumulate
    /// rounding.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spectral,
    Krylov,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Spectral => "spectral",
            Method::Krylov => "krylov",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spectral" => Ok(Method::Spectral),
            "krylov" => Ok(Method::Krylov),
            other => Err(Error::invalid(format!("unknown evolution method '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchOptions {
    pub method: Method,
    pub krylov_dim: usize,
    pub krylov_tolerance: f64,
    /// Bond for the entropy; defaults to `L / 2`.
    pub cut: Option<usize>,
}

impl Default for QuenchOptions {
    fn default() -> Self {
        Self {
            method: Method::Krylov,
            krylov_dim: krylov::DEFAULT_KRYLOV_DIM,
            krylov_tolerance: krylov::DEFAULT_TOLERANCE,
            cut: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuenchRun {
    #[serde(rename = "L")]
    pub length: usize,
    pub boundary: Boundary,
    pub initial: String,
    pub method: Method,
    pub grid: TimeGrid,
    pub cut: usize,
    pub entropy_log_base: String,
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub correlator: Vec<f64>,
    pub entropy: Vec<f64>,
    pub energy: f64,
    pub max_norm_error: f64,
    pub max_energy_drift: f64,
    /// Upper bound on the entropy at this cut: ln of the smaller side's
    /// constrained dimension.
    pub entropy_bound: f64,
    /// First time the entropy exceeds `SATURATION_FRACTION * entropy_bound`;
    /// finite-size effects dominate beyond it.
    pub saturation_time: Option<f64>,
}

impl QuenchRun {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<W> {
        let mut csv = CsvWriter::new(out, &["t", "fidelity", "correlator", "entropy"])?;
        for i in 0..self.times.len() {
            csv.row(&[
                Cell::Float(self.times[i]),
                Cell::Float(self.fidelity[i]),
                Cell::Float(self.correlator[i]),
                Cell::Float(self.entropy[i]),
            ])?;
        }
        csv.finish()
    }
}

/// `(1/N_b) sum_b z_i z_{i+1}` for one product state, over the `L` bonds of a
/// ring or the `L - 1` bonds of an open chain.
pub fn bond_correlator(bits: u32, length: usize, boundary: Boundary) -> f64 {
    let z = |i: usize| if bits >> i & 1 == 1 { 1.0 } else { -1.0 };
    let bonds = match boundary {
        Boundary::Periodic => length,
        Boundary::Open => length - 1,
    };
    (0..bonds).map(|i| z(i) * z((i + 1) % length)).sum::<f64>() / bonds as f64
}

/// Symmetry blocks that together span the full space.
fn covering_blocks(basis: &Arc<ConstrainedBasis>) -> Result<Vec<Block>> {
    let length = basis.length();
    if basis.boundary() == Boundary::Open {
        return Ok(vec![Block::full(basis.clone())]);
    }
    let mut blocks = Vec::new();
    for k in 0..length {
        if k == 0 || 2 * k == length {
            for p in [Parity::Even, Parity::Odd] {
                blocks.push(Block::sector(basis.clone(), k, Some(p))?);
            }
        } else {
            blocks.push(Block::sector(basis.clone(), k, None)?);
        }
    }
    Ok(blocks)
}

struct Component {
    block: Block,
    energies: Vec<f64>,
    vectors: Vec<Complex64>,
    coefficients: Vec<Complex64>,
}

/// `exp(-i H t)` applied to a fixed initial vector through eigendecompositions
/// of every block that carries weight.
pub struct SpectralPropagator {
    dim: usize,
    components: Vec<Component>,
}

impl SpectralPropagator {
    pub fn new(basis: &Arc<ConstrainedBasis>, psi0: &[Complex64]) -> Result<Self> {
        let mut components = Vec::new();
        for block in covering_blocks(basis)? {
            if block.is_empty() {
                continue;
            }
            let projected = block.project(psi0)?;
            if projected.iter().map(|x| x.norm_sqr()).sum::<f64>() < 1e-24 {
                continue;
            }
            let spectrum = diagonalize(&block, true)?;
            let n = spectrum.dim();
            let vectors = match spectrum.eigenvectors {
                Some(Eigenvectors::Real(v)) => v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
                Some(Eigenvectors::Complex(v)) => v,
                None => unreachable!("requested eigenvectors"),
            };
            let coefficients = (0..n)
                .map(|j| vectors[j * n..(j + 1) * n].iter().zip(&projected).map(|(v, p)| v.conj() * p).sum())
                .collect();
            components.push(Component { block, energies: spectrum.eigenvalues, vectors, coefficients });
        }
        Ok(Self { dim: basis.len(), components })
    }

    pub fn state_at(&self, t: f64) -> Result<Vec<Complex64>> {
        let mut full = vec![Complex64::new(0.0, 0.0); self.dim];
        for c in &self.components {
            let n = c.energies.len();
            let mut local = vec![Complex64::new(0.0, 0.0); n];
            for (j, (&e, &a)) in c.energies.iter().zip(&c.coefficients).enumerate() {
                let w = a * Complex64::from_polar(1.0, -e * t);
                for (x, v) in local.iter_mut().zip(&c.vectors[j * n..(j + 1) * n]) {
                    *x += w * v;
                }
            }
            for (x, y) in full.iter_mut().zip(c.block.embed(&local)?) {
                *x += y;
            }
        }
        Ok(full)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.components.iter().map(|c| &c.block)
    }
}

fn expectation(h: &SparseMatrix<f64>, psi: &[Complex64]) -> f64 {
    (0..psi.len())
        .map(|r| psi[r].conj() * h.row(r).fold(Complex64::new(0.0, 0.0), |acc, (c, v)| acc + psi[c] * v))
        .sum::<Complex64>()
        .re
}

fn initial_index(basis: &ConstrainedBasis, initial: SpinConfiguration) -> Result<usize> {
    if initial.length() != basis.length() {
        return Err(Error::invalid("initial state length does not match the basis"));
    }
    basis
        .index_of_config(initial)
        .ok_or_else(|| Error::invalid(format!("initial state {initial} is not in the basis")))
}

/// Calls `visit(t, psi)` with the full-basis state at every grid time.
pub fn trajectory<F>(
    basis: &Arc<ConstrainedBasis>,
    initial: SpinConfiguration,
    grid: &TimeGrid,
    options: &QuenchOptions,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(f64, &[Complex64]) -> Result<()>,
{
    let i0 = initial_index(basis, initial)?;
    let mut psi = vec![Complex64::new(0.0, 0.0); basis.len()];
    psi[i0] = Complex64::new(1.0, 0.0);
    let times = grid.times();
    match options.method {
        Method::Spectral => {
            let propagator = SpectralPropagator::new(basis, &psi)?;
            for &t in &times {
                if t == 0.0 {
                    visit(t, &psi)?;
                } else {
                    visit(t, &propagator.state_at(t)?)?;
                }
            }
        }
        Method::Krylov => {
            let h = assemble_full(&OperatorSpec::pxp(), basis)?;
            let mut krylov = KrylovPropagator::new(h, options.krylov_dim, options.krylov_tolerance)?;
            let mut now = 0.0;
            for &t in &times {
                if t != now {
                    krylov.advance(&mut psi, t - now)?;
                    now = t;
                }
                visit(t, &psi)?;
            }
        }
    }
    Ok(())
}

/// Evolves a product state under `H` and records observables on `grid`.
pub fn evolve(
    basis: &Arc<ConstrainedBasis>,
    initial: SpinConfiguration,
    grid: &TimeGrid,
    options: &QuenchOptions,
) -> Result<QuenchRun> {
    let length = basis.length();
    let cut = options.cut.unwrap_or(length / 2);
    let bipartition = Bipartition::new(basis, cut)?;
    let h = assemble_full(&OperatorSpec::pxp(), basis)?;
    let bond: Vec<f64> = basis.states().iter().map(|&s| bond_correlator(s, length, basis.boundary())).collect();
    let i0 = initial_index(basis, initial)?;
    let energy = h.get(i0, i0);

    let n = grid.len();
    let (mut times, mut fidelity, mut correlator, mut entropy) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut max_norm_error, mut max_energy_drift) = (0.0f64, 0.0f64);
    trajectory(basis, initial, grid, options, |t, psi| {
        let norm_sqr: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
        let norm_error = (norm_sqr.sqrt() - 1.0).abs();
        if norm_error > NORM_TOLERANCE {
            return Err(Error::Accuracy(format!(
                "norm drifted by {norm_error:.3e} at t={t}; use a smaller step or a larger Krylov dimension"
            )));
        }
        let drift = (expectation(&h, psi) - energy).abs();
        if drift > ENERGY_TOLERANCE {
            return Err(Error::Accuracy(format!(
                "energy drifted by {drift:.3e} at t={t}; use a smaller step or a larger Krylov dimension"
            )));
        }
        max_norm_error = max_norm_error.max(norm_error);
        max_energy_drift = max_energy_drift.max(drift);
        times.push(t);
        fidelity.push(psi[i0].norm_sqr());
        correlator.push(psi.iter().zip(&bond).map(|(x, c)| x.norm_sqr() * c).sum());
        entropy.push(bipartition.entropy(psi)?);
        Ok(())
    })?;

    let entropy_bound = bipartition.max_entropy();
    let saturation_time = times
        .iter()
        .zip(&entropy)
        .find(|(_, &s)| s > SATURATION_FRACTION * entropy_bound)
        .map(|(&t, _)| t);
    Ok(QuenchRun {
        length,
        boundary: basis.boundary(),
        initial: initial.to_string(),
        method: options.method,
        grid: *grid,
        cut,
        entropy_log_base: "e".into(),
        times,
        fidelity,
        correlator,
        entropy,
        energy,
        max_norm_error,
        max_energy_drift,
        entropy_bound,
        saturation_time,
    })
}
