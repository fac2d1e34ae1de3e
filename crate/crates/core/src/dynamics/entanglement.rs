//! Bipartite entanglement of constrained states.
//!
//! The left and right blocks of a cut are enumerated as open-chain
//! constrained substrings, so no unconstrained 2^L space is ever built.

use num_complex::Complex64;

use crate::basis::ConstrainedBasis;
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigh;

/// Schmidt weights below this are dropped from the entropy sum.
const WEIGHT_FLOOR: f64 = 1e-14;

/// Open-chain constrained configurations of `n` sites, ascending.
fn substrings(n: usize) -> Vec<u32> {
    (0..1u32 << n).filter(|s| s & (s >> 1) == 0).collect()
}

/// Precomputed row/column positions of every basis state for one cut.
#[derive(Clone, Debug)]
pub struct Bipartition {
    cut: usize,
    left_dim: usize,
    right_dim: usize,
    /// `(left index, right index)` per basis state.
    coordinates: Vec<(u32, u32)>,
}

impl Bipartition {
    /// Left block: sites `0..cut`; right block: sites `cut..L`.
    pub fn new(basis: &ConstrainedBasis, cut: usize) -> Result<Self> {
        let length = basis.length();
        if cut == 0 || cut >= length {
            return Err(Error::invalid(format!("cut must lie in 1..{} (got {cut})", length - 1)));
        }
        let left = substrings(cut);
        let right = substrings(length - cut);
        let mask = (1u32 << cut) - 1;
        let coordinates = basis
            .states()
            .iter()
            .map(|&s| {
                let l = left.binary_search(&(s & mask));
                let r = right.binary_search(&(s >> cut));
                // Both halves of a constrained state are constrained substrings.
                match (l, r) {
                    (Ok(l), Ok(r)) => Ok((l as u32, r as u32)),
                    _ => Err(Error::consistency(format!("state {s:#b} does not split at cut {cut}"))),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { cut, left_dim: left.len(), right_dim: right.len(), coordinates })
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    /// `ln` of the smaller block dimension, the maximal entropy.
    pub fn max_entropy(&self) -> f64 {
        (self.left_dim.min(self.right_dim) as f64).ln()
    }

    /// Von Neumann entropy (natural log) of the reduced density matrix.
    pub fn entropy(&self, psi: &[Complex64]) -> Result<f64> {
        if psi.len() != self.coordinates.len() {
            return Err(Error::invalid("state does not match the bipartition's basis"));
        }
        let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr.sqrt() - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!("state is not normalized (norm {})", norm_sqr.sqrt())));
        }
        // Reduce onto the smaller side: rho = M M^dagger with M the
        // (small x large) coefficient matrix.
        let (small, large, swap) = if self.left_dim <= self.right_dim {
            (self.left_dim, self.right_dim, false)
        } else {
            (self.right_dim, self.left_dim, true)
        };
        let mut m = vec![Complex64::new(0.0, 0.0); small * large];
        for (&(l, r), &a) in self.coordinates.iter().zip(psi) {
            let (i, j) = if swap { (r as usize, l as usize) } else { (l as usize, r as usize) };
            m[j * small + i] = a;
        }
        let mut rho = vec![Complex64::new(0.0, 0.0); small * small];
        for j in 0..large {
            let col = &m[j * small..(j + 1) * small];
            for (b, &cb) in col.iter().enumerate() {
                if cb == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let cbc = cb.conj();
                for (a, &ca) in col.iter().enumerate().skip(b) {
                    rho[b * small + a] += ca * cbc;
                }
            }
        }
        let weights = hermitian_eigh(&mut rho, small, false)?;
        let total: f64 = weights.iter().filter(|&&w| w > 0.0).sum();
        Ok(weights
            .iter()
            .map(|&w| w / total)
            .filter(|&p| p > WEIGHT_FLOOR)
            .map(|p| -p * p.ln())
            .sum())
    }
}

/// Entropy of `psi` across the bond between sites `cut - 1` and `cut`.
pub fn entanglement_entropy(basis: &ConstrainedBasis, psi: &[Complex64], cut: usize) -> Result<f64> {
    Bipartition::new(basis, cut)?.entropy(psi)
}
