//! Forward scattering approximation: the Krylov-like chain generated by the
//! raising part `H+` acting on |Z2>.
//!
//! `H+` raises the Hamming distance to |Z2> by one, so `|n>` lives entirely
//! on the product states at distance `n`. Vectors are stored layer by layer,
//! which keeps memory at one amplitude per basis state even at L = 32.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{z2_mask, Boundary, ConstrainedBasis};
use crate::error::{Error, Result};
use crate::io::{Cell, CsvWriter};
use crate::linalg::tridiagonal_eigh;

/// `||H+|L>||` above which the recursion is reported as not closing.
pub const CLOSURE_TOLERANCE: f64 = 1e-10;

/// One `|n>`: amplitudes on the basis states at Hamming distance `n`.
#[derive(Clone, Debug)]
pub struct FsaVector {
    /// Indices into the full basis, ascending.
    pub indices: Vec<u32>,
    pub amplitudes: Vec<f64>,
}

impl FsaVector {
    pub fn to_full(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for (&i, &a) in self.indices.iter().zip(&self.amplitudes) {
            v[i as usize] = a;
        }
        v
    }

    /// `<n|psi>` for a full-basis vector.
    pub fn overlap(&self, full: &[Complex64]) -> Complex64 {
        self.indices.iter().zip(&self.amplitudes).map(|(&i, &a)| full[i as usize] * a).sum()
    }
}

#[derive(Clone, Debug)]
pub struct FsaResult {
    pub basis: Arc<ConstrainedBasis>,
    pub vectors: Vec<FsaVector>,
    /// `beta_n = ||H+|n>||`, n = 0..L-1.
    pub betas: Vec<f64>,
    /// `err(n) = |<n|H+H-|n>/beta_{n-1}^2 - 1|`, with `err(0) = 0`.
    pub errors: Vec<f64>,
    /// `max_n |beta_n - <n|H-|n+1>|`.
    pub hopping_defect: f64,
    /// `||H+|L>||`.
    pub closure_norm: f64,
    /// Ascending eigenvalues of the tridiagonal chain.
    pub energies: Vec<f64>,
    /// Column-major `(L+1) x (L+1)` eigenvectors in the `|n>` basis.
    pub eigenvectors: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FsaReport {
    #[serde(rename = "L")]
    pub length: usize,
    pub boundary: Boundary,
    pub beta: Vec<f64>,
    pub err: Vec<f64>,
    pub mean_err: f64,
    pub max_err: f64,
    pub closure_norm: f64,
    pub hopping_defect: f64,
    pub energies: Vec<f64>,
    pub overlaps_z2: Vec<f64>,
}

/// Layer bookkeeping: members of each Hamming layer and every state's
/// position inside its layer.
struct Layers {
    members: Vec<Vec<u32>>,
    position: Vec<u32>,
}

impl Layers {
    fn new(basis: &ConstrainedBasis) -> Self {
        let mut members = vec![Vec::new(); basis.length() + 1];
        let mut position = vec![0u32; basis.len()];
        for (i, &d) in basis.hamming().iter().enumerate() {
            let layer = &mut members[d as usize];
            position[i] = layer.len() as u32;
            layer.push(i as u32);
        }
        Self { members, position }
    }
}

/// `H+` (`raise = true`) or `H-` applied to a vector supported on layer
/// `from`, gathered onto layer `from +- 1`.
fn hop(basis: &ConstrainedBasis, layers: &Layers, from: usize, x: &[f64], raise: bool) -> Vec<f64> {
    let to = if raise { from + 1 } else { from - 1 };
    let length = basis.length();
    let z2 = z2_mask(length);
    let all = crate::basis::site_mask(length);
    let neighbours = basis.neighbour_masks();
    let states = basis.states();
    layers.members[to]
        .iter()
        .map(|&t| {
            let t_bits = states[t as usize];
            // Sites where the output differs from |Z2> (raising) or agrees
            // with it (lowering) are the ones the hop just flipped.
            let mut sites = if raise { (t_bits ^ z2) & all } else { !(t_bits ^ z2) & all };
            let mut acc = 0.0;
            while sites != 0 {
                let j = sites.trailing_zeros() as usize;
                sites &= sites - 1;
                if t_bits & neighbours[j] == 0 {
                    let s = basis.index_of(t_bits ^ (1 << j)).expect("valid flip stays in basis");
                    acc += x[layers.position[s] as usize];
                }
            }
            acc
        })
        .collect()
}

/// `||H+ x||` by scattering from the support of `x`, without assuming
/// where the image lives.
fn scatter_norm(basis: &ConstrainedBasis, support: &[u32], x: &[f64]) -> f64 {
    let length = basis.length();
    let z2 = z2_mask(length);
    let all = crate::basis::site_mask(length);
    let neighbours = basis.neighbour_masks();
    let mut image: BTreeMap<u32, f64> = BTreeMap::new();
    for (&i, &a) in support.iter().zip(x) {
        let s = basis.states()[i as usize];
        let mut sites = !(s ^ z2) & all;
        while sites != 0 {
            let j = sites.trailing_zeros() as usize;
            sites &= sites - 1;
            if s & neighbours[j] == 0 {
                *image.entry(s ^ (1 << j)).or_default() += a;
            }
        }
    }
    image.values().fold(0.0, |acc, v| acc + v * v).sqrt()
}

/// Compensated (Neumaier) dot product; layers at L = 32 hold ~10^6 terms.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0;
    for (x, y) in a.iter().zip(b) {
        let term = x * y;
        let t = sum + term;
        carry += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    sum + carry
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Runs the recursion for even `L`.
pub fn run_fsa(length: usize, boundary: Boundary) -> Result<FsaResult> {
    if length % 2 != 0 {
        return Err(Error::invalid(format!("the FSA chain needs even L (got {length})")));
    }
    let basis = Arc::new(ConstrainedBasis::enumerate(length, boundary)?);
    run_fsa_on(basis)
}

pub fn run_fsa_on(basis: Arc<ConstrainedBasis>) -> Result<FsaResult> {
    let length = basis.length();
    if length % 2 != 0 {
        return Err(Error::invalid(format!("the FSA chain needs even L (got {length})")));
    }
    let layers = Layers::new(&basis);
    let start = basis.index_of(z2_mask(length)).expect("|Z2> is a valid state");
    let mut current = vec![1.0];
    let mut vectors = vec![FsaVector { indices: vec![start as u32], amplitudes: current.clone() }];
    let mut betas = Vec::with_capacity(length);
    let mut errors = vec![0.0];
    let mut hopping_defect = 0.0f64;

    for n in 0..length {
        let raised = hop(&basis, &layers, n, &current, true);
        let beta = norm(&raised);
        if beta <= CLOSURE_TOLERANCE {
            return Err(Error::Consistency(format!(
                "FSA terminated early: ||H+|{n}>|| = {beta:.3e}"
            )));
        }
        let next: Vec<f64> = raised.iter().map(|x| x / beta).collect();
        let lowered = hop(&basis, &layers, n + 1, &next, false);
        hopping_defect = hopping_defect.max((dot(&lowered, &current) - beta).abs());
        errors.push((dot(&lowered, &lowered) / (beta * beta) - 1.0).abs());
        betas.push(beta);
        vectors.push(FsaVector { indices: layers.members[n + 1].clone(), amplitudes: next.clone() });
        current = next;
    }

    let closure_norm = scatter_norm(&basis, &layers.members[length], &current);
    if closure_norm > CLOSURE_TOLERANCE {
        return Err(Error::Consistency(format!(
            "FSA did not close after {length} steps: ||H+|L>|| = {closure_norm:.3e}"
        )));
    }

    let (energies, eigenvectors) = tridiagonal_eigh(&vec![0.0; length + 1], &betas)?;
    Ok(FsaResult { basis, vectors, betas, errors, hopping_defect, closure_norm, energies, eigenvectors })
}

impl FsaResult {
    pub fn length(&self) -> usize {
        self.basis.length()
    }

    /// Mean of `err(n)` over n = 1..L.
    pub fn mean_error(&self) -> f64 {
        self.errors[1..].iter().sum::<f64>() / (self.errors.len() - 1) as f64
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().cloned().fold(0.0, f64::max)
    }

    /// Coefficients of FSA eigenvector `j` on `|0>..|L>`.
    pub fn eigenvector(&self, j: usize) -> &[f64] {
        let m = self.length() + 1;
        &self.eigenvectors[j * m..(j + 1) * m]
    }

    /// `|<Z2|psi_j>|^2` for every FSA eigenvector.
    pub fn overlaps_z2(&self) -> Vec<f64> {
        (0..self.energies.len()).map(|j| self.eigenvector(j)[0].powi(2)).collect()
    }

    /// FSA eigenvector `j` as a full-basis vector `sum_n c_n |n>`.
    pub fn embed(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.basis.len()];
        for (c, vec) in self.eigenvector(j).iter().zip(&self.vectors) {
            for (&i, &a) in vec.indices.iter().zip(&vec.amplitudes) {
                v[i as usize] = c * a;
            }
        }
        v
    }

    /// `|<n|psi>|^2` for n = 0..L.
    pub fn profile(&self, full: &[Complex64]) -> Result<Vec<f64>> {
        if full.len() != self.basis.len() {
            return Err(Error::invalid("profile vector does not match the FSA basis dimension"));
        }
        Ok(self.vectors.iter().map(|v| v.overlap(full).norm_sqr()).collect())
    }

    pub fn report(&self) -> FsaReport {
        FsaReport {
            length: self.length(),
            boundary: self.basis.boundary(),
            beta: self.betas.clone(),
            err: self.errors.clone(),
            mean_err: self.mean_error(),
            max_err: self.max_error(),
            closure_norm: self.closure_norm,
            hopping_defect: self.hopping_defect,
            energies: self.energies.clone(),
            overlaps_z2: self.overlaps_z2(),
        }
    }
}

/// An exact eigenstate to compare against, as a full-basis vector.
#[derive(Clone, Debug)]
pub struct ExactState {
    pub energy: f64,
    pub vector: Vec<Complex64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchedPair {
    pub fsa_index: usize,
    pub fsa_energy: f64,
    pub exact_energy: f64,
    /// `|E_fsa - E_exact| / |E_exact|`; `None` when the exact energy is zero.
    pub relative_difference: Option<f64>,
    pub exact_profile: Vec<f64>,
    pub fsa_profile: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub pairs: Vec<MatchedPair>,
    pub mean_relative_difference: f64,
}

/// Pairs FSA and exact states by sorted energy order.
pub fn compare_to_exact(result: &FsaResult, exact: &[ExactState]) -> Result<Comparison> {
    if exact.len() != result.energies.len() {
        let listed: Vec<String> = exact.iter().map(|s| format!("{:.4}", s.energy)).collect();
        let fsa: Vec<String> = result.energies.iter().map(|e| format!("{e:.4}")).collect();
        return Err(Error::invalid(format!(
            "cannot match {} exact states [{}] to {} FSA states [{}]",
            exact.len(),
            listed.join(", "),
            fsa.len(),
            fsa.join(", ")
        )));
    }
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| exact[a].energy.total_cmp(&exact[b].energy));
    let mut pairs = Vec::with_capacity(exact.len());
    for (j, &k) in order.iter().enumerate() {
        let state = &exact[k];
        let fsa_energy = result.energies[j];
        let relative_difference =
            (state.energy.abs() > 1e-9).then(|| (fsa_energy - state.energy).abs() / state.energy.abs());
        pairs.push(MatchedPair {
            fsa_index: j,
            fsa_energy,
            exact_energy: state.energy,
            relative_difference,
            exact_profile: result.profile(&state.vector)?,
            fsa_profile: result.eigenvector(j).iter().map(|c| c * c).collect(),
        });
    }
    let rel: Vec<f64> = pairs.iter().filter_map(|p| p.relative_difference).collect();
    let mean_relative_difference = rel.iter().sum::<f64>() / rel.len().max(1) as f64;
    Ok(Comparison { pairs, mean_relative_difference })
}

impl MatchedPair {
    pub fn write_profile<W: Write>(&self, out: W) -> Result<W> {
        let mut csv = CsvWriter::new(out, &["n", "exact_prob", "fsa_prob"])?;
        for (n, (e, f)) in self.exact_profile.iter().zip(&self.fsa_profile).enumerate() {
            csv.row(&[Cell::from(n), Cell::from(*e), Cell::from(*f)])?;
        }
        csv.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{decompose_pm, SparseMatrix};

    /// Plain recursion on assembled sparse H+/H- with full-length vectors.
    fn oracle(length: usize) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let basis = ConstrainedBasis::enumerate(length, Boundary::Periodic).unwrap();
        let (hp, hm): (SparseMatrix<f64>, SparseMatrix<f64>) = decompose_pm(&basis).unwrap();
        let mut v = vec![0.0; basis.len()];
        v[basis.index_of(z2_mask(length)).unwrap()] = 1.0;
        let mut vs = vec![v.clone()];
        let mut betas = Vec::new();
        let mut errs = vec![0.0];
        for _ in 0..length {
            let w = hp.matvec(&v);
            let b = norm(&w);
            v = w.iter().map(|x| x / b).collect();
            let u = hm.matvec(&v);
            errs.push((dot(&u, &u) / (b * b) - 1.0).abs());
            betas.push(b);
            vs.push(v.clone());
        }
        (betas, errs, vs)
    }

    #[test]
    fn matches_full_vector_oracle() {
        for length in [4, 6, 8, 10, 12] {
            let r = run_fsa(length, Boundary::Periodic).unwrap();
            let (betas, errs, vs) = oracle(length);
            for n in 0..length {
                assert!((r.betas[n] - betas[n]).abs() < 1e-12);
            }
            for n in 0..=length {
                assert!((r.errors[n] - errs[n]).abs() < 1e-12);
                let full = r.vectors[n].to_full(r.basis.len());
                let diff: f64 = full.iter().zip(&vs[n]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(diff < 1e-12);
            }
        }
    }

    #[test]
    fn l8_first_hopping() {
        let r = run_fsa(8, Boundary::Periodic).unwrap();
        assert!((r.betas[0] - 2.0).abs() < 1e-14);
        assert_eq!(r.energies.len(), 9);
        assert!(r.errors[1].abs() < 1e-14);
        assert!(r.hopping_defect < 1e-12);
        assert!(r.closure_norm < CLOSURE_TOLERANCE);
    }

    #[test]
    fn endpoints_and_orthonormality() {
        let r = run_fsa(10, Boundary::Periodic).unwrap();
        let last = r.vectors.last().unwrap();
        let z2p = r.basis.index_of(!z2_mask(10) & crate::basis::site_mask(10)).unwrap();
        assert_eq!(last.indices, vec![z2p as u32]);
        assert!((last.amplitudes[0].abs() - 1.0).abs() < 1e-12);
        for (m, a) in r.vectors.iter().enumerate() {
            for (n, b) in r.vectors.iter().enumerate() {
                let disjoint = a.indices.iter().all(|i| !b.indices.contains(i));
                assert_eq!(disjoint, m != n);
            }
            assert!((norm(&a.amplitudes) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_symmetric_and_profiles_normalized() {
        let r = run_fsa(12, Boundary::Periodic).unwrap();
        let e = &r.energies;
        for i in 0..e.len() {
            assert!((e[i] + e[e.len() - 1 - i]).abs() < 1e-10);
        }
        assert!((r.overlaps_z2().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let full: Vec<Complex64> = r.embed(3).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        let p = r.profile(&full).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let c = r.eigenvector(3);
        for n in 0..p.len() {
            assert!((p[n] - c[n] * c[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_length_rejected() {
        assert!(matches!(run_fsa(7, Boundary::Periodic), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn open_chain_closes() {
        let r = run_fsa(10, Boundary::Open).unwrap();
        assert_eq!(r.betas.len(), 10);
        assert!(r.betas.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn comparison_matches_by_order() {
        let r = run_fsa(6, Boundary::Periodic).unwrap();
        let exact: Vec<ExactState> = (0..r.energies.len())
            .rev()
            .map(|j| ExactState {
                energy: r.energies[j],
                vector: r.embed(j).into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            })
            .collect();
        let cmp = compare_to_exact(&r, &exact).unwrap();
        assert!(cmp.mean_relative_difference < 1e-12);
        for p in &cmp.pairs {
            for (a, b) in p.exact_profile.iter().zip(&p.fsa_profile) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(compare_to_exact(&r, &exact[1..]).is_err());
        let csv = String::from_utf8(cmp.pairs[0].write_profile(Vec::new()).unwrap()).unwrap();
        assert!(csv.starts_with("n,exact_prob,fsa_prob\n"));
        assert_eq!(csv.lines().count(), 8);
    }
}
