//! The PXP Hamiltonian, its split into distance-raising and -lowering parts,
//! and the staggered field, either applied matrix-free or assembled as CSR.
//!
//! Each term flips one site whose neighbours are both empty. Under open
//! boundaries the edge sites have a single neighbour; the missing projector
//! acts as the identity.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{z2_mask, Boundary, ConstrainedBasis};
use crate::error::{Error, Result};
use crate::linalg::Scalar;
use crate::symmetry::{Block, BlockLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `H = sum_i P X P`.
    Pxp,
    /// `H+`: the part of `H` that increases the distance to |Z2>.
    Raising,
    /// `H-`: the part of `H` that decreases the distance to |Z2>.
    Lowering,
    /// `amplitude * sum_i (-1)^i Z_i`.
    Staggered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    /// Only used by [`OperatorKind::Staggered`].
    pub amplitude: f64,
}

impl OperatorSpec {
    pub fn pxp() -> Self {
        Self { kind: OperatorKind::Pxp, amplitude: 1.0 }
    }

    pub fn raising() -> Self {
        Self { kind: OperatorKind::Raising, amplitude: 1.0 }
    }

    pub fn lowering() -> Self {
        Self { kind: OperatorKind::Lowering, amplitude: 1.0 }
    }

    pub fn staggered(amplitude: f64) -> Self {
        Self { kind: OperatorKind::Staggered, amplitude }
    }

    fn validate(&self, basis: &ConstrainedBasis) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("operator amplitude must be finite"));
        }
        if matches!(self.kind, OperatorKind::Raising | OperatorKind::Lowering)
            && basis.boundary() == Boundary::Periodic
            && basis.length() % 2 == 1
        {
            return Err(Error::invalid(format!(
                "the Z2 sublattice split needs even L under PBC (got L = {})",
                basis.length()
            )));
        }
        Ok(())
    }
}

/// `sum_i (-1)^i z_i` with `z_i = +1` on excited sites and `-1` otherwise.
#[inline]
pub fn staggered_value(bits: u32, length: usize) -> i32 {
    let even = z2_mask(length);
    let odd = !even & crate::basis::site_mask(length);
    let up_even = (bits & even).count_ones() as i32;
    let up_odd = (bits & odd).count_ones() as i32;
    let n_even = even.count_ones() as i32;
    let n_odd = odd.count_ones() as i32;
    (2 * up_even - n_even) - (2 * up_odd - n_odd)
}

/// Sites of `bits` whose flip is kept by the operator, as a bit mask.
#[inline]
fn site_filter(kind: OperatorKind, bits: u32, z2: u32, all: u32) -> u32 {
    match kind {
        OperatorKind::Pxp => all,
        // Output state `bits` was reached by moving away from |Z2> at site j.
        OperatorKind::Raising => (bits ^ z2) & all,
        OperatorKind::Lowering => !(bits ^ z2) & all,
        OperatorKind::Staggered => 0,
    }
}

/// Matrix-free `y = O x` on the full basis.
pub fn apply<T: Scalar>(spec: &OperatorSpec, basis: &ConstrainedBasis, x: &[T]) -> Result<Vec<T>> {
    let mut y = vec![T::zero(); basis.len()];
    apply_into(spec, basis, x, &mut y)?;
    Ok(y)
}

pub fn apply_into<T: Scalar>(spec: &OperatorSpec, basis: &ConstrainedBasis, x: &[T], y: &mut [T]) -> Result<()> {
    spec.validate(basis)?;
    if x.len() != basis.len() || y.len() != basis.len() {
        return Err(Error::invalid(format!(
            "vector lengths ({}, {}) do not match basis dimension {}",
            x.len(),
            y.len(),
            basis.len()
        )));
    }
    let length = basis.length();
    if spec.kind == OperatorKind::Staggered {
        for (i, &s) in basis.states().iter().enumerate() {
            y[i] = x[i].scale(spec.amplitude * staggered_value(s, length) as f64);
        }
        return Ok(());
    }
    let z2 = z2_mask(length);
    let all = crate::basis::site_mask(length);
    let neighbours = basis.neighbour_masks();
    for (i, &s) in basis.states().iter().enumerate() {
        let mut sites = site_filter(spec.kind, s, z2, all);
        let mut acc = T::zero();
        while sites != 0 {
            let j = sites.trailing_zeros() as usize;
            sites &= sites - 1;
            if s & neighbours[j] == 0 {
                let k = basis.index_of(s ^ (1 << j)).expect("valid flip stays in basis");
                acc += x[k];
            }
        }
        y[i] = acc;
    }
    Ok(())
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Build from unsorted triplets; duplicates are summed and exact zeros
    /// (after summation, relative to `drop_below`) removed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(u32, u32, T)>, drop_below: f64) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let keep: Vec<bool> = vals.iter().map(|v| v.norm_sqr().sqrt() > drop_below).collect();
        let mut k = 0;
        let (mut out_c, mut out_v) = (Vec::with_capacity(cols.len()), Vec::with_capacity(vals.len()));
        for i in 0..cols.len() {
            if keep[i] {
                row_ptr[rows[i] as usize + 1] += 1;
                out_c.push(cols[i]);
                out_v.push(vals[i]);
                k += 1;
            }
        }
        debug_assert_eq!(k, out_c.len());
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { dim, row_ptr, cols: out_c, vals: out_v }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().zip(&self.vals[span]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.row(r).find(|&(cc, _)| cc == c).map(|(_, v)| v).unwrap_or_default()
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    /// Column-major dense copy.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim;
        let mut a = vec![T::zero(); n * n];
        for r in 0..n {
            for (c, v) in self.row(r) {
                a[c * n + r] = v;
            }
        }
        a
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let triplets = (0..self.dim)
            .flat_map(|r| self.row(r).map(move |(c, v)| (c as u32, r as u32, v.conj())))
            .collect();
        Self::from_triplets(self.dim, triplets, 0.0)
    }

    /// Largest |entry| of `A - A^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.adjoint();
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                worst = worst.max((v - adj.get(r, c)).norm_sqr().sqrt());
            }
            for (c, v) in adj.row(r) {
                worst = worst.max((v - self.get(r, c)).norm_sqr().sqrt());
            }
        }
        worst
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        (0..self.dim).flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v))).collect()
    }

    /// Upper bound on the spectral norm (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm_sqr().sqrt()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl SparseMatrix<f64> {
    pub fn to_complex(&self) -> SparseMatrix<Complex64> {
        SparseMatrix {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

/// Sparse matrix in either real or complex arithmetic.
#[derive(Clone, Debug)]
pub enum OperatorMatrix {
    Real(SparseMatrix<f64>),
    Complex(SparseMatrix<Complex64>),
}

/// An assembled operator together with the block it acts on.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pub label: BlockLabel,
    pub kind: OperatorKind,
    pub matrix: OperatorMatrix,
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        match &self.matrix {
            OperatorMatrix::Real(m) => m.dim(),
            OperatorMatrix::Complex(m) => m.dim(),
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.matrix {
            OperatorMatrix::Real(m) => m.nnz(),
            OperatorMatrix::Complex(m) => m.nnz(),
        }
    }

    pub fn as_real(&self) -> Option<&SparseMatrix<f64>> {
        match &self.matrix {
            OperatorMatrix::Real(m) => Some(m),
            OperatorMatrix::Complex(_) => None,
        }
    }

    pub fn to_complex(&self) -> SparseMatrix<Complex64> {
        match &self.matrix {
            OperatorMatrix::Real(m) => m.to_complex(),
            OperatorMatrix::Complex(m) => m.clone(),
        }
    }

    /// Coordinate export: `row col value` (real) or `row col re im`.
    pub fn write_coordinates<W: Write>(&self, mut out: W) -> Result<()> {
        match &self.matrix {
            OperatorMatrix::Real(m) => {
                for (r, c, v) in m.triplets() {
                    writeln!(out, "{r} {c} {}", crate::io::fmt_f64(v))?;
                }
            }
            OperatorMatrix::Complex(m) => {
                for (r, c, v) in m.triplets() {
                    writeln!(out, "{r} {c} {} {}", crate::io::fmt_f64(v.re), crate::io::fmt_f64(v.im))?;
                }
            }
        }
        Ok(())
    }
}

/// Explicit matrix of `O` on the full basis.
pub fn assemble_full(spec: &OperatorSpec, basis: &ConstrainedBasis) -> Result<SparseMatrix<f64>> {
    spec.validate(basis)?;
    let length = basis.length();
    let mut triplets = Vec::new();
    if spec.kind == OperatorKind::Staggered {
        for (i, &s) in basis.states().iter().enumerate() {
            let v = spec.amplitude * staggered_value(s, length) as f64;
            triplets.push((i as u32, i as u32, v));
        }
        return Ok(SparseMatrix::from_triplets(basis.len(), triplets, 0.0));
    }
    let z2 = z2_mask(length);
    let all = crate::basis::site_mask(length);
    let neighbours = basis.neighbour_masks();
    for (i, &s) in basis.states().iter().enumerate() {
        let mut sites = site_filter(spec.kind, s, z2, all);
        while sites != 0 {
            let j = sites.trailing_zeros() as usize;
            sites &= sites - 1;
            if s & neighbours[j] == 0 {
                let k = basis.index_of(s ^ (1 << j)).expect("valid flip stays in basis");
                triplets.push((i as u32, k as u32, 1.0));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(basis.len(), triplets, 0.0))
}

/// Assemble an operator on a block. Symmetry sectors only support `H`,
/// since `H+-` and the staggered field break single-site translation.
pub fn assemble(spec: &OperatorSpec, block: &Block) -> Result<SparseOperator> {
    let label = block.label();
    match block {
        Block::Full(basis) => Ok(SparseOperator {
            label,
            kind: spec.kind,
            matrix: OperatorMatrix::Real(assemble_full(spec, basis)?),
        }),
        Block::Sector(sector) => {
            if spec.kind != OperatorKind::Pxp {
                return Err(Error::invalid(format!(
                    "{:?} does not commute with translations; assemble it on the full basis",
                    spec.kind
                )));
            }
            let length = sector.length();
            let neighbours = sector.basis().neighbour_masks();
            let mut triplets: Vec<(u32, u32, Complex64)> = Vec::new();
            for (a, &r) in sector.representatives().iter().enumerate() {
                let n_a = sector.orbit_sizes()[a] as f64;
                for j in 0..length {
                    if r & neighbours[j] != 0 {
                        continue;
                    }
                    let t = r ^ (1 << j);
                    if let Some((b, chi)) = sector.locate(t) {
                        let n_b = sector.orbit_sizes()[b] as f64;
                        triplets.push((b as u32, a as u32, chi * (n_a / n_b).sqrt()));
                    }
                }
            }
            let dim = sector.len();
            let matrix = if sector.is_real() {
                let real = triplets.into_iter().map(|(r, c, v)| (r, c, v.re)).collect();
                OperatorMatrix::Real(SparseMatrix::from_triplets(dim, real, 1e-13))
            } else {
                OperatorMatrix::Complex(SparseMatrix::from_triplets(dim, triplets, 1e-13))
            };
            Ok(SparseOperator { label, kind: spec.kind, matrix })
        }
    }
}

/// `(H+, H-)` on the full basis.
pub fn decompose_pm(basis: &ConstrainedBasis) -> Result<(SparseMatrix<f64>, SparseMatrix<f64>)> {
    Ok((assemble_full(&OperatorSpec::raising(), basis)?, assemble_full(&OperatorSpec::lowering(), basis)?))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::basis::{build_graph, product_state, Pattern};
    use crate::symmetry::{apply_particle_hole, reflect, Parity};

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    /// Dense H built from the local-term definition on the unconstrained
    /// 2^L space and restricted to the constrained states.
    fn brute_force_h(basis: &ConstrainedBasis) -> Vec<Vec<f64>> {
        let length = basis.length();
        let n = basis.len();
        let mut h = vec![vec![0.0; n]; n];
        for (a, &s) in basis.states().iter().enumerate() {
            for i in 0..length {
                let left = match (i, basis.boundary()) {
                    (0, Boundary::Open) => true,
                    (0, Boundary::Periodic) => (s >> (length - 1)) & 1 == 0,
                    _ => (s >> (i - 1)) & 1 == 0,
                };
                let right = match (i + 1 == length, basis.boundary()) {
                    (true, Boundary::Open) => true,
                    (true, Boundary::Periodic) => s & 1 == 0,
                    _ => (s >> (i + 1)) & 1 == 0,
                };
                if left && right {
                    let b = basis.index_of(s ^ (1 << i)).unwrap();
                    h[b][a] += 1.0;
                }
            }
        }
        h
    }

    #[test]
    fn h_on_z2_l4() {
        let basis = ConstrainedBasis::enumerate(4, Boundary::Periodic).unwrap();
        let z2 = basis.index_of(0b0101).unwrap();
        let y = apply(&OperatorSpec::pxp(), &basis, &unit(basis.len(), z2)).unwrap();
        let mut expected = vec![0.0; basis.len()];
        expected[basis.index_of(0b0100).unwrap()] = 1.0;
        expected[basis.index_of(0b0001).unwrap()] = 1.0;
        assert_eq!(y, expected);
    }

    #[test]
    fn h_on_vacuum_l4() {
        let basis = ConstrainedBasis::enumerate(4, Boundary::Periodic).unwrap();
        let y = apply(&OperatorSpec::pxp(), &basis, &unit(basis.len(), 0)).unwrap();
        for bits in [1, 2, 4, 8] {
            assert_eq!(y[basis.index_of(bits).unwrap()], 1.0);
        }
        assert_eq!(y.iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn raising_on_z2_l8() {
        let basis = ConstrainedBasis::enumerate(8, Boundary::Periodic).unwrap();
        let z2 = basis.index_of_config(product_state(Pattern::Z2, 8, Boundary::Periodic).unwrap()).unwrap();
        let y = apply(&OperatorSpec::raising(), &basis, &unit(basis.len(), z2)).unwrap();
        let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 2.0).abs() < 1e-15);
        for (i, &v) in y.iter().enumerate() {
            if v != 0.0 {
                assert_eq!(basis.hamming()[i], 1);
            }
        }
    }

    #[test]
    fn endpoints_annihilated() {
        for length in [4, 6, 8, 10] {
            let basis = ConstrainedBasis::enumerate(length, Boundary::Periodic).unwrap();
            let z2 = basis.index_of_config(product_state(Pattern::Z2, length, Boundary::Periodic).unwrap()).unwrap();
            let z2p =
                basis.index_of_config(product_state(Pattern::Z2Prime, length, Boundary::Periodic).unwrap()).unwrap();
            let down = apply(&OperatorSpec::lowering(), &basis, &unit(basis.len(), z2)).unwrap();
            assert!(down.iter().all(|&v| v == 0.0));
            let up = apply(&OperatorSpec::raising(), &basis, &unit(basis.len(), z2p)).unwrap();
            assert!(up.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn odd_pbc_split_rejected() {
        let basis = ConstrainedBasis::enumerate(7, Boundary::Periodic).unwrap();
        assert!(matches!(decompose_pm(&basis), Err(Error::InvalidArgument(_))));
        let open = ConstrainedBasis::enumerate(7, Boundary::Open).unwrap();
        assert!(decompose_pm(&open).is_ok());
    }

    #[test]
    fn assembled_matches_brute_force_and_graph() {
        for length in 3..=12 {
            for boundary in [Boundary::Periodic, Boundary::Open] {
                let basis = ConstrainedBasis::enumerate(length, boundary).unwrap();
                let h = assemble_full(&OperatorSpec::pxp(), &basis).unwrap();
                let oracle = brute_force_h(&basis);
                for (r, row) in oracle.iter().enumerate() {
                    for (c, &v) in row.iter().enumerate() {
                        assert_eq!(h.get(r, c), v, "L={length} {boundary} ({r},{c})");
                    }
                }
                assert_eq!(h.hermiticity_defect(), 0.0);
                let graph = build_graph(&basis);
                assert_eq!(h.nnz(), 2 * graph.edges().len());
                assert!(h.triplets().iter().all(|&(_, _, v)| v == 1.0));
            }
        }
    }

    #[test]
    fn pm_split_properties() {
        for length in [4, 6, 8, 10, 12, 14] {
            let basis = ConstrainedBasis::enumerate(length, Boundary::Periodic).unwrap();
            let h = assemble_full(&OperatorSpec::pxp(), &basis).unwrap();
            let (hp, hm) = decompose_pm(&basis).unwrap();
            assert_eq!(hp.adjoint(), hm);
            for (r, c, _) in hp.triplets() {
                assert_eq!(basis.hamming()[r], basis.hamming()[c] + 1);
            }
            let mut sum = hp.triplets();
            sum.extend(hm.triplets());
            let sum = SparseMatrix::from_triplets(basis.len(), sum.into_iter().map(|(r, c, v)| (r as u32, c as u32, v)).collect(), 0.0);
            assert_eq!(sum, h);
        }
    }

    #[test]
    fn matrix_free_agrees_with_assembly() {
        let basis = ConstrainedBasis::enumerate(12, Boundary::Open).unwrap();
        let x: Vec<f64> = (0..basis.len()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        for spec in [OperatorSpec::pxp(), OperatorSpec::raising(), OperatorSpec::lowering(), OperatorSpec::staggered(0.3)] {
            let m = assemble_full(&spec, &basis).unwrap();
            assert_eq!(apply(&spec, &basis, &x).unwrap(), m.matvec(&x));
        }
    }

    #[test]
    fn particle_hole_anticommutes() {
        for length in [5, 8, 12] {
            for boundary in [Boundary::Periodic, Boundary::Open] {
                let basis = ConstrainedBasis::enumerate(length, boundary).unwrap();
                let h = assemble_full(&OperatorSpec::pxp(), &basis).unwrap();
                for i in 0..basis.len() {
                    let v = unit(basis.len(), i);
                    let a = h.matvec(&apply_particle_hole(&basis, &v).unwrap());
                    let b = apply_particle_hole(&basis, &h.matvec(&v)).unwrap();
                    assert!(a.iter().zip(&b).all(|(x, y)| x + y == 0.0));
                }
            }
        }
    }

    #[test]
    fn staggered_field_symmetries() {
        for length in [4, 6, 8, 10, 12] {
            let basis = ConstrainedBasis::enumerate(length, Boundary::Open).unwrap();
            let d = assemble_full(&OperatorSpec::staggered(1.0), &basis).unwrap();
            for (i, &s) in basis.states().iter().enumerate() {
                let j = basis.index_of(reflect(s, length)).unwrap();
                // Inversion flips the sign of the field for even L.
                assert_eq!(d.get(i, i), -d.get(j, j));
            }
            // Diagonal, so it commutes with the diagonal particle-hole operator.
            assert!(d.triplets().iter().all(|&(r, c, _)| r == c));
        }
        assert_eq!(staggered_value(0b10101, 5), 5);
        assert_eq!(staggered_value(0, 4), 0);
    }

    #[test]
    fn sector_l4_spectrum_symmetric() {
        let basis = Arc::new(ConstrainedBasis::enumerate(4, Boundary::Periodic).unwrap());
        let block = Block::sector(basis, 0, Some(Parity::Even)).unwrap();
        let op = assemble(&OperatorSpec::pxp(), &block).unwrap();
        let m = op.as_real().unwrap();
        assert_eq!(m.hermiticity_defect(), 0.0);
        let mut a = m.to_dense();
        let w = crate::linalg::symmetric_eigh(&mut a, 3, false).unwrap();
        assert!((w[0] + w[2]).abs() < 1e-12 && w[1].abs() < 1e-12 && w[2] > 0.0);
    }

    #[test]
    fn sector_rejects_symmetry_breaking_operators() {
        let basis = Arc::new(ConstrainedBasis::enumerate(8, Boundary::Periodic).unwrap());
        let block = Block::sector(basis, 0, None).unwrap();
        assert!(assemble(&OperatorSpec::raising(), &block).is_err());
        assert!(assemble(&OperatorSpec::staggered(0.3), &block).is_err());
    }
}
