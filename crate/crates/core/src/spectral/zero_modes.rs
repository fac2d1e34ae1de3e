//! Exact zero modes of `H` (optionally plus a staggered field).
//!
//! Both boundary conditions are symmetric under the reflection
//! `R: i -> L-1-i`. `H` commutes with `R` and flips excitation parity, so its
//! kernel splits over the four blocks (R = +-1) x (parity). The staggered
//! field anticommutes with `R` for even `L`, so `H + hD` anticommutes with
//! `Q = R P` (P the particle-hole operator) and its kernel splits over the
//! two maps `Q = +-1 -> Q = -+1`. The same anticommutation gives the lower
//! bound `nullity >= |tr Q|`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::basis::{fibonacci, Boundary, ConstrainedBasis};
use crate::error::{Error, Result};
use crate::exact::{kernel, rank_mod_p, IntegerMatrix, MODULUS};
use crate::hamiltonian::{assemble_full, staggered_value, OperatorMatrix, OperatorSpec, SparseMatrix, SparseOperator};
use crate::symmetry::{particle_hole_sign, reflect, Block};

/// Relative threshold below which an eigenvalue counts as a zero mode.
pub const NUMERICAL_ZERO: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroModeOptions {
    /// Compute the kernel dimension in exact arithmetic.
    pub exact: bool,
    /// Also return a primitive integer basis of the kernel (implies `exact`).
    pub integer_basis: bool,
    /// Amplitude of the staggered field added to `H`.
    pub stagger: f64,
    /// Skip the dense numerical count.
    pub skip_numerical: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroModeReport {
    pub boundary: Boundary,
    #[serde(rename = "L")]
    pub length: usize,
    pub dimension: usize,
    pub stagger: f64,
    /// The stagger as the exact fraction `numerator / denominator` used in
    /// the integer matrix `denominator * H + numerator * D`.
    pub stagger_fraction: (i64, i64),
    /// Eigenvalues with `|E| < 1e-10 max|E|`.
    pub kernel_dimension: Option<usize>,
    pub kernel_dimension_exact: Option<usize>,
    /// How the exact dimension was established.
    pub exact_method: Option<ExactMethod>,
    /// Open-chain closed form; `None` under PBC.
    pub formula_prediction: Option<u64>,
    pub sublattice_bound: usize,
    pub reflection_bound: usize,
    #[serde(serialize_with = "serialize_big_vectors")]
    pub integer_kernel_basis: Option<Vec<Vec<BigInt>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMethod {
    /// Fraction-free elimination over the integers.
    Elimination,
    /// Rank modulo a prime (an upper bound on the nullity) meeting the
    /// `|tr Q|` lower bound.
    ModularWithBound,
}

fn serialize_big_vectors<S: Serializer>(v: &Option<Vec<Vec<BigInt>>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(vectors) => {
            let as_numbers: Vec<Vec<serde_json::Number>> = vectors
                .iter()
                .map(|vec| {
                    vec.iter()
                        .map(|x| x.to_string().parse::<serde_json::Number>().expect("decimal integer"))
                        .collect()
                })
                .collect();
            as_numbers.serialize(s)
        }
    }
}

/// Open-chain zero-mode count: `F(L/2+1)` for even and `F((L-1)/2)` for odd `L`.
pub fn formula_prediction(length: usize, boundary: Boundary) -> Option<u64> {
    match boundary {
        Boundary::Periodic => None,
        Boundary::Open if length % 2 == 0 => Some(fibonacci(length / 2 + 1)),
        Boundary::Open => Some(fibonacci((length - 1) / 2)),
    }
}

/// Best rational approximation with denominator at most 10^6.
pub fn rationalize(x: f64) -> Result<(i64, i64)> {
    if !x.is_finite() {
        return Err(Error::invalid("stagger amplitude must be finite"));
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > 1_000_000 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a as f64;
        if (h1 as f64 / k1 as f64 - x).abs() <= 1e-12 * x.abs().max(1.0) || frac.abs() < 1e-15 {
            return Ok((h1, k1));
        }
        y = 1.0 / frac;
    }
    Err(Error::invalid(format!(
        "stagger amplitude {x} has no exact fraction with denominator <= 10^6"
    )))
}

/// Counts of product states by excitation parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ImbalanceBound {
    pub even: usize,
    pub odd: usize,
    /// `|even - odd|`, a lower bound on the nullity of the bipartite `H`.
    pub bound: usize,
}

pub fn sublattice_imbalance_bound(basis: &ConstrainedBasis) -> ImbalanceBound {
    let even = basis.states().iter().filter(|s| s.count_ones() % 2 == 0).count();
    let odd = basis.len() - even;
    ImbalanceBound { even, odd, bound: even.abs_diff(odd) }
}

/// Reflection-invariant product states and the bound `|tr(R P)|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct InversionBound {
    pub invariant_states: usize,
    pub invariant_even_parity: usize,
    /// `|sum over invariant states of P(s)|`.
    pub bound: usize,
    /// `|N_even - N_odd|` inside the R = +1 and R = -1 blocks.
    pub per_sector: [usize; 2],
}

pub fn inversion_imbalance_bound(basis: &ConstrainedBasis) -> InversionBound {
    let length = basis.length();
    let mut pal_even = 0i64;
    let mut pal_odd = 0i64;
    let mut trace = 0i64;
    for &s in basis.states() {
        if reflect(s, length) == s {
            if s.count_ones() % 2 == 0 {
                pal_even += 1;
            } else {
                pal_odd += 1;
            }
            trace += particle_hole_sign(s, length) as i64;
        }
    }
    let imb = sublattice_imbalance_bound(basis);
    let delta = imb.even as i64 - imb.odd as i64;
    let pal_delta = pal_even - pal_odd;
    // dim(R = +-1, parity p) = (N_p +- pal_p) / 2.
    let plus = (delta + pal_delta) / 2;
    let minus = (delta - pal_delta) / 2;
    InversionBound {
        invariant_states: (pal_even + pal_odd) as usize,
        invariant_even_parity: pal_even as usize,
        bound: trace.unsigned_abs() as usize,
        per_sector: [plus.unsigned_abs() as usize, minus.unsigned_abs() as usize],
    }
}

/// Integer eigenbasis of an involution `g e_s = lambda(s) e_{R s}`
/// restricted to eigenvalue `eta` and, optionally, one excitation parity.
struct OrbitBasis {
    /// `(rep, partner, coefficient of partner)`; `partner == rep` for fixed states.
    orbits: Vec<(usize, usize, i64)>,
}

impl OrbitBasis {
    fn new(basis: &ConstrainedBasis, lambda: &[i64], partner: &[usize], eta: i64, parity: Option<u32>) -> Self {
        let mut orbits = Vec::new();
        for (i, &s) in basis.states().iter().enumerate() {
            if parity.is_some_and(|p| s.count_ones() % 2 != p) {
                continue;
            }
            let j = partner[i];
            if i < j {
                orbits.push((i, j, eta * lambda[i]));
            } else if i == j && lambda[i] == eta {
                orbits.push((i, i, 0));
            }
        }
        Self { orbits }
    }

    fn len(&self) -> usize {
        self.orbits.len()
    }

    fn embed(&self, coords: &[BigInt], dim: usize) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); dim];
        for (&(i, j, c), x) in self.orbits.iter().zip(coords) {
            v[i] += x;
            if i != j {
                v[j] += x * c;
            }
        }
        v
    }
}

/// Matrix of `M` from `domain` to `codomain` in orbit coordinates. The
/// coordinate of an image vector on an orbit is its entry at the orbit
/// representative.
fn restricted(m: &[Vec<(u32, i64)>], domain: &OrbitBasis, codomain: &OrbitBasis, dim: usize) -> IntegerMatrix {
    let mut row_of = vec![u32::MAX; dim];
    for (k, &(i, _, _)) in codomain.orbits.iter().enumerate() {
        row_of[i] = k as u32;
    }
    let mut rows: Vec<Vec<(u32, i64)>> = vec![Vec::new(); codomain.len()];
    for (col, &(i, j, c)) in domain.orbits.iter().enumerate() {
        // M is symmetric, so row i of M is column i.
        for &(t, v) in &m[i] {
            if row_of[t as usize] != u32::MAX {
                rows[row_of[t as usize] as usize].push((col as u32, v));
            }
        }
        if i != j {
            for &(t, v) in &m[j] {
                if row_of[t as usize] != u32::MAX {
                    rows[row_of[t as usize] as usize].push((col as u32, c * v));
                }
            }
        }
    }
    let mut out = IntegerMatrix::new(domain.len());
    for r in rows {
        out.push_row(r);
    }
    out
}

fn primitive(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() {
        for x in &mut v {
            *x /= &g;
        }
    }
    // Fix the sign by the first nonzero entry.
    if v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        for x in &mut v {
            *x = -&*x;
        }
    }
    v
}

struct ExactResult {
    nullity: usize,
    method: ExactMethod,
    vectors: Option<Vec<Vec<BigInt>>>,
}

fn exact_kernel(
    basis: &ConstrainedBasis,
    m: &[Vec<(u32, i64)>],
    staggered: bool,
    with_basis: bool,
) -> ExactResult {
    let length = basis.length();
    let dim = basis.len();
    let partner: Vec<usize> = basis
        .states()
        .iter()
        .map(|&s| basis.index_of(reflect(s, length)).expect("reflection preserves the constraint"))
        .collect();
    let ones = vec![1i64; dim];
    let ph: Vec<i64> = basis.states().iter().map(|&s| particle_hole_sign(s, length) as i64).collect();

    // (lambda, domain eta, codomain eta, parity pairs)
    type Plan<'a> = (&'a [i64], Vec<(i64, i64, Option<u32>, Option<u32>)>);
    let (lambda, maps): Plan = if !staggered {
        let mut maps = Vec::new();
        for eta in [1, -1] {
            for p in [0, 1] {
                maps.push((eta, eta, Some(p), Some(1 - p)));
            }
        }
        (&ones, maps)
    } else if length % 2 == 0 {
        (&ph, vec![(1, -1, None, None), (-1, 1, None, None)])
    } else {
        (&ones, vec![(1, 1, None, None), (-1, -1, None, None)])
    };

    let blocks: Vec<(OrbitBasis, IntegerMatrix)> = maps
        .iter()
        .map(|&(eta_in, eta_out, p_in, p_out)| {
            let domain = OrbitBasis::new(basis, lambda, &partner, eta_in, p_in);
            let codomain = OrbitBasis::new(basis, lambda, &partner, eta_out, p_out);
            let matrix = restricted(m, &domain, &codomain, dim);
            (domain, matrix)
        })
        .collect();

    if !with_basis && (!staggered || length % 2 == 0) {
        let upper: usize = blocks.iter().map(|(d, mat)| d.len() - rank_mod_p(mat, MODULUS)).sum();
        // Without the field, each R block is bipartite between the parities.
        let lower = if staggered {
            inversion_imbalance_bound(basis).bound
        } else {
            inversion_imbalance_bound(basis).per_sector.iter().sum()
        };
        if upper == lower {
            return ExactResult { nullity: upper, method: ExactMethod::ModularWithBound, vectors: None };
        }
    }

    let mut nullity = 0;
    let mut vectors = with_basis.then(Vec::new);
    for (domain, matrix) in &blocks {
        let k = kernel(matrix, with_basis);
        nullity += k.nullity;
        if let (Some(out), Some(kb)) = (vectors.as_mut(), k.basis) {
            out.extend(kb.iter().map(|coords| primitive(domain.embed(coords, dim))));
        }
    }
    ExactResult { nullity, method: ExactMethod::Elimination, vectors }
}

/// Integer rows of `den * H + num * D`.
fn integer_rows(basis: &ConstrainedBasis, h: &SparseMatrix<f64>, num: i64, den: i64) -> Vec<Vec<(u32, i64)>> {
    let length = basis.length();
    (0..basis.len())
        .map(|i| {
            let mut row: Vec<(u32, i64)> = h.row(i).map(|(c, v)| (c as u32, den * v as i64)).collect();
            let d = num * staggered_value(basis.states()[i], length) as i64;
            if d != 0 {
                row.push((i as u32, d));
                row.sort_unstable_by_key(|e| e.0);
            }
            row
        })
        .collect()
}

pub fn zero_modes(length: usize, boundary: Boundary, options: ZeroModeOptions) -> Result<ZeroModeReport> {
    let basis = Arc::new(ConstrainedBasis::enumerate(length, boundary)?);
    let (num, den) = rationalize(options.stagger)?;
    let h = assemble_full(&OperatorSpec::pxp(), &basis)?;
    let staggered = num != 0;

    let kernel_dimension = if options.skip_numerical {
        None
    } else {
        let mut m = h.clone();
        if staggered {
            let d = assemble_full(&OperatorSpec::staggered(options.stagger), &basis)?;
            let mut t = m.triplets();
            t.extend(d.triplets());
            m = SparseMatrix::from_triplets(
                basis.len(),
                t.into_iter().map(|(r, c, v)| (r as u32, c as u32, v)).collect(),
                0.0,
            );
        }
        let block = Block::full(basis.clone());
        let op = SparseOperator { label: block.label(), kind: crate::hamiltonian::OperatorKind::Pxp, matrix: OperatorMatrix::Real(m) };
        let spectrum = super::diagonalize_operator(&block, &op, false)?;
        Some(spectrum.zero_mode_count(NUMERICAL_ZERO))
    };

    let want_exact = options.exact || options.integer_basis;
    let exact = want_exact.then(|| {
        let rows = integer_rows(&basis, &h, num, den);
        exact_kernel(&basis, &rows, staggered, options.integer_basis)
    });

    if let (Some(n), Some(e)) = (kernel_dimension, exact.as_ref()) {
        if n != e.nullity {
            return Err(Error::consistency(format!(
                "numerical zero-mode count {n} disagrees with exact kernel dimension {}",
                e.nullity
            )));
        }
    }
    if let Some(vectors) = exact.as_ref().and_then(|e| e.vectors.as_ref()) {
        let rows = integer_rows(&basis, &h, num, den);
        let mut check = IntegerMatrix::new(basis.len());
        for r in rows {
            check.push_row(r);
        }
        for v in vectors {
            if check.mul_vec(v).iter().any(|x| !x.is_zero()) {
                return Err(Error::consistency("integer kernel vector fails exact verification"));
            }
        }
    }

    Ok(ZeroModeReport {
        boundary,
        length,
        dimension: basis.len(),
        stagger: options.stagger,
        stagger_fraction: (num, den),
        kernel_dimension,
        kernel_dimension_exact: exact.as_ref().map(|e| e.nullity),
        exact_method: exact.as_ref().map(|e| e.method),
        formula_prediction: formula_prediction(length, boundary),
        sublattice_bound: sublattice_imbalance_bound(&basis).bound,
        reflection_bound: inversion_imbalance_bound(&basis).bound,
        integer_kernel_basis: exact.and_then(|e| e.vectors),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(length: usize, boundary: Boundary, stagger: f64, integer_basis: bool) -> ZeroModeReport {
        zero_modes(length, boundary, ZeroModeOptions { exact: true, integer_basis, stagger, skip_numerical: false })
            .unwrap()
    }

    #[test]
    fn rationalize_examples() {
        assert_eq!(rationalize(0.3).unwrap(), (3, 10));
        assert_eq!(rationalize(0.0).unwrap(), (0, 1));
        assert_eq!(rationalize(-1.25).unwrap(), (-5, 4));
        assert_eq!(rationalize(2.0).unwrap(), (2, 1));
        assert!(rationalize(1e-9).is_err());
        assert!(rationalize(f64::NAN).is_err());
    }

    #[test]
    fn open_chain_examples() {
        let r = exact(6, Boundary::Open, 0.0, true);
        assert_eq!(r.kernel_dimension, Some(3));
        assert_eq!(r.kernel_dimension_exact, Some(3));
        assert_eq!(r.formula_prediction, Some(3));
        assert_eq!(r.integer_kernel_basis.as_ref().unwrap().len(), 3);

        let r = exact(7, Boundary::Open, 0.0, true);
        assert_eq!(r.kernel_dimension_exact, Some(2));
        assert_eq!(r.formula_prediction, Some(2));
    }

    #[test]
    fn stagger_keeps_count() {
        for length in [4, 6, 8, 10] {
            let plain = exact(length, Boundary::Open, 0.0, false);
            let field = exact(length, Boundary::Open, 0.3, false);
            assert_eq!(plain.kernel_dimension_exact, field.kernel_dimension_exact, "L={length}");
            assert_eq!(field.kernel_dimension, field.kernel_dimension_exact);
        }
        let r = exact(6, Boundary::Open, 0.7, true);
        assert_eq!(r.kernel_dimension_exact, Some(3));
        assert_eq!(r.exact_method, Some(ExactMethod::Elimination));
    }

    #[test]
    fn formula_small_lengths() {
        for length in 4..=12 {
            let r = exact(length, Boundary::Open, 0.0, false);
            assert_eq!(r.kernel_dimension_exact.map(|n| n as u64), r.formula_prediction, "L={length}");
        }
    }

    #[test]
    fn imbalance_examples() {
        let obc6 = ConstrainedBasis::enumerate(6, Boundary::Open).unwrap();
        assert_eq!(sublattice_imbalance_bound(&obc6).bound, 1);
        let inv = inversion_imbalance_bound(&obc6);
        assert_eq!(inv.invariant_states, 3);
        assert_eq!(inv.invariant_even_parity, 3);
        assert!(inv.per_sector.iter().sum::<usize>() <= 3);

        let pbc6 = ConstrainedBasis::enumerate(6, Boundary::Periodic).unwrap();
        let inv = inversion_imbalance_bound(&pbc6);
        assert_eq!(inv.invariant_states, 2);
        assert_eq!(inv.invariant_even_parity, 2);
    }

    #[test]
    fn periodic_reports_no_formula() {
        let r = exact(8, Boundary::Periodic, 0.0, false);
        assert_eq!(r.formula_prediction, None);
        assert_eq!(r.kernel_dimension, r.kernel_dimension_exact);
    }

    #[test]
    fn report_json_has_integer_arrays() {
        let r = exact(4, Boundary::Open, 0.0, true);
        let text = crate::io::to_json_string(&r).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let basis = v["integer_kernel_basis"].as_array().unwrap();
        assert_eq!(basis.len(), 2);
        assert!(basis[0].as_array().unwrap().iter().all(|x| x.is_i64()));
    }
}
