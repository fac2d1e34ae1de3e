//! Translation/inversion sectors of the periodic chain and the particle-hole
//! operator.
//!
//! A sector state built on the representative `r` is
//! `|r~> = N_r^{-1/2} sum_s chi(g_s) |s>`, where the sum runs over the orbit of
//! `r`, `g_s` is any group element with `g_s r = s`, and `chi(T^m) =
//! exp(-2 pi i k m / L)`, `chi(T^m R) = I chi(T^m)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{site_mask, Boundary, ConstrainedBasis, SpinConfiguration};
use crate::error::{Error, Result};
use crate::linalg::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "+1")]
    Even,
    #[serde(rename = "-1")]
    Odd,
}

impl Parity {
    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "+1",
            Parity::Odd => "-1",
        })
    }
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" | "even" => Ok(Parity::Even),
            "-1" | "-" | "odd" => Ok(Parity::Odd),
            other => Err(Error::invalid(format!("inversion parity must be +1 or -1, got '{other}'"))),
        }
    }
}

/// Cyclic shift moving site `i` to site `i + m (mod L)`.
#[inline]
pub fn rotate(bits: u32, m: usize, length: usize) -> u32 {
    if m == 0 {
        return bits;
    }
    ((bits << m) | (bits >> (length - m))) & site_mask(length)
}

/// Reflection `i -> L - 1 - i`.
#[inline]
pub fn reflect(bits: u32, length: usize) -> u32 {
    bits.reverse_bits() >> (32 - length)
}

/// Translation (and optionally inversion) sector of a periodic basis.
#[derive(Clone, Debug)]
pub struct SymmetrySector {
    basis: Arc<ConstrainedBasis>,
    momentum: usize,
    inversion: Option<Parity>,
    representatives: Vec<u32>,
    orbit_sizes: Vec<u32>,
    norms: Vec<f64>,
}

/// Canonical form of a state: the representative and the group element
/// `(m, reflected)` taking the state to it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Canonical {
    pub representative: u32,
    pub shift: usize,
    pub reflected: bool,
}

pub fn build_sector(basis: Arc<ConstrainedBasis>, momentum: usize, inversion: Option<Parity>) -> Result<SymmetrySector> {
    let length = basis.length();
    if basis.boundary() != Boundary::Periodic {
        return Err(Error::invalid("symmetry sectors require periodic boundary conditions"));
    }
    if momentum >= length {
        return Err(Error::invalid(format!("momentum index {momentum} outside [0, {length})")));
    }
    if inversion.is_some() && (2 * momentum) % length != 0 {
        return Err(Error::invalid(format!(
            "inversion parity is only defined at k = 0 or k = L/2 (got k = {momentum}, L = {length})"
        )));
    }
    let mut sector = SymmetrySector {
        basis,
        momentum,
        inversion,
        representatives: Vec::new(),
        orbit_sizes: Vec::new(),
        norms: Vec::new(),
    };
    let group_order = sector.group_order();
    for &s in sector.basis.states() {
        if !sector.is_representative(s) {
            continue;
        }
        let (stabilizer, character_sum) = sector.stabilizer(s);
        if character_sum.norm() < 0.5 {
            continue;
        }
        let orbit = (group_order / stabilizer) as u32;
        sector.representatives.push(s);
        sector.orbit_sizes.push(orbit);
        sector.norms.push((orbit as f64).sqrt());
    }
    Ok(sector)
}

impl SymmetrySector {
    pub fn basis(&self) -> &Arc<ConstrainedBasis> {
        &self.basis
    }

    pub fn length(&self) -> usize {
        self.basis.length()
    }

    pub fn momentum(&self) -> usize {
        self.momentum
    }

    pub fn inversion(&self) -> Option<Parity> {
        self.inversion
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn representatives(&self) -> &[u32] {
        &self.representatives
    }

    pub fn orbit_sizes(&self) -> &[u32] {
        &self.orbit_sizes
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn representative(&self, index: usize) -> SpinConfiguration {
        SpinConfiguration::from_raw(self.representatives[index], self.length())
    }

    /// Characters are real at k = 0 and k = L/2.
    pub fn is_real(&self) -> bool {
        (2 * self.momentum) % self.length() == 0
    }

    fn group_order(&self) -> usize {
        self.length() * if self.inversion.is_some() { 2 } else { 1 }
    }

    pub fn character(&self, shift: usize, reflected: bool) -> Complex64 {
        let length = self.length();
        let phase = (self.momentum * shift) % length;
        let base = if phase == 0 {
            Complex64::new(1.0, 0.0)
        } else if 2 * phase == length {
            Complex64::new(-1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase as f64 / length as f64)
        };
        match (reflected, self.inversion) {
            (true, Some(p)) => base * p.sign() as f64,
            _ => base,
        }
    }

    fn is_representative(&self, s: u32) -> bool {
        let length = self.length();
        for m in 1..length {
            if rotate(s, m, length) < s {
                return false;
            }
        }
        if self.inversion.is_some() {
            let r = reflect(s, length);
            for m in 0..length {
                if rotate(r, m, length) < s {
                    return false;
                }
            }
        }
        true
    }

    fn stabilizer(&self, s: u32) -> (usize, Complex64) {
        let length = self.length();
        let mut count = 0;
        let mut sum = Complex64::new(0.0, 0.0);
        for &reflected in self.reflections() {
            let base = if reflected { reflect(s, length) } else { s };
            for m in 0..length {
                if rotate(base, m, length) == s {
                    count += 1;
                    sum += self.character(m, reflected);
                }
            }
        }
        (count, sum)
    }

    fn reflections(&self) -> &'static [bool] {
        if self.inversion.is_some() {
            &[false, true]
        } else {
            &[false]
        }
    }

    /// Representative of `bits` and the element mapping `bits` onto it.
    pub fn canonical(&self, bits: u32) -> Canonical {
        let length = self.length();
        let mut best = Canonical { representative: bits, shift: 0, reflected: false };
        for &reflected in self.reflections() {
            let base = if reflected { reflect(bits, length) } else { bits };
            for m in 0..length {
                let t = rotate(base, m, length);
                if t < best.representative {
                    best = Canonical { representative: t, shift: m, reflected };
                }
            }
        }
        best
    }

    pub fn index_of_representative(&self, bits: u32) -> Option<usize> {
        self.representatives.binary_search(&bits).ok()
    }

    /// Sector index of the orbit containing `bits` and the character of the
    /// element mapping `bits` to its representative; `None` if the orbit is
    /// annihilated in this sector.
    pub fn locate(&self, bits: u32) -> Option<(usize, Complex64)> {
        let c = self.canonical(bits);
        self.index_of_representative(c.representative)
            .map(|i| (i, self.character(c.shift, c.reflected)))
    }

    fn require_scalar<T: Scalar>(&self) -> Result<()> {
        if !T::IS_COMPLEX && !self.is_real() {
            return Err(Error::invalid(format!(
                "sector k = {} of L = {} needs complex amplitudes",
                self.momentum,
                self.length()
            )));
        }
        Ok(())
    }

    /// Full-basis vector for the given sector amplitudes.
    pub fn embed<T: Scalar>(&self, amplitudes: &[T]) -> Result<Vec<T>> {
        self.require_scalar::<T>()?;
        if amplitudes.len() != self.len() {
            return Err(Error::invalid(format!(
                "sector vector has length {}, sector dimension is {}",
                amplitudes.len(),
                self.len()
            )));
        }
        let length = self.length();
        let group = self.group_order() as f64;
        let mut full = vec![T::zero(); self.basis.len()];
        for (r, &amp) in amplitudes.iter().enumerate() {
            if amp == T::zero() {
                continue;
            }
            let rep = self.representatives[r];
            let orbit = self.orbit_sizes[r] as f64;
            // Each orbit element is hit |Stab| = |G| / N times with equal
            // character, hence the 1 / (|Stab| sqrt N) weight.
            let weight = orbit / group / orbit.sqrt();
            for &reflected in self.reflections() {
                let base = if reflected { reflect(rep, length) } else { rep };
                for m in 0..length {
                    let s = rotate(base, m, length);
                    let i = self.basis.index_of(s).expect("orbit elements are basis states");
                    // g = T^m R^refl maps rep to s.
                    let chi = self.character(m, reflected);
                    full[i] += amp * T::from_complex(chi).scale(weight);
                }
            }
        }
        Ok(full)
    }

    /// Sector amplitudes `<r~|psi>` of a full-basis vector.
    pub fn project<T: Scalar>(&self, full: &[T]) -> Result<Vec<T>> {
        self.require_scalar::<T>()?;
        if full.len() != self.basis.len() {
            return Err(Error::invalid(format!(
                "vector has length {}, basis dimension is {}",
                full.len(),
                self.basis.len()
            )));
        }
        let length = self.length();
        let group = self.group_order() as f64;
        let mut out = vec![T::zero(); self.len()];
        for (r, &rep) in self.representatives.iter().enumerate() {
            let orbit = self.orbit_sizes[r] as f64;
            let weight = orbit / group / orbit.sqrt();
            let mut acc = T::zero();
            for &reflected in self.reflections() {
                let base = if reflected { reflect(rep, length) } else { rep };
                for m in 0..length {
                    let s = rotate(base, m, length);
                    let i = self.basis.index_of(s).expect("orbit elements are basis states");
                    let chi = self.character(m, reflected).conj();
                    acc += T::from_complex(chi) * full[i];
                }
            }
            out[r] = acc.scale(weight);
        }
        Ok(out)
    }

    pub fn summary(&self) -> SectorSummary {
        let mut histogram = BTreeMap::new();
        for &n in &self.orbit_sizes {
            *histogram.entry(n).or_insert(0usize) += 1;
        }
        SectorSummary {
            length: self.length(),
            momentum: self.momentum,
            inversion: self.inversion,
            dimension: self.len(),
            orbit_size_histogram: histogram,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SectorSummary {
    #[serde(rename = "L")]
    pub length: usize,
    #[serde(rename = "k")]
    pub momentum: usize,
    #[serde(rename = "I")]
    pub inversion: Option<Parity>,
    pub dimension: usize,
    pub orbit_size_histogram: BTreeMap<u32, usize>,
}

/// Sector amplitudes tied to the sector they live in.
#[derive(Clone, Debug)]
pub struct SectorVector {
    pub sector: Arc<SymmetrySector>,
    pub amplitudes: Vec<Complex64>,
}

impl SectorVector {
    pub fn new(sector: Arc<SymmetrySector>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != sector.len() {
            return Err(Error::invalid("sector vector length does not match sector dimension"));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("sector vector has non-finite entries"));
        }
        Ok(Self { sector, amplitudes })
    }

    pub fn embed(&self) -> Vec<Complex64> {
        self.sector.embed(&self.amplitudes).expect("length checked on construction")
    }
}

/// Sign of `P = prod_i Z_i` on a product state: `(-1)^(number of ground sites)`.
#[inline]
pub fn particle_hole_sign(bits: u32, length: usize) -> f64 {
    if (length as u32 - bits.count_ones()) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn apply_particle_hole<T: Scalar>(basis: &ConstrainedBasis, vector: &[T]) -> Result<Vec<T>> {
    if vector.len() != basis.len() {
        return Err(Error::invalid(format!(
            "vector has length {}, basis dimension is {}",
            vector.len(),
            basis.len()
        )));
    }
    Ok(basis
        .states()
        .iter()
        .zip(vector)
        .map(|(&s, &v)| v.scale(particle_hole_sign(s, basis.length())))
        .collect())
}

/// Either the full constrained basis or one symmetry sector of it.
#[derive(Clone, Debug)]
pub enum Block {
    Full(Arc<ConstrainedBasis>),
    Sector(Arc<SymmetrySector>),
}

/// Serializable identification of a [`Block`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLabel {
    #[serde(rename = "L")]
    pub length: usize,
    pub boundary: Boundary,
    #[serde(rename = "k")]
    pub momentum: Option<usize>,
    #[serde(rename = "I")]
    pub inversion: Option<Parity>,
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L={} {}", self.length, self.boundary)?;
        match (self.momentum, self.inversion) {
            (None, _) => f.write_str(" full"),
            (Some(k), None) => write!(f, " k={k}"),
            (Some(k), Some(p)) => write!(f, " k={k} I={p}"),
        }
    }
}

impl Block {
    pub fn full(basis: Arc<ConstrainedBasis>) -> Self {
        Block::Full(basis)
    }

    pub fn sector(basis: Arc<ConstrainedBasis>, momentum: usize, inversion: Option<Parity>) -> Result<Self> {
        Ok(Block::Sector(Arc::new(build_sector(basis, momentum, inversion)?)))
    }

    pub fn basis(&self) -> &Arc<ConstrainedBasis> {
        match self {
            Block::Full(b) => b,
            Block::Sector(s) => s.basis(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Block::Full(b) => b.len(),
            Block::Sector(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_real(&self) -> bool {
        match self {
            Block::Full(_) => true,
            Block::Sector(s) => s.is_real(),
        }
    }

    pub fn label(&self) -> BlockLabel {
        let basis = self.basis();
        let (momentum, inversion) = match self {
            Block::Full(_) => (None, None),
            Block::Sector(s) => (Some(s.momentum()), s.inversion()),
        };
        BlockLabel { length: basis.length(), boundary: basis.boundary(), momentum, inversion }
    }

    /// Packed product state (or orbit representative) labelling row `index`.
    pub fn state_bits(&self, index: usize) -> u32 {
        match self {
            Block::Full(b) => b.states()[index],
            Block::Sector(s) => s.representatives()[index],
        }
    }

    pub fn embed<T: Scalar>(&self, amplitudes: &[T]) -> Result<Vec<T>> {
        match self {
            Block::Full(b) => {
                if amplitudes.len() != b.len() {
                    return Err(Error::invalid("vector length does not match basis dimension"));
                }
                Ok(amplitudes.to_vec())
            }
            Block::Sector(s) => s.embed(amplitudes),
        }
    }

    pub fn project<T: Scalar>(&self, full: &[T]) -> Result<Vec<T>> {
        match self {
            Block::Full(b) => {
                if full.len() != b.len() {
                    return Err(Error::invalid("vector length does not match basis dimension"));
                }
                Ok(full.to_vec())
            }
            Block::Sector(s) => s.project(full),
        }
    }

    /// Normalized image of a product state in this block, or an error if the
    /// state has no weight here.
    pub fn reference_state<T: Scalar>(&self, state: SpinConfiguration) -> Result<Vec<T>> {
        let basis = self.basis();
        let index = basis
            .index_of_config(state)
            .ok_or_else(|| Error::invalid(format!("state {state} is not in the basis")))?;
        let mut full = vec![T::zero(); basis.len()];
        full[index] = T::from_real(1.0);
        let mut v = self.project(&full)?;
        let n = crate::linalg::norm(&v);
        if n < 1e-12 {
            return Err(Error::invalid(format!("state {state} has no weight in sector {}", self.label())));
        }
        for x in &mut v {
            *x = x.scale(1.0 / n);
        }
        Ok(v)
    }
}
