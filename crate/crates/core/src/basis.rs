//! The constrained (blockade) Hilbert space of the chain.
//!
//! Product states are packed into a `u32`: bit `i` set means site `i` is
//! excited. No two neighbouring sites may be excited; with periodic
//! boundaries sites `0` and `L-1` are neighbours too. States are kept in
//! ascending integer order so indices are deterministic.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_LENGTH: usize = 2;
pub const MAX_LENGTH: usize = 32;

/// Bits of the state used to bucket the lookup table.
const PREFIX_BITS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    #[serde(rename = "pbc")]
    Periodic,
    #[serde(rename = "obc")]
    Open,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("pbc"),
            Boundary::Open => f.write_str("obc"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pbc" | "periodic" => Ok(Boundary::Periodic),
            "obc" | "open" => Ok(Boundary::Open),
            other => Err(Error::invalid(format!("unknown boundary condition '{other}'"))),
        }
    }
}

/// Fibonacci numbers with `F(1) = F(2) = 1` (and `F(0) = 0`).
pub fn fibonacci(n: usize) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..n {
        let next = a + b;
        a = b;
        b = next;
    }
    a
}

/// Closed-form dimension of the constrained space.
pub fn expected_dimension(length: usize, boundary: Boundary) -> u64 {
    match boundary {
        Boundary::Periodic => fibonacci(length - 1) + fibonacci(length + 1),
        Boundary::Open => fibonacci(length + 2),
    }
}

fn check_length(length: usize) -> Result<()> {
    if !(MIN_LENGTH..=MAX_LENGTH).contains(&length) {
        return Err(Error::invalid(format!(
            "chain length {length} outside supported range [{MIN_LENGTH}, {MAX_LENGTH}]"
        )));
    }
    Ok(())
}

/// Mask with the lowest `length` bits set.
#[inline]
pub fn site_mask(length: usize) -> u32 {
    if length >= 32 {
        u32::MAX
    } else {
        (1u32 << length) - 1
    }
}

/// Excitations on the even sites `0, 2, 4, ...`: the |Z2> pattern.
#[inline]
pub fn z2_mask(length: usize) -> u32 {
    0x5555_5555 & site_mask(length)
}

/// Does `bits` satisfy the blockade constraint on a chain of `length` sites?
#[inline]
pub fn is_valid(bits: u32, length: usize, boundary: Boundary) -> bool {
    if bits & !site_mask(length) != 0 || bits & (bits >> 1) != 0 {
        return false;
    }
    match boundary {
        Boundary::Open => true,
        Boundary::Periodic => !(bits & 1 == 1 && (bits >> (length - 1)) & 1 == 1),
    }
}

/// Bit mask of the neighbours of `site`.
pub fn neighbour_mask(site: usize, length: usize, boundary: Boundary) -> u32 {
    let mut mask = 0u32;
    if site > 0 {
        mask |= 1 << (site - 1);
    } else if boundary == Boundary::Periodic {
        mask |= 1 << (length - 1);
    }
    if site + 1 < length {
        mask |= 1 << (site + 1);
    } else if boundary == Boundary::Periodic {
        mask |= 1;
    }
    mask & !(1 << site)
}

/// A single constrained product state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration {
    bits: u32,
    length: u8,
}

impl SpinConfiguration {
    pub fn new(bits: u32, length: usize, boundary: Boundary) -> Result<Self> {
        check_length(length)?;
        if !is_valid(bits, length, boundary) {
            return Err(Error::invalid(format!(
                "configuration {bits:#b} violates the blockade constraint for L={length} ({boundary})"
            )));
        }
        Ok(Self { bits, length: length as u8 })
    }

    pub(crate) fn from_raw(bits: u32, length: usize) -> Self {
        Self { bits, length: length as u8 }
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn length(self) -> usize {
        self.length as usize
    }

    pub fn is_excited(self, site: usize) -> bool {
        (self.bits >> site) & 1 == 1
    }

    pub fn excitations(self) -> u32 {
        self.bits.count_ones()
    }

    /// Parse a string over `{o, x}` written most-significant site first.
    pub fn parse(text: &str, boundary: Boundary) -> Result<Self> {
        let length = text.chars().count();
        check_length(length)?;
        let mut bits = 0u32;
        for c in text.chars() {
            bits <<= 1;
            match c {
                'x' | 'X' | '1' => bits |= 1,
                'o' | 'O' | '0' => {}
                other => return Err(Error::invalid(format!("unexpected site symbol '{other}'"))),
            }
        }
        Self::new(bits, length, boundary)
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for site in (0..self.length()).rev() {
            f.write_str(if self.is_excited(site) { "x" } else { "o" })?;
        }
        Ok(())
    }
}

/// Named product states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    /// Excitations on even sites.
    Z2,
    /// Excitations on odd sites.
    Z2Prime,
    /// Excitations every `k` sites starting at site 0.
    Period(usize),
    /// All sites in the ground state.
    Vacuum,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Z2 => f.write_str("z2"),
            Pattern::Z2Prime => f.write_str("z2p"),
            Pattern::Period(k) => write!(f, "z{k}"),
            Pattern::Vacuum => f.write_str("zero"),
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "z2" => Ok(Pattern::Z2),
            "z2p" | "z2'" | "z2prime" => Ok(Pattern::Z2Prime),
            "0" | "zero" | "vacuum" => Ok(Pattern::Vacuum),
            other => {
                let k = other
                    .strip_prefix('z')
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| Error::invalid(format!("unknown product state '{other}'")))?;
                Ok(Pattern::Period(k))
            }
        }
    }
}

pub fn product_state(pattern: Pattern, length: usize, boundary: Boundary) -> Result<SpinConfiguration> {
    check_length(length)?;
    let period = |k: usize, offset: usize| -> Result<u32> {
        if k < 2 || k > length {
            return Err(Error::invalid(format!("density-wave period {k} invalid for L={length}")));
        }
        if boundary == Boundary::Periodic && length % k != 0 {
            return Err(Error::invalid(format!(
                "period-{k} density wave is incompatible with L={length} under PBC"
            )));
        }
        Ok((offset..length).step_by(k).fold(0u32, |acc, site| acc | (1 << site)))
    };
    let bits = match pattern {
        Pattern::Z2 => period(2, 0)?,
        Pattern::Z2Prime => period(2, 1)?,
        Pattern::Period(k) => period(k, 0)?,
        Pattern::Vacuum => 0,
    };
    SpinConfiguration::new(bits, length, boundary)
}

/// Number of sites where `state` differs from |Z2>.
pub fn hamming_to_z2(state: SpinConfiguration) -> u32 {
    (state.bits ^ z2_mask(state.length())).count_ones()
}

/// Bucketed lookup from packed state to basis ordinal.
#[derive(Clone, Debug)]
struct PrefixIndex {
    shift: u32,
    offsets: Vec<u32>,
}

impl PrefixIndex {
    fn build(states: &[u32], length: usize) -> Self {
        let shift = length.saturating_sub(PREFIX_BITS) as u32;
        let buckets = 1usize << length.min(PREFIX_BITS);
        let mut offsets = vec![0u32; buckets + 1];
        for &s in states {
            offsets[(s >> shift) as usize + 1] += 1;
        }
        for b in 0..buckets {
            offsets[b + 1] += offsets[b];
        }
        Self { shift, offsets }
    }

    #[inline]
    fn find(&self, states: &[u32], bits: u32) -> Option<usize> {
        let bucket = (bits >> self.shift) as usize;
        if bucket + 1 >= self.offsets.len() {
            return None;
        }
        let (lo, hi) = (self.offsets[bucket] as usize, self.offsets[bucket + 1] as usize);
        states[lo..hi].binary_search(&bits).ok().map(|i| lo + i)
    }
}

/// Complete ordered list of constrained product states.
#[derive(Clone, Debug)]
pub struct ConstrainedBasis {
    length: usize,
    boundary: Boundary,
    states: Vec<u32>,
    hamming: Vec<u8>,
    neighbours: Vec<u32>,
    lookup: PrefixIndex,
}

impl ConstrainedBasis {
    pub fn enumerate(length: usize, boundary: Boundary) -> Result<Self> {
        check_length(length)?;
        let capacity = expected_dimension(length, boundary) as usize;
        let mut states = Vec::with_capacity(capacity);
        // Depth-first from the most significant site, 0 before 1, yields
        // ascending order.
        fn descend(site: usize, prefix: u32, prev_excited: bool, out: &mut Vec<u32>) {
            if site == 0 {
                out.push(prefix);
                if !prev_excited {
                    out.push(prefix | 1);
                }
                return;
            }
            descend(site - 1, prefix, false, out);
            if !prev_excited {
                descend(site - 1, prefix | (1 << site), true, out);
            }
        }
        descend(length - 1, 0, false, &mut states);
        if boundary == Boundary::Periodic {
            let top = 1u32 << (length - 1);
            states.retain(|&s| !(s & 1 == 1 && s & top != 0));
        }

        let z2 = z2_mask(length);
        let hamming = states.iter().map(|&s| (s ^ z2).count_ones() as u8).collect();
        let neighbours = (0..length).map(|i| neighbour_mask(i, length, boundary)).collect();
        let lookup = PrefixIndex::build(&states, length);
        Ok(Self { length, boundary, states, hamming, neighbours, lookup })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, index: usize) -> SpinConfiguration {
        SpinConfiguration::from_raw(self.states[index], self.length)
    }

    /// Hamming distance of each basis state to |Z2>.
    pub fn hamming(&self) -> &[u8] {
        &self.hamming
    }

    #[inline]
    pub fn index_of(&self, bits: u32) -> Option<usize> {
        self.lookup.find(&self.states, bits)
    }

    pub fn index_of_config(&self, state: SpinConfiguration) -> Option<usize> {
        if state.length() != self.length {
            return None;
        }
        self.index_of(state.bits())
    }

    /// Can `site` be flipped in `bits` without violating the constraint?
    #[inline]
    pub fn flippable(&self, bits: u32, site: usize) -> bool {
        bits & self.neighbours[site] == 0
    }

    pub fn neighbour_masks(&self) -> &[u32] {
        &self.neighbours
    }

    /// One configuration per line over `{o, x}`, most significant site first.
    pub fn write_states<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.len() {
            writeln!(out, "{}", self.state(i))?;
        }
        Ok(())
    }
}

/// Graph on product states with an edge wherever the Hamiltonian connects
/// two of them.
#[derive(Clone, Debug)]
pub struct HilbertGraph {
    edges: Vec<(u32, u32)>,
    layers: Vec<Vec<u32>>,
    node_layer: Vec<u8>,
    excitations: Vec<u8>,
}

pub fn build_graph(basis: &ConstrainedBasis) -> HilbertGraph {
    let mut edges = Vec::new();
    for (i, &s) in basis.states().iter().enumerate() {
        for site in 0..basis.length() {
            if !basis.flippable(s, site) {
                continue;
            }
            let j = basis
                .index_of(s ^ (1 << site))
                .expect("single flips of valid states stay in the basis");
            if i < j {
                edges.push((i as u32, j as u32));
            }
        }
    }
    edges.sort_unstable();

    let mut layers = vec![Vec::new(); basis.length() + 1];
    for (i, &d) in basis.hamming().iter().enumerate() {
        layers[d as usize].push(i as u32);
    }
    HilbertGraph {
        edges,
        layers,
        node_layer: basis.hamming().to_vec(),
        excitations: basis.states().iter().map(|s| s.count_ones() as u8).collect(),
    }
}

impl HilbertGraph {
    pub fn node_count(&self) -> usize {
        self.node_layer.len()
    }

    /// Unordered edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Node indices grouped by Hamming distance to |Z2>.
    pub fn layers(&self) -> &[Vec<u32>] {
        &self.layers
    }

    pub fn layer_of(&self, node: usize) -> usize {
        self.node_layer[node] as usize
    }

    pub fn excitations(&self, node: usize) -> u32 {
        self.excitations[node] as u32
    }

    pub fn degree(&self, node: usize) -> usize {
        let node = node as u32;
        self.edges.iter().filter(|&&(a, b)| a == node || b == node).count()
    }

    /// Number of nodes with even and odd excitation number.
    pub fn sublattice_sizes(&self) -> (usize, usize) {
        let even = self.excitations.iter().filter(|&&n| n % 2 == 0).count();
        (even, self.node_count() - even)
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for &(a, b) in &self.edges {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }

    pub fn write_dot<W: Write>(&self, basis: &ConstrainedBasis, mut out: W) -> Result<()> {
        writeln!(out, "graph hilbert {{")?;
        for (d, layer) in self.layers.iter().enumerate() {
            if layer.is_empty() {
                continue;
            }
            writeln!(out, "  subgraph layer_{d} {{")?;
            writeln!(out, "    rank = same;")?;
            for &n in layer {
                writeln!(out, "    n{n} [label=\"{}\", layer={d}];", basis.state(n as usize))?;
            }
            writeln!(out, "  }}")?;
        }
        for &(a, b) in &self.edges {
            writeln!(out, "  n{a} -- n{b};")?;
        }
        writeln!(out, "}}")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(length: usize, boundary: Boundary) -> Vec<u32> {
        (0..(1u64 << length))
            .map(|s| s as u32)
            .filter(|&s| {
                let adjacent = (0..length - 1).any(|i| (s >> i) & 3 == 3);
                let wrap = boundary == Boundary::Periodic && s & 1 == 1 && (s >> (length - 1)) & 1 == 1;
                !adjacent && !wrap
            })
            .collect()
    }

    #[test]
    fn fibonacci_convention() {
        let first: Vec<u64> = (1..=10).map(fibonacci).collect();
        assert_eq!(first, vec![1, 1, 2, 3, 5, 8, 13, 21, 34, 55]);
    }

    #[test]
    fn small_bases_match_brute_force() {
        for length in 2..=14 {
            for boundary in [Boundary::Periodic, Boundary::Open] {
                let basis = ConstrainedBasis::enumerate(length, boundary).unwrap();
                assert_eq!(basis.states(), brute_force(length, boundary).as_slice());
                assert_eq!(basis.len() as u64, expected_dimension(length, boundary));
            }
        }
    }

    #[test]
    fn l4_pbc_states() {
        let basis = ConstrainedBasis::enumerate(4, Boundary::Periodic).unwrap();
        let names: Vec<String> = (0..basis.len()).map(|i| basis.state(i).to_string()).collect();
        assert_eq!(names, ["oooo", "ooox", "ooxo", "oxoo", "oxox", "xooo", "xoxo"]);
    }

    #[test]
    fn l6_dimensions() {
        assert_eq!(ConstrainedBasis::enumerate(6, Boundary::Periodic).unwrap().len(), 18);
        assert_eq!(ConstrainedBasis::enumerate(6, Boundary::Open).unwrap().len(), 21);
    }

    #[test]
    fn rejects_out_of_range_lengths() {
        assert!(matches!(ConstrainedBasis::enumerate(1, Boundary::Open), Err(Error::InvalidArgument(_))));
        assert!(matches!(ConstrainedBasis::enumerate(33, Boundary::Periodic), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn product_states() {
        let pbc = Boundary::Periodic;
        assert_eq!(product_state(Pattern::Z2, 6, pbc).unwrap().to_string(), "oxoxox");
        assert_eq!(product_state(Pattern::Z2Prime, 6, pbc).unwrap().to_string(), "xoxoxo");
        assert_eq!(product_state(Pattern::Vacuum, 6, pbc).unwrap().to_string(), "oooooo");
        assert_eq!(product_state(Pattern::Period(3), 6, pbc).unwrap().to_string(), "ooxoox");
        // Site 0 excited, printed last.
        assert!(product_state(Pattern::Z2, 6, pbc).unwrap().is_excited(0));
        assert!(matches!(product_state(Pattern::Period(4), 6, pbc), Err(Error::InvalidArgument(_))));
        assert!(matches!(product_state(Pattern::Z2, 7, pbc), Err(Error::InvalidArgument(_))));
        assert!(product_state(Pattern::Z2, 7, Boundary::Open).is_ok());
    }

    #[test]
    fn hamming_examples() {
        let pbc = Boundary::Periodic;
        assert_eq!(hamming_to_z2(product_state(Pattern::Z2, 6, pbc).unwrap()), 0);
        assert_eq!(hamming_to_z2(product_state(Pattern::Z2Prime, 6, pbc).unwrap()), 6);
        assert_eq!(hamming_to_z2(product_state(Pattern::Vacuum, 6, pbc).unwrap()), 3);
    }

    #[test]
    fn parse_round_trip() {
        let s = SpinConfiguration::parse("xooxoo", Boundary::Periodic).unwrap();
        assert_eq!(s.to_string(), "xooxoo");
        assert!(SpinConfiguration::parse("xxoo", Boundary::Open).is_err());
        assert!(SpinConfiguration::parse("xoox", Boundary::Periodic).is_err());
    }

    #[test]
    fn graph_degrees() {
        let basis = ConstrainedBasis::enumerate(6, Boundary::Periodic).unwrap();
        let graph = build_graph(&basis);
        assert_eq!(graph.node_count(), 18);
        let z2 = basis.index_of_config(product_state(Pattern::Z2, 6, Boundary::Periodic).unwrap()).unwrap();
        assert_eq!(graph.degree(z2), 3);

        let basis = ConstrainedBasis::enumerate(4, Boundary::Periodic).unwrap();
        let graph = build_graph(&basis);
        assert_eq!(graph.degree(basis.index_of(0).unwrap()), 4);
    }

    #[test]
    fn graph_layers_and_parity() {
        for length in 2..=16 {
            for boundary in [Boundary::Periodic, Boundary::Open] {
                let basis = ConstrainedBasis::enumerate(length, boundary).unwrap();
                let graph = build_graph(&basis);
                for &(a, b) in graph.edges() {
                    let (a, b) = (a as usize, b as usize);
                    assert_eq!(graph.excitations(a).abs_diff(graph.excitations(b)), 1);
                    assert_eq!(graph.layer_of(a).abs_diff(graph.layer_of(b)), 1);
                }
                let total: usize = graph.layers().iter().map(Vec::len).sum();
                assert_eq!(total, basis.len());
            }
        }
    }

    #[test]
    fn edge_and_dot_export() {
        let basis = ConstrainedBasis::enumerate(4, Boundary::Periodic).unwrap();
        let graph = build_graph(&basis);
        let mut edges = Vec::new();
        graph.write_edge_list(&mut edges).unwrap();
        let text = String::from_utf8(edges).unwrap();
        assert_eq!(text.lines().count(), graph.edges().len());
        assert!(text.lines().all(|l| {
            let v: Vec<u32> = l.split(' ').map(|x| x.parse().unwrap()).collect();
            v[0] < v[1]
        }));
        let mut dot = Vec::new();
        graph.write_dot(&basis, &mut dot).unwrap();
        let dot = String::from_utf8(dot).unwrap();
        assert!(dot.starts_with("graph hilbert {"));
        assert!(dot.contains("layer=0"));
    }
}
