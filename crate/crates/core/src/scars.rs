//! The band of special eigenstates with anomalous overlap on |Z2>.
//!
//! Eigenstates of the band alternate between the reflection-even (k = 0)
//! and reflection-odd (k = pi) combinations of |Z2> and |Z2'>, so detection
//! runs over the union of the two sectors that carry |Z2>.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{product_state, Boundary, ConstrainedBasis, Pattern, SpinConfiguration};
use crate::error::{Error, Result};
use crate::fsa::{run_fsa_on, FsaResult};
use crate::io::{Cell, CsvWriter};
use crate::spectral::{diagonalize, SpectrumResult};
use crate::symmetry::{Block, BlockLabel, Parity};

/// Window half-width as a fraction of the local FSA level spacing.
pub const WINDOW_FRACTION: f64 = 0.4;
/// Eigenvalues closer than this (relative to the spectral radius) are
/// treated as degenerate when aligning with the reference state.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;
/// A window winner must beat the runner-up by this factor for the band to
/// count as separated. Calibrated on |Z2> (smallest margin 1.47 at L = 24)
/// against |0> (at most 1.13 for L = 12..24).
pub const SEPARATION_MARGIN: f64 = 1.25;
/// Minimum energy distance between greedy picks, as a fraction of the
/// central FSA spacing.
pub const GREEDY_SPACING_FRACTION: f64 = 0.6;

#[derive(Clone, Debug, Serialize)]
pub struct ScatterPoint {
    /// Index of the spectrum the state belongs to.
    pub block: usize,
    /// Eigenstate index within that spectrum.
    pub index: usize,
    pub energy: f64,
    /// `|<ref|E>|^2` with the reference normalized inside its block.
    pub overlap: f64,
    /// Participation ratio in the block's basis. Inside a degenerate group
    /// this is the value of the state aligned with the reference.
    pub pr2: f64,
}

#[derive(Clone, Debug)]
pub struct Scatter {
    pub labels: Vec<BlockLabel>,
    pub dimensions: Vec<usize>,
    /// Weight of the reference product state in each block.
    pub weights: Vec<f64>,
    pub points: Vec<ScatterPoint>,
}

impl Scatter {
    pub fn overlap_sum(&self, block: usize) -> f64 {
        self.points.iter().filter(|p| p.block == block).map(|p| p.overlap).sum()
    }
}

fn degenerate_groups(energies: &[f64]) -> Vec<(usize, usize)> {
    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=energies.len() {
        if i == energies.len() || energies[i] - energies[i - 1] > DEGENERACY_TOLERANCE * scale {
            groups.push((start, i));
            start = i;
        }
    }
    groups
}

/// Overlaps and PR2 after rotating each degenerate eigenspace so that a
/// single vector (the first of the group) carries all of the reference's
/// weight. Other group members keep zero overlap.
pub fn align_degenerate(spectrum: &SpectrumResult, reference: &[Complex64]) -> Result<Vec<(f64, f64)>> {
    let n = spectrum.dim();
    let amplitudes: Vec<Complex64> = (0..n)
        .map(|j| {
            let v = spectrum.vector(j)?;
            Ok(v.iter().zip(reference).map(|(a, r)| r.conj() * a).sum())
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n);
    for (start, end) in degenerate_groups(&spectrum.eigenvalues) {
        if end - start == 1 {
            out.push((amplitudes[start].norm_sqr(), spectrum.participation_ratio(start)?));
            continue;
        }
        let weight: f64 = amplitudes[start..end].iter().map(|a| a.norm_sqr()).sum();
        let mut aligned = vec![Complex64::new(0.0, 0.0); n];
        if weight > 1e-300 {
            for j in start..end {
                let c = amplitudes[j].conj();
                for (x, v) in aligned.iter_mut().zip(spectrum.vector(j)?) {
                    *x += c * v;
                }
            }
        }
        let norm = aligned.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let pr2 = if norm > 0.0 {
            aligned.iter().map(|x| (x.norm_sqr() / (norm * norm)).powi(2)).sum()
        } else {
            spectrum.participation_ratio(start)?
        };
        out.push((weight, pr2));
        for j in start + 1..end {
            out.push((0.0, spectrum.participation_ratio(j)?));
        }
    }
    Ok(out)
}

/// Energies and overlaps of every eigenstate of `spectra` with `reference`.
///
/// Blocks where the reference has no weight contribute zero overlaps; it is
/// an error if it has no weight in any of them.
pub fn overlap_scatter(spectra: &[SpectrumResult], reference: SpinConfiguration) -> Result<Scatter> {
    let mut scatter = Scatter { labels: Vec::new(), dimensions: Vec::new(), weights: Vec::new(), points: Vec::new() };
    for (b, spectrum) in spectra.iter().enumerate() {
        let block = &spectrum.block;
        let basis = block.basis();
        let index = basis
            .index_of_config(reference)
            .ok_or_else(|| Error::invalid(format!("reference {reference} is not in the basis")))?;
        let mut full = vec![Complex64::new(0.0, 0.0); basis.len()];
        full[index] = Complex64::new(1.0, 0.0);
        let projected = block.project(&full)?;
        let weight = projected.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let aligned = if weight > 1e-24 {
            let r: Vec<Complex64> = projected.iter().map(|x| x / weight.sqrt()).collect();
            align_degenerate(spectrum, &r)?
        } else {
            (0..spectrum.dim()).map(|j| Ok((0.0, spectrum.participation_ratio(j)?))).collect::<Result<_>>()?
        };
        for (j, (overlap, pr2)) in aligned.into_iter().enumerate() {
            scatter.points.push(ScatterPoint { block: b, index: j, energy: spectrum.eigenvalues[j], overlap, pr2 });
        }
        scatter.labels.push(block.label());
        scatter.dimensions.push(block.len());
        scatter.weights.push(weight);
    }
    if scatter.weights.iter().all(|&w| w <= 1e-24) {
        return Err(Error::invalid(format!("reference {reference} has no weight in the given sectors")));
    }
    Ok(scatter)
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowReport {
    pub center: f64,
    pub half_width: f64,
    pub candidates: usize,
    pub winner_overlap: Option<f64>,
    pub runner_up_overlap: Option<f64>,
}

impl WindowReport {
    /// Winner overlap over runner-up overlap (infinite with one candidate).
    pub fn margin(&self) -> f64 {
        match (self.winner_overlap, self.runner_up_overlap) {
            (Some(w), Some(r)) if r > 0.0 => w / r,
            (Some(_), _) => f64::INFINITY,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BandMember {
    pub block: usize,
    pub index: usize,
    pub energy: f64,
    pub overlap: f64,
    pub pr2: f64,
    pub fsa_energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScarBand {
    #[serde(rename = "L")]
    pub length: usize,
    pub omega: f64,
    /// Sorted by energy.
    pub members: Vec<BandMember>,
    pub windows: Vec<WindowReport>,
    /// Smallest winner/runner-up overlap ratio over all windows.
    pub separation: f64,
    /// Mean `|E_fsa - E| / |E|` over members with `E != 0`.
    pub fsa_relative_error: f64,
}

/// Mean adjacent spacing of the middle third of the sorted energies.
pub fn central_spacing(sorted: &[f64]) -> f64 {
    let d: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let m = d.len();
    let mid = &d[m / 3..m - m / 3];
    mid.iter().sum::<f64>() / mid.len().max(1) as f64
}

/// Picks the maximal-overlap eigenstate in a window around each of the
/// `centers` (the FSA energies).
pub fn detect_band(scatter: &Scatter, centers: &[f64], length: usize) -> Result<ScarBand> {
    if centers.len() < 2 {
        return Err(Error::invalid("band detection needs at least two window centers"));
    }
    let mut windows = Vec::with_capacity(centers.len());
    let mut members = Vec::with_capacity(centers.len());
    let mut failures = Vec::new();
    for (i, &c) in centers.iter().enumerate() {
        let spacing = centers
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, &e)| (e - c).abs())
            .fold(f64::INFINITY, f64::min);
        let half_width = WINDOW_FRACTION * spacing;
        let mut candidates: Vec<&ScatterPoint> =
            scatter.points.iter().filter(|p| (p.energy - c).abs() <= half_width).collect();
        candidates.sort_by(|a, b| b.overlap.total_cmp(&a.overlap));
        let report = WindowReport {
            center: c,
            half_width,
            candidates: candidates.len(),
            winner_overlap: candidates.first().map(|p| p.overlap),
            runner_up_overlap: candidates.get(1).map(|p| p.overlap),
        };
        match candidates.first() {
            None => failures.push(format!("window {i} at {c:.4} +- {half_width:.4} is empty")),
            Some(best) => {
                let tie = candidates.get(1).is_some_and(|p| (best.overlap - p.overlap).abs() <= 1e-9 * best.overlap);
                if tie {
                    failures.push(format!(
                        "window {i} at {c:.4} +- {half_width:.4} is ambiguous: two states with overlap {:.6e}",
                        best.overlap
                    ));
                }
                members.push(BandMember {
                    block: best.block,
                    index: best.index,
                    energy: best.energy,
                    overlap: best.overlap,
                    pr2: best.pr2,
                    fsa_energy: c,
                });
            }
        }
        windows.push(report);
    }
    if !failures.is_empty() {
        return Err(Error::Consistency(format!("band detection failed: {}", failures.join("; "))));
    }
    members.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let energies: Vec<f64> = members.iter().map(|m| m.energy).collect();
    let omega = central_spacing(&energies);
    let separation = windows.iter().map(WindowReport::margin).fold(f64::INFINITY, f64::min);
    let rel: Vec<f64> = members
        .iter()
        .filter(|m| m.energy.abs() > 1e-9)
        .map(|m| (m.fsa_energy - m.energy).abs() / m.energy.abs())
        .collect();
    let fsa_relative_error = rel.iter().sum::<f64>() / rel.len().max(1) as f64;
    Ok(ScarBand { length, omega, members, windows, separation, fsa_relative_error })
}

/// The `count` highest-overlap states, skipping any closer than
/// `min_spacing` in energy to one already chosen. Returns `(block, index)`
/// pairs sorted by energy.
pub fn greedy_band(scatter: &Scatter, count: usize, min_spacing: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<&ScatterPoint> = scatter.points.iter().collect();
    order.sort_by(|a, b| b.overlap.total_cmp(&a.overlap));
    let mut chosen: Vec<&ScatterPoint> = Vec::with_capacity(count);
    for p in order {
        if chosen.len() == count {
            break;
        }
        if chosen.iter().all(|q| (q.energy - p.energy).abs() >= min_spacing) {
            chosen.push(p);
        }
    }
    chosen.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    chosen.iter().map(|p| (p.block, p.index)).collect()
}

impl ScarBand {
    pub fn member_keys(&self) -> Vec<(usize, usize)> {
        self.members.iter().map(|m| (m.block, m.index)).collect()
    }

    pub fn json(&self) -> BandJson {
        BandJson {
            length: self.length,
            omega: self.omega,
            separation: self.separation,
            fsa_relative_error: self.fsa_relative_error,
            members: self
                .members
                .iter()
                .map(|m| MemberJson { energy: m.energy, overlap: m.overlap, pr2: m.pr2, fsa_energy: m.fsa_energy })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberJson {
    pub energy: f64,
    pub overlap: f64,
    pub pr2: f64,
    pub fsa_energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BandJson {
    #[serde(rename = "L")]
    pub length: usize,
    pub omega: f64,
    pub separation: f64,
    pub fsa_relative_error: f64,
    pub members: Vec<MemberJson>,
}

/// Scatter CSV with columns `energy,overlap,pr2,is_special`, one row per
/// eigenstate, ordered by block then index.
pub fn write_scatter<W: Write>(scatter: &Scatter, band: Option<&ScarBand>, out: W) -> Result<W> {
    let special = band.map(|b| b.member_keys()).unwrap_or_default();
    let mut csv = CsvWriter::new(out, &["energy", "overlap", "pr2", "is_special"])?;
    for p in &scatter.points {
        csv.row(&[
            Cell::from(p.energy),
            Cell::from(p.overlap),
            Cell::from(p.pr2),
            Cell::from(special.contains(&(p.block, p.index))),
        ])?;
    }
    csv.finish()
}

/// `E` inside the middle two thirds of `[E_min, E_max]` and not a zero mode.
pub fn in_mid_spectrum(energy: f64, min: f64, max: f64) -> bool {
    let sixth = (max - min) / 6.0;
    let scale = min.abs().max(max.abs());
    energy >= min + sixth && energy <= max - sixth && energy.abs() >= 1e-10 * scale
}

#[derive(Clone, Debug, Serialize)]
pub struct Pr2Enhancement {
    #[serde(rename = "L")]
    pub length: usize,
    pub sector: BlockLabel,
    pub sector_dimension: usize,
    pub full_dimension: usize,
    pub band_members_used: usize,
    pub band_mean: f64,
    pub mid_spectrum_count: usize,
    pub mid_spectrum_mean: f64,
    pub ratio: f64,
}

/// Mean PR2 of the band members living in block `block` versus the mean
/// over all mid-spectrum states of that block.
pub fn pr2_enhancement(scatter: &Scatter, band: &ScarBand, block: usize) -> Result<Pr2Enhancement> {
    let points: Vec<&ScatterPoint> = scatter.points.iter().filter(|p| p.block == block).collect();
    let (min, max) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.energy), hi.max(p.energy)));
    let mid: Vec<f64> = points.iter().filter(|p| in_mid_spectrum(p.energy, min, max)).map(|p| p.pr2).collect();
    let members: Vec<f64> = band
        .members
        .iter()
        .filter(|m| m.block == block && in_mid_spectrum(m.energy, min, max))
        .map(|m| m.pr2)
        .collect();
    if mid.is_empty() || members.is_empty() {
        return Err(Error::invalid(format!(
            "no band members ({}) or mid-spectrum states ({}) in block {block}",
            members.len(),
            mid.len()
        )));
    }
    let band_mean = members.iter().sum::<f64>() / members.len() as f64;
    let mid_spectrum_mean = mid.iter().sum::<f64>() / mid.len() as f64;
    Ok(Pr2Enhancement {
        length: band.length,
        sector: scatter.labels[block],
        sector_dimension: scatter.dimensions[block],
        full_dimension: crate::basis::expected_dimension(band.length, scatter.labels[block].boundary) as usize,
        band_members_used: members.len(),
        band_mean,
        mid_spectrum_count: mid.len(),
        mid_spectrum_mean,
        ratio: band_mean / mid_spectrum_mean,
    })
}

/// Everything the band analysis at one even periodic length produces.
#[derive(Clone, Debug)]
pub struct BandAnalysis {
    /// (k = 0, I = +1) then (k = L/2, I = -1).
    pub spectra: Vec<SpectrumResult>,
    pub fsa: FsaResult,
    pub scatter: Scatter,
    pub band: ScarBand,
}

/// The two sectors that carry |Z2> at even periodic `L`.
pub fn z2_sectors(basis: Arc<ConstrainedBasis>) -> Result<Vec<Block>> {
    let length = basis.length();
    Ok(vec![
        Block::sector(basis.clone(), 0, Some(Parity::Even))?,
        Block::sector(basis, length / 2, Some(Parity::Odd))?,
    ])
}

pub fn analyze_band(length: usize) -> Result<BandAnalysis> {
    if length % 2 != 0 || length < 4 {
        return Err(Error::invalid(format!("band analysis needs even L >= 4 (got {length})")));
    }
    let basis = Arc::new(ConstrainedBasis::enumerate(length, Boundary::Periodic)?);
    let spectra = z2_sectors(basis.clone())?
        .iter()
        .map(|b| diagonalize(b, true))
        .collect::<Result<Vec<_>>>()?;
    let fsa = run_fsa_on(basis)?;
    let z2 = product_state(Pattern::Z2, length, Boundary::Periodic)?;
    let scatter = overlap_scatter(&spectra, z2)?;
    let band = detect_band(&scatter, &fsa.energies, length)?;
    Ok(BandAnalysis { spectra, fsa, scatter, band })
}

impl BandAnalysis {
    /// Whether the greedy top-overlap selection finds the same states as
    /// the FSA-window detection.
    pub fn greedy_agrees(&self) -> bool {
        let spacing = GREEDY_SPACING_FRACTION * central_spacing(&self.fsa.energies);
        let mut greedy = greedy_band(&self.scatter, self.band.members.len(), spacing);
        let mut detected = self.band.member_keys();
        greedy.sort_unstable();
        detected.sort_unstable();
        greedy == detected
    }

    /// Band members as full-basis vectors for comparison with the FSA.
    pub fn exact_states(&self) -> Result<Vec<crate::fsa::ExactState>> {
        self.band
            .members
            .iter()
            .map(|m| {
                let s = &self.spectra[m.block];
                Ok(crate::fsa::ExactState { energy: m.energy, vector: s.block.embed(&s.vector(m.index)?)? })
            })
            .collect()
    }
}
