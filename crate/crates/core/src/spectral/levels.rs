//! Level-spacing statistics: polynomial unfolding, Kolmogorov-Smirnov
//! distances to the Poisson, semi-Poisson and Wigner-Dyson laws, and the
//! adjacent-gap ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, symmetric_eigh};

pub const MIN_WINDOW: usize = 100;
pub const DEFAULT_UNFOLD_DEGREE: usize = 9;
/// Sector dimension at which the window offset of 500 levels was chosen;
/// smaller sectors get a proportionally smaller offset.
pub const REFERENCE_DIMENSION: f64 = 77436.0;
pub const REFERENCE_OFFSET: f64 = 500.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    Poisson,
    SemiPoisson,
    WignerDyson,
}

impl Reference {
    pub fn cdf(self, s: f64) -> f64 {
        match self {
            Reference::Poisson => 1.0 - (-s).exp(),
            Reference::SemiPoisson => 1.0 - (1.0 + 2.0 * s) * (-2.0 * s).exp(),
            Reference::WignerDyson => 1.0 - (-std::f64::consts::PI * s * s / 4.0).exp(),
        }
    }

    pub fn density(self, s: f64) -> f64 {
        match self {
            Reference::Poisson => (-s).exp(),
            Reference::SemiPoisson => 4.0 * s * (-2.0 * s).exp(),
            Reference::WignerDyson => std::f64::consts::FRAC_PI_2 * s * (-std::f64::consts::PI * s * s / 4.0).exp(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelStatistics {
    /// Half-open index range `[start, end)` into the sorted spectrum.
    pub window: (usize, usize),
    pub unfold_degree: usize,
    pub spacings: Vec<f64>,
    pub mean_spacing: f64,
    pub histogram: Histogram,
    pub ks_poisson: f64,
    pub ks_semipoisson: f64,
    pub ks_wd: f64,
    pub r_mean: f64,
}

impl LevelStatistics {
    /// Reference law with the smallest KS distance.
    pub fn closest(&self) -> Reference {
        let d = [
            (self.ks_poisson, Reference::Poisson),
            (self.ks_semipoisson, Reference::SemiPoisson),
            (self.ks_wd, Reference::WignerDyson),
        ];
        d.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap().1
    }
}

/// `[D/5, D/2 - 500 D / 77436)`.
pub fn standard_window(dim: usize) -> (usize, usize) {
    let offset = (REFERENCE_OFFSET * dim as f64 / REFERENCE_DIMENSION).round() as usize;
    (dim / 5, (dim / 2).saturating_sub(offset))
}

/// One-sample Kolmogorov-Smirnov distance of `sorted` against `cdf`.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let f = cdf(s);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Mean of `min(d_i, d_{i+1}) / max(d_i, d_{i+1})` over consecutive gaps.
pub fn mean_gap_ratio(levels: &[f64]) -> f64 {
    let gaps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = gaps
        .windows(2)
        .filter(|g| g[0].max(g[1]) > 0.0)
        .map(|g| g[0].min(g[1]) / g[0].max(g[1]))
        .collect();
    if ratios.is_empty() {
        return f64::NAN;
    }
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

fn chebyshev_row(x: f64, degree: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if degree >= 1 {
        out.push(x);
    }
    for k in 2..=degree {
        let next = 2.0 * x * out[k - 1] - out[k - 2];
        out.push(next);
    }
}

/// Fit the staircase `N(E_i) = rank_i` with a polynomial of `degree` and
/// return the unfolded levels.
pub fn unfold(levels: &[f64], ranks: &[f64], degree: usize) -> Result<Vec<f64>> {
    let m = levels.len();
    let k = degree + 1;
    if m <= k {
        return Err(Error::invalid(format!("{m} levels are too few for a degree-{degree} unfolding fit")));
    }
    let lo = levels[0];
    let hi = levels[m - 1];
    let mid = 0.5 * (lo + hi);
    let half = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
    let mut a = vec![0.0; m * k];
    let mut row = Vec::with_capacity(k);
    for (i, &e) in levels.iter().enumerate() {
        chebyshev_row((e - mid) / half, degree, &mut row);
        for (j, &t) in row.iter().enumerate() {
            a[j * m + i] = t;
        }
    }
    let coef = least_squares(&a, m, k, ranks)?;
    Ok(levels
        .iter()
        .map(|&e| {
            chebyshev_row((e - mid) / half, degree, &mut row);
            row.iter().zip(&coef).map(|(t, c)| t * c).sum()
        })
        .collect())
}

fn histogram(spacings: &[f64]) -> Histogram {
    let width = 0.1;
    let bins = 40;
    let edges: Vec<f64> = (0..=bins).map(|b| b as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &s in spacings {
        let b = (s / width) as usize;
        if b < bins {
            counts[b] += 1;
        }
    }
    let n = spacings.len().max(1) as f64;
    Histogram { edges, density: counts.iter().map(|&c| c as f64 / (n * width)).collect() }
}

fn from_spacings(window: (usize, usize), degree: usize, spacings: Vec<f64>, r_mean: f64) -> LevelStatistics {
    let mut sorted = spacings.clone();
    sorted.sort_by(f64::total_cmp);
    let mean_spacing = spacings.iter().sum::<f64>() / spacings.len() as f64;
    LevelStatistics {
        window,
        unfold_degree: degree,
        mean_spacing,
        histogram: histogram(&spacings),
        ks_poisson: ks_distance(&sorted, |s| Reference::Poisson.cdf(s)),
        ks_semipoisson: ks_distance(&sorted, |s| Reference::SemiPoisson.cdf(s)),
        ks_wd: ks_distance(&sorted, |s| Reference::WignerDyson.cdf(s)),
        r_mean,
        spacings,
    }
}

/// Unfolded spacings of `eigenvalues[window]` (sorted input), skipping exact
/// zero modes.
fn window_spacings(eigenvalues: &[f64], window: (usize, usize), degree: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (start, end) = window;
    if end > eigenvalues.len() || start >= end || end - start < MIN_WINDOW {
        return Err(Error::invalid(format!(
            "level window [{start}, {end}) must lie inside the spectrum of {} levels and hold at least {MIN_WINDOW}",
            eigenvalues.len()
        )));
    }
    let scale = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let (levels, ranks): (Vec<f64>, Vec<f64>) = (start..end)
        .filter(|&i| eigenvalues[i].abs() >= 1e-10 * scale)
        .map(|i| (eigenvalues[i], i as f64))
        .unzip();
    if levels.len() < MIN_WINDOW {
        return Err(Error::invalid("fewer than 100 non-zero levels in the window"));
    }
    let unfolded = unfold(&levels, &ranks, degree)?;
    Ok((unfolded.windows(2).map(|w| w[1] - w[0]).collect(), levels))
}

pub fn level_statistics(eigenvalues: &[f64], window: (usize, usize), degree: usize) -> Result<LevelStatistics> {
    let (spacings, levels) = window_spacings(eigenvalues, window, degree)?;
    Ok(from_spacings(window, degree, spacings, mean_gap_ratio(&levels)))
}

/// Sorted i.i.d. uniform levels: uncorrelated (Poisson) calibration.
pub fn poisson_control(levels: usize, degree: usize, seed: u64) -> Result<LevelStatistics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e: Vec<f64> = (0..levels).map(|_| rng.random::<f64>()).collect();
    e.sort_by(f64::total_cmp);
    level_statistics(&e, (0, levels), degree)
}

/// Pooled statistics of the central halves of `samples` GOE matrices.
pub fn goe_control(dim: usize, samples: usize, degree: usize, seed: u64) -> Result<LevelStatistics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = (dim / 4, 3 * dim / 4);
    let mut spacings = Vec::new();
    let mut ratio_sum = 0.0;
    for _ in 0..samples {
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = rng.sample::<f64, _>(StandardNormal);
            for j in 0..i {
                let x: f64 = rng.sample::<f64, _>(StandardNormal) / std::f64::consts::SQRT_2;
                a[i * dim + j] = x;
                a[j * dim + i] = x;
            }
        }
        let e = symmetric_eigh(&mut a, dim, false)?;
        let (s, levels) = window_spacings(&e, window, degree)?;
        spacings.extend(s);
        ratio_sum += mean_gap_ratio(&levels);
    }
    Ok(from_spacings(window, degree, spacings, ratio_sum / samples as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdfs_are_distributions() {
        for r in [Reference::Poisson, Reference::SemiPoisson, Reference::WignerDyson] {
            assert_eq!(r.cdf(0.0), 0.0);
            assert!((r.cdf(50.0) - 1.0).abs() < 1e-12);
            // Numerical derivative matches the density; mean spacing is 1.
            let h = 1e-6;
            for s in [0.3, 1.0, 2.2] {
                let d = (r.cdf(s + h) - r.cdf(s - h)) / (2.0 * h);
                assert!((d - r.density(s)).abs() < 1e-6);
            }
            let mean: f64 = (0..20000).map(|i| (i as f64 + 0.5) * 1e-3).map(|s| s * r.density(s) * 1e-3).sum();
            assert!((mean - 1.0).abs() < 1e-4, "{r:?} mean {mean}");
        }
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let sorted: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        assert!(ks_distance(&sorted, |s| Reference::Poisson.cdf(s)) <= 0.5 / n as f64 + 1e-12);
    }

    #[test]
    fn window_scaling() {
        assert_eq!(standard_window(77436), (15487, 38218));
        assert_eq!(standard_window(1000), (200, 494));
    }

    #[test]
    fn small_window_rejected() {
        let e: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert!(matches!(level_statistics(&e, (0, 50), 9), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn poisson_control_classifies() {
        let s = poisson_control(4000, DEFAULT_UNFOLD_DEGREE, 7).unwrap();
        assert_eq!(s.closest(), Reference::Poisson);
        assert!((s.mean_spacing - 1.0).abs() < 0.02);
        assert!((s.r_mean - 0.386).abs() < 0.03);
    }

    #[test]
    fn goe_control_classifies() {
        let s = goe_control(200, 20, DEFAULT_UNFOLD_DEGREE, 11).unwrap();
        assert_eq!(s.closest(), Reference::WignerDyson);
        assert!((s.mean_spacing - 1.0).abs() < 0.02);
        assert!((s.r_mean - 0.536).abs() < 0.03);
    }

    #[test]
    fn picket_fence_ratio() {
        let e: Vec<f64> = (0..200).map(|i| i as f64).collect();
        assert_eq!(mean_gap_ratio(&e), 1.0);
    }
}
