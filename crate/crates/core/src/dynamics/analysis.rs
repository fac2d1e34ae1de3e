//! Linear entropy growth and oscillation periods of a quench run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::QuenchRun;

/// Signals whose peak-to-peak amplitude is below this have no period.
pub const FLAT_TOLERANCE: f64 = 1e-12;
pub const PERIOD_GRID_POINTS: usize = 5000;
/// Minimum number of detected periods the fit window must cover.
pub const MIN_PERIODS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Fit window; `None` means the whole run.
    pub window: Option<(f64, f64)>,
    pub period_min: f64,
    pub period_max: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { window: None, period_min: 1.5, period_max: 4.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearFit {
    pub fn at(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

pub fn linear_fit(t: &[f64], y: &[f64]) -> Result<LinearFit> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(Error::invalid("linear fit needs at least two matching samples"));
    }
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|x| (x - tm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("linear fit needs distinct sample times"));
    }
    let sxy: f64 = t.iter().zip(y).map(|(x, v)| (x - tm) * (v - ym)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit { slope, intercept: ym - slope * tm })
}

/// Period in `[lo, hi]` maximizing `|sum_t y(t) exp(-2 pi i t / p)|`, or
/// `None` for a flat signal.
pub fn dominant_period(t: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<Option<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(format!("invalid period search range [{lo}, {hi}]")));
    }
    let (min, max) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if y.is_empty() || max - min < FLAT_TOLERANCE {
        return Ok(None);
    }
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..PERIOD_GRID_POINTS {
        let p = lo + (hi - lo) * i as f64 / (PERIOD_GRID_POINTS - 1) as f64;
        let w = std::f64::consts::TAU / p;
        let (re, im) = t
            .iter()
            .zip(y)
            .fold((0.0, 0.0), |(re, im), (&s, &v)| (re + v * (w * s).cos(), im - v * (w * s).sin()));
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, p);
        }
    }
    Ok(Some(best.1))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Oscillation {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub period_entropy_residual: Option<f64>,
    pub period_correlator: Option<f64>,
}

/// Summary written next to the time series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscillationJson {
    pub slope: f64,
    pub period_entropy_residual: Option<f64>,
    pub period_correlator: Option<f64>,
}

impl Oscillation {
    pub fn json(&self) -> OscillationJson {
        OscillationJson {
            slope: self.slope,
            period_entropy_residual: self.period_entropy_residual,
            period_correlator: self.period_correlator,
        }
    }
}

fn detrended(t: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let fit = linear_fit(t, y)?;
    Ok(t.iter().zip(y).map(|(&s, &v)| v - fit.at(s)).collect())
}

/// Linear fit of `S(t)` over the window, its residual, and the dominant
/// periods of the residual and of the (detrended) correlator.
pub fn oscillation_analysis(run: &QuenchRun, options: &AnalysisOptions) -> Result<Oscillation> {
    let first = *run.times.first().ok_or_else(|| Error::invalid("empty quench run"))?;
    let last = *run.times.last().expect("non-empty");
    let window = options.window.unwrap_or((first, last));
    let keep: Vec<usize> = (0..run.times.len())
        .filter(|&i| run.times[i] >= window.0 - 1e-12 && run.times[i] <= window.1 + 1e-12)
        .collect();
    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let (t, s, c) = (pick(&run.times), pick(&run.entropy), pick(&run.correlator));
    if t.len() < 3 {
        return Err(Error::invalid("fit window contains fewer than three samples"));
    }
    let span = t[t.len() - 1] - t[0];
    let fit = linear_fit(&t, &s)?;
    let residual: Vec<f64> = t.iter().zip(&s).map(|(&x, &v)| v - fit.at(x)).collect();
    let period_entropy_residual = dominant_period(&t, &residual, options.period_min, options.period_max)?;
    let period_correlator = dominant_period(&t, &detrended(&t, &c)?, options.period_min, options.period_max)?;
    for p in [period_entropy_residual, period_correlator].into_iter().flatten() {
        if span < MIN_PERIODS * p {
            return Err(Error::invalid(format!(
                "fit window of length {span} covers fewer than {MIN_PERIODS} periods of {p:.3}"
            )));
        }
    }
    Ok(Oscillation {
        slope: fit.slope,
        intercept: fit.intercept,
        window,
        times: t,
        residual,
        period_entropy_residual,
        period_correlator,
    })
}
