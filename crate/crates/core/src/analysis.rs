//! Trajectory post-processing: oscillation frequency, windowed amplitude,
//! steady-state detection and truncation convergence.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rustfft::{num_complex::Complex, FftPlanner};
use thiserror::Error;

use crate::bath::SpectralDensity;
use crate::dynamics::{run_point, DynamicsError, EvolveOptions, InitialCondition, Schedule, Trajectory};
use crate::model::ModelParams;

pub const MIN_WINDOW_SAMPLES: usize = 32;
/// Peak-to-median ratio below which a spectrum counts as featureless.
pub const NOISE_FLOOR_RATIO: f64 = 3.0;
pub const ZERO_PADDING: usize = 8;
pub const SETTLED_FRACTION: f64 = 0.1;
pub const SETTLED_TOLERANCE: f64 = 1e-3;
pub const CONVERGENCE_THRESHOLD: f64 = 1e-6;
pub const MIN_DELTA_N: usize = 5;

const REFINE_GRID: usize = 41;
const GOLDEN_ITERATIONS: usize = 60;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("window [{t0}, {t1}] ps holds {found} samples, need at least {MIN_WINDOW_SAMPLES}")]
    InsufficientSamples { t0: f64, t1: f64, found: usize },
    #[error("no spectral peak above {NOISE_FLOOR_RATIO}x the median magnitude")]
    NoOscillation,
    #[error("delta_n must be at least {MIN_DELTA_N}, got {0}")]
    DeltaTooSmall(usize),
    #[error("truncation not converged: max |Δp| = {:.3e} between n_max = {} and {}", .0.max_difference, .0.n_max, .0.n_max_enlarged)]
    NotConverged(Box<ConvergenceReport>),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t0: f64,
    pub t1: f64,
}

impl Window {
    pub fn new(t0: f64, t1: f64) -> Self {
        Self { t0, t1 }
    }

    /// The whole trajectory.
    pub fn full(traj: &Trajectory) -> Self {
        Self {
            t0: traj.times.first().copied().unwrap_or(0.0),
            t1: traj.times.last().copied().unwrap_or(0.0),
        }
    }
}

fn window_slice(traj: &Trajectory, w: Window) -> (Vec<f64>, Vec<f64>) {
    let eps = 1e-9 * w.t1.abs().max(1.0);
    traj.times
        .iter()
        .zip(&traj.p_site1)
        .filter(|(t, _)| **t >= w.t0 - eps && **t <= w.t1 + eps)
        .map(|(t, p)| (*t, *p))
        .unzip()
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

struct Spectrum {
    magnitude: Vec<f64>,
    /// Angular frequency per padded bin.
    bin: f64,
    median: f64,
}

fn periodogram(values: &[f64], dt: f64) -> Spectrum {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let w = hann(n);
    let len = ZERO_PADDING * n;
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .zip(&w)
        .map(|(v, wi)| Complex::new((v - mean) * wi, 0.0))
        .collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let magnitude: Vec<f64> = buf[..=len / 2].iter().map(|c| c.norm()).collect();
    let mut sorted = magnitude.clone();
    sorted.sort_by(f64::total_cmp);
    Spectrum {
        median: sorted[sorted.len() / 2],
        magnitude,
        bin: 2.0 * PI / (len as f64 * dt),
    }
}

/// Vertex offset of the parabola through three neighbouring bins.
fn parabolic_offset(m: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= m.len() {
        return 0.0;
    }
    let (a, b, c) = (m[k - 1], m[k], m[k + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        0.0
    } else {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    }
}

/// Weighted residual of the least-squares fit `a + b cos ωt + c sin ωt`.
fn sinusoid_residual(times: &[f64], values: &[f64], weights: &[f64], omega: f64) -> f64 {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    let mut yy = 0.0;
    let t0 = times[0];
    for ((t, y), w) in times.iter().zip(values).zip(weights) {
        let (s, c) = (omega * (t - t0)).sin_cos();
        let row = Vector3::new(1.0, c, s);
        ata += row * row.transpose() * *w;
        atb += row * (*w * y);
        yy += w * y * y;
    }
    let coef = ata
        .svd(true, true)
        .solve(&atb, 1e-12 * ata.norm())
        .unwrap_or_else(|_| Vector3::zeros());
    yy - coef.dot(&atb)
}

fn refine(times: &[f64], values: &[f64], coarse: f64, rayleigh: f64) -> f64 {
    let w = hann(values.len());
    let lo = (coarse - rayleigh).max(1e-3 * rayleigh);
    let hi = coarse + rayleigh;
    let step = (hi - lo) / (REFINE_GRID - 1) as f64;
    let residual = |om: f64| sinusoid_residual(times, values, &w, om);
    let best = (0..REFINE_GRID)
        .map(|i| lo + step * i as f64)
        .min_by(|a, b| residual(*a).total_cmp(&residual(*b)))
        .unwrap_or(coarse);
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (residual(x1), residual(x2));
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = residual(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = residual(x2);
        }
    }
    0.5 * (a + b)
}

fn checked_window(traj: &Trajectory, window: Window) -> Result<(Vec<f64>, Vec<f64>), AnalysisError> {
    let (t, v) = window_slice(traj, window);
    if t.len() < MIN_WINDOW_SAMPLES {
        return Err(AnalysisError::InsufficientSamples {
            t0: window.t0,
            t1: window.t1,
            found: t.len(),
        });
    }
    Ok((t, v))
}

/// Angular frequency of the strongest oscillation of `p_site1` on `window`.
///
/// The Hann-windowed, zero-padded periodogram locates the peak (refined by
/// parabolic interpolation); a weighted least-squares sinusoid fit then
/// sharpens it within one Rayleigh bin.
pub fn dominant_frequency(traj: &Trajectory, window: Window) -> Result<f64, AnalysisError> {
    let (t, v) = checked_window(traj, window)?;
    dominant_frequency_of(&t, &v)
}

/// [`dominant_frequency`] on raw uniformly spaced samples.
pub fn dominant_frequency_of(times: &[f64], values: &[f64]) -> Result<f64, AnalysisError> {
    if times.len() < MIN_WINDOW_SAMPLES {
        return Err(AnalysisError::InsufficientSamples {
            t0: times.first().copied().unwrap_or(0.0),
            t1: times.last().copied().unwrap_or(0.0),
            found: times.len(),
        });
    }
    let dt = times[1] - times[0];
    let spectrum = periodogram(values, dt);
    let (k, peak) = spectrum
        .magnitude
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    if !(peak > NOISE_FLOOR_RATIO * spectrum.median) {
        return Err(AnalysisError::NoOscillation);
    }
    let coarse = (k as f64 + parabolic_offset(&spectrum.magnitude, k)) * spectrum.bin;
    let span = times[times.len() - 1] - times[0];
    Ok(refine(times, values, coarse, 2.0 * PI / span))
}

/// Strongest spectral peak separated from the dominant one by more than the
/// Hann main-lobe half width, if it clears the noise floor.
pub fn secondary_frequency(traj: &Trajectory, window: Window) -> Result<Option<f64>, AnalysisError> {
    let (t, v) = checked_window(traj, window)?;
    let dominant = dominant_frequency_of(&t, &v)?;
    let dt = t[1] - t[0];
    let spectrum = periodogram(&v, dt);
    let span = t[t.len() - 1] - t[0];
    let exclusion = 2.0 * 2.0 * PI / span;
    let m = &spectrum.magnitude;
    let candidate = (1..m.len() - 1)
        .filter(|&k| m[k] >= m[k - 1] && m[k] >= m[k + 1])
        .filter(|&k| (k as f64 * spectrum.bin - dominant).abs() > exclusion)
        .max_by(|a, b| m[*a].total_cmp(&m[*b]));
    Ok(candidate
        .filter(|&k| m[k] > NOISE_FLOOR_RATIO * spectrum.median)
        .map(|k| (k as f64 + parabolic_offset(m, k)) * spectrum.bin))
}

/// Half the peak-to-peak excursion of `p_site1` on `window`.
pub fn window_amplitude(traj: &Trajectory, window: Window) -> f64 {
    let (_, v) = window_slice(traj, window);
    if v.is_empty() {
        return 0.0;
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    0.5 * (max - min)
}

/// Final sample and whether the last tenth of the grid stays within
/// [`SETTLED_TOLERANCE`] of it.
pub fn steady_state(traj: &Trajectory) -> (f64, bool) {
    let p = &traj.p_site1;
    let Some(&last) = p.last() else {
        return (f64::NAN, false);
    };
    let tail = ((p.len() as f64 * SETTLED_FRACTION).ceil() as usize).max(1);
    let settled = p[p.len() - tail..]
        .iter()
        .all(|x| (x - last).abs() < SETTLED_TOLERANCE);
    (last, settled)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationSummary {
    /// rad/ps; zero when no peak clears the noise floor.
    pub dominant_frequency: f64,
    pub secondary_frequency: Option<f64>,
    pub window_amplitude: f64,
    pub steady_value: f64,
    pub settled: bool,
}

pub const SUMMARY_HEADER: &str =
    "g,dominant_freq_radps,secondary_freq_radps,window_amplitude,steady_value,settled";

pub fn summarize(traj: &Trajectory, window: Window) -> Result<OscillationSummary, AnalysisError> {
    let (dominant, secondary) = match dominant_frequency(traj, window) {
        Ok(f) => (f, secondary_frequency(traj, window)?),
        Err(AnalysisError::NoOscillation) => (0.0, None),
        Err(e) => return Err(e),
    };
    let (steady_value, settled) = steady_state(traj);
    Ok(OscillationSummary {
        dominant_frequency: dominant,
        secondary_frequency: secondary,
        window_amplitude: window_amplitude(traj, window),
        steady_value,
        settled,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub n_max: usize,
    pub n_max_enlarged: usize,
    pub max_difference: f64,
    pub base: Trajectory,
    pub enlarged: Trajectory,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.max_difference < CONVERGENCE_THRESHOLD
    }
}

/// Rerun at `n_max + delta_n` and compare `p_site1` sample by sample.
pub fn convergence_check(
    p: &ModelParams,
    sd: Option<&SpectralDensity>,
    ic: &InitialCondition,
    schedule: Schedule,
    options: EvolveOptions,
    delta_n: usize,
) -> Result<ConvergenceReport, AnalysisError> {
    if delta_n < MIN_DELTA_N {
        return Err(AnalysisError::DeltaTooSmall(delta_n));
    }
    let bigger = p.with_n_max(p.n_max() + delta_n)?;
    let base = run_point(p, sd, ic, schedule, options)?;
    let enlarged = run_point(&bigger, sd, ic, schedule, options)?;
    let max_difference = base
        .p_site1
        .iter()
        .zip(&enlarged.p_site1)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let report = ConvergenceReport {
        n_max: p.n_max(),
        n_max_enlarged: bigger.n_max(),
        max_difference,
        base,
        enlarged,
    };
    if report.passed() {
        Ok(report)
    } else {
        Err(AnalysisError::NotConverged(Box::new(report)))
    }
}
