//! Adiabatic (displaced-oscillator) approximation for `J ≪ Ω`.
//!
//! Each displaced oscillator level `n` splits into a near-degenerate doublet
//!
//! ```text
//! E±,n = Ω(n − g²/Ω²) ± J e^{−2g²/Ω²} L_n(4g²/Ω²)
//! ```
//!
//! whose splitting sets the site-oscillation frequency contributed by that
//! level, weighted by its thermal probability `p(n)`.

use log::warn;
use thiserror::Error;

use crate::bath::SpectralDensity;
use crate::model::{solve_parity_blocks, ModelParams};
use crate::units;

/// `J/Ω` above which the approximation is reported as unreliable.
pub const VALIDITY_RATIO: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdiabaticError {
    #[error("level {n} outside the {available} doublets resolved by the truncation")]
    LevelOutOfRange { n: usize, available: usize },
    #[error("doublet pairing failed: centres {lower} and {upper} are not one mode quantum apart")]
    Pairing { lower: f64, upper: f64 },
    #[error("empty coupling grid")]
    EmptyGrid,
}

/// Laguerre polynomial `L_n(x)` by the three-term recurrence
/// `(k+1)L_{k+1} = (2k+1−x)L_k − k L_{k−1}`.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn check_validity(p: &ModelParams) {
    let ratio = p.tunnelling / p.mode_freq;
    if ratio > VALIDITY_RATIO {
        warn!("J/Ω = {ratio:.3} exceeds {VALIDITY_RATIO}; adiabatic estimates are unreliable");
    }
}

/// Signed doublet half-gap `J e^{−2g²/Ω²} L_n(4g²/Ω²)`.
fn doublet_amplitude(p: &ModelParams, n: usize) -> f64 {
    let r = (p.coupling / p.mode_freq).powi(2);
    p.tunnelling * (-2.0 * r).exp() * laguerre(n, 4.0 * r)
}

/// `(E+,n, E−,n)` in rad/ps.
pub fn adiabatic_energies(p: &ModelParams, n: usize) -> (f64, f64) {
    check_validity(p);
    let centre = p.mode_freq * (n as f64 - (p.coupling / p.mode_freq).powi(2));
    let half = doublet_amplitude(p, n);
    (centre + half, centre - half)
}

/// Thermal probability of oscillator level `n`.
pub fn thermal_weight(mode_freq: f64, temperature: f64, n: usize) -> f64 {
    let x = units::beta(temperature) * mode_freq;
    -(-x).exp_m1() * (-(n as f64) * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubletPrediction {
    pub n: usize,
    /// rad/ps
    pub splitting: f64,
    /// `(E+_n, E−_n)` in rad/ps.
    pub energies: (f64, f64),
    pub weight: f64,
}

pub fn doublet_splittings(
    p: &ModelParams,
    temperature: f64,
    n_list: &[usize],
) -> Vec<DoubletPrediction> {
    n_list
        .iter()
        .map(|&n| {
            let energies = adiabatic_energies(p, n);
            DoubletPrediction {
                n,
                splitting: (energies.0 - energies.1).abs(),
                energies,
                weight: thermal_weight(p.mode_freq, temperature, n),
            }
        })
        .collect()
}

/// Doublet splittings of the exact truncated spectrum: levels are sorted,
/// paired consecutively, and neighbouring pair centres must lie about `Ω`
/// apart.
pub fn numerical_doublet_splittings(
    p: &ModelParams,
    count: usize,
) -> Result<Vec<f64>, AdiabaticError> {
    let spectrum = solve_parity_blocks(p).sorted_spectrum();
    let available = spectrum.len() / 2;
    if count > available {
        return Err(AdiabaticError::LevelOutOfRange {
            n: count - 1,
            available,
        });
    }
    let pairs: Vec<(f64, f64)> = spectrum.chunks(2).map(|c| (c[0], c[1])).collect();
    // one pair beyond the request is checked for spacing when available
    let checked = (count + 1).min(available);
    for w in pairs[..checked].windows(2) {
        let lower = 0.5 * (w[0].0 + w[0].1);
        let upper = 0.5 * (w[1].0 + w[1].1);
        if ((upper - lower) - p.mode_freq).abs() > 0.5 * p.mode_freq {
            return Err(AdiabaticError::Pairing { lower, upper });
        }
    }
    Ok(pairs[..count].iter().map(|(a, b)| b - a).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingRow {
    pub g: f64,
    pub n: usize,
    /// Predicted oscillation frequency (doublet splitting), rad/ps.
    pub frequency: f64,
    pub weight: f64,
    pub chi: f64,
}

/// Spectral density sampled at the predicted doublet frequencies over a
/// coupling grid.
pub fn sd_sampling_report(
    p: &ModelParams,
    sd: &SpectralDensity,
    temperature: f64,
    n_list: &[usize],
    g_list: &[f64],
) -> Result<Vec<SamplingRow>, AdiabaticError> {
    if g_list.is_empty() {
        return Err(AdiabaticError::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(g_list.len() * n_list.len());
    for &g in g_list {
        let pg = p.with_coupling(g);
        for d in doublet_splittings(&pg, temperature, n_list) {
            rows.push(SamplingRow {
                g,
                n: d.n,
                frequency: d.splitting,
                weight: d.weight,
                chi: sd.chi(d.splitting),
            });
        }
    }
    Ok(rows)
}

pub const ADIABATIC_HEADER: &str = "g,n,splitting_radps,weight,chi_at_splitting";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::SpectralKind;

    fn params(g: f64) -> ModelParams {
        ModelParams::new(5.0, 100.0, g, 40).unwrap()
    }

    #[test]
    fn laguerre_values() {
        assert_eq!(laguerre(0, 3.7), 1.0);
        assert!(laguerre(1, 1.0).abs() < 1e-15);
        assert!((laguerre(2, 2.0) + 1.0).abs() < 1e-15);
        // L_3(x) = 1 − 3x + 3x²/2 − x³/6
        let x = 0.7;
        let l3 = 1.0 - 3.0 * x + 1.5 * x * x - x * x * x / 6.0;
        assert!((laguerre(3, x) - l3).abs() < 1e-14);
    }

    #[test]
    fn energies() {
        let (ep, em) = adiabatic_energies(&params(0.0), 0);
        assert_eq!((ep, em), (5.0, -5.0));
        let (ep, em) = adiabatic_energies(&params(50.0), 0);
        let half = 5.0 * (-0.5f64).exp();
        assert!((ep - (-25.0 + half)).abs() < 1e-12);
        assert!((em - (-25.0 - half)).abs() < 1e-12);
        assert!((half - 3.0327).abs() < 1e-4);
        for g in [0.0, 13.0, 50.0] {
            let (a, b) = adiabatic_energies(&params(g), 0);
            let (c, d) = adiabatic_energies(&params(g), 1);
            assert!((0.5 * (c + d) - 0.5 * (a + b) - 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn splittings_and_weights() {
        for d in doublet_splittings(&params(0.0), 300.0, &[0, 1, 2, 5]) {
            assert!((d.splitting - 10.0).abs() < 1e-12);
        }
        let d = doublet_splittings(&params(50.0), 300.0, &[0, 1]);
        assert!((d[0].splitting - 6.0653).abs() < 1e-4);
        assert!(d[1].splitting < 1e-14);
        assert!((d[0].weight - 0.9216).abs() < 5e-4);
        assert!((d[1].weight - 0.0722).abs() < 5e-4);
        let total: f64 = (0..40).map(|n| thermal_weight(100.0, 300.0, n)).sum();
        assert!(total >= 1.0 - 1e-6);
    }

    #[test]
    fn ground_splitting_decreases_with_coupling() {
        let s: Vec<f64> = (0..=50)
            .map(|g| doublet_splittings(&params(g as f64), 300.0, &[0])[0].splitting)
            .collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn exact_splittings_track_prediction() {
        for g in [0.0, 10.0, 20.0, 30.0, 40.0, 50.0] {
            let p = params(g);
            let exact = numerical_doublet_splittings(&p, 2).unwrap();
            for (n, e) in exact.iter().enumerate() {
                let pred = doublet_splittings(&p, 300.0, &[n])[0].splitting;
                if pred < 0.5 {
                    assert!((e - pred).abs() < 0.1, "g={g} n={n}");
                } else {
                    assert!((e - pred).abs() / pred < 0.05, "g={g} n={n}");
                }
            }
        }
    }

    #[test]
    fn sampling_moves_off_peak() {
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 1 }, 0.05, 10.0).unwrap();
        let g: Vec<f64> = (0..=10).map(|i| 5.0 * i as f64).collect();
        let rows = sd_sampling_report(&params(0.0), &sd, 300.0, &[0], &g).unwrap();
        assert!((rows[0].frequency - 10.0).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[1].chi < w[0].chi));
        let lor = SpectralDensity::new(SpectralKind::Lorentzian { width: 1.5 }, 0.05, 5.0).unwrap();
        let rows = sd_sampling_report(&params(0.0), &lor, 300.0, &[0], &[0.0, 45.0]).unwrap();
        assert!(rows[1].chi > rows[0].chi);
        assert_eq!(
            sd_sampling_report(&params(0.0), &sd, 300.0, &[0], &[]),
            Err(AdiabaticError::EmptyGrid)
        );
    }
}
