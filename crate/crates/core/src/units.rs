//! Unit conventions.
//!
//! Frequencies and energies are angular frequencies in rad/ps (ħ = 1), so a
//! value quoted as "100 THz" is read as 100 × 10¹² rad/s. Times are in ps and
//! temperatures in kelvin.

/// Boltzmann constant, J/K (exact SI value).
const BOLTZMANN: f64 = 1.380649e-23;
/// Reduced Planck constant, J·s.
const HBAR: f64 = 1.054571817e-34;

/// `k_B / ħ` in rad ps⁻¹ K⁻¹ (≈ 0.130920).
pub const KB_OVER_HBAR: f64 = BOLTZMANN / HBAR * 1e-12;

/// Inverse temperature `β = ħ/(k_B T)` in ps.
pub fn beta(temperature: f64) -> f64 {
    1.0 / (KB_OVER_HBAR * temperature)
}

/// Human-readable statement of the unit convention, echoed into manifests.
pub const UNIT_CONVENTION: &str =
    "frequencies and energies in rad/ps (input 'THz' read as 1e12 rad/s), times in ps, temperature in K, hbar = 1";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_constant() {
        assert!((KB_OVER_HBAR - 0.130920).abs() < 1e-6);
        // β·Ω at Ω = 100 rad/ps, T = 300 K
        assert!((beta(300.0) * 100.0 - 2.5461).abs() < 1e-4);
    }
}
