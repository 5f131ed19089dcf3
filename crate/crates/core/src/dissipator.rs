//! Parity-switching transition operators and the secular Lindblad generator.
//!
//! The bath couples through `σ_x ⊗ I` (superposition basis), which only links
//! eigenstates of opposite parity. Written in the eigenbasis,
//!
//! `σ_x = Σ_kk′ w_kk′ |ψ⁺_k⟩⟨ψ⁻_k′| + h.c.`,
//!
//! so every jump operator `ζ⁺_kk′ = w_kk′ |ψ⁺_k⟩⟨ψ⁻_k′|` (and its adjoint
//! `ζ⁻_k′k`) is a single weighted matrix unit. The generator therefore acts
//! on density matrices stored in the eigenbasis without ever forming the
//! Liouvillian.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::{BasisTag, OperatorMatrix};
use crate::bath::{rate_gamma, rate_gamma_prime, SpectralDensity};
use crate::model::{Parity, ParityEigensystem};

/// Jumps whose effective rate `rate·|w|²` falls below this are dropped.
pub const RATE_FLOOR: f64 = 1e-15;

/// Gaps, overlap weights and (optionally) thermal rates for every pair
/// `(k, k′)` of even/odd eigenstates.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    /// `Λ_kk′ = E⁺_k − E⁻_k′`.
    pub gaps: DMatrix<f64>,
    /// `w_kk′ = ⟨ψ⁺_k|σ_x|ψ⁻_k′⟩`.
    pub weights: DMatrix<f64>,
    /// Rate multiplying `D[ζ⁻_k′k]` (even → odd): `Γ(−Λ) + Γ′(Λ)`.
    pub rates_emit: Option<DMatrix<f64>>,
    /// Rate multiplying `D[ζ⁺_kk′]` (odd → even): `Γ(Λ) + Γ′(−Λ)`.
    pub rates_absorb: Option<DMatrix<f64>>,
    n_max: usize,
}

/// Gaps and overlap weights from a solved eigensystem.
///
/// With `|ψ±_k⟩ = (±|0⟩ + P̂|1⟩)|φ±_k⟩/√2` the matrix element is
/// `w_kk′ = −Σ_n C⁺_kn C⁻_k′n`; the sign is the relative phase of the odd
/// eigenstates in that convention.
pub fn build_zeta_operators(sys: &ParityEigensystem) -> TransitionTable {
    let n = sys.n_max();
    let gaps = DMatrix::from_fn(n, n, |k, kp| sys.energies_plus[k] - sys.energies_minus[kp]);
    let weights = -(&sys.coeffs_plus * sys.coeffs_minus.transpose());
    TransitionTable {
        gaps,
        weights,
        rates_emit: None,
        rates_absorb: None,
        n_max: n,
    }
}

/// Thermal rates for every transition of the table.
pub fn attach_rates(
    mut table: TransitionTable,
    sd: &SpectralDensity,
    temperature: f64,
) -> TransitionTable {
    let n = table.n_max;
    let gaps = &table.gaps;
    let emit = DMatrix::from_fn(n, n, |k, kp| {
        let l = gaps[(k, kp)];
        rate_gamma(sd, -l, temperature) + rate_gamma_prime(sd, l, temperature)
    });
    let absorb = DMatrix::from_fn(n, n, |k, kp| {
        let l = gaps[(k, kp)];
        rate_gamma(sd, l, temperature) + rate_gamma_prime(sd, -l, temperature)
    });
    table.rates_emit = Some(emit);
    table.rates_absorb = Some(absorb);
    table
}

impl TransitionTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `ζ⁺_kk′ = w_kk′ |ψ⁺_k⟩⟨ψ⁻_k′|` as a dense eigenbasis matrix.
    pub fn zeta_plus(&self, k: usize, kp: usize) -> OperatorMatrix {
        let d = 2 * self.n_max;
        let mut m = DMatrix::zeros(d, d);
        m[(k, self.n_max + kp)] = Complex64::new(self.weights[(k, kp)], 0.0);
        OperatorMatrix::new(m, BasisTag::Eigen)
    }

    /// `ζ⁻_k′k = w*_kk′ |ψ⁻_k′⟩⟨ψ⁺_k|`.
    pub fn zeta_minus(&self, kp: usize, k: usize) -> OperatorMatrix {
        let d = 2 * self.n_max;
        let mut m = DMatrix::zeros(d, d);
        m[(self.n_max + kp, k)] = Complex64::new(self.weights[(k, kp)], 0.0);
        OperatorMatrix::new(m, BasisTag::Eigen)
    }
}

/// One dissipative channel `rate · D[amplitude·|to⟩⟨from|]` with
/// `D[L]ρ = 2LρL† − L†Lρ − ρL†L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub to: usize,
    pub from: usize,
    pub amplitude: f64,
    pub rate: f64,
}

impl Jump {
    /// `rate·|amplitude|²`.
    pub fn effective_rate(&self) -> f64 {
        self.rate * self.amplitude * self.amplitude
    }

    pub fn operator(&self, dim: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(dim, dim);
        m[(self.to, self.from)] = Complex64::new(self.amplitude, 0.0);
        m
    }
}

/// Secular master-equation generator acting on eigenbasis density matrices:
/// `ρ ↦ −i[H_S, ρ] + Σ rate·D[L]ρ`.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    /// `H_S` in the eigenbasis (diagonal).
    pub hamiltonian: OperatorMatrix,
    pub energies: DVector<f64>,
    pub jumps: Vec<Jump>,
    /// Columns are the eigenstates in site ⊗ Fock coordinates.
    pub eigenvectors_site: DMatrix<f64>,
    /// `κ_i = Σ_{jumps from i} rate·|w|²`; coherence `ρ_ij` decays at `κ_i + κ_j`.
    decay: DVector<f64>,
}

/// Assemble the generator from a table with attached rates.
///
/// # Panics
/// If `attach_rates` has not been applied to `table`.
pub fn build_generator(table: &TransitionTable, sys: &ParityEigensystem) -> LindbladGenerator {
    let emit = table.rates_emit.as_ref().expect("rates must be attached");
    let absorb = table.rates_absorb.as_ref().expect("rates must be attached");
    let n = table.n_max;
    let mut jumps = Vec::new();
    for k in 0..n {
        for kp in 0..n {
            let w = table.weights[(k, kp)];
            let plus = sys.eigen_index(Parity::Plus, k);
            let minus = sys.eigen_index(Parity::Minus, kp);
            // ζ⁻_k′k : even k → odd k′
            let down = Jump {
                to: minus,
                from: plus,
                amplitude: w,
                rate: emit[(k, kp)],
            };
            // ζ⁺_kk′ : odd k′ → even k
            let up = Jump {
                to: plus,
                from: minus,
                amplitude: w,
                rate: absorb[(k, kp)],
            };
            jumps.extend([down, up].into_iter().filter(|j| j.effective_rate() >= RATE_FLOOR));
        }
    }
    LindbladGenerator::from_jumps(sys, jumps)
}

impl LindbladGenerator {
    pub fn from_jumps(sys: &ParityEigensystem, jumps: Vec<Jump>) -> Self {
        let energies = sys.eigen_energies();
        let dim = energies.len();
        let mut decay = DVector::zeros(dim);
        for j in &jumps {
            decay[j.from] += j.effective_rate();
        }
        let h = DMatrix::from_diagonal(&energies.map(|e| Complex64::new(e, 0.0)));
        Self {
            hamiltonian: OperatorMatrix::new(h, BasisTag::Eigen),
            energies,
            jumps,
            eigenvectors_site: sys.eigenvectors_site(),
            decay,
        }
    }

    /// Closed-system generator (no jumps).
    pub fn coherent(sys: &ParityEigensystem) -> Self {
        Self::from_jumps(sys, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn decay_rates(&self) -> &DVector<f64> {
        &self.decay
    }

    /// Dissipative part only.
    pub fn apply_dissipator(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut out = DMatrix::from_fn(d, d, |i, j| -rho[(i, j)] * (self.decay[i] + self.decay[j]));
        for jump in &self.jumps {
            out[(jump.to, jump.to)] += 2.0 * jump.effective_rate() * rho[(jump.from, jump.from)];
        }
        out
    }

    /// Full action `−i[H, ρ] + D(ρ)`.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = self.apply_dissipator(rho);
        let d = self.dim();
        for j in 0..d {
            for i in 0..d {
                let w = self.energies[i] - self.energies[j];
                out[(i, j)] += Complex64::new(0.0, -w) * rho[(i, j)];
            }
        }
        out
    }

    /// Rate matrix `R` of the closed population dynamics `ṗ = R p`.
    pub fn population_rate_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut r = DMatrix::zeros(d, d);
        for jump in &self.jumps {
            let g = 2.0 * jump.effective_rate();
            r[(jump.to, jump.from)] += g;
            r[(jump.from, jump.from)] -= g;
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::SpectralKind;
    use crate::model::{solve_parity_blocks, ModelParams};

    fn setup(g: f64, n: usize) -> (ParityEigensystem, TransitionTable) {
        let p = ModelParams::new(5.0, 100.0, g, n).unwrap();
        let sys = solve_parity_blocks(&p);
        let table = build_zeta_operators(&sys);
        (sys, table)
    }

    #[test]
    fn zeta_adjoint_pair() {
        let (_, table) = setup(30.0, 8);
        for k in 0..8 {
            for kp in 0..8 {
                let zp = table.zeta_plus(k, kp);
                let zm = table.zeta_minus(kp, k);
                assert_eq!(zp.adjoint(), zm);
            }
        }
    }

    #[test]
    fn decoupled_weights_are_diagonal() {
        let (_, table) = setup(0.0, 10);
        for k in 0..10 {
            for kp in 0..10 {
                let expect = if k == kp { 1.0 } else { 0.0 };
                assert!((table.weights[(k, kp)].abs() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zeta_products_vanish() {
        let (_, table) = setup(20.0, 5);
        for (k, kp, l, lp) in [(0, 0, 1, 1), (2, 1, 0, 3), (4, 4, 4, 4)] {
            let prod = table.zeta_plus(k, kp).data * table.zeta_plus(l, lp).data;
            assert!(crate::basis::max_abs(&prod) == 0.0);
            let prod = table.zeta_minus(kp, k).data * table.zeta_minus(lp, l).data;
            assert!(crate::basis::max_abs(&prod) == 0.0);
        }
    }

    #[test]
    fn rates_obey_detailed_balance() {
        let (_, table) = setup(20.0, 10);
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 1 }, 0.05, 10.0).unwrap();
        let table = attach_rates(table, &sd, 300.0);
        let beta = crate::units::beta(300.0);
        let (emit, absorb) = (table.rates_emit.unwrap(), table.rates_absorb.unwrap());
        for k in 0..10 {
            for kp in 0..10 {
                let l = table.gaps[(k, kp)];
                assert!(emit[(k, kp)] >= 0.0 && absorb[(k, kp)] >= 0.0);
                if absorb[(k, kp)] > 1e-200 && emit[(k, kp)] > 1e-200 {
                    let ratio = emit[(k, kp)] / absorb[(k, kp)];
                    assert!((ratio / (beta * l).exp() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn emission_absorption_ratio_at_ten() {
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 1 }, 0.05, 10.0).unwrap();
        let emit = rate_gamma(&sd, -10.0, 300.0) + rate_gamma_prime(&sd, 10.0, 300.0);
        let absorb = rate_gamma(&sd, 10.0, 300.0) + rate_gamma_prime(&sd, -10.0, 300.0);
        assert!((emit / absorb - 1.2900).abs() < 1e-4);
        // near zero temperature absorption vanishes and emission → πχ
        let emit0 = rate_gamma_prime(&sd, 10.0, 1e-3);
        let absorb0 = rate_gamma(&sd, 10.0, 1e-3);
        assert!(absorb0 == 0.0);
        assert!((emit0 - std::f64::consts::PI * sd.chi(10.0)).abs() < 1e-15);
    }

    #[test]
    fn generator_matches_dense_lindblad_form() {
        let (sys, table) = setup(25.0, 4);
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 3 }, 0.05, 10.0).unwrap();
        let table = attach_rates(table, &sd, 300.0);
        let gen = build_generator(&table, &sys);
        let d = gen.dim();
        let rho = DMatrix::from_fn(d, d, |i, j| {
            Complex64::new(((i * 7 + j * 3) % 5) as f64 * 0.1, (i as f64 - j as f64) * 0.05)
        });
        let mut expected = (&gen.hamiltonian.data * &rho - &rho * &gen.hamiltonian.data)
            * Complex64::new(0.0, -1.0);
        for jump in &gen.jumps {
            let l = jump.operator(d);
            let ld = l.adjoint();
            let ldl = &ld * &l;
            expected += (&l * &rho * &ld * Complex64::new(2.0, 0.0) - &ldl * &rho - &rho * &ldl)
                * Complex64::new(jump.rate, 0.0);
        }
        assert!(crate::basis::max_abs(&(gen.apply(&rho) - expected)) < 1e-13);
    }

    #[test]
    fn rate_floor_drops_frozen_transitions() {
        let (sys, table) = setup(20.0, 10);
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 3 }, 0.05, 10.0).unwrap();
        let table = attach_rates(table, &sd, 300.0);
        let gen = build_generator(&table, &sys);
        assert!(gen.jumps.len() < 2 * 100);
        assert!(gen.jumps.iter().all(|j| j.effective_rate() >= RATE_FLOOR));
    }
}
