//! TLS–oscillator Hamiltonian and its parity-block (Fulton–Gouterman)
//! eigensystem.
//!
//! The full Hamiltonian in the site basis is
//! `H = −J X − g Z (â†+â) + Ω n̂`; in the superposition basis `|±⟩` it reads
//! `H_S = −J σ_z − g σ_x (â†+â) + Ω n̂`. Parity `(−1)^(n̂) ⊗ σ_z` is conserved,
//! and the two blocks are `H± = Ω n̂ − g(â†+â) ∓ J P̂` on the oscillator alone.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::basis::{
    kron_tls, number_real, parity_real, quadrature_real, BasisError, BasisTag, FockTruncation,
    OperatorMatrix, TlsBasis,
};

/// Extra Fock states used when certifying eigenvalue convergence.
pub const CONVERGENCE_EXTRA_STATES: usize = 10;
/// Relative (to Ω) eigenvalue tolerance for the convergence certificate.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "eigenvalues not converged at n_max = {n_max}: max shift {max_shift:.3e} rad/ps; try n_max = {suggested}"
    )]
    NotConverged {
        n_max: usize,
        max_shift: f64,
        suggested: usize,
    },
    #[error("eigenstate index {index} out of range (n_max = {n_max})")]
    IndexOutOfRange { index: usize, n_max: usize },
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Parameters of the closed TLS–oscillator system (all in rad/ps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Inter-site tunnelling `J`.
    pub tunnelling: f64,
    /// Vibrational mode frequency `Ω`.
    pub mode_freq: f64,
    /// TLS–mode coupling `g`.
    pub coupling: f64,
    pub truncation: FockTruncation,
}

impl ModelParams {
    pub fn new(
        tunnelling: f64,
        mode_freq: f64,
        coupling: f64,
        n_max: usize,
    ) -> Result<Self, ModelError> {
        let p = Self {
            tunnelling,
            mode_freq,
            coupling,
            truncation: FockTruncation::new(n_max)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.tunnelling > 0.0 && self.tunnelling.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "tunnelling must be > 0, got {}",
                self.tunnelling
            )));
        }
        if !(self.mode_freq > 0.0 && self.mode_freq.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "mode frequency must be > 0, got {}",
                self.mode_freq
            )));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "coupling must be >= 0, got {}",
                self.coupling
            )));
        }
        Ok(())
    }

    pub fn n_max(&self) -> usize {
        self.truncation.n_max()
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self, ModelError> {
        self.truncation = FockTruncation::new(n_max)?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    /// `+1` for the even block, `−1` for the odd block.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }
}

/// `H_S` in the `|±⟩ ⊗ Fock` basis.
pub fn build_system_hamiltonian(p: &ModelParams) -> OperatorMatrix {
    let sigma_z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let sigma_x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let h = tls_oscillator(p, &sigma_z, &sigma_x);
    OperatorMatrix::from_real(&h, BasisTag::TlsTensorSm(TlsBasis::Superposition))
}

/// The same Hamiltonian in the site basis: `−J X − g Z (â†+â) + Ω n̂`.
pub fn build_site_hamiltonian(p: &ModelParams) -> OperatorMatrix {
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let h = tls_oscillator(p, &x, &z);
    OperatorMatrix::from_real(&h, BasisTag::TlsTensorSm(TlsBasis::Site))
}

// −J·tunnel ⊗ I − g·couple ⊗ (â†+â) + Ω·I ⊗ n̂
fn tls_oscillator(p: &ModelParams, tunnel: &DMatrix<f64>, couple: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.n_max();
    let id_osc = DMatrix::identity(n, n);
    let id_tls = DMatrix::identity(2, 2);
    kron_tls(tunnel, &id_osc) * (-p.tunnelling)
        - kron_tls(couple, &quadrature_real(p.truncation)) * p.coupling
        + kron_tls(&id_tls, &number_real(p.truncation)) * p.mode_freq
}

/// Real-symmetric parity block `Ω n̂ − g(â†+â) ∓ J P̂`.
pub fn parity_block_real(p: &ModelParams, parity: Parity) -> DMatrix<f64> {
    number_real(p.truncation) * p.mode_freq
        - quadrature_real(p.truncation) * p.coupling
        - parity_real(p.truncation) * (parity.sign() * p.tunnelling)
}

/// `(H+, H−)` tagged `ParityPlus` / `ParityMinus`.
pub fn build_parity_hamiltonians(p: &ModelParams) -> (OperatorMatrix, OperatorMatrix) {
    (
        OperatorMatrix::from_real(&parity_block_real(p, Parity::Plus), BasisTag::ParityPlus),
        OperatorMatrix::from_real(&parity_block_real(p, Parity::Minus), BasisTag::ParityMinus),
    )
}

/// Eigenvalues and Fock-expansion coefficients of both parity blocks.
///
/// Row `k` of `coeffs_plus` holds `C⁺_kn = ⟨n|φ⁺_k⟩`.
#[derive(Debug, Clone)]
pub struct ParityEigensystem {
    pub params: ModelParams,
    pub energies_plus: DVector<f64>,
    pub energies_minus: DVector<f64>,
    pub coeffs_plus: DMatrix<f64>,
    pub coeffs_minus: DMatrix<f64>,
}

/// Ascending eigenpairs with eigenvectors as rows; each vector's
/// largest-magnitude component is made positive.
fn sorted_eigen(h: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut rows = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let norm = col.norm();
        for j in 0..n {
            rows[(k, j)] = sign * col[j] / norm;
        }
    }
    (energies, rows)
}

/// Diagonalise both blocks without the convergence certificate.
pub fn solve_parity_blocks(p: &ModelParams) -> ParityEigensystem {
    let (energies_plus, coeffs_plus) = sorted_eigen(parity_block_real(p, Parity::Plus));
    let (energies_minus, coeffs_minus) = sorted_eigen(parity_block_real(p, Parity::Minus));
    ParityEigensystem {
        params: *p,
        energies_plus,
        energies_minus,
        coeffs_plus,
        coeffs_minus,
    }
}

/// Diagonalise both blocks and certify convergence by re-solving with
/// [`CONVERGENCE_EXTRA_STATES`] more Fock states.
///
/// The certified window is the lower half of each block, `k < n_max/2`;
/// levels near the truncation edge are never converged and carry no
/// thermal weight at the intended truncations.
pub fn solve_eigensystem(p: &ModelParams) -> Result<ParityEigensystem, ModelError> {
    p.validate()?;
    let sys = solve_parity_blocks(p);
    let bigger = solve_parity_blocks(&p.with_n_max(p.n_max() + CONVERGENCE_EXTRA_STATES)?);
    let window = p.n_max() / 2;
    let max_shift = (0..window)
        .flat_map(|k| {
            [
                (sys.energies_plus[k] - bigger.energies_plus[k]).abs(),
                (sys.energies_minus[k] - bigger.energies_minus[k]).abs(),
            ]
        })
        .fold(0.0, f64::max);
    if max_shift >= CONVERGENCE_TOLERANCE * p.mode_freq {
        return Err(ModelError::NotConverged {
            n_max: p.n_max(),
            max_shift,
            suggested: p.n_max() + 2 * CONVERGENCE_EXTRA_STATES,
        });
    }
    Ok(sys)
}

impl ParityEigensystem {
    pub fn n_max(&self) -> usize {
        self.params.n_max()
    }

    /// Dimension of the full TLS ⊗ oscillator space.
    pub fn dim(&self) -> usize {
        2 * self.n_max()
    }

    pub fn energies(&self, parity: Parity) -> &DVector<f64> {
        match parity {
            Parity::Plus => &self.energies_plus,
            Parity::Minus => &self.energies_minus,
        }
    }

    pub fn coeffs(&self, parity: Parity) -> &DMatrix<f64> {
        match parity {
            Parity::Plus => &self.coeffs_plus,
            Parity::Minus => &self.coeffs_minus,
        }
    }

    /// Index of `|ψ^parity_k⟩` in the eigenbasis ordering.
    pub fn eigen_index(&self, parity: Parity, k: usize) -> usize {
        match parity {
            Parity::Plus => k,
            Parity::Minus => self.n_max() + k,
        }
    }

    /// Energies in eigenbasis order: `E⁺_0 … E⁺_{N−1}, E⁻_0 … E⁻_{N−1}`.
    pub fn eigen_energies(&self) -> DVector<f64> {
        let n = self.n_max();
        DVector::from_fn(2 * n, |i, _| {
            if i < n {
                self.energies_plus[i]
            } else {
                self.energies_minus[i - n]
            }
        })
    }

    /// Union of both block spectra, ascending.
    pub fn sorted_spectrum(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.eigen_energies().iter().copied().collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// `|ψ±_k⟩ = (±|0⟩ + P̂|1⟩)|φ±_k⟩/√2` in site ⊗ Fock coordinates.
    pub fn site_basis_eigenstate(
        &self,
        parity: Parity,
        k: usize,
    ) -> Result<DVector<f64>, ModelError> {
        let n = self.n_max();
        if k >= n {
            return Err(ModelError::IndexOutOfRange { index: k, n_max: n });
        }
        let c = self.coeffs(parity).row(k);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ok(DVector::from_fn(2 * n, |i, _| {
            if i < n {
                parity.sign() * c[i] * s
            } else {
                let m = i - n;
                crate::basis::parity_sign(m) * c[m] * s
            }
        }))
    }

    /// Orthogonal matrix whose columns are the eigenstates (eigenbasis
    /// order) in site ⊗ Fock coordinates.
    pub fn eigenvectors_site(&self) -> DMatrix<f64> {
        let n = self.n_max();
        let mut v = DMatrix::zeros(2 * n, 2 * n);
        for (parity, offset) in [(Parity::Plus, 0), (Parity::Minus, n)] {
            for k in 0..n {
                let psi = self
                    .site_basis_eigenstate(parity, k)
                    .expect("index within range");
                v.set_column(offset + k, &psi);
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, n_max: usize) -> ModelParams {
        ModelParams::new(5.0, 100.0, g, n_max).unwrap()
    }

    fn dense_spectrum(h: &OperatorMatrix) -> Vec<f64> {
        let mut e: Vec<f64> = h.real_part().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0.0, 100.0, 1.0, 10).is_err());
        assert!(ModelParams::new(5.0, -1.0, 1.0, 10).is_err());
        assert!(ModelParams::new(5.0, 100.0, -1.0, 10).is_err());
        assert!(ModelParams::new(5.0, 100.0, 1.0, 1).is_err());
    }

    #[test]
    fn decoupled_spectrum() {
        let p = params(0.0, 12);
        let e = dense_spectrum(&build_system_hamiltonian(&p));
        let mut expected: Vec<f64> = (0..12)
            .flat_map(|n| [n as f64 * 100.0 - 5.0, n as f64 * 100.0 + 5.0])
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
        let (hp, _) = build_parity_hamiltonians(&p);
        for n in 0..12 {
            let expect = n as f64 * 100.0 - 5.0 * crate::basis::parity_sign(n);
            assert_eq!(hp.data[(n, n)].re, expect);
        }
    }

    #[test]
    fn coupling_matrix_element_links_like_parity() {
        let p = params(30.0, 6);
        let h = build_system_hamiltonian(&p);
        let n = 6;
        // ⟨+,0|H|−,1⟩ = −g ; ⟨+,0|H|+,1⟩ = 0
        assert_eq!(h.data[(0, n + 1)].re, -30.0);
        assert_eq!(h.data[(0, 1)].re, 0.0);
        assert!(h.hermiticity_defect() < 1e-12);
        assert!(build_site_hamiltonian(&p).hermiticity_defect() < 1e-12);
    }

    #[test]
    fn block_sign_symmetry() {
        let p = params(20.0, 10);
        let mut q = p;
        q.tunnelling = -p.tunnelling;
        assert_eq!(parity_block_real(&p, Parity::Plus), parity_block_real(&q, Parity::Minus));
    }

    #[test]
    fn blocks_reproduce_dense_spectrum() {
        for g in [0.0, 10.0, 30.0, 50.0] {
            let p = params(g, 40);
            let sys = solve_eigensystem(&p).unwrap();
            let dense = dense_spectrum(&build_system_hamiltonian(&p));
            let site = dense_spectrum(&build_site_hamiltonian(&p));
            for ((a, b), c) in sys.sorted_spectrum().iter().zip(&dense).zip(&site) {
                let scale = b.abs().max(1.0);
                assert!((a - b).abs() < 1e-9 * scale, "g={g}: {a} vs {b}");
                assert!((c - b).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn decoupled_ground_state() {
        let sys = solve_eigensystem(&params(0.0, 10)).unwrap();
        assert!((sys.energies_plus[0] + 5.0).abs() < 1e-12);
        assert!((sys.coeffs_plus[(0, 0)] - 1.0).abs() < 1e-12);
        let psi = sys.site_basis_eigenstate(Parity::Plus, 0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((psi[0] - s).abs() < 1e-12 && (psi[10] - s).abs() < 1e-12);
        assert!(sys.site_basis_eigenstate(Parity::Plus, 10).is_err());
    }

    #[test]
    fn eigenstates_are_orthonormal_and_residual_small() {
        let p = params(30.0, 40);
        let sys = solve_eigensystem(&p).unwrap();
        for c in [&sys.coeffs_plus, &sys.coeffs_minus] {
            for k in 0..40 {
                assert!((c.row(k).norm() - 1.0).abs() < 1e-12);
            }
        }
        let v = sys.eigenvectors_site();
        assert!((v.transpose() * &v - DMatrix::<f64>::identity(80, 80)).amax() < 1e-10);
        // opposite parity blocks are orthogonal
        assert!((v.columns(0, 40).transpose() * v.columns(40, 40)).amax() < 1e-12);
        let h = build_site_hamiltonian(&p).real_part();
        let hnorm = h.norm();
        let e = sys.eigen_energies();
        for i in 0..80 {
            let r = &h * v.column(i) - v.column(i) * e[i];
            assert!(r.norm() < 1e-9 * hnorm, "i={i}");
        }
    }

    #[test]
    fn ground_doublet_gap_near_adiabatic() {
        let sys = solve_eigensystem(&params(50.0, 40)).unwrap();
        let gap = sys.energies_minus[0] - sys.energies_plus[0];
        let approx = 10.0 * (-0.5f64).exp();
        assert!((gap.abs() - approx).abs() / approx < 0.05);
    }

    #[test]
    fn doublet_structure() {
        for g in [10.0, 30.0, 50.0] {
            let sys = solve_eigensystem(&params(g, 40)).unwrap();
            let e = sys.sorted_spectrum();
            for band in 0..5 {
                let intra = e[2 * band + 1] - e[2 * band];
                assert!(intra < 10.0);
                let inter = e[2 * band + 2] - e[2 * band];
                assert!((inter - 100.0).abs() < 10.0, "g={g}, band {band}: {inter}");
            }
        }
    }

    #[test]
    fn convergence_failure_is_reported() {
        let p = ModelParams::new(5.0, 100.0, 300.0, 12).unwrap();
        match solve_eigensystem(&p) {
            Err(ModelError::NotConverged { suggested, .. }) => assert!(suggested > 12),
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}
