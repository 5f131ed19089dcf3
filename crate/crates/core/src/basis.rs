//! Truncated Fock-space bookkeeping and elementary operators.
//!
//! Composite TLS ⊗ oscillator matrices use TLS-major ordering: the state
//! `|t⟩ ⊗ |n⟩` lives at index `t * n_max + n`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Unitarity / truncation leakage threshold shared by every truncation check.
pub const TRUNCATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("invalid truncation: n_max = {0} (need at least 2 Fock states)")]
    InvalidTruncation(usize),
    #[error("truncation leakage {defect:.3e} exceeds {TRUNCATION_TOLERANCE:e} (n_max = {n_max})")]
    TruncationLeak { defect: f64, n_max: usize },
    #[error("basis mismatch: expected {expected:?}, found {found:?}")]
    BasisMismatch { expected: BasisTag, found: BasisTag },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Number of retained oscillator Fock states `|0⟩ … |n_max − 1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockTruncation(usize);

impl FockTruncation {
    pub fn new(n_max: usize) -> Result<Self, BasisError> {
        if n_max < 2 {
            return Err(BasisError::InvalidTruncation(n_max));
        }
        Ok(Self(n_max))
    }

    pub fn n_max(self) -> usize {
        self.0
    }

    /// Same truncation enlarged by `extra` states.
    pub fn enlarged(self, extra: usize) -> Self {
        Self(self.0 + extra)
    }
}

/// Which single-excitation TLS basis a composite matrix is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TlsBasis {
    /// Localised sites `|0⟩, |1⟩`.
    Site,
    /// Delocalised `|±⟩ = (|0⟩ ± |1⟩)/√2`, `|+⟩` first.
    Superposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTag {
    SmFock,
    TlsTensorSm(TlsBasis),
    ParityPlus,
    ParityMinus,
    /// Eigenbasis of the TLS–oscillator Hamiltonian: all even-parity
    /// eigenstates (ascending), then all odd-parity ones.
    Eigen,
}

impl BasisTag {
    pub fn dim(self, trunc: FockTruncation) -> usize {
        match self {
            BasisTag::SmFock | BasisTag::ParityPlus | BasisTag::ParityMinus => trunc.n_max(),
            BasisTag::TlsTensorSm(_) | BasisTag::Eigen => 2 * trunc.n_max(),
        }
    }
}

/// Dense complex square matrix tagged with the basis it is written in.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub data: DMatrix<Complex64>,
    pub basis: BasisTag,
}

impl OperatorMatrix {
    pub fn new(data: DMatrix<Complex64>, basis: BasisTag) -> Self {
        assert!(data.is_square(), "operator matrices must be square");
        Self { data, basis }
    }

    pub fn from_real(data: &DMatrix<f64>, basis: BasisTag) -> Self {
        Self::new(data.map(|x| Complex64::new(x, 0.0)), basis)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.data.adjoint(), self.basis)
    }

    /// Real part of the entries; exact for the real-symmetric Hamiltonians.
    pub fn real_part(&self) -> DMatrix<f64> {
        self.data.map(|z| z.re)
    }

    /// `max |M − M†|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.data - self.data.adjoint()))
    }

    pub fn expect_basis(&self, basis: BasisTag) -> Result<(), BasisError> {
        if self.basis != basis {
            return Err(BasisError::BasisMismatch {
                expected: basis,
                found: self.basis,
            });
        }
        Ok(())
    }
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn real_fock(trunc: FockTruncation, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    let n = trunc.n_max();
    DMatrix::from_fn(n, n, f)
}

/// Real annihilation operator: `⟨n−1|â|n⟩ = √n`.
pub fn annihilation_real(trunc: FockTruncation) -> DMatrix<f64> {
    real_fock(trunc, |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 })
}

/// Real position-like quadrature `â† + â`.
pub fn quadrature_real(trunc: FockTruncation) -> DMatrix<f64> {
    let a = annihilation_real(trunc);
    &a + a.transpose()
}

/// Real number operator `n̂ = diag(0, 1, …)`.
pub fn number_real(trunc: FockTruncation) -> DMatrix<f64> {
    real_fock(trunc, |r, c| if r == c { r as f64 } else { 0.0 })
}

/// Real parity operator `P̂ = (−1)^n̂`.
pub fn parity_real(trunc: FockTruncation) -> DMatrix<f64> {
    real_fock(trunc, |r, c| if r == c { parity_sign(r) } else { 0.0 })
}

/// `(−1)^n`.
pub fn parity_sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn annihilation(trunc: FockTruncation) -> OperatorMatrix {
    OperatorMatrix::from_real(&annihilation_real(trunc), BasisTag::SmFock)
}

pub fn creation(trunc: FockTruncation) -> OperatorMatrix {
    annihilation(trunc).adjoint()
}

pub fn number(trunc: FockTruncation) -> OperatorMatrix {
    OperatorMatrix::from_real(&number_real(trunc), BasisTag::SmFock)
}

pub fn parity(trunc: FockTruncation) -> OperatorMatrix {
    OperatorMatrix::from_real(&parity_real(trunc), BasisTag::SmFock)
}

pub fn identity(trunc: FockTruncation) -> OperatorMatrix {
    let n = trunc.n_max();
    OperatorMatrix::new(DMatrix::identity(n, n), BasisTag::SmFock)
}

/// Real displacement `D(α) = exp(α(â† − â))` for real `α`.
///
/// The generator is real antisymmetric, so `i·G` is Hermitian and the
/// exponential is assembled from its spectral decomposition; the result is
/// real orthogonal up to rounding.
pub fn displacement_real(alpha: f64, trunc: FockTruncation) -> Result<DMatrix<f64>, BasisError> {
    let n = trunc.n_max();
    if alpha * alpha > n as f64 / 4.0 {
        log::warn!(
            "displacement alpha = {alpha} is large for n_max = {n}; coherent-state tail will be clipped"
        );
    }
    let a = annihilation_real(trunc);
    let generator = (a.transpose() - &a) * alpha;
    // i·G is Hermitian with real spectrum.
    let herm = generator.map(|x| Complex64::new(0.0, x));
    let eig = herm.symmetric_eigen();
    let phases = eig
        .eigenvalues
        .map(|mu| Complex64::new(0.0, -mu).exp());
    let v = &eig.eigenvectors;
    let d = v * DMatrix::from_diagonal(&phases) * v.adjoint();
    let d = d.map(|z| z.re);

    let defect = (d.transpose() * &d - DMatrix::<f64>::identity(n, n)).amax();
    if defect > TRUNCATION_TOLERANCE {
        return Err(BasisError::TruncationLeak { defect, n_max: n });
    }
    Ok(d)
}

pub fn displacement(alpha: f64, trunc: FockTruncation) -> Result<OperatorMatrix, BasisError> {
    Ok(OperatorMatrix::from_real(
        &displacement_real(alpha, trunc)?,
        BasisTag::SmFock,
    ))
}

/// Kronecker product `tls ⊗ osc` in TLS-major ordering.
pub fn kron_tls(tls: &DMatrix<f64>, osc: &DMatrix<f64>) -> DMatrix<f64> {
    tls.kronecker(osc)
}

/// Unitary mapping superposition-basis coordinates to site-basis
/// coordinates: `x_site = U · x_sup` with `|±⟩ = (|0⟩ ± |1⟩)/√2`.
pub fn superposition_to_site(trunc: FockTruncation) -> DMatrix<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = DMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
    let n = trunc.n_max();
    kron_tls(&h, &DMatrix::identity(n, n))
}
