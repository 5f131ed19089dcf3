//! Initial-state preparation, master-equation propagation and site
//! observables.
//!
//! Density matrices are propagated in the eigenbasis of `H_S`. Two
//! propagators are available:
//!
//! * [`Method::Spectral`] uses the block structure of the secular generator:
//!   populations obey a closed rate equation (propagated with a matrix
//!   exponential) and every coherence `ρ_ij` evolves on its own as
//!   `exp[(−i(E_i − E_j) − κ_i − κ_j) t]`. Exact up to rounding, cheap for
//!   nanosecond runs.
//! * [`Method::RungeKutta`] integrates the generator with adaptive
//!   Dormand–Prince steps, either in the interaction picture (non-stiff) or
//!   directly in the Schrödinger picture.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::basis::{
    displacement_real, number_real, quadrature_real, BasisError, BasisTag, FockTruncation,
    TlsBasis, TRUNCATION_TOLERANCE,
};
use crate::bath::{BathError, SpectralDensity};
use crate::dissipator::{attach_rates, build_generator, build_zeta_operators, LindbladGenerator};
use crate::integrator::{self, IntegratorError, Tolerances};
use crate::model::{solve_eigensystem, ModelError, ModelParams, ParityEigensystem};
use crate::units;

/// Most negative density-matrix eigenvalue tolerated at an output sample.
pub const POSITIVITY_TOLERANCE: f64 = 1e-7;
/// Extra Fock states used to measure the thermal tail beyond the truncation.
const TAIL_PROBE_STATES: usize = 20;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),
    #[error("thermal weight {tail:.3e} beyond n_max = {n_max} exceeds {TRUNCATION_TOLERANCE:e}")]
    TruncationTail { tail: f64, n_max: usize },
    #[error("density matrix eigenvalue {min_eigenvalue:.3e} at t = {t} ps violates positivity")]
    PositivityViolation { t: f64, min_eigenvalue: f64 },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Zero,
    One,
}

impl Site {
    pub fn index(self) -> usize {
        match self {
            Site::Zero => 0,
            Site::One => 1,
        }
    }

    /// Eigenvalue of `Z = |0⟩⟨0| − |1⟩⟨1|`.
    pub fn z(self) -> f64 {
        match self {
            Site::Zero => 1.0,
            Site::One => -1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Site::Zero => Site::One,
            Site::One => Site::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmPreparation {
    /// Oscillator thermalised while coupled to the excited site.
    DisplacedThermal,
    /// Oscillator thermalised before the coupling is switched on.
    BareThermal,
    /// Pure Fock state `|n⟩`.
    Fock(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub site: Site,
    pub sm_prep: SmPreparation,
    /// Kelvin.
    pub temperature: f64,
}

/// Density matrix tagged with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub data: DMatrix<Complex64>,
    pub basis: BasisTag,
}

impl DensityMatrix {
    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.data)
    }

    /// Superposition- or site-basis matrix rewritten in the site basis.
    pub fn to_site(&self, trunc: FockTruncation) -> Result<DensityMatrix, BasisError> {
        match self.basis {
            BasisTag::TlsTensorSm(TlsBasis::Site) => Ok(self.clone()),
            BasisTag::TlsTensorSm(TlsBasis::Superposition) => {
                let u = crate::basis::superposition_to_site(trunc).map(|x| Complex64::new(x, 0.0));
                Ok(DensityMatrix {
                    data: &u * &self.data * u.adjoint(),
                    basis: BasisTag::TlsTensorSm(TlsBasis::Site),
                })
            }
            other => Err(BasisError::BasisMismatch {
                expected: BasisTag::TlsTensorSm(TlsBasis::Site),
                found: other,
            }),
        }
    }
}

fn min_hermitian_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Gibbs state of a real-symmetric Hamiltonian.
fn gibbs_real(h: DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    let eig = h.symmetric_eigen();
    let e0 = eig.eigenvalues.min();
    let w = eig.eigenvalues.map(|e| (-beta * (e - e0)).exp());
    let z = w.sum();
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&(w / z)) * v.transpose()
}

/// Oscillator Hamiltonian conditioned on the excitation sitting on `site`:
/// `Ω n̂ − z_site g (â† + â)`.
fn site_conditioned_oscillator(p: &ModelParams, site: Site, trunc: FockTruncation) -> DMatrix<f64> {
    number_real(trunc) * p.mode_freq - quadrature_real(trunc) * (site.z() * p.coupling)
}

/// Displacement of the oscillator equilibrium for an excitation on `site`.
pub fn site_displacement(p: &ModelParams, site: Site) -> f64 {
    site.z() * p.coupling / p.mode_freq
}

/// Reduced oscillator state for the requested preparation.
pub fn prepare_oscillator_state(
    ic: &InitialCondition,
    p: &ModelParams,
) -> Result<DMatrix<f64>, DynamicsError> {
    if !(ic.temperature > 0.0) {
        return Err(DynamicsError::InvalidInitialCondition(format!(
            "temperature must be > 0, got {}",
            ic.temperature
        )));
    }
    let trunc = p.truncation;
    let n = trunc.n_max();
    let beta = units::beta(ic.temperature);
    match ic.sm_prep {
        SmPreparation::DisplacedThermal => {
            let probe = trunc.enlarged(TAIL_PROBE_STATES);
            let wide = gibbs_real(site_conditioned_oscillator(p, ic.site, probe), beta);
            let tail: f64 = (n..probe.n_max()).map(|i| wide[(i, i)]).sum();
            if tail > TRUNCATION_TOLERANCE {
                return Err(DynamicsError::TruncationTail { tail, n_max: n });
            }
            Ok(gibbs_real(site_conditioned_oscillator(p, ic.site, trunc), beta))
        }
        SmPreparation::BareThermal => Ok(gibbs_real(number_real(trunc) * p.mode_freq, beta)),
        SmPreparation::Fock(k) => {
            if k >= n {
                return Err(DynamicsError::InvalidInitialCondition(format!(
                    "Fock state {k} outside truncation n_max = {n}"
                )));
            }
            let mut m = DMatrix::zeros(n, n);
            m[(k, k)] = 1.0;
            Ok(m)
        }
    }
}

/// `|site⟩⟨site| ⊗ ρ_SM` in the site basis.
pub fn prepare_initial_state(
    ic: &InitialCondition,
    p: &ModelParams,
) -> Result<DensityMatrix, DynamicsError> {
    let osc = prepare_oscillator_state(ic, p)?;
    let mut tls = DMatrix::zeros(2, 2);
    tls[(ic.site.index(), ic.site.index())] = 1.0;
    Ok(DensityMatrix {
        data: tls.kronecker(&osc).map(|x| Complex64::new(x, 0.0)),
        basis: BasisTag::TlsTensorSm(TlsBasis::Site),
    })
}

/// Fock populations of an oscillator state seen from the frame displaced by
/// `alpha`: `diag(D(α)† ρ D(α))`.
pub fn displaced_populations(
    osc: &DMatrix<f64>,
    alpha: f64,
    trunc: FockTruncation,
) -> Result<DVector<f64>, BasisError> {
    let d = displacement_real(alpha, trunc)?;
    Ok((d.transpose() * osc * d).diagonal())
}

/// Thermal generator of one parameter point: eigensystem, transition table
/// and the assembled secular generator.
#[derive(Debug, Clone)]
pub struct OpenSystem {
    pub eigensystem: ParityEigensystem,
    pub generator: LindbladGenerator,
}

impl OpenSystem {
    pub fn new(
        p: &ModelParams,
        sd: &SpectralDensity,
        temperature: f64,
    ) -> Result<Self, DynamicsError> {
        let eigensystem = solve_eigensystem(p)?;
        let table = attach_rates(build_zeta_operators(&eigensystem), sd, temperature);
        let generator = build_generator(&table, &eigensystem);
        Ok(Self {
            eigensystem,
            generator,
        })
    }

    /// No bath: unitary dynamics only.
    pub fn closed(p: &ModelParams) -> Result<Self, DynamicsError> {
        let eigensystem = solve_eigensystem(p)?;
        let generator = LindbladGenerator::coherent(&eigensystem);
        Ok(Self {
            eigensystem,
            generator,
        })
    }
}

/// Build the generator for one parameter point (closed when `sd` is `None`),
/// prepare the initial state and propagate it.
pub fn run_point(
    p: &ModelParams,
    sd: Option<&SpectralDensity>,
    ic: &InitialCondition,
    schedule: Schedule,
    options: EvolveOptions,
) -> Result<Trajectory, DynamicsError> {
    let sys = match sd {
        Some(sd) => OpenSystem::new(p, sd, ic.temperature)?,
        None => OpenSystem::closed(p)?,
    };
    let rho0 = prepare_initial_state(ic, p)?;
    evolve(&sys.generator, &rho0, schedule, options)
}

/// Map a site- or superposition-basis density matrix into the eigenbasis.
pub fn to_eigenbasis(
    gen: &LindbladGenerator,
    rho: &DensityMatrix,
) -> Result<DMatrix<Complex64>, DynamicsError> {
    let n = gen.dim() / 2;
    let site = rho.to_site(FockTruncation::new(n)?)?;
    if site.data.nrows() != gen.dim() {
        return Err(BasisError::DimensionMismatch {
            expected: gen.dim(),
            found: site.data.nrows(),
        }
        .into());
    }
    let v = gen.eigenvectors_site.map(|x| Complex64::new(x, 0.0));
    Ok(v.adjoint() * site.data * v)
}

/// Map an eigenbasis density matrix to the site basis.
pub fn eigen_to_site(gen: &LindbladGenerator, rho: &DMatrix<Complex64>) -> DensityMatrix {
    let v = gen.eigenvectors_site.map(|x| Complex64::new(x, 0.0));
    DensityMatrix {
        data: &v * rho * v.adjoint(),
        basis: BasisTag::TlsTensorSm(TlsBasis::Site),
    }
}

/// Reduced two-level state `Tr_SM ρ` in the site basis.
pub fn reduced_tls(rho: &DensityMatrix) -> Result<[[Complex64; 2]; 2], BasisError> {
    let n = rho.data.nrows() / 2;
    let site = rho.to_site(FockTruncation::new(n)?)?;
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            *entry = (0..n).map(|m| site.data[(a * n + m, b * n + m)]).sum();
        }
    }
    Ok(out)
}

/// `Tr[ρ (|1⟩⟨1| ⊗ I)]`.
pub fn observe_site_population(rho: &DensityMatrix) -> Result<f64, BasisError> {
    Ok(reduced_tls(rho)?[1][1].re)
}

/// `⟨0|ρ_TLS|1⟩`.
pub fn observe_coherence(rho: &DensityMatrix) -> Result<Complex64, BasisError> {
    Ok(reduced_tls(rho)?[0][1])
}

/// `Tr ρ_TLS²`.
pub fn observe_purity(rho: &DensityMatrix) -> Result<f64, BasisError> {
    Ok(tls_purity(&reduced_tls(rho)?))
}

fn tls_purity(r: &[[Complex64; 2]; 2]) -> f64 {
    let mut s = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            s += (r[a][b] * r[b][a]).re;
        }
    }
    s
}

/// Precomputed eigenbasis images of the TLS projectors `|b⟩⟨a| ⊗ I`, so that
/// reduced-state entries cost one O(d²) contraction each.
struct EigenObserver {
    // ops[a][b] = V† (|b⟩⟨a| ⊗ I) V, giving ρ_TLS[a][b] = Tr[ρ ops[a][b]]
    ops: [[DMatrix<Complex64>; 2]; 2],
}

impl EigenObserver {
    fn new(gen: &LindbladGenerator) -> Self {
        let v = &gen.eigenvectors_site;
        let n = gen.dim() / 2;
        let make = |a: usize, b: usize| {
            // rows of block b, columns of block a
            let vb = v.rows(b * n, n);
            let va = v.rows(a * n, n);
            (vb.transpose() * va).map(|x| Complex64::new(x, 0.0))
        };
        Self {
            ops: [[make(0, 0), make(0, 1)], [make(1, 0), make(1, 1)]],
        }
    }

    fn reduced(&self, rho: &DMatrix<Complex64>) -> [[Complex64; 2]; 2] {
        let contract = |op: &DMatrix<Complex64>| -> Complex64 {
            // Tr[ρ op] = Σ_ij ρ_ij op_ji
            rho.iter()
                .zip(op.transpose().iter())
                .map(|(r, o)| r * o)
                .sum()
        };
        [
            [contract(&self.ops[0][0]), contract(&self.ops[0][1])],
            [contract(&self.ops[1][0]), contract(&self.ops[1][1])],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Interaction,
    Schrodinger,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Spectral,
    RungeKutta { picture: Picture, tolerances: Tolerances },
}

impl Method {
    pub fn runge_kutta() -> Self {
        Method::RungeKutta {
            picture: Picture::Interaction,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    /// ps
    pub t_max: f64,
    /// ps
    pub dt_out: f64,
}

impl Schedule {
    pub fn new(t_max: f64, dt_out: f64) -> Result<Self, DynamicsError> {
        let s = Self { t_max, dt_out };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.t_max > 0.0 && self.dt_out > 0.0 && self.t_max.is_finite()) {
            return Err(DynamicsError::InvalidSchedule(format!(
                "t_max and dt_out must be > 0 (got {}, {})",
                self.t_max, self.dt_out
            )));
        }
        if self.dt_out > self.t_max {
            return Err(DynamicsError::InvalidSchedule("dt_out exceeds t_max".into()));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let steps = (self.t_max / self.dt_out + 1e-9).floor() as usize;
        (0..=steps).map(|k| k as f64 * self.dt_out).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub method: Method,
    /// Compute the minimum density-matrix eigenvalue at every sample.
    pub positivity: PositivityCheck,
}

/// How positivity of `ρ` is monitored at output samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositivityCheck {
    Off,
    /// Cholesky certificates on `ρ + sI` for `s` = [`CERTIFY_SHIFT`], then
    /// [`POSITIVITY_TOLERANCE`]; the recorded value is the certified lower
    /// bound `−s`, or the exact eigenvalue when both certificates fail.
    Certify,
    /// Full Hermitian eigenvalue computation.
    Exact,
}

/// First shift tried by [`PositivityCheck::Certify`].
pub const CERTIFY_SHIFT: f64 = 1e-12;

fn certified_lower_bound(rho: &DMatrix<Complex64>) -> f64 {
    let d = rho.nrows();
    let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    for shift in [CERTIFY_SHIFT, POSITIVITY_TOLERANCE] {
        let shifted = &h + DMatrix::<Complex64>::identity(d, d) * Complex64::new(shift, 0.0);
        if shifted.cholesky().is_some() {
            return -shift;
        }
    }
    min_hermitian_eigenvalue(rho)
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Spectral,
            positivity: PositivityCheck::Certify,
        }
    }
}

/// Sampled observables of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub p_site1: Vec<f64>,
    pub coherence_re: Vec<f64>,
    pub coherence_im: Vec<f64>,
    pub purity: Vec<f64>,
    pub trace_defect: Vec<f64>,
    /// Minimum eigenvalue of ρ per sample, or its certified lower bound
    /// (NaN when not monitored).
    pub min_eigenvalue: Vec<f64>,
}

pub const TRAJECTORY_HEADER: &str = "t_ps,p_site1,coh_re,coh_im,purity,trace_defect";

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_defect(&self) -> f64 {
        self.trace_defect.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                format_decimal(self.times[i]),
                format_decimal(self.p_site1[i]),
                format_decimal(self.coherence_re[i]),
                format_decimal(self.coherence_im[i]),
                format_decimal(self.purity[i]),
                format_decimal(self.trace_defect[i]),
            )?;
        }
        Ok(())
    }

    fn push(&mut self, t: f64, tls: [[Complex64; 2]; 2], trace: Complex64, min_eig: f64) {
        self.times.push(t);
        self.p_site1.push(tls[1][1].re);
        self.coherence_re.push(tls[0][1].re);
        self.coherence_im.push(tls[0][1].im);
        self.purity.push(tls_purity(&tls));
        self.trace_defect.push((trace - Complex64::new(1.0, 0.0)).norm());
        self.min_eigenvalue.push(min_eig);
    }
}

/// Fixed-point decimal rendering with at least 15 significant digits.
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.1}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (14 - magnitude).clamp(1, 340) as usize;
    format!("{x:.decimals$}")
}

/// Propagate `rho0` under `gen`, sampling every `schedule.dt_out`.
pub fn evolve(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    schedule: Schedule,
    options: EvolveOptions,
) -> Result<Trajectory, DynamicsError> {
    schedule.validate()?;
    let rho_e = to_eigenbasis(gen, rho0)?;
    let times = schedule.times();
    let observer = EigenObserver::new(gen);
    let mut traj = Trajectory::default();
    let mut record = |t: f64, rho: &DMatrix<Complex64>| -> Result<(), DynamicsError> {
        let min_eig = match options.positivity {
            PositivityCheck::Off => f64::NAN,
            PositivityCheck::Certify => certified_lower_bound(rho),
            PositivityCheck::Exact => min_hermitian_eigenvalue(rho),
        };
        if min_eig < -POSITIVITY_TOLERANCE {
            return Err(DynamicsError::PositivityViolation {
                t,
                min_eigenvalue: min_eig,
            });
        }
        traj.push(t, observer.reduced(rho), rho.trace(), min_eig);
        Ok(())
    };

    match options.method {
        Method::Spectral => {
            let d = gen.dim();
            let rates = gen.population_rate_matrix();
            let step = (rates * schedule.dt_out).exp();
            let mut pops = DVector::from_fn(d, |i, _| rho_e[(i, i)].re);
            let decay = gen.decay_rates();
            for (idx, &t) in times.iter().enumerate() {
                if idx > 0 {
                    pops = &step * pops;
                }
                let rho = DMatrix::from_fn(d, d, |i, j| {
                    if i == j {
                        Complex64::new(pops[i], 0.0)
                    } else {
                        let w = gen.energies[i] - gen.energies[j];
                        let z = Complex64::new(-(decay[i] + decay[j]) * t, -w * t);
                        rho_e[(i, j)] * z.exp()
                    }
                });
                record(t, &rho)?;
            }
        }
        Method::RungeKutta {
            picture,
            tolerances,
        } => {
            let states = match picture {
                Picture::Interaction => integrator::integrate(
                    |_, rho| gen.apply_dissipator(rho),
                    0.0,
                    rho_e,
                    &times,
                    tolerances,
                )?,
                Picture::Schrodinger => {
                    integrator::integrate(|_, rho| gen.apply(rho), 0.0, rho_e, &times, tolerances)?
                }
            };
            for (t, state) in times.iter().zip(states) {
                let rho = match picture {
                    Picture::Schrodinger => state,
                    Picture::Interaction => rotate_out(gen, &state, *t),
                };
                record(*t, &rho)?;
            }
        }
    }
    Ok(traj)
}

/// Interaction-picture state back to the Schrödinger picture.
fn rotate_out(gen: &LindbladGenerator, rho: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let d = gen.dim();
    DMatrix::from_fn(d, d, |i, j| {
        let w = gen.energies[i] - gen.energies[j];
        rho[(i, j)] * Complex64::new(0.0, -w * t).exp()
    })
}

/// Eigenbasis density matrix at time `t` (spectral propagation), for
/// diagnostics such as distance to the Gibbs state.
pub fn state_at(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DMatrix<Complex64>, DynamicsError> {
    let rho_e = to_eigenbasis(gen, rho0)?;
    let d = gen.dim();
    let pops = (gen.population_rate_matrix() * t).exp()
        * DVector::from_fn(d, |i, _| rho_e[(i, i)].re);
    let decay = gen.decay_rates();
    Ok(DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(pops[i], 0.0)
        } else {
            let w = gen.energies[i] - gen.energies[j];
            rho_e[(i, j)] * Complex64::new(-(decay[i] + decay[j]) * t, -w * t).exp()
        }
    }))
}

/// Gibbs state `e^{−βH_S}/Z` in the eigenbasis.
pub fn gibbs_eigenbasis(gen: &LindbladGenerator, temperature: f64) -> DMatrix<Complex64> {
    let beta = units::beta(temperature);
    let e0 = gen.energies.min();
    let w = gen.energies.map(|e| (-beta * (e - e0)).exp());
    let z = w.sum();
    DMatrix::from_diagonal(&w.map(|x| Complex64::new(x / z, 0.0)))
}

/// Trace distance `½‖a − b‖₁` between Hermitian matrices.
pub fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let diff = a - b;
    let h = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
    0.5 * h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::SpectralKind;

    fn params(g: f64, n: usize) -> ModelParams {
        ModelParams::new(5.0, 100.0, g, n).unwrap()
    }

    fn ic(site: Site, prep: SmPreparation) -> InitialCondition {
        InitialCondition {
            site,
            sm_prep: prep,
            temperature: 300.0,
        }
    }

    #[test]
    fn decoupled_preparations_agree() {
        let p = params(0.0, 20);
        let a = prepare_oscillator_state(&ic(Site::One, SmPreparation::DisplacedThermal), &p).unwrap();
        let b = prepare_oscillator_state(&ic(Site::One, SmPreparation::BareThermal), &p).unwrap();
        assert!((&a - &b).amax() < 1e-14);
        let x = (-units::beta(300.0) * 100.0).exp();
        for n in 0..5 {
            assert!((b[(n, n)] - (1.0 - x) * x.powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_weights_in_displaced_frame() {
        let p = params(50.0, 40);
        let init = ic(Site::One, SmPreparation::DisplacedThermal);
        let osc = prepare_oscillator_state(&init, &p).unwrap();
        let pops = displaced_populations(&osc, site_displacement(&p, Site::One), p.truncation).unwrap();
        assert!((pops[0] - 0.9216).abs() < 5e-4);
        assert!((pops[1] - 0.0722).abs() < 5e-4);
    }

    #[test]
    fn cold_displaced_occupation() {
        let p = params(50.0, 40);
        let osc = prepare_oscillator_state(
            &InitialCondition {
                site: Site::One,
                sm_prep: SmPreparation::DisplacedThermal,
                temperature: 1.0,
            },
            &p,
        )
        .unwrap();
        let n_mean = (osc * number_real(p.truncation)).trace();
        assert!((n_mean - 0.25).abs() < 1e-9);
    }

    #[test]
    fn initial_state_is_valid() {
        let p = params(30.0, 30);
        for prep in [
            SmPreparation::DisplacedThermal,
            SmPreparation::BareThermal,
            SmPreparation::Fock(2),
        ] {
            let rho = prepare_initial_state(&ic(Site::One, prep), &p).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!(rho.min_eigenvalue() > -1e-12);
            assert!((observe_site_population(&rho).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(prepare_initial_state(&ic(Site::One, SmPreparation::Fock(30)), &p).is_err());
    }

    #[test]
    fn truncation_tail_is_flagged() {
        let p = params(300.0, 12);
        let err = prepare_oscillator_state(&ic(Site::One, SmPreparation::DisplacedThermal), &p);
        assert!(matches!(err, Err(DynamicsError::TruncationTail { .. })));
    }

    #[test]
    fn observables_on_mixed_tls() {
        let n = 4;
        let data = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            if i == j {
                Complex64::new(1.0 / (2 * n) as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let rho = DensityMatrix {
            data,
            basis: BasisTag::TlsTensorSm(TlsBasis::Site),
        };
        assert!((observe_site_population(&rho).unwrap() - 0.5).abs() < 1e-15);
        assert!((observe_purity(&rho).unwrap() - 0.5).abs() < 1e-15);
        let eig = DensityMatrix {
            basis: BasisTag::Eigen,
            ..rho
        };
        assert!(matches!(
            observe_site_population(&eig),
            Err(BasisError::BasisMismatch { .. })
        ));
    }

    #[test]
    fn superposition_input_is_converted() {
        // |+⟩⟨+| ⊗ |0⟩⟨0| has site-1 population 1/2 and coherence 1/2
        let n = 3;
        let mut data = DMatrix::zeros(2 * n, 2 * n);
        data[(0, 0)] = Complex64::new(1.0, 0.0);
        let rho = DensityMatrix {
            data,
            basis: BasisTag::TlsTensorSm(TlsBasis::Superposition),
        };
        assert!((observe_site_population(&rho).unwrap() - 0.5).abs() < 1e-15);
        assert!((observe_coherence(&rho).unwrap().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_rabi_oscillation() {
        let p = params(0.0, 10);
        let sys = OpenSystem::closed(&p).unwrap();
        let rho0 = prepare_initial_state(&ic(Site::One, SmPreparation::Fock(0)), &p).unwrap();
        let traj = evolve(
            &sys.generator,
            &rho0,
            Schedule::new(2.0, 0.01).unwrap(),
            EvolveOptions::default(),
        )
        .unwrap();
        for (t, p1) in traj.times.iter().zip(&traj.p_site1) {
            assert!((p1 - (5.0 * t).cos().powi(2)).abs() < 1e-10);
        }
        let quarter = std::f64::consts::PI / 10.0;
        let idx = traj.times.iter().position(|&t| (t - quarter).abs() < 0.006).unwrap();
        assert!(traj.p_site1[idx] < 1e-3);
    }

    #[test]
    fn spectral_and_runge_kutta_agree() {
        let p = params(30.0, 16);
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 3 }, 0.05, 10.0).unwrap();
        let sys = OpenSystem::new(&p, &sd, 300.0).unwrap();
        let rho0 = prepare_initial_state(&ic(Site::One, SmPreparation::DisplacedThermal), &p).unwrap();
        let sched = Schedule::new(3.0, 0.05).unwrap();
        let a = evolve(&sys.generator, &rho0, sched, EvolveOptions::default()).unwrap();
        let b = evolve(
            &sys.generator,
            &rho0,
            sched,
            EvolveOptions {
                method: Method::runge_kutta(),
                positivity: PositivityCheck::Exact,
            },
        )
        .unwrap();
        for (x, y) in a.p_site1.iter().zip(&b.p_site1) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!(b.min_eigenvalue() > -1e-10);
        assert_eq!(a.min_eigenvalue(), -CERTIFY_SHIFT);
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(0.0, 0.1).is_err());
        assert!(Schedule::new(1.0, 2.0).is_err());
        assert_eq!(Schedule::new(1.0, 0.25).unwrap().times().len(), 5);
        assert_eq!(Schedule::new(12.0, 0.01).unwrap().times().len(), 1201);
    }

    #[test]
    fn decimal_format() {
        assert_eq!(format_decimal(0.0), "0.0");
        assert_eq!(format_decimal(0.5), "0.500000000000000");
        let s = format_decimal(1.234e-15);
        assert!(s.starts_with("0.000000000000001234"));
        let s = format_decimal(123.456);
        assert_eq!(s, "123.456000000000");
    }
}
