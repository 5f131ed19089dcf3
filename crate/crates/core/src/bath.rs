//! Bath spectral densities, reorganisation-energy normalisation and thermal
//! transition rates.
//!
//! Two families are supported, both clamped to zero for `ω ≤ 0`:
//!
//! * Gaussian-cutoff power law `χ_m(ω) = A ω^m exp(−ω²/ω_c²)` (`m = 1` Ohmic,
//!   `m > 1` super-Ohmic), peaked at `ω_p = ω_c √(m/2)`;
//! * Lorentzian `χ_L(ω) = A ω W² / ((ω − ω_c)² + W²)`, peaked at
//!   `ω_p = √(ω_c² + W²)`.
//!
//! The amplitude `A` is fixed by the reorganisation energy
//! `λ = ∫₀^∞ χ(ω)/ω dω`, so curves with equal `(λ, ω_p)` are directly
//! comparable.

use std::f64::consts::PI;

use thiserror::Error;

use crate::units;

/// Relative agreement required between closed-form and quadrature `λ`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;
/// Requested relative accuracy of the quadrature cross-check.
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BathError {
    #[error("invalid bath parameter: {0}")]
    InvalidParameter(String),
    #[error("Lorentzian width {width} must be below the peak frequency {peak}")]
    NoValidCenter { peak: f64, width: f64 },
    #[error("closed-form reorganisation energy {closed} disagrees with quadrature {quadrature}")]
    NormalizationInconsistent { closed: f64, quadrature: f64 },
    #[error("Bose occupation requires a positive frequency, got {0}")]
    Domain(f64),
}

/// Thermal and normalisation parameters shared by every spectral shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    /// Kelvin.
    pub temperature: f64,
    /// Reorganisation energy `λ`, rad/ps. Zero decouples the bath.
    pub reorganisation: f64,
    /// Frequency of the spectral maximum `ω_p`, rad/ps.
    pub peak_freq: f64,
}

impl BathParams {
    pub fn new(temperature: f64, reorganisation: f64, peak_freq: f64) -> Result<Self, BathError> {
        let p = Self {
            temperature,
            reorganisation,
            peak_freq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), BathError> {
        for (name, v) in [
            ("temperature", self.temperature),
            ("peak frequency", self.peak_freq),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BathError::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.reorganisation >= 0.0 && self.reorganisation.is_finite()) {
            return Err(BathError::InvalidParameter(format!(
                "reorganisation energy must be >= 0, got {}",
                self.reorganisation
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        units::beta(self.temperature)
    }
}

/// Spectral family with its shape parameter (everything except the cutoff).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralKind {
    /// `ω^m` with Gaussian cutoff; `m ≥ 1`.
    OhmicFamily { m: u32 },
    /// Lorentzian with half width at half maximum `width`.
    Lorentzian { width: f64 },
}

/// Family plus its cutoff / centre frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralShape {
    OhmicFamily { m: u32, cutoff: f64 },
    Lorentzian { center: f64, width: f64 },
}

impl SpectralShape {
    /// Unnormalised shape `χ(ω)/A`, clamped to zero for `ω ≤ 0`.
    fn profile(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        match *self {
            SpectralShape::OhmicFamily { m, cutoff } => {
                omega.powi(m as i32) * (-(omega / cutoff).powi(2)).exp()
            }
            SpectralShape::Lorentzian { center, width } => {
                omega * width * width / ((omega - center).powi(2) + width * width)
            }
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            SpectralShape::OhmicFamily { cutoff, .. } => cutoff,
            SpectralShape::Lorentzian { center, width } => center.abs().max(width),
        }
    }
}

/// Cutoff (Ohmic family) or centre (Lorentzian) placing the maximum at `peak`.
pub fn cutoff_from_peak(kind: SpectralKind, peak: f64) -> Result<SpectralShape, BathError> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(BathError::InvalidParameter(format!("peak frequency must be > 0, got {peak}")));
    }
    match kind {
        SpectralKind::OhmicFamily { m } => {
            if m == 0 {
                return Err(BathError::InvalidParameter("ohmic exponent m must be >= 1".into()));
            }
            Ok(SpectralShape::OhmicFamily {
                m,
                cutoff: peak * (2.0 / m as f64).sqrt(),
            })
        }
        SpectralKind::Lorentzian { width } => {
            if !(width > 0.0 && width.is_finite()) {
                return Err(BathError::InvalidParameter(format!(
                    "Lorentzian width must be > 0, got {width}"
                )));
            }
            if width >= peak {
                return Err(BathError::NoValidCenter { peak, width });
            }
            Ok(SpectralShape::Lorentzian {
                center: (peak * peak - width * width).sqrt(),
                width,
            })
        }
    }
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half_integer(m: u32) -> f64 {
    let (mut value, mut x) = if m % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target - 0.25 {
        value *= x;
        x += 1.0;
    }
    value
}

/// Closed-form `∫₀^∞ profile(ω)/ω dω`.
fn closed_form_reorganisation(shape: &SpectralShape) -> f64 {
    match *shape {
        SpectralShape::OhmicFamily { m, cutoff } => 0.5 * cutoff.powi(m as i32) * gamma_half_integer(m),
        SpectralShape::Lorentzian { center, width } => {
            width * (PI / 2.0 + (center / width).atan())
        }
    }
}

/// `∫₀^∞ profile(ω)/ω dω` by adaptive Gauss–Kronrod quadrature: a finite
/// panel up to `10·scale` plus the mapped tail `ω = U + t/(1−t)`.
fn quadrature_reorganisation(shape: &SpectralShape, peak: f64) -> f64 {
    let upper = 10.0 * shape.scale().max(peak);
    let f = |w: f64| if w > 0.0 { shape.profile(w) / w } else { 0.0 };
    // integrand limit at ω → 0⁺ is finite for every supported shape
    let body = integrate(&|w: f64| f(w.max(1e-300)), 0.0, upper, QUADRATURE_TOLERANCE);
    let tail = integrate(
        &|t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let w = upper + t / (1.0 - t);
            f(w) / (1.0 - t).powi(2)
        },
        0.0,
        1.0,
        QUADRATURE_TOLERANCE,
    );
    body + tail
}

/// Amplitude `A` such that `∫ χ/ω = λ`, cross-checked by quadrature.
pub fn normalize_to_lambda(shape: &SpectralShape, lambda: f64, peak: f64) -> Result<f64, BathError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BathError::InvalidParameter(format!(
            "reorganisation energy must be > 0, got {lambda}"
        )));
    }
    let closed = closed_form_reorganisation(shape);
    let quad = quadrature_reorganisation(shape, peak);
    if ((closed - quad) / closed).abs() > NORMALIZATION_TOLERANCE {
        return Err(BathError::NormalizationInconsistent {
            closed,
            quadrature: quad,
        });
    }
    Ok(lambda / closed)
}

/// A normalised spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub shape: SpectralShape,
    pub amplitude: f64,
    pub reorganisation: f64,
    pub peak_freq: f64,
}

impl SpectralDensity {
    pub fn new(kind: SpectralKind, reorganisation: f64, peak_freq: f64) -> Result<Self, BathError> {
        let shape = cutoff_from_peak(kind, peak_freq)?;
        let amplitude = normalize_to_lambda(&shape, reorganisation, peak_freq)?;
        Ok(Self {
            shape,
            amplitude,
            reorganisation,
            peak_freq,
        })
    }

    pub fn from_bath(kind: SpectralKind, bath: &BathParams) -> Result<Self, BathError> {
        Self::new(kind, bath.reorganisation, bath.peak_freq)
    }

    pub fn kind(&self) -> SpectralKind {
        match self.shape {
            SpectralShape::OhmicFamily { m, .. } => SpectralKind::OhmicFamily { m },
            SpectralShape::Lorentzian { width, .. } => SpectralKind::Lorentzian { width },
        }
    }

    /// `χ(ω)`, zero for `ω ≤ 0`.
    pub fn chi(&self, omega: f64) -> f64 {
        self.amplitude * self.shape.profile(omega)
    }

    /// Quadrature value of `∫₀^∞ χ(ω)/ω dω`.
    pub fn reorganisation_by_quadrature(&self) -> f64 {
        self.amplitude * quadrature_reorganisation(&self.shape, self.peak_freq)
    }
}

/// `n̄ = 1/(e^{βω} − 1)`.
pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64, BathError> {
    if !(omega > 0.0) {
        return Err(BathError::Domain(omega));
    }
    if !(temperature > 0.0) {
        return Err(BathError::InvalidParameter(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    Ok(1.0 / (units::beta(temperature) * omega).exp_m1())
}

/// `Γ(x) = πχ(x)/(e^{βx} − 1)`; zero for `x ≤ 0`.
pub fn rate_gamma(sd: &SpectralDensity, gap: f64, temperature: f64) -> f64 {
    if gap <= 0.0 {
        return 0.0;
    }
    PI * sd.chi(gap) / (units::beta(temperature) * gap).exp_m1()
}

/// `Γ′(x) = πχ(x)/(1 − e^{−βx})`; zero for `x ≤ 0`.
pub fn rate_gamma_prime(sd: &SpectralDensity, gap: f64, temperature: f64) -> f64 {
    if gap <= 0.0 {
        return 0.0;
    }
    PI * sd.chi(gap) / -(-units::beta(temperature) * gap).exp_m1()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_GAUSS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_KRONROD[7] * fc;
    let mut gauss = GK_GAUSS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let pair = f(c - x) + f(c + x);
        kronrod += GK_KRONROD[i] * pair;
        if i % 2 == 1 {
            gauss += GK_GAUSS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod integration on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut panels = vec![{
        let (v, e) = gauss_kronrod(f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            break;
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gauss_kronrod(f, lo, mid);
        let (v2, e2) = gauss_kronrod(f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    panels.iter().map(|p| p.2).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn cutoffs() {
        let s = cutoff_from_peak(SpectralKind::OhmicFamily { m: 1 }, 10.0).unwrap();
        assert!(matches!(s, SpectralShape::OhmicFamily { cutoff, .. } if (cutoff - 14.14214).abs() < 1e-5));
        let s = cutoff_from_peak(SpectralKind::OhmicFamily { m: 2 }, 7.0).unwrap();
        assert!(matches!(s, SpectralShape::OhmicFamily { cutoff, .. } if (cutoff - 7.0).abs() < 1e-14));
        let s = cutoff_from_peak(SpectralKind::Lorentzian { width: 1.5 }, 10.0).unwrap();
        assert!(matches!(s, SpectralShape::Lorentzian { center, .. } if (center - 9.88686).abs() < 1e-5));
        assert_eq!(
            cutoff_from_peak(SpectralKind::Lorentzian { width: 10.0 }, 10.0),
            Err(BathError::NoValidCenter { peak: 10.0, width: 10.0 })
        );
        assert!(cutoff_from_peak(SpectralKind::OhmicFamily { m: 0 }, 10.0).is_err());
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_half_integer(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(2) - 1.0).abs() < 1e-15);
        assert!((gamma_half_integer(3) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((gamma_half_integer(7) - 15.0 / 8.0 * PI.sqrt()).abs() < 1e-14);
        assert!((gamma_half_integer(8) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn amplitudes() {
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 1 }, 0.05, 10.0).unwrap();
        assert!(rel(sd.amplitude, 3.9894e-3) < 1e-4);
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 3 }, 0.05, 10.0).unwrap();
        assert!(rel(sd.amplitude, 2.073e-4) < 5e-4);
        let sd = SpectralDensity::new(SpectralKind::Lorentzian { width: 1.5 }, 0.05, 10.0).unwrap();
        assert!(rel(sd.amplitude, 1.1145e-2) < 1e-4);
    }

    #[test]
    fn chi_values() {
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 1 }, 0.05, 10.0).unwrap();
        assert_eq!(sd.chi(-5.0), 0.0);
        assert_eq!(sd.chi(0.0), 0.0);
        assert!(rel(sd.chi(10.0), 0.024199) < 1e-4);
        let l = SpectralDensity::new(SpectralKind::Lorentzian { width: 1.5 }, 0.05, 10.0).unwrap();
        assert_eq!(l.chi(-5.0), 0.0);
        let peak = l.chi(10.0);
        for i in 1..400 {
            assert!(l.chi(i as f64 * 0.1) <= peak + 1e-15);
        }
    }

    #[test]
    fn bose() {
        let n = bose_occupation(100.0, 300.0).unwrap();
        assert!((n - 0.085055953).abs() < 1e-8);
        assert!(bose_occupation(1e5, 300.0).unwrap() < 1e-100);
        let (w, t) = (7.3, 120.0);
        let n = bose_occupation(w, t).unwrap();
        assert!(((n + 1.0) - (units::beta(t) * w).exp() * n).abs() < 1e-12);
        assert_eq!(bose_occupation(0.0, 300.0), Err(BathError::Domain(0.0)));
    }

    #[test]
    fn rates() {
        let sd = SpectralDensity::new(SpectralKind::OhmicFamily { m: 1 }, 0.05, 10.0).unwrap();
        let g = rate_gamma(&sd, 10.0, 300.0);
        assert!((g - 0.2622).abs() < 1e-4);
        assert_eq!(rate_gamma(&sd, -10.0, 300.0), 0.0);
        assert_eq!(rate_gamma_prime(&sd, -10.0, 300.0), 0.0);
        let gp = rate_gamma_prime(&sd, 10.0, 300.0);
        assert!(rel(gp, (units::beta(300.0) * 10.0).exp() * g) < 1e-12);
        assert!(rel(gp - g, PI * sd.chi(10.0)) < 1e-12);
    }

    #[test]
    fn quadrature_basics() {
        let v = integrate(&|x: f64| x.sin(), 0.0, PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(&|x: f64| (-x * x).exp(), 0.0, 10.0, 1e-12);
        assert!((v - PI.sqrt() / 2.0).abs() < 1e-12);
    }
}
