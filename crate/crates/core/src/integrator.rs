//! Adaptive Dormand–Prince 5(4) integrator for complex matrix ODEs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("step size underflow at t = {t} ps (h = {h:e}); the problem is too stiff for an explicit method")]
    StepUnderflow { t: f64, h: f64 },
    #[error("output times must be non-decreasing and start at or after t0")]
    BadOutputTimes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel: 1e-9, abs: 1e-12 }
    }
}

type State = DMatrix<Complex64>;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights are the last row of A; the error weights are b5 − b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn error_norm(err: &State, y0: &State, y1: &State, tol: Tolerances) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let scale = tol.abs + tol.rel * a.norm().max(b.norm());
            (e.norm() / scale).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Integrate `y′ = f(t, y)` from `(t0, y0)` and return the state at each
/// requested output time. Steps are clipped to land exactly on outputs.
pub fn integrate<F>(
    f: F,
    t0: f64,
    y0: State,
    outputs: &[f64],
    tol: Tolerances,
) -> Result<Vec<State>, IntegratorError>
where
    F: Fn(f64, &State) -> State,
{
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|&t| t < t0) {
        return Err(IntegratorError::BadOutputTimes);
    }
    let span = outputs.last().map_or(0.0, |&t| t - t0).max(f64::MIN_POSITIVE);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(&y, &k1, tol).min(span);
    let mut out = Vec::with_capacity(outputs.len());

    for &target in outputs {
        while t < target {
            let remaining = target - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step < 1e-14 * span.max(1.0) && !clipped {
                return Err(IntegratorError::StepUnderflow { t, h: step });
            }

            let mut ks: Vec<State> = Vec::with_capacity(7);
            ks.push(k1.clone());
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in ks.iter().enumerate() {
                    let a = A[s][j];
                    if a != 0.0 {
                        ys += kj * Complex64::new(step * a, 0.0);
                    }
                }
                ks.push(f(t + C[s] * step, &ys));
            }
            // stage 7 was evaluated at the 5th-order solution
            let mut y_new = y.clone();
            for (j, kj) in ks.iter().take(6).enumerate() {
                let b = A[6][j];
                if b != 0.0 {
                    y_new += kj * Complex64::new(step * b, 0.0);
                }
            }
            let mut err = State::zeros(y.nrows(), y.ncols());
            for (j, kj) in ks.iter().enumerate() {
                if E[j] != 0.0 {
                    err += kj * Complex64::new(step * E[j], 0.0);
                }
            }
            let norm = error_norm(&err, &y, &y_new, tol);

            if norm <= 1.0 {
                t = if clipped { target } else { t + step };
                y = y_new;
                k1 = ks.swap_remove(6);
                let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                // a clipped step says nothing about how large h may grow
                if !clipped || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * (0.9 * norm.powf(-0.2)).clamp(0.1, 1.0);
                if h < 1e-14 * span.max(1.0) {
                    return Err(IntegratorError::StepUnderflow { t, h });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step(y: &State, dy: &State, tol: Tolerances) -> f64 {
    let scale = |m: &State| {
        let n = m.len() as f64;
        (m.iter()
            .zip(y.iter())
            .map(|(v, yi)| (v.norm() / (tol.abs + tol.rel * yi.norm())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scale(y);
    let d1 = scale(dy);
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y0 = State::from_element(1, 1, Complex64::new(1.0, 0.0));
        let times: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let ys = integrate(|_, y| -y, 0.0, y0, &times, Tolerances::default()).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[(0, 0)].re - (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_rotation() {
        // y' = -i ω y
        let w = 7.0;
        let y0 = State::from_element(1, 1, Complex64::new(1.0, 0.0));
        let times = [0.0, 1.0, 2.0];
        let ys = integrate(
            |_, y| y * Complex64::new(0.0, -w),
            0.0,
            y0,
            &times,
            Tolerances::default(),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&ys) {
            let exact = Complex64::new(0.0, -w * t).exp();
            assert!((y[(0, 0)] - exact).norm() < 1e-8);
        }
    }

    #[test]
    fn rejects_unordered_outputs() {
        let y0 = State::zeros(1, 1);
        assert_eq!(
            integrate(|_, y| y.clone(), 0.0, y0, &[1.0, 0.5], Tolerances::default()),
            Err(IntegratorError::BadOutputTimes)
        );
    }
}
