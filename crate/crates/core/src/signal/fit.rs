//! Bounded least-squares fit of `s(t) = 1/2 + (c/2) e^{−λt} cos(ωt + φ)`.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use super::{periodogram_peak, FringeRecord, SignalError};

pub const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-13;

/// Optional starting values; missing entries come from the periodogram and
/// the log-envelope regression.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitGuess {
    pub omega: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub lambda_hat: f64,
    pub omega_hat: f64,
    pub contrast_hat: f64,
    pub phase_hat: f64,
    /// Gauss–Newton covariance of `(λ, ω, c)`, in that order.
    pub covariance: [[f64; 3]; 3],
    /// `sqrt(Σ r²)`.
    pub residual_norm: f64,
    pub iterations: usize,
    /// The optimum sits on `λ = 0` with the gradient pushing below it.
    pub lambda_at_bound: bool,
    pub samples: usize,
}

impl FitResult {
    pub fn stderr_lambda(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn stderr_omega(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    pub fn stderr_contrast(&self) -> f64 {
        self.covariance[2][2].sqrt()
    }

    /// Flat `key = value` block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lambda_hat = {}", self.lambda_hat);
        let _ = writeln!(s, "omega_hat = {}", self.omega_hat);
        let _ = writeln!(s, "contrast_hat = {}", self.contrast_hat);
        let _ = writeln!(s, "phase_hat = {}", self.phase_hat);
        let _ = writeln!(s, "stderr_lambda = {}", self.stderr_lambda());
        let _ = writeln!(s, "stderr_omega = {}", self.stderr_omega());
        let _ = writeln!(s, "stderr_contrast = {}", self.stderr_contrast());
        let names = ["lambda", "omega", "contrast"];
        for (i, a) in names.iter().enumerate() {
            for (j, b) in names.iter().enumerate() {
                let _ = writeln!(s, "cov_{a}_{b} = {}", self.covariance[i][j]);
            }
        }
        let _ = writeln!(s, "residual_norm = {}", self.residual_norm);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "lambda_at_bound = {}", self.lambda_at_bound);
        let _ = writeln!(s, "samples = {}", self.samples);
        s
    }
}

pub fn fringe_model(t: f64, contrast: f64, lambda: f64, omega: f64, phase: f64) -> f64 {
    0.5 + 0.5 * contrast * (-lambda * t).exp() * (omega * t + phase).cos()
}

/// Parameters in optimisation order `(c, λ, ω, φ)`.
type Params = Vector4<f64>;

fn residuals(times: &[f64], y: &[f64], p: &Params) -> Vec<f64> {
    times.iter().zip(y).map(|(&t, &y)| fringe_model(t, p[0], p[1], p[2], p[3]) - y).collect()
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// `JᵀJ` and `Jᵀr`.
fn normal_equations(times: &[f64], r: &[f64], p: &Params) -> (Matrix4<f64>, Vector4<f64>) {
    let (c, lambda, omega, phase) = (p[0], p[1], p[2], p[3]);
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for (&t, &ri) in times.iter().zip(r) {
        let env = 0.5 * (-lambda * t).exp();
        let (sin, cos) = (omega * t + phase).sin_cos();
        let row = Vector4::new(env * cos, -t * c * env * cos, -t * c * env * sin, -c * env * sin);
        jtj += row * row.transpose();
        jtr += row * ri;
    }
    (jtj, jtr)
}

/// Best `(c, φ)` for fixed `(λ, ω)`: linear least squares in the
/// quadrature amplitudes.
fn linear_amplitudes(times: &[f64], y: &[f64], lambda: f64, omega: f64) -> (f64, f64) {
    let mut m = Matrix2::zeros();
    let mut v = Vector2::zeros();
    for (&t, &yi) in times.iter().zip(y) {
        let env = 0.5 * (-lambda * t).exp();
        let (sin, cos) = (omega * t).sin_cos();
        let row = Vector2::new(env * cos, -env * sin);
        m += row * row.transpose();
        v += row * (yi - 0.5);
    }
    let ab = m.try_inverse().map(|inv| inv * v).unwrap_or_else(Vector2::zeros);
    // c cos(ωt + φ) = c cos φ cos ωt − c sin φ sin ωt
    (ab[0].hypot(ab[1]), ab[1].atan2(ab[0]))
}

/// Decay seed: slope of log half-range per fringe period.
fn envelope_decay(times: &[f64], y: &[f64], omega: f64) -> f64 {
    let period = TAU / omega;
    let t0 = times[0];
    let mut points = Vec::new();
    let mut k = 0;
    loop {
        let (lo, hi) = (t0 + k as f64 * period, t0 + (k + 1) as f64 * period);
        if hi > times[times.len() - 1] + 1e-12 * period {
            break;
        }
        let window: Vec<f64> = times.iter().zip(y).filter(|(t, _)| **t >= lo && **t < hi).map(|(_, v)| *v).collect();
        if window.len() >= 3 {
            let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = window.iter().copied().fold(f64::INFINITY, f64::min);
            let amp = 0.5 * (max - min);
            if amp > 0.0 {
                points.push((0.5 * (lo + hi), amp.ln()));
            }
        }
        k += 1;
    }
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let (mt, ml) = points.iter().fold((0.0, 0.0), |(a, b), (t, l)| (a + t / n, b + l / n));
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), (t, l)| (a + (t - mt) * (l - ml), b + (t - mt).powi(2)));
    (-num / den).max(0.0)
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Fits the damped fringe with projected Levenberg–Marquardt, `λ ≥ 0`.
pub fn fit_damped_fringe(record: &FringeRecord, guess: Option<FitGuess>) -> Result<FitResult, SignalError> {
    record.validate()?;
    let n = record.times.len();
    if n < 6 {
        return Err(SignalError::InvalidRecord(format!("{n} samples; a fringe fit needs at least 6")));
    }
    let guess = guess.unwrap_or_default();
    // fit on times measured from the first sample, report back in absolute time
    let t0 = record.times[0];
    let times: Vec<f64> = record.times.iter().map(|t| t - t0).collect();
    let y = &record.signal;

    let omega0 = match guess.omega {
        Some(w) => w.abs(),
        None => periodogram_peak(&times, y)
            .ok_or_else(|| SignalError::NonConvergence { iterations: 0, detail: "record carries no fringe".into() })?,
    };
    let periods = record.span() * omega0 / TAU;
    if !(periods >= 2.0) {
        return Err(SignalError::InsufficientSpan { periods });
    }
    let lambda0 = guess.lambda.map(|l| l.max(0.0)).unwrap_or_else(|| envelope_decay(&times, y, omega0));
    let (c0, phi0) = linear_amplitudes(&times, y, lambda0, omega0);
    let mut p: Params = Vector4::new(c0, lambda0, omega0, phi0);

    let mut r = residuals(&times, y, &p);
    let mut current = cost(&r);
    let mut damping = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&times, &r, &p);
        let mut improved = false;
        while damping < 1e20 {
            let mut a = jtj;
            for i in 0..4 {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-300);
            }
            let Some(delta) = a.cholesky().map(|ch| ch.solve(&(-jtr))) else {
                damping *= 4.0;
                continue;
            };
            let mut trial = p + delta;
            trial[1] = trial[1].max(0.0);
            let trial_r = residuals(&times, y, &trial);
            let trial_cost = cost(&trial_r);
            if trial_cost < current {
                let small = (0..4).all(|i| (trial[i] - p[i]).abs() <= STEP_TOLERANCE * (p[i].abs() + 1e-9));
                p = trial;
                r = trial_r;
                current = trial_cost;
                damping = (damping / 3.0).max(1e-12);
                improved = true;
                converged = small;
                break;
            }
            damping *= 4.0;
        }
        if !improved {
            // no step lowers the cost any further: a numerical minimum
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(SignalError::NonConvergence {
            iterations,
            detail: format!("parameters (c, lambda, omega, phi) = ({}, {}, {}, {})", p[0], p[1], p[2], p[3]),
        });
    }

    let (jtj, jtr) = normal_equations(&times, &r, &p);
    let lambda_at_bound = p[1] == 0.0 && jtr[1] > 0.0;
    let inverse = jtj.try_inverse().ok_or_else(|| SignalError::NonConvergence {
        iterations,
        detail: "singular normal matrix at the optimum".into(),
    })?;
    let dof = (n - 4) as f64;
    let mut cov4 = (inverse + inverse.transpose()) * (current / dof);

    let (mut c, lambda, mut omega, mut phi) = (p[0], p[1], p[2], p[3]);
    if c < 0.0 {
        c = -c;
        phi += PI;
        for i in 0..4 {
            if i != 0 {
                cov4[(0, i)] = -cov4[(0, i)];
                cov4[(i, 0)] = -cov4[(i, 0)];
            }
        }
    }
    if omega < 0.0 {
        omega = -omega;
        phi = -phi;
        for i in 0..4 {
            if i != 2 {
                cov4[(2, i)] = -cov4[(2, i)];
                cov4[(i, 2)] = -cov4[(i, 2)];
            }
        }
    }
    // shift the phase reference from the first sample back to t = 0
    phi -= omega * t0;
    let contrast = c * (lambda * t0).exp();
    let order = [1, 2, 0];
    let mut covariance = [[0.0; 3]; 3];
    for (i, &a) in order.iter().enumerate() {
        for (j, &b) in order.iter().enumerate() {
            covariance[i][j] = cov4[(a, b)];
        }
    }
    let scale = (lambda * t0).exp();
    // contrast was fitted at the first sample time; rescale its row and column
    for row in covariance.iter_mut() {
        row[2] *= scale;
    }
    for v in covariance[2].iter_mut() {
        *v *= scale;
    }
    Ok(FitResult {
        lambda_hat: lambda,
        omega_hat: omega,
        contrast_hat: contrast,
        phase_hat: wrap_phase(phi),
        covariance,
        residual_norm: (2.0 * current).sqrt(),
        iterations,
        lambda_at_bound,
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize_record, synthesize_record_stream, uniform_times};
    use crate::twostate::DynamicsModel;

    #[test]
    fn noiseless_tilloy_diosi_recovery() {
        let (lambda, w) = (0.05, 0.22);
        let model = DynamicsModel::TilloyDiosi { lambda, omega_g: w };
        let record = synthesize_record(&model, &uniform_times(120.0, 241), 0.0, 0).unwrap();
        let fit = fit_damped_fringe(&record, None).unwrap();
        assert!((fit.lambda_hat - lambda).abs() < 1e-6 * lambda, "{}", fit.to_text());
        assert!((fit.omega_hat - w).abs() < 1e-6 * w);
        assert!((fit.contrast_hat - 1.0).abs() < 1e-6);
        assert!(fit.phase_hat.abs() < 1e-6);
    }

    #[test]
    fn undamped_fringe_sits_at_the_bound() {
        let model = DynamicsModel::Schrodinger { omega_q: 0.22 };
        let record = synthesize_record(&model, &uniform_times(100.0, 201), 0.0, 0).unwrap();
        let fit = fit_damped_fringe(&record, None).unwrap();
        assert!(fit.lambda_hat < 1e-8, "{}", fit.to_text());
        assert!((fit.omega_hat - 0.22).abs() < 1e-9);
    }

    #[test]
    fn offset_times_report_phase_at_zero() {
        let (lambda, w) = (0.02, 0.3);
        let model = DynamicsModel::TilloyDiosi { lambda, omega_g: w };
        let times: Vec<f64> = uniform_times(80.0, 161).into_iter().map(|t| t + 15.0).collect();
        let record = synthesize_record(&model, &times, 0.0, 0).unwrap();
        let fit = fit_damped_fringe(&record, None).unwrap();
        assert!((fit.contrast_hat - 1.0).abs() < 1e-6 && fit.phase_hat.abs() < 1e-6, "{}", fit.to_text());
    }

    #[test]
    fn covariance_is_calibrated() {
        let model = DynamicsModel::TilloyDiosi { lambda: 0.05, omega_g: 0.22 };
        let times = uniform_times(100.0, 200);
        let hits = (0..50)
            .filter(|&k| {
                let record = synthesize_record_stream(&model, &times, 0.01, 2024, k).unwrap();
                let fit = fit_damped_fringe(&record, None).unwrap();
                (fit.omega_hat - 0.22).abs() <= 3.0 * fit.stderr_omega()
            })
            .count();
        assert!(hits >= 45, "{hits}/50");
    }

    #[test]
    fn degenerate_records() {
        let times = uniform_times(100.0, 101);
        let flat = FringeRecord {
            times: times.clone(),
            signal: vec![0.5; 101],
            population: None,
            model: "constant".into(),
            seed: 0,
            noise_sd: 0.0,
        };
        assert!(matches!(
            fit_damped_fringe(&flat, None),
            Err(SignalError::NonConvergence { .. } | SignalError::InsufficientSpan { .. })
        ));
        let short =
            synthesize_record(&DynamicsModel::Schrodinger { omega_q: 0.22 }, &uniform_times(30.0, 61), 0.0, 0).unwrap();
        let guess = FitGuess { omega: Some(0.22), lambda: None };
        assert!(matches!(fit_damped_fringe(&short, Some(guess)), Err(SignalError::InsufficientSpan { .. })));
    }

    #[test]
    fn report_lists_covariance() {
        let model = DynamicsModel::TilloyDiosi { lambda: 0.05, omega_g: 0.22 };
        let record = synthesize_record(&model, &uniform_times(100.0, 200), 0.01, 5).unwrap();
        let fit = fit_damped_fringe(&record, None).unwrap();
        let text = fit.to_text();
        assert!(text.contains("cov_lambda_omega = "));
        assert!(text.contains("stderr_omega = "));
        for i in 0..3 {
            assert!(fit.covariance[i][i] >= 0.0);
            for j in 0..3 {
                assert_eq!(fit.covariance[i][j], fit.covariance[j][i]);
            }
        }
    }
}
