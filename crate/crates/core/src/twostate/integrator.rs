//! Dormand–Prince 5(4) embedded Runge–Kutta pair with step-size control.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
    #[error("sample times must be non-decreasing and not before the start time")]
    BadSampleTimes,
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(tolerance: f64) -> Self {
        Self { rtol: tolerance, atol: tolerance, max_steps: 10_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th-order minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

/// Integrates `dy/dt = f(t, y)` from `t0` through each of `sample_times`,
/// landing exactly on every sample. Returns one state per sample time.
pub fn integrate_samples<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    sample_times: &[f64],
    control: StepControl,
) -> Result<(Vec<[f64; N]>, Stats), IntegrationError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut prev = t0;
    for &t in sample_times {
        if !(t >= prev) {
            return Err(IntegrationError::BadSampleTimes);
        }
        prev = t;
    }

    let mut stats = Stats::default();
    let mut out = Vec::with_capacity(sample_times.len());
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let t_last = sample_times.last().copied().unwrap_or(t0);
    let span = (t_last - t0).abs().max(1e-300);
    let mut h = initial_step(&f, t, &y, &k1, control, span);

    for &target in sample_times {
        while t < target {
            if stats.accepted + stats.rejected >= control.max_steps {
                return Err(IntegrationError::TooManySteps(control.max_steps));
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step <= 1e-14 * t.abs().max(span) && !last {
                return Err(IntegrationError::StepUnderflow { t, h: step });
            }

            let k2 = f(t + C2 * step, &axpy(&y, step, &[(A21, &k1)]));
            let k3 = f(t + C3 * step, &axpy(&y, step, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * step, &axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * step, &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + step, &axpy(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = axpy(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let t_new = if last { target } else { t + step };
            let k7 = f(t_new, &y_new);

            let mut err = 0.0f64;
            for i in 0..N {
                let e = step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = control.atol + control.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                if step <= 1e-14 * span {
                    return Err(IntegrationError::NonFinite { t });
                }
                stats.rejected += 1;
                h = step * 0.1;
                continue;
            }

            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                stats.accepted += 1;
                t = t_new;
                y = y_new;
                k1 = k7;
                // a step clipped to land on a sample says little about the next one
                h = if last && step < h { h } else { step * factor };
            } else {
                stats.rejected += 1;
                h = step * factor.min(1.0);
                if h <= 1e-14 * t.abs().max(span) {
                    return Err(IntegrationError::StepUnderflow { t, h });
                }
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    control: StepControl,
) -> Result<([f64; N], Stats), IntegrationError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let (states, stats) = integrate_samples(f, t0, y0, &[t_end], control)?;
    Ok((states[0], stats))
}

// Hairer–Nørsett–Wanner starting-step heuristic.
fn initial_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], k1: &[f64; N], control: StepControl, span: f64) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let scale = |i: usize| control.atol + control.rtol * y[i].abs();
    let norm =
        |v: &[f64; N]| (v.iter().enumerate().map(|(i, x)| (x / scale(i)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = norm(y);
    let d1 = norm(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = axpy(y, h0, &[(1.0, k1)]);
    let k = f(t + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = k[i] - k1[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}
