//! Row and column FFT helpers for spectral derivatives on a [`WignerGrid`].

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{Axis, HamiltonianField};

pub(crate) struct Plan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    n: usize,
}

impl Plan {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), n }
    }

    /// `out = Re IFFT(i·mult ⊙ FFT(input))`.
    fn apply_imaginary_multiplier(&self, input: &[f64], mult: &[f64], out: &mut [f64], buf: &mut Vec<Complex64>) {
        buf.clear();
        buf.extend(input.iter().map(|&v| Complex64::new(v, 0.0)));
        self.fwd.process(buf);
        for (x, &m) in buf.iter_mut().zip(mult) {
            *x = Complex64::new(-m * x.im, m * x.re);
        }
        self.inv.process(buf);
        let scale = 1.0 / self.n as f64;
        for (o, x) in out.iter_mut().zip(buf.iter()) {
            *o = x.re * scale;
        }
    }
}

/// Per-(q, κ) multiplier `m` such that the potential part of the tangent
/// is `IFFT(i·m·FFT(W))` along p.
///
/// `m(q, κ) = Σ_n ħ^{2n} / (4ⁿ (2n+1)!) · V^{(2n+1)}(q) · κ^{2n+1}` over the
/// requested range of `n`; `n = 0` is the Poisson term `V′ ∂_p`, `n ≥ 1`
/// the Moyal corrections `(−1)ⁿ ħ^{2n} / (2^{2n}(2n+1)!) V^{(2n+1)} ∂_p^{2n+1}`.
/// Modes with `|ħκ| > cutoff` get no multiplier.
pub(crate) fn potential_multiplier(
    field: &HamiltonianField,
    p: &Axis,
    hbar: f64,
    orders: std::ops::RangeInclusive<u32>,
    cutoff: Option<f64>,
) -> Vec<f64> {
    let kappa = p.wavenumbers();
    let nyquist = p.nyquist();
    let coeffs: Vec<(u32, f64)> = orders
        .map(|n| {
            let fact: f64 = (1..=2 * n + 1).map(f64::from).product();
            (n, hbar.powi(2 * n as i32) / (4f64.powi(n as i32) * fact))
        })
        .collect();
    let mut out = vec![0.0; field.q.n * p.n];
    out.par_chunks_mut(p.n).enumerate().for_each(|(i, row)| {
        for (k, slot) in row.iter_mut().enumerate() {
            if Some(k) == nyquist {
                continue;
            }
            let kk = kappa[k];
            if let Some(c) = cutoff {
                if (hbar * kk).abs() > c {
                    continue;
                }
            }
            let mut acc = 0.0;
            for &(n, c) in &coeffs {
                let d = field.derivatives[(2 * n + 1) as usize][i];
                if d != 0.0 {
                    acc += c * d * kk.powi(2 * n as i32 + 1);
                }
            }
            *slot = acc;
        }
    });
    out
}

/// Applies a row-wise imaginary multiplier along p.
pub(crate) fn apply_along_p(plan: &Plan, values: &[f64], mult: &[f64], out: &mut [f64]) {
    let n = plan.n;
    out.par_chunks_mut(n)
        .zip(values.par_chunks(n))
        .zip(mult.par_chunks(n))
        .for_each_init(Vec::new, |buf, ((o, v), m)| plan.apply_imaginary_multiplier(v, m, o, buf));
}

/// Adds the kinetic term `−(p/m) ∂_q W` to `out`.
pub(crate) fn add_kinetic(plan_q: &Plan, q: &Axis, p: &Axis, inverse_mass: f64, values: &[f64], out: &mut [f64]) {
    let (nq, np) = (q.n, p.n);
    let mut mult = q.wavenumbers();
    if let Some(k) = q.nyquist() {
        mult[k] = 0.0;
    }
    let columns: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map_init(Vec::new, |buf, j| {
            let column: Vec<f64> = (0..nq).map(|i| values[i * np + j]).collect();
            let mut d = vec![0.0; nq];
            plan_q.apply_imaginary_multiplier(&column, &mult, &mut d, buf);
            let factor = -p.point(j) * inverse_mass;
            d.iter_mut().for_each(|x| *x *= factor);
            d
        })
        .collect();
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out[i * np + j] += v;
        }
    }
}

/// Largest |multiplier| over the grid: spectral radius of the potential part.
pub(crate) fn max_abs(mult: &[f64]) -> f64 {
    mult.iter().fold(0.0, |m, v| m.max(v.abs()))
}
