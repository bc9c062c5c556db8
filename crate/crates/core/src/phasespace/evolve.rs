use rayon::prelude::*;

use super::bracket::check;
use super::spectral::{add_kinetic, apply_along_p, max_abs, potential_multiplier, Plan};
use super::{BracketOrder, HamiltonianField, PhaseSpaceError, WignerGrid};

/// RK4 is stable on the imaginary axis up to `|hλ| = 2√2`; this keeps a margin.
const RK4_IMAGINARY_RADIUS: f64 = 2.5;
const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvolveOptions {
    /// Fourier modes in p with `|ℏκ|` above this separation are frozen.
    ///
    /// Mode `κ` of row `q` carries the kernel element `ρ(q − ℏκ/2, q + ℏκ/2)`,
    /// so modes far beyond the largest separation present in the state hold
    /// only rounding noise, while their multipliers dominate the step bound.
    pub coherence_cutoff: Option<f64>,
}

/// Step-size bounds for the explicit stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityLimit {
    /// `min(Δq·m/p_max, Δp/max|V′|)/4`.
    pub cfl: f64,
    /// `2.5 / ρ`, with ρ the spectral radius of the discrete generator.
    pub spectral: f64,
}

impl StabilityLimit {
    pub fn bound(&self) -> f64 {
        self.cfl.min(self.spectral)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveReport {
    pub state: WignerGrid,
    pub steps: usize,
    pub dt: f64,
    pub limit: StabilityLimit,
    /// `|Σ W(t) ΔqΔp − Σ W(0) ΔqΔp|`.
    pub normalization_drift: f64,
}

struct Generator {
    plan_p: Plan,
    plan_q: Plan,
    mult: Vec<f64>,
    inverse_mass: f64,
}

impl Generator {
    fn new(field: &HamiltonianField, w: &WignerGrid, order: BracketOrder, options: &EvolveOptions) -> Self {
        Self {
            plan_p: Plan::new(w.p.n),
            plan_q: Plan::new(w.q.n),
            mult: potential_multiplier(field, &w.p, w.hbar, 0..=order.n_max, options.coherence_cutoff),
            inverse_mass: field.inverse_mass,
        }
    }

    fn apply(&self, w: &WignerGrid, values: &[f64], out: &mut [f64]) {
        apply_along_p(&self.plan_p, values, &self.mult, out);
        if self.inverse_mass != 0.0 {
            add_kinetic(&self.plan_q, &w.q, &w.p, self.inverse_mass, values, out);
        }
    }

    fn spectral_radius(&self, w: &WignerGrid) -> f64 {
        let p_max = w.p.min.abs().max(w.p.last().abs());
        let kq_max = std::f64::consts::PI / w.q.step();
        max_abs(&self.mult) + self.inverse_mass * p_max * kq_max
    }
}

fn cfl(field: &HamiltonianField, w: &WignerGrid) -> f64 {
    let p_max = w.p.min.abs().max(w.p.last().abs());
    let advect = if field.kinetic_masked() { f64::INFINITY } else { w.q.step() / (field.inverse_mass * p_max) };
    let force_max = max_abs(field.force_derivative());
    let kick = if force_max == 0.0 { f64::INFINITY } else { w.p.step() / force_max };
    advect.min(kick) / 4.0
}

pub fn stability_limit(
    field: &HamiltonianField,
    w: &WignerGrid,
    order: BracketOrder,
    options: &EvolveOptions,
) -> Result<StabilityLimit, PhaseSpaceError> {
    check(field, w, order)?;
    let rho = Generator::new(field, w, order, options).spectral_radius(w);
    let spectral = if rho == 0.0 { f64::INFINITY } else { RK4_IMAGINARY_RADIUS / rho };
    Ok(StabilityLimit { cfl: cfl(field, w), spectral })
}

/// Advances `W` by `t` under `Ẇ = {H, W} + Moyal corrections` with classical
/// RK4. The step is `t / ⌈t/dt⌉`, so it never exceeds `dt`.
pub fn evolve_wigner(
    field: &HamiltonianField,
    w0: &WignerGrid,
    order: BracketOrder,
    t: f64,
    dt: f64,
    options: &EvolveOptions,
) -> Result<EvolveReport, PhaseSpaceError> {
    check(field, w0, order)?;
    if !(t >= 0.0 && t.is_finite() && dt > 0.0 && dt.is_finite()) {
        return Err(PhaseSpaceError::InvalidGrid(format!("duration {t} and step {dt}")));
    }
    let generator = Generator::new(field, w0, order, options);
    let rho = generator.spectral_radius(w0);
    let limit = StabilityLimit {
        cfl: cfl(field, w0),
        spectral: if rho == 0.0 { f64::INFINITY } else { RK4_IMAGINARY_RADIUS / rho },
    };
    if dt > limit.bound() {
        return Err(PhaseSpaceError::StepTooLarge { dt, bound: limit.bound() });
    }
    let steps = (t / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let initial_max = w0.max_abs();
    let initial_norm = w0.normalization();

    let len = w0.values.len();
    let mut w = w0.clone();
    let (mut k, mut acc, mut stage) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for step in 0..steps {
        // acc collects k1 + 2k2 + 2k3 + k4
        generator.apply(&w, &w.values, &mut k);
        acc.copy_from_slice(&k);
        for (c, weight) in [(0.5, 2.0), (0.5, 2.0), (1.0, 1.0)] {
            stage.par_iter_mut().zip(&w.values).zip(&k).for_each(|((s, v), d)| *s = v + c * h * d);
            generator.apply(&w, &stage, &mut k);
            acc.par_iter_mut().zip(&k).for_each(|(a, d)| *a += weight * d);
        }
        w.values.par_iter_mut().zip(&acc).for_each(|(v, a)| *v += h / 6.0 * a);
        w.time = w0.time + (step + 1) as f64 * h;
        let peak = w.max_abs();
        if !peak.is_finite() || peak > BLOW_UP_FACTOR * initial_max {
            return Err(PhaseSpaceError::Unstable { time: w.time });
        }
    }
    w.time = w0.time + t;
    let normalization_drift = (w.normalization() - initial_norm).abs();
    Ok(EvolveReport { state: w, steps, dt: h, limit, normalization_drift })
}
