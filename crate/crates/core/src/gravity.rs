//! Two-ball Newtonian potential, the classical and quantum phase
//! frequencies, and the mass-placement solvers that null either of them.

use thiserror::Error;

use crate::constants::{ExperimentConfig, Side, ValidationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GravityError {
    #[error("x = {x} lies outside the open interval ({lower}, {upper}) between the balls")]
    OutsideDomain { x: f64, lower: f64, upper: f64 },
    #[error("both source masses must be positive to null a frequency (M1 = {left}, M2 = {right})")]
    NonPositiveMasses { left: f64, right: f64 },
    #[error("infeasible geometry: {0}")]
    Infeasible(#[from] ValidationError),
    #[error("root is not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },
}

/// Point-mass potential of two balls on the x-axis, the left one at
/// `-dist_left` and the right one at `+dist_right`.
///
/// Strengths are `G·m·M` in J·m, so the same type serves SI configurations
/// and nondimensionalised oracle runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialProfile {
    pub strength_left: f64,
    pub strength_right: f64,
    pub dist_left: f64,
    pub dist_right: f64,
}

impl PotentialProfile {
    pub fn new(strength_left: f64, strength_right: f64, dist_left: f64, dist_right: f64) -> Self {
        Self { strength_left, strength_right, dist_left, dist_right }
    }

    pub fn from_config(config: &ExperimentConfig) -> Self {
        let gm = config.constants.gravitational_constant * config.particle_mass();
        Self::new(gm * config.mass_left, gm * config.mass_right, config.dist_left, config.dist_right)
    }

    pub fn contains(&self, x: f64) -> bool {
        -self.dist_left < x && x < self.dist_right
    }

    fn check(&self, x: f64) -> Result<(), GravityError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GravityError::OutsideDomain { x, lower: -self.dist_left, upper: self.dist_right })
        }
    }

    /// V(x) = −k₁/(d₁+x) − k₂/(d₂−x).
    pub fn potential(&self, x: f64) -> Result<f64, GravityError> {
        self.check(x)?;
        Ok(-self.strength_left / (self.dist_left + x) - self.strength_right / (self.dist_right - x))
    }

    /// V′(x) = k₁/(d₁+x)² − k₂/(d₂−x)².
    pub fn force_derivative(&self, x: f64) -> Result<f64, GravityError> {
        self.check(x)?;
        let a = self.dist_left + x;
        let b = self.dist_right - x;
        Ok(self.strength_left / (a * a) - self.strength_right / (b * b))
    }

    /// n-th derivative of V at x; `order = 0` is the potential itself.
    pub fn derivative(&self, order: u32, x: f64) -> Result<f64, GravityError> {
        self.check(x)?;
        let a = self.dist_left + x;
        let b = self.dist_right - x;
        let n = order as i32;
        let fact: f64 = (1..=order).map(f64::from).product();
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        // d^n/dx^n (a)^-1 = (-1)^n n! a^-(n+1);  d^n/dx^n (b)^-1 = n! b^-(n+1)
        let left = -self.strength_left * sign * fact / a.powi(n + 1);
        let right = -self.strength_right * fact / b.powi(n + 1);
        Ok(left + right)
    }
}

/// Prefactor G·m·Δx/ℏ, in m²·kg⁻¹·s⁻¹.
fn phase_prefactor(config: &ExperimentConfig) -> f64 {
    config.constants.gravitational_constant * config.particle_mass() * config.arm_separation / config.constants.hbar
}

/// ω_C = (GmΔx/ℏ)(M₁/d₁² − M₂/d₂²), the phase rate generated by the
/// Poisson bracket.
pub fn omega_classical(config: &ExperimentConfig) -> f64 {
    let (d1, d2) = (config.dist_left, config.dist_right);
    phase_prefactor(config) * (config.mass_left / (d1 * d1) - config.mass_right / (d2 * d2))
}

/// ω_Q = (GmΔx/ℏ)(M₁/(d₁²−Δx²/4) − M₂/(d₂²−Δx²/4)), the phase rate of
/// Schrödinger evolution, equal to [V(Δx/2) − V(−Δx/2)]/ℏ.
pub fn omega_quantum(config: &ExperimentConfig) -> Result<f64, GravityError> {
    let half = config.arm_separation / 2.0;
    let (d1, d2) = (config.dist_left, config.dist_right);
    for d in [d1, d2] {
        if !(d > half) {
            return Err(GravityError::OutsideDomain { x: half, lower: -d1, upper: d2 });
        }
    }
    let q = half * half;
    Ok(phase_prefactor(config) * (config.mass_left / (d1 * d1 - q) - config.mass_right / (d2 * d2 - q)))
}

fn positive_masses(config: &ExperimentConfig) -> Result<(f64, f64), GravityError> {
    let (m1, m2) = (config.mass_left, config.mass_right);
    if m1 > 0.0 && m2 > 0.0 {
        Ok((m1, m2))
    } else {
        Err(GravityError::NonPositiveMasses { left: m1, right: m2 })
    }
}

/// Distance on `which` side that makes ω_C vanish, holding the other one.
///
/// Closed form of M₁/d₁² = M₂/d₂². The returned distance has been checked
/// against the ball-overlap invariants.
pub fn solve_null_distance(config: &ExperimentConfig, which: Side) -> Result<f64, GravityError> {
    let (m1, m2) = positive_masses(config)?;
    let d = match which {
        Side::Right => config.dist_left * (m2 / m1).sqrt(),
        Side::Left => config.dist_right * (m1 / m2).sqrt(),
    };
    config.with_distance(which, d)?;
    Ok(d)
}

/// Distance on `which` side that makes ω_Q vanish, holding the other one:
/// d₂² = Δx²/4 + (M₂/M₁)(d₁² − Δx²/4) and symmetrically for d₁.
pub fn solve_null_quantum_distance(config: &ExperimentConfig, which: Side) -> Result<f64, GravityError> {
    let (m1, m2) = positive_masses(config)?;
    let q = config.arm_separation * config.arm_separation / 4.0;
    let d = match which {
        Side::Right => (q + (m2 / m1) * (config.dist_left * config.dist_left - q)).sqrt(),
        Side::Left => (q + (m1 / m2) * (config.dist_right * config.dist_right - q)).sqrt(),
    };
    config.with_distance(which, d)?;
    Ok(d)
}

/// Bisection on a bracketing interval. Kept as the generic fallback for
/// geometries without a closed-form null.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64, GravityError> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(GravityError::NotBracketed { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= x_tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Numerical counterpart of [`solve_null_distance`]: bisects ω_C in the
/// free distance over `(Δx/2 + radius, upper)`.
pub fn solve_null_distance_bisection(config: &ExperimentConfig, which: Side, upper: f64) -> Result<f64, GravityError> {
    positive_masses(config)?;
    let lower = config.arm_separation / 2.0 + config.ball_radius(which);
    let f = |d: f64| {
        let mut c = config.clone();
        match which {
            Side::Left => c.dist_left = d,
            Side::Right => c.dist_right = d,
        }
        omega_classical(&c)
    };
    let d = bisect(f, lower * (1.0 + 1e-12), upper, 1e-15 * upper)?;
    config.with_distance(which, d)?;
    Ok(d)
}

/// Frequencies for a configuration, with the rounded-vs-exact `d1` comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyReport {
    pub omega_classical: f64,
    pub omega_quantum: f64,
    pub radius_left: f64,
    pub radius_right: f64,
    pub null_dist_right: Option<f64>,
    pub null_quantum_dist_right: Option<f64>,
}

pub fn frequency_report(config: &ExperimentConfig) -> Result<FrequencyReport, GravityError> {
    Ok(FrequencyReport {
        omega_classical: omega_classical(config),
        omega_quantum: omega_quantum(config)?,
        radius_left: config.ball_radius(Side::Left),
        radius_right: config.ball_radius(Side::Right),
        null_dist_right: solve_null_distance(config, Side::Right).ok(),
        null_quantum_dist_right: solve_null_quantum_distance(config, Side::Right).ok(),
    })
}
