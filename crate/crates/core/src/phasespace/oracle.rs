//! Validation run of the two-state reduction on the full phase-space
//! dynamics, in nondimensionalised units.
//!
//! The particle is held in place (kinetic term masked) and the Wigner
//! function is evolved twice: once with the Poisson bracket alone and once
//! with the truncated Moyal series. The coherence `⟨−Δx/2|ρ|Δx/2⟩` is read
//! back through the Weyl transform at a few times, and its phase rate is
//! compared with the two-state frequencies `ω_C = ΔxV′(0)/ℏ` and
//! `ω_Q = [V(Δx/2) − V(−Δx/2)]/ℏ`.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    arm_coherence, evolve_wigner, moyal_diagnostics, stability_limit, weyl_density_matrix, wigner_from_two_packets,
    Axis, BracketOrder, EvolveOptions, HamiltonianField, PacketState, PhaseSpaceError, Potential, QuadraticPotential,
    WignerGrid,
};
use crate::gravity::PotentialProfile;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle config: {0}")]
    Config(String),
    #[error(transparent)]
    PhaseSpace(#[from] PhaseSpaceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScaledPotential {
    /// `V(q) = −k₁/(d₁+q) − k₂/(d₂−q)`. Without `dist_right` the right ball
    /// is placed at the classical null `d₂ = d₁√(k₂/k₁)`.
    TwoBall { strength_left: f64, strength_right: f64, dist_left: f64, dist_right: Option<f64> },
    Quadratic {
        curvature: f64,
        slope: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_n() -> usize {
    512
}
fn default_order() -> u32 {
    3
}
fn yes() -> bool {
    true
}
fn five_percent() -> f64 {
    0.05
}
fn default_samples() -> usize {
    8
}

/// Scaled oracle configuration (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledConfig {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub particle_mass: f64,
    pub arm_separation: f64,
    pub packet_width: f64,
    #[serde(default = "half")]
    pub coherence_re: f64,
    #[serde(default)]
    pub coherence_im: f64,
    pub hold_time: f64,
    #[serde(default = "default_n")]
    pub n_q: usize,
    #[serde(default = "default_n")]
    pub n_p: usize,
    /// Defaults to `1.5Δx`.
    pub q_half_width: Option<f64>,
    /// Defaults to `8ℏ/σ`.
    pub p_half_width: Option<f64>,
    #[serde(default = "default_order")]
    pub moyal_order: u32,
    #[serde(default = "yes")]
    pub mask_kinetic: bool,
    /// Largest kernel separation evolved; defaults to `Δx + 12σ`.
    pub coherence_cutoff: Option<f64>,
    /// Defaults to the stability bound.
    pub dt: Option<f64>,
    #[serde(default = "default_samples")]
    pub phase_samples: usize,
    /// Relative tolerance on the Moyal phase rate against `ω_Q`.
    #[serde(default = "five_percent")]
    pub tolerance: f64,
    /// Resolution floor as a fraction of `|ω_Q|`.
    #[serde(default = "five_percent")]
    pub resolution_floor: f64,
    pub potential: ScaledPotential,
}

impl ScaledConfig {
    /// Two-ball geometry at three arm separations with the classical phase
    /// nulled, tuned to about one radian of quantum phase over the hold.
    pub fn reference() -> Self {
        Self {
            hbar: 1.0,
            particle_mass: 1.0,
            arm_separation: 1.0,
            packet_width: 0.08,
            coherence_re: 0.5,
            coherence_im: 0.0,
            hold_time: 1.0,
            n_q: 512,
            n_p: 512,
            q_half_width: None,
            p_half_width: None,
            moyal_order: 3,
            mask_kinetic: true,
            coherence_cutoff: None,
            dt: None,
            phase_samples: 8,
            tolerance: 0.05,
            resolution_floor: 0.05,
            potential: ScaledPotential::TwoBall {
                strength_left: 600.0,
                strength_right: 1200.0,
                dist_left: 3.0,
                dist_right: None,
            },
        }
    }

    pub fn from_toml(source: &str) -> Result<Self, OracleError> {
        let config: Self = toml::from_str(source).map_err(|e| OracleError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| OracleError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scaled config serializes")
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let positive = [
            ("hbar", self.hbar),
            ("particle_mass", self.particle_mass),
            ("arm_separation", self.arm_separation),
            ("packet_width", self.packet_width),
            ("hold_time", self.hold_time),
            ("tolerance", self.tolerance),
            ("resolution_floor", self.resolution_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OracleError::Config(format!("{name} = {v} must be positive")));
            }
        }
        if self.phase_samples == 0 {
            return Err(OracleError::Config("phase_samples must be at least 1".into()));
        }
        if let ScaledPotential::TwoBall { strength_left, strength_right, dist_left, dist_right } = self.potential {
            if !(strength_left > 0.0 && strength_right > 0.0) {
                return Err(OracleError::Config("two-ball strengths must be positive".into()));
            }
            let reach = self.q_axis_half_width();
            if dist_left <= reach || dist_right.is_some_and(|d| d <= reach) {
                return Err(OracleError::Config(format!("balls must lie outside the grid |q| <= {reach}")));
            }
        }
        Ok(())
    }

    fn q_axis_half_width(&self) -> f64 {
        self.q_half_width.unwrap_or(1.5 * self.arm_separation)
    }

    pub fn coherence(&self) -> Complex64 {
        Complex64::new(self.coherence_re, self.coherence_im)
    }

    pub fn packet_state(&self) -> PacketState {
        PacketState::new(self.arm_separation, self.packet_width, self.coherence(), self.hbar)
    }

    pub fn axes(&self) -> Result<(Axis, Axis), PhaseSpaceError> {
        let p_half = self.p_half_width.unwrap_or(8.0 * self.hbar / self.packet_width);
        Ok((Axis::symmetric(self.q_axis_half_width(), self.n_q)?, Axis::symmetric(p_half, self.n_p)?))
    }

    pub fn cutoff(&self) -> f64 {
        self.coherence_cutoff.unwrap_or(self.arm_separation + 12.0 * self.packet_width)
    }

    pub fn potential(&self) -> Box<dyn Potential> {
        match self.potential {
            ScaledPotential::TwoBall { strength_left, strength_right, dist_left, dist_right } => {
                let d2 = dist_right.unwrap_or(dist_left * (strength_right / strength_left).sqrt());
                Box::new(PotentialProfile::new(strength_left, strength_right, dist_left, d2))
            }
            ScaledPotential::Quadratic { curvature, slope, offset } => {
                Box::new(QuadraticPotential::new(curvature, slope, offset))
            }
        }
    }
}

/// Two-state frequencies of a potential at arm separation `Δx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledFrequencies {
    /// `ΔxV′(0)/ℏ`.
    pub omega_classical: f64,
    /// `[V(Δx/2) − V(−Δx/2)]/ℏ`.
    pub omega_quantum: f64,
    /// The same difference from the Taylor series truncated at `n_max`.
    pub omega_truncated: f64,
}

pub fn scaled_frequencies(
    potential: &dyn Potential,
    arm_separation: f64,
    hbar: f64,
    order: BracketOrder,
) -> Result<ScaledFrequencies, PhaseSpaceError> {
    let h = 0.5 * arm_separation;
    let at = |order: u32, q: f64| potential.derivative(order, q).ok_or(PhaseSpaceError::OutsidePotential { q });
    let omega_classical = arm_separation * at(1, 0.0)? / hbar;
    let omega_quantum = (at(0, h)? - at(0, -h)?) / hbar;
    let mut truncated = 0.0;
    let mut factorial = 1.0;
    for n in 0..=order.n_max {
        let k = 2 * n + 1;
        factorial *= if n == 0 { 1.0 } else { ((k - 1) * k) as f64 };
        truncated += 2.0 * h.powi(k as i32) / factorial * at(k, 0.0)?;
    }
    Ok(ScaledFrequencies { omega_classical, omega_quantum, omega_truncated: truncated / hbar })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub frequencies: ScaledFrequencies,
    pub moyal_phase_rate: f64,
    pub poisson_phase_rate: f64,
    /// Absolute floor `resolution_floor · |ω_Q|`.
    pub resolution_floor: f64,
    pub term_norms: Vec<f64>,
    pub tail_ratio: f64,
    pub initial_coherence: Complex64,
    pub normalization_drift: f64,
    pub steps: usize,
    pub dt: f64,
    /// `(t, Moyal phase, Poisson phase)` of the coherence, unwrapped.
    pub phases: Vec<(f64, f64, f64)>,
    pub checks: Vec<OracleCheck>,
    /// Wigner function at the end of the Moyal run.
    pub final_state: WignerGrid,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let f = &self.frequencies;
        let mut s = String::new();
        let _ = writeln!(s, "omega_classical = {:e}", f.omega_classical);
        let _ = writeln!(s, "omega_quantum = {:e}", f.omega_quantum);
        let _ = writeln!(s, "omega_truncated = {:e}", f.omega_truncated);
        let _ = writeln!(s, "moyal_phase_rate = {:e}", self.moyal_phase_rate);
        let _ = writeln!(s, "poisson_phase_rate = {:e}", self.poisson_phase_rate);
        let _ = writeln!(s, "resolution_floor = {:e}", self.resolution_floor);
        let norms: Vec<String> = self.term_norms.iter().map(|n| format!("{n:e}")).collect();
        let _ = writeln!(s, "moyal_term_norms = [{}]", norms.join(", "));
        let _ = writeln!(s, "truncation_tail_estimate = {:e}", self.tail_ratio);
        let _ = writeln!(s, "initial_coherence_re = {:e}", self.initial_coherence.re);
        let _ = writeln!(s, "initial_coherence_im = {:e}", self.initial_coherence.im);
        let _ = writeln!(s, "normalization_drift = {:e}", self.normalization_drift);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "dt = {:e}", self.dt);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "check.{} = {} (value {:e}, limit {:e})",
                c.name,
                if c.pass { "pass" } else { "fail" },
                c.value,
                c.limit
            );
        }
        let _ = writeln!(s, "result = {}", if self.passed() { "pass" } else { "fail" });
        s
    }

    pub fn phases_csv(&self) -> String {
        let mut s = String::from("t,moyal_phase,poisson_phase\n");
        for (t, m, p) in &self.phases {
            let _ = writeln!(s, "{t},{m},{p}");
        }
        s
    }
}

struct Run {
    state: WignerGrid,
    phases: Vec<f64>,
    drift: f64,
    steps: usize,
    dt: f64,
}

fn coherence_at_centres(w: &WignerGrid, dx: f64) -> Result<Complex64, PhaseSpaceError> {
    weyl_density_matrix(w, -0.5 * dx, 0.5 * dx)
}

fn run_phases(
    config: &ScaledConfig,
    field: &HamiltonianField,
    w0: &WignerGrid,
    order: BracketOrder,
    times: &[f64],
) -> Result<Run, PhaseSpaceError> {
    let options = EvolveOptions { coherence_cutoff: Some(config.cutoff()) };
    let bound = stability_limit(field, w0, order, &options)?.bound();
    let dt = config.dt.unwrap_or(bound);
    let reference = coherence_at_centres(w0, config.arm_separation)?;
    let mut w = w0.clone();
    let (mut phases, mut last, mut steps, mut used_dt) = (Vec::with_capacity(times.len()), 0.0, 0, dt);
    let mut previous = 0.0;
    for &t in times {
        let report = evolve_wigner(field, &w, order, t - last, dt, &options)?;
        steps += report.steps;
        used_dt = report.dt;
        w = report.state;
        last = t;
        let raw = (coherence_at_centres(&w, config.arm_separation)? * reference.conj()).arg();
        let turns = ((previous - raw) / std::f64::consts::TAU).round();
        let unwrapped = raw + turns * std::f64::consts::TAU;
        phases.push(unwrapped);
        previous = unwrapped;
    }
    let drift = (w.normalization() - w0.normalization()).abs();
    Ok(Run { state: w, phases, drift, steps, dt: used_dt })
}

/// Least-squares slope of `phase = ω t` through the origin.
fn phase_rate(times: &[f64], phases: &[f64]) -> f64 {
    let num: f64 = times.iter().zip(phases).map(|(t, p)| t * p).sum();
    let den: f64 = times.iter().map(|t| t * t).sum();
    num / den
}

pub fn run_oracle(config: &ScaledConfig) -> Result<OracleReport, OracleError> {
    config.validate()?;
    let order = BracketOrder::new(config.moyal_order);
    let potential = config.potential();
    let state = config.packet_state();
    let (q, p) = config.axes()?;
    let w0 = wigner_from_two_packets(q, p, &state)?;
    let mass = (!config.mask_kinetic).then_some(config.particle_mass);
    let field = HamiltonianField::sample(potential.as_ref(), q, order.required_derivative_order(), mass)?;
    let frequencies = scaled_frequencies(potential.as_ref(), config.arm_separation, config.hbar, order)?;
    let diagnostics = moyal_diagnostics(&field, &w0, order)?;
    let initial_coherence = arm_coherence(&w0, config.arm_separation, config.packet_width)?;

    let times: Vec<f64> =
        (1..=config.phase_samples).map(|k| config.hold_time * k as f64 / config.phase_samples as f64).collect();
    let moyal = run_phases(config, &field, &w0, order, &times)?;
    let poisson = run_phases(config, &field, &w0, BracketOrder::POISSON, &times)?;
    let moyal_rate = phase_rate(&times, &moyal.phases);
    let poisson_rate = phase_rate(&times, &poisson.phases);

    let floor = config.resolution_floor * frequencies.omega_quantum.abs();
    let mut checks = Vec::new();
    let moyal_error = if frequencies.omega_quantum != 0.0 {
        (moyal_rate - frequencies.omega_quantum).abs() / frequencies.omega_quantum.abs()
    } else {
        moyal_rate.abs()
    };
    checks.push(OracleCheck {
        name: "moyal_rate_vs_omega_quantum",
        value: moyal_error,
        limit: config.tolerance,
        pass: moyal_error <= config.tolerance,
    });
    let poisson_error = (poisson_rate - frequencies.omega_classical).abs();
    checks.push(OracleCheck {
        name: "poisson_rate_vs_omega_classical",
        value: poisson_error,
        limit: floor,
        pass: poisson_error <= floor,
    });
    if matches!(config.potential, ScaledPotential::Quadratic { .. }) {
        let gap = (moyal_rate - poisson_rate).abs();
        checks.push(OracleCheck { name: "quadratic_collapse", value: gap, limit: 1e-10, pass: gap <= 1e-10 });
    }
    let drift = moyal.drift.max(poisson.drift);
    checks.push(OracleCheck { name: "normalization", value: drift, limit: 1e-5, pass: drift <= 1e-5 });
    let coherence_error = (initial_coherence - config.coherence()).norm();
    checks.push(OracleCheck {
        name: "initial_arm_coherence",
        value: coherence_error,
        limit: 1e-3,
        pass: coherence_error <= 1e-3,
    });

    let phases = times.iter().enumerate().map(|(k, &t)| (t, moyal.phases[k], poisson.phases[k])).collect();
    Ok(OracleReport {
        frequencies,
        moyal_phase_rate: moyal_rate,
        poisson_phase_rate: poisson_rate,
        resolution_floor: floor,
        term_norms: diagnostics.term_norms,
        tail_ratio: diagnostics.tail_ratio,
        initial_coherence,
        normalization_drift: drift,
        steps: moyal.steps,
        dt: moyal.dt,
        phases,
        checks,
        final_state: moyal.state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_frequency_converges() {
        let config = ScaledConfig::reference();
        let v = config.potential();
        let f0 = scaled_frequencies(v.as_ref(), 1.0, 1.0, BracketOrder::POISSON).unwrap();
        let f3 = scaled_frequencies(v.as_ref(), 1.0, 1.0, BracketOrder::new(3)).unwrap();
        assert_eq!(f0.omega_truncated, f0.omega_classical);
        assert!(f0.omega_classical.abs() < 1e-12 * f0.omega_quantum.abs());
        assert!((f3.omega_truncated - f3.omega_quantum).abs() < 1e-3 * f3.omega_quantum.abs());
        assert!(f3.omega_quantum > 0.9 && f3.omega_quantum < 1.1, "{}", f3.omega_quantum);
    }

    #[test]
    fn quadratic_frequencies_agree() {
        let q = QuadraticPotential::new(3.0, 0.4, 0.0);
        let f = scaled_frequencies(&q, 1.0, 1.0, BracketOrder::new(3)).unwrap();
        assert!((f.omega_quantum - 0.4).abs() < 1e-15 && (f.omega_classical - 0.4).abs() < 1e-15);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let config = ScaledConfig::reference();
        assert_eq!(ScaledConfig::from_toml(&config.to_toml()).unwrap(), config);
        let minimal = "arm_separation = 1.0\npacket_width = 0.08\nhold_time = 0.5\n\
                       [potential]\nkind = \"quadratic\"\ncurvature = 2.0\nslope = 0.3\n";
        let parsed = ScaledConfig::from_toml(minimal).unwrap();
        assert_eq!(parsed.n_q, 512);
        assert_eq!(parsed.moyal_order, 3);
        assert!(ScaledConfig::from_toml(&format!("{minimal}bogus = 1\n")).is_err());
        let inside = minimal.replace(
            "kind = \"quadratic\"\ncurvature = 2.0\nslope = 0.3",
            "kind = \"two-ball\"\nstrength_left = 1.0\nstrength_right = 1.0\ndist_left = 1.2",
        );
        assert!(matches!(ScaledConfig::from_toml(&inside), Err(OracleError::Config(_))));
    }

    #[test]
    fn small_quadratic_run_collapses() {
        let mut config = ScaledConfig::reference();
        config.n_q = 128;
        config.n_p = 128;
        config.hold_time = 0.5;
        config.phase_samples = 2;
        config.potential = ScaledPotential::Quadratic { curvature: 1.5, slope: 0.8, offset: 0.0 };
        let report = run_oracle(&config).unwrap();
        assert_eq!(report.moyal_phase_rate, report.poisson_phase_rate);
        assert!(report.passed(), "{}", report.to_text());
        assert!(report.to_text().contains("truncation_tail_estimate"));
    }
}
