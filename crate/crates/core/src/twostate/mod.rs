//! Reduced dynamics of the interferometer on the two arm states |L⟩, |R⟩.
//!
//! A state is stored as `(ρ_LL, ρ_LR)`; `ρ_RR = 1 − ρ_LL` and
//! `ρ_RL = conj(ρ_LR)` are derived, so trace and hermiticity hold by
//! construction. Every model here keeps the populations fixed except the
//! general linear one, whose population drift is driven by the coherence.

mod integrator;
pub mod spectral;

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub use integrator::{integrate, integrate_samples, IntegrationError, Stats, StepControl};
pub use spectral::{spectral_solution, spectral_trajectory, CoherenceMatrixA, SolutionForm};

/// Integrator tolerance used when callers do not pick one.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoStateError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("tolerance must lie in (0, 1e-3], got {0}")]
    InvalidTolerance(f64),
    #[error("evolution time must be non-negative and finite, got {0}")]
    InvalidTime(f64),
    #[error("no closed-form coherence for the {0} model; use the spectral solution")]
    Unsupported(&'static str),
    #[error("no steady state without dephasing (lambda = {0})")]
    NoLimit(f64),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    rho_ll: f64,
    rho_lr: Complex64,
}

impl TwoLevelState {
    /// Validated constructor: 0 ≤ ρ_LL ≤ 1 and |ρ_LR|² ≤ ρ_LL(1 − ρ_LL).
    pub fn new(rho_ll: f64, rho_lr: Complex64) -> Result<Self, TwoStateError> {
        let state = Self { rho_ll, rho_lr };
        if !(rho_ll.is_finite() && rho_lr.re.is_finite() && rho_lr.im.is_finite()) {
            return Err(TwoStateError::InvalidState("non-finite entries".into()));
        }
        if !(0.0..=1.0).contains(&rho_ll) {
            return Err(TwoStateError::InvalidState(format!("rho_LL = {rho_ll} outside [0, 1]")));
        }
        let excess = state.positivity_excess();
        if excess > 4.0 * f64::EPSILON {
            return Err(TwoStateError::InvalidState(format!("|rho_LR|^2 exceeds rho_LL * rho_RR by {excess:e}")));
        }
        Ok(state)
    }

    /// Unchecked constructor for integrator output, which may drift
    /// slightly outside the physical set.
    pub fn from_raw(rho_ll: f64, rho_lr: Complex64) -> Self {
        Self { rho_ll, rho_lr }
    }

    /// |+⟩⟨+| with |+⟩ = (|L⟩ + |R⟩)/√2.
    pub fn plus() -> Self {
        Self { rho_ll: 0.5, rho_lr: Complex64::new(0.5, 0.0) }
    }

    pub fn rho_ll(&self) -> f64 {
        self.rho_ll
    }

    pub fn rho_rr(&self) -> f64 {
        1.0 - self.rho_ll
    }

    pub fn rho_lr(&self) -> Complex64 {
        self.rho_lr
    }

    pub fn rho_rl(&self) -> Complex64 {
        self.rho_lr.conj()
    }

    /// Amount by which positive semidefiniteness is violated (≤ 0 when
    /// the state is physical).
    pub fn positivity_excess(&self) -> f64 {
        let below = (-self.rho_ll).max(self.rho_ll - 1.0).max(0.0);
        (self.rho_lr.norm_sqr() - self.rho_ll * (1.0 - self.rho_ll)).max(below)
    }

    fn to_vector(self) -> [f64; 3] {
        [self.rho_ll, self.rho_lr.re, self.rho_lr.im]
    }

    fn from_vector(v: [f64; 3]) -> Self {
        Self { rho_ll: v[0], rho_lr: Complex64::new(v[1], v[2]) }
    }
}

/// Time derivative of a [`TwoLevelState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTangent {
    pub rho_ll: f64,
    pub rho_lr: Complex64,
}

/// Linear generator of the coherence, with the structural constraints of
/// the classical-consistency argument built in: the diagonal coefficients
/// vanish and `a_RL` is the mirror of `a_LR`, so only three complex numbers
/// remain.
///
/// `ρ̇_LL = 2[Re(a_LR) Re(ρ_LR) − Im(a_LR) Im(ρ_LR)]`,
/// `ρ̇_LR = b_LR ρ_LR + b_RL conj(ρ_LR)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralLinear {
    pub a_lr: Complex64,
    pub b_lr: Complex64,
    pub b_rl: Complex64,
}

impl GeneralLinear {
    pub fn new(a_lr: Complex64, b_lr: Complex64, b_rl: Complex64) -> Self {
        Self { a_lr, b_lr, b_rl }
    }

    /// Tilloy–Diósi coherence with population couplings `μ₁ = Re(a_LR)`,
    /// `μ₂ = Im(a_LR)`.
    pub fn dephasing_with_drift(lambda: f64, omega_g: f64, mu1: f64, mu2: f64) -> Self {
        Self::new(Complex64::new(mu1, mu2), Complex64::new(-lambda, omega_g), Complex64::new(0.0, 0.0))
    }

    /// `a_RL` implied by the hermiticity constraint.
    pub fn a_rl(&self) -> Complex64 {
        self.a_lr.conj()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicsModel {
    Schrodinger { omega_q: f64 },
    ClassicalPoisson { omega_c: f64 },
    TilloyDiosi { lambda: f64, omega_g: f64 },
    GeneralLinear(GeneralLinear),
}

impl DynamicsModel {
    pub fn name(&self) -> &'static str {
        match self {
            DynamicsModel::Schrodinger { .. } => "schrodinger",
            DynamicsModel::ClassicalPoisson { .. } => "classical",
            DynamicsModel::TilloyDiosi { .. } => "tilloy-diosi",
            DynamicsModel::GeneralLinear(_) => "general",
        }
    }

    pub fn validate(&self) -> Result<(), TwoStateError> {
        let finite = |v: f64| v.is_finite();
        let ok = match *self {
            DynamicsModel::Schrodinger { omega_q } => finite(omega_q),
            DynamicsModel::ClassicalPoisson { omega_c } => finite(omega_c),
            DynamicsModel::TilloyDiosi { lambda, omega_g } => {
                if lambda < 0.0 {
                    return Err(TwoStateError::InvalidModel(format!(
                        "dephasing rate must be non-negative, got {lambda}"
                    )));
                }
                finite(lambda) && finite(omega_g)
            }
            DynamicsModel::GeneralLinear(g) => [g.a_lr, g.b_lr, g.b_rl].iter().all(|z| finite(z.re) && finite(z.im)),
        };
        if ok {
            Ok(())
        } else {
            Err(TwoStateError::InvalidModel(format!("non-finite parameter in {self}")))
        }
    }

    /// Coherence generator `(decay, frequency)` for the models whose
    /// coherence obeys `ρ̇_LR = (−λ + iω) ρ_LR`.
    fn closed_form_rates(&self) -> Option<(f64, f64)> {
        match *self {
            DynamicsModel::Schrodinger { omega_q } => Some((0.0, omega_q)),
            DynamicsModel::ClassicalPoisson { omega_c } => Some((0.0, omega_c)),
            DynamicsModel::TilloyDiosi { lambda, omega_g } => Some((lambda, omega_g)),
            DynamicsModel::GeneralLinear(_) => None,
        }
    }
}

impl fmt::Display for DynamicsModel {
    /// Compact descriptor without commas, used in record headers.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsModel::Schrodinger { omega_q } => write!(f, "schrodinger(omega_q={omega_q})"),
            DynamicsModel::ClassicalPoisson { omega_c } => write!(f, "classical(omega_c={omega_c})"),
            DynamicsModel::TilloyDiosi { lambda, omega_g } => {
                write!(f, "tilloy-diosi(lambda={lambda};omega_g={omega_g})")
            }
            DynamicsModel::GeneralLinear(g) => write!(
                f,
                "general(a_lr={}{:+}i;b_lr={}{:+}i;b_rl={}{:+}i)",
                g.a_lr.re, g.a_lr.im, g.b_lr.re, g.b_lr.im, g.b_rl.re, g.b_rl.im
            ),
        }
    }
}

/// Right-hand side of the reduced equations of motion.
pub fn derivative(model: &DynamicsModel, state: &TwoLevelState) -> StateTangent {
    let rho = state.rho_lr;
    match *model {
        DynamicsModel::Schrodinger { omega_q } => {
            StateTangent { rho_ll: 0.0, rho_lr: Complex64::new(0.0, omega_q) * rho }
        }
        DynamicsModel::ClassicalPoisson { omega_c } => {
            StateTangent { rho_ll: 0.0, rho_lr: Complex64::new(0.0, omega_c) * rho }
        }
        DynamicsModel::TilloyDiosi { lambda, omega_g } => {
            StateTangent { rho_ll: 0.0, rho_lr: Complex64::new(-lambda, omega_g) * rho }
        }
        DynamicsModel::GeneralLinear(g) => StateTangent {
            rho_ll: 2.0 * (g.a_lr.re * rho.re - g.a_lr.im * rho.im),
            rho_lr: g.b_lr * rho + g.b_rl * rho.conj(),
        },
    }
}

/// Non-fatal diagnostics raised while evolving a state.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The state left the physical set by more than the slack `10·tolerance`.
    PositivityViolation { time: f64, excess: f64 },
    /// The coherence generator has an eigenvalue with positive real part.
    GrowingCoherence { max_real_part: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::PositivityViolation { time, excess } => {
                write!(f, "state not positive semidefinite at t = {time} (excess {excess:e})")
            }
            Warning::GrowingCoherence { max_real_part } => {
                write!(f, "coherence generator has an eigenvalue with real part {max_real_part:e} > 0")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TwoLevelState>,
    pub warnings: Vec<Warning>,
    pub stats: Stats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub state: TwoLevelState,
    pub warnings: Vec<Warning>,
    pub stats: Stats,
}

fn check_tolerance(tolerance: f64) -> Result<(), TwoStateError> {
    if tolerance > 0.0 && tolerance <= 1e-3 {
        Ok(())
    } else {
        Err(TwoStateError::InvalidTolerance(tolerance))
    }
}

fn model_warnings(model: &DynamicsModel) -> Vec<Warning> {
    match model {
        DynamicsModel::GeneralLinear(g) => {
            let re = CoherenceMatrixA::from_model(g).max_real_eigenvalue();
            if re > 0.0 {
                vec![Warning::GrowingCoherence { max_real_part: re }]
            } else {
                Vec::new()
            }
        }
        _ => Vec::new(),
    }
}

/// Integrates the model from `initial` (taken at t = 0) through every
/// sample time with the adaptive Dormand–Prince pair.
pub fn evolve_samples(
    model: &DynamicsModel,
    initial: &TwoLevelState,
    times: &[f64],
    tolerance: f64,
) -> Result<Trajectory, TwoStateError> {
    model.validate()?;
    check_tolerance(tolerance)?;
    if let Some(&t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(TwoStateError::InvalidTime(t));
    }
    let rhs = |_t: f64, y: &[f64; 3]| {
        let d = derivative(model, &TwoLevelState::from_vector(*y));
        [d.rho_ll, d.rho_lr.re, d.rho_lr.im]
    };
    let (ys, stats) = integrate_samples(rhs, 0.0, initial.to_vector(), times, StepControl::new(tolerance))?;
    let states: Vec<TwoLevelState> = ys.into_iter().map(TwoLevelState::from_vector).collect();

    let mut warnings = model_warnings(model);
    let slack = 10.0 * tolerance;
    if let Some((time, excess)) =
        times.iter().zip(&states).map(|(&t, s)| (t, s.positivity_excess())).find(|(_, e)| *e > slack)
    {
        warnings.push(Warning::PositivityViolation { time, excess });
    }
    Ok(Trajectory { times: times.to_vec(), states, warnings, stats })
}

/// State at time `t` under `model`, by adaptive numerical integration.
pub fn evolve(
    model: &DynamicsModel,
    initial: &TwoLevelState,
    t: f64,
    tolerance: f64,
) -> Result<Evolution, TwoStateError> {
    let traj = evolve_samples(model, initial, &[t], tolerance)?;
    Ok(Evolution { state: traj.states[0], warnings: traj.warnings, stats: traj.stats })
}

/// Closed-form coherence `ρ_LR(0)·exp((−λ + iω)t)` for the models whose
/// coherence equation is a single complex rate.
pub fn analytic_coherence(model: &DynamicsModel, initial: &TwoLevelState, t: f64) -> Result<Complex64, TwoStateError> {
    let (lambda, omega) = model.closed_form_rates().ok_or(TwoStateError::Unsupported(model.name()))?;
    let decay = (-lambda * t).exp();
    let (s, c) = (omega * t).sin_cos();
    Ok(initial.rho_lr * Complex64::new(decay * c, decay * s))
}

/// Exact state at time `t`: closed form for single-rate models, the
/// spectral solution for the general linear model.
pub fn exact_state(model: &DynamicsModel, initial: &TwoLevelState, t: f64) -> Result<TwoLevelState, TwoStateError> {
    match model {
        DynamicsModel::GeneralLinear(g) => Ok(spectral_solution(g, initial, t)),
        _ => Ok(TwoLevelState::from_raw(initial.rho_ll, analytic_coherence(model, initial, t)?)),
    }
}

/// Long-time arm population for Tilloy–Diósi coherence with
/// `μ₁ = μ₂ = μ`, starting from |+⟩: `1/2 − μ(ω_G − λ)/(λ² + ω_G²)`.
pub fn steady_state_population(mu: f64, lambda: f64, omega_g: f64) -> Result<f64, TwoStateError> {
    if !(lambda > 0.0) {
        return Err(TwoStateError::NoLimit(lambda));
    }
    Ok(0.5 - mu * (omega_g - lambda) / (lambda * lambda + omega_g * omega_g))
}
