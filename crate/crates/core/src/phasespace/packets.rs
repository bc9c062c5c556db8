use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Axis, PhaseSpaceError, WignerGrid};

/// Two Gaussian packets of width `width` centred at `∓arm_separation/2`,
/// in the state `½(|L⟩⟨L| + |R⟩⟨R|) + c|L⟩⟨R| + c̄|R⟩⟨L|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketState {
    pub arm_separation: f64,
    pub width: f64,
    pub coherence: Complex64,
    pub hbar: f64,
}

impl PacketState {
    pub fn new(arm_separation: f64, width: f64, coherence: Complex64, hbar: f64) -> Self {
        Self { arm_separation, width, coherence, hbar }
    }

    /// `⟨L|R⟩ = exp(−Δx²/8σ²)`.
    pub fn overlap(&self) -> f64 {
        (-self.arm_separation.powi(2) / (8.0 * self.width.powi(2))).exp()
    }

    /// Packet amplitude `g(x) = (2πσ²)^{-1/4} exp(−x²/4σ²)`.
    pub fn amplitude(&self, x: f64) -> f64 {
        let s2 = self.width * self.width;
        (2.0 * PI * s2).powf(-0.25) * (-x * x / (4.0 * s2)).exp()
    }

    /// Exact position-space kernel `⟨x|ρ|y⟩`.
    pub fn kernel(&self, x: f64, y: f64) -> Complex64 {
        let h = 0.5 * self.arm_separation;
        let (lx, rx) = (self.amplitude(x + h), self.amplitude(x - h));
        let (ly, ry) = (self.amplitude(y + h), self.amplitude(y - h));
        Complex64::from(0.5 * (lx * ly + rx * ry)) + self.coherence * lx * ry + self.coherence.conj() * rx * ly
    }

    /// Closed-form Wigner function.
    ///
    /// `|a⟩⟨b|` maps to `(1/πℏ) exp(−u²/2σ² − 2σ²p²/ℏ²) e^{−ip(a−b)/ℏ}` with
    /// `u = q − (a+b)/2`, so the cross terms leave a ridge at `q = 0`
    /// oscillating as `cos(pΔx/ℏ + arg c)`.
    pub fn wigner(&self, q: f64, p: f64) -> f64 {
        let (s2, hbar, h) = (self.width * self.width, self.hbar, 0.5 * self.arm_separation);
        let momentum = (-2.0 * s2 * p * p / (hbar * hbar)).exp() / (PI * hbar);
        let lobe = |u: f64| (-u * u / (2.0 * s2)).exp();
        let phase = Complex64::from_polar(1.0, p * self.arm_separation / hbar);
        let ridge = 2.0 * (self.coherence * phase).re * lobe(q);
        momentum * (0.5 * lobe(q + h) + 0.5 * lobe(q - h) + ridge)
    }
}

/// Default oracle axes: `n` points over `q ∈ ±1.5Δx` and `p ∈ ±8ℏ/σ`.
pub fn default_axes(arm_separation: f64, width: f64, hbar: f64, n: usize) -> Result<(Axis, Axis), PhaseSpaceError> {
    Ok((Axis::symmetric(1.5 * arm_separation, n)?, Axis::symmetric(8.0 * hbar / width, n)?))
}

/// Samples the two-packet Wigner function on the given axes.
pub fn wigner_from_two_packets(q: Axis, p: Axis, state: &PacketState) -> Result<WignerGrid, PhaseSpaceError> {
    let dx = state.arm_separation;
    if !(dx > 0.0 && state.width > 0.0 && state.hbar > 0.0) {
        return Err(PhaseSpaceError::InvalidGrid(format!(
            "arm separation {dx}, width {}, hbar {} must be positive",
            state.width, state.hbar
        )));
    }
    if q.min > -dx || q.last() < dx {
        return Err(PhaseSpaceError::GridTooSmall { min: q.min, max: q.last(), needed: dx });
    }
    let overlap = state.overlap();
    if overlap > 1e-6 {
        return Err(PhaseSpaceError::NonOrthogonal { overlap });
    }
    if state.coherence.norm() > 0.5 + 1e-12 {
        return Err(PhaseSpaceError::InvalidCoherence(state.coherence.norm()));
    }
    Ok(WignerGrid::from_fn(q, p, state.hbar, |q, p| state.wigner(q, p)))
}
