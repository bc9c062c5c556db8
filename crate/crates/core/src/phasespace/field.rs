use crate::gravity::PotentialProfile;

use super::{Axis, PhaseSpaceError};

/// A one-dimensional potential with analytic derivatives.
pub trait Potential: Sync {
    /// `order`-th derivative at `q`; `None` outside the potential's domain.
    fn derivative(&self, order: u32, q: f64) -> Option<f64>;

    fn value(&self, q: f64) -> Option<f64> {
        self.derivative(0, q)
    }
}

impl Potential for PotentialProfile {
    fn derivative(&self, order: u32, q: f64) -> Option<f64> {
        PotentialProfile::derivative(self, order, q).ok()
    }
}

/// `V(q) = a q² + b q + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPotential {
    pub curvature: f64,
    pub slope: f64,
    pub offset: f64,
}

impl QuadraticPotential {
    pub fn new(curvature: f64, slope: f64, offset: f64) -> Self {
        Self { curvature, slope, offset }
    }

    pub fn free() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }
}

impl Potential for QuadraticPotential {
    fn derivative(&self, order: u32, q: f64) -> Option<f64> {
        Some(match order {
            0 => self.curvature * q * q + self.slope * q + self.offset,
            1 => 2.0 * self.curvature * q + self.slope,
            2 => 2.0 * self.curvature,
            _ => 0.0,
        })
    }
}

/// `H(q, p) = p²/2m + V(q)` sampled on a q axis.
///
/// `derivatives[k][i]` holds `V⁽ᵏ⁾(q_i)` for `k = 0..=max_order`. A zero
/// `inverse_mass` masks the kinetic term (particle held in place).
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianField {
    pub q: Axis,
    pub inverse_mass: f64,
    pub derivatives: Vec<Vec<f64>>,
}

impl HamiltonianField {
    /// Samples `potential` and its derivatives up to `max_order` on `q`.
    /// `mass = None` masks the kinetic term.
    pub fn sample(
        potential: &dyn Potential,
        q: Axis,
        max_order: u32,
        mass: Option<f64>,
    ) -> Result<Self, PhaseSpaceError> {
        let inverse_mass = match mass {
            Some(m) if m > 0.0 && m.is_finite() => 1.0 / m,
            Some(m) => return Err(PhaseSpaceError::InvalidGrid(format!("particle mass {m} must be positive"))),
            None => 0.0,
        };
        let mut derivatives = Vec::with_capacity(max_order as usize + 1);
        for order in 0..=max_order {
            let samples = q
                .points()
                .into_iter()
                .map(|x| potential.derivative(order, x).ok_or(PhaseSpaceError::OutsidePotential { q: x }))
                .collect::<Result<Vec<_>, _>>()?;
            derivatives.push(samples);
        }
        Ok(Self { q, inverse_mass, derivatives })
    }

    pub fn max_order(&self) -> u32 {
        self.derivatives.len() as u32 - 1
    }

    pub fn kinetic_masked(&self) -> bool {
        self.inverse_mass == 0.0
    }

    pub fn potential(&self) -> &[f64] {
        &self.derivatives[0]
    }

    pub fn force_derivative(&self) -> &[f64] {
        &self.derivatives[1]
    }
}
