use super::spectral::{add_kinetic, apply_along_p, potential_multiplier, Plan};
use super::{HamiltonianField, PhaseSpaceError, WignerGrid};

/// Number of Moyal correction terms kept beyond the Poisson bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BracketOrder {
    pub n_max: u32,
}

impl BracketOrder {
    pub const POISSON: Self = Self { n_max: 0 };

    pub fn new(n_max: u32) -> Self {
        Self { n_max }
    }

    /// Highest derivative of V the truncated series needs.
    pub fn required_derivative_order(&self) -> u32 {
        2 * self.n_max + 1
    }
}

impl Default for BracketOrder {
    fn default() -> Self {
        Self::new(3)
    }
}

pub(crate) fn check(field: &HamiltonianField, w: &WignerGrid, order: BracketOrder) -> Result<(), PhaseSpaceError> {
    if field.q != w.q {
        return Err(PhaseSpaceError::GridMismatch);
    }
    let needed = order.required_derivative_order();
    if field.max_order() < needed {
        return Err(PhaseSpaceError::InsufficientOrder { n_max: order.n_max, needed, available: field.max_order() });
    }
    Ok(())
}

fn tangent_like(w: &WignerGrid, values: Vec<f64>) -> WignerGrid {
    WignerGrid { q: w.q, p: w.p, hbar: w.hbar, time: w.time, values }
}

fn potential_term(field: &HamiltonianField, w: &WignerGrid, orders: std::ops::RangeInclusive<u32>) -> Vec<f64> {
    let mult = potential_multiplier(field, &w.p, w.hbar, orders, None);
    let mut out = vec![0.0; w.values.len()];
    if mult.iter().any(|&m| m != 0.0) {
        apply_along_p(&Plan::new(w.p.n), &w.values, &mult, &mut out);
    }
    out
}

/// `{H, W} = V′(q) ∂_p W − (p/m) ∂_q W`, with spectral derivatives on the
/// periodic grid.
pub fn poisson_bracket(field: &HamiltonianField, w: &WignerGrid) -> Result<WignerGrid, PhaseSpaceError> {
    check(field, w, BracketOrder::POISSON)?;
    let mut out = potential_term(field, w, 0..=0);
    if !field.kinetic_masked() {
        add_kinetic(&Plan::new(w.q.n), &w.q, &w.p, field.inverse_mass, &w.values, &mut out);
    }
    Ok(tangent_like(w, out))
}

/// Poisson bracket plus the first `n_max` Moyal corrections
/// `(−1)ⁿ ℏ^{2n} / (2^{2n}(2n+1)!) · V^{(2n+1)}(q) · ∂_p^{2n+1} W`.
///
/// The corrections are added onto the Poisson tangent, so a potential whose
/// odd derivatives above the first vanish reproduces it exactly.
pub fn moyal_bracket(
    field: &HamiltonianField,
    w: &WignerGrid,
    order: BracketOrder,
) -> Result<WignerGrid, PhaseSpaceError> {
    check(field, w, order)?;
    let mut out = poisson_bracket(field, w)?;
    if order.n_max > 0 {
        let corrections = potential_term(field, w, 1..=order.n_max);
        for (o, c) in out.values.iter_mut().zip(corrections) {
            *o += c;
        }
    }
    Ok(out)
}

/// Size of each retained term of the potential part of the bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct MoyalDiagnostics {
    /// `‖term_n‖₂` over the grid for `n = 0..=n_max`; `n = 0` is `V′∂_pW`.
    pub term_norms: Vec<f64>,
    /// `‖term_{n_max}‖ / ‖Σ_n term_n‖`, the truncation tail estimate.
    pub tail_ratio: f64,
}

pub fn moyal_diagnostics(
    field: &HamiltonianField,
    w: &WignerGrid,
    order: BracketOrder,
) -> Result<MoyalDiagnostics, PhaseSpaceError> {
    check(field, w, order)?;
    let area = w.cell_area();
    let norm = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() * area).sqrt();
    let mut total = vec![0.0; w.values.len()];
    let mut term_norms = Vec::with_capacity(order.n_max as usize + 1);
    for n in 0..=order.n_max {
        let term = potential_term(field, w, n..=n);
        term_norms.push(norm(&term));
        for (t, x) in total.iter_mut().zip(&term) {
            *t += x;
        }
    }
    let total_norm = norm(&total);
    let last = *term_norms.last().unwrap();
    let tail_ratio = if total_norm > 0.0 { last / total_norm } else { 0.0 };
    Ok(MoyalDiagnostics { term_norms, tail_ratio })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use num_complex::Complex64;

    use super::*;
    use crate::gravity::PotentialProfile;
    use crate::phasespace::{default_axes, wigner_from_two_packets, Axis, PacketState, QuadraticPotential};

    fn packets(n: usize) -> WignerGrid {
        let (q, p) = default_axes(1.0, 0.08, 1.0, n).unwrap();
        wigner_from_two_packets(q, p, &PacketState::new(1.0, 0.08, Complex64::new(0.5, 0.0), 1.0)).unwrap()
    }

    fn two_ball() -> PotentialProfile {
        PotentialProfile::new(600.0, 1200.0, 3.0, 3.0 * 2f64.sqrt())
    }

    #[test]
    fn constant_w_has_zero_tangent() {
        let q = Axis::symmetric(2.0, 32).unwrap();
        let p = Axis::symmetric(5.0, 32).unwrap();
        let w = WignerGrid::from_fn(q, p, 1.0, |_, _| 0.7);
        let field = HamiltonianField::sample(&QuadraticPotential::new(0.3, 1.0, 0.0), q, 7, Some(2.0)).unwrap();
        let t = moyal_bracket(&field, &w, BracketOrder::default()).unwrap();
        assert!(t.max_abs() < 1e-13);
    }

    #[test]
    fn free_particle_tangent_is_the_shear() {
        let q = Axis::symmetric(6.0, 128).unwrap();
        let p = Axis::symmetric(6.0, 128).unwrap();
        let (m, s) = (1.7, 0.6);
        let g = |q: f64, p: f64| (-q * q / (2.0 * s * s) - p * p / 2.0).exp();
        let w = WignerGrid::from_fn(q, p, 1.0, g);
        let field = HamiltonianField::sample(&QuadraticPotential::free(), q, 1, Some(m)).unwrap();
        let t = poisson_bracket(&field, &w).unwrap();
        let exact = WignerGrid::from_fn(q, p, 1.0, |q, p| -(p / m) * (-q / (s * s)) * g(q, p));
        for (a, b) in t.values.iter().zip(&exact.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn force_term_matches_analytic_derivative() {
        let q = Axis::symmetric(1.5, 64).unwrap();
        let p = Axis::symmetric(8.0, 128).unwrap();
        let g = |q: f64, p: f64| (-q * q - p * p / 2.0).exp() / PI;
        let w = WignerGrid::from_fn(q, p, 1.0, g);
        let v = two_ball();
        let field = HamiltonianField::sample(&v, q, 1, None).unwrap();
        let t = poisson_bracket(&field, &w).unwrap();
        for i in 0..q.n {
            let dv = field.force_derivative()[i];
            for j in 0..p.n {
                let exact = dv * (-p.point(j)) * g(q.point(i), p.point(j));
                assert!((t.at(i, j) - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_order_moyal_is_poisson() {
        let w = packets(128);
        let field = HamiltonianField::sample(&two_ball(), w.q, 1, Some(5.0)).unwrap();
        let a = poisson_bracket(&field, &w).unwrap();
        let b = moyal_bracket(&field, &w, BracketOrder::POISSON).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quadratic_potential_collapses_exactly() {
        let w = packets(128);
        let field = HamiltonianField::sample(&QuadraticPotential::new(2.5, -1.0, 0.3), w.q, 7, Some(3.0)).unwrap();
        let poisson = poisson_bracket(&field, &w).unwrap();
        for n in 0..=3 {
            assert_eq!(moyal_bracket(&field, &w, BracketOrder::new(n)).unwrap(), poisson);
        }
    }

    #[test]
    fn insufficient_order_and_mismatch() {
        let w = packets(64);
        let field = HamiltonianField::sample(&two_ball(), w.q, 5, None).unwrap();
        assert!(matches!(
            moyal_bracket(&field, &w, BracketOrder::new(3)),
            Err(PhaseSpaceError::InsufficientOrder { needed: 7, available: 5, .. })
        ));
        let other = HamiltonianField::sample(&two_ball(), Axis::symmetric(1.4, 64).unwrap(), 7, None).unwrap();
        assert_eq!(poisson_bracket(&other, &w), Err(PhaseSpaceError::GridMismatch));
    }

    #[test]
    fn corrections_shrink_and_tangent_integrates_to_zero() {
        let w = packets(256);
        let field = HamiltonianField::sample(&two_ball(), w.q, 7, None).unwrap();
        let d = moyal_diagnostics(&field, &w, BracketOrder::new(3)).unwrap();
        assert!(d.term_norms[2] < d.term_norms[1], "{:?}", d.term_norms);
        assert!(d.term_norms[3] < d.term_norms[2], "{:?}", d.term_norms);
        assert!(d.tail_ratio > 0.0 && d.tail_ratio < 0.1);
        let t = moyal_bracket(&field, &w, BracketOrder::new(3)).unwrap();
        assert!(t.normalization().abs() < 1e-8);
    }
}
