use num_complex::Complex64;

use super::{PhaseSpaceError, Potential, WignerGrid};

/// Relative offset below which a point counts as lying on a grid row.
const ON_GRID: f64 = 1e-9;

/// Row of `W(q, ·)`: the grid row itself when `q` is a sample, otherwise
/// cubic Lagrange interpolation across the four nearest rows.
fn row_at(w: &WignerGrid, q: f64) -> Option<Vec<f64>> {
    let (dq, n) = (w.q.step(), w.q.n);
    let u = (q - w.q.min) / dq;
    if !(u >= -ON_GRID && u <= (n - 1) as f64 + ON_GRID) {
        return None;
    }
    let nearest = u.round();
    if (u - nearest).abs() < ON_GRID {
        return Some(w.row(nearest as usize).to_vec());
    }
    let base = (u.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut weights = [1.0; 4];
    for (a, wa) in weights.iter_mut().enumerate() {
        for b in 0..4 {
            if a != b {
                *wa *= (u - (base + b) as f64) / (a as f64 - b as f64);
            }
        }
    }
    let mut row = vec![0.0; w.p.n];
    for (a, wa) in weights.iter().enumerate() {
        for (r, v) in row.iter_mut().zip(w.row(base + a)) {
            *r += wa * v;
        }
    }
    Some(row)
}

/// `⟨x|ρ|y⟩ = ∫ e^{ip(x−y)/ℏ} W((x+y)/2, p) dp`, by the trapezoid rule on
/// the periodic p axis.
pub fn weyl_density_matrix(w: &WignerGrid, x: f64, y: f64) -> Result<Complex64, PhaseSpaceError> {
    let row = row_at(w, 0.5 * (x + y)).ok_or(PhaseSpaceError::OutOfGrid { x, y })?;
    Ok(transform_row(w, &row, x - y))
}

fn transform_row(w: &WignerGrid, row: &[f64], separation: f64) -> Complex64 {
    let k = separation / w.hbar;
    // e^{ik p_j} by recurrence would drift; direct evaluation is cheap enough
    let sum: Complex64 = row.iter().enumerate().map(|(j, &v)| Complex64::from_polar(v, k * w.p.point(j))).sum();
    sum * w.p.step()
}

/// `(x − y)/(iℏ) · V′((x+y)/2) · ρ(x, y)`, the kernel of the Weyl
/// quantisation of `{V, W}`.
pub fn potential_commutator_term(
    potential: &dyn Potential,
    hbar: f64,
    kernel: impl Fn(f64, f64) -> Complex64,
    x: f64,
    y: f64,
) -> Result<Complex64, PhaseSpaceError> {
    let mid = 0.5 * (x + y);
    let dv = potential.derivative(1, mid).ok_or(PhaseSpaceError::OutsidePotential { q: mid })?;
    Ok(Complex64::new(0.0, -(x - y) / hbar) * dv * kernel(x, y))
}

/// `⟨L|ρ|R⟩ = ∫∫ g(x + Δx/2) ρ(x, y) g(y − Δx/2) dx dy` for real Gaussian
/// packets of width `width`.
///
/// Nodes are spaced `2Δq` apart around each packet centre so that the
/// midpoint `(x+y)/2` falls on grid rows and needs no interpolation.
pub fn arm_coherence(w: &WignerGrid, arm_separation: f64, width: f64) -> Result<Complex64, PhaseSpaceError> {
    let h = 0.5 * arm_separation;
    let node = 2.0 * w.q.step();
    let reach = (7.0 * width / node).ceil() as i64;
    let s2 = width * width;
    let g = |u: f64| (2.0 * std::f64::consts::PI * s2).powf(-0.25) * (-u * u / (4.0 * s2)).exp();
    let mut total = Complex64::new(0.0, 0.0);
    // group nodes by midpoint so each interpolated row is built once
    for m in -2 * reach..=2 * reach {
        let mid = m as f64 * 0.5 * node;
        let row = row_at(w, mid).ok_or(PhaseSpaceError::OutOfGrid { x: mid - h, y: mid + h })?;
        let lo = (-reach).max(m - reach);
        let hi = reach.min(m + reach);
        for a in lo..=hi {
            let b = m - a;
            let (ua, ub) = (a as f64 * node, b as f64 * node);
            let (x, y) = (-h + ua, h + ub);
            total += transform_row(w, &row, x - y) * (g(ua) * g(ub));
        }
    }
    Ok(total * node * node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gravity::PotentialProfile;
    use crate::phasespace::{default_axes, poisson_bracket, wigner_from_two_packets, HamiltonianField, PacketState};

    fn setup(n: usize, c: Complex64) -> (WignerGrid, PacketState) {
        let st = PacketState::new(1.0, 0.08, c, 1.0);
        let (q, p) = default_axes(1.0, 0.08, 1.0, n).unwrap();
        (wigner_from_two_packets(q, p, &st).unwrap(), st)
    }

    #[test]
    fn diagonal_is_the_position_marginal() {
        let (w, _) = setup(256, Complex64::new(0.5, 0.0));
        let marginal = w.position_marginal();
        for i in (0..256).step_by(7) {
            let x = w.q.point(i);
            let r = weyl_density_matrix(&w, x, x).unwrap();
            assert!(r.im.abs() < 1e-12);
            assert!((r.re - marginal[i]).abs() < 1e-12);
            assert!(r.re >= -1e-6);
        }
    }

    #[test]
    fn recovers_the_kernel() {
        let c = Complex64::new(0.3, -0.25);
        let (w, st) = setup(512, c);
        let (x, y) = (-0.5, 0.5);
        let r = weyl_density_matrix(&w, x, y).unwrap();
        let exact = st.kernel(x, y);
        assert!((r - exact).norm() < 1e-4 * exact.norm(), "{r} vs {exact}");
        // off-grid midpoint goes through interpolation
        let (x, y) = (-0.4917, 0.5031);
        let r = weyl_density_matrix(&w, x, y).unwrap();
        let exact = st.kernel(x, y);
        assert!((r - exact).norm() < 1e-3 * exact.norm(), "{r} vs {exact}");
    }

    #[test]
    fn arm_coherence_recovers_the_input() {
        let c = Complex64::new(-0.21, 0.37);
        let (w, _) = setup(512, c);
        let got = arm_coherence(&w, 1.0, 0.08).unwrap();
        assert!((got - c).norm() < 1e-3, "{got}");
    }

    #[test]
    fn out_of_grid() {
        let (w, _) = setup(64, Complex64::new(0.5, 0.0));
        assert!(matches!(weyl_density_matrix(&w, 3.0, 2.0), Err(PhaseSpaceError::OutOfGrid { .. })));
    }

    #[test]
    fn commutator_term_signs() {
        let v = PotentialProfile::new(600.0, 1200.0, 3.0, 4.0);
        let one = |_: f64, _: f64| Complex64::new(1.0, 0.0);
        assert_eq!(potential_commutator_term(&v, 1.0, one, 0.2, 0.2).unwrap(), Complex64::new(0.0, 0.0));
        // x = −Δx/2, y = Δx/2 gives i·Δx·V′(0)/ℏ
        let t = potential_commutator_term(&v, 1.0, one, -0.5, 0.5).unwrap();
        let dv0 = v.force_derivative(0.0).unwrap();
        assert!((t - Complex64::new(0.0, dv0)).norm() < 1e-12);
    }

    #[test]
    fn weyl_transform_of_the_force_term() {
        let (w, st) = setup(512, Complex64::new(0.5, 0.0));
        let v = PotentialProfile::new(600.0, 1200.0, 3.0, 4.0);
        let field = HamiltonianField::sample(&v, w.q, 1, None).unwrap();
        let bracket = poisson_bracket(&field, &w).unwrap();
        for (x, y) in [(-0.5, 0.5), (-0.45, 0.52), (0.48, 0.55), (0.53, -0.47)] {
            let lhs = weyl_density_matrix(&bracket, x, y).unwrap();
            let rhs = potential_commutator_term(&v, 1.0, |a, b| st.kernel(a, b), x, y).unwrap();
            assert!((lhs - rhs).norm() < 1e-3 * rhs.norm(), "({x},{y}): {lhs} vs {rhs}");
        }
    }
}
