//! Exact solution of the general linear model.
//!
//! With `f = (Re ρ_LR, Im ρ_LR)` the coherence equation is `ḟ = A f`, and
//! the population obeys `ρ̇_LL = cᵀ f` with `c = 2(Re a_LR, −Im a_LR)`.
//! Both are advanced together as one 3×3 linear system
//! `z = (f₁, f₂, ρ_LL)`, `ż = B z`, so a single matrix exponential gives
//! the coherence and the integrated population drift without branching on
//! the eigenvalue structure of `A`.

use std::fmt;

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;

use super::{GeneralLinear, TwoLevelState};

/// Real 2×2 generator of the coherence `(Re ρ_LR, Im ρ_LR)`.
///
/// Writing `b_LR = p + iq` and `b_RL = r + is`,
/// `A = [[p + r, s − q], [q + s, p − r]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceMatrixA {
    pub entries: [[f64; 2]; 2],
}

/// Shape of the coherence solution, determined by the eigenvalues of `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolutionForm {
    /// `f = c₁e^{λ₁t}v₁ + c₂e^{λ₂t}v₂`
    RealDistinct { lambda1: f64, lambda2: f64 },
    /// `f = c₁e^{(λ+iω)t}v + c₂e^{(λ−iω)t}v̄`
    ComplexPair { re: f64, im: f64 },
    /// `f = c₁e^{λt}v + c₂e^{λt}(w + tv)`
    Repeated { lambda: f64 },
}

impl fmt::Display for SolutionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolutionForm::RealDistinct { lambda1, lambda2 } => write!(
                f,
                "real distinct eigenvalues {lambda1:e}, {lambda2:e}: f = c1 exp({lambda1:e} t) v1 + c2 exp({lambda2:e} t) v2"
            ),
            SolutionForm::ComplexPair { re, im } => write!(
                f,
                "complex pair {re:e} ± {im:e}i: f = c1 exp(({re:e} + {im:e}i) t) v + c.c."
            ),
            SolutionForm::Repeated { lambda } => {
                write!(f, "repeated eigenvalue {lambda:e}: f = exp({lambda:e} t) (c1 v + c2 (w + t v))")
            }
        }
    }
}

impl CoherenceMatrixA {
    pub fn from_model(model: &GeneralLinear) -> Self {
        let (p, q) = (model.b_lr.re, model.b_lr.im);
        let (r, s) = (model.b_rl.re, model.b_rl.im);
        Self { entries: [[p + r, s - q], [q + s, p - r]] }
    }

    fn matrix(&self) -> Matrix2<f64> {
        let e = self.entries;
        Matrix2::new(e[0][0], e[0][1], e[1][0], e[1][1])
    }

    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn determinant(&self) -> f64 {
        let e = self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    /// `(tr/2)² − det`; its sign separates the real and complex branches.
    pub fn discriminant(&self) -> f64 {
        let e = self.entries;
        let half_diff = 0.5 * (e[0][0] - e[1][1]);
        half_diff * half_diff + e[0][1] * e[1][0]
    }

    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let mid = 0.5 * self.trace();
        let disc = self.discriminant();
        if disc >= 0.0 {
            let r = disc.sqrt();
            [Complex64::new(mid + r, 0.0), Complex64::new(mid - r, 0.0)]
        } else {
            let r = (-disc).sqrt();
            [Complex64::new(mid, r), Complex64::new(mid, -r)]
        }
    }

    pub fn max_real_eigenvalue(&self) -> f64 {
        let [a, b] = self.eigenvalues();
        a.re.max(b.re)
    }

    /// Degeneracy threshold `10⁻⁹·max(1, ‖A‖)` on the eigenvalue gap.
    pub fn degeneracy_tolerance(&self) -> f64 {
        1e-9 * self.matrix().norm().max(1.0)
    }

    pub fn classify(&self) -> SolutionForm {
        let [a, b] = self.eigenvalues();
        if (a - b).norm() < self.degeneracy_tolerance() {
            SolutionForm::Repeated { lambda: 0.5 * self.trace() }
        } else if a.im == 0.0 {
            SolutionForm::RealDistinct { lambda1: a.re, lambda2: b.re }
        } else {
            SolutionForm::ComplexPair { re: a.re, im: a.im.abs() }
        }
    }
}

fn augmented_generator(model: &GeneralLinear) -> Matrix3<f64> {
    let a = CoherenceMatrixA::from_model(model).entries;
    let c1 = 2.0 * model.a_lr.re;
    let c2 = -2.0 * model.a_lr.im;
    Matrix3::new(a[0][0], a[0][1], 0.0, a[1][0], a[1][1], 0.0, c1, c2, 0.0)
}

/// State at time `t` under the general linear model, from `exp(Bt)`.
pub fn spectral_solution(model: &GeneralLinear, initial: &TwoLevelState, t: f64) -> TwoLevelState {
    let b = augmented_generator(model);
    let z0 = Vector3::new(initial.rho_lr().re, initial.rho_lr().im, initial.rho_ll());
    let z = (b * t).exp() * z0;
    TwoLevelState::from_raw(z[2], Complex64::new(z[0], z[1]))
}

pub fn spectral_trajectory(model: &GeneralLinear, initial: &TwoLevelState, times: &[f64]) -> Vec<TwoLevelState> {
    times.iter().map(|&t| spectral_solution(model, initial, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matrix_reproduces_coherence_equation() {
        // A f must equal (Re, Im) of b_LR ρ + b_RL conj(ρ) for any ρ.
        let g = GeneralLinear::new(c(0.0, 0.0), c(-0.3, 1.7), c(0.4, -0.9));
        let a = CoherenceMatrixA::from_model(&g).entries;
        for rho in [c(0.3, -0.1), c(-0.2, 0.45), c(1.0, 0.0), c(0.0, 1.0)] {
            let direct = g.b_lr * rho + g.b_rl * rho.conj();
            let via_a = c(a[0][0] * rho.re + a[0][1] * rho.im, a[1][0] * rho.re + a[1][1] * rho.im);
            assert!((direct - via_a).norm() < 1e-15);
        }
    }

    #[test]
    fn tilloy_diosi_embedding() {
        let (lambda, w) = (0.3, 1.1);
        let g = GeneralLinear::dephasing_with_drift(lambda, w, 0.0, 0.0);
        let a = CoherenceMatrixA::from_model(&g);
        assert_eq!(a.entries, [[-lambda, -w], [w, -lambda]]);
        match a.classify() {
            SolutionForm::ComplexPair { re, im } => {
                assert!((re + lambda).abs() < 1e-15 && (im - w).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
        let plus = TwoLevelState::plus();
        for t in [0.0, 0.5, 3.0, 17.0] {
            let s = spectral_solution(&g, &plus, t);
            let exact = 0.5 * c(-lambda, w).scale(t).exp();
            assert!((s.rho_lr() - exact).norm() < 1e-14, "t={t}");
            assert!((s.rho_ll() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_real_couplings_give_diagonal_generator() {
        let r = -0.4;
        let g = GeneralLinear::new(c(0.0, 0.0), c(r, 0.0), c(r, 0.0));
        let a = CoherenceMatrixA::from_model(&g);
        assert_eq!(a.entries, [[2.0 * r, 0.0], [0.0, 0.0]]);
        assert_eq!(a.classify(), SolutionForm::RealDistinct { lambda1: 0.0, lambda2: 2.0 * r });
        let s0 = TwoLevelState::new(0.5, c(0.3, 0.2)).unwrap();
        let s = spectral_solution(&g, &s0, 2.0);
        assert!((s.rho_lr().im - 0.2).abs() < 1e-15);
        assert!((s.rho_lr().re - 0.3 * (4.0 * r).exp()).abs() < 1e-15);
    }

    #[test]
    fn repeated_branch() {
        // eigenvalues p ± sqrt(r² + s² − q²) coincide when q² = r² + s²
        let g = GeneralLinear::new(c(0.1, 0.0), c(-0.5, 0.625), c(0.375, 0.5));
        let a = CoherenceMatrixA::from_model(&g);
        assert!(matches!(a.classify(), SolutionForm::Repeated { .. }), "{:?}", a.eigenvalues());
        assert!(a.classify().to_string().contains("repeated"));
    }

    #[test]
    fn population_drift_closed_form() {
        // long-time limit with μ₁ = μ₂ = μ and Tilloy–Diósi coherence
        let (mu, lambda, w) = (0.05, 0.2, 0.6);
        let g = GeneralLinear::dephasing_with_drift(lambda, w, mu, mu);
        let s = spectral_solution(&g, &TwoLevelState::plus(), 400.0);
        let expected = 0.5 - mu * (w - lambda) / (lambda * lambda + w * w);
        assert!((s.rho_ll() - expected).abs() < 1e-12);
    }
}
