//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are printed whether or not a criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use gravint_core::phasespace::oracle::{run_oracle, ScaledConfig};
use gravint_core::phasespace::{
    default_axes, moyal_bracket, poisson_bracket, potential_commutator_term, weyl_density_matrix,
    wigner_from_two_packets, BracketOrder, HamiltonianField, PacketState, QuadraticPotential, WignerGrid,
};
use gravint_core::signal::{fit_damped_fringe, signal_from_state, synthesize_record, synthesize_record_stream};
use gravint_core::twostate::spectral::{spectral_solution, CoherenceMatrixA, SolutionForm};
use gravint_core::twostate::{evolve_samples, exact_state, steady_state_population};
use gravint_core::{
    omega_classical, omega_quantum, DynamicsModel, ExperimentConfig, GeneralLinear, PotentialProfile, Side,
    TwoLevelState,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Integrator tolerance for the closure criteria; the default 1e-10 leaves
/// too little margin under the 1e-9 and 1e-8 targets.
const TIGHT: f64 = 1e-12;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(20_241_019);
    r.set_stream(stream);
    r
}

fn headline_frequency() -> Outcome {
    let config = ExperimentConfig::reference();
    let wq = omega_quantum(&config).unwrap();
    let wc = omega_classical(&config);
    let rel = (wq - 0.22).abs() / 0.22;
    let null = wc.abs() / wq.abs();
    outcome(rel <= 0.03 && null < 1e-12, format!("omega_Q = {wq:.6} (rel {rel:.2e}), |omega_C|/omega_Q = {null:.1e}"))
}

fn ball_radii() -> Outcome {
    let config = ExperimentConfig::reference();
    let (r1, r2) = (config.ball_radius(Side::Left) * 1e3, config.ball_radius(Side::Right) * 1e3);
    let pass = (r1 - 6.3).abs() <= 0.1 && (r2 - 7.9).abs() <= 0.1;
    outcome(pass, format!("R1 = {r1:.4} mm, R2 = {r2:.4} mm"))
}

fn tilloy_diosi_closure() -> Outcome {
    let mut r = rng(3);
    let plus = TwoLevelState::plus();
    let times: Vec<f64> = (0..50).map(|k| 0.8 * k as f64).collect();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (lambda, omega_g) = (r.random::<f64>(), r.random::<f64>());
        let model = DynamicsModel::TilloyDiosi { lambda, omega_g };
        let traj = evolve_samples(&model, &plus, &times, TIGHT).unwrap();
        for (&t, s) in times.iter().zip(&traj.states) {
            let expected = 0.5 * (1.0 + (-lambda * t).exp() * (omega_g * t).cos());
            worst = worst.max((signal_from_state(s) - expected).abs());
        }
    }
    outcome(worst <= 1e-9, format!("max |S - S_exact| = {worst:.2e} over 100 models x 50 times"))
}

fn steady_state() -> Outcome {
    let mut r = rng(4);
    let plus = TwoLevelState::plus();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let lambda = r.random_range(0.05..1.0);
        let omega_g = r.random_range(-1.0..1.0);
        let mu = r.random_range(-0.05..0.05);
        let model = DynamicsModel::GeneralLinear(GeneralLinear::dephasing_with_drift(lambda, omega_g, mu, mu));
        let t = 30.0 / lambda;
        let state = evolve_samples(&model, &plus, &[t], TIGHT).unwrap().states[0];
        let expected = steady_state_population(mu, lambda, omega_g).unwrap();
        worst = worst.max((state.rho_ll() - expected).abs());
    }
    outcome(worst <= 1e-6, format!("max |rho_LL - formula| = {worst:.2e} over 50 draws"))
}

fn signal_degeneracy() -> Outcome {
    let (lambda, omega_g) = (0.05, 0.22);
    let plus = TwoLevelState::plus();
    let times: Vec<f64> = (0..=400).map(|k| 0.25 * k as f64).collect();
    let tracks: Vec<(Vec<f64>, Vec<f64>)> = [(0.0, 0.0), (0.1, 0.0), (0.0, 0.1), (0.1, 0.1)]
        .iter()
        .map(|&(mu1, mu2)| {
            let model = DynamicsModel::GeneralLinear(GeneralLinear::dephasing_with_drift(lambda, omega_g, mu1, mu2));
            let states: Vec<TwoLevelState> = times.iter().map(|&t| exact_state(&model, &plus, t).unwrap()).collect();
            (states.iter().map(signal_from_state).collect(), states.iter().map(|s| s.rho_ll()).collect())
        })
        .collect();
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mut signal_spread = 0.0f64;
    let mut population_gap = f64::INFINITY;
    for i in 0..tracks.len() {
        for j in i + 1..tracks.len() {
            signal_spread = signal_spread.max(max_diff(&tracks[i].0, &tracks[j].0));
            population_gap = population_gap.min(max_diff(&tracks[i].1, &tracks[j].1));
        }
    }
    outcome(
        signal_spread <= 1e-12 && population_gap > 1e-3,
        format!("signal spread {signal_spread:.1e}, smallest population difference {population_gap:.3e}"),
    )
}

/// Stable model with `A` in the requested eigenvalue branch. With
/// `b_LR = p + iq`, `b_RL = r + is` the eigenvalues are `p ± sqrt(r² + s² − q²)`.
fn random_model(r: &mut ChaCha8Rng, branch: usize) -> GeneralLinear {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let a_lr = c(r.random_range(-0.3..0.3), r.random_range(-0.3..0.3));
    let (rr, s): (f64, f64) = (r.random_range(-0.4..0.4), r.random_range(-0.4..0.4));
    let q: f64 = match branch {
        // real distinct: q² well below r² + s²
        0 => r.random_range(-0.5..0.5) * (rr * rr + s * s).sqrt(),
        // complex pair
        1 => (rr * rr + s * s + r.random_range(0.01..0.5)).sqrt(),
        // exactly repeated (Jordan block when s = 0, q = r) or a gap below ~1e-6
        _ if r.random::<bool>() => return jordan(r, a_lr),
        _ => (rr * rr + s * s + r.random_range(-1e-13..1e-13)).max(0.0).sqrt(),
    };
    let spread = (rr * rr + s * s - q * q).max(0.0).sqrt();
    let p = -spread - r.random_range(0.0..0.3);
    GeneralLinear::new(a_lr, c(p, q), c(rr, s))
}

fn jordan(r: &mut ChaCha8Rng, a_lr: Complex64) -> GeneralLinear {
    let rr: f64 = r.random_range(0.05..0.4);
    let p = -r.random_range(0.0..0.3);
    GeneralLinear::new(a_lr, Complex64::new(p, rr), Complex64::new(rr, 0.0))
}

/// Eigenvalue gaps below this fraction of `max(1, |A|)` count as near-repeated.
const NEAR_REPEATED: f64 = 1e-6;

fn spectral_equivalence() -> Outcome {
    let mut r = rng(6);
    let times: Vec<f64> = (1..=20).map(|k| 1.5 * k as f64).collect();
    let mut worst = 0.0f64;
    let mut seen = [0usize; 3];
    for i in 0..50 {
        let model = random_model(&mut r, i % 3);
        let a = CoherenceMatrixA::from_model(&model);
        if a.max_real_eigenvalue() > 1e-12 {
            return outcome(false, format!("draw {i} is unstable"));
        }
        let [e1, e2] = a.eigenvalues();
        let scale = a.entries.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        let branch = match a.classify() {
            SolutionForm::Repeated { .. } => 2,
            _ if (e1 - e2).norm() < NEAR_REPEATED * scale => 2,
            SolutionForm::RealDistinct { .. } => 0,
            SolutionForm::ComplexPair { .. } => 1,
        };
        seen[branch] += 1;
        let rho_lr = Complex64::new(r.random_range(-0.3..0.3), r.random_range(-0.3..0.3));
        let initial = TwoLevelState::from_raw(r.random_range(0.2..0.8), rho_lr);
        let dynamics = DynamicsModel::GeneralLinear(model);
        let traj = evolve_samples(&dynamics, &initial, &times, TIGHT).unwrap();
        for (&t, s) in times.iter().zip(&traj.states) {
            let e = spectral_solution(&model, &initial, t);
            worst = worst.max((s.rho_ll() - e.rho_ll()).abs()).max((s.rho_lr() - e.rho_lr()).norm());
        }
    }
    let covered = seen.iter().all(|&n| n > 0);
    outcome(
        worst <= 1e-8 && covered,
        format!("max deviation {worst:.2e}; branches real/complex/repeated = {}/{}/{}", seen[0], seen[1], seen[2]),
    )
}

fn two_packet_state(n: usize) -> (WignerGrid, PacketState) {
    let state = PacketState::new(1.0, 0.08, Complex64::new(0.5, 0.0), 1.0);
    let (q, p) = default_axes(1.0, 0.08, 1.0, n).unwrap();
    (wigner_from_two_packets(q, p, &state).unwrap(), state)
}

fn commutator_identity() -> Outcome {
    let v = PotentialProfile::new(600.0, 1200.0, 3.0, 3.0 * 2f64.sqrt());
    let mut r = rng(7);
    let mut points = Vec::new();
    while points.len() < 20 {
        let x: f64 = if r.random::<bool>() { 0.5 } else { -0.5 } + r.random_range(-0.08..0.08);
        let y = if r.random::<bool>() { 0.5 } else { -0.5 } + r.random_range(-0.08..0.08);
        if (x - y).abs() > 0.02 {
            points.push((x, y));
        }
    }
    let worst_at = |n: usize| {
        let (w, state) = two_packet_state(n);
        let field = HamiltonianField::sample(&v, w.q, 1, None).unwrap();
        let bracket = poisson_bracket(&field, &w).unwrap();
        points
            .iter()
            .map(|&(x, y)| {
                let lhs = weyl_density_matrix(&bracket, x, y).unwrap();
                let rhs = potential_commutator_term(&v, 1.0, |a, b| state.kernel(a, b), x, y).unwrap();
                (lhs - rhs).norm() / rhs.norm()
            })
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (worst_at(256), worst_at(512));
    outcome(fine <= 1e-3 && fine < coarse, format!("max relative error {fine:.2e} at 512^2, {coarse:.2e} at 256^2"))
}

fn quadratic_collapse() -> Outcome {
    let v = QuadraticPotential::new(37.0, -4.5, 1.25);
    let (w, _) = two_packet_state(256);
    let mut worst = 0.0f64;
    for mass in [None, Some(1.0)] {
        let field = HamiltonianField::sample(&v, w.q, 7, mass).unwrap();
        let poisson = poisson_bracket(&field, &w).unwrap();
        let scale = poisson.max_abs();
        for n_max in 0..=3 {
            let moyal = moyal_bracket(&field, &w, BracketOrder::new(n_max)).unwrap();
            let diff = moyal.values.iter().zip(&poisson.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(diff / scale);
        }
    }
    outcome(worst <= 1e-14, format!("max |Moyal - Poisson| / max|Poisson| = {worst:.1e} for n_max 0..=3"))
}

fn desk_scale_oracle() -> Outcome {
    let report = match run_oracle(&ScaledConfig::reference()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("oracle failed: {e}")),
    };
    let wq = report.frequencies.omega_quantum;
    let rel = (report.moyal_phase_rate - wq).abs() / wq.abs();
    let poisson_ok = report.poisson_phase_rate.abs() < report.resolution_floor;
    outcome(
        rel <= 0.05 && poisson_ok && report.passed(),
        format!(
            "Moyal rate {:.5} vs omega_Q {wq:.5} (rel {rel:.1e}); Poisson rate {:.1e} vs floor {:.1e}",
            report.moyal_phase_rate, report.poisson_phase_rate, report.resolution_floor
        ),
    )
}

fn estimation_closure() -> Outcome {
    let (lambda, omega) = (0.05, 0.22);
    let model = DynamicsModel::TilloyDiosi { lambda, omega_g: omega };
    let times: Vec<f64> = (0..=240).map(|k| 0.5 * k as f64).collect();
    let record = synthesize_record(&model, &times, 0.0, 0).unwrap();
    let fit = match fit_damped_fringe(&record, None) {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("noiseless fit failed: {e}")),
    };
    let rel_l = (fit.lambda_hat - lambda).abs() / lambda;
    let rel_w = (fit.omega_hat - omega).abs() / omega;

    let times: Vec<f64> = (0..200).map(|k| 100.0 * k as f64 / 199.0).collect();
    let covered = (0..50u64)
        .filter(|&stream| {
            let record = synthesize_record_stream(&model, &times, 0.01, 7, stream).unwrap();
            fit_damped_fringe(&record, None)
                .map(|f| (f.omega_hat - omega).abs() <= 3.0 * f.stderr_omega())
                .unwrap_or(false)
        })
        .count();
    outcome(
        rel_l <= 1e-6 && rel_w <= 1e-6 && covered >= 45,
        format!("noiseless rel error lambda {rel_l:.1e}, omega {rel_w:.1e}; {covered}/50 seeds within 3 s.e."),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 headline frequency", headline_frequency),
        ("2 ball radii", ball_radii),
        ("3 Tilloy-Diosi closure", tilloy_diosi_closure),
        ("4 steady state", steady_state),
        ("5 signal degeneracy", signal_degeneracy),
        ("6 spectral equivalence", spectral_equivalence),
        ("7 commutator identity", commutator_identity),
        ("8 quadratic collapse", quadratic_collapse),
        ("9 desk-scale oracle", desk_scale_oracle),
        ("10 estimation closure", estimation_closure),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {name}: {} [{secs:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failures += usize::from(!o.pass);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
