use std::fmt::Write as _;

use anyhow::anyhow;
use gravint_core::constants::{load_config_file, ExperimentConfig, Side};
use gravint_core::gravity::{frequency_report, omega_classical, omega_quantum, solve_null_distance};
use gravint_core::phasespace::oracle::{run_oracle, OracleError, ScaledConfig};
use gravint_core::signal::{
    fit_damped_fringe, record_from_states, synthesize_record, uniform_times, FitGuess, FringeRecord, SignalError,
};
use gravint_core::twostate::{evolve_samples, DynamicsModel, GeneralLinear, TwoLevelState, DEFAULT_TOLERANCE};
use rayon::prelude::*;

use crate::manifest::RunManifest;
use crate::{
    input, numerical, Cli, Command, Failure, FitArgs, ModelKind, OracleArgs, SimulateArgs, SweepArgs, SweepParameter,
};

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let name = match &cli.command {
        Command::Frequencies => "frequencies",
        Command::Simulate(_) => "simulate",
        Command::Sweep(_) => "sweep",
        Command::ValidateOracle(_) => "validate-oracle",
        Command::Fit(_) => "fit",
    };
    let mut manifest = RunManifest::new(name, &cli.out, cli.seed);
    if let Some(t) = cli.tolerance {
        manifest.param("tolerance", t);
    }
    manifest.write().map_err(input)?;
    let result = match &cli.command {
        Command::Frequencies => frequencies(cli, &mut manifest),
        Command::Simulate(args) => simulate(cli, args, &mut manifest),
        Command::Sweep(args) => sweep(cli, args, &mut manifest),
        Command::ValidateOracle(args) => validate_oracle(cli, args, &mut manifest),
        Command::Fit(args) => fit(args, &mut manifest),
    };
    let status = match &result {
        Ok(()) => "ok",
        Err(Failure::Input(_)) => "input-error",
        Err(Failure::Numerical(_)) => "numerical-failure",
    };
    manifest.finish(status).map_err(input)?;
    result
}

fn experiment_config(cli: &Cli, manifest: &mut RunManifest) -> Result<ExperimentConfig, Failure> {
    let config = match &cli.config {
        Some(path) => {
            manifest.config_source = path.display().to_string();
            load_config_file(path).map_err(input)?
        }
        None => {
            manifest.config_source = "builtin:reference".into();
            ExperimentConfig::reference()
        }
    };
    manifest.resolved_config = config.to_toml();
    manifest.write().map_err(input)?;
    Ok(config)
}

fn frequencies(cli: &Cli, manifest: &mut RunManifest) -> Result<(), Failure> {
    let config = experiment_config(cli, manifest)?;
    let report = frequency_report(&config).map_err(input)?;
    let opt = |v: Option<f64>| v.map_or("infeasible".to_string(), |d| d.to_string());
    let mut text = String::new();
    let _ = writeln!(text, "omega_classical_rad_s = {}", report.omega_classical);
    let _ = writeln!(text, "omega_quantum_rad_s = {}", report.omega_quantum);
    let _ = writeln!(text, "radius_left_m = {}", report.radius_left);
    let _ = writeln!(text, "radius_right_m = {}", report.radius_right);
    let _ = writeln!(text, "null_dist_right_m = {}", opt(report.null_dist_right));
    let _ = writeln!(text, "null_quantum_dist_right_m = {}", opt(report.null_quantum_dist_right));

    // the same geometry with d1 rounded to the millimetre and d2 re-nulled
    let d1 = config.dist_left;
    let rounded = (d1 * 1000.0).round() / 1000.0;
    let _ = writeln!(text, "d1_exact_m = {d1}");
    let _ = writeln!(text, "d1_rounded_m = {rounded}");
    let renulled = config
        .with_distance(Side::Left, rounded)
        .ok()
        .and_then(|c| solve_null_distance(&c, Side::Right).ok().and_then(|d2| c.with_distance(Side::Right, d2).ok()));
    match renulled {
        Some(c) => {
            let _ = writeln!(text, "d2_rounded_nulled_m = {}", c.dist_right);
            let _ = writeln!(text, "omega_quantum_rounded_d1_rad_s = {}", omega_quantum(&c).map_err(numerical)?);
            let _ = writeln!(text, "omega_classical_rounded_d1_rad_s = {}", omega_classical(&c));
        }
        None => {
            let _ = writeln!(text, "omega_quantum_rounded_d1_rad_s = infeasible");
        }
    }
    print!("{text}");
    manifest.emit("frequencies.txt", text).map_err(input)?;
    Ok(())
}

fn build_model(config: &ExperimentConfig, args: &SimulateArgs) -> Result<DynamicsModel, Failure> {
    let given = |name: &'static str, present: bool| present.then_some(name);
    let complex_flags = [
        given("--a-lr", args.a_lr.is_some()),
        given("--b-lr", args.b_lr.is_some()),
        given("--b-rl", args.b_rl.is_some()),
    ];
    let rate_flags = [given("--lambda", args.lambda.is_some()), given("--omega-g", args.omega_g.is_some())];
    let drift_flags = [given("--mu1", args.mu1.is_some()), given("--mu2", args.mu2.is_some())];
    let reject = |flags: &[Option<&'static str>]| -> Result<(), Failure> {
        match flags.iter().flatten().next() {
            Some(flag) => Err(input(anyhow!("{flag} conflicts with --model {:?}", args.model))),
            None => Ok(()),
        }
    };
    let model = match args.model {
        ModelKind::Schrodinger | ModelKind::Classical => {
            reject(&complex_flags)?;
            reject(&rate_flags)?;
            reject(&drift_flags)?;
            if args.model == ModelKind::Schrodinger {
                let omega_q = match args.omega {
                    Some(w) => w,
                    None => omega_quantum(config).map_err(input)?,
                };
                DynamicsModel::Schrodinger { omega_q }
            } else {
                DynamicsModel::ClassicalPoisson { omega_c: args.omega.unwrap_or_else(|| omega_classical(config)) }
            }
        }
        ModelKind::TilloyDiosi => {
            reject(&complex_flags)?;
            reject(&drift_flags)?;
            reject(&[given("--omega", args.omega.is_some())])?;
            let (Some(lambda), Some(omega_g)) = (args.lambda, args.omega_g) else {
                return Err(input(anyhow!("tilloy-diosi needs --lambda and --omega-g")));
            };
            DynamicsModel::TilloyDiosi { lambda, omega_g }
        }
        ModelKind::General => {
            reject(&[given("--omega", args.omega.is_some())])?;
            let any_complex = complex_flags.iter().any(Option::is_some);
            let any_rates = rate_flags.iter().chain(&drift_flags).any(Option::is_some);
            match (any_complex, any_rates) {
                (true, true) => {
                    return Err(input(anyhow!(
                        "give either --a-lr/--b-lr/--b-rl or --lambda/--omega-g/--mu1/--mu2, not both"
                    )))
                }
                (true, false) => {
                    let (Some(a), Some(b), Some(c)) = (args.a_lr, args.b_lr, args.b_rl) else {
                        return Err(input(anyhow!("general needs all of --a-lr, --b-lr and --b-rl")));
                    };
                    DynamicsModel::GeneralLinear(GeneralLinear::new(a, b, c))
                }
                (false, true) => {
                    let (Some(lambda), Some(omega_g)) = (args.lambda, args.omega_g) else {
                        return Err(input(anyhow!("general needs --lambda and --omega-g with --mu1/--mu2")));
                    };
                    DynamicsModel::GeneralLinear(GeneralLinear::dephasing_with_drift(
                        lambda,
                        omega_g,
                        args.mu1.unwrap_or(0.0),
                        args.mu2.unwrap_or(0.0),
                    ))
                }
                (false, false) => return Err(input(anyhow!("general needs model coefficients"))),
            }
        }
    };
    model.validate().map_err(input)?;
    Ok(model)
}

fn simulate(cli: &Cli, args: &SimulateArgs, manifest: &mut RunManifest) -> Result<(), Failure> {
    let config = experiment_config(cli, manifest)?;
    let model = build_model(&config, args)?;
    let duration = args.duration.unwrap_or(config.hold_time);
    if !(duration > 0.0 && duration.is_finite()) || args.samples < 2 {
        return Err(input(anyhow!("need a positive --duration and at least 2 --samples")));
    }
    let tolerance = cli.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    manifest
        .param("model", model)
        .param("duration_s", duration)
        .param("samples", args.samples)
        .param("noise_sd", args.noise_sd)
        .param("solver", if args.integrate { "adaptive-rk45" } else { "exact" });
    if args.integrate {
        manifest.param("integrator_tolerance", tolerance);
    }
    manifest.write().map_err(input)?;

    let times = uniform_times(duration, args.samples);
    let record = if args.integrate {
        let trajectory = evolve_samples(&model, &TwoLevelState::plus(), &times, tolerance).map_err(|e| match e {
            gravint_core::twostate::TwoStateError::Integration(_) => numerical(e),
            other => input(other),
        })?;
        for w in &trajectory.warnings {
            eprintln!("warning: {w:?}");
        }
        record_from_states(&model, &times, &trajectory.states, args.noise_sd, cli.seed, 0)
    } else {
        synthesize_record(&model, &times, args.noise_sd, cli.seed)
    }
    .map_err(input)?;
    manifest.emit(&args.output, record.to_csv()).map_err(input)?;
    Ok(())
}

fn sweep_label(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::D1 => "d1_m",
        SweepParameter::D2 => "d2_m",
        SweepParameter::M1 => "m1_kg",
        SweepParameter::M2 => "m2_kg",
        SweepParameter::Dx => "dx_m",
    }
}

fn sweep_row(base: &ExperimentConfig, parameter: SweepParameter, value: f64) -> String {
    let mut c = base.clone();
    match parameter {
        SweepParameter::D1 => c.dist_left = value,
        SweepParameter::D2 => c.dist_right = value,
        SweepParameter::M1 => c.mass_left = value,
        SweepParameter::M2 => c.mass_right = value,
        SweepParameter::Dx => c.arm_separation = value,
    }
    let outcome = c
        .validate()
        .map_err(|e| e.to_string())
        .and_then(|()| omega_quantum(&c).map_err(|e| e.to_string()).map(|wq| (omega_classical(&c), wq)));
    match outcome {
        Ok((wc, wq)) => format!("{value},{wc},{wq},ok"),
        Err(e) => format!("{value},,,infeasible: {}", e.replace(',', ";")),
    }
}

fn sweep(cli: &Cli, args: &SweepArgs, manifest: &mut RunManifest) -> Result<(), Failure> {
    let config = experiment_config(cli, manifest)?;
    if args.steps == 0 {
        return Err(input(anyhow!("--steps must be at least 1")));
    }
    if !(args.from.is_finite() && args.to.is_finite()) {
        return Err(input(anyhow!("sweep bounds must be finite")));
    }
    manifest
        .param("parameter", sweep_label(args.parameter))
        .param("from", args.from)
        .param("to", args.to)
        .param("steps", args.steps);
    manifest.write().map_err(input)?;
    let values: Vec<f64> = if args.steps == 1 {
        vec![args.from]
    } else {
        (0..args.steps).map(|k| args.from + (args.to - args.from) * k as f64 / (args.steps - 1) as f64).collect()
    };
    // rows are computed in parallel and collected in input order
    let rows: Vec<String> = values.par_iter().map(|&v| sweep_row(&config, args.parameter, v)).collect();
    let mut csv = format!("{},omega_classical_rad_s,omega_quantum_rad_s,status\n", sweep_label(args.parameter));
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    manifest.emit(&args.output, csv).map_err(input)?;
    Ok(())
}

fn validate_oracle(cli: &Cli, args: &OracleArgs, manifest: &mut RunManifest) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => {
            manifest.config_source = path.display().to_string();
            ScaledConfig::from_file(path).map_err(input)?
        }
        None => {
            manifest.config_source = "builtin:scaled-reference".into();
            ScaledConfig::reference()
        }
    };
    if let Some(n) = args.grid {
        config.n_q = n;
        config.n_p = n;
    }
    if let Some(s) = args.samples {
        config.phase_samples = s;
    }
    if let Some(t) = cli.tolerance {
        config.tolerance = t;
    }
    config.validate().map_err(input)?;
    manifest.resolved_config = config.to_toml();
    manifest.write().map_err(input)?;

    let report = run_oracle(&config).map_err(|e| match e {
        OracleError::Config(_) => input(e),
        OracleError::PhaseSpace(_) => numerical(e),
    })?;
    let text = report.to_text();
    print!("{text}");
    manifest.emit("oracle_report.txt", &text).map_err(input)?;
    manifest.emit("oracle_phases.csv", report.phases_csv()).map_err(input)?;
    if args.snapshot {
        let mut bytes = Vec::new();
        report.final_state.write_binary(&mut bytes).map_err(input)?;
        manifest.emit("wigner_final.bin", bytes).map_err(input)?;
        manifest.emit("wigner_final.meta.toml", report.final_state.metadata_text()).map_err(input)?;
    }
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        Err(numerical(anyhow!("oracle checks failed: {}", failed.join(", "))))
    }
}

fn fit(args: &FitArgs, manifest: &mut RunManifest) -> Result<(), Failure> {
    manifest.config_source = args.record.display().to_string();
    let record = FringeRecord::read(&args.record).map_err(input)?;
    let guess = FitGuess { omega: args.omega_guess, lambda: args.lambda_guess };
    manifest.param("record_model", &record.model).param("samples", record.times.len());
    if let Some(w) = args.omega_guess {
        manifest.param("omega_guess", w);
    }
    if let Some(l) = args.lambda_guess {
        manifest.param("lambda_guess", l);
    }
    manifest.write().map_err(input)?;
    let result = fit_damped_fringe(&record, Some(guess)).map_err(|e| match e {
        SignalError::InvalidRecord(_) => input(e),
        other => numerical(other),
    })?;
    let mut text = format!("record_model = {}\n", record.model);
    text.push_str(&result.to_text());
    print!("{text}");
    manifest.emit(&args.output, text).map_err(input)?;
    Ok(())
}
