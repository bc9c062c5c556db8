//! Interferometer signal, synthetic fringe records and their estimation.

mod fit;

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::twostate::{exact_state, DynamicsModel, TwoLevelState, TwoStateError};

pub use fit::{fit_damped_fringe, fringe_model, FitGuess, FitResult, MAX_ITERATIONS};

/// Slack on `[0, 1]` for noiseless signals.
pub const SIGNAL_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("record spans {periods:.3} fringe periods; at least 2 are needed")]
    InsufficientSpan { periods: f64 },
    #[error("fit did not converge after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },
    #[error("record has no population track")]
    MissingPopulation,
    #[error("noise standard deviation must be non-negative and finite, got {0}")]
    InvalidNoise(f64),
    #[error(transparent)]
    Model(#[from] TwoStateError),
}

/// `S = ⟨+|ρ|+⟩ = 1/2 + Re ρ_LR`.
pub fn signal_from_state(state: &TwoLevelState) -> f64 {
    0.5 + state.rho_lr().re
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeRecord {
    pub times: Vec<f64>,
    pub signal: Vec<f64>,
    pub population: Option<Vec<f64>>,
    /// Descriptor of the generating model.
    pub model: String,
    pub seed: u64,
    pub noise_sd: f64,
}

impl FringeRecord {
    pub fn validate(&self) -> Result<(), SignalError> {
        let n = self.times.len();
        if self.signal.len() != n || self.population.as_ref().is_some_and(|p| p.len() != n) {
            return Err(SignalError::InvalidRecord("column lengths differ".into()));
        }
        if self.model.contains(',') {
            return Err(SignalError::InvalidRecord("model descriptor contains a comma".into()));
        }
        if let Some(w) = self.times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(SignalError::InvalidRecord(format!("times not strictly increasing at {}", w[1])));
        }
        if self.times.iter().chain(&self.signal).any(|v| !v.is_finite()) {
            return Err(SignalError::InvalidRecord("non-finite sample".into()));
        }
        if self.noise_sd == 0.0 {
            if let Some(s) = self.signal.iter().find(|s| !(-SIGNAL_SLACK..=1.0 + SIGNAL_SLACK).contains(*s)) {
                return Err(SignalError::InvalidRecord(format!("noiseless signal {s} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// CSV with a `# model=...,seed=...,noise_sd=...` header line and
    /// columns `t_s,signal[,population]`. Floats use the shortest text that
    /// parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# model={},seed={},noise_sd={}\n", self.model, self.seed, self.noise_sd);
        match &self.population {
            Some(pop) => {
                out.push_str("t_s,signal,population\n");
                for ((t, s), p) in self.times.iter().zip(&self.signal).zip(pop) {
                    let _ = writeln!(out, "{t},{s},{p}");
                }
            }
            None => {
                out.push_str("t_s,signal\n");
                for (t, s) in self.times.iter().zip(&self.signal) {
                    let _ = writeln!(out, "{t},{s}");
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, SignalError> {
        let bad = |m: String| SignalError::InvalidRecord(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty record".into()))?;
        let meta = header.strip_prefix('#').ok_or_else(|| bad("missing '# model=...' header".into()))?;
        let (mut model, mut seed, mut noise_sd) = (None, None, None);
        for field in meta.trim().split(',') {
            let (key, value) = field.split_once('=').ok_or_else(|| bad(format!("bad header field '{field}'")))?;
            match key.trim() {
                "model" => model = Some(value.trim().to_string()),
                "seed" => seed = Some(value.trim().parse().map_err(|_| bad(format!("bad seed '{value}'")))?),
                "noise_sd" => {
                    noise_sd = Some(value.trim().parse().map_err(|_| bad(format!("bad noise_sd '{value}'")))?)
                }
                other => return Err(bad(format!("unknown header key '{other}'"))),
            }
        }
        let columns = lines.next().ok_or_else(|| bad("missing column header".into()))?;
        let with_population = match columns.trim() {
            "t_s,signal" => false,
            "t_s,signal,population" => true,
            other => return Err(bad(format!("unexpected columns '{other}'"))),
        };
        let (mut times, mut signal, mut population) = (Vec::new(), Vec::new(), Vec::new());
        for (k, line) in lines.enumerate() {
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("unparseable row {}: '{line}'", k + 1)))?;
            if values.len() != 2 + with_population as usize {
                return Err(bad(format!("row {} has {} columns", k + 1, values.len())));
            }
            times.push(values[0]);
            signal.push(values[1]);
            if with_population {
                population.push(values[2]);
            }
        }
        let record = Self {
            times,
            signal,
            population: with_population.then_some(population),
            model: model.ok_or_else(|| bad("header lacks model".into()))?,
            seed: seed.ok_or_else(|| bad("header lacks seed".into()))?,
            noise_sd: noise_sd.ok_or_else(|| bad("header lacks noise_sd".into()))?,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, SignalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SignalError::InvalidRecord(format!("{}: {e}", path.display())))?;
        Self::from_csv(&text)
    }

    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// Random stream for repetition `stream` of a run seeded with `seed`.
///
/// Every repetition uses the same ChaCha8 key and its own stream number, so
/// repetitions are independent and each one is reproducible on its own.
pub fn noise_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Record of `model` started from |+⟩, with additive Gaussian noise on the
/// signal drawn from stream 0 of `seed`.
pub fn synthesize_record(
    model: &DynamicsModel,
    times: &[f64],
    noise_sd: f64,
    seed: u64,
) -> Result<FringeRecord, SignalError> {
    synthesize_record_stream(model, times, noise_sd, seed, 0)
}

/// [`synthesize_record`] on an explicit random stream, for Monte-Carlo
/// repetitions.
pub fn synthesize_record_stream(
    model: &DynamicsModel,
    times: &[f64],
    noise_sd: f64,
    seed: u64,
    stream: u64,
) -> Result<FringeRecord, SignalError> {
    model.validate()?;
    let plus = TwoLevelState::plus();
    let states = times.iter().map(|&t| exact_state(model, &plus, t)).collect::<Result<Vec<_>, _>>()?;
    record_from_states(model, times, &states, noise_sd, seed, stream)
}

/// Builds a record from states already evolved to `times`. The population
/// track is kept for the general linear model, the only one that moves it.
pub fn record_from_states(
    model: &DynamicsModel,
    times: &[f64],
    states: &[TwoLevelState],
    noise_sd: f64,
    seed: u64,
    stream: u64,
) -> Result<FringeRecord, SignalError> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(SignalError::InvalidNoise(noise_sd));
    }
    if states.len() != times.len() {
        return Err(SignalError::InvalidRecord("one state per sample time is required".into()));
    }
    let mut signal: Vec<f64> = states.iter().map(signal_from_state).collect();
    if noise_sd > 0.0 {
        let normal = Normal::new(0.0, noise_sd).map_err(|_| SignalError::InvalidNoise(noise_sd))?;
        let mut rng = noise_rng(seed, stream);
        for s in signal.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }
    let population =
        matches!(model, DynamicsModel::GeneralLinear(_)).then(|| states.iter().map(|s| s.rho_ll()).collect());
    let record = FringeRecord { times: times.to_vec(), signal, population, model: model.to_string(), seed, noise_sd };
    record.validate()?;
    Ok(record)
}

/// `n` evenly spaced sample times over `[0, duration]`.
pub fn uniform_times(duration: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| duration * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Power `|Σ (y_i − ȳ) e^{−iωt_i}|² / n` at each angular frequency.
pub fn periodogram(times: &[f64], values: &[f64], omegas: &[f64]) -> Vec<f64> {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    omegas
        .iter()
        .map(|&w| {
            let (mut c, mut s) = (0.0, 0.0);
            for (t, y) in times.iter().zip(values) {
                let (sin, cos) = (w * t).sin_cos();
                c += (y - mean) * cos;
                s += (y - mean) * sin;
            }
            (c * c + s * s) / n
        })
        .collect()
}

/// Angular frequency of the periodogram maximum, searched on a grid ten
/// times finer than the record's resolution `2π/T` up to the Nyquist rate
/// of the mean spacing, then refined by golden-section search. `None` when
/// the record carries no oscillation.
pub fn periodogram_peak(times: &[f64], values: &[f64]) -> Option<f64> {
    let n = times.len();
    if n < 4 {
        return None;
    }
    let span = times[n - 1] - times[0];
    let resolution = 2.0 * std::f64::consts::PI / span;
    let nyquist = std::f64::consts::PI * (n - 1) as f64 / span;
    let step = resolution / 10.0;
    let grid: Vec<f64> = (1..).map(|k| k as f64 * step).take_while(|w| *w <= nyquist).collect();
    let power = periodogram(times, values, &grid);
    let (best, &peak) = power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let total: f64 = values.iter().map(|v| v * v).sum();
    if !(peak > 1e-20 * total.max(f64::MIN_POSITIVE)) || peak == 0.0 {
        return None;
    }
    let f = |w: f64| -periodogram(times, values, &[w])[0];
    let (mut a, mut b) = ((grid[best] - step).max(0.5 * step), grid[best] + step);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - ratio * (b - a), a + ratio * (b - a));
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-12 * b {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    Some(0.5 * (a + b))
}

/// Late-time population shift: mean `ρ_LL` over the final quarter of the
/// record, minus 1/2.
pub fn population_shift(record: &FringeRecord) -> Result<f64, SignalError> {
    let pop = record.population.as_ref().ok_or(SignalError::MissingPopulation)?;
    if pop.is_empty() {
        return Err(SignalError::InvalidRecord("empty record".into()));
    }
    let start = record.times[0] + 0.75 * record.span();
    let late: Vec<f64> = record.times.iter().zip(pop).filter(|(t, _)| **t >= start).map(|(_, p)| *p).collect();
    Ok(late.iter().sum::<f64>() / late.len() as f64 - 0.5)
}
