//! Experiment runner: configuration, seeded runs, CSV output and summaries.
//!
//! A configuration is a flat TOML file. Every key is optional and missing keys
//! take the defaults of the reference experiment: a 4-dimensional quadratic
//! with eigenvalues `1e-2, 1, 1e2, 1e4`, unit noise, `l = 4 eps_g / m` and 20
//! runs from `x0 = 1e5 (1, 1, 1, 1)`. Command-line flags override file values.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    self, descent_bound_check, envelope_violations, good_iterate_stats, GoodIterateStats, Quartiles, TheoryConstants,
    TheoryInputs, TransferDirection, TransferInputs,
};
use crate::bfgs::{run, AlgoConfig, IterateRecord, RunResult, RunStatus};
use crate::error::{Error, Result};
use crate::linalg::{SymMatrix, Vector};
use crate::linesearch::LineSearchParams;
use crate::problems::{make_quadratic, CallCounts, NoiseModel, NoisyOracle, Quadratic};

/// Lengthening parameter used by `--noiseless` unless `l` is given explicitly.
pub const NOISELESS_L: f64 = 1e-8;

/// Column order of every CSV file. Part of the output format.
pub const CSV_COLUMNS: [&str; 14] = [
    "run_id",
    "iter",
    "f_noisy",
    "phi_true",
    "gap",
    "grad_true_norm",
    "grad_noisy_norm",
    "cos_theta",
    "cos_theta_tilde",
    "alpha",
    "ls_trials",
    "ls_failed",
    "lengthened",
    "cond_metric",
];

/// How the lengthening parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lengthening {
    Absolute(f64),
    /// `l = factor * eps_g / m`.
    Factor(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub eigenvalues: Vec<f64>,
    pub rotation_seed: Option<u64>,
    pub eps_f: f64,
    pub eps_g: f64,
    pub seed: u64,
    pub c1: f64,
    pub c2: f64,
    pub lengthening: Lengthening,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub max_consecutive_failures: usize,
    pub max_bisections: usize,
    pub runs: usize,
    pub x0: Vec<f64>,
    /// `H0 = h0_scale * I`.
    pub h0_scale: f64,
    /// Fraction of good iterates used for the theory constants.
    pub q: f64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dimension: 4,
            eigenvalues: vec![1e-2, 1.0, 1e2, 1e4],
            rotation_seed: None,
            eps_f: 1.0,
            eps_g: 1.0,
            seed: 0,
            c1: 0.01,
            c2: 0.5,
            lengthening: Lengthening::Factor(4.0),
            grad_tol: 1e-5,
            max_iters: 60,
            max_consecutive_failures: 30,
            max_bisections: 64,
            runs: 20,
            x0: vec![1e5; 4],
            h0_scale: 1.0,
            q: 0.5,
            out: PathBuf::from("out/experiment"),
        }
    }
}

/// `x0` in a file: a full vector or a scalar meaning `scalar * ones`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum StartPoint {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dimension: Option<usize>,
    eigenvalues: Option<Vec<f64>>,
    rotation_seed: Option<u64>,
    eps_f: Option<f64>,
    eps_g: Option<f64>,
    seed: Option<u64>,
    c1: Option<f64>,
    c2: Option<f64>,
    l: Option<f64>,
    l_factor: Option<f64>,
    grad_tol: Option<f64>,
    max_iters: Option<usize>,
    max_consecutive_failures: Option<usize>,
    max_bisections: Option<usize>,
    runs: Option<usize>,
    x0: Option<StartPoint>,
    h0_scale: Option<f64>,
    q: Option<f64>,
    out: Option<PathBuf>,
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Overrides {
    /// Number of runs
    #[arg(long)]
    pub runs: Option<usize>,
    /// Base seed; run i uses seed + i
    #[arg(long)]
    pub seed: Option<u64>,
    /// Function noise bound
    #[arg(long = "eps-f")]
    pub eps_f: Option<f64>,
    /// Gradient noise bound
    #[arg(long = "eps-g")]
    pub eps_g: Option<f64>,
    /// Lengthening parameter
    #[arg(long, conflicts_with = "l_factor")]
    pub l: Option<f64>,
    /// Lengthening parameter as a multiple of eps_g / m
    #[arg(long = "l-factor")]
    pub l_factor: Option<f64>,
    /// Output path prefix
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Zero noise; l defaults to 1e-8 unless given
    #[arg(long)]
    pub noiseless: bool,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Builds a configuration from TOML text (possibly empty) and overrides.
    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if file.l.is_some() && file.l_factor.is_some() {
            return Err(config_err("give at most one of l and l_factor"));
        }
        let mut cfg = ExperimentConfig::default();
        let eigenvalues_given = file.eigenvalues.is_some();
        if let Some(v) = file.eigenvalues {
            cfg.eigenvalues = v;
        }
        cfg.dimension = match file.dimension {
            Some(d) => d,
            None if eigenvalues_given => cfg.eigenvalues.len(),
            None => cfg.dimension,
        };
        cfg.rotation_seed = file.rotation_seed;
        cfg.eps_f = overrides.eps_f.or(file.eps_f).unwrap_or(cfg.eps_f);
        cfg.eps_g = overrides.eps_g.or(file.eps_g).unwrap_or(cfg.eps_g);
        cfg.seed = overrides.seed.or(file.seed).unwrap_or(cfg.seed);
        cfg.c1 = file.c1.unwrap_or(cfg.c1);
        cfg.c2 = file.c2.unwrap_or(cfg.c2);
        cfg.grad_tol = file.grad_tol.unwrap_or(cfg.grad_tol);
        cfg.max_iters = file.max_iters.unwrap_or(cfg.max_iters);
        cfg.max_consecutive_failures = file.max_consecutive_failures.unwrap_or(cfg.max_consecutive_failures);
        cfg.max_bisections = file.max_bisections.unwrap_or(cfg.max_bisections);
        cfg.runs = overrides.runs.or(file.runs).unwrap_or(cfg.runs);
        cfg.h0_scale = file.h0_scale.unwrap_or(cfg.h0_scale);
        cfg.q = file.q.unwrap_or(cfg.q);
        cfg.out = overrides.out.clone().or(file.out).unwrap_or(cfg.out);
        cfg.x0 = match file.x0 {
            Some(StartPoint::Vector(v)) => v,
            Some(StartPoint::Scalar(a)) => vec![a; cfg.dimension],
            None => vec![1e5; cfg.dimension],
        };

        // A flag of either kind replaces whatever the file says.
        let explicit = match (overrides.l, overrides.l_factor) {
            (Some(l), _) => Some(Lengthening::Absolute(l)),
            (None, Some(f)) => Some(Lengthening::Factor(f)),
            (None, None) => file.l.map(Lengthening::Absolute).or(file.l_factor.map(Lengthening::Factor)),
        };
        if overrides.noiseless {
            cfg.eps_f = 0.0;
            cfg.eps_g = 0.0;
            cfg.lengthening = match explicit {
                Some(Lengthening::Absolute(l)) => Lengthening::Absolute(l),
                _ => Lengthening::Absolute(NOISELESS_L),
            };
        } else if let Some(l) = explicit {
            cfg.lengthening = l;
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(config_err("dimension must be positive"));
        }
        if self.eigenvalues.len() != self.dimension {
            return Err(config_err(format!(
                "{} eigenvalues given for dimension {}",
                self.eigenvalues.len(),
                self.dimension
            )));
        }
        if self.x0.len() != self.dimension {
            return Err(config_err(format!(
                "x0 has {} entries for dimension {}",
                self.x0.len(),
                self.dimension
            )));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(config_err("x0 must be finite"));
        }
        if !(self.eps_f >= 0.0 && self.eps_f.is_finite() && self.eps_g >= 0.0 && self.eps_g.is_finite()) {
            return Err(config_err(format!(
                "noise bounds must be finite and non-negative, got eps_f = {}, eps_g = {}",
                self.eps_f, self.eps_g
            )));
        }
        if self.runs == 0 {
            return Err(config_err("runs must be at least 1"));
        }
        if !(self.h0_scale > 0.0 && self.h0_scale.is_finite()) {
            return Err(config_err("h0_scale must be positive"));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(config_err("q must lie in (0, 1)"));
        }
        if let Lengthening::Factor(f) = self.lengthening {
            if !(f > 0.0) {
                return Err(config_err("l_factor must be positive"));
            }
        }
        make_quadratic(self.dimension, &self.eigenvalues, self.rotation_seed)
            .map_err(|e| config_err(e.to_string()))?;
        self.algo_config()
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        Ok(())
    }

    fn m(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn big_m(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The resolved lengthening parameter `l`.
    pub fn l(&self) -> f64 {
        match self.lengthening {
            Lengthening::Absolute(l) => l,
            Lengthening::Factor(f) => f * self.eps_g / self.m(),
        }
    }

    pub fn algo_config(&self) -> AlgoConfig {
        AlgoConfig {
            l: self.l(),
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            max_consecutive_failures: self.max_consecutive_failures,
            line_search: LineSearchParams {
                c1: self.c1,
                c2: self.c2,
                max_bisections: self.max_bisections,
            },
        }
    }

    pub fn problem(&self) -> Result<Quadratic> {
        make_quadratic(self.dimension, &self.eigenvalues, self.rotation_seed)
    }

    pub fn h0(&self) -> SymMatrix {
        SymMatrix::identity(self.dimension).scaled(self.h0_scale)
    }

    pub fn theory_inputs(&self) -> TheoryInputs {
        TheoryInputs {
            m: self.m(),
            big_m: self.big_m(),
            eps_f: self.eps_f,
            eps_g: self.eps_g,
            l: self.l(),
            c1: self.c1,
            c2: self.c2,
            q: self.q,
            h0: self.h0(),
        }
    }
}

/// Outcome of one run together with the seed it used.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run_id: usize,
    pub seed: u64,
    pub result: RunResult,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<RunOutput>,
    pub summary: Summary,
}

/// Runs every seeded run of the experiment. Runs execute in parallel and are
/// returned in run order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let problem = config.problem()?;
    let algo = config.algo_config();
    let x0 = Vector::from(config.x0.as_slice());
    let h0 = config.h0();
    let runs: Vec<RunOutput> = (0..config.runs)
        .into_par_iter()
        .map(|i| {
            let seed = config.seed.wrapping_add(i as u64);
            let noise = NoiseModel::new(config.eps_f, config.eps_g, seed)?;
            let mut oracle = NoisyOracle::new(&problem, noise);
            let recorder = crate::bfgs::Recorder::new(&problem);
            let result = run(x0.clone(), h0.clone(), &mut oracle, &recorder, &algo, i)?;
            Ok(RunOutput { run_id: i, seed, result })
        })
        .collect::<Result<_>>()?;
    let summary = summarize(config, &runs);
    Ok(ExperimentOutput { runs, summary })
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write_records<W: std::io::Write>(records: &[IterateRecord], w: &mut csv::Writer<W>) -> csv::Result<()> {
    for r in records {
        w.write_record([
            r.run_id.to_string(),
            r.iter.to_string(),
            fmt_real(r.f_noisy),
            fmt_real(r.phi_true),
            fmt_real(r.gap),
            fmt_real(r.grad_true_norm),
            fmt_real(r.grad_noisy_norm),
            fmt_real(r.cos_theta),
            fmt_real(r.cos_theta_tilde),
            fmt_real(r.alpha),
            r.ls_trials.to_string(),
            fmt_bool(r.ls_failed).to_string(),
            fmt_bool(r.lengthened).to_string(),
            fmt_real(r.cond_metric),
        ])?;
    }
    Ok(())
}

/// Writes a header and one row per record. Reals carry 17 significant digits,
/// so reading them back is bit-exact.
pub fn write_csv(records: &[IterateRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(CSV_COLUMNS).map_err(|e| io_err(path, e))?;
    write_records(records, &mut w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub run_id: usize,
    pub iter: usize,
    pub f_noisy: f64,
    pub phi_true: f64,
    pub gap: f64,
    pub grad_true_norm: f64,
    pub grad_noisy_norm: f64,
    pub cos_theta: f64,
    pub cos_theta_tilde: f64,
    pub alpha: f64,
    pub ls_trials: usize,
    pub ls_failed: bool,
    pub lengthened: bool,
    pub cond_metric: f64,
}

impl CsvRow {
    /// The row a record is written as.
    pub fn from_record(r: &IterateRecord) -> Self {
        CsvRow {
            run_id: r.run_id,
            iter: r.iter,
            f_noisy: r.f_noisy,
            phi_true: r.phi_true,
            gap: r.gap,
            grad_true_norm: r.grad_true_norm,
            grad_noisy_norm: r.grad_noisy_norm,
            cos_theta: r.cos_theta,
            cos_theta_tilde: r.cos_theta_tilde,
            alpha: r.alpha,
            ls_trials: r.ls_trials,
            ls_failed: r.ls_failed,
            lengthened: r.lengthened,
            cond_metric: r.cond_metric,
        }
    }
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> std::result::Result<T, String> {
    let raw = rec.get(i).ok_or_else(|| format!("missing column {}", CSV_COLUMNS[i]))?;
    raw.parse()
        .map_err(|_| format!("bad value {raw:?} in column {}", CSV_COLUMNS[i]))
}

fn parse_flag(rec: &csv::StringRecord, i: usize) -> std::result::Result<bool, String> {
    match rec.get(i) {
        Some("0") => Ok(false),
        Some("1") => Ok(true),
        other => Err(format!("bad flag {other:?} in column {}", CSV_COLUMNS[i])),
    }
}

fn parse_row(rec: &csv::StringRecord) -> std::result::Result<CsvRow, String> {
    Ok(CsvRow {
        run_id: parse_field(rec, 0)?,
        iter: parse_field(rec, 1)?,
        f_noisy: parse_field(rec, 2)?,
        phi_true: parse_field(rec, 3)?,
        gap: parse_field(rec, 4)?,
        grad_true_norm: parse_field(rec, 5)?,
        grad_noisy_norm: parse_field(rec, 6)?,
        cos_theta: parse_field(rec, 7)?,
        cos_theta_tilde: parse_field(rec, 8)?,
        alpha: parse_field(rec, 9)?,
        ls_trials: parse_field(rec, 10)?,
        ls_failed: parse_flag(rec, 11)?,
        lengthened: parse_flag(rec, 12)?,
        cond_metric: parse_field(rec, 13)?,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| io_err(path, e))?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(io_err(path, "unexpected header"));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| io_err(path, e))?;
            parse_row(&rec).map_err(|e| io_err(path, e))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransferCounts {
    /// Iterates where a noisy Armijo-Wolfe step is guaranteed to exist.
    pub noisy_from_true: usize,
    /// Iterates where any noisy Armijo-Wolfe step also satisfies the true conditions.
    pub true_from_noisy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_id: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub iterations: usize,
    /// Minimum gap over all recorded iterates and the final point.
    pub min_gap: f64,
    pub final_gap: f64,
    pub min_log10_gap: f64,
    pub final_log10_gap: f64,
    pub final_log10_grad_norm: f64,
    pub first_lengthening: Option<usize>,
    pub lengthening_count: usize,
    pub line_search_failures: usize,
    pub initial_cond_metric: Option<f64>,
    pub final_cond_metric: f64,
    pub calls: CallCounts,
    /// Calls summed over the per-iteration records; equal to `calls`.
    pub record_calls: CallCounts,
    pub envelope_violations: usize,
    pub descent_bound_violations: usize,
    pub transfer: TransferCounts,
    pub good_iterates: GoodIterateStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    pub converged: usize,
    pub stalled: usize,
    pub iter_limit: usize,
    pub max_min_gap: f64,
    pub median_final_gap: f64,
    pub first_lengthening: Option<Quartiles>,
    pub runs_without_lengthening: usize,
    pub envelope_violations: usize,
    pub cos_theta: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub l: f64,
    pub runs: Vec<RunSummary>,
    pub aggregate: Aggregate,
    pub theory: Option<TheoryConstants>,
    /// Why `theory` is absent.
    pub theory_error: Option<String>,
}

fn log10_or_neg_inf(v: f64) -> f64 {
    if v > 0.0 {
        v.log10()
    } else {
        f64::NEG_INFINITY
    }
}

fn median(values: &[f64]) -> f64 {
    analysis::quartiles(values).map_or(f64::NAN, |q| q.median)
}

/// `phi` after each record's step: the next record, or the final point for the last one.
fn phi_after_steps(run: &RunResult) -> Vec<f64> {
    let recs = &run.records;
    (0..recs.len())
        .map(|k| recs.get(k + 1).map_or(run.final_point.phi, |r| r.phi_true))
        .collect()
}

fn summarize_run(config: &ExperimentConfig, beta1: f64, out: &RunOutput) -> RunSummary {
    let run = &out.result;
    let recs = &run.records;
    let min_gap = recs
        .iter()
        .map(|r| r.gap)
        .fold(run.final_point.gap, f64::min);
    let record_calls = recs.iter().fold(CallCounts::default(), |acc, r| CallCounts {
        f_evals: acc.f_evals + r.f_evals,
        g_evals: acc.g_evals + r.g_evals,
    });
    let mut phis: Vec<f64> = recs.iter().map(|r| r.phi_true).collect();
    if run.status == RunStatus::IterLimit || recs.is_empty() {
        phis.push(run.final_point.phi);
    }
    let envelope = envelope_violations(&phis, config.eps_f).map_or(0, |v| v.len());

    let big_m = config.big_m();
    let descent_bound_violations = recs
        .iter()
        .zip(phi_after_steps(run))
        .filter(|(r, _)| r.alpha > 0.0)
        .filter(|(r, after)| {
            !descent_bound_check(
                r.phi_true,
                *after,
                r.grad_true_norm,
                r.cos_theta_tilde,
                config.c1,
                config.c2,
                big_m,
            )
        })
        .count();

    let mut transfer = TransferCounts {
        noisy_from_true: 0,
        true_from_noisy: 0,
    };
    for r in recs {
        let inputs = TransferInputs {
            cos_theta: r.cos_theta,
            cos_theta_tilde: r.cos_theta_tilde,
            c1: config.c1,
            c2: config.c2,
            big_m,
            eps_f: config.eps_f,
            eps_g: config.eps_g,
        };
        if analysis::transfer_conditions_hold(r.grad_true_norm, &inputs, TransferDirection::NoisyFromTrue) {
            transfer.noisy_from_true += 1;
        }
        if analysis::transfer_conditions_hold(r.grad_true_norm, &inputs, TransferDirection::TrueFromNoisy) {
            transfer.true_from_noisy += 1;
        }
    }

    RunSummary {
        run_id: out.run_id,
        seed: out.seed,
        status: run.status,
        iterations: recs.len(),
        min_gap,
        final_gap: run.final_point.gap,
        min_log10_gap: log10_or_neg_inf(min_gap),
        final_log10_gap: log10_or_neg_inf(run.final_point.gap),
        final_log10_grad_norm: log10_or_neg_inf(run.final_point.grad_true_norm),
        first_lengthening: recs.iter().find(|r| r.lengthened).map(|r| r.iter),
        lengthening_count: recs.iter().filter(|r| r.lengthened).count(),
        line_search_failures: recs.iter().filter(|r| r.ls_failed).count(),
        initial_cond_metric: recs.first().map(|r| r.cond_metric),
        final_cond_metric: run.final_point.cond_metric,
        calls: run.calls,
        record_calls,
        envelope_violations: envelope,
        descent_bound_violations,
        transfer,
        good_iterates: good_iterate_stats(recs, beta1, config.q),
    }
}

/// Per-run and aggregate statistics plus the theory constants for the configuration.
pub fn summarize(config: &ExperimentConfig, runs: &[RunOutput]) -> Summary {
    let (theory, theory_error) = match TheoryConstants::compute(&config.theory_inputs()) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let beta1 = theory.as_ref().map_or(0.0, |t| t.beta1);
    let per_run: Vec<RunSummary> = runs.iter().map(|r| summarize_run(config, beta1, r)).collect();

    let count = |s: RunStatus| per_run.iter().filter(|r| r.status == s).count();
    let final_gaps: Vec<f64> = per_run.iter().map(|r| r.final_gap).collect();
    let firsts: Vec<f64> = per_run
        .iter()
        .filter_map(|r| r.first_lengthening.map(|k| k as f64))
        .collect();
    let cos: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.result.records.iter().map(|rec| rec.cos_theta))
        .collect();
    let aggregate = Aggregate {
        runs: per_run.len(),
        converged: count(RunStatus::Converged),
        stalled: count(RunStatus::Stalled),
        iter_limit: count(RunStatus::IterLimit),
        max_min_gap: per_run.iter().map(|r| r.min_gap).fold(f64::NEG_INFINITY, f64::max),
        median_final_gap: median(&final_gaps),
        first_lengthening: analysis::quartiles(&firsts),
        runs_without_lengthening: per_run.iter().filter(|r| r.first_lengthening.is_none()).count(),
        envelope_violations: per_run.iter().map(|r| r.envelope_violations).sum(),
        cos_theta: analysis::quartiles(&cos),
    };
    Summary {
        config: config.clone(),
        l: config.l(),
        runs: per_run,
        aggregate,
        theory,
        theory_error,
    }
}

fn opt(v: Option<impl std::fmt::Display>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| v.to_string())
}

/// Human-readable summary table.
pub fn render_summary(summary: &Summary) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:>4} {:>10} {:>5} {:>10} {:>10} {:>10} {:>6} {:>12}\n",
        "run", "status", "iters", "log10 min", "log10 fin", "log10 |g|", "first", "cond final"
    ));
    for r in &summary.runs {
        s.push_str(&format!(
            "{:>4} {:>10} {:>5} {:>10.3} {:>10.3} {:>10.3} {:>6} {:>12.4e}\n",
            r.run_id,
            r.status.to_string(),
            r.iterations,
            r.min_log10_gap,
            r.final_log10_gap,
            r.final_log10_grad_norm,
            opt(r.first_lengthening),
            r.final_cond_metric,
        ));
    }
    let a = &summary.aggregate;
    s.push_str(&format!(
        "runs {}: converged {}, stalled {}, iter_limit {}\n",
        a.runs, a.converged, a.stalled, a.iter_limit
    ));
    s.push_str(&format!(
        "max min gap {:.4e}, median final gap {:.4e}, first lengthening median {}\n",
        a.max_min_gap,
        a.median_final_gap,
        opt(a.first_lengthening.map(|q| q.median)),
    ));
    match (&summary.theory, &summary.theory_error) {
        (Some(t), _) => s.push_str(&format!(
            "l = {:.4e}, beta0 = {:.6e}, beta1 = {:e}{}, A = {:.6}, B = {:.6}\n",
            summary.l,
            t.beta0,
            t.beta1,
            if t.beta1_underflow { " (underflow)" } else { "" },
            t.a,
            t.b
        )),
        (None, Some(e)) => s.push_str(&format!("l = {:.4e}, theory constants unavailable: {e}\n", summary.l)),
        (None, None) => {}
    }
    s
}

/// Paths of the files written for an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub per_run: Vec<PathBuf>,
    pub combined: PathBuf,
    pub summary: PathBuf,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `{prefix}_runNN.csv` per run, `{prefix}_all.csv` and `{prefix}_summary.json`.
pub fn write_outputs(output: &ExperimentOutput, prefix: &Path) -> Result<OutputFiles> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let width = output.runs.len().saturating_sub(1).to_string().len().max(2);
    let mut per_run = Vec::with_capacity(output.runs.len());
    for r in &output.runs {
        let path = with_suffix(prefix, &format!("_run{:0width$}.csv", r.run_id));
        write_csv(&r.result.records, &path)?;
        per_run.push(path);
    }

    let combined = with_suffix(prefix, "_all.csv");
    let mut w = csv::Writer::from_path(&combined).map_err(|e| io_err(&combined, e))?;
    w.write_record(CSV_COLUMNS).map_err(|e| io_err(&combined, e))?;
    for r in &output.runs {
        write_records(&r.result.records, &mut w).map_err(|e| io_err(&combined, e))?;
    }
    w.flush().map_err(|e| io_err(&combined, e))?;

    let summary = with_suffix(prefix, "_summary.json");
    let json = serde_json::to_string_pretty(&output.summary).map_err(|e| io_err(&summary, e))?;
    let mut f = fs::File::create(&summary).map_err(|e| io_err(&summary, e))?;
    writeln!(f, "{json}").map_err(|e| io_err(&summary, e))?;

    Ok(OutputFiles {
        per_run,
        combined,
        summary,
    })
}

#[derive(Debug, Parser)]
#[command(name = "noisy-bfgs", version, about = "BFGS experiments on noisy quadratics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a seeded experiment and write CSV and JSON outputs
    Run {
        /// Configuration file (flat TOML); omit for the defaults
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let Command::Run { config, overrides } = &cli.command;
    let cfg = match config {
        Some(path) => ExperimentConfig::from_file(path, overrides),
        None => ExperimentConfig::parse("", overrides),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = run_experiment(&cfg).and_then(|out| {
        let files = write_outputs(&out, &cfg.out)?;
        Ok((out, files))
    });
    match result {
        Ok((out, files)) => {
            print!("{}", render_summary(&out.summary));
            println!("wrote {} run files, {}, {}", files.per_run.len(), files.combined.display(), files.summary.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
