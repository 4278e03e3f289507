//! The six commands. Each returns a process exit code; diagnostics go to stderr.

use std::fs;
use std::path::{Path, PathBuf};

use dampwave::oracle::{concavity_check, default_s_samples, discriminant_check, fd_energy_check};
use dampwave::{
    check_thm23, check_thm25, poincare_alpha, search_high_energy_datum, simulate, Candidate,
    ConcavityReport, EigenOptions, FdEnergyReport, GParams, HypothesisReport, Outcome,
    PoincareEstimate, SearchOutcome, TrajectoryRecord,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, Format, Resolved, RunConfig, TheoremChoice, VerifyConfig};
use crate::io::{
    read_json, read_trajectory, write_json, write_trajectory, RunInfo, Summary, Versions,
    SUMMARY_FILE, TRAJECTORY_FILE,
};

pub mod exit {
    pub const OK: i32 = 0;
    /// Hypotheses unsatisfied, search not found, or verification failed.
    pub const NEGATIVE: i32 = 1;
    /// Invalid configuration or unusable input/output.
    pub const INVALID: i32 = 2;
    pub const INCONCLUSIVE: i32 = 3;
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    Model(dampwave::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => e.fmt(f),
            Self::Model(e) => e.fmt(f),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<dampwave::Error> for CommandError {
    fn from(e: dampwave::Error) -> Self {
        Self::Model(e)
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

type CmdResult<T> = Result<T, CommandError>;

pub fn load(path: &Path) -> Result<Resolved, ConfigError> {
    RunConfig::load(path)?.resolve()
}

pub fn alpha(resolved: &Resolved) -> dampwave::Result<PoincareEstimate<f64>> {
    poincare_alpha(
        resolved.model.grid(),
        resolved.model.density(),
        &EigenOptions::default(),
    )
}

/// Runs the configured hypothesis check on the configured datum.
pub fn check(resolved: &Resolved, alpha: f64) -> dampwave::Result<HypothesisReport<f64>> {
    let tol = &resolved.config.criteria.tolerances;
    let (u0, u1) = (resolved.u0(), resolved.u1());
    match resolved.config.criteria.theorem {
        TheoremChoice::Low => check_thm23(&resolved.model, &u0, &u1, alpha, tol),
        TheoremChoice::High => check_thm25(&resolved.model, &u0, &u1, alpha, tol),
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub record: TrajectoryRecord<f64>,
    pub report: HypothesisReport<f64>,
    pub alpha: f64,
    pub gparams_placeholder: bool,
}

/// Placeholder constants for the `G` columns when no derived ones exist.
pub fn placeholder_gparams(t_end: f64) -> GParams<f64> {
    GParams {
        zeta: 1.0,
        t0: t_end,
        t1: 1.0,
        eps: 1.0,
    }
}

pub fn run_simulation(resolved: &Resolved, alpha: f64) -> dampwave::Result<Simulation> {
    let report = check(resolved, alpha)?;
    let (gp, placeholder) = match report.derived {
        Some(gp) => (gp, false),
        None => {
            let eps = resolved.model.nonlinearity().eps();
            let gp = GParams {
                eps,
                ..placeholder_gparams(resolved.config.solver.t_end)
            };
            (gp, true)
        }
    };
    let record = simulate(
        &resolved.model,
        &resolved.u0(),
        &resolved.u1(),
        &resolved.config.solver,
        Some(&gp),
    )?;
    Ok(Simulation {
        record,
        report,
        alpha,
        gparams_placeholder: placeholder,
    })
}

pub fn summary(resolved: &Resolved, sim: &Simulation) -> Summary {
    let rec = &sim.record;
    Summary {
        outcome: rec.outcome.clone(),
        report: sim.report.clone(),
        bound: sim.report.bound,
        alpha: sim.alpha,
        run: RunInfo {
            u0_norm_sq: rec.u0_norm_sq,
            pairing0: rec.pairing0,
            gparams: rec.gparams,
            gparams_placeholder: sim.gparams_placeholder,
            accepted_steps: rec.accepted_steps,
            rejected_steps: rec.rejected_steps,
            samples: rec.samples.len(),
            energy_residual: rec.energy_residual(),
        },
        config: resolved.config.clone(),
        versions: Versions::default(),
    }
}

fn out_dir(resolved: &Resolved, opts: &Options) -> PathBuf {
    opts.out
        .clone()
        .unwrap_or_else(|| resolved.config.output.dir.clone())
}

fn write_run(dir: &Path, formats: &[Format], sim: &Simulation, summary: &Summary) -> CmdResult<()> {
    fs::create_dir_all(dir)?;
    if formats.contains(&Format::Csv) {
        write_trajectory(&dir.join(TRAJECTORY_FILE), &sim.record.samples)?;
    }
    if formats.contains(&Format::Json) {
        write_json(&dir.join(SUMMARY_FILE), summary)?;
    }
    Ok(())
}

fn emit<S: Serialize>(opts: &Options, value: &S) {
    if !opts.quiet {
        match serde_json::to_string_pretty(value) {
            Ok(text) => println!("{text}"),
            Err(e) => eprintln!("error: cannot render output: {e}"),
        }
    }
}

fn warn(opts: &Options, resolved: &Resolved) {
    if !opts.quiet {
        for w in &resolved.warnings {
            eprintln!("warning: {w}");
        }
    }
}

fn fail(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    exit::INVALID
}

/// Loads and resolves the config, reporting failures as exit code 2.
fn prepare(config: &Path, opts: &Options) -> Result<Resolved, i32> {
    let resolved = load(config).map_err(fail)?;
    warn(opts, &resolved);
    Ok(resolved)
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    outcome: &'a Outcome<f64>,
    satisfied: bool,
    bound: Option<f64>,
    energy_residual: f64,
    out_dir: &'a Path,
}

pub fn cmd_simulate(config: &Path, opts: &Options) -> i32 {
    let resolved = match prepare(config, opts) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let run = || -> CmdResult<(Simulation, PathBuf)> {
        let a = alpha(&resolved)?.alpha;
        let sim = run_simulation(&resolved, a)?;
        let dir = out_dir(&resolved, opts);
        write_run(
            &dir,
            &resolved.config.output.formats,
            &sim,
            &summary(&resolved, &sim),
        )?;
        Ok((sim, dir))
    };
    match run() {
        Ok((sim, dir)) => {
            emit(
                opts,
                &SimulateOutput {
                    outcome: &sim.record.outcome,
                    satisfied: sim.report.satisfied,
                    bound: sim.report.bound,
                    energy_residual: sim.record.energy_residual(),
                    out_dir: &dir,
                },
            );
            if let Outcome::Inconclusive { reason } = &sim.record.outcome {
                if !opts.quiet {
                    eprintln!("inconclusive: {reason}");
                }
                exit::INCONCLUSIVE
            } else {
                exit::OK
            }
        }
        Err(e) => fail(e),
    }
}

pub fn cmd_check(config: &Path, opts: &Options) -> i32 {
    let resolved = match prepare(config, opts) {
        Ok(r) => r,
        Err(code) => return code,
    };
    match alpha(&resolved).and_then(|a| check(&resolved, a.alpha)) {
        Ok(report) => {
            emit(opts, &report);
            if report.satisfied {
                exit::OK
            } else {
                exit::NEGATIVE
            }
        }
        Err(e) => fail(e),
    }
}

pub fn cmd_alpha(config: &Path, opts: &Options) -> i32 {
    let resolved = match prepare(config, opts) {
        Ok(r) => r,
        Err(code) => return code,
    };
    match alpha(&resolved) {
        Ok(est) => {
            emit(opts, &est);
            exit::OK
        }
        Err(e) => fail(e),
    }
}

/// Search result as printed: the datum is given by `(lambda, kappa)` rather
/// than the full profile.
#[derive(Serialize)]
#[serde(tag = "status")]
enum SearchOutput<'a> {
    Found {
        alpha: f64,
        lambda: f64,
        kappa: f64,
        report: &'a HypothesisReport<f64>,
    },
    NotFound {
        alpha: f64,
        cells_scanned: usize,
        best: Option<&'a Candidate<f64>>,
    },
}

impl<'a> SearchOutput<'a> {
    fn new(alpha: f64, outcome: &'a SearchOutcome<f64>) -> Self {
        match outcome {
            SearchOutcome::Found { family, report } => Self::Found {
                alpha,
                lambda: family.lambda,
                kappa: family.kappa,
                report,
            },
            SearchOutcome::NotFound {
                cells_scanned,
                best,
            } => Self::NotFound {
                alpha,
                cells_scanned: *cells_scanned,
                best: best.as_deref(),
            },
        }
    }
}

pub fn search(resolved: &Resolved, alpha: f64) -> CmdResult<SearchOutcome<f64>> {
    let ranges = resolved
        .config
        .search
        .ok_or_else(|| ConfigError::Invalid("search needs a \"search\" section".into()))?;
    Ok(search_high_energy_datum(
        &resolved.model,
        &resolved.profile,
        &ranges,
        alpha,
        &resolved.config.criteria.tolerances,
    )?)
}

pub fn cmd_search(config: &Path, opts: &Options) -> i32 {
    let resolved = match prepare(config, opts) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let run = || -> CmdResult<(f64, SearchOutcome<f64>)> {
        let a = alpha(&resolved)?.alpha;
        Ok((a, search(&resolved, a)?))
    };
    match run() {
        Ok((a, outcome)) => {
            emit(opts, &SearchOutput::new(a, &outcome));
            match outcome {
                SearchOutcome::Found { .. } => exit::OK,
                SearchOutcome::NotFound { .. } => exit::NEGATIVE,
            }
        }
        Err(e) => fail(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub kappa: f64,
    pub file: String,
    pub outcome: String,
    pub t_detect: Option<f64>,
    pub t_extrap: Option<f64>,
    pub e0: Option<f64>,
    pub satisfied: Option<bool>,
    pub bound: Option<f64>,
}

pub const SWEEP_INDEX: &str = "sweep_index.csv";

/// Simulates every `(lambda, kappa)` cell of the sweep section, writing one
/// summary per cell and an index sorted by `(lambda, kappa)`.
pub fn sweep(resolved: &Resolved, dir: &Path) -> CmdResult<Vec<SweepRow>> {
    let ranges = resolved
        .config
        .sweep
        .clone()
        .ok_or_else(|| ConfigError::Invalid("sweep needs a \"sweep\" section".into()))?;
    let mut lambdas = ranges.lambda;
    let mut kappas = ranges.kappa;
    lambdas.sort_by(f64::total_cmp);
    kappas.sort_by(f64::total_cmp);
    let cells: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| kappas.iter().map(move |&k| (l, k)))
        .collect();
    let a = alpha(resolved)?.alpha;
    let cell_dir = dir.join("cells");
    fs::create_dir_all(&cell_dir)?;

    let workers = resolved
        .config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e))?;

    let rows = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, &(lambda, kappa))| -> CmdResult<SweepRow> {
                let name = format!("cell_{i:05}.json");
                let cell = resolved.with_datum(lambda, kappa);
                let mut row = SweepRow {
                    lambda,
                    kappa,
                    file: format!("cells/{name}"),
                    outcome: String::new(),
                    t_detect: None,
                    t_extrap: None,
                    e0: None,
                    satisfied: None,
                    bound: None,
                };
                match run_simulation(&cell, a) {
                    Ok(sim) => {
                        let s = summary(&cell, &sim);
                        write_json(&cell_dir.join(&name), &s)?;
                        row.outcome = sim.record.outcome.tag().to_string();
                        if let Outcome::BlownUp { t_detect, t_extrap } = sim.record.outcome {
                            row.t_detect = Some(t_detect);
                            row.t_extrap = t_extrap;
                        }
                        row.e0 = Some(sim.report.e0);
                        row.satisfied = Some(sim.report.satisfied);
                        row.bound = sim.report.bound;
                    }
                    Err(e) => {
                        write_json(
                            &cell_dir.join(&name),
                            &serde_json::json!({ "error": e.to_string() }),
                        )?;
                        row.outcome = "Error".into();
                    }
                }
                Ok(row)
            })
            .collect::<CmdResult<Vec<_>>>()
    })?;

    let mut w = csv::Writer::from_path(dir.join(SWEEP_INDEX))
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e))?;
    for row in &rows {
        w.serialize(row)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e))?;
    }
    w.flush()?;
    Ok(rows)
}

pub fn cmd_sweep(config: &Path, opts: &Options) -> i32 {
    let resolved = match prepare(config, opts) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let dir = out_dir(&resolved, opts);
    match sweep(&resolved, &dir) {
        Ok(rows) => {
            emit(opts, &rows);
            exit::OK
        }
        Err(e) => fail(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub fd_energy: Option<FdEnergyReport<f64>>,
    pub fd_energy_passed: bool,
    /// Differencing cannot resolve the final approach to blow-up, so the
    /// energy check only gates runs that did not blow up.
    pub fd_energy_asserted: bool,
    pub discriminant_samples: usize,
    pub discriminant_flags: usize,
    /// Smallest `min_quadratic / max(A, C, 1)` over samples.
    pub discriminant_worst: f64,
    pub concavity: Option<ConcavityReport<f64>>,
    /// Concavity is only asserted when the hypotheses hold.
    pub concavity_asserted: bool,
    pub passed: bool,
}

/// Runs the oracle suite on a trajectory.
pub fn verify_record(
    record: &TrajectoryRecord<f64>,
    report: &HypothesisReport<f64>,
    cfg: &VerifyConfig,
) -> VerifyReport {
    let fd = fd_energy_check(record).ok();
    let fd_passed = fd.map_or(true, |r| r.max_deviation <= cfg.fd_tol);
    let fd_asserted = !record.outcome.is_blown_up();

    let gp = record.gparams.unwrap_or_else(|| {
        let t_end = record.samples.last().map_or(1.0, |s| s.t.max(1.0));
        placeholder_gparams(t_end)
    });
    let disc = discriminant_check(record, &gp, &default_s_samples(), cfg.cs_tol);
    let flags = disc.iter().filter(|d| d.flagged).count();
    let worst = disc
        .iter()
        .map(|d| d.min_quadratic / d.a.max(d.c).max(1.0))
        .fold(f64::INFINITY, f64::min);

    let asserted = report.satisfied && report.derived.is_some();
    let concavity = match (asserted, report.derived) {
        (true, Some(derived)) => concavity_check(record, &derived, cfg.concavity_tol).ok(),
        _ => concavity_check(record, &gp, cfg.concavity_tol).ok(),
    };
    let concavity_passed = !asserted || concavity.map_or(true, |c| c.violations == 0);

    VerifyReport {
        fd_energy: fd,
        fd_energy_passed: fd_passed,
        fd_energy_asserted: fd_asserted,
        discriminant_samples: disc.len(),
        discriminant_flags: flags,
        discriminant_worst: worst,
        concavity,
        concavity_asserted: asserted,
        passed: (fd_passed || !fd_asserted) && flags == 0 && concavity_passed,
    }
}

/// Loads a stored run from `dir`, or `None` when either file is missing.
pub fn load_run(dir: &Path) -> CmdResult<Option<(Summary, TrajectoryRecord<f64>)>> {
    let (csv, json) = (dir.join(TRAJECTORY_FILE), dir.join(SUMMARY_FILE));
    if !csv.exists() || !json.exists() {
        return Ok(None);
    }
    let summary: Summary = read_json(&json)?;
    let record = summary.record(read_trajectory(&csv)?);
    Ok(Some((summary, record)))
}

pub fn cmd_verify(config: &Path, opts: &Options) -> i32 {
    let resolved = match prepare(config, opts) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let dir = out_dir(&resolved, opts);
    let run = || -> CmdResult<VerifyReport> {
        let (report, record) = match load_run(&dir)? {
            Some((summary, record)) => (summary.report, record),
            None => {
                if !opts.quiet {
                    eprintln!("no stored run in {}; simulating", dir.display());
                }
                let a = alpha(&resolved)?.alpha;
                let sim = run_simulation(&resolved, a)?;
                write_run(
                    &dir,
                    &[Format::Csv, Format::Json],
                    &sim,
                    &summary(&resolved, &sim),
                )?;
                (sim.report, sim.record)
            }
        };
        Ok(verify_record(&record, &report, &resolved.config.verify))
    };
    match run() {
        Ok(v) => {
            emit(opts, &v);
            if v.passed {
                exit::OK
            } else {
                exit::NEGATIVE
            }
        }
        Err(e) => fail(e),
    }
}
