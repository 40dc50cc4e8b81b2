//! Command-line front end: configuration, seeded ensemble runs and output.
//!
//! `simulate` writes `trajectories.jsonl` (one record per trajectory, in
//! index order) and `summary.csv` (long format `section,key,index,value`)
//! into the output directory; the `validate` scenario adds `reports.csv`.

pub mod config;
pub mod records;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::belavkin::{
    extract_diffusive_model, extract_jump_model, integrate_belavkin_diffusive, integrate_belavkin_jump,
    BelavkinOptions,
};
use crate::discrete::{
    calibrate_kernel, simulate_trajectory, EnsembleSummary, SamplingMode, TrajectoryConfig,
    DEFAULT_COLLAPSE_THRESHOLD,
};
use crate::ensemble::map_indexed;
use crate::error::{ConfigIssue, Error, Result};
use crate::kernel::{relative_entropy, MeasurementKernel, PointerDistribution};
use crate::quantum::{build_propagator, induced_kernel, simulate_quantum_chain};
use crate::rng::trajectory_seed;
use crate::scaling::{
    integrate_diffusive, integrate_jump_thinning, DiffusiveMode, DiffusiveOptions, JumpOptions,
};
use crate::stats::{median, PathMoments};
use crate::validate::{
    all_passed, diffusive_suite, discrete_suite, jump_suite, quantum_suite, rate_samples_for, render_table,
    SuiteConfig, TestReport,
};

use config::{parse_config, Mode, ModelConfig, RunConfig, Scenario};
use records::{first_collapse, parse_run_records, CollapseRecord, Events, TrajectoryRecord, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

pub const DEFAULT_TRAJECTORIES: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "itermeas", version, about = "Iterated measurement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured scenario and write trajectory records and a summary.
    Simulate(SimulateArgs),
    /// Run the validation suite for the configured model.
    Validate(ValidateArgs),
    /// Recover a kernel from the outcome counts of peaked runs.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct ThreadArgs {
    /// Worker threads (default: available cores).
    #[arg(long, env = "ITERMEAS_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[command(flatten)]
    pub threads: ThreadArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Also write `reports.csv` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub threads: ThreadArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Directory of `*.jsonl` trajectory files.
    #[arg(long)]
    pub runs: PathBuf,
}

/// Outcome of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum Outcome {
    Success,
    ValidationFailed,
    InvariantViolated(usize),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Success => EXIT_OK,
            Outcome::ValidationFailed => EXIT_VALIDATION,
            Outcome::InvariantViolated(_) => EXIT_INVARIANT,
        }
    }
}

pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::Io(_) | Error::Serialize(_) => EXIT_CONFIG,
        Error::CalibrationAmbiguous(_) => EXIT_VALIDATION,
        Error::PositivityLoss { .. } | Error::StepSize(_) | Error::ImpossibleJump { .. } => EXIT_INVARIANT,
        _ => EXIT_CONFIG,
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command, &mut std::io::stdout()) {
        Ok(outcome) => {
            if let Outcome::InvariantViolated(n) = outcome {
                eprintln!("{n} trajectories aborted on invariant violations; see their records");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn install_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialized");
        }
    }
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Config(vec![ConfigIssue::new(path.display().to_string(), e.to_string())])
    })?;
    parse_config(&text)
}

pub fn execute(command: &Command, stdout: &mut dyn Write) -> Result<Outcome> {
    match command {
        Command::Simulate(args) => {
            let mut config = read_config(&args.config)?;
            if let Some(seed) = args.seed {
                config.run.seed = seed;
            }
            if let Some(n) = args.trajectories {
                if n == 0 {
                    return Err(Error::Config(vec![ConfigIssue::new("--trajectories", "must be at least 1")]));
                }
                config.run.trajectories = Some(n);
            }
            install_threads(args.threads.threads.or(config.run.threads));
            simulate(&config, &args.out, stdout)
        }
        Command::Validate(args) => {
            let config = read_config(&args.config)?;
            install_threads(args.threads.threads.or(config.run.threads));
            let reports = run_suite(&config)?;
            write!(stdout, "{}", render_table(&reports))?;
            if let Some(out) = args.out.as_ref().or(config.output_dir.as_ref()) {
                fs::create_dir_all(out)?;
                write_reports(&out.join("reports.csv"), &reports)?;
            }
            Ok(if all_passed(&reports) { Outcome::Success } else { Outcome::ValidationFailed })
        }
        Command::Calibrate(args) => {
            let kernel = calibrate_dir(&args.runs)?;
            write!(stdout, "{}", kernel_toml(&kernel))?;
            Ok(Outcome::Success)
        }
    }
}

/// One summary row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub section: String,
    pub key: String,
    pub index: String,
    pub value: String,
}

fn row(section: &str, key: impl Into<String>, index: impl Into<String>, value: impl ToString) -> SummaryRow {
    SummaryRow {
        section: section.to_string(),
        key: key.into(),
        index: index.into(),
        value: value.to_string(),
    }
}

struct RunOutput {
    records: Vec<TrajectoryRecord>,
    extra_summary: Vec<SummaryRow>,
    reports: Vec<TestReport>,
    pointer_labels: Vec<String>,
}

fn pointer_labels(n: usize) -> Vec<String> {
    (0..n).map(|a| a.to_string()).collect()
}

fn trajectories(config: &RunConfig) -> usize {
    config.run.trajectories.unwrap_or(DEFAULT_TRAJECTORIES)
}

fn threshold(config: &RunConfig) -> f64 {
    config.run.collapse_threshold.unwrap_or(DEFAULT_COLLAPSE_THRESHOLD)
}

fn record(
    config: &RunConfig,
    index: usize,
    seed: u64,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
) -> TrajectoryRecord {
    let collapse = first_collapse(&times, &values, threshold(config));
    TrajectoryRecord {
        schema_version: SCHEMA_VERSION,
        scenario: config.scenario.as_str().to_string(),
        trajectory_id: index as u64,
        seed,
        sampled_alpha: None,
        times,
        values,
        events: None,
        counts: None,
        collapse,
        error: None,
    }
}

fn discrete_kernel(model: &ModelConfig) -> Result<(MeasurementKernel, PointerDistribution)> {
    match model {
        ModelConfig::Kernel { kernel, q0 } => Ok((kernel.clone(), q0.clone())),
        ModelConfig::Apparatus { apparatus, rho0 } => {
            let kernel = induced_kernel(&build_propagator(apparatus)?)?;
            Ok((kernel, PointerDistribution::from_unnormalized(rho0.diagonal())?))
        }
        _ => Err(Error::NotApplicable("discrete runs need a kernel or an apparatus".into())),
    }
}

fn run_discrete(config: &RunConfig) -> Result<RunOutput> {
    let (kernel, q0) = discrete_kernel(&config.model)?;
    let steps = config.run.steps.expect("validated");
    let stride = config.run.stride;
    let mode = match config.run.mode {
        Mode::Predictive => SamplingMode::Predictive,
        Mode::Conditioned => SamplingMode::Conditioned,
    };
    let base = TrajectoryConfig::new(steps, config.run.seed)
        .with_mode(mode)
        .with_threshold(threshold(config));
    let results = map_indexed(trajectories(config), |index| {
        let mut own = base.clone();
        own.seed = trajectory_seed(config.run.seed, index as u64);
        (own.seed, simulate_trajectory(&kernel, &q0, &own))
    });
    let mut summary = EnsembleSummary::empty(steps, kernel.pointer_count());
    let mut records = Vec::with_capacity(results.len());
    for (index, (seed, result)) in results.into_iter().enumerate() {
        match result {
            Ok(t) => {
                summary.add(&t);
                let recorded: Vec<usize> = (0..=steps).filter(|n| n % stride == 0 || *n == steps).collect();
                let mut rec = record(
                    config,
                    index,
                    seed,
                    recorded.iter().map(|&n| n as f64).collect(),
                    recorded.iter().map(|&n| t.q_path[n].weights().to_vec()).collect(),
                );
                rec.sampled_alpha = t.sampled_alpha;
                rec.events = Some(Events::Outcomes(t.outcomes.sequence().to_vec()));
                rec.counts = Some(t.outcomes.counts().to_vec());
                rec.collapse = t.collapse.map(|c| CollapseRecord {
                    time: c.step as f64,
                    target: c.target,
                });
                records.push(rec);
            }
            Err(e) => records.push(TrajectoryRecord::failed(config.scenario.as_str(), index as u64, seed, &e)),
        }
    }
    let mut extra = vec![row("collapse", "collapsed", "", summary.collapsed_count)];
    for target in 0..kernel.pointer_count() {
        for pointer in 0..kernel.pointer_count() {
            if target == pointer {
                continue;
            }
            let slopes = rate_samples_for(&summary.rate_samples, target, pointer);
            if slopes.is_empty() {
                continue;
            }
            let key = format!("{}->{}", kernel.pointer_labels()[target], kernel.pointer_labels()[pointer]);
            extra.push(row("rate", format!("median_slope[{key}]"), "", median(&slopes)));
            extra.push(row("rate", format!("samples[{key}]"), "", slopes.len()));
            extra.push(row("rate", format!("relative_entropy[{key}]"), "", relative_entropy(&kernel, target, pointer)));
        }
    }
    Ok(RunOutput {
        records,
        extra_summary: extra,
        reports: Vec::new(),
        pointer_labels: kernel.pointer_labels().to_vec(),
    })
}

fn run_continuous(config: &RunConfig) -> Result<RunOutput> {
    let horizon = config.run.horizon.expect("validated");
    let dt = config.run.dt.expect("validated");
    let n = trajectories(config);
    let master = config.run.seed;
    let stride = config.run.stride;
    let scenario = config.scenario.as_str();
    let (results, pointers): (Vec<(u64, Result<TrajectoryRecord>)>, usize) = match (config.scenario, &config.model) {
        (Scenario::Diffusive, model) => {
            let (model, q0) = match model {
                ModelConfig::Diffusive { model, q0 } => (model.clone(), q0.clone()),
                ModelConfig::Apparatus { apparatus, rho0 } => (
                    extract_diffusive_model(apparatus)?.classical_limit()?,
                    PointerDistribution::from_unnormalized(rho0.diagonal())?,
                ),
                _ => unreachable!("validated"),
            };
            let mode = match config.run.mode {
                Mode::Predictive => DiffusiveMode::Unconditioned,
                Mode::Conditioned => DiffusiveMode::Conditioned,
            };
            let results = map_indexed(n, |index| {
                let seed = trajectory_seed(master, index as u64);
                let options = DiffusiveOptions::new(horizon, dt, seed).with_mode(mode).with_stride(stride);
                (
                    seed,
                    integrate_diffusive(&model, &q0, &options).map(|p| {
                        let mut rec = record(config, index, seed, p.times, p.q_path);
                        rec.sampled_alpha = p.sampled_alpha;
                        rec
                    }),
                )
            });
            (results, model.pointer_count())
        }
        (Scenario::Jump, model) => {
            let (model, q0) = match model {
                ModelConfig::Jump { model, q0 } => (model.clone(), q0.clone()),
                ModelConfig::Apparatus { apparatus, rho0 } => (
                    extract_jump_model(apparatus)?.classical_limit()?,
                    PointerDistribution::from_unnormalized(rho0.diagonal())?,
                ),
                _ => unreachable!("validated"),
            };
            let results = map_indexed(n, |index| {
                let seed = trajectory_seed(master, index as u64);
                let options = JumpOptions::new(horizon, dt, seed).with_stride(stride);
                (
                    seed,
                    integrate_jump_thinning(&model, &q0, &options).map(|p| {
                        let mut rec = record(config, index, seed, p.times.clone(), p.q_path.clone());
                        rec.events = Some(Events::Jumps(p.jump_events));
                        rec
                    }),
                )
            });
            (results, model.pointer_count())
        }
        (Scenario::BelavkinDiffusive, ModelConfig::Apparatus { apparatus, rho0 }) => {
            let model = extract_diffusive_model(apparatus)?;
            let results = map_indexed(n, |index| {
                let seed = trajectory_seed(master, index as u64);
                let options = BelavkinOptions::new(horizon, dt, seed).with_stride(stride);
                (
                    seed,
                    integrate_belavkin_diffusive(&model, rho0, &options)
                        .map(|p| record(config, index, seed, p.times.clone(), p.q_path())),
                )
            });
            (results, model.dim())
        }
        (Scenario::BelavkinJump, ModelConfig::Apparatus { apparatus, rho0 }) => {
            let model = extract_jump_model(apparatus)?;
            let results = map_indexed(n, |index| {
                let seed = trajectory_seed(master, index as u64);
                let options = BelavkinOptions::new(horizon, dt, seed).with_stride(stride);
                (
                    seed,
                    integrate_belavkin_jump(&model, rho0, &options).map(|p| {
                        let mut rec = record(config, index, seed, p.times.clone(), p.q_path());
                        rec.events = Some(Events::Jumps(p.jump_events));
                        rec
                    }),
                )
            });
            (results, model.dim())
        }
        _ => unreachable!("validated"),
    };
    let records = results
        .into_iter()
        .enumerate()
        .map(|(index, (seed, r))| r.unwrap_or_else(|e| TrajectoryRecord::failed(scenario, index as u64, seed, &e)))
        .collect();
    Ok(RunOutput {
        records,
        extra_summary: Vec::new(),
        reports: Vec::new(),
        pointer_labels: pointer_labels(pointers),
    })
}

fn run_quantum(config: &RunConfig) -> Result<RunOutput> {
    let ModelConfig::Apparatus { apparatus, rho0 } = &config.model else {
        unreachable!("validated")
    };
    let props = build_propagator(apparatus)?;
    let steps = config.run.steps.expect("validated");
    let stride = config.run.stride;
    let master = config.run.seed;
    let results = map_indexed(trajectories(config), |index| {
        let seed = trajectory_seed(master, index as u64);
        (seed, simulate_quantum_chain(&props, rho0, steps, seed, stride))
    });
    let records = results
        .into_iter()
        .enumerate()
        .map(|(index, (seed, r))| match r {
            Ok(t) => {
                let times = t.rho_steps.iter().map(|&n| n as f64).collect();
                let values = t.rho_steps.iter().map(|&n| t.q_path[n].clone()).collect();
                let mut rec = record(config, index, seed, times, values);
                let mut counts = vec![0u64; props.outcome_count()];
                for &i in &t.outcomes {
                    counts[i] += 1;
                }
                rec.events = Some(Events::Outcomes(t.outcomes));
                rec.counts = Some(counts);
                rec
            }
            Err(e) => TrajectoryRecord::failed(config.scenario.as_str(), index as u64, seed, &e),
        })
        .collect();
    Ok(RunOutput {
        records,
        extra_summary: Vec::new(),
        reports: Vec::new(),
        pointer_labels: pointer_labels(apparatus.system_dim()),
    })
}

fn suite_config(config: &RunConfig) -> SuiteConfig {
    let mut suite = SuiteConfig {
        seed: config.run.seed,
        ..SuiteConfig::default()
    };
    if let Some(n) = config.run.trajectories {
        suite.trajectories = n;
    }
    if let Some(steps) = config.run.steps {
        suite.steps = steps;
        suite.grid = vec![(steps / 30).max(1), (steps / 3).max(1), steps];
    }
    if let Some(h) = config.run.horizon {
        suite.horizon = h;
    }
    if let Some(dt) = config.run.dt {
        suite.dt = dt;
    }
    suite
}

/// Validation suite matching the configured model.
pub fn run_suite(config: &RunConfig) -> Result<Vec<TestReport>> {
    let suite = suite_config(config);
    match &config.model {
        ModelConfig::Kernel { kernel, q0 } => discrete_suite(kernel, q0, &suite),
        ModelConfig::Diffusive { model, q0 } => diffusive_suite(model, q0, &suite),
        ModelConfig::Jump { model, q0 } => jump_suite(model, q0, &suite),
        ModelConfig::Apparatus { apparatus, rho0 } => quantum_suite(apparatus, rho0, &suite),
        ModelConfig::Calibrate { .. } => Err(Error::NotApplicable("nothing to validate for calibrate".into())),
    }
}

fn summary_rows(config: &RunConfig, out: &RunOutput) -> Vec<SummaryRow> {
    let ok: Vec<&TrajectoryRecord> = out.records.iter().filter(|r| r.error.is_none()).collect();
    let mut rows = vec![
        row("meta", "schema_version", "", SCHEMA_VERSION),
        row("meta", "scenario", "", config.scenario),
        row("meta", "seed", "", config.run.seed),
        row("meta", "trajectories", "", out.records.len()),
        row("meta", "failed", "", out.records.len() - ok.len()),
    ];
    let width = out.pointer_labels.len();
    let mut histogram = vec![0u64; width];
    for r in &ok {
        if let Some(q) = r.values.last() {
            let (a, _) = q
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (a, w)| if w > best.1 { (a, w) } else { best });
            histogram[a] += 1;
        }
    }
    for (label, count) in out.pointer_labels.iter().zip(&histogram) {
        rows.push(row("histogram", label.clone(), "", count));
    }
    let collapsed = ok.iter().filter(|r| r.collapse.is_some()).count();
    if !rows.iter().any(|r| r.section == "collapse") && out.extra_summary.iter().all(|r| r.section != "collapse") {
        rows.push(row("collapse", "collapsed", "", collapsed));
    }
    if let Some(first) = ok.first() {
        let same_grid = ok.iter().all(|r| r.times.len() == first.times.len());
        if same_grid && !first.times.is_empty() {
            let paths: Vec<Vec<Vec<f64>>> = ok.iter().map(|r| r.values.clone()).collect();
            let moments = PathMoments::from_paths(&paths);
            for (k, t) in first.times.iter().enumerate() {
                for (alpha, label) in out.pointer_labels.iter().enumerate() {
                    rows.push(row("martingale", format!("mean_q[{label}]"), t.to_string(), moments.mean(k, alpha)));
                    rows.push(row("martingale", format!("std_q[{label}]"), t.to_string(), moments.std(k, alpha)));
                }
            }
        }
    }
    rows.extend(out.extra_summary.iter().cloned());
    for report in &out.reports {
        rows.push(row("report", report.name.clone(), "statistic", report.statistic));
        rows.push(row("report", report.name.clone(), "passed", report.passed));
    }
    rows
}

fn write_reports(path: &Path, reports: &[TestReport]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Serialize(e.to_string()))?;
    for r in reports {
        writer.serialize(r).map_err(|e| Error::Serialize(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

fn write_outputs(dir: &Path, config: &RunConfig, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut writer = BufWriter::new(fs::File::create(dir.join("trajectories.jsonl"))?);
    for record in &out.records {
        writeln!(writer, "{}", record.to_line())?;
    }
    writer.flush()?;
    let mut summary = csv::Writer::from_path(dir.join("summary.csv")).map_err(|e| Error::Serialize(e.to_string()))?;
    for r in summary_rows(config, out) {
        summary.serialize(r).map_err(|e| Error::Serialize(e.to_string()))?;
    }
    summary.flush()?;
    if !out.reports.is_empty() {
        write_reports(&dir.join("reports.csv"), &out.reports)?;
    }
    Ok(())
}

/// Runs a configuration and writes its artifacts into `dir`.
pub fn simulate(config: &RunConfig, dir: &Path, stdout: &mut dyn Write) -> Result<Outcome> {
    let output = match config.scenario {
        Scenario::Discrete => run_discrete(config)?,
        Scenario::Quantum => run_quantum(config)?,
        Scenario::Diffusive | Scenario::Jump | Scenario::BelavkinDiffusive | Scenario::BelavkinJump => {
            run_continuous(config)?
        }
        Scenario::Validate => {
            let reports = run_suite(config)?;
            write!(stdout, "{}", render_table(&reports))?;
            RunOutput {
                records: Vec::new(),
                extra_summary: Vec::new(),
                reports,
                pointer_labels: Vec::new(),
            }
        }
        Scenario::Calibrate => {
            let ModelConfig::Calibrate { runs } = &config.model else {
                unreachable!("validated")
            };
            let kernel = calibrate_dir(runs)?;
            fs::create_dir_all(dir)?;
            fs::write(dir.join("kernel.toml"), kernel_toml(&kernel))?;
            write!(stdout, "{}", kernel_toml(&kernel))?;
            return Ok(Outcome::Success);
        }
    };
    write_outputs(dir, config, &output)?;
    let failed = output.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        for r in output.records.iter().filter(|r| r.error.is_some()) {
            log::error!("trajectory {} aborted: {}", r.trajectory_id, r.error.as_deref().unwrap_or(""));
        }
        return Ok(Outcome::InvariantViolated(failed));
    }
    if config.scenario == Scenario::Validate && !all_passed(&output.reports) {
        return Ok(Outcome::ValidationFailed);
    }
    Ok(Outcome::Success)
}

/// Calibrates a kernel from every record with counts in the `*.jsonl`
/// files of `dir`, read in file-name order.
pub fn calibrate_dir(dir: &Path) -> Result<MeasurementKernel> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut runs = Vec::new();
    for file in &files {
        let text = fs::read_to_string(file)?;
        runs.extend(parse_run_records(&file.display().to_string(), &text)?.into_iter().flatten());
    }
    if runs.is_empty() {
        return Err(Error::Config(vec![ConfigIssue::new(
            dir.display().to_string(),
            "no trajectory records with outcome counts",
        )]));
    }
    Ok(calibrate_kernel(&runs)?.kernel)
}

/// `[kernel]` section text for a calibrated kernel.
pub fn kernel_toml(kernel: &MeasurementKernel) -> String {
    #[derive(Serialize)]
    struct Section<'a> {
        pointers: &'a [String],
        outcomes: &'a [String],
        rows: Vec<Vec<f64>>,
    }
    #[derive(Serialize)]
    struct Wrapper<'a> {
        kernel: Section<'a>,
    }
    toml::to_string(&Wrapper {
        kernel: Section {
            pointers: kernel.pointer_labels(),
            outcomes: kernel.outcome_labels(),
            rows: kernel.rows(),
        },
    })
    .expect("kernel serializes")
}
