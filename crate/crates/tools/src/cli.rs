//! Command-line interface.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dcov_core::inference::{
    block_bootstrap_test, permutation_test, permutation_test_exact, spectral_test, BlockLength,
    BootstrapMode,
};
use dcov_core::metric::validate_space;
use dcov_core::processes::{simulate, ProcessSpec};
use dcov_core::seed::{derive, STREAM_EXPERIMENT};
use dcov_core::spectrum::{empirical_spectrum, long_run_covariance};
use dcov_core::{dcov, dcov::dcov_parts, Executor, PairedSample};
use serde::Serialize;

use crate::config::{
    Config, ExperimentKind, ExperimentSection, InputConfig, MethodName, Side, SpaceConfig,
};
use crate::experiments;
use crate::io;
use crate::parallel::RayonExecutor;
use crate::report::{self, DcovRecord, Meta, SpectralRecord, TestRecord};

#[derive(Debug, Parser)]
#[command(
    name = "dcov",
    version,
    about = "Distance covariance for dependent data"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores). Never changes results.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate dcov for a CSV file or a simulated path.
    Compute(SampleArgs),
    /// Test independence of X and Y.
    Test(TestArgs),
    /// Run a Monte-Carlo experiment over a process.
    Experiment(ExperimentArgs),
    /// Exact β-mixing profile of a finite-state process (CSV).
    Mixing(MixingArgs),
    /// Check metric axioms on the points of a sample.
    ValidateSpace(ValidateArgs),
}

#[derive(Debug, Args, Default)]
pub struct SampleArgs {
    /// CSV input (overrides `[input] path`).
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Comma-separated X column names.
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<String>,
    /// Comma-separated Y column names.
    #[arg(long, value_delimiter = ',')]
    pub y: Vec<String>,
    #[arg(long)]
    pub beta_x: Option<f64>,
    #[arg(long)]
    pub beta_y: Option<f64>,
    /// Path length when simulating from `[process]`.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Spectral,
    BlockBootstrap,
    Permutation,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub bandwidth: Option<usize>,
    #[arg(long)]
    pub block_length: Option<usize>,
    /// Enumerate all permutations (n ≤ 8).
    #[arg(long)]
    pub exact: bool,
    /// Bootstrap diagnostic: resample pairs with one index stream.
    #[arg(long)]
    pub single_stream: bool,
    /// Also write the null draws as a one-column CSV.
    #[arg(long, value_name = "PATH")]
    pub null_csv: Option<PathBuf>,
    /// Also write the spectral model (spectral method only).
    #[arg(long, value_name = "PATH")]
    pub spectral_report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExperimentArg {
    Convergence,
    Nulldist,
    Varscaling,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub kind: ExperimentArg,
    /// Comma-separated, strictly increasing sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Vec<usize>,
    /// Replications per grid cell.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub null_reps: Option<usize>,
    /// Include raw per-replication values.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct MixingArgs {
    /// Comma-separated lags (default 1..=max-lag).
    #[arg(long, value_delimiter = ',')]
    pub lags: Vec<usize>,
    #[arg(long)]
    pub max_lag: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    X,
    Y,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long, value_enum)]
    pub space: Option<SideArg>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub triples: Option<usize>,
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Main output (JSON or CSV text).
    pub primary: String,
    /// Side files requested in the config.
    pub files: Vec<(PathBuf, String)>,
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

impl Cli {
    /// Loads the config and applies every command-line override.
    pub fn effective_config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        match &self.command {
            Command::Compute(a) => apply_sample(&mut cfg, a),
            Command::Test(a) => {
                apply_sample(&mut cfg, &a.sample);
                let t = &mut cfg.test;
                if let Some(m) = a.method {
                    t.method = match m {
                        MethodArg::Spectral => MethodName::Spectral,
                        MethodArg::BlockBootstrap => MethodName::BlockBootstrap,
                        MethodArg::Permutation => MethodName::Permutation,
                    };
                }
                set(&mut t.reps, a.reps);
                t.bandwidth = a.bandwidth.or(t.bandwidth);
                t.block_length = a.block_length.or(t.block_length);
                t.exact |= a.exact;
                t.single_stream |= a.single_stream;
                cfg.output.null_csv = a.null_csv.clone().or(cfg.output.null_csv.take());
                cfg.output.spectral_report = a
                    .spectral_report
                    .clone()
                    .or(cfg.output.spectral_report.take());
            }
            Command::Experiment(a) => {
                let e = cfg
                    .experiment
                    .get_or_insert_with(ExperimentSection::default);
                e.kind = Some(match a.kind {
                    ExperimentArg::Convergence => ExperimentKind::Convergence,
                    ExperimentArg::Nulldist => ExperimentKind::Nulldist,
                    ExperimentArg::Varscaling => ExperimentKind::Varscaling,
                });
                if !a.n_grid.is_empty() {
                    e.n_grid = a.n_grid.clone();
                }
                set(&mut e.seeds, a.seeds);
                set(&mut e.null_reps, a.null_reps);
                e.raw |= a.raw;
            }
            Command::Mixing(a) => {
                if !a.lags.is_empty() {
                    cfg.mixing.lags = Some(a.lags.clone());
                }
                set(&mut cfg.mixing.max_lag, a.max_lag);
            }
            Command::ValidateSpace(a) => {
                apply_sample(&mut cfg, &a.sample);
                if let Some(s) = a.space {
                    cfg.validate.space = match s {
                        SideArg::X => Side::X,
                        SideArg::Y => Side::Y,
                    };
                }
                set(&mut cfg.validate.pairs, a.pairs);
                set(&mut cfg.validate.triples, a.triples);
            }
        }
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_sample(cfg: &mut Config, a: &SampleArgs) {
    if let Some(path) = &a.input {
        let old = cfg.input.take();
        cfg.input = Some(InputConfig {
            path: path.clone(),
            x: old.as_ref().map(|i| i.x.clone()).unwrap_or_default(),
            y: old.map(|i| i.y).unwrap_or_default(),
        });
    }
    if let Some(input) = cfg.input.as_mut() {
        if !a.x.is_empty() {
            input.x = a.x.clone();
        }
        if !a.y.is_empty() {
            input.y = a.y.clone();
        }
    }
    for (slot, beta) in [(&mut cfg.space_x, a.beta_x), (&mut cfg.space_y, a.beta_y)] {
        if let Some(b) = beta {
            slot.get_or_insert_with(SpaceConfig::default).beta = b;
        }
    }
    if a.n.is_some() {
        cfg.n = a.n;
    }
}

/// Parses arguments, runs the command and returns its outcome.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = cli.effective_config()?;
    let exec = RayonExecutor::new(cfg.threads.unwrap_or(0))?;
    execute(&cli.command, &cfg, &exec)
}

/// Runs a command against an already-resolved configuration.
pub fn execute<E: Executor>(command: &Command, cfg: &Config, exec: &E) -> Result<Outcome> {
    match command {
        Command::Compute(_) => compute(cfg),
        Command::Test(_) => test(cfg, exec),
        Command::Experiment(_) => experiment(cfg, exec),
        Command::Mixing(_) => mixing(cfg),
        Command::ValidateSpace(_) => validate(cfg),
    }
}

enum Source {
    File,
    Process(ProcessSpec),
}

fn load_sample(cfg: &Config) -> Result<(PairedSample, Source)> {
    match (&cfg.input, &cfg.process) {
        (Some(_), Some(_)) => bail!("both [input] and [process] are set; pick one"),
        (Some(input), None) => Ok((
            io::read_sample(input, cfg.space_x.as_ref(), cfg.space_y.as_ref())?,
            Source::File,
        )),
        (None, Some(_)) => {
            let spec = cfg.process_spec()?.expect("process present");
            let n = cfg
                .n
                .context("simulating from [process] needs `n` (or --n)")?;
            let sample = simulate(&spec, n, derive(cfg.seed(), STREAM_EXPERIMENT, u64::MAX))?;
            Ok((sample, Source::Process(spec)))
        }
        (None, None) => bail!("no data: give an [input] file (or --input) or a [process]"),
    }
}

fn compute(cfg: &Config) -> Result<Outcome> {
    let (sample, _) = load_sample(cfg)?;
    let est = dcov(&sample)?;
    let record = DcovRecord::new(
        &est,
        sample.space_x().beta(),
        sample.space_y().beta(),
        Meta::new(cfg, Vec::new()),
    );
    Ok(Outcome {
        primary: report::to_json(&record),
        ..Outcome::default()
    })
}

fn test<E: Executor>(cfg: &Config, exec: &E) -> Result<Outcome> {
    let (sample, source) = load_sample(cfg)?;
    let t = &cfg.test;
    let seed = cfg.seed();
    let mut warnings = Vec::new();
    let mut files = Vec::new();
    let result = match t.method {
        MethodName::Spectral => {
            let opts = t.spectral_options();
            let result = spectral_test(&sample, t.reps, seed, &opts, exec)?;
            if let Some(path) = &cfg.output.spectral_report {
                // Deterministic, so recomputing gives the model the test used.
                let parts = dcov_parts(&sample)?;
                let model = empirical_spectrum(&parts.delta, opts.truncation)?;
                if model.kept == 0 {
                    warnings.push("degenerate sample: no spectral report written".into());
                } else {
                    let lrc = long_run_covariance(&model, opts.bandwidth)?;
                    let rec = SpectralRecord::new(&model, &lrc, seed);
                    files.push((path.clone(), report::to_json(&rec)));
                }
            }
            result
        }
        MethodName::BlockBootstrap => {
            let mode = if t.single_stream {
                BootstrapMode::SingleStream
            } else {
                BootstrapMode::Decoupled
            };
            let block = t.block_length.map_or(BlockLength::Auto, BlockLength::Fixed);
            block_bootstrap_test(&sample, block, t.reps, seed, mode, exec)?
        }
        MethodName::Permutation => {
            if let Source::Process(spec) = &source {
                if !spec.is_serially_independent() {
                    let detail = spec
                        .mixing_profile(&[1])
                        .and_then(|p| p.ok())
                        .map(|p| format!(" (latent chain β(1) = {})", p.beta_values[0]))
                        .unwrap_or_default();
                    warnings.push(format!(
                        "the process is serially dependent{detail}; permutation p-values assume exchangeable observations and are not valid here"
                    ));
                }
            }
            if t.exact {
                permutation_test_exact(&sample)?
            } else {
                permutation_test(&sample, t.reps, seed, exec)?
            }
        }
    };
    if let Some(path) = &cfg.output.null_csv {
        files.push((
            path.clone(),
            io::column_csv("null_draw", &result.null_draws),
        ));
    }
    let record = TestRecord::new(&result, Meta::new(cfg, warnings.clone()));
    Ok(Outcome {
        primary: report::to_json(&record),
        files,
        warnings,
        exit_code: 0,
    })
}

#[derive(Serialize)]
struct Wrapped<T: Serialize> {
    seed: u64,
    #[serde(flatten)]
    body: T,
    #[serde(flatten)]
    meta: Meta,
}

fn experiment<E: Executor>(cfg: &Config, exec: &E) -> Result<Outcome> {
    let section = cfg
        .experiment
        .clone()
        .context("missing [experiment] section")?;
    let kind = section.kind.context("experiment kind not set")?;
    let spec = cfg
        .process_spec()?
        .context("experiments simulate from a [process] section")?;
    let seed = cfg.seed();
    let mut warnings = Vec::new();
    let mut files = Vec::new();
    let primary = match kind {
        ExperimentKind::Convergence => {
            let body = experiments::convergence(&spec, &section, seed, exec)?;
            wrap(seed, body, cfg, &warnings)
        }
        ExperimentKind::Nulldist => {
            let n = section
                .n_grid
                .first()
                .copied()
                .or(cfg.n)
                .context("nulldist needs `n` or a one-entry experiment.n_grid")?;
            let body =
                experiments::nulldist(&spec, &section, &cfg.test, n, seed, exec, &mut warnings)?;
            if let (Some(path), Some(raw)) = (&cfg.output.null_csv, &body.raw_null) {
                files.push((path.clone(), io::column_csv("null_draw", raw)));
            }
            wrap(seed, body, cfg, &warnings)
        }
        ExperimentKind::Varscaling => {
            let body = experiments::varscaling(&spec, &section, seed, exec, &mut warnings)?;
            wrap(seed, body, cfg, &warnings)
        }
    };
    Ok(Outcome {
        primary,
        files,
        warnings,
        exit_code: 0,
    })
}

fn wrap<T: Serialize>(seed: u64, body: T, cfg: &Config, warnings: &[String]) -> String {
    report::to_json(&Wrapped {
        seed,
        body,
        meta: Meta::new(cfg, warnings.to_vec()),
    })
}

fn mixing(cfg: &Config) -> Result<Outcome> {
    let spec = cfg
        .process_spec()?
        .context("mixing needs a [process] section")?;
    let lags = cfg.mixing.lags();
    let profile = match spec.mixing_profile(&lags) {
        Some(p) => p?,
        None => bail!(
            "exact mixing coefficients need a finite-state process; Gaussian AR(1) latents mix geometrically (β(n) = O(|ρ|ⁿ)) but have no finite-state form"
        ),
    };
    let mut out = String::from("lag,beta,alpha_upper\n");
    for ((lag, b), a) in profile
        .lags
        .iter()
        .zip(&profile.beta_values)
        .zip(&profile.alpha_upper)
    {
        out.push_str(&format!("{lag},{b},{a}\n"));
    }
    Ok(Outcome {
        primary: out,
        ..Outcome::default()
    })
}

#[derive(Serialize)]
struct ValidateRecord {
    space: String,
    beta: f64,
    points: usize,
    pairs: usize,
    asymmetric: usize,
    negative: usize,
    nonzero_self: usize,
    triangle: &'static str,
    triples: usize,
    triangle_violations: usize,
    worst_slack: f64,
    clean: bool,
    seed: u64,
    #[serde(flatten)]
    meta: Meta,
}

fn validate(cfg: &Config) -> Result<Outcome> {
    let (sample, _) = load_sample(cfg)?;
    let (space, points) = match cfg.validate.space {
        Side::X => (sample.space_x(), sample.xs()),
        Side::Y => (sample.space_y(), sample.ys()),
    };
    let seed = cfg.seed();
    let mut rng = dcov_core::seed::stream(seed, STREAM_EXPERIMENT, u64::MAX - 1);
    let r = validate_space(
        space,
        points,
        cfg.validate.pairs,
        cfg.validate.triples,
        &mut rng,
    )?;
    let record = ValidateRecord {
        space: format!("{:?}", space.kind()),
        beta: space.beta(),
        points: points.len(),
        pairs: r.pairs,
        asymmetric: r.asymmetric,
        negative: r.negative,
        nonzero_self: r.nonzero_self,
        triangle: if space.beta() > 1.0 { "weak" } else { "plain" },
        triples: r.triangle.checked,
        triangle_violations: r.triangle.violations,
        worst_slack: r.triangle.worst_slack,
        clean: r.is_clean(),
        seed,
        meta: Meta::new(cfg, Vec::new()),
    };
    Ok(Outcome {
        primary: report::to_json(&record),
        exit_code: if r.is_clean() { 0 } else { 1 },
        ..Outcome::default()
    })
}

/// Writes an outcome: primary text to `out` (or stdout), side files, and
/// warnings to stderr.
pub fn emit(outcome: &Outcome, out: Option<&Path>) -> Result<()> {
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match out {
        Some(p) => std::fs::write(p, &outcome.primary)
            .with_context(|| format!("writing {}", p.display()))?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(outcome.primary.as_bytes())?;
        }
    }
    for (path, text) in &outcome.files {
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
