//! Monte-Carlo experiments over simulated processes.
//!
//! Replication `r` of grid cell `c` simulates its path from the seed
//! `derive(master, STREAM_EXPERIMENT, (c << 32) | r)`, so every cell is a
//! pure function of the master seed and the executor only changes speed.

use anyhow::{bail, Context, Result};
use dcov_core::dcov::{dcov_parts, vstat};
use dcov_core::processes::{population_dcov, simulate, ProcessSpec};
use dcov_core::seed::{derive, STREAM_EXPERIMENT};
use dcov_core::spectrum::{empirical_spectrum, long_run_covariance, simulate_null};
use dcov_core::{dcov, math, Executor};
use serde::Serialize;

use crate::config::{ExperimentSection, TestSection};
use crate::report::Summary;

/// Seed of replication `rep` in grid cell `cell`.
pub fn replication_seed(master: u64, cell: usize, rep: usize) -> u64 {
    derive(
        master,
        STREAM_EXPERIMENT,
        ((cell as u64) << 32) | rep as u64,
    )
}

fn replicate<E, T, F>(exec: &E, reps: usize, job: F) -> Result<Vec<T>>
where
    E: Executor,
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    exec.map(reps, job).into_iter().collect()
}

fn dependence_warning(spec: &ProcessSpec, what: &str) -> Option<String> {
    (!spec.has_independent_components())
        .then(|| format!("X and Y are dependent in this process; {what}"))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCell {
    pub n: usize,
    /// Summary of `|dcov(θₙ) − dcov(θ)|`.
    pub abs_error: Summary,
    pub estimate: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    pub experiment: &'static str,
    pub target: f64,
    pub seeds: usize,
    pub cells: Vec<ConvergenceCell>,
    /// Whether median errors strictly decrease along the grid; absent for a
    /// single cell.
    pub strictly_decreasing: Option<bool>,
    /// Last median error over the target; absent when the target is 0.
    pub final_relative_error: Option<f64>,
}

pub fn convergence<E: Executor>(
    spec: &ProcessSpec,
    section: &ExperimentSection,
    master: u64,
    exec: &E,
) -> Result<Convergence> {
    section.check()?;
    if section.n_grid.is_empty() {
        bail!("convergence needs a non-empty experiment.n_grid");
    }
    let law = match spec.stationary_law() {
        Some(law) => law?,
        None => bail!(
            "convergence needs a process with finitely supported marginal law so that the target is exact"
        ),
    };
    let target = population_dcov(&law).context("exact target")?;
    let mut cells = Vec::with_capacity(section.n_grid.len());
    for (c, &n) in section.n_grid.iter().enumerate() {
        let estimates = replicate(exec, section.seeds, |r| {
            let sample = simulate(spec, n, replication_seed(master, c, r))?;
            Ok(dcov(&sample)?.dcov)
        })?;
        let errors: Vec<f64> = estimates.iter().map(|e| (e - target).abs()).collect();
        cells.push(ConvergenceCell {
            n,
            abs_error: Summary::of(&errors),
            estimate: Summary::of(&estimates),
            raw: section.raw.then_some(estimates),
        });
    }
    let medians: Vec<f64> = cells.iter().map(|c| c.abs_error.median).collect();
    let last = *medians.last().expect("non-empty grid");
    Ok(Convergence {
        experiment: "convergence",
        target,
        seeds: section.seeds,
        strictly_decreasing: (medians.len() > 1).then(|| medians.windows(2).all(|w| w[1] < w[0])),
        final_relative_error: (target > 0.0).then(|| last / target),
        cells,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NullDist {
    pub experiment: &'static str,
    pub n: usize,
    pub replications: usize,
    pub null_reps: usize,
    /// Summary of the replicated `n·dcov`.
    pub statistic: Summary,
    /// Summary of the spectral null simulated from replication 0.
    pub null: Summary,
    /// KS distance between the two samples; absent with one replication.
    pub ks: Option<f64>,
    pub ks_defined: bool,
    pub q_mean: Option<f64>,
    pub q_se: Option<f64>,
    /// `|mean(Q) − 1| ≤ 3·SE`.
    pub q_within_3se: Option<bool>,
    /// Replications where `Q` is undefined (a degenerate marginal).
    pub q_undefined: usize,
    pub reference_kept: usize,
    pub reference_kept_mass: f64,
    pub reference_trace: f64,
    pub reference_bandwidth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_statistic: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_null: Option<Vec<f64>>,
}

/// Null-distribution study at sample size `n`.
pub fn nulldist<E: Executor>(
    spec: &ProcessSpec,
    section: &ExperimentSection,
    test: &TestSection,
    n: usize,
    master: u64,
    exec: &E,
    warnings: &mut Vec<String>,
) -> Result<NullDist> {
    section.check()?;
    if section.null_reps == 0 {
        bail!("experiment.null_reps must be at least 1");
    }
    warnings.extend(dependence_warning(
        spec,
        "the experiment measures power, not the null distribution",
    ));
    let reps = section.seeds;
    let draws = replicate(exec, reps, |r| {
        let sample = simulate(spec, n, replication_seed(master, 0, r))?;
        let est = dcov(&sample)?;
        Ok((est.statistic(), est.q_statistic()))
    })?;
    let stats: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let qs: Vec<f64> = draws.iter().filter_map(|d| d.1).collect();

    let reference = simulate(spec, n, replication_seed(master, 0, 0))?;
    let opts = test.spectral_options();
    let parts = dcov_parts(&reference)?;
    let model = empirical_spectrum(&parts.delta, opts.truncation)?;
    if model.kept == 0 {
        bail!("the reference replication has a degenerate spectrum (zero trace)");
    }
    let lrc = long_run_covariance(&model, opts.bandwidth)?;
    let null = simulate_null(
        &model,
        &lrc,
        section.null_reps,
        replication_seed(master, 1, 0),
        exec,
    )?;

    let ks_defined = reps >= 2;
    let (q_mean, q_se) = if qs.len() >= 2 {
        (
            Some(math::mean(&qs)),
            Some(math::sqrt(math::variance(&qs) / qs.len() as f64)),
        )
    } else {
        (qs.first().copied(), None)
    };
    Ok(NullDist {
        experiment: "nulldist",
        n,
        replications: reps,
        null_reps: section.null_reps,
        statistic: Summary::of(&stats),
        null: Summary::of(&null.draws),
        ks: ks_defined.then(|| math::ks_distance(&stats, &null.draws)),
        ks_defined,
        q_mean,
        q_se,
        q_within_3se: q_mean.zip(q_se).map(|(m, se)| (m - 1.0).abs() <= 3.0 * se),
        q_undefined: reps - qs.len(),
        reference_kept: model.kept,
        reference_kept_mass: model.kept_mass(),
        reference_trace: model.trace_full,
        reference_bandwidth: lrc.bandwidth,
        raw_statistic: section.raw.then(|| stats.clone()),
        raw_null: section.raw.then(|| null.draws.clone()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VarCell {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub n2_variance: f64,
    /// `n²·Var` relative to the first cell; absent when that is zero.
    pub ratio_to_first: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarScaling {
    pub experiment: &'static str,
    pub seeds: usize,
    pub cells: Vec<VarCell>,
}

/// Variance of the degenerate second-order V-statistic
/// `V = n⁻² Σᵢⱼ δ_θₙ(zᵢ, zⱼ)/15` across replications.
pub fn varscaling<E: Executor>(
    spec: &ProcessSpec,
    section: &ExperimentSection,
    master: u64,
    exec: &E,
    warnings: &mut Vec<String>,
) -> Result<VarScaling> {
    section.check()?;
    if section.n_grid.len() < 2 {
        bail!("varscaling needs at least two grid points");
    }
    warnings.extend(dependence_warning(
        spec,
        "the second-order component is not degenerate and the n^-2 rate need not hold",
    ));
    let mut cells: Vec<VarCell> = Vec::new();
    for (c, &n) in section.n_grid.iter().enumerate() {
        let values = replicate(exec, section.seeds, |r| {
            let sample = simulate(spec, n, replication_seed(master, c, r))?;
            let parts = dcov_parts(&sample)?;
            let delta = &parts.delta;
            Ok(vstat(&sample, 2, |ix| delta.get(ix[0], ix[1]) / 15.0)?)
        })?;
        let variance = math::variance(&values);
        let n2_variance = (n as f64) * (n as f64) * variance;
        let first = cells.first().map_or(n2_variance, |c| c.n2_variance);
        cells.push(VarCell {
            n,
            mean: math::mean(&values),
            variance,
            n2_variance,
            ratio_to_first: (first > 0.0).then(|| n2_variance / first),
            raw: section.raw.then_some(values),
        });
    }
    Ok(VarScaling {
        experiment: "varscaling",
        seeds: section.seeds,
        cells,
    })
}
