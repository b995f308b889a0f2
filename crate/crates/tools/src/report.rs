//! JSON report records.
//!
//! Floats are written in shortest round-trip form and maps keep field order,
//! so the same inputs always give the same bytes.

use serde::Serialize;

use crate::config::Config;
use dcov_core::inference::TestResult;
use dcov_core::spectrum::{LongRunCovariance, SpectralModel};
use dcov_core::DcovEstimate;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Context attached to every report.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub warnings: Vec<String>,
    /// Effective configuration; rerunning with it reproduces the report.
    pub config: Config,
}

impl Meta {
    pub fn new(config: &Config, warnings: Vec<String>) -> Meta {
        Meta {
            version: VERSION,
            warnings,
            config: echo(config),
        }
    }
}

/// The configuration as echoed in reports. The worker count is dropped
/// because it never changes results.
pub fn echo(config: &Config) -> Config {
    let mut c = config.clone();
    c.seed = Some(config.seed());
    c.threads = None;
    c
}

#[derive(Debug, Clone, Serialize)]
pub struct DcovRecord {
    pub n: usize,
    pub dcov: f64,
    #[serde(rename = "D_mu")]
    pub d_mu: f64,
    #[serde(rename = "D_nu")]
    pub d_nu: f64,
    /// `n·dcov / (D_mu·D_nu)`; null when a marginal is degenerate.
    pub normalized: Option<f64>,
    pub beta_x: f64,
    pub beta_y: f64,
    #[serde(flatten)]
    pub meta: Meta,
}

impl DcovRecord {
    pub fn new(est: &DcovEstimate, beta_x: f64, beta_y: f64, meta: Meta) -> Self {
        DcovRecord {
            n: est.n,
            dcov: est.dcov,
            d_mu: est.d_mu,
            d_nu: est.d_nu,
            normalized: est.q_statistic(),
            beta_x,
            beta_y,
            meta,
        }
    }
}

/// Method settings as actually used.
#[derive(Debug, Clone, Serialize)]
pub struct MethodConfig {
    pub bandwidth: Option<usize>,
    pub kept_components: Option<usize>,
    pub block_length: Option<usize>,
    pub single_stream: bool,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestRecord {
    pub method: &'static str,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub reps: usize,
    pub seed: u64,
    pub config: MethodConfig,
    pub degenerate: bool,
    pub version: &'static str,
    pub warnings: Vec<String>,
    /// Full run configuration.
    pub run: Config,
}

impl TestRecord {
    pub fn new(r: &TestResult, meta: Meta) -> Self {
        TestRecord {
            method: r.method.name(),
            n: r.n,
            statistic: r.statistic,
            p_value: r.p_value,
            reps: r.reps,
            seed: r.seed,
            config: MethodConfig {
                bandwidth: r.config.bandwidth,
                kept_components: r.config.kept_components,
                block_length: r.config.block_length,
                single_stream: r.config.single_stream,
                exact: r.config.exact,
            },
            degenerate: r.degenerate,
            version: meta.version,
            warnings: meta.warnings,
            run: meta.config,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralRecord {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub kept: usize,
    pub trace_full: f64,
    pub bandwidth: usize,
    /// Row-major `kept × kept` long-run covariance.
    pub sigma: Vec<f64>,
    pub seed: u64,
}

impl SpectralRecord {
    pub fn new(model: &SpectralModel, lrc: &LongRunCovariance, seed: u64) -> Self {
        SpectralRecord {
            n: model.n,
            eigenvalues: model.eigenvalues.clone(),
            kept: model.kept,
            trace_full: model.trace_full,
            bandwidth: lrc.bandwidth,
            sigma: lrc.sigma.clone(),
            seed,
        }
    }
}

/// Median and quartiles.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        use dcov_core::math;
        Summary {
            mean: math::mean(values),
            median: math::median(values),
            q25: math::quantile(values, 0.25),
            q75: math::quantile(values, 0.75),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
