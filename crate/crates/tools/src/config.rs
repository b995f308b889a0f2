//! TOML run configuration.
//!
//! Every command reads the same [`Config`]; sections a command does not use
//! are ignored. Reports echo the effective configuration (after command-line
//! overrides), and feeding that echo back reproduces the run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dcov_core::joint::Atom;
use dcov_core::processes::{Emission, MarkovChain, ProcessSpec};
use dcov_core::{DiscreteJointDistribution, Point, Space};
use serde::{Deserialize, Serialize};

/// Master seed used when neither the config nor `--seed` sets one.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Path length for simulated samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_x: Option<SpaceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_y: Option<SpaceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessConfig>,
    #[serde(default)]
    pub test: TestSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
    #[serde(default)]
    pub mixing: MixingSection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKindConfig {
    #[default]
    Euclidean,
    Discrete,
    HilbertL2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default)]
    pub kind: SpaceKindConfig,
    /// Dimension of euclidean / hilbert_l2 spaces; inferred when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Alphabet size of discrete spaces; inferred when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<u32>,
    #[serde(default = "one")]
    pub beta: f64,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            kind: SpaceKindConfig::Euclidean,
            dim: None,
            alphabet: None,
            beta: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

impl SpaceConfig {
    /// Builds the space, filling unset sizes from what the data needs.
    pub fn build(&self, inferred_dim: usize, inferred_alphabet: u32) -> Result<Space> {
        let base = match self.kind {
            SpaceKindConfig::Euclidean => {
                let dim = self.dim.unwrap_or(inferred_dim);
                if dim < inferred_dim {
                    bail!("euclidean dim {dim} is smaller than the data dimension {inferred_dim}");
                }
                Space::euclidean(dim)
            }
            SpaceKindConfig::HilbertL2 => Space::hilbert_l2(self.dim.unwrap_or(inferred_dim)),
            SpaceKindConfig::Discrete => {
                let alphabet = self.alphabet.unwrap_or(inferred_alphabet);
                if alphabet < inferred_alphabet {
                    bail!("discrete alphabet {alphabet} is too small: the data uses {inferred_alphabet} symbols");
                }
                Space::discrete(alphabet)
            }
        };
        Ok(base.with_beta(self.beta)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
    pub x: Vec<String>,
    pub y: Vec<String>,
}

/// A point literal: a number or a vector of numbers. In a discrete space a
/// number is read as a symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PointValue {
    fn dim(&self) -> usize {
        match self {
            PointValue::Scalar(_) => 1,
            PointValue::Vector(v) => v.len(),
        }
    }

    fn to_point(&self, kind: SpaceKindConfig) -> Result<Point> {
        match (kind, self) {
            (SpaceKindConfig::Discrete, PointValue::Scalar(s)) => {
                if *s < 0.0 || s.fract() != 0.0 || *s > u32::MAX as f64 {
                    bail!("discrete symbol {s} is not a non-negative integer");
                }
                Ok(Point::symbol(*s as u32))
            }
            (SpaceKindConfig::Discrete, PointValue::Vector(_)) => {
                bail!("discrete spaces take integer symbols, not vectors")
            }
            (_, PointValue::Scalar(s)) => Ok(Point::scalar(*s)),
            (_, PointValue::Vector(v)) => Ok(Point::vector(v.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionConfig {
    Identity,
    Square,
    Abs,
    Uniform,
    Threshold(Vec<f64>),
}

impl EmissionConfig {
    fn build(&self) -> Emission {
        match self {
            EmissionConfig::Identity => Emission::Identity,
            EmissionConfig::Square => Emission::Square,
            EmissionConfig::Abs => Emission::Abs,
            EmissionConfig::Uniform => Emission::Uniform,
            EmissionConfig::Threshold(c) => Emission::Threshold(c.clone()),
        }
    }

    fn default_kind(&self) -> SpaceKindConfig {
        match self {
            EmissionConfig::Threshold(_) => SpaceKindConfig::Discrete,
            _ => SpaceKindConfig::Euclidean,
        }
    }

    fn alphabet(&self) -> u32 {
        match self {
            EmissionConfig::Threshold(c) => c.len() as u32 + 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub x: PointValue,
    pub y: PointValue,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessConfig {
    IidDiscrete {
        atoms: Vec<AtomConfig>,
    },
    GaussianCopula {
        rho: f64,
        emit_x: EmissionConfig,
        emit_y: EmissionConfig,
    },
    MarkovPair {
        transition: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stationary: Option<Vec<f64>>,
        emit_x: Vec<PointValue>,
        emit_y: Vec<PointValue>,
    },
    Ar1Latent {
        rho: f64,
        emit_x: EmissionConfig,
        emit_y: EmissionConfig,
    },
    IndependentProduct {
        x: Box<ProcessConfig>,
        y: Box<ProcessConfig>,
    },
}

/// Space sizes a process needs on one side: `(kind, dim, alphabet)`.
type Needs = (SpaceKindConfig, usize, u32);

impl ProcessConfig {
    fn needs(&self, side_x: bool) -> Needs {
        let points = |ps: &mut dyn Iterator<Item = &PointValue>| -> Needs {
            let mut dim = 1;
            let mut alphabet = 0;
            for p in ps {
                dim = dim.max(p.dim());
                if let PointValue::Scalar(s) = p {
                    if *s >= 0.0 && s.fract() == 0.0 {
                        alphabet = alphabet.max(*s as u32 + 1);
                    }
                }
            }
            (SpaceKindConfig::Euclidean, dim, alphabet)
        };
        match self {
            ProcessConfig::IidDiscrete { atoms } => {
                points(&mut atoms.iter().map(|a| if side_x { &a.x } else { &a.y }))
            }
            ProcessConfig::MarkovPair { emit_x, emit_y, .. } => {
                points(&mut if side_x { emit_x } else { emit_y }.iter())
            }
            ProcessConfig::GaussianCopula { emit_x, emit_y, .. }
            | ProcessConfig::Ar1Latent { emit_x, emit_y, .. } => {
                let e = if side_x { emit_x } else { emit_y };
                (e.default_kind(), 1, e.alphabet())
            }
            ProcessConfig::IndependentProduct { x, y } => {
                if side_x {
                    x.needs(true)
                } else {
                    y.needs(false)
                }
            }
        }
    }

    /// Builds the process with the given space configurations (defaults are
    /// inferred from the emitted points).
    pub fn build(
        &self,
        space_x: Option<&SpaceConfig>,
        space_y: Option<&SpaceConfig>,
    ) -> Result<ProcessSpec> {
        let resolve =
            |cfg: Option<&SpaceConfig>, side_x: bool| -> Result<(SpaceKindConfig, Space)> {
                let (kind, dim, alphabet) = self.needs(side_x);
                let cfg = cfg.cloned().unwrap_or(SpaceConfig {
                    kind,
                    ..SpaceConfig::default()
                });
                let space = cfg
                    .build(dim, alphabet.max(1))
                    .with_context(|| format!("space_{}", if side_x { "x" } else { "y" }))?;
                Ok((cfg.kind, space))
            };
        let (kx, sx) = resolve(space_x, true)?;
        let (ky, sy) = resolve(space_y, false)?;
        let spec = match self {
            ProcessConfig::IidDiscrete { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| {
                        Ok(Atom {
                            x: a.x.to_point(kx)?,
                            y: a.y.to_point(ky)?,
                            weight: a.weight,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                ProcessSpec::IidDiscrete(DiscreteJointDistribution::new(atoms, sx, sy)?)
            }
            ProcessConfig::GaussianCopula {
                rho,
                emit_x,
                emit_y,
            } => ProcessSpec::GaussianCopula {
                rho: *rho,
                emit_x: emit_x.build(),
                emit_y: emit_y.build(),
                space_x: sx,
                space_y: sy,
            },
            ProcessConfig::Ar1Latent {
                rho,
                emit_x,
                emit_y,
            } => ProcessSpec::Ar1Latent {
                rho: *rho,
                emit_x: emit_x.build(),
                emit_y: emit_y.build(),
                space_x: sx,
                space_y: sy,
            },
            ProcessConfig::MarkovPair {
                transition,
                stationary,
                emit_x,
                emit_y,
            } => ProcessSpec::MarkovPair {
                chain: MarkovChain::new(transition.clone(), stationary.clone())?,
                emit_x: emit_x
                    .iter()
                    .map(|p| p.to_point(kx))
                    .collect::<Result<_>>()?,
                emit_y: emit_y
                    .iter()
                    .map(|p| p.to_point(ky))
                    .collect::<Result<_>>()?,
                space_x: sx,
                space_y: sy,
            },
            ProcessConfig::IndependentProduct { x, y } => {
                // Only the X side of `x` and the Y side of `y` are observed.
                let px = x.build(space_x, None)?;
                let py = y.build(None, space_y)?;
                ProcessSpec::independent_product(px, py)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Spectral,
    BlockBootstrap,
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSection {
    #[serde(default = "default_method")]
    pub method: MethodName,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// HAC bandwidth; `floor(n^{1/3})` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<usize>,
    /// Bootstrap block length; `floor(n^{1/3})` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_length: Option<usize>,
    #[serde(default)]
    pub truncation: TruncationConfig,
    /// Bootstrap diagnostic: one index stream for both series.
    #[serde(default)]
    pub single_stream: bool,
    /// Enumerate all permutations (n ≤ 8).
    #[serde(default)]
    pub exact: bool,
}

impl Default for TestSection {
    fn default() -> Self {
        TestSection {
            method: default_method(),
            reps: default_reps(),
            bandwidth: None,
            block_length: None,
            truncation: TruncationConfig::default(),
            single_stream: false,
            exact: false,
        }
    }
}

fn default_method() -> MethodName {
    MethodName::Spectral
}

fn default_reps() -> usize {
    999
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    #[serde(default = "default_energy")]
    pub energy: f64,
    #[serde(default = "default_max_components")]
    pub max_components: usize,
    /// Keep exactly this many components instead of the energy rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<usize>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            energy: default_energy(),
            max_components: default_max_components(),
            fixed: None,
        }
    }
}

fn default_energy() -> f64 {
    0.999
}

fn default_max_components() -> usize {
    100
}

impl TestSection {
    pub fn spectral_options(&self) -> dcov_core::inference::SpectralOptions {
        use dcov_core::spectrum::{Bandwidth, Truncation};
        dcov_core::inference::SpectralOptions {
            truncation: match self.truncation.fixed {
                Some(k) => Truncation::Fixed(k),
                None => Truncation::Energy {
                    fraction: self.truncation.energy,
                    max_components: self.truncation.max_components,
                },
            },
            bandwidth: self.bandwidth.map_or(Bandwidth::Auto, Bandwidth::Fixed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    Nulldist,
    Varscaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    /// Sample sizes, strictly increasing. `nulldist` uses the first entry
    /// (or the top-level `n`).
    #[serde(default)]
    pub n_grid: Vec<usize>,
    /// Independent replications per grid cell.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Draws of the spectral null (`nulldist`).
    #[serde(default = "default_null_reps")]
    pub null_reps: usize,
    /// Include raw per-replication values in the report.
    #[serde(default)]
    pub raw: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            kind: None,
            n_grid: Vec::new(),
            seeds: default_seeds(),
            null_reps: default_null_reps(),
            raw: false,
        }
    }
}

fn default_seeds() -> usize {
    50
}

fn default_null_reps() -> usize {
    2000
}

impl ExperimentSection {
    pub fn check(&self) -> Result<()> {
        if self.seeds == 0 {
            bail!("experiment.seeds must be at least 1");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            bail!(
                "experiment.n_grid must be strictly increasing: {:?}",
                self.n_grid
            );
        }
        if self.n_grid.contains(&0) {
            bail!("experiment.n_grid entries must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingSection {
    /// Explicit lags; `1..=max_lag` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<usize>>,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
}

impl Default for MixingSection {
    fn default() -> Self {
        MixingSection {
            lags: None,
            max_lag: default_max_lag(),
        }
    }
}

fn default_max_lag() -> usize {
    20
}

impl MixingSection {
    pub fn lags(&self) -> Vec<usize> {
        self.lags
            .clone()
            .unwrap_or_else(|| (1..=self.max_lag).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default)]
    pub space: Side,
    #[serde(default = "default_checks")]
    pub pairs: usize,
    #[serde(default = "default_checks")]
    pub triples: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            space: Side::X,
            pairs: default_checks(),
            triples: default_checks(),
        }
    }
}

fn default_checks() -> usize {
    10_000
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Single-column CSV of null draws (`test`) or raw draws (`experiment`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_csv: Option<PathBuf>,
    /// Spectral model JSON (`test` with the spectral method).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_report: Option<PathBuf>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Config::from_toml(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(input) = cfg.input.as_mut() {
            rebase(&mut input.path);
        }
        if let Some(p) = cfg.output.null_csv.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.output.spectral_report.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn process_spec(&self) -> Result<Option<ProcessSpec>> {
        self.process
            .as_ref()
            .map(|p| p.build(self.space_x.as_ref(), self.space_y.as_ref()))
            .transpose()
            .context("building [process]")
    }
}
