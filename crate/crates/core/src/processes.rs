//! Stationary paired processes and exact mixing coefficients.
//!
//! Every generator starts in its stationary law, so a simulated path is a
//! strictly stationary sample of length `n`. Finite-state chains also expose
//! their absolute-regularity coefficients, computed exactly as
//!
//! ```text
//! β(n) = Σᵢ πᵢ · TV(Pⁿ(i, ·), π),    TV(p, q) = ½ ‖p − q‖₁,
//! ```
//!
//! which is the β coefficient between past and future of a stationary Markov
//! chain. The α coefficients are reported through the bound `2α(n) ≤ β(n)`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dcov::{distance_matrix, PairedSample};
use crate::error::{domain, Error, Result};
use crate::joint::{Atom, DiscreteJointDistribution};
use crate::math;
use crate::metric::{Point, Space};
use crate::seed::{self, StreamRng};

const STOCHASTIC_TOLERANCE: f64 = 1e-9;
const STATIONARY_TOLERANCE: f64 = 1e-12;

/// Largest support accepted by [`population_dcov`].
pub const POPULATION_MAX_ATOMS: usize = 4096;

/// A finite-state Markov chain with a stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    states: usize,
    transition: Vec<f64>,
    stationary: Vec<f64>,
}

impl MarkovChain {
    /// Validates `transition` (rows of non-negative entries summing to one).
    /// Without `stationary`, the stationary law is solved for and must be
    /// unique; a supplied one must satisfy `πP = π` within `1e−12`.
    pub fn new(transition: Vec<Vec<f64>>, stationary: Option<Vec<f64>>) -> Result<Self> {
        let states = transition.len();
        if states == 0 {
            return Err(domain("transition matrix is empty"));
        }
        let mut flat = Vec::with_capacity(states * states);
        for (i, row) in transition.iter().enumerate() {
            if row.len() != states {
                return Err(domain(format!(
                    "transition matrix row {i} has {} entries, expected {states}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(domain(format!(
                    "transition matrix row {i} has a negative or non-finite entry"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(domain(format!(
                    "transition matrix row {i} sums to {total}, not 1"
                )));
            }
            flat.extend_from_slice(row);
        }
        let stationary = match stationary {
            Some(pi) => pi,
            // Identical rows: the stationary law is that row, exactly.
            None if transition.iter().all(|r| r == &transition[0]) => transition[0].clone(),
            None => solve_stationary(states, &flat)?,
        };
        let chain = MarkovChain {
            states,
            transition: flat,
            stationary,
        };
        chain.check_stationary()?;
        Ok(chain)
    }

    /// A chain whose rows all equal `pi`: an iid sequence.
    pub fn iid(pi: Vec<f64>) -> Result<Self> {
        let rows = vec![pi.clone(); pi.len()];
        MarkovChain::new(rows, Some(pi))
    }

    /// Two states that switch with probability `p` per step.
    pub fn symmetric_two_state(p: f64) -> Result<Self> {
        MarkovChain::new(
            vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
            Some(vec![0.5, 0.5]),
        )
    }

    fn check_stationary(&self) -> Result<()> {
        let m = self.states;
        if self.stationary.len() != m {
            return Err(domain(format!(
                "stationary vector has {} entries, expected {m}",
                self.stationary.len()
            )));
        }
        if self.stationary.iter().any(|p| !(*p >= 0.0)) {
            return Err(domain("stationary vector has a negative entry"));
        }
        let total: f64 = self.stationary.iter().sum();
        if (total - 1.0).abs() > STATIONARY_TOLERANCE {
            return Err(domain(format!("stationary vector sums to {total}")));
        }
        for j in 0..m {
            let v: f64 = (0..m).map(|i| self.stationary[i] * self.p(i, j)).sum();
            if (v - self.stationary[j]).abs() > STATIONARY_TOLERANCE {
                return Err(domain(format!(
                    "pi is not stationary: (pi P)[{j}] = {v}, pi[{j}] = {}",
                    self.stationary[j]
                )));
            }
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.states
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.states + j]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Row-major transition matrix.
    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    /// The chain of two independent copies, on states `i · m₂ + j`.
    pub fn product(&self, other: &MarkovChain) -> MarkovChain {
        let (m1, m2) = (self.states, other.states);
        let m = m1 * m2;
        let mut transition = vec![0.0; m * m];
        for i1 in 0..m1 {
            for i2 in 0..m2 {
                for j1 in 0..m1 {
                    for j2 in 0..m2 {
                        transition[(i1 * m2 + i2) * m + j1 * m2 + j2] =
                            self.p(i1, j1) * other.p(i2, j2);
                    }
                }
            }
        }
        let stationary = (0..m)
            .map(|s| self.stationary[s / m2] * other.stationary[s % m2])
            .collect();
        MarkovChain {
            states: m,
            transition,
            stationary,
        }
    }

    /// Whether every row equals `π`, i.e. the chain is an iid sequence.
    pub fn is_iid(&self) -> bool {
        (0..self.states).all(|i| {
            (0..self.states)
                .all(|j| (self.p(i, j) - self.stationary[j]).abs() <= STATIONARY_TOLERANCE)
        })
    }

    /// Largest modulus among the non-unit eigenvalues of `P` (ignoring one
    /// copy of the eigenvalue 1).
    pub fn second_eigenvalue_modulus(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.states, self.states, &self.transition);
        let mut moduli: Vec<f64> = m
            .complex_eigenvalues()
            .iter()
            .map(|z| math::sqrt(z.re * z.re + z.im * z.im))
            .collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        moduli.get(1).copied().unwrap_or(0.0)
    }

    fn sample_next(&self, state: usize, rng: &mut StreamRng) -> usize {
        sample_categorical(
            &self.transition[state * self.states..(state + 1) * self.states],
            rng,
        )
    }

    /// A stationary path of latent states.
    pub fn simulate_states(&self, n: usize, rng: &mut StreamRng) -> Vec<usize> {
        let mut path = Vec::with_capacity(n);
        if n == 0 {
            return path;
        }
        let mut s = sample_categorical(&self.stationary, rng);
        path.push(s);
        for _ in 1..n {
            s = self.sample_next(s, rng);
            path.push(s);
        }
        path
    }
}

fn solve_stationary(m: usize, p: &[f64]) -> Result<Vec<f64>> {
    // (Pᵀ − I) π = 0 with the last equation replaced by Σπ = 1.
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = p[j * m + i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    rhs[m - 1] = 1.0;
    let lu = a.lu();
    let pi = lu
        .solve(&rhs)
        .ok_or_else(|| domain("stationary distribution is not unique; supply pi explicitly"))?;
    let mut pi: Vec<f64> = pi
        .iter()
        .map(|v| if v.abs() < 1e-15 { 0.0 } else { *v })
        .collect();
    if pi.iter().any(|v| *v < 0.0) {
        return Err(domain(
            "stationary distribution is not unique; supply pi explicitly",
        ));
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(pi)
}

fn sample_categorical(weights: &[f64], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding in the cumulative sum: fall back to the last state with mass.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Exact β coefficients (and the α bound) at a list of lags.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    pub lags: Vec<usize>,
    pub beta_values: Vec<f64>,
    /// `β(n) / 2`, an upper bound for `α(n)`.
    pub alpha_upper: Vec<f64>,
}

pub fn markov_beta_mixing(chain: &MarkovChain, lags: &[usize]) -> Result<MixingProfile> {
    let m = chain.states;
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let mut power = identity(m);
    let mut beta_at = Vec::with_capacity(max_lag + 1);
    beta_at.push(beta_of_power(chain, &power));
    for _ in 0..max_lag {
        power = matmul(m, &power, &chain.transition);
        beta_at.push(beta_of_power(chain, &power));
    }
    let beta_values: Vec<f64> = lags.iter().map(|&l| beta_at[l]).collect();
    let alpha_upper = beta_values.iter().map(|b| b / 2.0).collect();
    Ok(MixingProfile {
        lags: lags.to_vec(),
        beta_values,
        alpha_upper,
    })
}

fn beta_of_power(chain: &MarkovChain, power: &[f64]) -> f64 {
    let m = chain.states;
    let pi = &chain.stationary;
    let total: f64 = (0..m)
        .map(|i| {
            let tv: f64 = (0..m)
                .map(|j| (power[i * m + j] - pi[j]).abs())
                .sum::<f64>()
                / 2.0;
            pi[i] * tv
        })
        .sum();
    total.clamp(0.0, 1.0)
}

fn identity(m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m * m];
    (0..m).for_each(|i| v[i * m + i] = 1.0);
    v
}

fn matmul(m: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    out
}

/// Map from a standard Gaussian latent value to a point.
#[derive(Debug, Clone, PartialEq)]
pub enum Emission {
    Identity,
    Square,
    Abs,
    /// `Φ(l)`, a uniform value on (0, 1).
    Uniform,
    /// Symbol = number of cut points `≤ l`.
    Threshold(Vec<f64>),
}

impl Emission {
    pub fn emit(&self, latent: f64) -> Point {
        match self {
            Emission::Identity => Point::scalar(latent),
            Emission::Square => Point::scalar(latent * latent),
            Emission::Abs => Point::scalar(latent.abs()),
            Emission::Uniform => Point::scalar(math::normal_cdf(latent)),
            Emission::Threshold(cuts) => {
                Point::symbol(cuts.iter().filter(|c| **c <= latent).count() as u32)
            }
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, Emission::Threshold(c) if c.is_empty())
    }
}

/// A strictly stationary paired process.
#[derive(Debug, Clone)]
pub enum ProcessSpec {
    /// iid draws from a finitely supported joint law.
    IidDiscrete(DiscreteJointDistribution),
    /// iid bivariate standard normal pairs with correlation `rho`, pushed
    /// through the emissions.
    GaussianCopula {
        rho: f64,
        emit_x: Emission,
        emit_y: Emission,
        space_x: Space,
        space_y: Space,
    },
    /// A stationary Markov chain observed through per-state emissions.
    MarkovPair {
        chain: MarkovChain,
        emit_x: Vec<Point>,
        emit_y: Vec<Point>,
        space_x: Space,
        space_y: Space,
    },
    /// Unit-variance AR(1) latent `L_t = ρ L_{t−1} + √(1−ρ²) ε_t` observed
    /// through both emissions.
    Ar1Latent {
        rho: f64,
        emit_x: Emission,
        emit_y: Emission,
        space_x: Space,
        space_y: Space,
    },
    /// `X` from the first process and `Y` from the second, simulated
    /// independently.
    IndependentProduct {
        x: Box<ProcessSpec>,
        y: Box<ProcessSpec>,
    },
}

impl ProcessSpec {
    pub fn independent_product(x: ProcessSpec, y: ProcessSpec) -> Self {
        ProcessSpec::IndependentProduct {
            x: Box::new(x),
            y: Box::new(y),
        }
    }

    pub fn space_x(&self) -> &Space {
        match self {
            ProcessSpec::IidDiscrete(t) => t.space_x(),
            ProcessSpec::GaussianCopula { space_x, .. }
            | ProcessSpec::MarkovPair { space_x, .. }
            | ProcessSpec::Ar1Latent { space_x, .. } => space_x,
            ProcessSpec::IndependentProduct { x, .. } => x.space_x(),
        }
    }

    pub fn space_y(&self) -> &Space {
        match self {
            ProcessSpec::IidDiscrete(t) => t.space_y(),
            ProcessSpec::GaussianCopula { space_y, .. }
            | ProcessSpec::MarkovPair { space_y, .. }
            | ProcessSpec::Ar1Latent { space_y, .. } => space_y,
            ProcessSpec::IndependentProduct { y, .. } => y.space_y(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::IidDiscrete(_) => Ok(()),
            ProcessSpec::GaussianCopula {
                rho,
                emit_x,
                emit_y,
                space_x,
                space_y,
            } => {
                if !(rho.abs() <= 1.0) {
                    return Err(domain(format!("copula correlation {rho} outside [-1, 1]")));
                }
                check_emission(emit_x, space_x)?;
                check_emission(emit_y, space_y)
            }
            ProcessSpec::Ar1Latent {
                rho,
                emit_x,
                emit_y,
                space_x,
                space_y,
            } => {
                if !(rho.abs() < 1.0) {
                    return Err(domain(format!(
                        "AR(1) coefficient {rho} must satisfy |rho| < 1"
                    )));
                }
                check_emission(emit_x, space_x)?;
                check_emission(emit_y, space_y)
            }
            ProcessSpec::MarkovPair {
                chain,
                emit_x,
                emit_y,
                space_x,
                space_y,
            } => {
                if emit_x.len() != chain.states() || emit_y.len() != chain.states() {
                    return Err(domain(format!(
                        "chain has {} states but emissions have {} and {} entries",
                        chain.states(),
                        emit_x.len(),
                        emit_y.len()
                    )));
                }
                emit_x.iter().try_for_each(|p| space_x.check_point(p))?;
                emit_y.iter().try_for_each(|p| space_y.check_point(p))
            }
            ProcessSpec::IndependentProduct { x, y } => {
                x.validate()?;
                y.validate()
            }
        }
    }

    /// Whether `X` and `Y` are independent by construction (or, for iid
    /// discrete laws, exactly a product law).
    pub fn has_independent_components(&self) -> bool {
        match self {
            ProcessSpec::IndependentProduct { .. } => true,
            ProcessSpec::IidDiscrete(t) => t.is_product(1e-12),
            ProcessSpec::GaussianCopula {
                rho,
                emit_x,
                emit_y,
                ..
            } => *rho == 0.0 || emit_x.is_constant() || emit_y.is_constant(),
            ProcessSpec::Ar1Latent { emit_x, emit_y, .. } => {
                emit_x.is_constant() || emit_y.is_constant()
            }
            ProcessSpec::MarkovPair {
                chain,
                emit_x,
                emit_y,
                ..
            } => {
                let law = markov_law(chain, emit_x, emit_y, self.space_x(), self.space_y());
                chain.is_iid() && law.is_ok_and(|l| l.is_product(1e-12))
            }
        }
    }

    /// Whether the paired observations are iid over time.
    pub fn is_serially_independent(&self) -> bool {
        match self {
            ProcessSpec::IidDiscrete(_) | ProcessSpec::GaussianCopula { .. } => true,
            ProcessSpec::Ar1Latent { rho, .. } => *rho == 0.0,
            ProcessSpec::MarkovPair { chain, .. } => chain.is_iid(),
            ProcessSpec::IndependentProduct { x, y } => {
                x.is_serially_independent() && y.is_serially_independent()
            }
        }
    }

    /// The stationary law of `(X_t, Y_t)` when it has finite support.
    pub fn stationary_law(&self) -> Option<Result<DiscreteJointDistribution>> {
        match self {
            ProcessSpec::IidDiscrete(t) => Some(Ok(t.clone())),
            ProcessSpec::MarkovPair {
                chain,
                emit_x,
                emit_y,
                space_x,
                space_y,
            } => Some(markov_law(chain, emit_x, emit_y, space_x, space_y)),
            ProcessSpec::IndependentProduct { x, y } => {
                let (lx, ly) = (x.stationary_law()?, y.stationary_law()?);
                Some(lx.and_then(|lx| {
                    let ly = ly?;
                    DiscreteJointDistribution::product(
                        &lx.marginal_x(),
                        &ly.marginal_y(),
                        lx.space_x().clone(),
                        ly.space_y().clone(),
                    )
                }))
            }
            ProcessSpec::GaussianCopula { .. } | ProcessSpec::Ar1Latent { .. } => None,
        }
    }

    /// The finite-state latent chain driving the process, if any. Mixing
    /// coefficients of the observations are bounded by those of this chain.
    pub fn latent_chain(&self) -> Option<MarkovChain> {
        match self {
            ProcessSpec::MarkovPair { chain, .. } => Some(chain.clone()),
            ProcessSpec::IidDiscrete(t) => {
                MarkovChain::iid(t.atoms().iter().map(|a| a.weight).collect()).ok()
            }
            ProcessSpec::IndependentProduct { x, y } => {
                Some(x.latent_chain()?.product(&y.latent_chain()?))
            }
            // Gaussian AR(1) chains mix geometrically but have no finite-state form.
            ProcessSpec::GaussianCopula { .. } | ProcessSpec::Ar1Latent { .. } => None,
        }
    }

    pub fn mixing_profile(&self, lags: &[usize]) -> Option<Result<MixingProfile>> {
        self.latent_chain().map(|c| markov_beta_mixing(&c, lags))
    }
}

fn check_emission(e: &Emission, space: &Space) -> Result<()> {
    space.check_point(&e.emit(0.0)).map_err(|err| match err {
        Error::IncompatiblePoint { space, found } => domain(format!(
            "emission {e:?} produces {found} points, incompatible with space {space}"
        )),
        other => other,
    })
}

fn markov_law(
    chain: &MarkovChain,
    emit_x: &[Point],
    emit_y: &[Point],
    space_x: &Space,
    space_y: &Space,
) -> Result<DiscreteJointDistribution> {
    let atoms = chain
        .stationary()
        .iter()
        .enumerate()
        .map(|(s, w)| Atom {
            x: emit_x[s].clone(),
            y: emit_y[s].clone(),
            weight: *w,
        })
        .collect();
    DiscreteJointDistribution::new(atoms, space_x.clone(), space_y.clone())
}

/// A stationary path of length `n`; identical `(spec, n, seed)` give
/// identical samples.
pub fn simulate(spec: &ProcessSpec, n: usize, seed: u64) -> Result<PairedSample> {
    if n == 0 {
        return Err(domain("cannot simulate an empty path"));
    }
    spec.validate()?;
    let (xs, ys) = simulate_points(spec, n, seed);
    PairedSample::new(xs, ys, spec.space_x().clone(), spec.space_y().clone())
}

fn simulate_points(spec: &ProcessSpec, n: usize, seed: u64) -> (Vec<Point>, Vec<Point>) {
    let mut rng = seed::rng(seed);
    match spec {
        ProcessSpec::IidDiscrete(t) => {
            let w: Vec<f64> = t.atoms().iter().map(|a| a.weight).collect();
            (0..n)
                .map(|_| {
                    let a = &t.atoms()[sample_categorical(&w, &mut rng)];
                    (a.x.clone(), a.y.clone())
                })
                .unzip()
        }
        ProcessSpec::GaussianCopula {
            rho,
            emit_x,
            emit_y,
            ..
        } => {
            let c = math::sqrt(1.0 - rho * rho);
            (0..n)
                .map(|_| {
                    let e1: f64 = StandardNormal.sample(&mut rng);
                    let e2: f64 = StandardNormal.sample(&mut rng);
                    (emit_x.emit(e1), emit_y.emit(rho * e1 + c * e2))
                })
                .unzip()
        }
        ProcessSpec::Ar1Latent {
            rho,
            emit_x,
            emit_y,
            ..
        } => {
            let c = math::sqrt(1.0 - rho * rho);
            let mut latent: f64 = StandardNormal.sample(&mut rng);
            let mut out = (Vec::with_capacity(n), Vec::with_capacity(n));
            for t in 0..n {
                if t > 0 {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    latent = rho * latent + c * e;
                }
                out.0.push(emit_x.emit(latent));
                out.1.push(emit_y.emit(latent));
            }
            out
        }
        ProcessSpec::MarkovPair {
            chain,
            emit_x,
            emit_y,
            ..
        } => chain
            .simulate_states(n, &mut rng)
            .into_iter()
            .map(|s| (emit_x[s].clone(), emit_y[s].clone()))
            .unzip(),
        ProcessSpec::IndependentProduct { x, y } => {
            let (xs, _) = simulate_points(x, n, seed::derive(seed, seed::STREAM_PROCESS_X, 0));
            let (_, ys) = simulate_points(y, n, seed::derive(seed, seed::STREAM_PROCESS_Y, 0));
            (xs, ys)
        }
    }
}

/// Exact `dcov(θ) = Σ θ(z) θ(z') δ_θ(z, z')` for a finitely supported law.
pub fn population_dcov(theta: &DiscreteJointDistribution) -> Result<f64> {
    let s = theta.atoms().len();
    if s > POPULATION_MAX_ATOMS {
        return Err(Error::CostCap {
            what: "population dcov (cost |support|^2)",
            cost: (s as u128) * (s as u128),
            cap: (POPULATION_MAX_ATOMS as u128).pow(2),
        });
    }
    let w: Vec<f64> = theta.atoms().iter().map(|a| a.weight).collect();
    let xs: Vec<Point> = theta.atoms().iter().map(|a| a.x.clone()).collect();
    let ys: Vec<Point> = theta.atoms().iter().map(|a| a.y.clone()).collect();
    let cx = weighted_center(
        &distance_matrix(&xs, theta.space_x())?.values().to_vec(),
        &w,
    );
    let cy = weighted_center(
        &distance_matrix(&ys, theta.space_y())?.values().to_vec(),
        &w,
    );
    let mut acc = math::Compensated::default();
    for i in 0..s {
        for j in 0..s {
            acc.add(w[i] * w[j] * cx[i * s + j] * cy[i * s + j]);
        }
    }
    Ok(acc.total())
}

/// `d(zᵢ, zⱼ) − a(zᵢ) − a(zⱼ) + D` under weights `w`.
fn weighted_center(d: &[f64], w: &[f64]) -> Vec<f64> {
    let s = w.len();
    let a: Vec<f64> = (0..s)
        .map(|i| math::compensated_sum((0..s).map(|k| w[k] * d[i * s + k])))
        .collect();
    let big_d = math::compensated_sum((0..s).map(|i| w[i] * a[i]));
    let mut out = Vec::with_capacity(s * s);
    for i in 0..s {
        for j in 0..s {
            out.push(d[i * s + j] - a[i] - a[j] + big_d);
        }
    }
    out
}
