//! Independence tests for paired samples.
//!
//! All three tests report the statistic `n · dcov(θₙ)` and an add-one
//! p-value `(1 + #{draws ≥ statistic}) / (reps + 1)`. Draws within a relative
//! `1e−12` of the statistic count as ties (and therefore as exceedances), so
//! resampled statistics that reproduce the observed one up to rounding do not
//! deflate the p-value.
//!
//! - [`spectral_test`]: null law `Σ λₖ ζₖ²` from the sample's own spectral
//!   model and long-run covariance; valid for mixing sequences.
//! - [`block_bootstrap_test`]: circular moving-block resampling of the `x`
//!   and `y` index sequences with two independent streams, which destroys
//!   cross-dependence and keeps serial dependence within each series.
//! - [`permutation_test`]: random permutations of `y` against fixed `x`;
//!   exact only for iid data.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dcov::{dcov_parts, distance_matrix, permuted_schur_mean, resampled_dcov, PairedSample};
use crate::error::{domain, Error, Result};
use crate::exec::Executor;
use crate::math;
use crate::seed;
use crate::spectrum::{
    empirical_spectrum, long_run_covariance, simulate_null, Bandwidth, Truncation,
};

/// Smallest sample accepted by [`spectral_test`].
pub const SPECTRAL_MIN_N: usize = 10;
/// Largest sample accepted by [`permutation_test_exact`].
pub const EXACT_PERMUTATION_MAX_N: usize = 8;
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    Spectral,
    BlockBootstrap,
    Permutation,
}

impl TestMethod {
    pub fn name(self) -> &'static str {
        match self {
            TestMethod::Spectral => "spectral",
            TestMethod::BlockBootstrap => "block-bootstrap",
            TestMethod::Permutation => "permutation",
        }
    }
}

/// Method-specific settings that were in effect.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TestConfig {
    pub bandwidth: Option<usize>,
    pub kept_components: Option<usize>,
    pub block_length: Option<usize>,
    pub single_stream: bool,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub method: TestMethod,
    pub n: usize,
    /// `n · dcov(θₙ)`.
    pub statistic: f64,
    pub p_value: f64,
    pub reps: usize,
    /// Null draws (simulated limit or resampled statistics) in replication
    /// order.
    pub null_draws: Vec<f64>,
    pub seed: u64,
    pub config: TestConfig,
    /// Set when the sample has a zero spectral model (for instance a
    /// constant marginal); the p-value is then 1.
    pub degenerate: bool,
}

impl TestResult {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value <= level
    }
}

#[inline]
fn at_least(draw: f64, statistic: f64) -> bool {
    draw >= statistic - TIE_TOLERANCE * statistic.abs()
}

/// `(1 + #{dᵢ ≥ s}) / (reps + 1)`.
pub fn add_one_p_value(statistic: f64, draws: &[f64]) -> f64 {
    let hits = draws.iter().filter(|d| at_least(**d, statistic)).count();
    (1 + hits) as f64 / (draws.len() + 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralOptions {
    pub truncation: Truncation,
    pub bandwidth: Bandwidth,
}

pub fn spectral_test<E: Executor>(
    sample: &PairedSample,
    reps: usize,
    seed: u64,
    options: &SpectralOptions,
    exec: &E,
) -> Result<TestResult> {
    let n = sample.len();
    if n < SPECTRAL_MIN_N {
        return Err(domain(format!(
            "spectral test needs n >= {SPECTRAL_MIN_N}, got {n}"
        )));
    }
    if reps == 0 {
        return Err(domain("spectral test needs at least one replication"));
    }
    let parts = dcov_parts(sample)?;
    let statistic = parts.estimate.statistic();
    let model = empirical_spectrum(&parts.delta, options.truncation)?;
    let mut result = TestResult {
        method: TestMethod::Spectral,
        n,
        statistic,
        p_value: 1.0,
        reps,
        null_draws: Vec::new(),
        seed,
        config: TestConfig {
            kept_components: Some(model.kept),
            ..TestConfig::default()
        },
        degenerate: false,
    };
    if model.kept == 0 {
        result.degenerate = true;
        return Ok(result);
    }
    let lrc = long_run_covariance(&model, options.bandwidth)?;
    let null = simulate_null(&model, &lrc, reps, seed, exec)?;
    result.config.bandwidth = Some(lrc.bandwidth);
    result.p_value = add_one_p_value(statistic, &null.draws);
    result.null_draws = null.draws;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockLength {
    /// `floor(n^{1/3})`, at least 1.
    #[default]
    Auto,
    Fixed(usize),
}

impl BlockLength {
    pub fn resolve(self, n: usize) -> Result<usize> {
        match self {
            BlockLength::Auto => Ok((math::floor(math::cbrt(n as f64)) as usize).clamp(1, n)),
            BlockLength::Fixed(l) if l == 0 || l > n => {
                Err(domain(format!("block length {l} must lie in 1..={n}")))
            }
            BlockLength::Fixed(l) => Ok(l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BootstrapMode {
    /// Independent index streams for `x` and `y` (imposes the null).
    #[default]
    Decoupled,
    /// One index stream for both series; keeps pairs together. Diagnostic
    /// only: with full-length blocks every resample is a rotation.
    SingleStream,
}

/// Circular block bootstrap index sequence of length `n`.
pub fn circular_block_indices<R: Rng + ?Sized>(n: usize, block: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let start = rng.random_range(0..n);
        for j in 0..block.min(n - out.len()) {
            out.push((start + j) % n);
        }
    }
    out
}

pub fn block_bootstrap_test<E: Executor>(
    sample: &PairedSample,
    block_length: BlockLength,
    reps: usize,
    seed: u64,
    mode: BootstrapMode,
    exec: &E,
) -> Result<TestResult> {
    if reps == 0 {
        return Err(domain("block bootstrap needs at least one replication"));
    }
    let n = sample.len();
    let block = block_length.resolve(n)?;
    let statistic = dcov_parts(sample)?.estimate.statistic();
    let dx = distance_matrix(sample.xs(), sample.space_x())?;
    let dy = distance_matrix(sample.ys(), sample.space_y())?;
    let nf = n as f64;
    let null_draws = exec.map(reps, |r| {
        let mut rng = seed::stream(seed, seed::STREAM_BOOTSTRAP, 2 * r as u64);
        let ix = circular_block_indices(n, block, &mut rng);
        let iy = match mode {
            BootstrapMode::Decoupled => {
                let mut rng = seed::stream(seed, seed::STREAM_BOOTSTRAP, 2 * r as u64 + 1);
                circular_block_indices(n, block, &mut rng)
            }
            BootstrapMode::SingleStream => ix.clone(),
        };
        nf * resampled_dcov(&dx, &dy, &ix, &iy)
    });
    Ok(TestResult {
        method: TestMethod::BlockBootstrap,
        n,
        statistic,
        p_value: add_one_p_value(statistic, &null_draws),
        reps,
        null_draws,
        seed,
        config: TestConfig {
            block_length: Some(block),
            single_stream: mode == BootstrapMode::SingleStream,
            ..TestConfig::default()
        },
        degenerate: false,
    })
}

pub fn permutation_test<E: Executor>(
    sample: &PairedSample,
    reps: usize,
    seed: u64,
    exec: &E,
) -> Result<TestResult> {
    if reps == 0 {
        return Err(domain("permutation test needs at least one replication"));
    }
    let n = sample.len();
    let parts = dcov_parts(sample)?;
    let statistic = parts.estimate.statistic();
    let nf = n as f64;
    let null_draws = exec.map(reps, |r| {
        let mut rng = seed::stream(seed, seed::STREAM_PERMUTATION, r as u64);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        nf * permuted_schur_mean(&parts.a, &parts.b, &perm)
    });
    Ok(TestResult {
        method: TestMethod::Permutation,
        n,
        statistic,
        p_value: add_one_p_value(statistic, &null_draws),
        reps,
        null_draws,
        seed,
        config: TestConfig::default(),
        degenerate: false,
    })
}

/// Exact permutation p-value `#{π : T(π) ≥ T} / n!` over all `n!`
/// permutations (the identity included), for `n ≤ 8`.
pub fn permutation_test_exact(sample: &PairedSample) -> Result<TestResult> {
    let n = sample.len();
    if n > EXACT_PERMUTATION_MAX_N {
        return Err(Error::CostCap {
            what: "exact permutation enumeration (cost n!)",
            cost: (1..=n as u128).product(),
            cap: (1..=EXACT_PERMUTATION_MAX_N as u128).product(),
        });
    }
    let parts = dcov_parts(sample)?;
    let statistic = parts.estimate.statistic();
    let nf = n as f64;
    let mut draws = Vec::new();
    for_each_permutation(n, |perm| {
        draws.push(nf * permuted_schur_mean(&parts.a, &parts.b, perm))
    });
    let hits = draws.iter().filter(|d| at_least(**d, statistic)).count();
    Ok(TestResult {
        method: TestMethod::Permutation,
        n,
        statistic,
        p_value: hits as f64 / draws.len() as f64,
        reps: draws.len(),
        null_draws: draws,
        seed: 0,
        config: TestConfig {
            exact: true,
            ..TestConfig::default()
        },
        degenerate: false,
    })
}

/// Heap's algorithm.
fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut visit: F) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = alloc::vec![0usize; n];
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcov::dcov;
    use crate::exec::Sequential;
    use crate::metric::{Point, Space};
    use alloc::vec;

    fn sample(xs: &[f64], ys: &[f64]) -> PairedSample {
        PairedSample::new(
            xs.iter().map(|&v| Point::scalar(v)).collect(),
            ys.iter().map(|&v| Point::scalar(v)).collect(),
            Space::euclidean(1),
            Space::euclidean(1),
        )
        .unwrap()
    }

    fn noisy(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = seed::rng(seed);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn p_value_rule() {
        assert_eq!(add_one_p_value(1.0, &[0.0, 2.0, 1.0, 0.5]), 3.0 / 5.0);
        assert_eq!(add_one_p_value(10.0, &[0.0; 9]), 0.1);
        assert_eq!(add_one_p_value(0.0, &[]), 1.0);
    }

    #[test]
    fn heap_enumerates_all_permutations() {
        let mut seen = Vec::new();
        for_each_permutation(4, |p| seen.push(p.to_vec()));
        assert_eq!(seen.len(), 24);
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn spectral_test_needs_ten_points() {
        let s = sample(&noisy(9, 1), &noisy(9, 2));
        assert!(spectral_test(&s, 10, 1, &SpectralOptions::default(), &Sequential).is_err());
    }

    #[test]
    fn spectral_test_on_constant_marginal_is_degenerate() {
        let s = sample(&noisy(30, 1), &[2.0; 30]);
        let r = spectral_test(&s, 100, 1, &SpectralOptions::default(), &Sequential).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn spectral_statistic_is_n_times_dcov() {
        let s = sample(&noisy(40, 3), &noisy(40, 4));
        let r = spectral_test(&s, 200, 7, &SpectralOptions::default(), &Sequential).unwrap();
        assert_eq!(r.statistic, 40.0 * dcov(&s).unwrap().dcov);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        assert_eq!(r.null_draws.len(), 200);
        assert_eq!(r.config.bandwidth, Some(3));
    }

    #[test]
    fn block_length_rules() {
        assert_eq!(BlockLength::Auto.resolve(500).unwrap(), 7);
        assert_eq!(BlockLength::Auto.resolve(1).unwrap(), 1);
        assert!(BlockLength::Fixed(0).resolve(5).is_err());
        assert!(BlockLength::Fixed(6).resolve(5).is_err());
    }

    #[test]
    fn circular_blocks_wrap() {
        let mut rng = seed::rng(1);
        let idx = circular_block_indices(5, 5, &mut rng);
        for w in idx.windows(2) {
            assert_eq!(w[1], (w[0] + 1) % 5);
        }
        let idx = circular_block_indices(7, 3, &mut rng);
        assert_eq!(idx.len(), 7);
    }

    #[test]
    fn full_blocks_in_single_stream_mode_are_rotations() {
        let s = sample(&noisy(25, 5), &noisy(25, 6));
        let r = block_bootstrap_test(
            &s,
            BlockLength::Fixed(25),
            30,
            2,
            BootstrapMode::SingleStream,
            &Sequential,
        )
        .unwrap();
        for d in &r.null_draws {
            assert!((d - r.statistic).abs() <= 1e-12 * r.statistic);
        }
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn bootstrap_errors() {
        let s = sample(&noisy(10, 1), &noisy(10, 2));
        assert!(block_bootstrap_test(
            &s,
            BlockLength::Auto,
            0,
            1,
            BootstrapMode::Decoupled,
            &Sequential
        )
        .is_err());
        assert!(block_bootstrap_test(
            &s,
            BlockLength::Fixed(11),
            5,
            1,
            BootstrapMode::Decoupled,
            &Sequential
        )
        .is_err());
    }

    #[test]
    fn unit_blocks_on_two_points_follow_the_resampling_law() {
        // With block length 1 each series is resampled with replacement; for
        // n = 2 a resample keeps both distinct points with probability 1/2,
        // so the statistic is d·e/2 w.p. 1/4 and 0 otherwise.
        let s = sample(&[0.0, 2.0], &[0.0, 3.0]);
        let reps = 8000;
        let r = block_bootstrap_test(
            &s,
            BlockLength::Fixed(1),
            reps,
            17,
            BootstrapMode::Decoupled,
            &Sequential,
        )
        .unwrap();
        let full = r
            .null_draws
            .iter()
            .filter(|d| (**d - 3.0).abs() < 1e-12)
            .count();
        let zero = r.null_draws.iter().filter(|d| d.abs() < 1e-12).count();
        assert_eq!(full + zero, reps);
        let freq = full as f64 / reps as f64;
        assert!(
            (freq - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / reps as f64).sqrt() + 1e-9,
            "{freq}"
        );
    }

    #[test]
    fn exact_permutation_two_points() {
        let s = sample(&[0.0, 1.0], &[5.0, 2.0]);
        let r = permutation_test_exact(&s).unwrap();
        assert_eq!(r.reps, 2);
        assert!(r.p_value == 0.5 || r.p_value == 1.0);
        let mc = permutation_test(&s, 99, 4, &Sequential).unwrap();
        assert!(mc.p_value >= 1.0 / 100.0 && mc.p_value <= 1.0);
    }

    #[test]
    fn exact_permutation_detects_monotone_coupling() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = permutation_test_exact(&sample(&xs, &xs)).unwrap();
        assert_eq!(r.reps, 5040);
        // Only the identity and the reversal reach the observed statistic.
        assert!((r.p_value - 2.0 / 5040.0).abs() < 1e-15);
        assert!(permutation_test_exact(&sample(&[0.0; 9], &[0.0; 9])).is_err());
    }

    #[test]
    fn tests_are_deterministic() {
        let s = sample(&noisy(30, 8), &noisy(30, 9));
        let a = permutation_test(&s, 50, 3, &Sequential).unwrap();
        let b = permutation_test(&s, 50, 3, &Sequential).unwrap();
        assert_eq!(a, b);
        let a = block_bootstrap_test(
            &s,
            BlockLength::Auto,
            20,
            3,
            BootstrapMode::Decoupled,
            &Sequential,
        )
        .unwrap();
        let b = block_bootstrap_test(
            &s,
            BlockLength::Auto,
            20,
            3,
            BootstrapMode::Decoupled,
            &Sequential,
        )
        .unwrap();
        assert_eq!(a, b);
        let _ = vec![0u8];
    }
}
