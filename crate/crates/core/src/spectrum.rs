//! Spectral model of the empirical δ operator and its limiting quadratic
//! form.
//!
//! Under independence `n · dcov(θₙ)` converges to `Σ λₖ ζₖ²`, where `λₖ` are
//! the eigenvalues of `f ↦ ∫ δ_θ(·, z) f(z) dθ(z)` and `ζ` is a centred
//! Gaussian sequence with `Cov(ζᵢ, ζⱼ) = lim n⁻¹ Σ_{t,u} Cov(φᵢ(Z_t), φⱼ(Z_u))`.
//! Both ingredients are estimated from one realization:
//!
//! - eigenpairs of `n⁻¹ Δ` (Nyström discretization), with eigenfunction
//!   values `φ̂ₖ(z_t) = √n · uₖ[t]`;
//! - a Bartlett-weighted long-run covariance of the score sequences, with
//!   `1/(n − |d|)` normalization per lag and a PSD projection by eigenvalue
//!   clipping.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::dcov::{dcov_parts, DeltaMatrix, PairedSample};
use crate::error::{contract, domain, Error, Result};
use crate::exec::Executor;
use crate::linalg::{self, symmetric_eigen};
use crate::math;
use crate::seed;

/// Relative tolerance for negative eigenvalues of `n⁻¹ Δ`.
pub const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-8;

/// How many eigenpairs to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Smallest `K` with `Σ_{k≤K} λₖ ≥ fraction · trace`, capped at
    /// `min(n, max_components)`.
    Energy {
        fraction: f64,
        max_components: usize,
    },
    /// The `K` leading eigenpairs (fewer if fewer are positive).
    Fixed(usize),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Energy {
            fraction: 0.999,
            max_components: 100,
        }
    }
}

/// Eigen-model of `n⁻¹ Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub n: usize,
    /// All eigenvalues, descending, negatives within tolerance clipped to 0.
    pub eigenvalues: Vec<f64>,
    /// `scores[k][t] = φ̂ₖ(z_t)` for the kept components.
    pub scores: Vec<Vec<f64>>,
    pub kept: usize,
    /// Sum of all positive eigenvalues before truncation.
    pub trace_full: f64,
}

impl SpectralModel {
    pub fn kept_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.kept]
    }

    pub fn kept_mass(&self) -> f64 {
        self.kept_eigenvalues().iter().sum()
    }
}

pub fn empirical_spectrum(delta: &DeltaMatrix, truncation: Truncation) -> Result<SpectralModel> {
    let n = delta.n();
    for i in 0..n {
        for j in 0..i {
            if delta.get(i, j) != delta.get(j, i) {
                return Err(domain(format!(
                    "delta matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let nf = n as f64;
    let scaled: Vec<f64> = delta.values().iter().map(|v| v / nf).collect();
    let eig = symmetric_eigen(n, &scaled);
    let largest = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let smallest = eig.values.last().copied().unwrap_or(0.0);
    // Absolute floor so an all-zero operator with rounding noise passes.
    let frobenius = math::sqrt(scaled.iter().map(|v| v * v).sum::<f64>());
    let tolerance = NEGATIVE_EIGEN_TOLERANCE * largest.max(f64::EPSILON * frobenius);
    if smallest < -tolerance {
        return Err(Error::NegativeSpectrum {
            min: smallest,
            max: largest,
        });
    }
    let eigenvalues: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let trace_full: f64 = eigenvalues.iter().sum();
    let positive = eigenvalues.iter().take_while(|v| **v > 0.0).count();
    let kept = match truncation {
        Truncation::Fixed(k) => k.min(positive),
        Truncation::Energy {
            fraction,
            max_components,
        } => {
            let cap = positive.min(max_components);
            let target = fraction * trace_full;
            let mut mass = 0.0;
            let mut k = 0;
            while k < cap && mass < target {
                mass += eigenvalues[k];
                k += 1;
            }
            if trace_full == 0.0 {
                0
            } else {
                k
            }
        }
    };
    let root_n = math::sqrt(nf);
    let scores = eig.vectors[..kept]
        .iter()
        .map(|u| u.iter().map(|v| root_n * v).collect())
        .collect();
    Ok(SpectralModel {
        n,
        eigenvalues,
        scores,
        kept,
        trace_full,
    })
}

/// HAC bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bandwidth {
    /// `floor(n^{1/3})`, reduced to `n − 1` when necessary.
    #[default]
    Auto,
    Fixed(usize),
}

impl Bandwidth {
    pub fn resolve(self, n: usize) -> Result<usize> {
        match self {
            Bandwidth::Auto => {
                let b = math::floor(math::cbrt(n as f64)) as usize;
                Ok(b.min(n.saturating_sub(1)))
            }
            Bandwidth::Fixed(b) if b >= n => Err(domain(format!(
                "bandwidth {b} must be smaller than n = {n}"
            ))),
            Bandwidth::Fixed(b) => Ok(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HacKernel {
    Bartlett,
}

/// Estimate of `Cov(ζᵢ, ζⱼ)` for the kept components.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRunCovariance {
    pub dim: usize,
    /// Row-major `dim × dim`, symmetric PSD.
    pub sigma: Vec<f64>,
    pub bandwidth: usize,
    pub kernel: HacKernel,
}

impl LongRunCovariance {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.dim + j]
    }
}

/// `σᵢⱼ = Σ_{|d|≤b} (1 − |d|/(b+1)) (n−|d|)⁻¹ Σ_t sᵢ[t] sⱼ[t+d]`, projected
/// to the PSD cone.
pub fn long_run_covariance(
    model: &SpectralModel,
    bandwidth: Bandwidth,
) -> Result<LongRunCovariance> {
    let k = model.kept;
    if k == 0 {
        return Err(domain(
            "long-run covariance needs at least one kept component",
        ));
    }
    let n = model.n;
    let b = bandwidth.resolve(n)?;
    let mut sigma = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let (si, sj) = (&model.scores[i], &model.scores[j]);
            let mut acc = math::Compensated::default();
            acc.add(lagged_mean(si, sj, 0));
            for d in 1..=b {
                let w = 1.0 - d as f64 / (b as f64 + 1.0);
                acc.add(w * lagged_mean(si, sj, d));
                acc.add(w * lagged_mean(sj, si, d));
            }
            sigma[i * k + j] = acc.total();
        }
    }
    for i in 0..k {
        for j in 0..i {
            let m = 0.5 * (sigma[i * k + j] + sigma[j * k + i]);
            sigma[i * k + j] = m;
            sigma[j * k + i] = m;
        }
    }
    let eig = symmetric_eigen(k, &sigma);
    if eig.values.last().is_some_and(|v| *v < 0.0) {
        sigma = linalg::clip_to_psd(k, &eig);
    }
    Ok(LongRunCovariance {
        dim: k,
        sigma,
        bandwidth: b,
        kernel: HacKernel::Bartlett,
    })
}

/// `(n − d)⁻¹ Σ_t a[t] b[t + d]`.
fn lagged_mean(a: &[f64], b: &[f64], d: usize) -> f64 {
    let n = a.len();
    if d >= n {
        return 0.0;
    }
    let s = math::compensated_sum((0..n - d).map(|t| a[t] * b[t + d]));
    s / (n - d) as f64
}

/// Simulated draws of `Σ λₖ ζₖ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSample {
    pub draws: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

impl NullSample {
    pub fn mean(&self) -> f64 {
        math::mean(&self.draws)
    }
}

pub fn simulate_null<E: Executor>(
    model: &SpectralModel,
    lrc: &LongRunCovariance,
    reps: usize,
    seed: u64,
    exec: &E,
) -> Result<NullSample> {
    if lrc.dim != model.kept {
        return Err(domain(format!(
            "covariance has dimension {} but the model keeps {} components",
            lrc.dim, model.kept
        )));
    }
    simulate_quadratic_form(model.kept_eigenvalues(), &lrc.sigma, reps, seed, exec)
}

/// Draws of `Σ λₖ ζₖ²` with `ζ ~ N(0, sigma)`. Replication `r` uses the
/// stream `seed::derive(seed, STREAM_NULL, r)`.
pub fn simulate_quadratic_form<E: Executor>(
    lambdas: &[f64],
    sigma: &[f64],
    reps: usize,
    seed: u64,
    exec: &E,
) -> Result<NullSample> {
    let k = lambdas.len();
    if reps == 0 {
        return Err(domain("null simulation needs at least one replication"));
    }
    if sigma.len() != k * k {
        return Err(domain(format!("sigma must be {k}x{k}")));
    }
    if lambdas.iter().any(|l| *l < 0.0) {
        return Err(contract(
            "eigenvalues of the limiting form must be non-negative",
        ));
    }
    let eig = symmetric_eigen(k, sigma);
    let largest = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if eig
        .values
        .last()
        .is_some_and(|v| *v < -NEGATIVE_EIGEN_TOLERANCE * largest.max(f64::MIN_POSITIVE))
    {
        return Err(contract(
            "sigma is not positive semi-definite; project it first",
        ));
    }
    // Symmetric factor L = V diag(√max(w, 0)), so ζ = L g.
    let mut factor = vec![0.0; k * k];
    for (c, (w, v)) in eig.values.iter().zip(&eig.vectors).enumerate() {
        let r = math::sqrt(w.max(0.0));
        for row in 0..k {
            factor[row * k + c] = v[row] * r;
        }
    }
    let draws = exec.map(reps, |r| {
        let mut rng = seed::stream(seed, seed::STREAM_NULL, r as u64);
        let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut total = 0.0;
        for (row, lambda) in lambdas.iter().enumerate() {
            let zeta: f64 = (0..k).map(|c| factor[row * k + c] * g[c]).sum();
            total += lambda * zeta * zeta;
        }
        total
    });
    Ok(NullSample { draws, reps, seed })
}

/// Trace identity `D(μₙ) D(νₙ) ≈ Σ λₖ` for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceReport {
    /// `n⁻¹ Σᵢ A[i][i] B[i][i]`, the trace of `n⁻¹ Δ`.
    pub trace: f64,
    /// Sum of all eigenvalues of `n⁻¹ Δ` (no clipping, no truncation).
    pub eigen_sum: f64,
    /// `D(μₙ) D(νₙ)`.
    pub product: f64,
    pub gap: f64,
}

pub fn trace_identity_check(sample: &PairedSample) -> Result<TraceReport> {
    let parts = dcov_parts(sample)?;
    let n = sample.len();
    let nf = n as f64;
    let trace = math::compensated_sum(
        parts
            .a
            .diagonal()
            .zip(parts.b.diagonal())
            .map(|(a, b)| a * b),
    ) / nf;
    let scaled: Vec<f64> = parts.delta.values().iter().map(|v| v / nf).collect();
    let eigen_sum = math::compensated_sum(linalg::eigenvalues(n, &scaled));
    let product = parts.estimate.d_mu * parts.estimate.d_nu;
    Ok(TraceReport {
        trace,
        eigen_sum,
        product,
        gap: (trace - product).abs(),
    })
}
