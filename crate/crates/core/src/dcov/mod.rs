//! Empirical distance covariance.
//!
//! For a paired sample `(xᵢ, yᵢ)` the estimator is the V-statistic
//!
//! ```text
//! A[i][j] = d(xᵢ, xⱼ) − a(xᵢ) − a(xⱼ) + D          (double centering)
//! Δ[i][j] = A[i][j] · B[i][j]                       (Schur product)
//! dcov    = n⁻² Σᵢⱼ Δ[i][j]
//! ```
//!
//! where `a` are row means and `D` the grand mean of the distance matrix.
//!
//! Summation: row means, grand means and `ΣΔ` use [`math::ordered_sum`],
//! which depends only on the multiset of summands. Consequently a joint
//! permutation of the sample, or a relabelling of discrete symbols, leaves
//! every cached mean and the estimate bit-for-bit unchanged, and
//! `dcov == n⁻² · DeltaMatrix::sum()` holds exactly.

mod oracle;

pub use oracle::{
    brute_force_dcov, brute_force_dcov_capped, hoeffding_component, hoeffding_component_capped,
    kernel_f, kernel_h, vstat, vstat_capped, BRUTE_FORCE_MAX_N, HOEFFDING_MAX_ATOMS,
    HOEFFDING_MAX_EVALUATIONS, VSTAT_MAX_EVALUATIONS,
};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::math;
use crate::metric::{Point, Space};

/// Ordered paired observations `(xᵢ, yᵢ)` with their spaces; the empirical
/// measure `θₙ`.
#[derive(Debug, Clone)]
pub struct PairedSample {
    xs: Vec<Point>,
    ys: Vec<Point>,
    space_x: Space,
    space_y: Space,
}

impl PairedSample {
    pub fn new(xs: Vec<Point>, ys: Vec<Point>, space_x: Space, space_y: Space) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(domain(format!(
                "paired sample needs equally many x and y points ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        if xs.is_empty() {
            return Err(domain(
                "paired sample must contain at least one observation",
            ));
        }
        for p in &xs {
            space_x.check_point(p)?;
        }
        for p in &ys {
            space_y.check_point(p)?;
        }
        Ok(PairedSample {
            xs,
            ys,
            space_x,
            space_y,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[Point] {
        &self.xs
    }

    pub fn ys(&self) -> &[Point] {
        &self.ys
    }

    pub fn space_x(&self) -> &Space {
        &self.space_x
    }

    pub fn space_y(&self) -> &Space {
        &self.space_y
    }

    /// Same points, new spaces (for instance a different β).
    pub fn with_spaces(&self, space_x: Space, space_y: Space) -> Result<Self> {
        PairedSample::new(self.xs.clone(), self.ys.clone(), space_x, space_y)
    }

    /// Observations reordered as `order[0], order[1], …` (pairs kept intact).
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        self.reindexed(order, order)
    }

    /// `xs` taken at `x_index` and `ys` at `y_index`.
    pub fn reindexed(&self, x_index: &[usize], y_index: &[usize]) -> Result<Self> {
        let n = self.len();
        if x_index.iter().chain(y_index).any(|&i| i >= n) {
            return Err(domain("resampling index out of range"));
        }
        PairedSample::new(
            x_index.iter().map(|&i| self.xs[i].clone()).collect(),
            y_index.iter().map(|&i| self.ys[i].clone()).collect(),
            self.space_x.clone(),
            self.space_y.clone(),
        )
    }
}

/// Symmetric matrix stored row-major.
macro_rules! square_matrix_accessors {
    ($t:ty) => {
        impl $t {
            pub fn n(&self) -> usize {
                self.n
            }

            #[inline]
            pub fn get(&self, i: usize, j: usize) -> f64 {
                self.values[i * self.n + j]
            }

            pub fn row(&self, i: usize) -> &[f64] {
                &self.values[i * self.n..(i + 1) * self.n]
            }

            /// Row-major entries.
            pub fn values(&self) -> &[f64] {
                &self.values
            }
        }
    };
}

/// Pairwise distances `d(pᵢ, pⱼ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

square_matrix_accessors!(DistanceMatrix);

impl DistanceMatrix {
    /// Builds a matrix from row-major values. Symmetry is required.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(domain(format!(
                "expected a non-empty {n}x{n} matrix, got {} values",
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if values[i * n + j] != values[j * n + i] {
                    return Err(domain(format!(
                        "distance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { n, values })
    }

    /// The matrix of `(pᵢ, pⱼ) ↦ d(p_{index[i]}, p_{index[j]})`.
    pub fn reindexed(&self, index: &[usize]) -> DistanceMatrix {
        let m = index.len();
        let mut values = Vec::with_capacity(m * m);
        for &i in index {
            let row = self.row(i);
            values.extend(index.iter().map(|&j| row[j]));
        }
        DistanceMatrix { n: m, values }
    }
}

/// `d(pᵢ, pⱼ)` for all pairs, evaluated once per unordered pair.
pub fn distance_matrix(points: &[Point], space: &Space) -> Result<DistanceMatrix> {
    if points.is_empty() {
        return Err(domain("distance matrix of an empty point list"));
    }
    for p in points {
        space.check_point(p)?;
    }
    let n = points.len();
    let mut values = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = space.distance_unchecked(&points[i], &points[j]);
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
        values[i * n + i] = space.distance_unchecked(&points[i], &points[i]);
    }
    Ok(DistanceMatrix { n, values })
}

/// Doubly centred distances `d_μ(xᵢ, xⱼ)` under the empirical measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMatrix {
    n: usize,
    values: Vec<f64>,
    row_means: Vec<f64>,
    grand_mean: f64,
}

square_matrix_accessors!(CenteredMatrix);

impl CenteredMatrix {
    /// `a_μ(xᵢ)`.
    pub fn row_means(&self) -> &[f64] {
        &self.row_means
    }

    /// `D(μₙ)`.
    pub fn grand_mean(&self) -> f64 {
        self.grand_mean
    }

    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.get(i, i))
    }
}

pub fn double_center(d: &DistanceMatrix) -> CenteredMatrix {
    let n = d.n;
    let nf = n as f64;
    let mut scratch = Vec::with_capacity(n);
    let row_means: Vec<f64> = (0..n)
        .map(|i| math::ordered_sum_of(d.row(i), &mut scratch) / nf)
        .collect();
    let grand_mean = math::ordered_sum_of(&row_means, &mut scratch) / nf;
    let values = center_with(d, &row_means, grand_mean);
    CenteredMatrix {
        n,
        values,
        row_means,
        grand_mean,
    }
}

fn center_with(d: &DistanceMatrix, row_means: &[f64], grand_mean: f64) -> Vec<f64> {
    let n = d.n;
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        let row = d.row(i);
        for j in 0..n {
            values.push(row[j] - (row_means[i] + row_means[j]) + grand_mean);
        }
    }
    values
}

/// `δ_θₙ(zᵢ, zⱼ) = d_μ(xᵢ, xⱼ) · d_ν(yᵢ, yⱼ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix {
    n: usize,
    values: Vec<f64>,
}

square_matrix_accessors!(DeltaMatrix);

impl DeltaMatrix {
    /// `Σᵢⱼ Δ[i][j]`, order-independent.
    pub fn sum(&self) -> f64 {
        let mut scratch = self.values.clone();
        math::ordered_sum(&mut scratch)
    }

    pub fn trace(&self) -> f64 {
        math::compensated_sum((0..self.n).map(|i| self.get(i, i)))
    }
}

pub fn delta_matrix(a: &CenteredMatrix, b: &CenteredMatrix) -> Result<DeltaMatrix> {
    if a.n != b.n {
        return Err(domain(format!(
            "delta matrix of {}x{} and {}x{} centred matrices",
            a.n, a.n, b.n, b.n
        )));
    }
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
    Ok(DeltaMatrix { n: a.n, values })
}

/// The estimate `dcov(θₙ)` with the marginal scale factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcovEstimate {
    pub n: usize,
    pub dcov: f64,
    /// `D(μₙ)`.
    pub d_mu: f64,
    /// `D(νₙ)`.
    pub d_nu: f64,
    /// `dcov / (D(μₙ) D(νₙ))`; `None` when a marginal is a single atom.
    pub normalized: Option<f64>,
}

impl DcovEstimate {
    /// `n · dcov / (D(μₙ) D(νₙ))`, the statistic whose limit has unit mean
    /// under independence of iid observations.
    pub fn q_statistic(&self) -> Option<f64> {
        self.normalized.map(|r| self.n as f64 * r)
    }

    /// `n · dcov(θₙ)`.
    pub fn statistic(&self) -> f64 {
        self.n as f64 * self.dcov
    }
}

/// All intermediate matrices of one estimate.
#[derive(Debug, Clone)]
pub struct DcovParts {
    pub a: CenteredMatrix,
    pub b: CenteredMatrix,
    pub delta: DeltaMatrix,
    pub estimate: DcovEstimate,
}

pub fn dcov(sample: &PairedSample) -> Result<DcovEstimate> {
    Ok(dcov_parts(sample)?.estimate)
}

pub fn dcov_parts(sample: &PairedSample) -> Result<DcovParts> {
    let a = double_center(&distance_matrix(sample.xs(), sample.space_x())?);
    let b = double_center(&distance_matrix(sample.ys(), sample.space_y())?);
    let delta = delta_matrix(&a, &b)?;
    let estimate = estimate_from(&a, &b, &delta);
    Ok(DcovParts {
        a,
        b,
        delta,
        estimate,
    })
}

/// Estimate from precomputed centred matrices.
pub fn dcov_from_centered(a: &CenteredMatrix, b: &CenteredMatrix) -> Result<DcovEstimate> {
    let delta = delta_matrix(a, b)?;
    Ok(estimate_from(a, b, &delta))
}

fn estimate_from(a: &CenteredMatrix, b: &CenteredMatrix, delta: &DeltaMatrix) -> DcovEstimate {
    let n = a.n;
    let nf = n as f64;
    let dcov = delta.sum() / (nf * nf);
    let (d_mu, d_nu) = (a.grand_mean, b.grand_mean);
    let normalized = (d_mu > 0.0 && d_nu > 0.0).then(|| dcov / (d_mu * d_nu));
    DcovEstimate {
        n,
        dcov,
        d_mu,
        d_nu,
        normalized,
    }
}

/// `n⁻² Σᵢⱼ A[i][j] B[π(i)][π(j)]` with compensated row-major summation.
pub(crate) fn permuted_schur_mean(a: &CenteredMatrix, b: &CenteredMatrix, perm: &[usize]) -> f64 {
    let n = a.n;
    let mut acc = math::Compensated::default();
    for i in 0..n {
        let arow = a.row(i);
        let brow = b.row(perm[i]);
        let mut row = 0.0;
        for j in 0..n {
            row += arow[j] * brow[perm[j]];
        }
        acc.add(row);
    }
    acc.total() / (n as f64 * n as f64)
}

/// `dcov` of the sample `(x_{ix[t]}, y_{iy[t]})`, read straight from the
/// original distance matrices without forming the resampled ones. Uses
///
/// ```text
/// Σ (H Dx H)∘(H Dy H) = Σ Dx∘Dy − (2/n) Σᵢ rxᵢ ryᵢ + n⁻² (Σ Dx)(Σ Dy)
/// ```
///
/// where `r` are row sums of the resampled matrices and `H` is the
/// centering projection.
pub(crate) fn resampled_dcov(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    ix: &[usize],
    iy: &[usize],
) -> f64 {
    let n = ix.len();
    let nf = n as f64;
    let mut cross = math::Compensated::default();
    let mut row_products = math::Compensated::default();
    let mut total_x = math::Compensated::default();
    let mut total_y = math::Compensated::default();
    for i in 0..n {
        let xrow = dx.row(ix[i]);
        let yrow = dy.row(iy[i]);
        let (mut c, mut rx, mut ry) = (0.0, 0.0, 0.0);
        for j in 0..n {
            let (u, v) = (xrow[ix[j]], yrow[iy[j]]);
            c += u * v;
            rx += u;
            ry += v;
        }
        cross.add(c);
        row_products.add(rx * ry);
        total_x.add(rx);
        total_y.add(ry);
    }
    let sum = cross.total() - 2.0 * row_products.total() / nf
        + total_x.total() * total_y.total() / (nf * nf);
    sum / (nf * nf)
}
