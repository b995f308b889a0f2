//! Exhaustive reference computations.
//!
//! These evaluate distance covariance through the six-argument kernel
//!
//! ```text
//! f(x₁, x₂, x₃, x₄) = d(x₁, x₂) − d(x₁, x₃) − d(x₂, x₄) + d(x₃, x₄)
//! h(z₁, …, z₆)      = f(x₁, x₂, x₃, x₄) · f(y₁, y₂, y₅, y₆)
//! ```
//!
//! instead of double centering. Summing `h` over all `n⁶` index tuples
//! already averages over every argument order, so the symmetrised kernel is
//! never formed for V-statistics. Hoeffding projections do need the
//! symmetrisation and get it by averaging over argument placements.

use alloc::vec;
use alloc::vec::Vec;

use super::{distance_matrix, DistanceMatrix, PairedSample};
use crate::error::{domain, Error, Result};
use crate::joint::DiscreteJointDistribution;
use crate::math::Compensated;
use crate::metric::{Point, Space};

/// Largest sample accepted by [`brute_force_dcov`].
pub const BRUTE_FORCE_MAX_N: usize = 8;
/// Largest number of distinct points per marginal accepted by
/// [`hoeffding_component`].
pub const HOEFFDING_MAX_ATOMS: usize = 6;
/// Kernel evaluation budget of [`hoeffding_component`].
pub const HOEFFDING_MAX_EVALUATIONS: u128 = 200_000_000;
/// Kernel evaluation budget of [`vstat`].
pub const VSTAT_MAX_EVALUATIONS: u128 = 100_000_000;

/// `f(x₁, x₂, x₃, x₄)` on points of `space`.
pub fn kernel_f(space: &Space, x: [&Point; 4]) -> Result<f64> {
    Ok(
        space.distance(x[0], x[1])? - space.distance(x[0], x[2])? - space.distance(x[1], x[3])?
            + space.distance(x[2], x[3])?,
    )
}

/// `h(z₁, …, z₆) = f(x₁, x₂, x₃, x₄) f(y₁, y₂, y₅, y₆)`.
pub fn kernel_h(space_x: &Space, space_y: &Space, z: [(&Point, &Point); 6]) -> Result<f64> {
    let fx = kernel_f(space_x, [z[0].0, z[1].0, z[2].0, z[3].0])?;
    let fy = kernel_f(space_y, [z[0].1, z[1].1, z[4].1, z[5].1])?;
    Ok(fx * fy)
}

#[inline]
fn f_indexed(d: &DistanceMatrix, a: usize, b: usize, c: usize, e: usize) -> f64 {
    d.get(a, b) - d.get(a, c) - d.get(b, e) + d.get(c, e)
}

#[inline]
fn h_indexed(dx: &DistanceMatrix, dy: &DistanceMatrix, s: &[usize; 6]) -> f64 {
    f_indexed(dx, s[0], s[1], s[2], s[3]) * f_indexed(dy, s[0], s[1], s[4], s[5])
}

/// `n⁻⁶ Σ h(Z_{i₁}, …, Z_{i₆})` over all index tuples, with `n ≤ 8`.
pub fn brute_force_dcov(sample: &PairedSample) -> Result<f64> {
    brute_force_dcov_capped(sample, BRUTE_FORCE_MAX_N)
}

pub fn brute_force_dcov_capped(sample: &PairedSample, max_n: usize) -> Result<f64> {
    let n = sample.len();
    if n > max_n {
        return Err(Error::CostCap {
            what: "brute-force dcov (cost n^6)",
            cost: (n as u128).pow(6),
            cap: (max_n as u128).pow(6),
        });
    }
    let dx = distance_matrix(sample.xs(), sample.space_x())?;
    let dy = distance_matrix(sample.ys(), sample.space_y())?;
    let mut acc = Compensated::default();
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                for i4 in 0..n {
                    for i5 in 0..n {
                        for i6 in 0..n {
                            acc.add(h_indexed(&dx, &dy, &[i1, i2, i3, i4, i5, i6]));
                        }
                    }
                }
            }
        }
    }
    Ok(acc.total() / crate::math::powf(n as f64, 6.0))
}

/// V-statistic `n^{-c} Σ kernel(i₁, …, i_c)` of order `c = order` over all
/// index tuples of `sample`. The kernel receives indices into the sample.
pub fn vstat<F>(sample: &PairedSample, order: usize, kernel: F) -> Result<f64>
where
    F: FnMut(&[usize]) -> f64,
{
    vstat_capped(sample, order, kernel, VSTAT_MAX_EVALUATIONS)
}

pub fn vstat_capped<F>(sample: &PairedSample, order: usize, mut kernel: F, cap: u128) -> Result<f64>
where
    F: FnMut(&[usize]) -> f64,
{
    let n = sample.len();
    let cost = checked_pow(n as u128, order).unwrap_or(u128::MAX);
    if cost > cap {
        return Err(Error::CostCap {
            what: "V-statistic (cost n^c)",
            cost,
            cap,
        });
    }
    let mut index = vec![0usize; order];
    let mut acc = Compensated::default();
    loop {
        acc.add(kernel(&index));
        // Odometer increment, last position fastest.
        let mut pos = order;
        loop {
            if pos == 0 {
                return Ok(acc.total() / cost as f64);
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < n {
                break;
            }
            index[pos] = 0;
        }
    }
}

fn checked_pow(base: u128, exp: usize) -> Option<u128> {
    (0..exp).try_fold(1u128, |acc, _| acc.checked_mul(base))
}

/// Number of ordered placements of `k` arguments into six slots.
fn placements(k: usize) -> u128 {
    (0..k).map(|i| (6 - i) as u128).product()
}

/// Exact Hoeffding component `h̄_c(z₁, …, z_c)` of the symmetrised kernel
/// under a finitely supported `θ`:
///
/// ```text
/// g_k(z₁, …, z_k) = ∫ h̄(z₁, …, z_k, Z_{k+1}, …, Z₆) dθ^{6−k}
/// h̄_c(z₁, …, z_c) = Σ_{A ⊆ {1..c}} (−1)^{c−|A|} g_{|A|}(z_A)
/// ```
///
/// Each `g_k` is evaluated by exhaustive weighted summation over the support
/// for every placement of the fixed arguments among the six kernel slots.
pub fn hoeffding_component(
    c: usize,
    theta: &DiscreteJointDistribution,
    args: &[(Point, Point)],
) -> Result<f64> {
    hoeffding_component_capped(c, theta, args, HOEFFDING_MAX_EVALUATIONS)
}

pub fn hoeffding_component_capped(
    c: usize,
    theta: &DiscreteJointDistribution,
    args: &[(Point, Point)],
    cap: u128,
) -> Result<f64> {
    if c > 6 {
        return Err(domain("Hoeffding components exist for c = 0..=6"));
    }
    if args.len() != c {
        return Err(domain(alloc::format!(
            "component {c} takes {c} arguments, got {}",
            args.len()
        )));
    }
    let (mx, my) = (theta.marginal_x().len(), theta.marginal_y().len());
    if mx > HOEFFDING_MAX_ATOMS || my > HOEFFDING_MAX_ATOMS {
        return Err(domain(alloc::format!(
            "Hoeffding oracle supports at most {HOEFFDING_MAX_ATOMS} atoms per marginal (got {mx} and {my})"
        )));
    }
    let s = theta.atoms().len();
    let cost: u128 = (0..=c)
        .map(|k| binomial(c, k) * placements(k) * (s as u128).pow((6 - k) as u32))
        .sum();
    if cost > cap {
        return Err(Error::CostCap {
            what: "Hoeffding component (cost ~ |support|^6)",
            cost,
            cap,
        });
    }

    // Support points first, then the fixed arguments.
    let mut xs: Vec<Point> = theta.atoms().iter().map(|a| a.x.clone()).collect();
    let mut ys: Vec<Point> = theta.atoms().iter().map(|a| a.y.clone()).collect();
    xs.extend(args.iter().map(|a| a.0.clone()));
    ys.extend(args.iter().map(|a| a.1.clone()));
    let dx = distance_matrix(&xs, theta.space_x())?;
    let dy = distance_matrix(&ys, theta.space_y())?;
    let weights: Vec<f64> = theta.atoms().iter().map(|a| a.weight).collect();
    let integrator = Integrator {
        dx: &dx,
        dy: &dy,
        weights: &weights,
    };

    let mut acc = Compensated::default();
    for mask in 0u32..(1 << c) {
        let fixed: Vec<usize> = (0..c)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| s + i)
            .collect();
        let sign = if (c - fixed.len()) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        acc.add(sign * integrator.projection(&fixed));
    }
    Ok(acc.total())
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

struct Integrator<'a> {
    dx: &'a DistanceMatrix,
    dy: &'a DistanceMatrix,
    weights: &'a [f64],
}

impl Integrator<'_> {
    /// `g_k` at the given fixed point indices.
    fn projection(&self, fixed: &[usize]) -> f64 {
        let mut slots = [usize::MAX; 6];
        let mut acc = Compensated::default();
        let mut count = 0u64;
        self.place(fixed, 0, &mut slots, &mut acc, &mut count);
        acc.total() / count as f64
    }

    fn place(
        &self,
        fixed: &[usize],
        next: usize,
        slots: &mut [usize; 6],
        acc: &mut Compensated,
        count: &mut u64,
    ) {
        if next == fixed.len() {
            let free: Vec<usize> = (0..6).filter(|&i| slots[i] == usize::MAX).collect();
            acc.add(self.integrate(slots, &free, 0, 1.0));
            for &i in &free {
                slots[i] = usize::MAX;
            }
            *count += 1;
            return;
        }
        for slot in 0..6 {
            if slots[slot] == usize::MAX {
                slots[slot] = fixed[next];
                self.place(fixed, next + 1, slots, acc, count);
                slots[slot] = usize::MAX;
            }
        }
    }

    fn integrate(&self, slots: &mut [usize; 6], free: &[usize], depth: usize, weight: f64) -> f64 {
        if depth == free.len() {
            return weight * h_indexed(self.dx, self.dy, slots);
        }
        let mut acc = Compensated::default();
        for (atom, w) in self.weights.iter().enumerate() {
            slots[free[depth]] = atom;
            acc.add(self.integrate(slots, free, depth + 1, weight * w));
        }
        acc.total()
    }
}
