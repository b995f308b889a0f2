//! Finitely supported joint laws `θ` on `𝒳 × 𝒴`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::metric::{Point, Space};

/// One support point of a joint law.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: Point,
    pub y: Point,
    pub weight: f64,
}

/// A probability measure with finite support on `𝒳 × 𝒴`.
#[derive(Debug, Clone)]
pub struct DiscreteJointDistribution {
    atoms: Vec<Atom>,
    space_x: Space,
    space_y: Space,
}

const WEIGHT_TOLERANCE: f64 = 1e-12;

impl DiscreteJointDistribution {
    /// Weights must be non-negative and sum to one within `1e−12`. Atoms with
    /// zero weight are dropped; repeated atoms are merged.
    pub fn new(atoms: Vec<Atom>, space_x: Space, space_y: Space) -> Result<Self> {
        let mut total = 0.0;
        for a in &atoms {
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(domain(format!(
                    "atom weight {} is not a probability",
                    a.weight
                )));
            }
            space_x.check_point(&a.x)?;
            space_y.check_point(&a.y)?;
            total += a.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(domain(format!("atom weights sum to {total}, not 1")));
        }
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms.into_iter().filter(|a| a.weight > 0.0) {
            match merged.iter_mut().find(|m| m.x == a.x && m.y == a.y) {
                Some(m) => m.weight += a.weight,
                None => merged.push(a),
            }
        }
        if merged.is_empty() {
            return Err(domain("joint law has no atom with positive weight"));
        }
        Ok(DiscreteJointDistribution {
            atoms: merged,
            space_x,
            space_y,
        })
    }

    /// The product law `μ ⊗ ν` of two marginals given as weighted points.
    pub fn product(
        mu: &[(Point, f64)],
        nu: &[(Point, f64)],
        space_x: Space,
        space_y: Space,
    ) -> Result<Self> {
        let mut atoms = Vec::with_capacity(mu.len() * nu.len());
        for (x, wx) in mu {
            for (y, wy) in nu {
                atoms.push(Atom {
                    x: x.clone(),
                    y: y.clone(),
                    weight: wx * wy,
                });
            }
        }
        DiscreteJointDistribution::new(atoms, space_x, space_y)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn space_x(&self) -> &Space {
        &self.space_x
    }

    pub fn space_y(&self) -> &Space {
        &self.space_y
    }

    /// `μ`, the law of `X`, as distinct weighted points in order of first
    /// appearance.
    pub fn marginal_x(&self) -> Vec<(Point, f64)> {
        marginal(self.atoms.iter().map(|a| (&a.x, a.weight)))
    }

    /// `ν`, the law of `Y`.
    pub fn marginal_y(&self) -> Vec<(Point, f64)> {
        marginal(self.atoms.iter().map(|a| (&a.y, a.weight)))
    }

    /// Whether `θ = μ ⊗ ν` within `tol` on every cell of the product support.
    pub fn is_product(&self, tol: f64) -> bool {
        let (mu, nu) = (self.marginal_x(), self.marginal_y());
        mu.iter().all(|(x, wx)| {
            nu.iter().all(|(y, wy)| {
                let w: f64 = self
                    .atoms
                    .iter()
                    .filter(|a| &a.x == x && &a.y == y)
                    .map(|a| a.weight)
                    .sum();
                (w - wx * wy).abs() <= tol
            })
        })
    }

    /// `a_μ(x) = ∫ d(x, x') dμ(x')`.
    pub fn mean_distance_x(&self, x: &Point) -> Result<f64> {
        self.space_x.check_point(x)?;
        Ok(self
            .atoms
            .iter()
            .map(|a| a.weight * self.space_x.distance_unchecked(x, &a.x))
            .sum())
    }

    /// `a_ν(y)`.
    pub fn mean_distance_y(&self, y: &Point) -> Result<f64> {
        self.space_y.check_point(y)?;
        Ok(self
            .atoms
            .iter()
            .map(|a| a.weight * self.space_y.distance_unchecked(y, &a.y))
            .sum())
    }

    /// `D(μ)`.
    pub fn grand_mean_x(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * self.mean_distance_x(&a.x).expect("atoms are valid"))
            .sum()
    }

    /// `D(ν)`.
    pub fn grand_mean_y(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * self.mean_distance_y(&a.y).expect("atoms are valid"))
            .sum()
    }

    /// `δ_θ(z, z') = d_μ(x, x') d_ν(y, y')` under this law.
    pub fn delta(&self, z: (&Point, &Point), z2: (&Point, &Point)) -> Result<f64> {
        let dmu = self.space_x.distance(z.0, z2.0)?
            - self.mean_distance_x(z.0)?
            - self.mean_distance_x(z2.0)?
            + self.grand_mean_x();
        let dnu = self.space_y.distance(z.1, z2.1)?
            - self.mean_distance_y(z.1)?
            - self.mean_distance_y(z2.1)?
            + self.grand_mean_y();
        Ok(dmu * dnu)
    }
}

fn marginal<'a>(points: impl Iterator<Item = (&'a Point, f64)>) -> Vec<(Point, f64)> {
    let mut out: Vec<(Point, f64)> = Vec::new();
    for (p, w) in points {
        match out.iter_mut().find(|(q, _)| q == p) {
            Some((_, acc)) => *acc += w,
            None => out.push((p.clone(), w)),
        }
    }
    out
}
