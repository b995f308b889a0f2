//! Metric and β-pseudometric spaces.
//!
//! A [`Space`] pairs a base metric with an exponent `β ∈ (0, 2]`; its
//! distance is `d(p, q)^β`. For `β ≤ 1` this is again a metric, for
//! `β ∈ (1, 2]` only the weak triangle inequality
//! `d^β(x, x') ≤ 2^(β−1) (d^β(x, x₀) + d^β(x₀, x'))` survives.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::any::Any;
use core::fmt;

use rand::Rng;

use crate::error::{contract, domain, Error, Result};
use crate::math;

/// Distance callback of a user-defined space. Must be pure, symmetric and
/// non-negative; [`validate_space`] samples these properties.
pub type DistanceFn = dyn Fn(&Point, &Point) -> f64 + Send + Sync;

/// An element of a space.
#[derive(Clone)]
pub enum Point {
    Real(Vec<f64>),
    Symbol(u32),
    Opaque(Arc<dyn Any + Send + Sync>),
}

impl Point {
    pub fn scalar(x: f64) -> Self {
        Point::Real(vec![x])
    }

    pub fn vector(v: impl Into<Vec<f64>>) -> Self {
        Point::Real(v.into())
    }

    pub fn symbol(s: u32) -> Self {
        Point::Symbol(s)
    }

    pub fn opaque<T: Any + Send + Sync>(value: T) -> Self {
        Point::Opaque(Arc::new(value))
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Point::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<u32> {
        match self {
            Point::Symbol(s) => Some(*s),
            _ => None,
        }
    }

    pub fn downcast_ref<T: Any>(&self) -> Option<&T> {
        match self {
            Point::Opaque(v) => v.downcast_ref(),
            _ => None,
        }
    }

    pub(crate) fn kind_name(&self) -> &'static str {
        match self {
            Point::Real(_) => "real vector",
            Point::Symbol(_) => "symbol",
            Point::Opaque(_) => "opaque value",
        }
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Point::Real(a), Point::Real(b)) => a == b,
            (Point::Symbol(a), Point::Symbol(b)) => a == b,
            (Point::Opaque(a), Point::Opaque(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Real(v) => f.debug_tuple("Real").field(v).finish(),
            Point::Symbol(s) => f.debug_tuple("Symbol").field(s).finish(),
            Point::Opaque(_) => f.write_str("Opaque(..)"),
        }
    }
}

/// The base metric of a space.
#[derive(Clone)]
pub enum SpaceKind {
    /// `ℝ^dim` with the Euclidean norm.
    Euclidean { dim: usize },
    /// Finite alphabet `{0, …, alphabet − 1}` with the discrete metric.
    Discrete { alphabet: u32 },
    /// Finitely supported elements of `ℓ²`: real vectors of length at most
    /// `dim`, implicitly padded with zeros.
    HilbertL2 { dim: usize },
    /// Caller-supplied distance. `negative_type` records whether the caller
    /// vouches that `distance` (raised to the space's β) is of negative type.
    UserDefined {
        name: String,
        distance: Arc<DistanceFn>,
        negative_type: bool,
    },
}

impl fmt::Debug for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceKind::Euclidean { dim } => write!(f, "Euclidean({dim})"),
            SpaceKind::Discrete { alphabet } => write!(f, "Discrete({alphabet})"),
            SpaceKind::HilbertL2 { dim } => write!(f, "HilbertL2({dim})"),
            SpaceKind::UserDefined {
                name,
                negative_type,
                ..
            } => write!(f, "UserDefined({name}, negative_type = {negative_type})"),
        }
    }
}

/// A separable metric space with the distance raised to `beta`.
///
/// Immutable after construction and cheap to clone.
#[derive(Clone, Debug)]
pub struct Space {
    id: String,
    kind: SpaceKind,
    beta: f64,
}

impl Space {
    pub fn new(id: impl Into<String>, kind: SpaceKind) -> Self {
        Space {
            id: id.into(),
            kind,
            beta: 1.0,
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        Space::new(format!("euclidean({dim})"), SpaceKind::Euclidean { dim })
    }

    pub fn discrete(alphabet: u32) -> Self {
        Space::new(
            format!("discrete({alphabet})"),
            SpaceKind::Discrete { alphabet },
        )
    }

    pub fn hilbert_l2(dim: usize) -> Self {
        Space::new(format!("hilbert_l2({dim})"), SpaceKind::HilbertL2 { dim })
    }

    /// A space whose base metric is `distance`. It is treated as not being of
    /// negative type unless [`Space::assume_negative_type`] is called.
    pub fn user_defined<F>(name: impl Into<String>, distance: F) -> Self
    where
        F: Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        Space::new(
            name.clone(),
            SpaceKind::UserDefined {
                name,
                distance: Arc::new(distance),
                negative_type: false,
            },
        )
    }

    /// Marks a user-defined space as being of negative type. No effect on
    /// built-in spaces.
    pub fn assume_negative_type(mut self) -> Self {
        if let SpaceKind::UserDefined { negative_type, .. } = &mut self.kind {
            *negative_type = true;
        }
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Raises the current distance to the power `beta`, i.e. the result has
    /// exponent `self.beta() * beta` relative to the base metric.
    pub fn with_beta(&self, beta: f64) -> Result<Space> {
        check_beta(beta)?;
        let combined = self.beta * beta;
        check_beta(combined)?;
        Ok(Space {
            id: self.id.clone(),
            kind: self.kind.clone(),
            beta: combined,
        })
    }

    /// Whether `d^β` is known to be of negative type: every built-in space
    /// with `β ≤ 2`, or a user-defined space marked by its owner.
    pub fn is_negative_type(&self) -> bool {
        match &self.kind {
            SpaceKind::UserDefined { negative_type, .. } => *negative_type,
            _ => self.beta <= 2.0,
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        let ok = match (&self.kind, p) {
            (SpaceKind::Euclidean { dim }, Point::Real(v)) => v.len() == *dim,
            (SpaceKind::HilbertL2 { dim }, Point::Real(v)) => v.len() <= *dim,
            (SpaceKind::Discrete { alphabet }, Point::Symbol(s)) => s < alphabet,
            (SpaceKind::UserDefined { .. }, _) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatiblePoint {
                space: self.id.to_string(),
                found: p.kind_name(),
            })
        }
    }

    /// `d(p, q)^β`.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.distance_unchecked(p, q))
    }

    /// [`Space::distance`] without payload checks. Incompatible payloads
    /// yield an unspecified value.
    pub(crate) fn distance_unchecked(&self, p: &Point, q: &Point) -> f64 {
        match (&self.kind, p, q) {
            (
                SpaceKind::Euclidean { .. } | SpaceKind::HilbertL2 { .. },
                Point::Real(a),
                Point::Real(b),
            ) => {
                let sq = squared_l2(a, b);
                if self.beta == 2.0 {
                    sq
                } else if self.beta == 1.0 {
                    math::sqrt(sq)
                } else {
                    math::powf(sq, 0.5 * self.beta)
                }
            }
            (SpaceKind::Discrete { .. }, Point::Symbol(a), Point::Symbol(b)) => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            (SpaceKind::UserDefined { distance, .. }, _, _) => {
                let d = distance(p, q);
                if self.beta == 1.0 {
                    d
                } else {
                    math::powf(d, self.beta)
                }
            }
            _ => f64::NAN,
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 2.0 {
        Ok(())
    } else {
        Err(domain(format!("beta must lie in (0, 2], got {beta}")))
    }
}

fn squared_l2(a: &[f64], b: &[f64]) -> f64 {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut s = 0.0;
    for (i, x) in long.iter().enumerate() {
        let y = short.get(i).copied().unwrap_or(0.0);
        let d = x - y;
        s += d * d;
    }
    s
}

/// Outcome of a triangle-inequality scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest `rhs − lhs` seen; negative means a violation.
    pub worst_slack: f64,
}

const TRIANGLE_SLACK: f64 = 1e-12;

/// Checks `d^β(x, x') ≤ 2^(β−1) (d^β(x, x₀) + d^β(x₀, x'))` for every
/// `(x, x', x₀)`. Only meaningful for `β ∈ [1, 2]`; use
/// [`check_triangle`] below that.
pub fn check_weak_triangle(
    space: &Space,
    triples: &[(Point, Point, Point)],
) -> Result<TriangleReport> {
    if space.beta() < 1.0 {
        return Err(contract(format!(
            "weak triangle inequality is checked for beta in [1, 2]; beta = {} satisfies the plain triangle inequality",
            space.beta()
        )));
    }
    let factor = math::powf(2.0, space.beta() - 1.0);
    scan_triangles(space, triples, factor)
}

/// Checks the plain triangle inequality `d(x, x') ≤ d(x, x₀) + d(x₀, x')`.
pub fn check_triangle(space: &Space, triples: &[(Point, Point, Point)]) -> Result<TriangleReport> {
    scan_triangles(space, triples, 1.0)
}

fn scan_triangles(
    space: &Space,
    triples: &[(Point, Point, Point)],
    factor: f64,
) -> Result<TriangleReport> {
    let mut report = TriangleReport {
        checked: 0,
        violations: 0,
        worst_slack: f64::INFINITY,
    };
    for (x, x1, x0) in triples {
        let lhs = space.distance(x, x1)?;
        let rhs = factor * (space.distance(x, x0)? + space.distance(x0, x1)?);
        let slack = rhs - lhs;
        if slack < -TRIANGLE_SLACK * rhs.max(1.0) {
            report.violations += 1;
        }
        report.worst_slack = report.worst_slack.min(slack);
        report.checked += 1;
    }
    Ok(report)
}

/// Sampled check of the metric axioms on a finite set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub pairs: usize,
    pub asymmetric: usize,
    pub negative: usize,
    pub nonzero_self: usize,
    pub triangle: TriangleReport,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.asymmetric == 0
            && self.negative == 0
            && self.nonzero_self == 0
            && self.triangle.violations == 0
    }
}

/// Samples `pairs` random pairs and `triples` random triples from `points`
/// and checks symmetry, non-negativity, `d(p, p) = 0` and the (weak, for
/// `β > 1`) triangle inequality.
pub fn validate_space<R: Rng + ?Sized>(
    space: &Space,
    points: &[Point],
    pairs: usize,
    triples: usize,
    rng: &mut R,
) -> Result<ValidationReport> {
    if points.is_empty() {
        return Err(domain("validation needs at least one point"));
    }
    for p in points {
        space.check_point(p)?;
    }
    let n = points.len();
    let mut report = ValidationReport {
        pairs,
        asymmetric: 0,
        negative: 0,
        nonzero_self: 0,
        triangle: TriangleReport {
            checked: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
        },
    };
    for p in points {
        if space.distance_unchecked(p, p) != 0.0 {
            report.nonzero_self += 1;
        }
    }
    for _ in 0..pairs {
        let p = &points[rng.random_range(0..n)];
        let q = &points[rng.random_range(0..n)];
        let a = space.distance_unchecked(p, q);
        let b = space.distance_unchecked(q, p);
        if (a - b).abs() > TRIANGLE_SLACK * a.abs().max(1.0) {
            report.asymmetric += 1;
        }
        if a < 0.0 || a.is_nan() {
            report.negative += 1;
        }
    }
    let sample: Vec<(Point, Point, Point)> = (0..triples)
        .map(|_| {
            (
                points[rng.random_range(0..n)].clone(),
                points[rng.random_range(0..n)].clone(),
                points[rng.random_range(0..n)].clone(),
            )
        })
        .collect();
    report.triangle = if space.beta() > 1.0 {
        check_weak_triangle(space, &sample)?
    } else {
        check_triangle(space, &sample)?
    };
    Ok(report)
}

/// Finite-dimensional map `φ` with `‖φ(p) − φ(q)‖² = d(p, q)`, optionally
/// centred at the Bochner mean of an empirical measure.
#[derive(Debug, Clone)]
pub struct Embedding {
    space: Space,
    dim: usize,
    center: Vec<f64>,
}

impl Embedding {
    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// `φ(p)`, uncentred.
    pub fn map(&self, p: &Point) -> Result<Vec<f64>> {
        self.space.check_point(p)?;
        let s = p.as_symbol().expect("discrete payload checked above") as usize;
        let mut v = vec![0.0; self.dim];
        v[s] = core::f64::consts::FRAC_1_SQRT_2;
        Ok(v)
    }

    /// `φ(p) − center`.
    pub fn centered(&self, p: &Point) -> Result<Vec<f64>> {
        let mut v = self.map(p)?;
        for (a, c) in v.iter_mut().zip(&self.center) {
            *a -= c;
        }
        Ok(v)
    }

    /// Same map, centred at the mean of `φ` over `points` (the empirical
    /// measure with equal weights).
    pub fn centered_against(&self, points: &[Point]) -> Result<Embedding> {
        if points.is_empty() {
            return Err(domain("cannot centre an embedding on an empty sample"));
        }
        let mut center = vec![0.0; self.dim];
        for p in points {
            for (c, v) in center.iter_mut().zip(self.map(p)?) {
                *c += v;
            }
        }
        let n = points.len() as f64;
        center.iter_mut().for_each(|c| *c /= n);
        Ok(Embedding {
            space: self.space.clone(),
            dim: self.dim,
            center,
        })
    }
}

/// Explicit embedding of the discrete metric on `m` symbols into `ℝ^m`,
/// `φ(i) = eᵢ / √2`.
pub fn discrete_embedding(space: &Space) -> Result<Embedding> {
    match space.kind() {
        SpaceKind::Discrete { alphabet } if space.beta() == 1.0 => Ok(Embedding {
            space: space.clone(),
            dim: *alphabet as usize,
            center: vec![0.0; *alphabet as usize],
        }),
        SpaceKind::Discrete { .. } => Err(Error::Unsupported(format!(
            "discrete embedding is materialized for beta = 1 only (got {})",
            space.beta()
        ))),
        other => Err(Error::Unsupported(format!(
            "embeddings are only materialized for discrete spaces, not {other:?}"
        ))),
    }
}
