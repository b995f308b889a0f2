//! Distance covariance on metric and power-pseudometric spaces.
//!
//! The crate computes the V-statistic estimate of distance covariance for
//! paired samples drawn from arbitrary separable (pseudo)metric spaces and
//! ships the machinery needed to calibrate it when observations are serially
//! dependent:
//!
//! - [`metric`]: spaces, points, the `d^β` power transform and exact
//!   finite-dimensional embeddings of discrete spaces.
//! - [`dcov`]: distance matrices, double centering, the δ-matrix, the
//!   estimator, and brute-force oracles (six-argument kernel, Hoeffding
//!   projections, generic V-statistics).
//! - [`spectrum`]: Nyström eigen-model of the δ operator, Bartlett long-run
//!   covariance of eigenfunction scores and Monte-Carlo draws of the limiting
//!   quadratic form `Σ λₖ ζₖ²`.
//! - [`processes`]: seeded stationary generators and exact β-mixing
//!   coefficients of finite-state Markov chains.
//! - [`inference`]: spectral, block-bootstrap and permutation independence
//!   tests.
//!
//! The crate is `no_std` (with `alloc`); IO, configuration and the command
//! line front end live in the `dcov-tools` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod dcov;
pub mod error;
pub mod exec;
pub mod inference;
pub mod joint;
pub mod math;
pub mod metric;
pub mod processes;
pub mod seed;
pub mod spectrum;

pub mod linalg;

pub use dcov::{
    dcov, delta_matrix, distance_matrix, double_center, CenteredMatrix, DcovEstimate, DeltaMatrix,
    DistanceMatrix, PairedSample,
};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use joint::DiscreteJointDistribution;
pub use metric::{Point, Space, SpaceKind};
