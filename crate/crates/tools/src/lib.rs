//! IO, configuration, experiments and the command line front end for
//! [`dcov_core`].

pub mod cli;
pub mod config;
pub mod experiments;
pub mod io;
pub mod parallel;
pub mod report;

pub use config::Config;
pub use parallel::RayonExecutor;
