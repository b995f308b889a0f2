//! Replication scheduling.
//!
//! Monte-Carlo loops are written as `job(index)` closures and handed to an
//! [`Executor`]. Implementations may run jobs in any order or in parallel but
//! must return results ordered by index; together with per-index seeds this
//! makes every result independent of the worker count.

use alloc::vec::Vec;

pub trait Executor {
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(job).collect()
    }
}
