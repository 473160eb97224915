//! Sequential optimizers for `min (1/n) sum_i f_i(x)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::point::Point;

mod gd;
mod sarah;
mod zerosarah;

pub use gd::Gd;
pub use sarah::Sarah;
pub use zerosarah::{zerosarah_estimate, Estimate, OptimizerState, ZeroSarah};

/// Stochastic-gradient accounting.
///
/// `paper_count` follows the `sum_k b_k` convention. `actual_count` is the
/// number of component-gradient evaluations really performed: a fresh
/// minibatch is probed at both `x^k` and `x^{k-1}`, so it is `2 b_k` for a
/// typical step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GradCounter {
    pub paper_count: u64,
    pub actual_count: u64,
    pub full_batch_events: u64,
}

impl GradCounter {
    pub(crate) fn record(&mut self, paper: u64, actual: u64, full_batch: bool) {
        self.paper_count += paper;
        self.actual_count += actual;
        self.full_batch_events += u64::from(full_batch);
    }
}

/// What one iteration (or federated round) did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Index `k` of the iteration that just ran.
    pub iteration: u64,
    pub eta: f64,
    pub batch: usize,
    pub lambda: Option<f64>,
    pub paper_evals: u64,
    pub actual_evals: u64,
    /// `b_k = n`, a SARAH full-gradient step, or a full-participation round.
    pub full_batch: bool,
    /// Client ids contacted this round (federated runs only).
    pub sampled_clients: Option<Vec<usize>>,
}

/// Common driver interface for the harness.
pub trait Optimizer {
    fn step(&mut self) -> Result<StepReport>;

    fn iterate(&self) -> &Point;

    fn counters(&self) -> GradCounter;

    /// Number of completed iterations.
    fn iteration(&self) -> u64;

    /// `paper_count` increment the next `step` will record.
    fn next_paper_evals(&self) -> u64;
}

/// Maps evaluation failures inside an update to a divergence at `iteration`.
pub(crate) fn as_divergence(err: Error, iteration: u64) -> Error {
    match err {
        Error::NumericalOverflow(_) => Error::Divergence { iteration },
        other => other,
    }
}

pub(crate) fn finite_or_diverged(p: &Point, iteration: u64) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { iteration })
    }
}
