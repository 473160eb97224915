use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::model::FiniteSum;
use crate::optim::{as_divergence, finite_or_diverged, GradCounter, Optimizer, StepReport};
use crate::point::Point;
use crate::sampling::{sample_without_replacement, SeedStream};
use crate::schedule::ParamSchedule;
use crate::table::GradientTable;

/// Mutable state of a ZeroSARAH run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// `x^k`
    pub x_curr: Point,
    /// `x^{k-1}`
    pub x_prev: Point,
    /// `v^{k-1}`
    pub v_prev: Point,
    /// `y_i^{k-1}` and their mean.
    pub table: GradientTable,
    /// Completed iterations.
    pub k: u64,
    pub counters: GradCounter,
}

impl OptimizerState {
    /// `x^{-1} = x^0`, `v^{-1} = 0`, `y^{-1} = 0`: no gradient is evaluated.
    pub fn initial(n: usize, x0: Point) -> Self {
        let dim = x0.dim();
        OptimizerState {
            x_prev: x0.clone(),
            x_curr: x0,
            v_prev: Point::zeros(dim),
            table: GradientTable::new(n, dim),
            k: 0,
            counters: GradCounter::default(),
        }
    }
}

/// Estimator value for one minibatch, plus the gradients `grad f_i(x^k)`
/// that refresh the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub v: Point,
    pub fresh: Vec<Point>,
    pub evaluations: u64,
}

/// ZeroSARAH estimator for minibatch `batch` at `state`, without mutating it:
///
/// `v = (1/b) sum_I (g_i(x^k) - g_i(x^{k-1})) + (1-lambda) v^{k-1}
///      + lambda ((1/b) sum_I (g_i(x^{k-1}) - y_i) + ybar)`.
///
/// For `lambda = 1` the `x^{k-1}` terms cancel and are not evaluated. When,
/// in addition, the batch is the full index set, the table terms cancel too
/// and `v` is computed as the exact mean gradient.
pub fn zerosarah_estimate<P: FiniteSum + ?Sized>(
    problem: &P,
    state: &OptimizerState,
    batch: &[usize],
    lambda: f64,
) -> Result<Estimate> {
    let n = problem.len();
    let dim = problem.dim();
    if batch.is_empty() {
        return Err(Error::invalid("empty minibatch"));
    }
    let inv_b = 1.0 / batch.len() as f64;
    let mut fresh = Vec::with_capacity(batch.len());
    for &i in batch {
        fresh.push(problem.component_gradient(i, &state.x_curr)?);
    }

    if lambda == 1.0 {
        let v = if batch.len() == n {
            let mut acc = Point::zeros(dim);
            fresh.iter().for_each(|g| acc.add_assign(g));
            acc.scale(inv_b);
            acc
        } else {
            let mut acc = Point::zeros(dim);
            for (g, &i) in fresh.iter().zip(batch) {
                for ((a, gv), yv) in acc.as_mut_slice().iter_mut().zip(g.as_slice()).zip(state.table.entry(i)) {
                    *a += gv - yv;
                }
            }
            acc.scale(inv_b);
            acc.add_assign(state.table.mean());
            acc
        };
        let evaluations = batch.len() as u64;
        return Ok(Estimate { v, fresh, evaluations });
    }

    let mut diff = Point::zeros(dim);
    let mut corr = Point::zeros(dim);
    let mut g_prev = Point::zeros(dim);
    for (g, &i) in fresh.iter().zip(batch) {
        problem.component_gradient_into(i, &state.x_prev, &mut g_prev)?;
        let y = state.table.entry(i);
        for r in 0..dim {
            diff[r] += g[r] - g_prev[r];
            corr[r] += g_prev[r] - y[r];
        }
    }
    let mean = state.table.mean();
    let mut v = diff;
    v.scale(inv_b);
    v.axpy(1.0 - lambda, &state.v_prev);
    for r in 0..dim {
        v[r] += lambda * (corr[r] * inv_b + mean[r]);
    }
    Ok(Estimate { v, fresh, evaluations: 2 * batch.len() as u64 })
}

/// ZeroSARAH: a single-loop SARAH variant that never needs a full gradient.
#[derive(Debug, Clone)]
pub struct ZeroSarah<P> {
    problem: P,
    schedule: ParamSchedule,
    state: OptimizerState,
    seeds: SeedStream,
}

impl<P: FiniteSum> ZeroSarah<P> {
    pub fn new(problem: P, x0: Point, schedule: ParamSchedule, seed: u64) -> Result<Self> {
        check_dim(problem.dim(), x0.dim())?;
        if schedule.n != problem.len() {
            return Err(Error::invalid("schedule was built for a different n"));
        }
        let state = OptimizerState::initial(problem.len(), x0);
        Ok(ZeroSarah { problem, schedule, state, seeds: SeedStream::new(seed) })
    }

    /// Resumes from an explicit state, e.g. a constructed analysis snapshot.
    pub fn from_state(problem: P, state: OptimizerState, schedule: ParamSchedule, seed: u64) -> Result<Self> {
        check_dim(problem.dim(), state.x_curr.dim())?;
        check_dim(problem.len(), state.table.len())?;
        Ok(ZeroSarah { problem, schedule, state, seeds: SeedStream::new(seed) })
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    pub fn schedule(&self) -> &ParamSchedule {
        &self.schedule
    }

    pub fn problem(&self) -> &P {
        &self.problem
    }

    /// Minibatch that step `k` draws.
    pub fn minibatch(&self, k: u64) -> Result<Vec<usize>> {
        let b = self.schedule.batch(k);
        sample_without_replacement(self.problem.len(), b, &mut self.seeds.rng(0, k))
    }

    /// Runs iteration `k` on a given minibatch.
    pub fn step_with_batch(&mut self, batch: &[usize]) -> Result<StepReport> {
        let k = self.state.k;
        let n = self.problem.len();
        let eta = self.schedule.eta(k);
        let lambda = self.schedule.lambda(k);
        let est = zerosarah_estimate(&self.problem, &self.state, batch, lambda).map_err(|e| as_divergence(e, k))?;
        finite_or_diverged(&est.v, k)?;
        let mut x_next = self.state.x_curr.clone();
        x_next.axpy(-eta, &est.v);
        finite_or_diverged(&x_next, k)?;

        for (g, &i) in est.fresh.iter().zip(batch) {
            self.state.table.replace(i, g)?;
        }
        let b = batch.len() as u64;
        let full_batch = batch.len() == n;
        self.state.counters.record(b, est.evaluations, full_batch);
        self.state.x_prev = core::mem::replace(&mut self.state.x_curr, x_next);
        self.state.v_prev = est.v;
        self.state.k += 1;
        Ok(StepReport {
            iteration: k,
            eta,
            batch: batch.len(),
            lambda: Some(lambda),
            paper_evals: b,
            actual_evals: est.evaluations,
            full_batch,
            sampled_clients: None,
        })
    }
}

impl<P: FiniteSum> Optimizer for ZeroSarah<P> {
    fn step(&mut self) -> Result<StepReport> {
        let batch = self.minibatch(self.state.k)?;
        self.step_with_batch(&batch)
    }

    fn next_paper_evals(&self) -> u64 {
        self.schedule.batch(self.state.k) as u64
    }

    fn iterate(&self) -> &Point {
        &self.state.x_curr
    }

    fn counters(&self) -> GradCounter {
        self.state.counters
    }

    fn iteration(&self) -> u64 {
        self.state.k
    }
}
