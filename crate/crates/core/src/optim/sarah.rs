use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::model::{mean_gradient, FiniteSum};
use crate::optim::{as_divergence, finite_or_diverged, GradCounter, Optimizer, StepReport};
use crate::point::Point;
use crate::sampling::{sample_without_replacement, SeedStream};
use crate::schedule::SarahParams;

/// Minibatch SARAH with epochs of one full-gradient step followed by
/// `epoch_len` recursive steps. Each epoch restarts from the last iterate of
/// the previous one.
#[derive(Debug, Clone)]
pub struct Sarah<P> {
    problem: P,
    params: SarahParams,
    x_curr: Point,
    x_prev: Point,
    v_prev: Point,
    /// Position inside the epoch; 0 means the next step is a full gradient.
    phase: usize,
    k: u64,
    counters: GradCounter,
    seeds: SeedStream,
}

impl<P: FiniteSum> Sarah<P> {
    pub fn new(problem: P, x0: Point, params: SarahParams, seed: u64) -> Result<Self> {
        check_dim(problem.dim(), x0.dim())?;
        if params.batch == 0 || params.batch > problem.len() {
            return Err(Error::invalid("SARAH batch must lie in 1..=n"));
        }
        if !(params.eta > 0.0 && params.eta.is_finite()) {
            return Err(Error::invalid("stepsize must be positive and finite"));
        }
        let dim = x0.dim();
        Ok(Sarah {
            problem,
            params,
            x_prev: x0.clone(),
            x_curr: x0,
            v_prev: Point::zeros(dim),
            phase: 0,
            k: 0,
            counters: GradCounter::default(),
            seeds: SeedStream::new(seed),
        })
    }

    pub fn params(&self) -> &SarahParams {
        &self.params
    }

    /// `v^{k-1}`, the direction used by the last step.
    pub fn last_estimate(&self) -> &Point {
        &self.v_prev
    }

    /// Runs iterations until the current epoch is complete and returns their
    /// reports. The epoch output is [`Optimizer::iterate`] afterwards.
    pub fn run_epoch(&mut self) -> Result<Vec<StepReport>> {
        let mut reports = Vec::with_capacity(self.params.epoch_len + 1);
        loop {
            reports.push(self.step()?);
            if self.phase == 0 {
                return Ok(reports);
            }
        }
    }
}

impl<P: FiniteSum> Optimizer for Sarah<P> {
    fn step(&mut self) -> Result<StepReport> {
        let k = self.k;
        let n = self.problem.len();
        let (v, batch, actual, full_batch) = if self.phase == 0 {
            let v = mean_gradient(&self.problem, 0..n, &self.x_curr).map_err(|e| as_divergence(e, k))?;
            (v, n, n as u64, true)
        } else {
            let b = self.params.batch;
            let idx = sample_without_replacement(n, b, &mut self.seeds.rng(0, k))?;
            let dim = self.problem.dim();
            let mut diff = Point::zeros(dim);
            let mut g = Point::zeros(dim);
            let mut g_prev = Point::zeros(dim);
            for &i in &idx {
                self.problem.component_gradient_into(i, &self.x_curr, &mut g).map_err(|e| as_divergence(e, k))?;
                self.problem.component_gradient_into(i, &self.x_prev, &mut g_prev).map_err(|e| as_divergence(e, k))?;
                diff.add_assign(&g);
                diff.sub_assign(&g_prev);
            }
            diff.scale(1.0 / b as f64);
            diff.add_assign(&self.v_prev);
            (diff, b, 2 * b as u64, b == n)
        };
        finite_or_diverged(&v, k)?;
        let eta = self.params.eta;
        let mut x_next = self.x_curr.clone();
        x_next.axpy(-eta, &v);
        finite_or_diverged(&x_next, k)?;

        self.counters.record(batch as u64, actual, full_batch);
        self.x_prev = core::mem::replace(&mut self.x_curr, x_next);
        self.v_prev = v;
        self.phase = (self.phase + 1) % (self.params.epoch_len + 1);
        self.k += 1;
        Ok(StepReport {
            iteration: k,
            eta,
            batch,
            lambda: None,
            paper_evals: batch as u64,
            actual_evals: actual,
            full_batch,
            sampled_clients: None,
        })
    }

    fn iterate(&self) -> &Point {
        &self.x_curr
    }

    fn counters(&self) -> GradCounter {
        self.counters
    }

    fn iteration(&self) -> u64 {
        self.k
    }

    fn next_paper_evals(&self) -> u64 {
        if self.phase == 0 {
            self.problem.len() as u64
        } else {
            self.params.batch as u64
        }
    }
}
