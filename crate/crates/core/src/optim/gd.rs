use crate::error::{check_dim, Error, Result};
use crate::model::{full_gradient, FiniteSum};
use crate::optim::{as_divergence, finite_or_diverged, GradCounter, Optimizer, StepReport};
use crate::point::Point;

/// Full-batch gradient descent with a constant stepsize.
#[derive(Debug, Clone)]
pub struct Gd<P> {
    problem: P,
    eta: f64,
    x: Point,
    k: u64,
    counters: GradCounter,
}

impl<P: FiniteSum> Gd<P> {
    pub fn new(problem: P, x0: Point, eta: f64) -> Result<Self> {
        check_dim(problem.dim(), x0.dim())?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid("stepsize must be positive and finite"));
        }
        Ok(Gd { problem, eta, x: x0, k: 0, counters: GradCounter::default() })
    }
}

impl<P: FiniteSum> Optimizer for Gd<P> {
    fn step(&mut self) -> Result<StepReport> {
        let k = self.k;
        let n = self.problem.len();
        let g = full_gradient(&self.problem, &self.x).map_err(|e| as_divergence(e, k))?;
        finite_or_diverged(&g, k)?;
        let mut x_next = self.x.clone();
        x_next.axpy(-self.eta, &g);
        finite_or_diverged(&x_next, k)?;
        self.x = x_next;
        self.counters.record(n as u64, n as u64, true);
        self.k += 1;
        Ok(StepReport {
            iteration: k,
            eta: self.eta,
            batch: n,
            lambda: None,
            paper_evals: n as u64,
            actual_evals: n as u64,
            full_batch: true,
            sampled_clients: None,
        })
    }

    fn iterate(&self) -> &Point {
        &self.x
    }

    fn counters(&self) -> GradCounter {
        self.counters
    }

    fn iteration(&self) -> u64 {
        self.k
    }

    fn next_paper_evals(&self) -> u64 {
        self.problem.len() as u64
    }
}
