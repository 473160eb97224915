//! Brute-force checks for the estimators.
//!
//! Nothing here calls into the optimizer modules: every estimator value is
//! rebuilt from its defining formula, expectations are taken by enumerating
//! every admissible minibatch, and gradients are compared against central
//! differences. Agreement with the optimizers is therefore meaningful.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::model::FiniteSum;
use crate::point::Point;

/// Largest `n` (or `n m`) the enumerators accept.
pub const MAX_ENUMERATION_N: usize = 12;
/// Largest number of enumerated outcomes.
pub const MAX_OUTCOMES: u128 = 1_000_000;

/// Result of an exhaustive expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationReport {
    /// Number of equally likely outcomes enumerated.
    pub outcomes: u128,
    /// Average estimator value (empty when the check is scalar).
    pub mean: Point,
    /// Average of the tested squared quantity.
    pub second_moment: f64,
    /// Closed-form right-hand side it is compared against.
    pub rhs: f64,
    /// Norm of the mean-identity residual, or relative gap for scalar checks.
    pub max_deviation: f64,
}

impl EnumerationReport {
    /// `rhs - second_moment`.
    pub fn slack(&self) -> f64 {
        self.rhs - self.second_moment
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Subsets {
    Subsets { n, current: if k <= n { Some((0..k).collect()) } else { None } }
}

#[derive(Debug, Clone)]
pub struct Subsets {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                return Some(out);
            }
        }
        Some(out)
    }
}

fn average_gradient<P: FiniteSum + ?Sized>(problem: &P, x: &Point) -> Result<Point> {
    let mut acc = Point::zeros(problem.dim());
    for i in 0..problem.len() {
        acc.add_assign(&problem.component_gradient(i, x)?);
    }
    acc.scale(1.0 / problem.len() as f64);
    Ok(acc)
}

fn average(points: &[Point], dim: usize) -> Point {
    let mut acc = Point::zeros(dim);
    points.iter().for_each(|p| acc.add_assign(p));
    acc.scale(1.0 / points.len() as f64);
    acc
}

/// Everything the sequential estimator at step `k` depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSnapshot {
    pub x_curr: Point,
    pub x_prev: Point,
    pub v_prev: Point,
    /// `y_i^{k-1}`, one per component.
    pub table: Vec<Point>,
    pub batch: usize,
    pub lambda: f64,
}

fn guard(n: usize, outcomes: u128) -> Result<()> {
    if n > MAX_ENUMERATION_N || outcomes > MAX_OUTCOMES {
        return Err(Error::InstanceTooLarge { outcomes, limit: MAX_OUTCOMES });
    }
    Ok(())
}

fn check_snapshot<P: FiniteSum + ?Sized>(problem: &P, snap: &EstimatorSnapshot) -> Result<()> {
    let d = problem.dim();
    check_dim(problem.len(), snap.table.len())?;
    for p in [&snap.x_curr, &snap.x_prev, &snap.v_prev].into_iter().chain(&snap.table) {
        check_dim(d, p.dim())?;
    }
    if snap.batch == 0 || snap.batch > problem.len() {
        return Err(Error::invalid("batch must lie in 1..=n"));
    }
    Ok(())
}

/// Enumerates every minibatch of the snapshot's size and reports
///
/// * `mean`: `E[v^k]`, with `max_deviation = ||E[v^k] - grad f(x^k)
///   - (1 - lambda)(v^{k-1} - grad f(x^{k-1}))||`;
/// * `second_moment`: `E||v^k - grad f(x^k)||^2`;
/// * `rhs`: `(1-lambda)^2 ||v^{k-1} - grad f(x^{k-1})||^2
///   + (2 L^2 / b) ||x^k - x^{k-1}||^2
///   + (2 lambda^2 / b) (1/n) sum_j ||grad f_j(x^{k-1}) - y_j||^2`.
pub fn exhaustive_estimator_moments<P: FiniteSum + ?Sized>(
    problem: &P,
    snap: &EstimatorSnapshot,
    smoothness: f64,
) -> Result<EnumerationReport> {
    check_snapshot(problem, snap)?;
    let n = problem.len();
    let d = problem.dim();
    let b = snap.batch;
    let outcomes = binomial(n, b);
    guard(n, outcomes)?;

    let curr: Vec<Point> = (0..n).map(|i| problem.component_gradient(i, &snap.x_curr)).collect::<Result<_>>()?;
    let prev: Vec<Point> = (0..n).map(|i| problem.component_gradient(i, &snap.x_prev)).collect::<Result<_>>()?;
    let grad_curr = average(&curr, d);
    let grad_prev = average(&prev, d);
    let y_bar = average(&snap.table, d);
    let lambda = snap.lambda;

    let mut mean = Point::zeros(d);
    let mut second = 0.0;
    for batch in subsets(n, b) {
        // v = (1/b) sum (curr - prev) + (1-l) v_prev + l ((1/b) sum (prev - y) + y_bar)
        let mut v = Point::zeros(d);
        for &i in &batch {
            for r in 0..d {
                v[r] += (curr[i][r] - prev[i][r] + lambda * (prev[i][r] - snap.table[i][r])) / b as f64;
            }
        }
        for r in 0..d {
            v[r] += (1.0 - lambda) * snap.v_prev[r] + lambda * y_bar[r];
        }
        second += v.dist_sq(&grad_curr);
        mean.add_assign(&v);
    }
    mean.scale(1.0 / outcomes as f64);
    second /= outcomes as f64;

    let carried = snap.v_prev.sub(&grad_prev);
    let mut target = grad_curr.clone();
    target.axpy(1.0 - lambda, &carried);
    let max_deviation = mean.sub(&target).norm();

    let table_err: f64 = (0..n).map(|j| prev[j].dist_sq(&snap.table[j])).sum::<f64>() / n as f64;
    let rhs = (1.0 - lambda) * (1.0 - lambda) * carried.norm_sq()
        + 2.0 * smoothness * smoothness / b as f64 * snap.x_curr.dist_sq(&snap.x_prev)
        + 2.0 * lambda * lambda / b as f64 * table_err;

    Ok(EnumerationReport { outcomes, mean, second_moment: second, rhs, max_deviation })
}

/// Checks the table-refresh identity at `x^k`:
///
/// `E[(1/n) sum_j ||grad f_j(x^k) - y_j^k||^2]
///   = (1 - b/n) (1/n) sum_j ||grad f_j(x^k) - y_j^{k-1}||^2`,
///
/// where `y_j^k = grad f_j(x^k)` for sampled `j` and `y_j^{k-1}` otherwise.
/// `second_moment` holds the left side, `rhs` the right side and
/// `max_deviation` their relative gap.
pub fn exhaustive_table_drift<P: FiniteSum + ?Sized>(
    problem: &P,
    snap: &EstimatorSnapshot,
) -> Result<EnumerationReport> {
    check_snapshot(problem, snap)?;
    let n = problem.len();
    let b = snap.batch;
    let outcomes = binomial(n, b);
    guard(n, outcomes)?;

    let errs: Vec<f64> = (0..n)
        .map(|j| Ok(problem.component_gradient(j, &snap.x_curr)?.dist_sq(&snap.table[j])))
        .collect::<Result<_>>()?;
    let mut lhs = 0.0;
    let mut sampled = vec![false; n];
    for batch in subsets(n, b) {
        sampled.iter_mut().for_each(|s| *s = false);
        batch.iter().for_each(|&j| sampled[j] = true);
        let after: f64 = (0..n).filter(|&j| !sampled[j]).map(|j| errs[j]).sum();
        lhs += after / n as f64;
    }
    lhs /= outcomes as f64;
    let rhs = (1.0 - b as f64 / n as f64) * errs.iter().sum::<f64>() / n as f64;
    let scale = libm::fabs(rhs).max(libm::fabs(lhs));
    let max_deviation = if scale == 0.0 { 0.0 } else { libm::fabs(lhs - rhs) / scale };
    Ok(EnumerationReport { outcomes, mean: Point::zeros(0), second_moment: lhs, rhs, max_deviation })
}

/// State of a federation at round `k` for the distributed mean identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DistSnapshot {
    pub x_curr: Point,
    pub x_prev: Point,
    pub v_prev: Point,
    /// `tables[i][j] = y_{i,j}^{k-1}`.
    pub tables: Vec<Vec<Point>>,
    pub clients: usize,
    pub batch: usize,
    pub lambda: f64,
}

/// Enumerates every client subset and every per-client minibatch
/// (`C(n,s) C(m,b)^s` outcomes) and compares `E[v^k]` against
/// `grad f(x^k) + (1 - lambda)(v^{k-1} - grad f(x^{k-1}))`.
///
/// Only `outcomes`, `mean` and `max_deviation` are populated.
pub fn exhaustive_dist_estimator_mean<P: FiniteSum>(clients: &[P], snap: &DistSnapshot) -> Result<EnumerationReport> {
    let n = clients.len();
    let first = clients.first().ok_or(Error::EmptyDataset)?;
    let m = first.len();
    let d = first.dim();
    if snap.tables.len() != n || clients.iter().any(|c| c.len() != m || c.dim() != d) {
        return Err(Error::invalid("clients and tables disagree"));
    }
    let (s, b) = (snap.clients, snap.batch);
    if s == 0 || s > n || b == 0 || b > m {
        return Err(Error::invalid("need 1 <= s <= n and 1 <= b <= m"));
    }
    let per_client = binomial(m, b);
    let outcomes = (0..s).fold(binomial(n, s), |acc, _| acc.saturating_mul(per_client));
    guard(n * m, outcomes)?;

    let mut curr = Vec::with_capacity(n);
    let mut prev = Vec::with_capacity(n);
    for c in clients {
        curr.push((0..m).map(|j| c.component_gradient(j, &snap.x_curr)).collect::<Result<Vec<_>>>()?);
        prev.push((0..m).map(|j| c.component_gradient(j, &snap.x_prev)).collect::<Result<Vec<_>>>()?);
    }
    let flat = |rows: &Vec<Vec<Point>>| average(&rows.iter().flatten().cloned().collect::<Vec<_>>(), d);
    let grad_curr = flat(&curr);
    let grad_prev = flat(&prev);
    let y_global = flat(&snap.tables);

    // per-client term for each possible minibatch
    let lambda = snap.lambda;
    let local: Vec<Vec<Point>> = (0..n)
        .map(|i| {
            subsets(m, b)
                .map(|batch| {
                    let mut t = Point::zeros(d);
                    for &j in &batch {
                        for r in 0..d {
                            t[r] += (curr[i][j][r] - prev[i][j][r] + lambda * (prev[i][j][r] - snap.tables[i][j][r]))
                                / b as f64;
                        }
                    }
                    t
                })
                .collect()
        })
        .collect();

    let mut base = Point::zeros(d);
    for r in 0..d {
        base[r] = (1.0 - lambda) * snap.v_prev[r] + lambda * y_global[r];
    }
    let mut mean = Point::zeros(d);
    for chosen in subsets(n, s) {
        // odometer over one minibatch choice per chosen client
        let mut pick = vec![0usize; s];
        loop {
            let mut v = base.clone();
            for (slot, &i) in chosen.iter().enumerate() {
                v.axpy(1.0 / s as f64, &local[i][pick[slot]]);
            }
            mean.add_assign(&v);
            let mut slot = 0;
            while slot < s {
                pick[slot] += 1;
                if pick[slot] < local[chosen[slot]].len() {
                    break;
                }
                pick[slot] = 0;
                slot += 1;
            }
            if slot == s {
                break;
            }
        }
    }
    mean.scale(1.0 / outcomes as f64);
    let mut target = grad_curr;
    target.axpy(1.0 - lambda, &snap.v_prev.sub(&grad_prev));
    Ok(EnumerationReport { outcomes, max_deviation: mean.sub(&target).norm(), mean, second_moment: 0.0, rhs: 0.0 })
}

/// Central differences `(f(x + h e_j) - f(x - h e_j)) / (2h)`.
pub fn finite_difference<F>(f: F, x: &Point, h: f64) -> Result<Point>
where
    F: Fn(&Point) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::invalid("step h must be > 0"));
    }
    let mut out = Point::zeros(x.dim());
    let mut probe = x.clone();
    for j in 0..x.dim() {
        probe[j] = x[j] + h;
        let up = f(&probe)?;
        probe[j] = x[j] - h;
        let down = f(&probe)?;
        probe[j] = x[j];
        out[j] = (up - down) / (2.0 * h);
    }
    Ok(out)
}

/// Which function to difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Component(usize),
    Full,
}

/// Finite-difference gradient of `f_i` or of `f`.
pub fn finite_difference_gradient<P: FiniteSum + ?Sized>(
    problem: &P,
    target: Target,
    x: &Point,
    h: f64,
) -> Result<Point> {
    check_dim(problem.dim(), x.dim())?;
    match target {
        Target::Component(i) => finite_difference(|p| problem.component_loss(i, p), x, h),
        Target::Full => finite_difference(
            |p| {
                let mut sum = 0.0;
                for i in 0..problem.len() {
                    sum += problem.component_loss(i, p)?;
                }
                Ok(sum / problem.len() as f64)
            },
            x,
            h,
        ),
    }
}

/// Both sides of the one-step descent relation for `x^+ = x - eta v`:
///
/// `f(x^+) <= f(x) - (eta/2)||grad f(x)||^2 - (1/(2 eta) - L/2)||x^+ - x||^2
///            + (eta/2)||v - grad f(x)||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl DescentCheck {
    /// Holds up to `rel_tol * max(1, |rhs|)`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs + rel_tol * libm::fabs(self.rhs).max(1.0)
    }
}

pub fn descent_check<P: FiniteSum + ?Sized>(
    problem: &P,
    x: &Point,
    v: &Point,
    eta: f64,
    smoothness: f64,
) -> Result<DescentCheck> {
    let f = |p: &Point| -> Result<f64> {
        let mut sum = 0.0;
        for i in 0..problem.len() {
            sum += problem.component_loss(i, p)?;
        }
        Ok(sum / problem.len() as f64)
    };
    let grad = average_gradient(problem, x)?;
    let mut next = x.clone();
    next.axpy(-eta, v);
    let step_sq = next.dist_sq(x);
    let rhs =
        f(x)? - 0.5 * eta * grad.norm_sq() - (0.5 / eta - 0.5 * smoothness) * step_sq + 0.5 * eta * v.dist_sq(&grad);
    Ok(DescentCheck { lhs: f(&next)?, rhs })
}
