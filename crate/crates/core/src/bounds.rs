//! Right-hand sides of the expected-gradient-norm guarantees.
//!
//! Both bounds hold for the randomized output `x^` drawn with probability
//! `eta_k / sum_t eta_t` among the first `K` iterates. The Lyapunov weights
//! used by the analysis enter here at their minimal admissible values and
//! nowhere else.

use crate::error::{Error, Result};
use crate::schedule::{DistSchedule, ParamSchedule};

fn eta_sum(eta0: f64, eta: f64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("bound needs K >= 1"));
    }
    Ok(eta0 + eta * (k - 1) as f64)
}

/// Sequential bound:
///
/// `2 D0 / S + (n - b0)(4 gamma0 + 2 alpha0 b0) G0 / (n b0 S)`,
/// `S = sum_{k<K} eta_k`, `gamma0 = eta0 / (2 lambda1)`,
/// `alpha0 = 2 n lambda1 eta0 / b1^2`.
///
/// `delta0` bounds `f(x^0) - f*` and `g0 = (1/n) sum_i ||grad f_i(x^0)||^2`.
pub fn theoretical_bound(delta0: f64, g0: f64, schedule: &ParamSchedule, k: u64) -> Result<f64> {
    if !schedule.theoretical {
        return Err(Error::invalid("bound requires a theoretical schedule"));
    }
    let s = eta_sum(schedule.eta0, schedule.eta, k)?;
    let n = schedule.n as f64;
    let b0 = schedule.batch0 as f64;
    let b1 = schedule.batch(1) as f64;
    let lambda1 = schedule.lambda(1);
    let eta0 = schedule.eta0;
    let first = 2.0 * delta0 / s;
    if schedule.batch0 == schedule.n {
        return Ok(first);
    }
    let gamma0 = eta0 / (2.0 * lambda1);
    let alpha0 = 2.0 * n * lambda1 * eta0 / (b1 * b1);
    Ok(first + (n - b0) * (4.0 * gamma0 + 2.0 * alpha0 * b0) * g0 / (n * b0 * s))
}

/// Distributed bound:
///
/// `2 D0 / S + (nm - s0 b0) eta0 theta0 G0' / (nm s0 b0 S)` with
/// `theta0 = nm / ((nm - 1) lambda1) + 4 nm lambda1 s0 b0 / (s1^2 b1^2)`.
///
/// `g0p = (1/(nm)) sum_{i,j} ||grad f_{i,j}(x^0)||^2`.
pub fn theoretical_bound_dist(delta0: f64, g0p: f64, schedule: &DistSchedule, k: u64) -> Result<f64> {
    if !schedule.theoretical {
        return Err(Error::invalid("bound requires a theoretical schedule"));
    }
    let s = eta_sum(schedule.eta0, schedule.eta, k)?;
    let first = 2.0 * delta0 / s;
    let nm_count = schedule.n_clients * schedule.m;
    let s0b0_count = schedule.clients0 * schedule.batch0;
    if s0b0_count >= nm_count {
        // also covers nm = 1, where theta0 is undefined
        return Ok(first);
    }
    let nm = nm_count as f64;
    let s0b0 = s0b0_count as f64;
    let s1 = schedule.clients(1) as f64;
    let b1 = schedule.batch(1) as f64;
    let lambda1 = schedule.lambda(1);
    let theta0 = nm / ((nm - 1.0) * lambda1) + 4.0 * nm * lambda1 * s0b0 / (s1 * s1 * b1 * b1);
    Ok(first + (nm - s0b0) * schedule.eta0 * theta0 * g0p / (nm * s0b0 * s))
}
