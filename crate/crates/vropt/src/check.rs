//! Self-checks behind `vropt check`: the brute-force oracles run against
//! small seeded instances.

use rand::Rng;
use vropt_core::dist::{dzerosarah_round, Federation};
use vropt_core::model::{default_sigmoid_lambda, full_gradient};
use vropt_core::optim::{Gd, Optimizer, ZeroSarah};
use vropt_core::oracle::{
    descent_check, exhaustive_dist_estimator_mean, exhaustive_estimator_moments, exhaustive_table_drift,
    finite_difference_gradient, DistSnapshot, EstimatorSnapshot, Target,
};
use vropt_core::sampling::SeedStream;
use vropt_core::schedule::{DistSchedule, ParamSchedule, Preset, PresetExtras};
use vropt_core::{FiniteSum, LinearProblem, Objective, Point, QuadraticTest, SyntheticKind, SyntheticSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn() -> vropt_core::Result<(bool, String)>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("estimator mean identity", mean_identity),
    ("table refresh identity", table_identity),
    ("estimator variance bound", variance_bound),
    ("federated mean identity", dist_identity),
    ("descent relation", descent),
    ("finite-difference gradients", gradients),
    ("full refresh equals GD", collapse_gd),
    ("one client equals sequential", single_client),
];

pub fn run_checks() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => CheckOutcome { name, passed, detail },
            Err(e) => CheckOutcome { name, passed: false, detail: format!("error: {e}") },
        })
        .collect()
}

pub fn format_table(outcomes: &[CheckOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    outcomes
        .iter()
        .map(|o| format!("{} {:<width$}  {}\n", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail))
        .collect()
}

fn random_point(rng: &mut impl Rng, d: usize) -> Point {
    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>().into()
}

fn snapshot(seed: u64, n: usize, d: usize, batch: usize, lambda: f64) -> EstimatorSnapshot {
    let mut rng = SeedStream::new(seed).rng(0, 0);
    EstimatorSnapshot {
        x_curr: random_point(&mut rng, d),
        x_prev: random_point(&mut rng, d),
        v_prev: random_point(&mut rng, d),
        table: (0..n).map(|_| random_point(&mut rng, d)).collect(),
        batch,
        lambda,
    }
}

fn mean_identity() -> vropt_core::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (n, b, lambda) in [(4, 2, 0.25), (6, 3, 0.1)] {
        let q = QuadraticTest::random(n, 3, 1.0, 0.6, n as u64)?;
        for s in 0..5 {
            let r = exhaustive_estimator_moments(&q, &snapshot(s, n, 3, b, lambda), q.smoothness())?;
            worst = worst.max(r.max_deviation);
        }
    }
    Ok((worst <= 1e-10, format!("max deviation {worst:.3e}")))
}

fn table_identity() -> vropt_core::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (n, b) in [(4, 2), (6, 2)] {
        let q = QuadraticTest::random(n, 3, 1.0, 0.6, 10 + n as u64)?;
        for s in 0..5 {
            worst = worst.max(exhaustive_table_drift(&q, &snapshot(s, n, 3, b, 0.5))?.max_deviation);
        }
    }
    Ok((worst <= 1e-10, format!("max relative deviation {worst:.3e}")))
}

fn variance_bound() -> vropt_core::Result<(bool, String)> {
    let q = QuadraticTest::random(6, 3, 0.5, 1.0, 3)?;
    let mut min_slack = f64::INFINITY;
    for s in 0..10 {
        let r = exhaustive_estimator_moments(&q, &snapshot(100 + s, 6, 3, 2, 0.3), q.smoothness())?;
        min_slack = min_slack.min(r.slack());
    }
    Ok((min_slack >= 0.0, format!("min slack {min_slack:.3e}")))
}

fn dist_identity() -> vropt_core::Result<(bool, String)> {
    let q = QuadraticTest::random(4, 2, 1.0, 0.5, 9)?;
    let parts = q.split_clients(2)?;
    let mut worst: f64 = 0.0;
    for s in 0..5 {
        let mut rng = SeedStream::new(s).rng(1, 0);
        let snap = DistSnapshot {
            x_curr: random_point(&mut rng, 2),
            x_prev: random_point(&mut rng, 2),
            v_prev: random_point(&mut rng, 2),
            tables: (0..2).map(|_| (0..2).map(|_| random_point(&mut rng, 2)).collect()).collect(),
            clients: 1,
            batch: 1,
            lambda: 0.25,
        };
        worst = worst.max(exhaustive_dist_estimator_mean(&parts, &snap)?.max_deviation);
    }
    Ok((worst <= 1e-10, format!("max deviation {worst:.3e}")))
}

fn descent() -> vropt_core::Result<(bool, String)> {
    let q = QuadraticTest::random(30, 3, 1.0, 0.4, 5)?;
    let l = q.smoothness();
    let schedule = ParamSchedule::preset(Preset::Cor2, 30, l, PresetExtras::default())?;
    let mut opt = ZeroSarah::new(&q, Point::new(vec![2.0, -1.0, 1.0]), schedule, 1)?;
    for _ in 0..200 {
        let x = opt.iterate().clone();
        let r = opt.step()?;
        let c = descent_check(&q, &x, &opt.state().v_prev, r.eta, l)?;
        if !c.holds(1e-9) {
            return Ok((false, format!("violated at k = {}: {} > {}", r.iteration, c.lhs, c.rhs)));
        }
    }
    Ok((true, "200 steps".into()))
}

fn gradients() -> vropt_core::Result<(bool, String)> {
    let reg = SyntheticSpec::new(30, 5, SyntheticKind::Regression, 0.3, 1).generate()?.dataset;
    let cls = SyntheticSpec::new(30, 5, SyntheticKind::Classification, 0.3, 2).generate()?.dataset;
    let lambda = default_sigmoid_lambda(&cls).max(1e-3);
    let problems = [
        LinearProblem::new(Objective::RobustLinearRegression, reg)?,
        LinearProblem::new(Objective::sigmoid_squared(lambda)?, cls)?,
    ];
    let mut worst: f64 = 0.0;
    for (p_idx, p) in problems.iter().enumerate() {
        for t in 0..20 {
            let mut rng = SeedStream::new(p_idx as u64).rng(2, t);
            let x = random_point(&mut rng, p.dim());
            let i = rng.random_range(0..p.len());
            let a = p.component_gradient(i, &x)?;
            let fd = finite_difference_gradient(p, Target::Component(i), &x, 1e-6)?;
            worst = worst.max(a.sub(&fd).norm() / a.norm().max(fd.norm()).max(1e-8));
        }
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:.3e}")))
}

fn collapse_gd() -> vropt_core::Result<(bool, String)> {
    let q = QuadraticTest::random(12, 3, 1.0, 0.3, 8)?;
    let x0 = Point::new(vec![1.0, 0.5, -0.5]);
    let mut zs = ZeroSarah::new(&q, x0.clone(), ParamSchedule::custom(12, 0.1, 12, 12, 1.0)?, 0)?;
    let mut gd = Gd::new(&q, x0, 0.1)?;
    for k in 0..100 {
        zs.step()?;
        gd.step()?;
        if zs.iterate() != gd.iterate() {
            return Ok((false, format!("iterates differ at k = {k}")));
        }
    }
    let g = full_gradient(&q, gd.iterate())?;
    Ok((true, format!("100 steps bitwise equal, final |grad| {:.3e}", g.norm())))
}

fn single_client() -> vropt_core::Result<(bool, String)> {
    let q = QuadraticTest::random(9, 3, 1.0, 0.4, 2)?;
    let x0 = Point::new(vec![0.5, -0.5, 0.25]);
    let mut zs = ZeroSarah::new(&q, x0.clone(), ParamSchedule::custom(9, 0.1, 9, 3, 0.2)?, 5)?;
    let sched = DistSchedule::custom(1, 9, 0.1, 1, 9, 1, 3, 0.2)?;
    let mut fed = Federation::new(vec![q.clone()], x0, 5)?;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        zs.step()?;
        dzerosarah_round(&mut fed, &sched)?;
        worst = worst.max(zs.iterate().max_abs_diff(fed.iterate()));
    }
    Ok((worst <= 1e-12, format!("max gap {worst:.3e} over 200 rounds")))
}
