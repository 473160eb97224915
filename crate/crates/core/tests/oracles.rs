//! Exhaustive-expectation checks of the estimator identities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vropt_core::dist::{dzerosarah_round, Federation};
use vropt_core::optim::{zerosarah_estimate, Optimizer, OptimizerState, ZeroSarah};
use vropt_core::oracle::{
    descent_check, exhaustive_dist_estimator_mean, exhaustive_estimator_moments, exhaustive_table_drift, subsets,
    DistSnapshot, EstimatorSnapshot,
};
use vropt_core::sampling::SeedStream;
use vropt_core::schedule::{DistSchedule, ParamSchedule, Preset, PresetExtras};
use vropt_core::table::GradientTable;
use vropt_core::{Point, QuadraticTest};

fn random_point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Point {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect::<Vec<f64>>().into()
}

fn random_snapshot(rng: &mut ChaCha8Rng, n: usize, d: usize, batch: usize, lambda: f64) -> EstimatorSnapshot {
    EstimatorSnapshot {
        x_curr: random_point(rng, d, 2.0),
        x_prev: random_point(rng, d, 2.0),
        v_prev: random_point(rng, d, 3.0),
        table: (0..n).map(|_| random_point(rng, d, 3.0)).collect(),
        batch,
        lambda,
    }
}

#[test]
fn estimator_mean_identity() {
    for (n, b, lambda) in [(4, 2, 0.25), (6, 3, 0.1), (6, 2, 0.7)] {
        let q = QuadraticTest::random(n, 3, 1.0, 0.6, n as u64).unwrap();
        for t in 0..5 {
            let mut rng = SeedStream::new(100 + n as u64).rng(0, t);
            let snap = random_snapshot(&mut rng, n, 3, b, lambda);
            let r = exhaustive_estimator_moments(&q, &snap, q.smoothness()).unwrap();
            assert_eq!(r.outcomes, vropt_core::oracle::binomial(n, b));
            assert!(r.max_deviation <= 1e-10, "n={n} b={b}: {}", r.max_deviation);
        }
    }
}

#[test]
fn optimizer_estimator_agrees_with_oracle_average() {
    let (n, b, lambda) = (6, 3, 0.1);
    let q = QuadraticTest::random(n, 2, 1.0, 0.6, 1).unwrap();
    let mut rng = SeedStream::new(5).rng(0, 0);
    let snap = random_snapshot(&mut rng, n, 2, b, lambda);
    let mut table = GradientTable::new(n, 2);
    table.set_all(&snap.table).unwrap();
    let state = OptimizerState {
        x_curr: snap.x_curr.clone(),
        x_prev: snap.x_prev.clone(),
        v_prev: snap.v_prev.clone(),
        table,
        k: 3,
        counters: Default::default(),
    };
    let mut mean = Point::zeros(2);
    let mut count = 0.0;
    for batch in subsets(n, b) {
        mean.add_assign(&zerosarah_estimate(&q, &state, &batch, lambda).unwrap().v);
        count += 1.0;
    }
    mean.scale(1.0 / count);
    let r = exhaustive_estimator_moments(&q, &snap, q.smoothness()).unwrap();
    assert!(mean.max_abs_diff(&r.mean) <= 1e-12);
}

#[test]
fn full_refresh_has_a_single_outcome() {
    let q = QuadraticTest::random(5, 2, 1.0, 0.3, 2).unwrap();
    let mut rng = SeedStream::new(1).rng(0, 0);
    let snap = random_snapshot(&mut rng, 5, 2, 5, 1.0);
    let r = exhaustive_estimator_moments(&q, &snap, q.smoothness()).unwrap();
    assert_eq!(r.outcomes, 1);
    assert!(r.max_deviation <= 1e-12);
    assert!(r.second_moment <= 1e-24);
    let drift = exhaustive_table_drift(&q, &snap).unwrap();
    assert_eq!((drift.second_moment, drift.rhs), (0.0, 0.0));
}

#[test]
fn table_refresh_identity() {
    for (n, b) in [(4, 2), (6, 2), (6, 3)] {
        let q = QuadraticTest::random(n, 3, 1.0, 0.5, 40 + n as u64).unwrap();
        for t in 0..5 {
            let mut rng = SeedStream::new(7).rng(n as u64, t);
            let snap = random_snapshot(&mut rng, n, 3, b, 0.5);
            let r = exhaustive_table_drift(&q, &snap).unwrap();
            assert!(r.max_deviation <= 1e-10, "n={n} b={b}: {}", r.max_deviation);
        }
    }
}

#[test]
fn second_moment_within_variance_bound() {
    for (n, b, lambda) in [(4, 2, 0.25), (6, 2, 0.5), (6, 3, 0.1)] {
        let q = QuadraticTest::random(n, 3, 0.5, 1.0, 60 + n as u64).unwrap();
        for t in 0..10 {
            let mut rng = SeedStream::new(8).rng(n as u64, t);
            let snap = random_snapshot(&mut rng, n, 3, b, lambda);
            let r = exhaustive_estimator_moments(&q, &snap, q.smoothness()).unwrap();
            assert!(r.slack() >= 0.0, "n={n} b={b}: moment {} rhs {}", r.second_moment, r.rhs);
        }
    }
}

#[test]
fn distributed_mean_identity_on_reachable_states() {
    let q = QuadraticTest::random(4, 2, 1.0, 0.5, 9).unwrap();
    let parts = q.split_clients(2).unwrap();
    let lambda = 0.25;
    let sched = DistSchedule::custom(2, 2, 0.1, 2, 2, 1, 1, lambda).unwrap();
    let mut fed = Federation::new(parts.clone(), Point::new(vec![1.0, -1.0]), 4).unwrap();
    for round in 0..8 {
        dzerosarah_round(&mut fed, &sched).unwrap();
        let snap = DistSnapshot {
            x_curr: fed.iterate().clone(),
            x_prev: fed.previous_iterate().clone(),
            v_prev: fed.previous_estimate().clone(),
            tables: fed.clients().iter().map(|c| (0..2).map(|j| c.table.entry_point(j)).collect()).collect(),
            clients: 1,
            batch: 1,
            lambda,
        };
        let r = exhaustive_dist_estimator_mean(&parts, &snap).unwrap();
        assert_eq!(r.outcomes, 4);
        assert!(r.max_deviation <= 1e-10, "round {round}: {}", r.max_deviation);
    }
}

#[test]
fn distributed_mean_identity_on_random_states() {
    let q = QuadraticTest::random(12, 2, 1.0, 0.5, 10).unwrap();
    let parts = q.split_clients(3).unwrap();
    for t in 0..5 {
        let mut rng = SeedStream::new(3).rng(0, t);
        let snap = DistSnapshot {
            x_curr: random_point(&mut rng, 2, 1.0),
            x_prev: random_point(&mut rng, 2, 1.0),
            v_prev: random_point(&mut rng, 2, 1.0),
            tables: (0..3).map(|_| (0..4).map(|_| random_point(&mut rng, 2, 2.0)).collect()).collect(),
            clients: 2,
            batch: 2,
            lambda: 0.2,
        };
        let r = exhaustive_dist_estimator_mean(&parts, &snap).unwrap();
        assert_eq!(r.outcomes, 3 * 36);
        assert!(r.max_deviation <= 1e-10);
    }
}

#[test]
fn descent_relation_holds_along_trajectories() {
    let q = QuadraticTest::random(40, 4, 1.0, 0.4, 12).unwrap();
    let l = q.smoothness();
    for preset in [Preset::Cor1, Preset::Cor2] {
        let sched = ParamSchedule::preset(preset, 40, l, PresetExtras::default()).unwrap();
        let mut opt = ZeroSarah::new(&q, Point::new(vec![2.0, -1.0, 0.5, 1.5]), sched, 21).unwrap();
        for _ in 0..300 {
            let x = opt.iterate().clone();
            let report = opt.step().unwrap();
            let check = descent_check(&q, &x, &opt.state().v_prev, report.eta, l).unwrap();
            assert!(check.holds(1e-9), "{check:?}");
        }
    }
}

#[test]
fn oracles_are_deterministic() {
    let q = QuadraticTest::random(6, 2, 1.0, 0.5, 1).unwrap();
    let mut rng = SeedStream::new(2).rng(0, 0);
    let snap = random_snapshot(&mut rng, 6, 2, 3, 0.4);
    assert_eq!(
        exhaustive_estimator_moments(&q, &snap, 1.0).unwrap(),
        exhaustive_estimator_moments(&q, &snap, 1.0).unwrap()
    );
}
