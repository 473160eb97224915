//! Parameter choices under which the estimators reduce to simpler methods.

use vropt_core::dist::{dzerosarah_round, Federation};
use vropt_core::model::full_gradient;
use vropt_core::optim::{Gd, Optimizer, Sarah, ZeroSarah};
use vropt_core::schedule::{DistSchedule, ParamSchedule, SarahParams};
use vropt_core::{LinearProblem, Objective, Point, QuadraticTest, SyntheticKind, SyntheticSpec};

fn regression(n: usize, d: usize, seed: u64) -> LinearProblem {
    let ds = SyntheticSpec::new(n, d, SyntheticKind::Regression, 0.5, seed).generate().unwrap().dataset;
    LinearProblem::new(Objective::RobustLinearRegression, ds).unwrap()
}

#[test]
fn zerosarah_with_full_refresh_is_gradient_descent_bitwise() {
    let p = regression(30, 5, 1);
    let x0 = Point::new(vec![0.5, -0.3, 1.2, 0.0, 2.0]);
    let eta = 0.2;
    let sched = ParamSchedule::custom(30, eta, 30, 30, 1.0).unwrap();
    let mut zs = ZeroSarah::new(&p, x0.clone(), sched, 9).unwrap();
    let mut gd = Gd::new(&p, x0, eta).unwrap();
    for k in 0..100 {
        zs.step().unwrap();
        gd.step().unwrap();
        let a = zs.iterate().as_slice();
        let b = gd.iterate().as_slice();
        assert!(a.iter().zip(b).all(|(u, v)| u.to_bits() == v.to_bits()), "iteration {k}: {a:?} vs {b:?}");
    }
    assert_eq!(zs.counters().paper_count, gd.counters().paper_count);
}

#[test]
fn sarah_with_full_minibatches_tracks_the_gradient() {
    let p = regression(20, 4, 2);
    let params = SarahParams { epoch_len: 10, batch: 20, eta: 0.3 };
    let mut s = Sarah::new(&p, Point::new(vec![1.0, 1.0, -1.0, 0.5]), params, 4).unwrap();
    for _ in 0..60 {
        let x = s.iterate().clone();
        s.step().unwrap();
        let g = full_gradient(&p, &x).unwrap();
        assert!(s.last_estimate().max_abs_diff(&g) <= 1e-12);
    }
}

#[test]
fn one_client_federation_matches_zerosarah() {
    let q = QuadraticTest::random(9, 3, 1.0, 0.4, 5).unwrap();
    let eta = 0.1;
    let (b0, b, lambda) = (4, 3, 0.3);
    let sched = ParamSchedule::custom(9, eta, b0, b, lambda).unwrap();
    let dsched = DistSchedule::custom(1, 9, eta, 1, b0, 1, b, lambda).unwrap();
    let x0 = Point::new(vec![0.8, -0.6, 0.1]);
    let mut zs = ZeroSarah::new(&q, x0.clone(), sched, 77).unwrap();
    let mut fed = Federation::new(vec![q.clone()], x0, 77).unwrap();
    for k in 0..200 {
        zs.step().unwrap();
        dzerosarah_round(&mut fed, &dsched).unwrap();
        let gap = zs.iterate().max_abs_diff(fed.iterate());
        assert!(gap <= 1e-12, "round {k}: gap {gap}");
    }
    assert_eq!(zs.counters(), fed.counters());
}

#[test]
fn one_client_federation_matches_zerosarah_on_regression() {
    let p = regression(25, 4, 6);
    let sched = ParamSchedule::custom(25, 0.2, 25, 5, 0.1).unwrap();
    let dsched = DistSchedule::custom(1, 25, 0.2, 1, 25, 1, 5, 0.1).unwrap();
    let x0 = Point::zeros(4);
    let mut zs = ZeroSarah::new(&p, x0.clone(), sched, 3).unwrap();
    let mut fed = Federation::new(vec![p.clone()], x0, 3).unwrap();
    for k in 0..200 {
        zs.step().unwrap();
        dzerosarah_round(&mut fed, &dsched).unwrap();
        assert!(zs.iterate().max_abs_diff(fed.iterate()) <= 1e-12, "round {k}");
    }
}

#[test]
fn gradient_descent_solves_half_norm_in_one_step() {
    let q = QuadraticTest::isotropic(vec![Point::zeros(3)]).unwrap();
    let mut gd = Gd::new(&q, Point::new(vec![3.0, -1.0, 2.0]), 1.0).unwrap();
    gd.step().unwrap();
    assert_eq!(full_gradient(&q, gd.iterate()).unwrap().norm(), 0.0);
}

#[test]
fn gradient_descent_follows_the_linear_recursion() {
    // f = (1/2)||x - c_bar||^2 on average: x_{k+1} - c_bar = (1 - eta)(x_k - c_bar)
    let centers = vec![Point::new(vec![1.0, 0.0]), Point::new(vec![3.0, 2.0])];
    let q = QuadraticTest::isotropic(centers).unwrap();
    let c_bar = Point::new(vec![2.0, 1.0]);
    let x0 = Point::new(vec![-1.0, 5.0]);
    let eta = 0.25;
    let mut gd = Gd::new(&q, x0.clone(), eta).unwrap();
    for k in 1..=30 {
        gd.step().unwrap();
        let mut expected = x0.sub(&c_bar);
        expected.scale((1.0f64 - eta).powi(k));
        expected.add_assign(&c_bar);
        assert!(gd.iterate().max_abs_diff(&expected) <= 1e-12);
    }
}
