use rand::Rng;
use vropt_core::model::default_sigmoid_lambda;
use vropt_core::oracle::{finite_difference_gradient, Target};
use vropt_core::sampling::SeedStream;
use vropt_core::{FiniteSum, LinearProblem, Objective, Point, QuadraticTest, SyntheticKind, SyntheticSpec};

fn relative_error(a: &Point, b: &Point) -> f64 {
    a.sub(b).norm() / a.norm().max(b.norm()).max(1e-8)
}

fn probe(problem: &impl FiniteSum, seed: u64) {
    let stream = SeedStream::new(seed);
    for t in 0..20 {
        let mut rng = stream.rng(0, t);
        let x: Point = (0..problem.dim()).map(|_| rng.random_range(-1.5..1.5)).collect::<Vec<f64>>().into();
        let i = rng.random_range(0..problem.len());
        let analytic = problem.component_gradient(i, &x).unwrap();
        let numeric = finite_difference_gradient(problem, Target::Component(i), &x, 1e-6).unwrap();
        let err = relative_error(&analytic, &numeric);
        assert!(err <= 1e-5, "probe {t}, component {i}: relative error {err}");
    }
}

#[test]
fn robust_regression_matches_central_differences() {
    let ds = SyntheticSpec::new(50, 6, SyntheticKind::Regression, 0.3, 1).generate().unwrap().dataset;
    probe(&LinearProblem::new(Objective::RobustLinearRegression, ds).unwrap(), 10);
}

#[test]
fn sigmoid_squared_matches_central_differences() {
    let ds = SyntheticSpec::new(50, 8, SyntheticKind::Classification, 0.1, 2).generate().unwrap().dataset;
    let lambda = default_sigmoid_lambda(&ds).max(1e-3);
    probe(&LinearProblem::new(Objective::sigmoid_squared(lambda).unwrap(), ds).unwrap(), 20);
}

#[test]
fn quadratic_gradients_match() {
    probe(&QuadraticTest::random(10, 4, 1.0, 0.5, 3).unwrap(), 30);
}
