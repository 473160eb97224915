//! Runs one configured experiment and records its measurement trace.

use vropt_core::bounds::{theoretical_bound, theoretical_bound_dist};
use vropt_core::dist::{DSarah, DZeroSarah};
use vropt_core::model::{default_sigmoid_lambda, full_gradient, mean_component_grad_norm_sq, objective_value};
use vropt_core::optim::{Gd, GradCounter, Optimizer, Sarah, ZeroSarah};
use vropt_core::sampling::{OutputSelector, SeedStream};
use vropt_core::schedule::{
    ceil_sqrt, DistSchedule, DsarahParams, ParamSchedule, Preset, PresetExtras, SarahParams, ONE_PLUS_SQRT8,
};
use vropt_core::{
    DatasetKind, FiniteSum, LinearProblem, Objective, Point, Problem, QuadraticTest, SyntheticKind, SyntheticSpec,
};

use crate::config::{Algorithm, Budget, DatasetSource, ExperimentConfig, ObjectiveChoice, SyntheticFamily};
use crate::error::{Result, VroptError};
use crate::libsvm::read_libsvm_file;
use crate::registry;
use crate::trace::{trace_to_csv_string, TraceRecord};

/// Seed lane reserved for drawing the reported output iterate.
pub const OUTPUT_LANE: u64 = u64::MAX - 1;

/// Expected-gradient-norm guarantee next to the realised output.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub iterations: u64,
    /// Estimate of `f(x^0) - f*`.
    pub delta0: f64,
    /// True when `delta0` uses the best observed objective instead of `f*`.
    pub delta0_is_proxy: bool,
    /// `(1/N) sum ||grad f_i(x^0)||^2` over all `N` samples in use.
    pub g0: f64,
    pub bound: f64,
    /// Index `k` of the output iterate `x^` (drawn with prob. `eta_k / sum eta`).
    pub selected_iteration: usize,
    pub selected_grad_norm_sq: f64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub label: String,
    pub algorithm: Algorithm,
    pub smoothness: f64,
    pub trace: Vec<TraceRecord>,
    pub counters: GradCounter,
    /// Set when the run stopped early; the trace covers the iterations before.
    pub divergence: Option<vropt_core::Error>,
    pub bound: Option<BoundReport>,
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn is_distributed(&self) -> bool {
        self.algorithm.is_distributed()
    }

    pub fn csv(&self) -> Result<String> {
        trace_to_csv_string(&self.trace, self.is_distributed())
    }
}

/// Resolves the configured dataset and objective into a problem.
pub fn load_problem(cfg: &ExperimentConfig) -> Result<(Problem, Vec<String>)> {
    let mut notes = Vec::new();
    let ds = match &cfg.dataset {
        DatasetSource::Named(name) => {
            if registry::lookup(name).is_none() {
                notes.push(format!("`{name}` is not a registered dataset; loading it anyway"));
            }
            registry::load_named(name, &registry::data_dir())?
        }
        DatasetSource::File(path) => read_libsvm_file(path, None)?,
        DatasetSource::Synthetic { family: SyntheticFamily::Quadratic, n, d, seed, .. } => {
            if cfg.objective != ObjectiveChoice::Auto || cfg.objective_lambda.is_some() {
                return Err(VroptError::InvalidConfig("quadratic fixtures take no objective settings".into()));
            }
            return Ok((Problem::Quadratic(QuadraticTest::random(*n, *d, 1.0, 0.5, *seed)?), notes));
        }
        DatasetSource::Synthetic { family, n, d, noise, seed } => {
            let kind = match family {
                SyntheticFamily::Regression => SyntheticKind::Regression,
                _ => SyntheticKind::Classification,
            };
            SyntheticSpec::new(*n, *d, kind, *noise, *seed).generate()?.dataset
        }
    };
    let objective = match (cfg.objective, ds.kind()) {
        (ObjectiveChoice::Robust, _) | (ObjectiveChoice::Auto, DatasetKind::RegressionTargets) => {
            if cfg.objective_lambda.is_some() {
                return Err(VroptError::InvalidConfig("objective_lambda applies to the sigmoid objective".into()));
            }
            Objective::RobustLinearRegression
        }
        (ObjectiveChoice::Sigmoid, DatasetKind::RegressionTargets) => {
            return Err(VroptError::InvalidConfig("the sigmoid objective needs -1/+1 labels".into()))
        }
        (_, DatasetKind::BinaryLabels) => {
            Objective::sigmoid_squared(cfg.objective_lambda.unwrap_or_else(|| default_sigmoid_lambda(&ds)))?
        }
    };
    Ok((Problem::Linear(LinearProblem::new(objective, ds)?), notes))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (problem, notes) = load_problem(cfg)?;
    run_with_problem(cfg, problem, notes)
}

enum Bounded {
    None,
    Sequential(ParamSchedule),
    Distributed(DistSchedule),
}

/// Runs `cfg` on an already-built problem (the dataset keys are ignored).
pub fn run_with_problem(cfg: &ExperimentConfig, problem: Problem, mut notes: Vec<String>) -> Result<RunOutput> {
    cfg.validate()?;
    let d = problem.dim();
    let x0 = match &cfg.x0 {
        Some(v) if v.len() != d => {
            return Err(VroptError::InvalidConfig(format!("x0 has {} coordinates, problem has {d}", v.len())))
        }
        Some(v) => Point::new(v.clone()),
        None => Point::zeros(d),
    };

    // data actually in use (federated runs drop the partition remainder)
    let (measure, clients) = if cfg.algorithm.is_distributed() {
        let nc = cfg.n_clients.expect("validated");
        let clients = problem.split_clients(nc)?;
        let used = nc * clients[0].len();
        if used < problem.len() {
            notes.push(format!("{} trailing samples are not assigned to any client", problem.len() - used));
        }
        (problem.prefix(used)?, Some(clients))
    } else {
        (problem, None)
    };
    let n = measure.len();
    let l = measure.smoothness()?;
    let base_eta = |unit: f64| cfg.eta.unwrap_or(cfg.scale.unwrap_or(1.0) / unit);
    let mut extras = PresetExtras { epsilon: cfg.epsilon, g0: cfg.g0, stepsize_override: cfg.eta, scale: cfg.scale };
    if cfg.preset == Preset::Cor3 && extras.g0.is_none() {
        let g0 = mean_component_grad_norm_sq(&measure, &x0)?;
        notes.push(format!("G0 = {g0} computed at x0 for cor3"));
        extras.g0 = Some(g0);
    }

    let mut bounded = Bounded::None;
    let mut optimizer: Box<dyn Optimizer + '_> = match (cfg.algorithm, clients) {
        (Algorithm::ZeroSarah, _) => {
            let schedule = if cfg.preset == Preset::Custom {
                ParamSchedule::custom(
                    n,
                    cfg.eta.expect("validated"),
                    cfg.batch0.expect("validated"),
                    cfg.batch.expect("validated"),
                    cfg.schedule_lambda.expect("validated"),
                )?
            } else {
                ParamSchedule::preset(cfg.preset, n, l, extras)?
            };
            notes.extend(schedule.notes.iter().cloned());
            bounded = Bounded::Sequential(schedule.clone());
            Box::new(ZeroSarah::new(&measure, x0.clone(), schedule, cfg.seed)?)
        }
        (Algorithm::Sarah, _) => {
            let mut params = SarahParams::standard(n, base_eta(ONE_PLUS_SQRT8 * l));
            params.epoch_len = cfg.epoch_len.unwrap_or(params.epoch_len);
            params.batch = cfg.batch.unwrap_or(params.batch);
            Box::new(Sarah::new(&measure, x0.clone(), params, cfg.seed)?)
        }
        (Algorithm::Gd, _) => Box::new(Gd::new(&measure, x0.clone(), base_eta(l))?),
        (Algorithm::DZeroSarah, Some(clients)) => {
            let m = clients[0].len();
            let nc = clients.len();
            let schedule = if cfg.preset == Preset::Custom {
                DistSchedule::custom(
                    nc,
                    m,
                    cfg.eta.expect("validated"),
                    cfg.clients0.expect("validated"),
                    cfg.batch0.expect("validated"),
                    cfg.clients.expect("validated"),
                    cfg.batch.expect("validated"),
                    cfg.schedule_lambda.expect("validated"),
                )?
            } else {
                DistSchedule::preset(cfg.preset, nc, m, l, extras)?
            };
            notes.extend(schedule.notes.iter().cloned());
            bounded = Bounded::Distributed(schedule.clone());
            Box::new(DZeroSarah::new(clients, x0.clone(), schedule, cfg.seed)?)
        }
        (Algorithm::DSarah, Some(clients)) => {
            let m = clients[0].len();
            let mut params = DsarahParams::standard(clients.len(), m, base_eta(ONE_PLUS_SQRT8 * l));
            params.epoch_len = cfg.epoch_len.unwrap_or(params.epoch_len);
            params.clients = cfg.clients.unwrap_or(params.clients);
            params.batch = cfg.batch.unwrap_or(params.batch);
            Box::new(DSarah::new(clients, x0.clone(), params, cfg.seed)?)
        }
        (_, None) => unreachable!("distributed runs always have clients"),
    };

    let theoretical = match &bounded {
        Bounded::Sequential(s) => s.theoretical,
        Bounded::Distributed(s) => s.theoretical,
        Bounded::None => false,
    };
    if cfg.report_bound && !theoretical {
        return Err(VroptError::InvalidConfig(
            "report_bound needs a preset schedule at the theoretical stepsize".into(),
        ));
    }

    let cadence = cfg.cadence.unwrap_or(if cfg.algorithm.is_distributed() { 1 } else { ceil_sqrt(n) as u64 });
    let budget_reached = |opt: &dyn Optimizer| match cfg.budget {
        Budget::Iterations(k) => opt.iteration() >= k,
        // stop before a step that would overshoot the cap
        Budget::PaperCount(p) => opt.counters().paper_count + opt.next_paper_evals() > p,
    };

    let mut trace = vec![measure_record(&measure, &x0, 0, GradCounter::default(), false, None)
        .map_err(|e| as_measurement_divergence(e, 0))?];
    let mut selector = OutputSelector::new();
    let mut selector_rng = SeedStream::new(cfg.seed).rng(OUTPUT_LANE, 0);
    let mut divergence = None;
    while !budget_reached(optimizer.as_ref()) {
        let x_before = cfg.report_bound.then(|| optimizer.iterate().clone());
        let report = match optimizer.step() {
            Ok(r) => r,
            Err(e @ vropt_core::Error::Divergence { .. }) => {
                divergence = Some(e);
                break;
            }
            Err(e) => return Err(e.into()),
        };
        if let Some(x) = x_before {
            selector.offer(report.eta, &x, &mut selector_rng)?;
        }
        let k = optimizer.iteration();
        if k.is_multiple_of(cadence) || report.full_batch || budget_reached(optimizer.as_ref()) {
            match measure_record(
                &measure,
                optimizer.iterate(),
                k,
                optimizer.counters(),
                report.full_batch,
                report.sampled_clients,
            ) {
                Ok(r) => trace.push(r),
                Err(e) => {
                    divergence = Some(as_measurement_divergence(e, k));
                    break;
                }
            }
        }
    }

    let bound = match (&bounded, cfg.report_bound, &divergence) {
        (_, false, _) | (Bounded::None, _, _) => None,
        (_, true, Some(_)) => {
            notes.push("bound not reported: the run diverged".into());
            None
        }
        (schedule, true, None) => {
            let k = optimizer.iteration();
            let (delta0, proxy) = match &measure {
                Problem::Quadratic(q) => match q.minimum() {
                    Some((_, fstar)) => (objective_value(&measure, &x0)? - fstar, false),
                    None => (proxy_delta(&trace), true),
                },
                Problem::Linear(_) => (proxy_delta(&trace), true),
            };
            let g0 = mean_component_grad_norm_sq(&measure, &x0)?;
            let bound = match schedule {
                Bounded::Sequential(s) => theoretical_bound(delta0, g0, s, k)?,
                Bounded::Distributed(s) => theoretical_bound_dist(delta0, g0, s, k)?,
                Bounded::None => unreachable!(),
            };
            let (idx, x_hat) = selector.selected()?;
            Some(BoundReport {
                iterations: k,
                delta0,
                delta0_is_proxy: proxy,
                g0,
                bound,
                selected_iteration: idx,
                selected_grad_norm_sq: full_gradient(&measure, x_hat)?.norm_sq(),
            })
        }
    };

    let label = cfg.label.clone().unwrap_or_else(|| match cfg.algorithm {
        Algorithm::ZeroSarah | Algorithm::DZeroSarah => format!("{} ({})", cfg.algorithm.name(), cfg.preset.name()),
        other => other.name().to_string(),
    });
    Ok(RunOutput {
        label,
        algorithm: cfg.algorithm,
        smoothness: l,
        counters: optimizer.counters(),
        trace,
        divergence,
        bound,
        notes,
    })
}

/// `f(x^0) - min observed f`, a lower estimate of `f(x^0) - f*`.
fn proxy_delta(trace: &[TraceRecord]) -> f64 {
    let best = trace.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min);
    trace[0].objective - best
}

fn as_measurement_divergence(e: vropt_core::Error, iteration: u64) -> vropt_core::Error {
    match e {
        vropt_core::Error::NumericalOverflow(_) => vropt_core::Error::Divergence { iteration },
        other => other,
    }
}

fn measure_record(
    problem: &Problem,
    x: &Point,
    iter: u64,
    counters: GradCounter,
    full_batch_event: bool,
    sampled_clients: Option<Vec<usize>>,
) -> vropt_core::Result<TraceRecord> {
    let grad = full_gradient(problem, x)?;
    let objective = objective_value(problem, x)?;
    Ok(TraceRecord {
        iter,
        paper_count: counters.paper_count,
        actual_count: counters.actual_count,
        grad_norm: grad.norm(),
        objective,
        full_batch_event,
        sampled_clients,
    })
}
