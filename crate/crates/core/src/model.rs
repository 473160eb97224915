//! Objective families and measurement-only evaluation of `f` and `grad f`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::point::Point;

/// Constant in the smoothness estimate of the sigmoid-squared loss.
pub const SIGMOID_SMOOTHNESS_FACTOR: f64 = 0.15405;

/// Margins `a.x * b` are clamped to this magnitude before `exp`.
pub const SIGMOID_CLAMP: f64 = 40.0;

/// A finite sum `f(x) = (1/n) sum_i f_i(x)` over `n` smooth components.
///
/// Component indices are zero-based.
pub trait FiniteSum {
    fn len(&self) -> usize;

    fn dim(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn component_loss(&self, i: usize, x: &Point) -> Result<f64>;

    /// Writes `grad f_i(x)` into `out`, overwriting its contents.
    fn component_gradient_into(&self, i: usize, x: &Point, out: &mut Point) -> Result<()>;

    fn component_gradient(&self, i: usize, x: &Point) -> Result<Point> {
        let mut out = Point::zeros(self.dim());
        self.component_gradient_into(i, x, &mut out)?;
        Ok(out)
    }
}

impl<T: FiniteSum + ?Sized> FiniteSum for &T {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn component_loss(&self, i: usize, x: &Point) -> Result<f64> {
        (**self).component_loss(i, x)
    }
    fn component_gradient_into(&self, i: usize, x: &Point, out: &mut Point) -> Result<()> {
        (**self).component_gradient_into(i, x, out)
    }
}

/// Mean of `grad f_i(x)` over `indices`, summed in the order given.
///
/// Shared by every code path that needs an exact minibatch or full-batch
/// mean so that collapsed estimators reproduce GD bit for bit.
pub fn mean_gradient<P: FiniteSum + ?Sized>(
    problem: &P,
    indices: impl IntoIterator<Item = usize>,
    x: &Point,
) -> Result<Point> {
    let mut acc = Point::zeros(problem.dim());
    let mut g = Point::zeros(problem.dim());
    let mut count = 0usize;
    for i in indices {
        problem.component_gradient_into(i, x, &mut g)?;
        acc.add_assign(&g);
        count += 1;
    }
    if count == 0 {
        return Err(Error::invalid("mean over an empty index set"));
    }
    acc.scale(1.0 / count as f64);
    Ok(acc)
}

/// `grad f(x)`, for measurement only. Optimizer counters never see this.
pub fn full_gradient<P: FiniteSum + ?Sized>(problem: &P, x: &Point) -> Result<Point> {
    check_dim(problem.dim(), x.dim())?;
    mean_gradient(problem, 0..problem.len(), x)
}

/// `f(x)`, for measurement only.
pub fn objective_value<P: FiniteSum + ?Sized>(problem: &P, x: &Point) -> Result<f64> {
    check_dim(problem.dim(), x.dim())?;
    let mut sum = 0.0;
    for i in 0..problem.len() {
        sum += problem.component_loss(i, x)?;
    }
    let value = sum / problem.len() as f64;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericalOverflow("objective value"))
    }
}

/// `G_0 = (1/n) sum_i ||grad f_i(x)||^2`.
pub fn mean_component_grad_norm_sq<P: FiniteSum + ?Sized>(problem: &P, x: &Point) -> Result<f64> {
    let mut g = Point::zeros(problem.dim());
    let mut sum = 0.0;
    for i in 0..problem.len() {
        problem.component_gradient_into(i, x, &mut g)?;
        sum += g.norm_sq();
    }
    Ok(sum / problem.len() as f64)
}

/// Smoothness estimate for linear models under the sigmoid-squared loss:
/// `0.15405 * max_i ||a_i||^2 + lambda`.
pub fn estimate_smoothness(ds: &Dataset, lambda: f64) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda must be >= 0"));
    }
    let l = SIGMOID_SMOOTHNESS_FACTOR * ds.max_row_norm_sq() + lambda;
    if l > 0.0 && l.is_finite() {
        Ok(l)
    } else {
        Err(Error::DegenerateSmoothness)
    }
}

/// Regularizer used in the distributed experiments: `0.15405e-6 * max_i ||a_i||^2`.
pub fn default_sigmoid_lambda(ds: &Dataset) -> f64 {
    SIGMOID_SMOOTHNESS_FACTOR * 1e-6 * ds.max_row_norm_sq()
}

/// Loss families over linear predictors `a_i . x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `f_i(x) = log(z^2/2 + 1)` with `z = b_i - a_i.x`.
    RobustLinearRegression,
    /// `f_i(x) = (1 - 1/(1 + exp(-(a_i.x) b_i)))^2 + (lambda/2) ||x||^2`.
    SigmoidSquared { lambda: f64 },
}

impl Objective {
    pub fn sigmoid_squared(lambda: f64) -> Result<Self> {
        if lambda >= 0.0 && lambda.is_finite() {
            Ok(Objective::SigmoidSquared { lambda })
        } else {
            Err(Error::invalid("lambda must be finite and >= 0"))
        }
    }
}

/// Robust loss `log(z^2/2 + 1)` and its derivative.
pub fn robust_loss(z: f64) -> (f64, f64) {
    (libm::log1p(0.5 * z * z), z / (0.5 * z * z + 1.0))
}

/// Sigmoid-squared loss of margin `t = z*y` and its derivative in `t`.
pub fn sigmoid_squared_loss(t: f64) -> (f64, f64) {
    let t = t.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    // 1 - sigmoid(t) = 1 / (1 + e^t)
    let s = 1.0 / (1.0 + libm::exp(t));
    (s * s, -2.0 * s * s * (1.0 - s))
}

/// A linear-model objective bound to its dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProblem {
    objective: Objective,
    data: Dataset,
}

impl LinearProblem {
    pub fn new(objective: Objective, data: Dataset) -> Result<Self> {
        if let Objective::SigmoidSquared { lambda } = objective {
            Objective::sigmoid_squared(lambda)?;
        }
        Ok(LinearProblem { objective, data })
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Componentwise smoothness constant used for stepsizes.
    ///
    /// Sigmoid-squared uses [`estimate_smoothness`]. The robust loss has
    /// `|l''(z)| = |1 - z^2/2| / (1 + z^2/2)^2 <= 1`, so `max_i ||a_i||^2`
    /// is a valid constant there.
    pub fn smoothness(&self) -> Result<f64> {
        match self.objective {
            Objective::SigmoidSquared { lambda } => estimate_smoothness(&self.data, lambda),
            Objective::RobustLinearRegression => {
                let l = self.data.max_row_norm_sq();
                if l > 0.0 && l.is_finite() {
                    Ok(l)
                } else {
                    Err(Error::DegenerateSmoothness)
                }
            }
        }
    }

    /// Splits the dataset across clients; each client keeps the objective.
    pub fn split_clients(&self, n_clients: usize) -> Result<Vec<LinearProblem>> {
        crate::data::partition_clients(&self.data, n_clients)?
            .into_iter()
            .map(|d| LinearProblem::new(self.objective, d))
            .collect()
    }

    fn check(&self, i: usize, x: &Point) -> Result<()> {
        check_dim(self.data.dim(), x.dim())?;
        if i >= self.data.len() {
            return Err(Error::invalid(format!("component {i} out of range (n = {})", self.data.len())));
        }
        Ok(())
    }
}

impl FiniteSum for LinearProblem {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn component_loss(&self, i: usize, x: &Point) -> Result<f64> {
        self.check(i, x)?;
        let row = self.data.row(i);
        let b = self.data.target(i);
        let value = match self.objective {
            Objective::RobustLinearRegression => robust_loss(b - row.dot(x.as_slice())).0,
            Objective::SigmoidSquared { lambda } => {
                sigmoid_squared_loss(row.dot(x.as_slice()) * b).0 + 0.5 * lambda * x.norm_sq()
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NumericalOverflow("component loss"))
        }
    }

    fn component_gradient_into(&self, i: usize, x: &Point, out: &mut Point) -> Result<()> {
        self.check(i, x)?;
        check_dim(self.data.dim(), out.dim())?;
        let row = self.data.row(i);
        let b = self.data.target(i);
        match self.objective {
            Objective::RobustLinearRegression => {
                out.fill(0.0);
                let (_, dl) = robust_loss(b - row.dot(x.as_slice()));
                row.axpy_into(-dl, out.as_mut_slice());
            }
            Objective::SigmoidSquared { lambda } => {
                out.as_mut_slice().copy_from_slice(x.as_slice());
                out.scale(lambda);
                let (_, dl) = sigmoid_squared_loss(row.dot(x.as_slice()) * b);
                row.axpy_into(dl * b, out.as_mut_slice());
            }
        }
        if out.is_finite() {
            Ok(())
        } else {
            Err(Error::NumericalOverflow("component gradient"))
        }
    }
}

/// One quadratic component `1/2 (x-c)^T A (x-c) + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadComponent {
    /// Row-major `d x d`, symmetric.
    pub matrix: Vec<f64>,
    pub center: Point,
    pub offset: f64,
}

/// Test-only family with analytically known `L`, `f*` and `grad f`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTest {
    dim: usize,
    components: Vec<QuadComponent>,
}

impl QuadraticTest {
    pub fn new(dim: usize, components: Vec<QuadComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        for c in &components {
            check_dim(dim * dim, c.matrix.len())?;
            check_dim(dim, c.center.dim())?;
            for r in 0..dim {
                for s in r + 1..dim {
                    if c.matrix[r * dim + s] != c.matrix[s * dim + r] {
                        return Err(Error::invalid("quadratic component matrix is not symmetric"));
                    }
                }
            }
        }
        Ok(QuadraticTest { dim, components })
    }

    /// `f_i(x) = 1/2 ||x - c_i||^2`.
    pub fn isotropic(centers: Vec<Point>) -> Result<Self> {
        let dim = centers.first().map_or(0, Point::dim);
        let components =
            centers.into_iter().map(|center| QuadComponent { matrix: identity(dim), center, offset: 0.0 }).collect();
        Self::new(dim, components)
    }

    /// Random components `A_i = shift*I + S_i` with `S_i` symmetric, entries
    /// uniform on `[-spread, spread)`. Individual components may be
    /// indefinite; centers are uniform on `[-1, 1)`.
    pub fn random(n: usize, dim: usize, shift: f64, spread: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut components = Vec::with_capacity(n);
        for _ in 0..n {
            let mut matrix = identity(dim);
            matrix.iter_mut().for_each(|v| *v *= shift);
            for r in 0..dim {
                for s in r..dim {
                    let v = rng.random_range(-spread..spread);
                    matrix[r * dim + s] += v;
                    if s != r {
                        matrix[s * dim + r] += v;
                    }
                }
            }
            let center: Point = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>().into();
            components.push(QuadComponent { matrix, center, offset: 0.0 });
        }
        Self::new(dim, components)
    }

    pub fn components(&self) -> &[QuadComponent] {
        &self.components
    }

    /// Exact `L = max_i ||A_i||_2`.
    pub fn smoothness(&self) -> f64 {
        self.components
            .iter()
            .map(|c| symmetric_eigenvalues(&c.matrix, self.dim).into_iter().map(libm::fabs).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Minimizer and minimum of `f`, when the averaged Hessian is positive definite.
    pub fn minimum(&self) -> Option<(Point, f64)> {
        let d = self.dim;
        let n = self.components.len() as f64;
        let mut hess = vec![0.0; d * d];
        let mut rhs = vec![0.0; d];
        for c in &self.components {
            for r in 0..d {
                for s in 0..d {
                    hess[r * d + s] += c.matrix[r * d + s] / n;
                    rhs[r] += c.matrix[r * d + s] * c.center[s] / n;
                }
            }
        }
        let x = cholesky_solve(hess, rhs, d)?;
        let x = Point::new(x);
        let value = objective_value(self, &x).ok()?;
        Some((x, value))
    }

    /// Contiguous split into `n_clients` problems of `floor(n / n_clients)` components.
    pub fn split_clients(&self, n_clients: usize) -> Result<Vec<QuadraticTest>> {
        if n_clients == 0 || n_clients > self.components.len() {
            return Err(Error::invalid("bad client count"));
        }
        let m = self.components.len() / n_clients;
        (0..n_clients).map(|k| Self::new(self.dim, self.components[k * m..(k + 1) * m].to_vec())).collect()
    }
}

impl FiniteSum for QuadraticTest {
    fn len(&self) -> usize {
        self.components.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn component_loss(&self, i: usize, x: &Point) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        let c = self.components.get(i).ok_or_else(|| Error::invalid("component out of range"))?;
        let diff = x.sub(&c.center);
        let d = self.dim;
        let mut quad = 0.0;
        for r in 0..d {
            let row: f64 = (0..d).map(|s| c.matrix[r * d + s] * diff[s]).sum();
            quad += diff[r] * row;
        }
        Ok(0.5 * quad + c.offset)
    }

    fn component_gradient_into(&self, i: usize, x: &Point, out: &mut Point) -> Result<()> {
        check_dim(self.dim, x.dim())?;
        check_dim(self.dim, out.dim())?;
        let c = self.components.get(i).ok_or_else(|| Error::invalid("component out of range"))?;
        let d = self.dim;
        for r in 0..d {
            out[r] = (0..d).map(|s| c.matrix[r * d + s] * (x[s] - c.center[s])).sum();
        }
        Ok(())
    }
}

/// Either objective family; what the harness drives.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Linear(LinearProblem),
    Quadratic(QuadraticTest),
}

impl Problem {
    pub fn smoothness(&self) -> Result<f64> {
        match self {
            Problem::Linear(p) => p.smoothness(),
            Problem::Quadratic(q) => {
                let l = q.smoothness();
                if l > 0.0 && l.is_finite() {
                    Ok(l)
                } else {
                    Err(Error::DegenerateSmoothness)
                }
            }
        }
    }

    /// The first `len` components as a problem of their own.
    pub fn prefix(&self, len: usize) -> Result<Problem> {
        if len == 0 || len > self.len() {
            return Err(Error::invalid("prefix length out of range"));
        }
        Ok(match self {
            Problem::Linear(p) => Problem::Linear(LinearProblem::new(p.objective(), p.data().slice(0, len)?)?),
            Problem::Quadratic(q) => Problem::Quadratic(QuadraticTest::new(q.dim(), q.components()[..len].to_vec())?),
        })
    }

    pub fn split_clients(&self, n_clients: usize) -> Result<Vec<Problem>> {
        Ok(match self {
            Problem::Linear(p) => p.split_clients(n_clients)?.into_iter().map(Problem::Linear).collect(),
            Problem::Quadratic(q) => q.split_clients(n_clients)?.into_iter().map(Problem::Quadratic).collect(),
        })
    }
}

impl FiniteSum for Problem {
    fn len(&self) -> usize {
        match self {
            Problem::Linear(p) => p.len(),
            Problem::Quadratic(q) => q.len(),
        }
    }
    fn dim(&self) -> usize {
        match self {
            Problem::Linear(p) => p.dim(),
            Problem::Quadratic(q) => q.dim(),
        }
    }
    fn component_loss(&self, i: usize, x: &Point) -> Result<f64> {
        match self {
            Problem::Linear(p) => p.component_loss(i, x),
            Problem::Quadratic(q) => q.component_loss(i, x),
        }
    }
    fn component_gradient_into(&self, i: usize, x: &Point, out: &mut Point) -> Result<()> {
        match self {
            Problem::Linear(p) => p.component_gradient_into(i, x, out),
            Problem::Quadratic(q) => q.component_gradient_into(i, x, out),
        }
    }
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for r in 0..d {
        m[r * d + r] = 1.0;
    }
    m
}

/// Eigenvalues of a symmetric row-major matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(matrix: &[f64], d: usize) -> Vec<f64> {
    let mut a = matrix.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|r| (0..d).filter(move |&s| s != r).map(move |s| (r, s)))
            .map(|(r, s)| a[r * d + s] * a[r * d + s])
            .sum();
        let diag: f64 = (0..d).map(|r| a[r * d + r] * a[r * d + r]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..d).map(|r| a[r * d + r]).collect()
}

fn cholesky_solve(mut a: Vec<f64>, mut b: Vec<f64>, d: usize) -> Option<Vec<f64>> {
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= a[j * d + k] * a[j * d + k];
        }
        if !(diag > 0.0) {
            return None;
        }
        let diag = libm::sqrt(diag);
        a[j * d + j] = diag;
        for i in j + 1..d {
            let mut v = a[i * d + j];
            for k in 0..j {
                v -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = v / diag;
        }
    }
    for i in 0..d {
        for k in 0..i {
            b[i] -= a[i * d + k] * b[k];
        }
        b[i] /= a[i * d + i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            b[i] -= a[k * d + i] * b[k];
        }
        b[i] /= a[i * d + i];
    }
    Some(b)
}
