//! Continuous-time physics-informed models.
//!
//! A network `(t, x) ↦ u` (or `(u, v)` for complex fields) is trained on
//! the mean-square misfit to initial/boundary data plus the mean-square
//! PDE residual at collocation points. The residuals are written once, on
//! autodiff variables; the training loss replays them per point on top of
//! the batched network jets.

use std::f64::consts::PI;

use crate::autodiff::{Compiled, Graph, Var};
use crate::batch::{ordered_sum, run_blocks, BLOCK};
use crate::error::{argument, structural, Error, Result};
use crate::jet::JetSpec;
use crate::metrics::SolutionGrid;
use crate::network::{MlpConfig, ParameterVector};
use crate::optimizer::{minimize_observed, IterationEvent, LbfgsConfig, OptimizeReport};
use crate::sampler::{lhs, subsample_indices, BoxDomain, Rng};
use crate::scalar::Real;

/// Viscosity of the Burgers benchmark, `0.01 / π`.
pub const BURGERS_VISCOSITY: f64 = 0.01 / PI;

/// `u_t + u u_x − (0.01/π) u_xx`.
pub fn burgers_residual<'g, T: Real>(u: Var<'g, T>, u_t: Var<'g, T>, u_x: Var<'g, T>, u_xx: Var<'g, T>) -> Var<'g, T> {
    u_t + u * u_x - u_xx * T::lit(BURGERS_VISCOSITY)
}

/// Real and imaginary parts of `i h_t + 0.5 h_xx + |h|² h` for `h = u + i v`.
pub fn schrodinger_residual<'g, T: Real>(
    u: Var<'g, T>,
    v: Var<'g, T>,
    u_t: Var<'g, T>,
    v_t: Var<'g, T>,
    u_xx: Var<'g, T>,
    v_xx: Var<'g, T>,
) -> (Var<'g, T>, Var<'g, T>) {
    let half = T::lit(0.5);
    let m = u * u + v * v;
    (-v_t + u_xx * half + m * u, u_t + v_xx * half + m * v)
}

/// PDE of a continuous-time problem. Inputs are ordered `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pde {
    Burgers,
    Schrodinger,
}

impl Pde {
    pub fn outputs(self) -> usize {
        match self {
            Pde::Burgers => 1,
            Pde::Schrodinger => 2,
        }
    }

    /// Residual components from per-output fields `[v, v_t, v_x, v_xx]`.
    pub fn residual<'g, T: Real>(self, fields: &[[Var<'g, T>; 4]]) -> Vec<Var<'g, T>> {
        match self {
            Pde::Burgers => {
                let [u, ut, ux, uxx] = fields[0];
                vec![burgers_residual(u, ut, ux, uxx)]
            }
            Pde::Schrodinger => {
                let [u, ut, _, uxx] = fields[0];
                let [v, vt, _, vxx] = fields[1];
                let (fu, fv) = schrodinger_residual(u, v, ut, vt, uxx, vxx);
                vec![fu, fv]
            }
        }
    }

    /// Squared residual norm at one point as a compiled function of the
    /// `4 * outputs` field values.
    fn head<T: Real>(self) -> Compiled<T> {
        let outputs = self.outputs();
        Graph::compile(4 * outputs, |g, x| {
            let fields: Vec<[Var<'_, T>; 4]> = x.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
            self.residual(&fields)
                .into_iter()
                .fold(g.constant(T::zero()), |acc, r| acc + r.square())
        })
    }

    /// Labels of the predicted grid components.
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            Pde::Burgers => &["u"],
            Pde::Schrodinger => &["u", "v", "h_abs"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `u = 0` at both ends, imposed through data points.
    DirichletZero,
    /// Equal values and x-derivatives at both ends, at the boundary times.
    PeriodicWithDerivative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtProblem<T> {
    pub pde: Pde,
    /// `(t, x)` box.
    pub domain: BoxDomain<T>,
    pub boundary: BoundaryKind,
    pub network: MlpConfig,
}

impl<T: Real> CtProblem<T> {
    /// Burgers on `t ∈ [0, 1]`, `x ∈ [−1, 1]` with a `2-8x20-1` network.
    pub fn burgers() -> Self {
        Self {
            pde: Pde::Burgers,
            domain: BoxDomain::new(vec![T::zero(), -T::one()], vec![T::one(), T::one()]).expect("valid box"),
            boundary: BoundaryKind::DirichletZero,
            network: MlpConfig::new(2, 8, 20, 1),
        }
    }

    /// Cubic Schrödinger on `t ∈ [0, π/2]`, `x ∈ [−5, 5]` with `2-4x100-2`.
    pub fn schrodinger() -> Self {
        Self {
            pde: Pde::Schrodinger,
            domain: BoxDomain::new(vec![T::zero(), T::lit(-5.0)], vec![T::lit(PI / 2.0), T::lit(5.0)])
                .expect("valid box"),
            boundary: BoundaryKind::PeriodicWithDerivative,
            network: MlpConfig::new(2, 4, 100, 2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.network.input_dim != 2 || self.domain.dim() != 2 {
            return Err(structural("continuous-time problems take (t, x) inputs"));
        }
        if self.network.output_dim != self.pde.outputs() {
            return Err(structural(format!(
                "{:?} needs {} network outputs, got {}",
                self.pde,
                self.pde.outputs(),
                self.network.output_dim
            )));
        }
        Ok(())
    }
}

/// Observed value(s) at `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint<T> {
    pub t: T,
    pub x: T,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CtTrainingSet<T> {
    /// Initial and boundary data: `{t_u, x_u, u}` or `{0, x_0, h_0}`.
    pub data: Vec<DataPoint<T>>,
    /// Times at which periodicity is imposed (`{t_b}`).
    pub boundary_times: Vec<T>,
    /// Collocation points `(t_f, x_f)`.
    pub collocation: Vec<[T; 2]>,
}

impl<T: Real> CtTrainingSet<T> {
    pub fn validate(&self, problem: &CtProblem<T>) -> Result<()> {
        let outputs = problem.pde.outputs();
        for p in &self.data {
            if p.values.len() != outputs {
                return Err(structural(format!(
                    "data point has {} values, expected {outputs}",
                    p.values.len()
                )));
            }
            if !problem.domain.contains(&[p.t, p.x]) {
                return Err(argument(format!("data point ({}, {}) outside the domain", p.t, p.x)));
            }
        }
        for c in &self.collocation {
            if !problem.domain.contains(c) {
                return Err(argument(format!(
                    "collocation point ({}, {}) outside the domain",
                    c[0], c[1]
                )));
            }
        }
        let (t0, t1) = (problem.domain.lower()[0], problem.domain.upper()[0]);
        if self.boundary_times.iter().any(|&t| t < t0 || t > t1) {
            return Err(argument("boundary time outside the domain"));
        }
        if !self.boundary_times.is_empty() && problem.boundary != BoundaryKind::PeriodicWithDerivative {
            return Err(argument("boundary times need a periodic boundary"));
        }
        match problem.pde {
            Pde::Schrodinger if self.data.is_empty() => Err(argument("initial data set is empty")),
            Pde::Schrodinger if self.boundary_times.is_empty() => Err(argument("boundary time set is empty")),
            _ if self.data.is_empty() && self.boundary_times.is_empty() && self.collocation.is_empty() => {
                Err(argument("training set is empty"))
            }
            _ => Ok(()),
        }
    }

    /// Add independent Gaussian noise of standard deviation `std` to every
    /// data value.
    pub fn add_noise(&mut self, std: f64, rng: &mut Rng) -> Result<()> {
        use rand_distr::{Distribution, Normal};
        if std == 0.0 {
            return Ok(());
        }
        let normal = Normal::new(0.0, std).map_err(|e| argument(e.to_string()))?;
        for p in &mut self.data {
            for v in &mut p.values {
                *v += T::lit(normal.sample(rng));
            }
        }
        Ok(())
    }
}

/// Loss value split into its terms (absent terms are zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms<T> {
    pub data: T,
    pub boundary: T,
    pub residual: T,
}

/// Mean over points of `Σ_o (y_o − d_o)²`: plain regression of the network
/// on the data, with its parameter gradient.
pub fn data_mse<T: Real>(
    config: &MlpConfig,
    params: &[T],
    data: &[DataPoint<T>],
    workers: usize,
) -> Result<(T, Vec<T>)> {
    if data.is_empty() {
        return Err(argument("regression on an empty data set"));
    }
    let pts: Vec<T> = data.iter().flat_map(|p| [p.t, p.x]).collect();
    let outputs = config.output_dim;
    let (contrib, mut grad) = run_blocks(
        config,
        params,
        &JetSpec::values(),
        &pts,
        workers,
        &(),
        true,
        |_, jet, start, adj, out| {
            for p in 0..jet.len() {
                let d = &data[start + p].values;
                let mut s = T::zero();
                for o in 0..outputs {
                    let r = jet.get(o, 0, p) - d[o];
                    s += r * r;
                    adj[jet.index(o, 0, p)] = r + r;
                }
                out.push(s);
            }
            Ok(())
        },
    )?;
    let n = T::from_usize(data.len()).expect("count fits");
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((ordered_sum(&contrib) / n, grad))
}

/// Prepared continuous-time loss for one problem and training set.
#[derive(Debug, Clone)]
pub struct CtLoss<'a, T> {
    problem: &'a CtProblem<T>,
    set: &'a CtTrainingSet<T>,
    head: Compiled<T>,
    boundary_points: Vec<T>,
    collocation_points: Vec<T>,
    workers: usize,
}

impl<'a, T: Real> CtLoss<'a, T> {
    pub fn new(problem: &'a CtProblem<T>, set: &'a CtTrainingSet<T>) -> Result<Self> {
        problem.validate()?;
        set.validate(problem)?;
        let (lo, hi) = (problem.domain.lower()[1], problem.domain.upper()[1]);
        let boundary_points = set.boundary_times.iter().flat_map(|&t| [t, lo, t, hi]).collect();
        let collocation_points = set.collocation.iter().flat_map(|c| [c[0], c[1]]).collect();
        Ok(Self {
            problem,
            set,
            head: problem.pde.head(),
            boundary_points,
            collocation_points,
            workers: 1,
        })
    }

    /// Evaluate blocks on up to `workers` threads of the current rayon pool.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// Loss value; writes the parameter gradient into `grad`.
    pub fn evaluate(&self, params: &[T], grad: &mut [T]) -> Result<T> {
        let (terms, g) = self.evaluate_terms(params, true)?;
        grad.copy_from_slice(&g);
        Ok(self.total(&terms))
    }

    pub fn terms(&self, params: &[T]) -> Result<LossTerms<T>> {
        Ok(self.evaluate_terms(params, false)?.0)
    }

    fn total(&self, t: &LossTerms<T>) -> T {
        let mut total: Option<T> = None;
        let mut add = |v: T| total = Some(total.map_or(v, |a| a + v));
        if !self.set.data.is_empty() {
            add(t.data);
        }
        if !self.set.boundary_times.is_empty() {
            add(t.boundary);
        }
        if !self.set.collocation.is_empty() {
            add(t.residual);
        }
        total.unwrap_or_else(T::zero)
    }

    fn evaluate_terms(&self, params: &[T], want_grad: bool) -> Result<(LossTerms<T>, Vec<T>)> {
        let config = &self.problem.network;
        if params.len() != config.parameter_count() {
            return Err(structural("parameter count mismatch"));
        }
        let mut grad: Option<Vec<T>> = None;
        let mut merge = |g: Vec<T>| match &mut grad {
            None => grad = Some(g),
            Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, &b)| *a += b),
        };
        let mut terms = LossTerms {
            data: T::zero(),
            boundary: T::zero(),
            residual: T::zero(),
        };

        if !self.set.data.is_empty() {
            if want_grad {
                let (v, g) = data_mse(config, params, &self.set.data, self.workers)?;
                terms.data = v;
                merge(g);
            } else {
                terms.data = self.data_value(params)?;
            }
        }
        if !self.set.boundary_times.is_empty() {
            let (v, g) = self.periodic_term(params, want_grad)?;
            terms.boundary = v;
            if want_grad {
                merge(g);
            }
        }
        if !self.set.collocation.is_empty() {
            let (v, g) = self.residual_term(params, want_grad)?;
            terms.residual = v;
            if want_grad {
                merge(g);
            }
        }
        Ok((terms, grad.unwrap_or_else(|| vec![T::zero(); params.len()])))
    }

    fn data_value(&self, params: &[T]) -> Result<T> {
        // Same arithmetic as `data_mse`, minus the reverse sweep.
        let config = &self.problem.network;
        let data = &self.set.data;
        let pts: Vec<T> = data.iter().flat_map(|p| [p.t, p.x]).collect();
        let (contrib, _) = run_blocks(
            config,
            params,
            &JetSpec::values(),
            &pts,
            self.workers,
            &(),
            false,
            |_, jet, start, _, out| {
                for p in 0..jet.len() {
                    let d = &data[start + p].values;
                    let mut s = T::zero();
                    for (o, &dv) in d.iter().enumerate() {
                        let r = jet.get(o, 0, p) - dv;
                        s += r * r;
                    }
                    out.push(s);
                }
                Ok(())
            },
        )?;
        Ok(ordered_sum(&contrib) / T::from_usize(data.len()).expect("count fits"))
    }

    /// `1/N_b Σ_b Σ_o (v_o(t_b, lo) − v_o(t_b, hi))² + (∂_x v_o(t_b, lo) − ∂_x v_o(t_b, hi))²`.
    fn periodic_term(&self, params: &[T], want_grad: bool) -> Result<(T, Vec<T>)> {
        let config = &self.problem.network;
        let spec = JetSpec::new(vec![1], None)?;
        let outputs = config.output_dim;
        let (contrib, mut grad) = run_blocks(
            config,
            params,
            &spec,
            &self.boundary_points,
            self.workers,
            &(),
            want_grad,
            |_, jet, _, adj, out| {
                for pair in 0..jet.len() / 2 {
                    let (a, b) = (2 * pair, 2 * pair + 1);
                    let mut s = T::zero();
                    for o in 0..outputs {
                        for c in 0..2 {
                            let r = jet.get(o, c, a) - jet.get(o, c, b);
                            s += r * r;
                            adj[jet.index(o, c, a)] = r + r;
                            adj[jet.index(o, c, b)] = -(r + r);
                        }
                    }
                    out.push(s);
                }
                Ok(())
            },
        )?;
        let n = T::from_usize(self.set.boundary_times.len()).expect("count fits");
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((ordered_sum(&contrib) / n, grad))
    }

    /// `1/N_f Σ_i Σ_k f_k(t_i, x_i)²`.
    fn residual_term(&self, params: &[T], want_grad: bool) -> Result<(T, Vec<T>)> {
        let config = &self.problem.network;
        let spec = JetSpec::new(vec![0, 1], Some(1))?;
        let outputs = config.output_dim;
        let (contrib, mut grad) = run_blocks(
            config,
            params,
            &spec,
            &self.collocation_points,
            self.workers,
            &self.head,
            want_grad,
            |head, jet, _, adj, out| {
                let mut args = vec![T::zero(); 4 * outputs];
                let mut dargs = vec![T::zero(); 4 * outputs];
                for p in 0..jet.len() {
                    for o in 0..outputs {
                        for c in 0..4 {
                            args[4 * o + c] = jet.get(o, c, p);
                        }
                    }
                    out.push(head.call(&args, &mut dargs)?);
                    for o in 0..outputs {
                        for c in 0..4 {
                            adj[jet.index(o, c, p)] = dargs[4 * o + c];
                        }
                    }
                }
                Ok(())
            },
        )?;
        let n = T::from_usize(self.set.collocation.len()).expect("count fits");
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((ordered_sum(&contrib) / n, grad))
    }
}

/// Loss and parameter gradient.
pub fn ct_loss<T: Real>(problem: &CtProblem<T>, params: &[T], set: &CtTrainingSet<T>) -> Result<(T, Vec<T>)> {
    let loss = CtLoss::new(problem, set)?;
    let mut grad = vec![T::zero(); params.len()];
    let v = loss.evaluate(params, &mut grad)?;
    Ok((v, grad))
}

/// The same loss recorded point by point on a single autodiff graph.
/// Much slower than [`ct_loss`]; used as its reference.
pub fn ct_loss_tape<T: Real>(problem: &CtProblem<T>, params: &[T], set: &CtTrainingSet<T>) -> Result<(T, Vec<T>)> {
    problem.validate()?;
    set.validate(problem)?;
    let config = &problem.network;
    let g = Graph::new();
    let pv: Vec<Var<'_, T>> = params.iter().map(|&v| g.variable(v)).collect();
    let zero = g.constant(T::zero());
    let mean = |terms: Vec<_>| {
        let n = T::from_usize(terms.len()).expect("count fits");
        terms.into_iter().fold(zero, |a, b| a + b) / n
    };
    let mut total = None;
    let mut add = |v| total = Some(total.map_or(v, |a| a + v));

    if !set.data.is_empty() {
        let mut terms = Vec::new();
        for p in &set.data {
            let out = config.forward(&pv, &[g.constant(p.t), g.constant(p.x)])?;
            let s = out.iter().zip(&p.values).fold(zero, |a, (&y, &d)| a + (y - d).square());
            terms.push(s);
        }
        add(mean(terms));
    }
    if !set.boundary_times.is_empty() {
        let (lo, hi) = (problem.domain.lower()[1], problem.domain.upper()[1]);
        let mut terms = Vec::new();
        for &t in &set.boundary_times {
            let tv = g.constant(t);
            let (xa, xb) = (g.variable(lo), g.variable(hi));
            let ya = config.forward(&pv, &[tv, xa])?;
            let yb = config.forward(&pv, &[tv, xb])?;
            let mut s = zero;
            for (&a, &b) in ya.iter().zip(&yb) {
                let da = g.grad(a, &[xa])?[0];
                let db = g.grad(b, &[xb])?[0];
                s = s + (a - b).square() + (da - db).square();
            }
            terms.push(s);
        }
        add(mean(terms));
    }
    if !set.collocation.is_empty() {
        let mut terms = Vec::new();
        for c in &set.collocation {
            let (tv, xv) = (g.variable(c[0]), g.variable(c[1]));
            let out = config.forward(&pv, &[tv, xv])?;
            let mut fields = Vec::new();
            for &u in &out {
                let d = g.grad(u, &[tv, xv])?;
                let uxx = g.grad(d[1], &[xv])?[0];
                fields.push([u, d[0], d[1], uxx]);
            }
            let s = problem
                .pde
                .residual(&fields)
                .into_iter()
                .fold(zero, |a, r| a + r.square());
            terms.push(s);
        }
        add(mean(terms));
    }
    let total = total.unwrap_or(zero);
    let grad = g.grad(total, &pv)?;
    Ok((total.value(), grad.iter().map(|v| v.value()).collect()))
}

/// Initialize the network from `seed` and minimize the loss.
pub fn train_ct<T: Real>(
    problem: &CtProblem<T>,
    set: &CtTrainingSet<T>,
    seed: u64,
    config: &LbfgsConfig,
) -> Result<(ParameterVector<T>, OptimizeReport<T>)> {
    train_ct_observed(problem, set, seed, config, 1, |_| {})
}

/// [`train_ct`] with a worker count and a per-iteration observer.
pub fn train_ct_observed<T: Real>(
    problem: &CtProblem<T>,
    set: &CtTrainingSet<T>,
    seed: u64,
    config: &LbfgsConfig,
    workers: usize,
    observer: impl FnMut(&IterationEvent<T>),
) -> Result<(ParameterVector<T>, OptimizeReport<T>)> {
    let loss = CtLoss::new(problem, set)?.with_workers(workers);
    let x0 = problem.network.init::<T>(seed);
    let report = minimize_with(|x, g| loss.evaluate(x, g), x0.as_slice(), config, observer)?;
    let params = ParameterVector::new(&problem.network, report.params.clone())?;
    Ok((params, report))
}

/// Run the optimizer on a fallible objective; the first error aborts the
/// run and is returned.
pub(crate) fn minimize_with<T: Real>(
    mut f: impl FnMut(&[T], &mut [T]) -> Result<T>,
    x0: &[T],
    config: &LbfgsConfig,
    observer: impl FnMut(&IterationEvent<T>),
) -> Result<OptimizeReport<T>> {
    let mut failure: Option<Error> = None;
    let report = minimize_observed(
        |x: &[T], g: &mut [T]| {
            if failure.is_some() {
                return T::nan();
            }
            match f(x, g) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    T::nan()
                }
            }
        },
        x0,
        config,
        observer,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let report = report?;
    if !report.objective.is_finite() {
        return Err(Error::Numerical("training ended on a non-finite loss".into()));
    }
    Ok(report)
}

/// Network prediction on the tensor grid `t × x`. Schrödinger grids also
/// carry `h_abs = sqrt(u² + v²)`.
pub fn predict_grid<T: Real>(problem: &CtProblem<T>, params: &[T], t: &[T], x: &[T]) -> Result<SolutionGrid<T>> {
    problem.validate()?;
    let config = &problem.network;
    let mut grid = SolutionGrid::new(t.to_vec(), x.to_vec())?;
    let pts: Vec<T> = t
        .iter()
        .flat_map(|&ti| x.iter().flat_map(move |&xj| [ti, xj]))
        .collect();
    let outputs = config.output_dim;
    let mut columns: Vec<Vec<T>> = vec![Vec::with_capacity(t.len() * x.len()); outputs];
    for chunk in pts.chunks(2 * BLOCK) {
        let jet = crate::jet::Jet::forward(config, params, &JetSpec::values(), chunk)?;
        for (o, col) in columns.iter_mut().enumerate() {
            col.extend_from_slice(jet.output_values(o));
        }
    }
    if problem.pde == Pde::Schrodinger {
        let abs: Vec<T> = columns[0]
            .iter()
            .zip(&columns[1])
            .map(|(&u, &v)| (u * u + v * v).sqrt())
            .collect();
        columns.push(abs);
    }
    for (label, values) in problem.pde.labels().iter().zip(columns) {
        grid.push(*label, values, None)?;
    }
    Ok(grid)
}

/// Burgers data as in the benchmark: `n_u` points drawn from the reference
/// grid, half on the initial row and half on the two boundary columns,
/// plus `n_f` Latin-hypercube collocation points.
pub fn burgers_training_set<T: Real>(
    problem: &CtProblem<T>,
    reference: &SolutionGrid<T>,
    n_u: usize,
    n_f: usize,
    rng: &mut Rng,
) -> Result<CtTrainingSet<T>> {
    let u = reference
        .component("u")
        .ok_or_else(|| argument("reference grid has no u component"))?;
    let field = u.exact.as_ref().unwrap_or(&u.values);
    let (t, x) = (reference.t(), reference.x());
    let nx = x.len();

    let mut candidates_ic: Vec<DataPoint<T>> = Vec::with_capacity(nx);
    for (j, &xj) in x.iter().enumerate() {
        candidates_ic.push(DataPoint {
            t: t[0],
            x: xj,
            values: vec![field[j]],
        });
    }
    let mut candidates_bc: Vec<DataPoint<T>> = Vec::with_capacity(2 * t.len());
    for (i, &ti) in t.iter().enumerate() {
        for j in [0, nx - 1] {
            candidates_bc.push(DataPoint {
                t: ti,
                x: x[j],
                values: vec![field[i * nx + j]],
            });
        }
    }
    let n_ic = n_u / 2;
    let n_bc = n_u - n_ic;
    let mut data = Vec::with_capacity(n_u);
    for i in subsample_indices(candidates_ic.len(), n_ic, rng)? {
        data.push(candidates_ic[i].clone());
    }
    for i in subsample_indices(candidates_bc.len(), n_bc, rng)? {
        data.push(candidates_bc[i].clone());
    }
    let collocation = lhs(&problem.domain, n_f, rng)
        .into_iter()
        .map(|p| [p[0], p[1]])
        .collect();
    Ok(CtTrainingSet {
        data,
        boundary_times: Vec::new(),
        collocation,
    })
}

/// Schrödinger data: `n_0` initial points from the first row of the
/// reference, `n_b` boundary times from its t-grid and `n_f` collocation
/// points.
pub fn schrodinger_training_set<T: Real>(
    problem: &CtProblem<T>,
    reference: &SolutionGrid<T>,
    n_0: usize,
    n_b: usize,
    n_f: usize,
    rng: &mut Rng,
) -> Result<CtTrainingSet<T>> {
    let pick = |label: &str| -> Result<&Vec<T>> {
        let c = reference
            .component(label)
            .ok_or_else(|| argument(format!("reference grid has no {label} component")))?;
        Ok(c.exact.as_ref().unwrap_or(&c.values))
    };
    let (u, v) = (pick("u")?, pick("v")?);
    let (t, x) = (reference.t(), reference.x());
    let mut data = Vec::with_capacity(n_0);
    for j in subsample_indices(x.len(), n_0, rng)? {
        data.push(DataPoint {
            t: t[0],
            x: x[j],
            values: vec![u[j], v[j]],
        });
    }
    let boundary_times = subsample_indices(t.len(), n_b, rng)?
        .into_iter()
        .map(|i| t[i])
        .collect();
    let collocation = lhs(&problem.domain, n_f, rng)
        .into_iter()
        .map(|p| [p[0], p[1]])
        .collect();
    Ok(CtTrainingSet {
        data,
        boundary_times,
        collocation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::rng;
    use approx::assert_relative_eq;

    fn eval_burgers(u: f64, ut: f64, ux: f64, uxx: f64) -> f64 {
        let g = Graph::new();
        let r = burgers_residual(g.variable(u), g.variable(ut), g.variable(ux), g.variable(uxx));
        r.value()
    }

    fn eval_nls(a: [f64; 6]) -> (f64, f64) {
        let g = Graph::new();
        let v: Vec<_> = a.iter().map(|&x| g.variable(x)).collect();
        let (fu, fv) = schrodinger_residual(v[0], v[1], v[2], v[3], v[4], v[5]);
        (fu.value(), fv.value())
    }

    #[test]
    fn burgers_residual_examples() {
        assert_eq!(eval_burgers(0.0, 0.0, 0.0, 0.0), 0.0);
        assert_relative_eq!(eval_burgers(0.3, 0.0, 1.0, 0.0), 0.3, epsilon = 1e-15);
        // u = sin(πx) e^{-t} at (0, 0.25), derivatives by hand.
        let s = (PI / 4.0).sin();
        let c = (PI / 4.0).cos();
        let (u, ut, ux, uxx) = (s, -s, PI * c, -PI * PI * s);
        let expected = -s + s * PI * c + BURGERS_VISCOSITY * PI * PI * s;
        assert_relative_eq!(eval_burgers(u, ut, ux, uxx), expected, epsilon = 1e-14);
    }

    #[test]
    fn burgers_residual_is_linear_in_time_and_diffusion() {
        let (u, ut, ux, uxx) = (0.4, -1.3, 2.1, 0.7);
        let base = eval_burgers(u, 0.0, ux, 0.0);
        for (a, b) in [(2.0, -1.0), (0.5, 3.0), (-4.0, 0.25)] {
            let d = eval_burgers(u, a * ut, ux, b * uxx) - base;
            assert!((d - (a * ut - BURGERS_VISCOSITY * b * uxx)).abs() < 1e-12);
        }
    }

    #[test]
    fn schrodinger_residual_examples() {
        assert_eq!(eval_nls([0.0; 6]), (0.0, 0.0));
        assert_eq!(eval_nls([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), (1.0, 0.0));
        // h = exp(i(x - ωt)) with ω = 0.5 - 1 = -0.5 solves the equation.
        let omega = -0.5;
        for k in 0..5 {
            let (t, x) = (0.1 * k as f64, -1.0 + 0.45 * k as f64);
            let th = x - omega * t;
            let (u, v) = (th.cos(), th.sin());
            let (ut, vt) = (omega * v, -omega * u);
            let (uxx, vxx) = (-u, -v);
            let (fu, fv) = eval_nls([u, v, ut, vt, uxx, vxx]);
            assert!(fu.abs() < 1e-14 && fv.abs() < 1e-14, "{fu} {fv}");
        }
        // A wrong frequency does not.
        let (fu, fv) = eval_nls([1.0, 0.0, 0.0, 0.3, -1.0, 0.0]);
        assert!(fu.abs() + fv.abs() > 0.1);
    }

    #[test]
    fn schrodinger_gauge_symmetry() {
        let a = [0.3, -0.8, 1.1, 0.4, -0.6, 2.0];
        let (fu, fv) = eval_nls(a);
        for phi in [0.3, 1.7, -2.2] {
            let (c, s) = (f64::cos(phi), f64::sin(phi));
            let rot = |x: f64, y: f64| (c * x - s * y, s * x + c * y);
            let (u, v) = rot(a[0], a[1]);
            let (ut, vt) = rot(a[2], a[3]);
            let (uxx, vxx) = rot(a[4], a[5]);
            let (gu, gv) = eval_nls([u, v, ut, vt, uxx, vxx]);
            let (eu, ev) = rot(fu, fv);
            assert!((gu - eu).abs() < 1e-12 && (gv - ev).abs() < 1e-12);
        }
    }

    fn small_burgers() -> (CtProblem<f64>, CtTrainingSet<f64>) {
        let mut p = CtProblem::<f64>::burgers();
        p.network = MlpConfig::new(2, 1, 8, 1);
        let mut r = rng(11);
        let data = lhs(&p.domain, 5, &mut r)
            .into_iter()
            .map(|q| DataPoint {
                t: q[0],
                x: q[1],
                values: vec![(PI * q[1]).sin() * 0.5],
            })
            .collect();
        let collocation = lhs(&p.domain, 5, &mut r).into_iter().map(|q| [q[0], q[1]]).collect();
        (
            p,
            CtTrainingSet {
                data,
                boundary_times: vec![],
                collocation,
            },
        )
    }

    fn small_nls() -> (CtProblem<f64>, CtTrainingSet<f64>) {
        let mut p = CtProblem::<f64>::schrodinger();
        p.network = MlpConfig::new(2, 2, 6, 2);
        let mut r = rng(12);
        let data = (0..4)
            .map(|k| {
                let x = -4.0 + 2.2 * k as f64;
                DataPoint {
                    t: 0.0,
                    x,
                    values: vec![2.0 / x.cosh(), 0.0],
                }
            })
            .collect();
        let collocation = lhs(&p.domain, 6, &mut r).into_iter().map(|q| [q[0], q[1]]).collect();
        (
            p,
            CtTrainingSet {
                data,
                boundary_times: vec![0.1, 0.9, 1.4],
                collocation,
            },
        )
    }

    fn check_fast_against_tape(p: &CtProblem<f64>, s: &CtTrainingSet<f64>, seed: u64) {
        let params = p.network.init::<f64>(seed);
        let (v, g) = ct_loss(p, &params, s).unwrap();
        let (vt, gt) = ct_loss_tape(p, &params, s).unwrap();
        assert_relative_eq!(v, vt, max_relative = 1e-12);
        for (a, b) in g.iter().zip(&gt) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn batched_loss_matches_tape_route() {
        let (p, s) = small_burgers();
        check_fast_against_tape(&p, &s, 3);
        let (p, s) = small_nls();
        check_fast_against_tape(&p, &s, 4);
    }

    fn fd_check(p: &CtProblem<f64>, s: &CtTrainingSet<f64>, seed: u64) {
        let params = p.network.init::<f64>(seed).into_inner();
        let (_, g) = ct_loss(p, &params, s).unwrap();
        let h = 1e-6;
        for i in 0..params.len() {
            let mut a = params.clone();
            a[i] += h;
            let mut b = params.clone();
            b[i] -= h;
            let fd = (ct_loss(p, &a, s).unwrap().0 - ct_loss(p, &b, s).unwrap().0) / (2.0 * h);
            let scale = g[i].abs().max(fd.abs()).max(1e-6);
            assert!((g[i] - fd).abs() / scale < 1e-4, "param {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (p, s) = small_burgers();
        fd_check(&p, &s, 5);
        let (p, s) = small_nls();
        fd_check(&p, &s, 6);
    }

    #[test]
    fn without_collocation_the_loss_is_regression() {
        let (p, mut s) = small_burgers();
        s.collocation.clear();
        let params = p.network.init::<f64>(9);
        let (v, g) = ct_loss(&p, &params, &s).unwrap();
        let (vr, gr) = data_mse(&p.network, &params, &s.data, 1).unwrap();
        assert_eq!(v.to_bits(), vr.to_bits());
        assert!(g.iter().zip(&gr).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn zero_network_on_zero_data_has_zero_loss() {
        let (p, mut s) = small_burgers();
        s.data.iter_mut().for_each(|d| d.values[0] = 0.0);
        let zeros = ParameterVector::<f64>::zeros(&p.network);
        assert_eq!(ct_loss(&p, &zeros, &s).unwrap().0, 0.0);
    }

    #[test]
    fn duplicating_points_keeps_the_mean() {
        let (p, s) = small_burgers();
        let mut twice = s.clone();
        twice.data.extend(s.data.clone());
        twice.collocation.extend(s.collocation.clone());
        let params = p.network.init::<f64>(2);
        let a = ct_loss(&p, &params, &s).unwrap().0;
        let b = ct_loss(&p, &params, &twice).unwrap().0;
        assert_relative_eq!(a, b, max_relative = 1e-14);
        assert!(a > 0.0);
    }

    #[test]
    fn workers_do_not_change_the_result() {
        let mut p = CtProblem::<f64>::burgers();
        p.network = MlpConfig::new(2, 2, 5, 1);
        let set = CtTrainingSet {
            data: vec![],
            boundary_times: vec![],
            collocation: lhs(&p.domain, 3 * BLOCK + 17, &mut rng(1))
                .into_iter()
                .map(|q| [q[0], q[1]])
                .collect(),
        };
        let params = p.network.init::<f64>(1);
        let one = CtLoss::new(&p, &set).unwrap();
        let four = CtLoss::new(&p, &set).unwrap().with_workers(4);
        let (mut g1, mut g4) = (vec![0.0; params.len()], vec![0.0; params.len()]);
        assert_eq!(
            one.evaluate(&params, &mut g1).unwrap(),
            four.evaluate(&params, &mut g4).unwrap()
        );
        assert_eq!(g1, g4);
        assert_eq!(
            one.terms(&params).unwrap().residual,
            one.evaluate(&params, &mut g1).unwrap()
        );
    }

    #[test]
    fn required_sets_are_checked() {
        let (p, s) = small_nls();
        let mut no_ic = s.clone();
        no_ic.data.clear();
        assert!(matches!(CtLoss::new(&p, &no_ic), Err(Error::Argument(_))));
        let mut no_b = s;
        no_b.boundary_times.clear();
        assert!(matches!(CtLoss::new(&p, &no_b), Err(Error::Argument(_))));
        let (p, _) = small_burgers();
        assert!(matches!(
            CtLoss::new(&p, &CtTrainingSet::default()),
            Err(Error::Argument(_))
        ));
        let outside = CtTrainingSet {
            collocation: vec![[2.0, 0.0]],
            ..CtTrainingSet::default()
        };
        assert!(CtLoss::new(&p, &outside).is_err());
    }

    #[test]
    fn prediction_grid() {
        let (p, _) = small_burgers();
        let zeros = ParameterVector::<f64>::zeros(&p.network);
        let g = predict_grid(&p, &zeros, &[0.0, 0.5], &[-1.0, 0.0, 1.0]).unwrap();
        assert!(g.component("u").unwrap().values.iter().all(|&v| v == 0.0));
        let params = p.network.init::<f64>(4);
        let g = predict_grid(&p, &params, &[0.3], &[0.2]).unwrap();
        assert_relative_eq!(
            g.at(0, 0, 0),
            p.network.eval(&params, &[0.3, 0.2]).unwrap()[0],
            epsilon = 1e-15
        );
        let (pn, _) = small_nls();
        let params = pn.network.init::<f64>(4);
        let g = predict_grid(&pn, &params, &[0.3], &[0.2, 1.0]).unwrap();
        let y = pn.network.eval(&params, &[0.3, 1.0]).unwrap();
        assert_relative_eq!(g.row("h_abs", 0).unwrap()[1], y[0].hypot(y[1]), epsilon = 1e-14);
    }

    #[test]
    fn short_training_reduces_the_loss() {
        let (p, s) = small_burgers();
        let cfg = LbfgsConfig {
            max_iterations: 30,
            ..LbfgsConfig::default()
        };
        let (params, report) = train_ct(&p, &s, 7, &cfg).unwrap();
        assert!(report.objective < report.history[0]);
        assert_eq!(ct_loss(&p, &params, &s).unwrap().0, report.objective);
        let (_, again) = train_ct(&p, &s, 7, &cfg).unwrap();
        assert_eq!(again, report);
    }
}
