//! Discrete-time physics-informed models.
//!
//! A network `x ↦ [u^{n+c_1}, …, u^{n+c_q}, u^{n+1}]` is trained so that
//! every implicit Runge-Kutta reconstruction of the data-time solution,
//!
//! ```text
//! u^n_i     = u^{n+c_i} + Δt Σ_j a_ij N[u^{n+c_j}]   (i = 1..q)
//! u^n_{q+1} = u^{n+1}   + Δt Σ_j b_j  N[u^{n+c_j}]
//! ```
//!
//! matches the snapshot at time `t^n`. Losses are sums of squares.

use crate::autodiff::{Compiled, Graph, Var};
use crate::batch::{ordered_sum, run_blocks};
use crate::ct::{minimize_with, BURGERS_VISCOSITY};
use crate::error::{argument, structural, Result};
use crate::jet::{Jet, JetSpec};
use crate::metrics::SolutionGrid;
use crate::network::{MlpConfig, ParameterVector};
use crate::optimizer::{IterationEvent, LbfgsConfig, OptimizeReport};
use crate::sampler::{subsample_indices, BoxDomain, Rng};
use crate::scalar::Real;
use pinn_tableau::ButcherTableau;

/// `u u_x − (0.01/π) u_xx`.
pub fn burgers_operator<'g, T: Real>(u: Var<'g, T>, u_x: Var<'g, T>, u_xx: Var<'g, T>) -> Var<'g, T> {
    u * u_x - u_xx * T::lit(BURGERS_VISCOSITY)
}

/// `−0.0001 u_xx + 5 u³ − 5 u`.
pub fn allen_cahn_operator<'g, T: Real>(u: Var<'g, T>, u_xx: Var<'g, T>) -> Var<'g, T> {
    u.powi(3) * T::lit(5.0) - u * T::lit(5.0) - u_xx * T::lit(1e-4)
}

/// Spatial operator `N[u]` of a discrete-time problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Burgers,
    AllenCahn,
}

impl Operator {
    pub fn apply<'g, T: Real>(self, u: Var<'g, T>, u_x: Var<'g, T>, u_xx: Var<'g, T>) -> Var<'g, T> {
        match self {
            Operator::Burgers => burgers_operator(u, u_x, u_xx),
            Operator::AllenCahn => allen_cahn_operator(u, u_xx),
        }
    }

    /// `N` as a compiled function of `(u, u_x, u_xx)`.
    fn head<T: Real>(self) -> Compiled<T> {
        Graph::compile(3, |_, a| self.apply(a[0], a[1], a[2]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtBoundary {
    /// Every output vanishes at both ends.
    DirichletZero,
    /// Every output has equal values and x-derivatives at both ends.
    Periodic,
}

#[derive(Debug, Clone)]
pub struct DtProblem<T> {
    pub operator: Operator,
    pub boundary: DtBoundary,
    pub tableau: ButcherTableau,
    /// Step from the snapshot time to the prediction time.
    pub dt: T,
    /// Spatial interval.
    pub domain: BoxDomain<T>,
    /// One input, `q + 1` outputs.
    pub network: MlpConfig,
}

impl<T: Real> DtProblem<T> {
    /// Burgers on `[−1, 1]` with zero Dirichlet data, `1-3x50-(q+1)`.
    pub fn burgers(tableau: ButcherTableau, dt: T) -> Self {
        let q = tableau.q();
        Self {
            operator: Operator::Burgers,
            boundary: DtBoundary::DirichletZero,
            tableau,
            dt,
            domain: BoxDomain::new(vec![-T::one()], vec![T::one()]).expect("valid interval"),
            network: MlpConfig::new(1, 3, 50, q + 1),
        }
    }

    /// Allen–Cahn on `[−1, 1]` with periodic boundaries, `1-4x200-(q+1)`.
    pub fn allen_cahn(tableau: ButcherTableau, dt: T) -> Self {
        let q = tableau.q();
        Self {
            operator: Operator::AllenCahn,
            boundary: DtBoundary::Periodic,
            tableau,
            dt,
            domain: BoxDomain::new(vec![-T::one()], vec![T::one()]).expect("valid interval"),
            network: MlpConfig::new(1, 4, 200, q + 1),
        }
    }

    pub fn q(&self) -> usize {
        self.tableau.q()
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.network.input_dim != 1 || self.domain.dim() != 1 {
            return Err(structural("discrete-time problems take a single x input"));
        }
        if self.network.output_dim != self.q() + 1 {
            return Err(structural(format!(
                "network has {} outputs, a {}-stage scheme needs {}",
                self.network.output_dim,
                self.q(),
                self.q() + 1
            )));
        }
        if !(self.dt >= T::zero()) || !self.dt.is_finite() {
            return Err(argument("time step must be finite and non-negative"));
        }
        Ok(())
    }

    /// Rows of `[A; bᵀ]` as a `(q+1) × q` row-major matrix.
    fn stacked_tableau(&self) -> Vec<T> {
        let t = &self.tableau;
        t.a_matrix().iter().chain(t.b()).map(|&v| T::lit(v)).collect()
    }
}

/// `log10(Δt^{2q})`, the order of the scheme's local error; evaluated in
/// log space because the power itself underflows for large `q`.
pub fn step_error_log10(dt: f64, q: usize) -> f64 {
    2.0 * q as f64 * dt.log10()
}

/// Observations `{x^{n,i}, u^{n,i}}` at time `t^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtSnapshot<T> {
    pub t: T,
    pub x: Vec<T>,
    pub u: Vec<T>,
}

impl<T: Real> DtSnapshot<T> {
    /// `n` points drawn without replacement from row `t_index` of a grid
    /// component (its reference values if present).
    pub fn sample(grid: &SolutionGrid<T>, label: &str, t_index: usize, n: usize, rng: &mut Rng) -> Result<Self> {
        let c = grid
            .component(label)
            .ok_or_else(|| argument(format!("grid has no component {label}")))?;
        if t_index >= grid.t().len() {
            return Err(argument(format!("time index {t_index} out of range")));
        }
        let field = c.exact.as_ref().unwrap_or(&c.values);
        let nx = grid.x().len();
        let idx = subsample_indices(nx, n, rng)?;
        Ok(Self {
            t: grid.t()[t_index],
            x: idx.iter().map(|&j| grid.x()[j]).collect(),
            u: idx.iter().map(|&j| field[t_index * nx + j]).collect(),
        })
    }

    /// Add independent Gaussian noise of standard deviation `std` to every
    /// observed value.
    pub fn add_noise(&mut self, std: f64, rng: &mut Rng) -> Result<()> {
        use rand_distr::{Distribution, Normal};
        if std == 0.0 {
            return Ok(());
        }
        let normal = Normal::new(0.0, std).map_err(|e| argument(e.to_string()))?;
        for v in &mut self.u {
            *v += T::lit(normal.sample(rng));
        }
        Ok(())
    }

    fn validate(&self, problem: &DtProblem<T>) -> Result<()> {
        if self.x.is_empty() {
            return Err(argument("snapshot is empty"));
        }
        if self.x.len() != self.u.len() {
            return Err(structural("snapshot points and values differ in length"));
        }
        if self.x.iter().any(|&x| !problem.domain.contains(&[x])) {
            return Err(argument("snapshot point outside the domain"));
        }
        Ok(())
    }
}

/// The `q + 1` network outputs at `x`, recorded on the graph of `x`.
pub fn stage_outputs<'g, T: Real>(
    problem: &DtProblem<T>,
    params: &[Var<'g, T>],
    x: Var<'g, T>,
) -> Result<Vec<Var<'g, T>>> {
    problem.validate()?;
    problem.network.forward(params, &[x])
}

/// The `q + 1` reconstructions of `u^n` at `x`. `x` must be a variable so
/// the stage derivatives can be taken.
pub fn dt_residuals<'g, T: Real>(
    problem: &DtProblem<T>,
    params: &[Var<'g, T>],
    x: Var<'g, T>,
) -> Result<Vec<Var<'g, T>>> {
    let out = stage_outputs(problem, params, x)?;
    let q = problem.q();
    let g = x.graph();
    let mut ops = Vec::with_capacity(q);
    for &u in &out[..q] {
        let ux = g.grad(u, &[x])?[0];
        let uxx = g.grad(ux, &[x])?[0];
        ops.push(problem.operator.apply(u, ux, uxx));
    }
    let t = &problem.tableau;
    let dt = problem.dt;
    let mut recon = Vec::with_capacity(q + 1);
    for (i, &u) in out.iter().enumerate() {
        let weights = if i < q { t.a_row(i) } else { t.b() };
        let mut s: Option<Var<'g, T>> = None;
        for (&w, &n) in weights.iter().zip(&ops) {
            let term = n * T::lit(w);
            s = Some(s.map_or(term, |acc| acc + term));
        }
        recon.push(match s {
            Some(s) => u + s * dt,
            None => u,
        });
    }
    Ok(recon)
}

/// Loss terms of a discrete-time problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtLossTerms<T> {
    pub data: T,
    pub boundary: T,
}

/// Prepared discrete-time loss.
#[derive(Debug, Clone)]
pub struct DtLoss<'a, T> {
    problem: &'a DtProblem<T>,
    snapshot: &'a DtSnapshot<T>,
    head: Compiled<T>,
    stacked: Vec<T>,
    workers: usize,
}

impl<'a, T: Real> DtLoss<'a, T> {
    pub fn new(problem: &'a DtProblem<T>, snapshot: &'a DtSnapshot<T>) -> Result<Self> {
        problem.validate()?;
        snapshot.validate(problem)?;
        Ok(Self {
            problem,
            snapshot,
            head: problem.operator.head(),
            stacked: problem.stacked_tableau(),
            workers: 1,
        })
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn evaluate(&self, params: &[T], grad: &mut [T]) -> Result<T> {
        let (terms, g) = self.evaluate_terms(params, true)?;
        grad.copy_from_slice(&g);
        Ok(terms.data + terms.boundary)
    }

    pub fn terms(&self, params: &[T]) -> Result<DtLossTerms<T>> {
        Ok(self.evaluate_terms(params, false)?.0)
    }

    fn evaluate_terms(&self, params: &[T], want_grad: bool) -> Result<(DtLossTerms<T>, Vec<T>)> {
        let config = &self.problem.network;
        if params.len() != config.parameter_count() {
            return Err(structural("parameter count mismatch"));
        }
        let (data, mut grad) = self.data_term(params, want_grad)?;
        let (boundary, g) = self.boundary_term(params, want_grad)?;
        if want_grad {
            grad.iter_mut().zip(&g).for_each(|(a, &b)| *a += b);
        }
        Ok((DtLossTerms { data, boundary }, grad))
    }

    /// `Σ_i Σ_p (u^n_i(x_p) − u^n_p)²`.
    fn data_term(&self, params: &[T], want_grad: bool) -> Result<(T, Vec<T>)> {
        let config = &self.problem.network;
        let q = self.problem.q();
        let dt = self.problem.dt;
        let stacked = &self.stacked;
        let observed = &self.snapshot.u;
        let spec = JetSpec::new(vec![0], Some(0))?;
        let (contrib, grad) = run_blocks(
            config,
            params,
            &spec,
            &self.snapshot.x,
            self.workers,
            &self.head,
            want_grad,
            |head, jet, start, adj, out| {
                let n = jet.len();
                // Operator values and their partials per stage and point.
                let mut nv = vec![T::zero(); q * n];
                let mut dn = vec![[T::zero(); 3]; q * n];
                let mut d = [T::zero(); 3];
                for j in 0..q {
                    for p in 0..n {
                        let args = [jet.get(j, 0, p), jet.get(j, 1, p), jet.get(j, 2, p)];
                        nv[j * n + p] = head.call(&args, &mut d)?;
                        dn[j * n + p] = d;
                    }
                }
                // r = U + Δt [A; bᵀ] N − u^n
                let mut r = vec![T::zero(); (q + 1) * n];
                for i in 0..=q {
                    for p in 0..n {
                        r[i * n + p] = jet.get(i, 0, p) - observed[start + p];
                    }
                }
                T::gemm(
                    q + 1,
                    q,
                    n,
                    dt,
                    stacked,
                    q as isize,
                    1,
                    &nv,
                    n as isize,
                    1,
                    T::one(),
                    &mut r,
                    n as isize,
                    1,
                );
                for p in 0..n {
                    let mut s = T::zero();
                    for i in 0..=q {
                        let v = r[i * n + p];
                        s += v * v;
                    }
                    out.push(s);
                }
                // d/dU = 2r, d/dN = 2 Δt [A; bᵀ]ᵀ r
                let two = T::lit(2.0);
                for i in 0..=q {
                    for p in 0..n {
                        adj[jet.index(i, 0, p)] = two * r[i * n + p];
                    }
                }
                let mut n_adj = vec![T::zero(); q * n];
                T::gemm(
                    q,
                    q + 1,
                    n,
                    two * dt,
                    stacked,
                    1,
                    q as isize,
                    &r,
                    n as isize,
                    1,
                    T::zero(),
                    &mut n_adj,
                    n as isize,
                    1,
                );
                for j in 0..q {
                    for p in 0..n {
                        let g = n_adj[j * n + p];
                        let dd = dn[j * n + p];
                        for c in 0..3 {
                            adj[jet.index(j, c, p)] += g * dd[c];
                        }
                    }
                }
                Ok(())
            },
        )?;
        Ok((ordered_sum(&contrib), grad))
    }

    fn boundary_term(&self, params: &[T], want_grad: bool) -> Result<(T, Vec<T>)> {
        let config = &self.problem.network;
        let outputs = config.output_dim;
        let (lo, hi) = (self.problem.domain.lower()[0], self.problem.domain.upper()[0]);
        let jet_spec = match self.problem.boundary {
            DtBoundary::DirichletZero => JetSpec::values(),
            DtBoundary::Periodic => JetSpec::new(vec![0], None)?,
        };
        let periodic = self.problem.boundary == DtBoundary::Periodic;
        let (contrib, grad) = run_blocks(
            config,
            params,
            &jet_spec,
            &[lo, hi],
            1,
            &(),
            want_grad,
            |_, jet: &Jet<T>, _, adj, out| {
                let mut s = T::zero();
                for o in 0..outputs {
                    if periodic {
                        for c in 0..2 {
                            let r = jet.get(o, c, 0) - jet.get(o, c, 1);
                            s += r * r;
                            adj[jet.index(o, c, 0)] = r + r;
                            adj[jet.index(o, c, 1)] = -(r + r);
                        }
                    } else {
                        for p in 0..2 {
                            let v = jet.get(o, 0, p);
                            s += v * v;
                            adj[jet.index(o, 0, p)] = v + v;
                        }
                    }
                }
                out.push(s);
                Ok(())
            },
        )?;
        Ok((ordered_sum(&contrib), grad))
    }
}

/// Loss `SSE_n + SSE_b` and its parameter gradient.
pub fn dt_loss<T: Real>(problem: &DtProblem<T>, params: &[T], snapshot: &DtSnapshot<T>) -> Result<(T, Vec<T>)> {
    let loss = DtLoss::new(problem, snapshot)?;
    let mut grad = vec![T::zero(); params.len()];
    let v = loss.evaluate(params, &mut grad)?;
    Ok((v, grad))
}

/// The same loss recorded on one autodiff graph through [`dt_residuals`];
/// the reference for [`dt_loss`].
pub fn dt_loss_tape<T: Real>(problem: &DtProblem<T>, params: &[T], snapshot: &DtSnapshot<T>) -> Result<(T, Vec<T>)> {
    problem.validate()?;
    snapshot.validate(problem)?;
    let g = Graph::new();
    let pv: Vec<Var<'_, T>> = params.iter().map(|&v| g.variable(v)).collect();
    let mut total = g.constant(T::zero());
    for (&x, &u) in snapshot.x.iter().zip(&snapshot.u) {
        for r in dt_residuals(problem, &pv, g.variable(x))? {
            total = total + (r - u).square();
        }
    }
    let (lo, hi) = (
        g.variable(problem.domain.lower()[0]),
        g.variable(problem.domain.upper()[0]),
    );
    let ya = stage_outputs(problem, &pv, lo)?;
    let yb = stage_outputs(problem, &pv, hi)?;
    for (&a, &b) in ya.iter().zip(&yb) {
        total = match problem.boundary {
            DtBoundary::DirichletZero => total + a.square() + b.square(),
            DtBoundary::Periodic => {
                let da = g.grad(a, &[lo])?[0];
                let db = g.grad(b, &[hi])?[0];
                total + (a - b).square() + (da - db).square()
            }
        };
    }
    let grad = g.grad(total, &pv)?;
    Ok((total.value(), grad.iter().map(|v| v.value()).collect()))
}

pub fn train_dt<T: Real>(
    problem: &DtProblem<T>,
    snapshot: &DtSnapshot<T>,
    seed: u64,
    config: &LbfgsConfig,
) -> Result<(ParameterVector<T>, OptimizeReport<T>)> {
    train_dt_observed(problem, snapshot, seed, config, 1, |_| {})
}

pub fn train_dt_observed<T: Real>(
    problem: &DtProblem<T>,
    snapshot: &DtSnapshot<T>,
    seed: u64,
    config: &LbfgsConfig,
    workers: usize,
    observer: impl FnMut(&IterationEvent<T>),
) -> Result<(ParameterVector<T>, OptimizeReport<T>)> {
    let loss = DtLoss::new(problem, snapshot)?.with_workers(workers);
    let x0 = problem.network.init::<T>(seed);
    let report = minimize_with(|x, g| loss.evaluate(x, g), x0.as_slice(), config, observer)?;
    let params = ParameterVector::new(&problem.network, report.params.clone())?;
    Ok((params, report))
}

/// The prediction `u^{n+1}` (last network output) at each `x`.
pub fn predict_dt<T: Real>(problem: &DtProblem<T>, params: &[T], x: &[T]) -> Result<Vec<T>> {
    problem.validate()?;
    let q = problem.q();
    let mut out = Vec::with_capacity(x.len());
    for chunk in x.chunks(crate::batch::BLOCK) {
        let jet = Jet::forward(&problem.network, params, &JetSpec::values(), chunk)?;
        out.extend_from_slice(jet.output_values(q));
    }
    Ok(out)
}
