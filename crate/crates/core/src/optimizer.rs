//! Full-batch L-BFGS with a strong-Wolfe line search.
//!
//! The objective is any `FnMut(x, grad) -> value` that writes the gradient
//! into `grad`. An optional Adam phase can run before L-BFGS.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::scalar::Real;

/// How the step length along each search direction is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearch {
    /// Bracketing + zoom with cubic interpolation (Nocedal & Wright, Alg. 3.5/3.6).
    #[default]
    StrongWolfe,
    /// Bisection on the directional derivative until it vanishes; a stand-in
    /// for an exact line search, intended for tests on quadratics.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the Euclidean gradient norm falls to this value.
    pub grad_tolerance: f64,
    /// Stop when `(f_k - f_{k+1}) <= tol * max(|f_k|, |f_{k+1}|)`.
    pub objective_rel_tolerance: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_line_search_steps: usize,
    pub line_search: LineSearch,
    /// Adam steps run before L-BFGS; `None` disables the warm-up.
    pub adam_warmup: Option<AdamConfig>,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 50,
            max_iterations: 50_000,
            grad_tolerance: 1e-8,
            objective_rel_tolerance: 1e-12,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search_steps: 50,
            line_search: LineSearch::StrongWolfe,
            adam_warmup: None,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(argument(format!(
                "Wolfe constants must satisfy 0 < c1 < c2 < 1, got c1={} c2={}",
                self.wolfe_c1, self.wolfe_c2
            )));
        }
        if self.memory == 0 {
            return Err(argument("L-BFGS memory must be at least 1"));
        }
        if self.max_line_search_steps == 0 {
            return Err(argument("line search needs at least one step"));
        }
        if !(self.grad_tolerance >= 0.0 && self.objective_rel_tolerance >= 0.0) {
            return Err(argument("tolerances must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    ObjTol,
    MaxIter,
    LineSearchFailure,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::GradTol => "grad_tol",
            Termination::ObjTol => "obj_tol",
            Termination::MaxIter => "max_iter",
            Termination::LineSearchFailure => "line_search_failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeReport<T> {
    pub params: Vec<T>,
    pub objective: T,
    /// L-BFGS iterations (accepted steps); warm-up steps are not counted.
    pub iterations: usize,
    pub grad_norm: T,
    pub termination: Termination,
    /// Objective after each accepted L-BFGS step, starting with the value at
    /// the L-BFGS starting point.
    pub history: Vec<T>,
    pub evaluations: usize,
}

/// Data about one accepted step, handed to the observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationEvent<T> {
    pub iteration: usize,
    pub objective: T,
    pub grad_norm: T,
    pub previous_objective: T,
    pub step_length: T,
    /// `g_k · d_k`, the slope at the start of the line search.
    pub initial_slope: T,
    /// `g_{k+1} · d_k`, the slope at the accepted point.
    pub final_slope: T,
    /// Whether the curvature pair was stored.
    pub pair_stored: bool,
}

/// Minimize `objective` from `x0` with default-free configuration `config`.
pub fn minimize<T, F>(objective: F, x0: &[T], config: &LbfgsConfig) -> Result<OptimizeReport<T>>
where
    T: Real,
    F: FnMut(&[T], &mut [T]) -> T,
{
    minimize_observed(objective, x0, config, |_: &IterationEvent<T>| {})
}

/// As [`minimize`], calling `observer` after every accepted step.
pub fn minimize_observed<T, F, O>(
    mut objective: F,
    x0: &[T],
    config: &LbfgsConfig,
    mut observer: O,
) -> Result<OptimizeReport<T>>
where
    T: Real,
    F: FnMut(&[T], &mut [T]) -> T,
    O: FnMut(&IterationEvent<T>),
{
    config.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![T::zero(); n];
    let mut f = objective(&x, &mut g);
    let mut evaluations = 1;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(argument("objective or gradient is not finite at the starting point"));
    }

    if let Some(adam) = &config.adam_warmup {
        let (xa, fa, ev) = adam_phase(&mut objective, &x, f, adam, &mut g);
        evaluations += ev;
        x = xa;
        f = fa;
    }

    let grad_tol = T::lit(config.grad_tolerance);
    let obj_tol = T::lit(config.objective_rel_tolerance);
    let mut history = vec![f];
    let mut pairs: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(config.memory);
    let mut gnorm = norm(&g);
    let mut iterations = 0;
    let mut d = vec![T::zero(); n];
    let mut x_new = vec![T::zero(); n];
    let mut g_new = vec![T::zero(); n];

    let termination = loop {
        if gnorm <= grad_tol {
            break Termination::GradTol;
        }
        if iterations >= config.max_iterations {
            break Termination::MaxIter;
        }

        let mut outcome = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if pairs.is_empty() {
                    break;
                }
                log::debug!("line search failed at iteration {iterations}; restarting from steepest descent");
                pairs.clear();
            }
            two_loop(&g, &pairs, &mut d);
            let mut slope = dot(&g, &d);
            if !(slope < T::zero()) {
                pairs.clear();
                d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -*gi);
                slope = -gnorm * gnorm;
            }
            let alpha0 = if pairs.is_empty() && iterations == 0 {
                T::one().min(T::one() / gnorm)
            } else if pairs.is_empty() {
                T::one().min(T::one() / norm(&d))
            } else {
                T::one()
            };
            let mut phi = |alpha: T, xn: &mut [T], gn: &mut [T]| {
                for ((xi, &x0i), &di) in xn.iter_mut().zip(&x).zip(&d) {
                    *xi = x0i + alpha * di;
                }
                evaluations += 1;
                let v = objective(xn, gn);
                (v, dot(gn, &d))
            };
            let result = match config.line_search {
                LineSearch::StrongWolfe => strong_wolfe(&mut phi, f, slope, alpha0, config, &mut x_new, &mut g_new),
                LineSearch::Bisection => bisection(&mut phi, f, slope, alpha0, config, &mut x_new, &mut g_new),
            };
            if let Some(ok) = result {
                outcome = Some((ok, slope));
                break;
            }
        }

        let Some(((alpha, f_new, slope_new), slope)) = outcome else {
            break Termination::LineSearchFailure;
        };

        let s: Vec<T> = d.iter().map(|&di| alpha * di).collect();
        let y: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        let stored = has_curvature(&s, &y);
        if stored {
            if pairs.len() == config.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, T::one() / sy));
        }

        let f_old = f;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        gnorm = norm(&g);
        iterations += 1;
        history.push(f);
        observer(&IterationEvent {
            iteration: iterations,
            objective: f,
            grad_norm: gnorm,
            previous_objective: f_old,
            step_length: alpha,
            initial_slope: slope,
            final_slope: slope_new,
            pair_stored: stored,
        });

        if gnorm <= grad_tol {
            break Termination::GradTol;
        }
        let scale = f_old.abs().max(f.abs()).max(T::min_positive_value());
        if f_old - f <= obj_tol * scale {
            break Termination::ObjTol;
        }
    };

    Ok(OptimizeReport {
        params: x,
        objective: f,
        iterations,
        grad_norm: gnorm,
        termination,
        history,
        evaluations,
    })
}

/// `d = -H g` by the two-loop recursion with `H_0 = γ I`, `γ = sᵀy / yᵀy`
/// of the newest pair.
fn two_loop<T: Real>(g: &[T], pairs: &VecDeque<(Vec<T>, Vec<T>, T)>, d: &mut [T]) {
    d.iter_mut().zip(g).for_each(|(di, &gi)| *di = -gi);
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = *rho * dot(s, d);
        axpy(-a, y, d);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        d.iter_mut().for_each(|di| *di *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, d);
        axpy(a - b, s, d);
    }
}

type Accepted<T> = (T, T, T);

/// Strong-Wolfe line search. On success `xn`/`gn` hold the accepted point
/// and the return value is `(alpha, phi(alpha), phi'(alpha))`.
fn strong_wolfe<T, P>(
    phi: &mut P,
    f0: T,
    slope0: T,
    alpha0: T,
    config: &LbfgsConfig,
    xn: &mut [T],
    gn: &mut [T],
) -> Option<Accepted<T>>
where
    T: Real,
    P: FnMut(T, &mut [T], &mut [T]) -> (T, T),
{
    let c1 = T::lit(config.wolfe_c1);
    let c2 = T::lit(config.wolfe_c2);
    let armijo = |a: T, v: T| v <= f0 + c1 * a * slope0;
    let curvature = |s: T| s.abs() <= -c2 * slope0;
    let mut budget = config.max_line_search_steps;

    let (mut a_prev, mut f_prev, mut s_prev) = (T::zero(), f0, slope0);
    let mut a = alpha0;
    let mut first = true;
    let (lo, hi) = loop {
        if budget == 0 {
            return None;
        }
        budget -= 1;
        let (v, s) = phi(a, xn, gn);
        if !armijo(a, v) || (!first && v >= f_prev) || !v.is_finite() {
            break ((a_prev, f_prev, s_prev), (a, v, s));
        }
        if curvature(s) {
            return Some((a, v, s));
        }
        if s >= T::zero() {
            break ((a, v, s), (a_prev, f_prev, s_prev));
        }
        a_prev = a;
        f_prev = v;
        s_prev = s;
        a = a * T::lit(2.0);
        first = false;
    };

    let ((mut a_lo, mut f_lo, mut s_lo), (mut a_hi, mut f_hi, mut s_hi)) = (lo, hi);
    while budget > 0 {
        budget -= 1;
        let a = interpolate(a_lo, f_lo, s_lo, a_hi, f_hi, s_hi);
        let (v, s) = phi(a, xn, gn);
        if !armijo(a, v) || v >= f_lo || !v.is_finite() {
            a_hi = a;
            f_hi = v;
            s_hi = s;
        } else {
            if curvature(s) {
                return Some((a, v, s));
            }
            if s * (a_hi - a_lo) >= T::zero() {
                a_hi = a_lo;
                f_hi = f_lo;
                s_hi = s_lo;
            }
            a_lo = a;
            f_lo = v;
            s_lo = s;
        }
        if (a_hi - a_lo).abs() <= T::epsilon() * a_lo.abs().max(a_hi.abs()) {
            break;
        }
    }
    None
}

/// Minimizer of the cubic through two points with slopes, safeguarded to
/// stay in the inner 80% of the interval; falls back to bisection.
fn interpolate<T: Real>(a: T, fa: T, sa: T, b: T, fb: T, sb: T) -> T {
    let mid = (a + b) / T::lit(2.0);
    if !fb.is_finite() || !sb.is_finite() {
        return mid;
    }
    let d1 = sa + sb - T::lit(3.0) * (fa - fb) / (a - b);
    let disc = d1 * d1 - sa * sb;
    if !(disc >= T::zero()) {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (sb + d2 - d1) / (sb - sa + T::lit(2.0) * d2);
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let margin = T::lit(0.1) * (hi - lo);
    if t.is_finite() && t >= lo + margin && t <= hi - margin {
        t
    } else {
        mid
    }
}

/// Line search that drives `phi'(alpha)` to zero by bisection.
fn bisection<T, P>(
    phi: &mut P,
    f0: T,
    slope0: T,
    alpha0: T,
    config: &LbfgsConfig,
    xn: &mut [T],
    gn: &mut [T],
) -> Option<Accepted<T>>
where
    T: Real,
    P: FnMut(T, &mut [T], &mut [T]) -> (T, T),
{
    let tol = T::lit(1e-13) * slope0.abs();
    let c1 = T::lit(config.wolfe_c1);
    let (mut lo, mut hi) = (T::zero(), alpha0);
    for _ in 0..200 {
        let (v, s) = phi(hi, xn, gn);
        if !v.is_finite() || s >= T::zero() || v > f0 {
            break;
        }
        lo = hi;
        hi = hi * T::lit(2.0);
    }
    let mut best = None;
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        let (v, s) = phi(mid, xn, gn);
        if v.is_finite() && s.abs() <= tol {
            best = Some((mid, v, s));
            break;
        }
        if !v.is_finite() || s > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= T::epsilon() * hi {
            best = Some((mid, v, s));
            break;
        }
    }
    let (a, v, s) = best?;
    // Leave xn/gn at the accepted point.
    let (v2, s2) = phi(a, xn, gn);
    debug_assert!(v2 == v && s2 == s);
    (v <= f0 + c1 * a * slope0).then_some((a, v, s))
}

fn adam_phase<T, F>(objective: &mut F, x0: &[T], f0: T, cfg: &AdamConfig, g: &mut [T]) -> (Vec<T>, T, usize)
where
    T: Real,
    F: FnMut(&[T], &mut [T]) -> T,
{
    let n = x0.len();
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.epsilon));
    let mut m = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut x = x0.to_vec();
    let (mut best_x, mut best_f, mut best_g) = (x.clone(), f0, g.to_vec());
    let mut evaluations = 0;
    let (mut p1, mut p2) = (T::one(), T::one());
    for _ in 0..cfg.steps {
        p1 *= b1;
        p2 *= b2;
        for i in 0..n {
            m[i] = b1 * m[i] + (T::one() - b1) * g[i];
            v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
            let mh = m[i] / (T::one() - p1);
            let vh = v[i] / (T::one() - p2);
            x[i] -= lr * mh / (vh.sqrt() + eps);
        }
        let f = objective(&x, g);
        evaluations += 1;
        if !f.is_finite() {
            break;
        }
        if f < best_f {
            best_f = f;
            best_x.copy_from_slice(&x);
            best_g.copy_from_slice(g);
        }
    }
    g.copy_from_slice(&best_g);
    log::debug!("adam warm-up: {} steps, objective {}", evaluations, best_f);
    (best_x, best_f, evaluations)
}

/// Writes one CSV row `iteration,objective,grad_norm` per accepted step.
pub struct IterationLog<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> IterationLog<W> {
    pub fn new(mut out: W) -> Self {
        let error = writeln!(out, "iteration,objective,grad_norm").err();
        Self { out, error }
    }

    pub fn record<T: Real>(&mut self, event: &IterationEvent<T>) {
        if self.error.is_none() {
            self.error = writeln!(
                self.out,
                "{},{:.17e},{:.17e}",
                event.iteration,
                event.objective.to_f64_lossy(),
                event.grad_norm.to_f64_lossy()
            )
            .err();
        }
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Whether a pair carries enough curvature to be stored:
/// `sᵀy > 1e-10 ‖s‖ ‖y‖`.
fn has_curvature<T: Real>(s: &[T], y: &[T]) -> bool {
    dot(s, y) > T::lit(1e-10) * norm(s) * norm(y)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi += alpha * xi);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64], g: &mut [f64]) -> f64 {
        g.iter_mut().zip(x).for_each(|(gi, xi)| *gi = 2.0 * xi);
        x.iter().map(|v| v * v).sum()
    }

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    fn tight() -> LbfgsConfig {
        LbfgsConfig {
            grad_tolerance: 1e-12,
            objective_rel_tolerance: 0.0,
            ..LbfgsConfig::default()
        }
    }

    fn assert_wolfe(e: &IterationEvent<f64>, cfg: &LbfgsConfig) {
        assert!(e.initial_slope < 0.0);
        assert!(
            e.objective <= e.previous_objective + cfg.wolfe_c1 * e.step_length * e.initial_slope,
            "sufficient decrease violated: {e:?}"
        );
        assert!(
            e.final_slope.abs() <= -cfg.wolfe_c2 * e.initial_slope,
            "curvature violated: {e:?}"
        );
    }

    #[test]
    fn sphere_converges_quickly() {
        let cfg = tight();
        let r = minimize_observed(sphere, &[1.0, 1.0, 1.0], &cfg, |e| assert_wolfe(e, &cfg)).unwrap();
        assert!(r.grad_norm < 1e-10, "{r:?}");
        assert!(r.iterations <= 5, "{r:?}");
        assert_eq!(r.termination, Termination::GradTol);
    }

    #[test]
    fn rosenbrock_converges() {
        let cfg = LbfgsConfig {
            objective_rel_tolerance: 0.0,
            grad_tolerance: 1e-9,
            ..LbfgsConfig::default()
        };
        let r = minimize_observed(rosenbrock, &[-1.2, 1.0], &cfg, |e| assert_wolfe(e, &cfg)).unwrap();
        assert!(r.objective < 1e-10, "{r:?}");
        assert!(r.iterations <= 200, "{r:?}");
        assert!((r.params[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn history_is_non_increasing() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &tight()).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.history.len(), r.iterations + 1);
    }

    #[test]
    fn optimal_start_stops_immediately() {
        let r = minimize(sphere, &[0.0, 0.0], &LbfgsConfig::default()).unwrap();
        assert_eq!(r.termination, Termination::GradTol);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn non_finite_start_is_an_argument_error() {
        let bad = |_: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            f64::NAN
        };
        assert!(matches!(
            minimize(bad, &[1.0], &LbfgsConfig::default()),
            Err(crate::Error::Argument(_))
        ));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = LbfgsConfig::default();
        cfg.wolfe_c1 = 0.95;
        assert!(cfg.validate().is_err());
        cfg = LbfgsConfig {
            memory: 0,
            ..LbfgsConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn max_iterations_is_honoured() {
        let cfg = LbfgsConfig {
            max_iterations: 3,
            ..tight()
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert_eq!(r.termination, Termination::MaxIter);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn exact_line_search_on_quadratic_finishes_within_dimension() {
        // f = 1/2 xᵀ A x - bᵀ x with A = Lᵀ L + I, L deterministic.
        for dim in 2..=10usize {
            let l: Vec<f64> = (0..dim * dim).map(|k| ((k * 7 + 3) % 11) as f64 / 5.0 - 1.0).collect();
            let mut a = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    a[i * dim + j] =
                        (0..dim).map(|k| l[k * dim + i] * l[k * dim + j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
                }
            }
            let b: Vec<f64> = (0..dim).map(|i| (i as f64 + 1.0).sin()).collect();
            let quad = |x: &[f64], g: &mut [f64]| {
                let mut f = 0.0;
                for i in 0..dim {
                    let ax: f64 = (0..dim).map(|j| a[i * dim + j] * x[j]).sum();
                    g[i] = ax - b[i];
                    f += 0.5 * x[i] * ax - b[i] * x[i];
                }
                f
            };
            let cfg = LbfgsConfig {
                memory: dim,
                line_search: LineSearch::Bisection,
                grad_tolerance: 1e-8,
                objective_rel_tolerance: 0.0,
                ..LbfgsConfig::default()
            };
            let r = minimize(quad, &vec![0.0; dim], &cfg).unwrap();
            assert_eq!(r.termination, Termination::GradTol, "dim {dim}: {r:?}");
            assert!(r.iterations <= dim, "dim {dim}: {} iterations", r.iterations);
        }
    }

    #[test]
    fn flat_or_negative_curvature_pairs_are_rejected() {
        assert!(has_curvature(&[1.0, 0.0], &[1.0, 0.0]));
        assert!(!has_curvature(&[1.0, 0.0], &[0.0, 1.0]));
        assert!(!has_curvature(&[1.0, 0.0], &[-1.0, 0.0]));
        assert!(!has_curvature(&[1.0, 0.0], &[1e-11, 1.0]));
    }

    #[test]
    fn iteration_log_writes_csv() {
        let mut log = IterationLog::new(Vec::new());
        minimize_observed(sphere, &[1.0, -2.0], &tight(), |e| log.record(e)).unwrap();
        let text = String::from_utf8(log.finish().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration,objective,grad_norm"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "1");
        assert_eq!(first.len(), 3);
    }

    #[test]
    fn adam_warmup_then_lbfgs() {
        let cfg = LbfgsConfig {
            adam_warmup: Some(AdamConfig {
                steps: 50,
                learning_rate: 1e-2,
                ..AdamConfig::default()
            }),
            ..tight()
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!(r.objective < 1e-10);
        assert!(r.evaluations > 50);
    }

    #[test]
    fn deterministic() {
        let a = minimize(rosenbrock, &[-1.2, 1.0], &tight()).unwrap();
        let b = minimize(rosenbrock, &[-1.2, 1.0], &tight()).unwrap();
        assert_eq!(a, b);
    }
}
