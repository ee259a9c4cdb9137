//! Finite-difference and structural properties of the computation graph.

use pinn_core::autodiff::{Graph, Var};
use pinn_core::network::MlpConfig;
use pinn_core::sampler::rng;
use rand::Rng;

type Unary = for<'g> fn(Var<'g, f64>) -> Var<'g, f64>;
type Binary = for<'g> fn(Var<'g, f64>, Var<'g, f64>) -> Var<'g, f64>;

fn unary_ops() -> Vec<(&'static str, Unary, f64, f64)> {
    vec![
        ("neg", |a| -a, -3.0, 3.0),
        ("powi3", |a| a.powi(3), -2.0, 2.0),
        ("powi-2", |a| a.powi(-2), 0.5, 2.0),
        ("tanh", |a| a.tanh(), -3.0, 3.0),
        ("sin", |a| a.sin(), -3.0, 3.0),
        ("cos", |a| a.cos(), -3.0, 3.0),
        ("exp", |a| a.exp(), -2.0, 2.0),
        ("sqrt", |a| a.sqrt(), 0.2, 4.0),
    ]
}

fn binary_ops() -> Vec<(&'static str, Binary, f64, f64)> {
    vec![
        ("add", |a, b| a + b, -3.0, 3.0),
        ("sub", |a, b| a - b, -3.0, 3.0),
        ("mul", |a, b| a * b, -3.0, 3.0),
        ("div", |a, b| a / b, 0.5, 3.0),
        ("abs_sq", |a, b| a.graph().abs_sq(a, b), -3.0, 3.0),
    ]
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Value and first derivatives of `f` at `x`, through the graph.
fn value_and_grad(f: &dyn for<'g> Fn(&[Var<'g, f64>]) -> Var<'g, f64>, x: &[f64]) -> (f64, Vec<f64>) {
    let g = Graph::new();
    let vars: Vec<_> = x.iter().map(|&v| g.variable(v)).collect();
    let y = f(&vars);
    let d = g.grad(y, &vars).unwrap();
    (y.value(), d.iter().map(|v| v.value()).collect())
}

#[test]
fn every_opcode_matches_central_differences() {
    let mut r = rng(11);
    let h = 1e-6;
    for (name, op, lo, hi) in unary_ops() {
        for _ in 0..100 {
            let x = r.random_range(lo..hi);
            let (_, d) = value_and_grad(&|v| op(v[0]), &[x]);
            let f = |x: f64| value_and_grad(&|v| op(v[0]), &[x]).0;
            let fd = (f(x + h) - f(x - h)) / (2.0 * h);
            assert!(rel_err(d[0], fd) < 1e-5, "{name} at {x}: {} vs {fd}", d[0]);
        }
    }
    for (name, op, lo, hi) in binary_ops() {
        for _ in 0..100 {
            let x = [r.random_range(lo..hi), r.random_range(lo..hi)];
            let (_, d) = value_and_grad(&|v| op(v[0], v[1]), &x);
            for k in 0..2 {
                let f = |s: f64| {
                    let mut p = x;
                    p[k] += s;
                    value_and_grad(&|v| op(v[0], v[1]), &p).0
                };
                let fd = (f(h) - f(-h)) / (2.0 * h);
                assert!(rel_err(d[k], fd) < 1e-5, "{name} d/dx{k} at {x:?}: {} vs {fd}", d[k]);
            }
        }
    }
}

#[test]
fn second_derivatives_match_differences_of_the_gradient() {
    let mut r = rng(12);
    let h = 1e-6;
    for (name, op, lo, hi) in unary_ops() {
        for _ in 0..100 {
            let x = r.random_range(lo..hi);
            let g = Graph::new();
            let v = g.variable(x);
            let y = op(v);
            let d1 = g.grad(y, &[v]).unwrap()[0];
            let d2 = g.grad(d1, &[v]).unwrap()[0].value();
            let first = |x: f64| value_and_grad(&|v| op(v[0]), &[x]).1[0];
            let fd = (first(x + h) - first(x - h)) / (2.0 * h);
            assert!(rel_err(d2, fd) < 1e-4, "{name}'' at {x}: {d2} vs {fd}");
        }
    }
}

#[test]
fn gradient_is_linear() {
    let mut r = rng(13);
    for _ in 0..50 {
        let (a, b): (f64, f64) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let x = r.random_range(-1.5..1.5);
        let g = Graph::new();
        let v = g.variable(x);
        let f = (v * v).sin() + v.exp();
        let h = v.tanh() * v.powi(3);
        let combo = f * a + h * b;
        let dc = g.grad(combo, &[v]).unwrap()[0].value();
        let df = g.grad(f, &[v]).unwrap()[0].value();
        let dh = g.grad(h, &[v]).unwrap()[0].value();
        assert!((dc - (a * df + b * dh)).abs() < 1e-12);
    }
}

#[test]
fn differentiation_grows_the_graph_by_a_bounded_factor() {
    let config = MlpConfig::new(2, 3, 10, 1);
    let params = config.init::<f64>(5);
    let g = Graph::new();
    let pv: Vec<_> = params.iter().map(|&p| g.variable(p)).collect();
    let inputs = [g.variable(0.3), g.variable(-0.2)];
    let before = g.len();
    let u = config.forward(&pv, &inputs).unwrap()[0];
    let forward_nodes = g.len() - before;
    let mark = g.len();
    let du = g.grad(u, &inputs).unwrap();
    assert!(
        g.len() - mark <= 8 * forward_nodes,
        "first pass added {}",
        g.len() - mark
    );
    let recorded = g.len() - before;
    let mark = g.len();
    g.grad(du[1], &inputs).unwrap();
    assert!(g.len() - mark <= 8 * recorded, "second pass added {}", g.len() - mark);

    for (name, op, _, _) in unary_ops() {
        let g = Graph::new();
        let v = g.variable(0.7);
        let start = g.len();
        let y = op(v);
        let n = g.len() - start;
        let mark = g.len();
        g.grad(y, &[v]).unwrap();
        assert!(g.len() - mark <= 8 * n.max(1), "{name}");
    }
}

#[test]
fn network_second_derivative_matches_finite_differences() {
    let config = MlpConfig::new(2, 1, 16, 1);
    let params = config.init::<f64>(21);
    let mut r = rng(22);
    let h = 1e-4;
    for _ in 0..20 {
        let (t, x) = (r.random_range(0.0..1.0), r.random_range(-1.0..1.0));
        let g = Graph::new();
        let pv: Vec<_> = params.iter().map(|&p| g.constant(p)).collect();
        let (tv, xv) = (g.variable(t), g.variable(x));
        let u = config.forward(&pv, &[tv, xv]).unwrap()[0];
        let ux = g.grad(u, &[xv]).unwrap()[0];
        let uxx = g.grad(ux, &[xv]).unwrap()[0].value();
        let f = |x: f64| config.eval(params.as_slice(), &[t, x]).unwrap()[0];
        let fd = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        assert!(rel_err(uxx, fd) < 1e-5, "u_xx at ({t}, {x}): {uxx} vs {fd}");
    }
}
