//! Scalar computation graph with reverse-mode differentiation.
//!
//! Every arithmetic operation on a [`Var`] appends a node to its [`Graph`].
//! [`Graph::grad`] appends the adjoint computation to the *same* graph, so
//! the returned derivatives are ordinary variables that can be differentiated
//! again. Second derivatives such as `u_xx` are obtained by calling `grad`
//! twice.
//!
//! Free variables can be rebound after recording; [`Graph::eval`] replays the
//! whole graph in node order, so cached values stay consistent and replays
//! are bit-for-bit deterministic.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdError {
    #[error("variable belongs to a different graph")]
    ForeignVariable,
    #[error("free variable #{0} is unbound")]
    Unbound(usize),
    #[error("node {0} is not a free variable")]
    NotFree(usize),
    #[error("expected {expected} bindings, got {got}")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const,
    Free(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    PowI(u32, i32),
    Tanh(u32),
    Sin(u32),
    Cos(u32),
    Exp(u32),
    Sqrt(u32),
    /// `a^2 + b^2`, the squared modulus of the pair `(a, b)`.
    AbsSq(u32, u32),
}

impl Op {
    fn operands(self) -> [Option<u32>; 2] {
        match self {
            Op::Const | Op::Free(_) => [None, None],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) | Op::AbsSq(a, b) => [Some(a), Some(b)],
            Op::Neg(a) | Op::PowI(a, _) | Op::Tanh(a) | Op::Sin(a) | Op::Cos(a) | Op::Exp(a) | Op::Sqrt(a) => {
                [Some(a), None]
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Tape<T> {
    ops: Vec<Op>,
    values: Vec<T>,
    /// Node index of each free variable, in creation order.
    free: Vec<u32>,
    bound: Vec<bool>,
}

impl<T: Real> Tape<T> {
    #[inline]
    fn apply(values: &[T], op: Op) -> T {
        let v = |i: u32| values[i as usize];
        match op {
            Op::Const | Op::Free(_) => unreachable!("leaf nodes carry their own value"),
            Op::Add(a, b) => v(a) + v(b),
            Op::Sub(a, b) => v(a) - v(b),
            Op::Mul(a, b) => v(a) * v(b),
            Op::Div(a, b) => v(a) / v(b),
            Op::Neg(a) => -v(a),
            Op::PowI(a, n) => v(a).powi(n),
            Op::Tanh(a) => v(a).tanh(),
            Op::Sin(a) => v(a).sin(),
            Op::Cos(a) => v(a).cos(),
            Op::Exp(a) => v(a).exp(),
            Op::Sqrt(a) => v(a).sqrt(),
            Op::AbsSq(a, b) => v(a) * v(a) + v(b) * v(b),
        }
    }

    fn push(&mut self, op: Op) -> u32 {
        let value = Self::apply(&self.values, op);
        self.push_leaf(op, value)
    }

    fn push_leaf(&mut self, op: Op, value: T) -> u32 {
        let idx = u32::try_from(self.ops.len()).expect("graph exceeds u32::MAX nodes");
        self.ops.push(op);
        self.values.push(value);
        idx
    }

    fn constant(&mut self, value: T) -> u32 {
        self.push_leaf(Op::Const, value)
    }

    fn replay(&mut self) {
        for i in 0..self.ops.len() {
            let op = self.ops[i];
            if !matches!(op, Op::Const | Op::Free(_)) {
                self.values[i] = Self::apply(&self.values, op);
            }
        }
    }

    fn check_bound(&self) -> Result<(), AdError> {
        match self.bound.iter().position(|b| !b) {
            Some(k) => Err(AdError::Unbound(k)),
            None => Ok(()),
        }
    }
}

/// Append-only scalar computation graph.
///
/// A graph is single-threaded (interior mutability through `RefCell`);
/// independent graphs can live on different threads.
#[derive(Clone, Default)]
pub struct Graph<T> {
    tape: RefCell<Tape<T>>,
}

impl<T> fmt::Debug for Graph<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tape = self.tape.borrow();
        f.debug_struct("Graph")
            .field("nodes", &tape.ops.len())
            .field("free", &tape.free.len())
            .finish()
    }
}

/// Handle to one scalar node of a [`Graph`].
#[derive(Clone, Copy)]
pub struct Var<'g, T> {
    graph: &'g Graph<T>,
    index: u32,
}

impl<T: Real> fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}({})", self.index, self.value())
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self {
            tape: RefCell::new(Tape {
                ops: Vec::new(),
                values: Vec::new(),
                free: Vec::new(),
                bound: Vec::new(),
            }),
        }
    }

    /// Number of nodes recorded so far.
    pub fn len(&self) -> usize {
        self.tape.borrow().ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_free(&self) -> usize {
        self.tape.borrow().free.len()
    }

    fn wrap(&self, index: u32) -> Var<'_, T> {
        Var { graph: self, index }
    }

    fn owns(&self, v: &Var<'_, T>) -> bool {
        std::ptr::eq(self, v.graph)
    }

    /// New free variable bound to `value`.
    pub fn variable(&self, value: T) -> Var<'_, T> {
        let v = self.input();
        let mut tape = self.tape.borrow_mut();
        tape.values[v.index as usize] = value;
        let k = tape.bound.len() - 1;
        tape.bound[k] = true;
        drop(tape);
        v
    }

    /// New free variable without a value; it must be bound before [`eval`](Self::eval).
    pub fn input(&self) -> Var<'_, T> {
        let mut tape = self.tape.borrow_mut();
        let k = u32::try_from(tape.free.len()).expect("too many free variables");
        let idx = tape.push_leaf(Op::Free(k), T::nan());
        tape.free.push(idx);
        tape.bound.push(false);
        drop(tape);
        self.wrap(idx)
    }

    pub fn constant(&self, value: T) -> Var<'_, T> {
        let idx = self.tape.borrow_mut().constant(value);
        self.wrap(idx)
    }

    /// Free variables in creation order.
    pub fn free_variables(&self) -> Vec<Var<'_, T>> {
        let tape = self.tape.borrow();
        tape.free.iter().map(|&i| self.wrap(i)).collect()
    }

    fn record(&self, op: Op) -> Var<'_, T> {
        let idx = self.tape.borrow_mut().push(op);
        self.wrap(idx)
    }

    /// Cached value of the node.
    pub fn value(&self, v: Var<'_, T>) -> T {
        self.tape.borrow().values[v.index as usize]
    }

    /// Overwrite the value of a free variable. Dependent nodes are refreshed
    /// on the next [`eval`](Self::eval).
    pub fn bind(&self, v: Var<'_, T>, value: T) -> Result<(), AdError> {
        if !self.owns(&v) {
            return Err(AdError::ForeignVariable);
        }
        self.bind_node(v.index as usize, value)
    }

    fn bind_node(&self, node: usize, value: T) -> Result<(), AdError> {
        let mut tape = self.tape.borrow_mut();
        match tape.ops[node] {
            Op::Free(k) => {
                tape.values[node] = value;
                tape.bound[k as usize] = true;
                Ok(())
            }
            _ => Err(AdError::NotFree(node)),
        }
    }

    /// Recompute every cached value from the current free-variable bindings.
    pub fn eval(&self) -> Result<(), AdError> {
        let mut tape = self.tape.borrow_mut();
        tape.check_bound()?;
        tape.replay();
        Ok(())
    }

    /// Bind the given free variables, then [`eval`](Self::eval).
    pub fn eval_with(&self, bindings: &[(Var<'_, T>, T)]) -> Result<(), AdError> {
        for &(v, x) in bindings {
            self.bind(v, x)?;
        }
        self.eval()
    }

    /// Derivatives of `output` with respect to each of `wrt`.
    ///
    /// The adjoint sweep is recorded on this graph, so the results can be fed
    /// back into `grad` for higher derivatives. Variables `output` does not
    /// depend on get a constant zero.
    pub fn grad<'g>(&'g self, output: Var<'g, T>, wrt: &[Var<'g, T>]) -> Result<Vec<Var<'g, T>>, AdError> {
        if !self.owns(&output) || wrt.iter().any(|w| !self.owns(w)) {
            return Err(AdError::ForeignVariable);
        }
        let mut tape = self.tape.borrow_mut();
        let adjoints = reverse_sweep(&mut tape, output.index, wrt.iter().map(|w| w.index));
        drop(tape);
        Ok(adjoints.into_iter().map(|i| self.wrap(i)).collect())
    }

    pub fn tanh<'g>(&'g self, a: Var<'g, T>) -> Var<'g, T> {
        self.unary(a, Op::Tanh)
    }

    /// `a^2 + b^2` as a single node.
    pub fn abs_sq<'g>(&'g self, a: Var<'g, T>, b: Var<'g, T>) -> Var<'g, T> {
        let (ia, ib) = self.operands(a, b);
        self.record(Op::AbsSq(ia, ib))
    }

    fn unary<'g>(&'g self, a: Var<'g, T>, op: impl FnOnce(u32) -> Op) -> Var<'g, T> {
        assert!(self.owns(&a), "{}", AdError::ForeignVariable);
        self.record(op(a.index))
    }

    fn operands(&self, a: Var<'_, T>, b: Var<'_, T>) -> (u32, u32) {
        assert!(self.owns(&a) && self.owns(&b), "{}", AdError::ForeignVariable);
        (a.index, b.index)
    }

    /// Compile `build` into a re-evaluable function of `n_inputs` scalars that
    /// also yields its gradient.
    pub fn compile<F>(n_inputs: usize, build: F) -> Compiled<T>
    where
        F: for<'g> FnOnce(&'g Graph<T>, &[Var<'g, T>]) -> Var<'g, T>,
    {
        let graph = Graph::new();
        let (inputs, output, grads) = {
            let xs: Vec<_> = (0..n_inputs).map(|_| graph.input()).collect();
            let out = build(&graph, &xs);
            let g = graph
                .grad(out, &xs)
                .expect("compiled function is built on its own graph");
            (
                xs.iter().map(|v| v.index as usize).collect(),
                out.index as usize,
                g.iter().map(|v| v.index as usize).collect(),
            )
        };
        Compiled {
            graph,
            inputs,
            output,
            grads,
        }
    }
}

/// Records the adjoint sweep of `output` and returns the adjoint node of
/// each `wrt` entry.
fn reverse_sweep<T: Real>(tape: &mut Tape<T>, output: u32, wrt: impl Iterator<Item = u32> + Clone) -> Vec<u32> {
    let out = output as usize;
    let n = out + 1;

    // Nodes on a path wrt -> output.
    let mut depends = vec![false; n];
    for w in wrt.clone() {
        if (w as usize) < n {
            depends[w as usize] = true;
        }
    }
    for i in 0..n {
        if !depends[i] {
            depends[i] = tape.ops[i].operands().iter().flatten().any(|&o| depends[o as usize]);
        }
    }
    let mut needed = vec![false; n];
    needed[out] = true;
    for i in (0..n).rev() {
        if needed[i] {
            for &o in tape.ops[i].operands().iter().flatten() {
                needed[o as usize] = true;
            }
        }
    }

    let mut adj: Vec<Option<u32>> = vec![None; n];
    let mut consts = Consts::default();
    let one = consts.get(tape, 1.0);
    adj[out] = Some(one);

    for i in (0..n).rev() {
        if !(needed[i] && depends[i]) {
            continue;
        }
        let Some(g) = adj[i] else { continue };
        let y = i as u32;
        let mut send = |tape: &mut Tape<T>, target: u32, contrib: u32, negate: bool| {
            if !depends[target as usize] {
                return;
            }
            let slot = &mut adj[target as usize];
            *slot = Some(match (*slot, negate) {
                (None, false) => contrib,
                (None, true) => tape.push(Op::Neg(contrib)),
                (Some(acc), false) => tape.push(Op::Add(acc, contrib)),
                (Some(acc), true) => tape.push(Op::Sub(acc, contrib)),
            });
        };
        let wants = |t: u32| depends[t as usize];
        match tape.ops[i] {
            Op::Const | Op::Free(_) => {}
            Op::Add(a, b) => {
                send(tape, a, g, false);
                send(tape, b, g, false);
            }
            Op::Sub(a, b) => {
                send(tape, a, g, false);
                send(tape, b, g, true);
            }
            Op::Mul(a, b) => {
                if wants(a) {
                    let c = tape.push(Op::Mul(g, b));
                    send(tape, a, c, false);
                }
                if wants(b) {
                    let c = tape.push(Op::Mul(g, a));
                    send(tape, b, c, false);
                }
            }
            Op::Div(a, b) => {
                let t = tape.push(Op::Div(g, b));
                send(tape, a, t, false);
                if wants(b) {
                    let c = tape.push(Op::Mul(t, y));
                    send(tape, b, c, true);
                }
            }
            Op::Neg(a) => send(tape, a, g, true),
            Op::PowI(a, k) => match k {
                0 => {}
                1 => send(tape, a, g, false),
                _ => {
                    let p = if k == 2 { a } else { tape.push(Op::PowI(a, k - 1)) };
                    let kc = consts.get(tape, f64::from(k));
                    let d = tape.push(Op::Mul(kc, p));
                    let c = tape.push(Op::Mul(g, d));
                    send(tape, a, c, false);
                }
            },
            Op::Tanh(a) => {
                let yy = tape.push(Op::Mul(y, y));
                let s = tape.push(Op::Sub(one, yy));
                let c = tape.push(Op::Mul(g, s));
                send(tape, a, c, false);
            }
            Op::Sin(a) => {
                let d = tape.push(Op::Cos(a));
                let c = tape.push(Op::Mul(g, d));
                send(tape, a, c, false);
            }
            Op::Cos(a) => {
                let d = tape.push(Op::Sin(a));
                let c = tape.push(Op::Mul(g, d));
                send(tape, a, c, true);
            }
            Op::Exp(a) => {
                let c = tape.push(Op::Mul(g, y));
                send(tape, a, c, false);
            }
            Op::Sqrt(a) => {
                let half = consts.get(tape, 0.5);
                let t = tape.push(Op::Div(g, y));
                let c = tape.push(Op::Mul(half, t));
                send(tape, a, c, false);
            }
            Op::AbsSq(a, b) => {
                let two = consts.get(tape, 2.0);
                let t = tape.push(Op::Mul(two, g));
                if wants(a) {
                    let c = tape.push(Op::Mul(t, a));
                    send(tape, a, c, false);
                }
                if wants(b) {
                    let c = tape.push(Op::Mul(t, b));
                    send(tape, b, c, false);
                }
            }
        }
    }

    let mut zero = None;
    wrt.map(|w| {
        adj.get(w as usize)
            .copied()
            .flatten()
            .unwrap_or_else(|| *zero.get_or_insert_with(|| tape.constant(T::zero())))
    })
    .collect()
}

/// Constants shared within one adjoint sweep.
#[derive(Default)]
struct Consts(Vec<(f64, u32)>);

impl Consts {
    fn get<T: Real>(&mut self, tape: &mut Tape<T>, v: f64) -> u32 {
        if let Some(&(_, i)) = self.0.iter().find(|(c, _)| *c == v) {
            return i;
        }
        let i = tape.constant(T::lit(v));
        self.0.push((v, i));
        i
    }
}

impl<'g, T: Real> Var<'g, T> {
    pub fn value(&self) -> T {
        self.graph.value(*self)
    }

    pub fn graph(&self) -> &'g Graph<T> {
        self.graph
    }

    /// Position of the node in its graph.
    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn tanh(self) -> Self {
        self.graph.tanh(self)
    }

    pub fn sin(self) -> Self {
        self.graph.unary(self, Op::Sin)
    }

    pub fn cos(self) -> Self {
        self.graph.unary(self, Op::Cos)
    }

    pub fn exp(self) -> Self {
        self.graph.unary(self, Op::Exp)
    }

    pub fn sqrt(self) -> Self {
        self.graph.unary(self, Op::Sqrt)
    }

    pub fn powi(self, n: i32) -> Self {
        self.graph.unary(self, |a| Op::PowI(a, n))
    }

    pub fn square(self) -> Self {
        self.powi(2)
    }

    /// Constant on the same graph.
    pub fn lift(&self, c: T) -> Self {
        self.graph.constant(c)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:ident) => {
        impl<'g, T: Real> $trait for Var<'g, T> {
            type Output = Var<'g, T>;
            fn $method(self, rhs: Self) -> Self::Output {
                let (a, b) = self.graph.operands(self, rhs);
                self.graph.record(Op::$op(a, b))
            }
        }

        impl<'g, T: Real> $trait<T> for Var<'g, T> {
            type Output = Var<'g, T>;
            fn $method(self, rhs: T) -> Self::Output {
                let c = self.graph.constant(rhs);
                self.graph.record(Op::$op(self.index, c.index))
            }
        }

        impl<'g> $trait<Var<'g, f64>> for f64 {
            type Output = Var<'g, f64>;
            fn $method(self, rhs: Var<'g, f64>) -> Self::Output {
                let c = rhs.graph.constant(self);
                rhs.graph.record(Op::$op(c.index, rhs.index))
            }
        }

        impl<'g> $trait<Var<'g, f32>> for f32 {
            type Output = Var<'g, f32>;
            fn $method(self, rhs: Var<'g, f32>) -> Self::Output {
                let c = rhs.graph.constant(self);
                rhs.graph.record(Op::$op(c.index, rhs.index))
            }
        }
    };
}

binary_op!(Add, add, Add);
binary_op!(Sub, sub, Sub);
binary_op!(Mul, mul, Mul);
binary_op!(Div, div, Div);

impl<'g, T: Real> Neg for Var<'g, T> {
    type Output = Var<'g, T>;
    fn neg(self) -> Self::Output {
        self.graph.unary(self, Op::Neg)
    }
}

/// Free-function form of [`Graph::grad`].
pub fn grad<'g, T: Real>(output: Var<'g, T>, wrt: &[Var<'g, T>]) -> Result<Vec<Var<'g, T>>, AdError> {
    output.graph.grad(output, wrt)
}

/// A scalar function recorded once and replayed for many argument values,
/// returning the value together with its gradient.
#[derive(Debug, Clone)]
pub struct Compiled<T> {
    graph: Graph<T>,
    inputs: Vec<usize>,
    output: usize,
    grads: Vec<usize>,
}

impl<T: Real> Compiled<T> {
    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    /// Evaluate at `args`, writing `d f / d args` into `grad`; returns `f`.
    pub fn call(&self, args: &[T], grad: &mut [T]) -> Result<T, AdError> {
        if args.len() != self.inputs.len() || grad.len() != self.inputs.len() {
            return Err(AdError::Arity {
                expected: self.inputs.len(),
                got: args.len().min(grad.len()),
            });
        }
        let mut tape = self.graph.tape.borrow_mut();
        for (&node, &x) in self.inputs.iter().zip(args) {
            tape.values[node] = x;
        }
        tape.replay();
        for (g, &node) in grad.iter_mut().zip(&self.grads) {
            *g = tape.values[node];
        }
        Ok(tape.values[self.output])
    }

    /// Node count of the recorded function plus its gradient.
    pub fn size(&self) -> usize {
        self.graph.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tanh_slope_at_origin_is_one() {
        let g = Graph::<f64>::new();
        let x = g.variable(0.0);
        let d = g.grad(x.tanh(), &[x]).unwrap();
        assert_eq!(d[0].value(), 1.0);
    }

    #[test]
    fn second_derivative_of_cube() {
        let g = Graph::<f64>::new();
        let x = g.variable(2.0);
        let y = x.powi(3);
        let dx = g.grad(y, &[x]).unwrap()[0];
        let dxx = g.grad(dx, &[x]).unwrap()[0];
        assert_eq!(dx.value(), 12.0);
        assert_eq!(dxx.value(), 12.0);
    }

    #[test]
    fn eval_examples() {
        let g = Graph::<f64>::new();
        let x = g.input();
        let y = g.input();
        let p = x * y;
        g.eval_with(&[(x, 3.0), (y, 4.0)]).unwrap();
        assert_eq!(p.value(), 12.0);

        let z = g.constant(0.0).tanh();
        let e = g.constant(1.0).exp();
        g.eval().unwrap();
        assert_eq!(z.value(), 0.0);
        assert_relative_eq!(e.value(), std::f64::consts::E, max_relative = f64::EPSILON);
    }

    #[test]
    fn unbound_free_variable_is_reported() {
        let g = Graph::<f64>::new();
        let a = g.variable(1.0);
        let b = g.input();
        let _ = a + b;
        assert_eq!(g.eval(), Err(AdError::Unbound(1)));
        g.bind(b, 2.0).unwrap();
        assert!(g.eval().is_ok());
    }

    #[test]
    fn binding_a_computed_node_is_rejected() {
        let g = Graph::<f64>::new();
        let a = g.variable(1.0);
        let s = a + a;
        assert_eq!(g.bind(s, 3.0), Err(AdError::NotFree(s.index())));
    }

    #[test]
    fn mixed_graphs_are_a_structural_error() {
        let g1 = Graph::<f64>::new();
        let g2 = Graph::<f64>::new();
        let x = g1.variable(1.0);
        let y = g2.variable(1.0);
        let out = x.sin();
        assert_eq!(g1.grad(out, &[y]).unwrap_err(), AdError::ForeignVariable);
        assert_eq!(grad(y, &[x]).unwrap_err(), AdError::ForeignVariable);
    }

    #[test]
    #[should_panic(expected = "different graph")]
    fn mixing_graphs_in_arithmetic_panics() {
        let g1 = Graph::<f64>::new();
        let g2 = Graph::<f64>::new();
        let _ = g1.variable(1.0) + g2.variable(2.0);
    }

    #[test]
    fn independent_variable_gets_zero() {
        let g = Graph::<f64>::new();
        let x = g.variable(1.5);
        let y = g.variable(-0.5);
        let d = g.grad(x.exp(), &[x, y]).unwrap();
        assert_eq!(d[1].value(), 0.0);
        assert_relative_eq!(d[0].value(), 1.5f64.exp());
    }

    #[test]
    fn replay_is_deterministic() {
        let g = Graph::<f64>::new();
        let x = g.variable(0.3);
        let y = (x * x).tanh() + x.sin() / (x.exp() + 1.0);
        let d = g.grad(y, &[x]).unwrap()[0];
        let first = (y.value().to_bits(), d.value().to_bits());
        g.eval_with(&[(x, 0.9)]).unwrap();
        assert_ne!(y.value().to_bits(), first.0);
        g.eval_with(&[(x, 0.3)]).unwrap();
        assert_eq!((y.value().to_bits(), d.value().to_bits()), first);
    }

    #[test]
    fn abs_sq_pair() {
        let g = Graph::<f64>::new();
        let u = g.variable(3.0);
        let v = g.variable(-4.0);
        let m = g.abs_sq(u, v);
        let d = g.grad(m, &[u, v]).unwrap();
        assert_eq!(m.value(), 25.0);
        assert_eq!(d[0].value(), 6.0);
        assert_eq!(d[1].value(), -8.0);
    }

    #[test]
    fn compiled_function_matches_graph() {
        let f = Graph::<f64>::compile(2, |_, x| (x[0] * x[1]).sin() + x[0].square());
        let mut grad = [0.0; 2];
        let val = f.call(&[0.7, -1.1], &mut grad).unwrap();
        assert_relative_eq!(val, (0.7f64 * -1.1).sin() + 0.49, epsilon = 1e-15);
        assert_relative_eq!(grad[0], -1.1 * (0.7f64 * -1.1).cos() + 1.4, epsilon = 1e-15);
        assert_relative_eq!(grad[1], 0.7 * (0.7f64 * -1.1).cos(), epsilon = 1e-15);
        assert!(f.call(&[1.0], &mut grad).is_err());
    }

    #[test]
    fn single_precision_graph() {
        let g = Graph::<f32>::new();
        let x = g.variable(0.5f32);
        let y = 2.0f32 * x.square();
        assert_eq!(g.grad(y, &[x]).unwrap()[0].value(), 2.0f32);
    }
}
