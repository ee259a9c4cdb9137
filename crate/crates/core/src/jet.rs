//! Batched forward-over-reverse evaluation of a [`MlpConfig`] network.
//!
//! For a block of input points the network is pushed forward together with
//! its input derivatives (a truncated Taylor "jet": value, selected first
//! derivatives and one pure second derivative). Each layer is a single
//! matrix product over all channels of all points. The reverse sweep then
//! returns the parameter gradient of any scalar built from the output jets.
//!
//! This computes exactly what nested calls to [`crate::autodiff::Graph::grad`]
//! produce, but in dense form; the two paths are cross-checked in tests.

use crate::error::{structural, Result};
use crate::network::{LayerShape, MlpConfig};
use crate::scalar::Real;

/// Which input derivatives travel with the values.
///
/// Channel 0 is the value, channel `1 + k` the derivative along input
/// `first[k]`, and (if present) the last channel the second derivative
/// along input `second`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetSpec {
    first: Vec<usize>,
    second: Option<usize>,
}

impl JetSpec {
    pub fn values() -> Self {
        Self {
            first: Vec::new(),
            second: None,
        }
    }

    /// First derivatives along `first`, plus the second derivative along
    /// `second` (which must be listed in `first`).
    pub fn new(first: Vec<usize>, second: Option<usize>) -> Result<Self> {
        if let Some(s) = second {
            if !first.contains(&s) {
                return Err(structural("second-derivative direction needs its first derivative"));
            }
        }
        Ok(Self { first, second })
    }

    pub fn channels(&self) -> usize {
        1 + self.first.len() + usize::from(self.second.is_some())
    }

    /// Channel holding `d/d input`, if tracked.
    pub fn first_channel(&self, input: usize) -> Option<usize> {
        self.first.iter().position(|&i| i == input).map(|k| 1 + k)
    }

    /// Channel holding the second derivative, if tracked.
    pub fn second_channel(&self) -> Option<usize> {
        self.second.map(|_| 1 + self.first.len())
    }

    fn second_source(&self) -> Option<usize> {
        self.second.and_then(|s| self.first_channel(s))
    }

    fn check(&self, input_dim: usize) -> Result<()> {
        if self.first.iter().any(|&i| i >= input_dim) {
            return Err(structural("jet direction exceeds network input dimension"));
        }
        Ok(())
    }
}

/// Forward state of one block of points, kept for the reverse sweep.
///
/// Matrices are row-major with one row per neuron and `channels * n`
/// columns grouped channel by channel.
#[derive(Debug, Clone)]
pub struct Jet<T> {
    spec: JetSpec,
    n: usize,
    input: Vec<T>,
    /// Pre-activation jets of the hidden layers.
    pre: Vec<Vec<T>>,
    /// Post-activation jets of the hidden layers.
    post: Vec<Vec<T>>,
    output: Vec<T>,
    output_dim: usize,
}

impl<T: Real> Jet<T> {
    /// Evaluate `config` at `n` points given row-major in `points`
    /// (`n * input_dim` values).
    pub fn forward(config: &MlpConfig, params: &[T], spec: &JetSpec, points: &[T]) -> Result<Self> {
        config.validate()?;
        spec.check(config.input_dim)?;
        if params.len() != config.parameter_count() {
            return Err(structural("parameter count mismatch"));
        }
        let d = config.input_dim;
        if points.len() % d != 0 {
            return Err(structural("point buffer is not a multiple of the input dimension"));
        }
        let n = points.len() / d;
        let ch = spec.channels();
        let cols = ch * n;

        let mut input = vec![T::zero(); d * cols];
        for (p, x) in points.chunks_exact(d).enumerate() {
            for (i, &xi) in x.iter().enumerate() {
                input[i * cols + p] = xi;
            }
        }
        for (k, &dir) in spec.first.iter().enumerate() {
            let c = 1 + k;
            input[dir * cols + c * n..dir * cols + (c + 1) * n].fill(T::one());
        }

        let layers = config.layers();
        let (output_layer, hidden) = layers.split_last().expect("at least one layer");
        let mut pre = Vec::with_capacity(hidden.len());
        let mut post: Vec<Vec<T>> = Vec::with_capacity(hidden.len());
        for layer in hidden {
            let prev = post.last().unwrap_or(&input);
            let a = affine(layer, params, prev, n, cols);
            let h = activate(&a, spec, layer.outputs, n);
            pre.push(a);
            post.push(h);
        }
        let output = affine(output_layer, params, post.last().unwrap_or(&input), n, cols);
        Ok(Self {
            spec: spec.clone(),
            n,
            input,
            pre,
            post,
            output,
            output_dim: config.output_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spec(&self) -> &JetSpec {
        &self.spec
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Output `o`, channel `c`, point `p`.
    #[inline]
    pub fn get(&self, o: usize, c: usize, p: usize) -> T {
        self.output[self.index(o, c, p)]
    }

    /// Position of `(o, c, p)` in an output-shaped buffer such as the
    /// adjoint passed to [`backward`](Self::backward).
    #[inline]
    pub fn index(&self, o: usize, c: usize, p: usize) -> usize {
        o * self.spec.channels() * self.n + c * self.n + p
    }

    /// Buffer shaped like the outputs, filled with zeros.
    pub fn zeros_like_output(&self) -> Vec<T> {
        vec![T::zero(); self.output.len()]
    }

    /// Values of output `o` at every point.
    pub fn output_values(&self, o: usize) -> &[T] {
        let cols = self.spec.channels() * self.n;
        &self.output[o * cols..o * cols + self.n]
    }

    /// Accumulate `d L / d params` into `grad` given `d L / d output`
    /// (laid out as [`index`](Self::index)).
    pub fn backward(&self, config: &MlpConfig, params: &[T], out_adj: &[T], grad: &mut [T]) -> Result<()> {
        if out_adj.len() != self.output.len() || grad.len() != params.len() {
            return Err(structural("adjoint or gradient buffer has the wrong size"));
        }
        let n = self.n;
        let cols = self.spec.channels() * n;
        let layers = config.layers();
        let (output_layer, hidden) = layers.split_last().expect("at least one layer");

        let mut adj = out_adj.to_vec();
        let mut layer = output_layer;
        let mut depth = hidden.len();
        loop {
            let prev = if depth == 0 { &self.input } else { &self.post[depth - 1] };
            accumulate_param_grad(layer, &adj, prev, n, cols, grad);
            if depth == 0 {
                break;
            }
            // d L / d (previous post-activation) = W^T adj
            let mut prev_adj = vec![T::zero(); layer.inputs * cols];
            let w = &params[layer.weight_offset..layer.bias_offset];
            T::gemm(
                layer.inputs,
                layer.outputs,
                cols,
                T::one(),
                w,
                1,
                layer.inputs as isize,
                &adj,
                cols as isize,
                1,
                T::zero(),
                &mut prev_adj,
                cols as isize,
                1,
            );
            depth -= 1;
            layer = &hidden[depth];
            adj = activate_adjoint(
                &self.pre[depth],
                &self.post[depth],
                &prev_adj,
                &self.spec,
                layer.outputs,
                n,
            );
        }
        Ok(())
    }
}

fn affine<T: Real>(layer: &LayerShape, params: &[T], prev: &[T], n: usize, cols: usize) -> Vec<T> {
    let mut a = vec![T::zero(); layer.outputs * cols];
    let w = &params[layer.weight_offset..layer.bias_offset];
    T::gemm(
        layer.outputs,
        layer.inputs,
        cols,
        T::one(),
        w,
        layer.inputs as isize,
        1,
        prev,
        cols as isize,
        1,
        T::zero(),
        &mut a,
        cols as isize,
        1,
    );
    let bias = &params[layer.bias_offset..layer.end()];
    for (row, &b) in a.chunks_exact_mut(cols).zip(bias) {
        for v in &mut row[..n] {
            *v += b;
        }
    }
    a
}

fn accumulate_param_grad<T: Real>(layer: &LayerShape, adj: &[T], prev: &[T], n: usize, cols: usize, grad: &mut [T]) {
    // dW += adj * prev^T
    T::gemm(
        layer.outputs,
        cols,
        layer.inputs,
        T::one(),
        adj,
        cols as isize,
        1,
        prev,
        1,
        cols as isize,
        T::one(),
        &mut grad[layer.weight_offset..layer.bias_offset],
        layer.inputs as isize,
        1,
    );
    for (g, row) in grad[layer.bias_offset..layer.end()]
        .iter_mut()
        .zip(adj.chunks_exact(cols))
    {
        *g += row[..n].iter().copied().sum::<T>();
    }
}

/// `h = tanh(a)` pushed through the jet:
/// `h_k = s a_k`, `h_ss = s a_ss - 2 h s a_s^2` with `s = 1 - h^2`.
fn activate<T: Real>(a: &[T], spec: &JetSpec, rows: usize, n: usize) -> Vec<T> {
    let ch = spec.channels();
    let cols = ch * n;
    let nfirst = spec.first.len();
    let second = spec.second_source();
    let two = T::lit(2.0);
    let mut h = vec![T::zero(); a.len()];
    let mut s = vec![T::zero(); n];
    for (ar, hr) in a.chunks_exact(cols).zip(h.chunks_exact_mut(cols)).take(rows) {
        let (h0, hrest) = hr.split_at_mut(n);
        for ((y, sv), &x) in h0.iter_mut().zip(&mut s).zip(&ar[..n]) {
            *y = x.tanh();
            *sv = T::one() - *y * *y;
        }
        for c in 1..=nfirst {
            let dst = &mut hrest[(c - 1) * n..c * n];
            for ((d, &sv), &x) in dst.iter_mut().zip(&s).zip(&ar[c * n..(c + 1) * n]) {
                *d = sv * x;
            }
        }
        if let Some(sc) = second {
            let cc = 1 + nfirst;
            let dst = &mut hrest[(cc - 1) * n..cc * n];
            let a_s = &ar[sc * n..(sc + 1) * n];
            let a_ss = &ar[cc * n..(cc + 1) * n];
            for p in 0..n {
                dst[p] = s[p] * (a_ss[p] - two * h0[p] * a_s[p] * a_s[p]);
            }
        }
    }
    h
}

/// Reverse of [`activate`]: maps post-activation adjoints to
/// pre-activation adjoints.
fn activate_adjoint<T: Real>(a: &[T], h: &[T], h_adj: &[T], spec: &JetSpec, rows: usize, n: usize) -> Vec<T> {
    let ch = spec.channels();
    let cols = ch * n;
    let nfirst = spec.first.len();
    let second = spec.second_source();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mut a_adj = vec![T::zero(); a.len()];
    let mut s = vec![T::zero(); n];
    let mut s_adj = vec![T::zero(); n];
    let mut y_adj = vec![T::zero(); n];
    for r in 0..rows {
        let ar = &a[r * cols..(r + 1) * cols];
        let y = &h[r * cols..r * cols + n];
        let gr = &h_adj[r * cols..(r + 1) * cols];
        let out = &mut a_adj[r * cols..(r + 1) * cols];
        for ((sv, &yv), (sa, (ya, &g))) in s
            .iter_mut()
            .zip(y)
            .zip(s_adj.iter_mut().zip(y_adj.iter_mut().zip(&gr[..n])))
        {
            *sv = T::one() - yv * yv;
            *sa = T::zero();
            *ya = g;
        }
        for c in 1..=nfirst {
            let g = &gr[c * n..(c + 1) * n];
            let x = &ar[c * n..(c + 1) * n];
            let o = &mut out[c * n..(c + 1) * n];
            for p in 0..n {
                o[p] = g[p] * s[p];
                s_adj[p] += g[p] * x[p];
            }
        }
        if let Some(sc) = second {
            let cc = 1 + nfirst;
            let (lo, hi) = out.split_at_mut(cc * n);
            let o_ss = &mut hi[..n];
            let o_s = &mut lo[sc * n..(sc + 1) * n];
            let g2 = &gr[cc * n..(cc + 1) * n];
            let a_s = &ar[sc * n..(sc + 1) * n];
            let a_ss = &ar[cc * n..(cc + 1) * n];
            for p in 0..n {
                let (yv, sv, g, q) = (y[p], s[p], g2[p], a_s[p]);
                o_ss[p] = g * sv;
                o_s[p] -= four * yv * sv * q * g;
                s_adj[p] += g * (a_ss[p] - two * yv * q * q);
                y_adj[p] -= two * sv * q * q * g;
            }
        }
        for p in 0..n {
            out[p] = (y_adj[p] - two * y[p] * s_adj[p]) * s[p];
        }
    }
    a_adj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Graph;
    use approx::assert_relative_eq;

    fn points() -> Vec<f64> {
        vec![0.1, -0.4, 0.7, 0.2, 0.35, 0.9]
    }

    #[test]
    fn matches_nested_graph_derivatives() {
        let cfg = MlpConfig::new(2, 3, 6, 2);
        let params = cfg.init::<f64>(17);
        let spec = JetSpec::new(vec![0, 1], Some(1)).unwrap();
        let pts = points();
        let jet = Jet::forward(&cfg, &params, &spec, &pts).unwrap();
        for (p, x) in pts.chunks(2).enumerate() {
            let g = Graph::new();
            let vars: Vec<_> = params.iter().map(|&v| g.constant(v)).collect();
            let t = g.variable(x[0]);
            let xv = g.variable(x[1]);
            let out = cfg.forward(&vars, &[t, xv]).unwrap();
            for (o, &u) in out.iter().enumerate() {
                let d = g.grad(u, &[t, xv]).unwrap();
                let uxx = g.grad(d[1], &[xv]).unwrap()[0];
                assert_relative_eq!(jet.get(o, 0, p), u.value(), epsilon = 1e-14);
                assert_relative_eq!(jet.get(o, 1, p), d[0].value(), epsilon = 1e-13);
                assert_relative_eq!(jet.get(o, 2, p), d[1].value(), epsilon = 1e-13);
                assert_relative_eq!(jet.get(o, 3, p), uxx.value(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reverse_sweep_matches_graph_gradient() {
        // L = sum_p w_{o,c,p} * jet(o,c,p) for fixed random weights
        let cfg = MlpConfig::new(2, 2, 5, 2);
        let params = cfg.init::<f64>(3);
        let spec = JetSpec::new(vec![0, 1], Some(1)).unwrap();
        let pts = points();
        let jet = Jet::forward(&cfg, &params, &spec, &pts).unwrap();
        let weights: Vec<f64> = (0..jet.zeros_like_output().len())
            .map(|i| ((i * 7 + 3) as f64).sin())
            .collect();
        let mut grad = vec![0.0; params.len()];
        jet.backward(&cfg, &params, &weights, &mut grad).unwrap();

        let g = Graph::new();
        let pv: Vec<_> = params.iter().map(|&v| g.variable(v)).collect();
        let mut total = g.constant(0.0);
        for (p, x) in pts.chunks(2).enumerate() {
            let t = g.variable(x[0]);
            let xv = g.variable(x[1]);
            let out = cfg.forward(&pv, &[t, xv]).unwrap();
            for (o, &u) in out.iter().enumerate() {
                let d = g.grad(u, &[t, xv]).unwrap();
                let uxx = g.grad(d[1], &[xv]).unwrap()[0];
                for (c, v) in [u, d[0], d[1], uxx].into_iter().enumerate() {
                    total = total + v * weights[jet.index(o, c, p)];
                }
            }
        }
        let expected = g.grad(total, &pv).unwrap();
        for (a, b) in grad.iter().zip(&expected) {
            assert_relative_eq!(*a, b.value(), epsilon = 1e-11, max_relative = 1e-11);
        }
    }

    #[test]
    fn value_only_matches_scalar_eval() {
        let cfg = MlpConfig::new(2, 4, 8, 3);
        let params = cfg.init::<f64>(8);
        let pts = points();
        let jet = Jet::forward(&cfg, &params, &JetSpec::values(), &pts).unwrap();
        for (p, x) in pts.chunks(2).enumerate() {
            let y = cfg.eval(&params, x).unwrap();
            for o in 0..3 {
                assert_relative_eq!(jet.get(o, 0, p), y[o], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn second_direction_must_be_tracked() {
        assert!(JetSpec::new(vec![0], Some(1)).is_err());
        let spec = JetSpec::new(vec![1], Some(1)).unwrap();
        assert_eq!(spec.channels(), 3);
        assert_eq!(spec.first_channel(1), Some(1));
        assert_eq!(spec.second_channel(), Some(2));
    }
}
