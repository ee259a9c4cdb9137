//! Dense tanh networks with a flat parameter vector.
//!
//! Parameters are stored layer by layer; within a layer the weight matrix
//! comes first (row-major, one row per output neuron) followed by the bias
//! vector. Hidden layers use `tanh`, the output layer is affine.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Deref;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autodiff::Var;
use crate::error::{argument, structural, Error, Result};
use crate::sampler::Rng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub output_dim: usize,
    #[serde(default)]
    pub activation: Activation,
}

/// Shape and offsets of one affine layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl LayerShape {
    pub fn end(&self) -> usize {
        self.bias_offset + self.outputs
    }
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden_layers: usize, hidden_width: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_layers,
            hidden_width,
            output_dim,
            activation: Activation::Tanh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_layers == 0 || self.hidden_width == 0 || self.output_dim == 0 {
            return Err(argument(format!("every network dimension must be positive: {self}")));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        let w = self.hidden_width;
        (self.input_dim * w + w) + (self.hidden_layers - 1) * (w * w + w) + (w * self.output_dim + self.output_dim)
    }

    /// Affine layers in evaluation order; the last one is the output layer.
    pub fn layers(&self) -> Vec<LayerShape> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 2);
        dims.push(self.input_dim);
        dims.extend(std::iter::repeat(self.hidden_width).take(self.hidden_layers));
        dims.push(self.output_dim);
        let mut offset = 0;
        dims.windows(2)
            .map(|io| {
                let shape = LayerShape {
                    inputs: io[0],
                    outputs: io[1],
                    weight_offset: offset,
                    bias_offset: offset + io[0] * io[1],
                };
                offset = shape.end();
                shape
            })
            .collect()
    }

    /// Glorot-normal weights (`std = sqrt(2 / (fan_in + fan_out))`), zero biases.
    pub fn init<T: Real>(&self, seed: u64) -> ParameterVector<T> {
        let mut rng = Rng::seed_from_u64(seed);
        let mut params = vec![T::zero(); self.parameter_count()];
        for layer in self.layers() {
            let std = (2.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive standard deviation");
            for w in &mut params[layer.weight_offset..layer.bias_offset] {
                *w = T::lit(normal.sample(&mut rng));
            }
        }
        ParameterVector(params)
    }

    fn check_params(&self, len: usize) -> Result<()> {
        if len != self.parameter_count() {
            return Err(structural(format!(
                "network {self} expects {} parameters, got {len}",
                self.parameter_count()
            )));
        }
        Ok(())
    }

    /// Record the network on a graph. `params` are the graph variables
    /// holding the parameters (usually free variables, so the result can be
    /// differentiated with respect to them).
    pub fn forward<'g, T: Real>(&self, params: &[Var<'g, T>], inputs: &[Var<'g, T>]) -> Result<Vec<Var<'g, T>>> {
        self.check_params(params.len())?;
        if inputs.len() != self.input_dim {
            return Err(structural(format!(
                "network expects {} inputs, got {}",
                self.input_dim,
                inputs.len()
            )));
        }
        let layers = self.layers();
        let last = layers.len() - 1;
        let mut h: Vec<Var<'g, T>> = inputs.to_vec();
        for (l, layer) in layers.iter().enumerate() {
            let next = (0..layer.outputs)
                .map(|r| {
                    let row = layer.weight_offset + r * layer.inputs;
                    let mut acc = params[layer.bias_offset + r];
                    for (c, &hc) in h.iter().enumerate() {
                        acc = acc + params[row + c] * hc;
                    }
                    if l == last {
                        acc
                    } else {
                        acc.tanh()
                    }
                })
                .collect();
            h = next;
        }
        Ok(h)
    }

    /// Plain scalar evaluation at one input point.
    pub fn eval<T: Real>(&self, params: &[T], input: &[T]) -> Result<Vec<T>> {
        self.check_params(params.len())?;
        if input.len() != self.input_dim {
            return Err(structural(format!(
                "network expects {} inputs, got {}",
                self.input_dim,
                input.len()
            )));
        }
        let layers = self.layers();
        let last = layers.len() - 1;
        let mut h = input.to_vec();
        for (l, layer) in layers.iter().enumerate() {
            h = (0..layer.outputs)
                .map(|r| {
                    let row = &params[layer.weight_offset + r * layer.inputs..][..layer.inputs];
                    let acc = row
                        .iter()
                        .zip(&h)
                        .fold(params[layer.bias_offset + r], |acc, (&w, &x)| acc + w * x);
                    if l == last {
                        acc
                    } else {
                        acc.tanh()
                    }
                })
                .collect();
        }
        Ok(h)
    }
}

impl fmt::Display for MlpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}x{}-{}",
            self.input_dim, self.hidden_layers, self.hidden_width, self.output_dim
        )
    }
}

/// Flat network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector<T>(Vec<T>);

impl<T: Real> ParameterVector<T> {
    pub fn new(config: &MlpConfig, values: Vec<T>) -> Result<Self> {
        config.check_params(values.len())?;
        Ok(Self(values))
    }

    pub fn zeros(config: &MlpConfig) -> Self {
        Self(vec![T::zero(); config.parameter_count()])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    /// Replace every value; the length must not change.
    pub fn set(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.0.len() {
            return Err(structural(format!(
                "expected {} parameters, got {}",
                self.0.len(),
                values.len()
            )));
        }
        self.0.copy_from_slice(values);
        Ok(())
    }
}

impl<T> Deref for ParameterVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

const CHECKPOINT_MAGIC: &str = "pinn-mlp-checkpoint v1";

/// Write a text checkpoint: a magic line, a config line, then one parameter
/// per line in `{:.16e}` notation (round-trips every `f64` exactly).
pub fn write_checkpoint<W: Write>(mut out: W, config: &MlpConfig, params: &ParameterVector<f64>) -> Result<()> {
    writeln!(out, "{CHECKPOINT_MAGIC}")?;
    writeln!(
        out,
        "input_dim={} hidden_layers={} hidden_width={} output_dim={} activation=tanh count={}",
        config.input_dim,
        config.hidden_layers,
        config.hidden_width,
        config.output_dim,
        params.len()
    )?;
    for p in params.iter() {
        writeln!(out, "{p:.16e}")?;
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<(MlpConfig, ParameterVector<f64>)> {
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = input.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(parse_err(0, format!("missing {what}"))),
        }
    };
    let (n, magic) = next("magic line")?;
    if magic.trim() != CHECKPOINT_MAGIC {
        return Err(parse_err(n, format!("unexpected header {magic:?}")));
    }
    let (n, header) = next("config line")?;
    let mut fields = std::collections::HashMap::new();
    for kv in header.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| parse_err(n, format!("malformed field {kv:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<usize> {
        fields
            .get(k)
            .ok_or_else(|| parse_err(n, format!("missing {k}")))?
            .parse()
            .map_err(|e| parse_err(n, format!("{k}: {e}")))
    };
    if fields.get("activation").map(String::as_str) != Some("tanh") {
        return Err(parse_err(n, "activation must be tanh".into()));
    }
    let config = MlpConfig::new(
        get("input_dim")?,
        get("hidden_layers")?,
        get("hidden_width")?,
        get("output_dim")?,
    );
    config.validate()?;
    let count = get("count")?;
    if count != config.parameter_count() {
        return Err(parse_err(n, format!("count {count} does not match {config}")));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = next("parameter")?;
        values.push(l.trim().parse::<f64>().map_err(|e| parse_err(n, e.to_string()))?);
    }
    Ok((config, ParameterVector(values)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Graph;
    use approx::assert_relative_eq;

    #[test]
    fn paper_architectures_have_expected_sizes() {
        assert_eq!(MlpConfig::new(2, 8, 20, 1).parameter_count(), 3021);
        // (2*100 + 100) + 3*(100^2 + 100) + (100*2 + 2)
        assert_eq!(MlpConfig::new(2, 4, 100, 2).parameter_count(), 30802);
        let burgers = MlpConfig::new(2, 8, 20, 1);
        assert_eq!(burgers.init::<f64>(3).len(), 3021);
        assert_eq!(burgers.layers().last().unwrap().end(), 3021);
    }

    #[test]
    fn init_is_deterministic_and_glorot_scaled() {
        let cfg = MlpConfig::new(2, 4, 100, 2);
        let a = cfg.init::<f64>(11);
        assert_eq!(a, cfg.init::<f64>(11));
        assert_ne!(a, cfg.init::<f64>(12));
        let hidden = cfg.layers()[1];
        let w = &a[hidden.weight_offset..hidden.bias_offset];
        let var = w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        assert_relative_eq!(var, 2.0 / 200.0, max_relative = 0.05);
        assert!(a[hidden.bias_offset..hidden.end()].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let cfg = MlpConfig::new(2, 3, 5, 2);
        let p = ParameterVector::<f64>::zeros(&cfg);
        assert_eq!(cfg.eval(&p, &[0.3, -0.8]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_set_single_hidden_neuron() {
        let cfg = MlpConfig::new(2, 1, 1, 1);
        // W1 = [1, 0], b1 = 0, W2 = [1], b2 = 0
        let p = ParameterVector::new(&cfg, vec![1.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let out = cfg.eval(&p, &[0.5, 0.0]).unwrap()[0];
        assert_relative_eq!(out, 0.46211715726, epsilon = 1e-11);

        let g = Graph::new();
        let vars: Vec<_> = p.iter().map(|&v| g.variable(v)).collect();
        let inputs = [g.variable(0.5), g.variable(0.0)];
        let y = cfg.forward(&vars, &inputs).unwrap()[0];
        assert_eq!(y.value(), out);
    }

    #[test]
    fn sign_flip_of_weights_follows_affine_layer_parity() {
        // With zero biases, flipping every weight multiplies the output by
        // (-1)^(number of affine layers), since tanh is odd.
        let x = [0.2, -0.7];
        for (hidden, sign) in [(1, 1.0), (2, -1.0)] {
            let cfg = MlpConfig::new(2, hidden, 7, 1);
            let mut p = cfg.init::<f64>(5);
            let y = cfg.eval(&p, &x).unwrap()[0];
            for v in p.as_mut_slice() {
                *v = -*v;
            }
            assert_relative_eq!(cfg.eval(&p, &x).unwrap()[0], sign * y, epsilon = 1e-15);
        }
    }

    #[test]
    fn dimension_mismatches_are_structural() {
        let cfg = MlpConfig::new(2, 1, 3, 1);
        let p = cfg.init::<f64>(0);
        assert!(matches!(cfg.eval(&p, &[1.0]), Err(Error::Structural(_))));
        assert!(matches!(cfg.eval(&p[1..], &[1.0, 2.0]), Err(Error::Structural(_))));
        assert!(ParameterVector::new(&cfg, vec![0.0; 3]).is_err());
        let g = Graph::<f64>::new();
        let vars: Vec<_> = p.iter().map(|&v| g.variable(v)).collect();
        assert!(cfg.forward(&vars, &[g.variable(1.0)]).is_err());
    }

    #[test]
    fn set_then_get_round_trips() {
        let cfg = MlpConfig::new(1, 2, 3, 2);
        let mut p = ParameterVector::<f64>::zeros(&cfg);
        let vals: Vec<f64> = (0..cfg.parameter_count()).map(|i| i as f64 * 0.1).collect();
        p.set(&vals).unwrap();
        assert_eq!(p.as_slice(), &vals[..]);
        assert!(p.set(&vals[1..]).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let cfg = MlpConfig::new(2, 2, 4, 1);
        let p = cfg.init::<f64>(9);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &cfg, &p).unwrap();
        let (cfg2, p2) = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(p, p2);

        let text = String::from_utf8(buf).unwrap().replace("count=37", "count=36");
        assert!(matches!(
            read_checkpoint(text.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
