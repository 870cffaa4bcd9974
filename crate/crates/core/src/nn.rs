//! Fully-connected layers with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

/// `y = act(W x + b)` with `W` stored row-major, `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Dense {
            inputs,
            outputs,
            activation,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Weights and biases drawn uniformly from `[-scale, scale]`.
    pub fn uniform<R: Rng>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut draw = || rng.random_range(-scale..=scale);
        let weights = (0..inputs * outputs).map(|_| draw()).collect();
        let bias = (0..outputs).map(|_| draw()).collect();
        Dense { inputs, outputs, activation, weights, bias }
    }

    /// He-style uniform init for rectifier layers; biases start at zero.
    pub fn he_uniform<R: Rng>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let scale = (6.0 / inputs as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-scale..=scale)).collect();
        Dense { inputs, outputs, activation, weights, bias: vec![0.0; outputs] }
    }

    pub fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.pre_activation(x).into_iter().map(|z| self.activation.apply(z)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations recorded during a forward pass, needed for backprop.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `inputs[k]` is the input to layer `k`; the last entry is the network output.
    pub inputs: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("trace holds the input at least")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<DenseGrad>,
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Grads {
            layers: net
                .layers
                .iter()
                .map(|l| DenseGrad { weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.bias.len()] })
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|g| g.weights.iter().chain(&g.bias).copied()).collect()
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.layers {
            g.weights.iter_mut().chain(g.bias.iter_mut()).for_each(|x| *x *= s);
        }
    }

    pub fn add(&mut self, other: &Grads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }
}

impl Mlp {
    pub fn new(layers: Vec<Dense>) -> Self {
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.layers.iter().fold(x.to_vec(), |h, l| l.forward(&h))
    }

    pub fn forward_trace(&self, x: &[f64]) -> Trace {
        let mut inputs = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let z = l.pre_activation(inputs.last().expect("non-empty"));
            inputs.push(z.iter().map(|&v| l.activation.apply(v)).collect());
            pre.push(z);
        }
        Trace { inputs, pre }
    }

    /// Accumulates parameter gradients into `grads` given `dL/d output` and
    /// returns `dL/d input`.
    pub fn backward(&self, trace: &Trace, grad_out: &[f64], grads: &mut Grads) -> Vec<f64> {
        let mut delta = grad_out.to_vec();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let x = &trace.inputs[k];
            let y = &trace.inputs[k + 1];
            for (o, d) in delta.iter_mut().enumerate() {
                *d *= l.activation.derivative(trace.pre[k][o], y[o]);
            }
            let g = &mut grads.layers[k];
            let mut grad_in = vec![0.0; l.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                let grow = &mut g.weights[o * l.inputs..(o + 1) * l.inputs];
                for i in 0..l.inputs {
                    grow[i] += d * x[i];
                    grad_in[i] += d * row[i];
                }
            }
            delta = grad_in;
        }
        delta
    }

    /// `θ ← θ − lr · g`.
    pub fn step(&mut self, grads: &Grads, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            l.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= lr * d);
            l.bias.iter_mut().zip(&g.bias).for_each(|(b, d)| *b -= lr * d);
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// Parameters in the same order as [`Grads::flat`].
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for l in &mut self.layers {
            if idx < l.weights.len() {
                return &mut l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.bias.len() {
                return &mut l.bias[idx];
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }
}

/// Central-difference gradient of `f` with respect to every parameter of `net`.
pub fn numeric_gradient(net: &Mlp, eps: f64, mut f: impl FnMut(&Mlp) -> f64) -> Vec<f64> {
    let mut work = net.clone();
    (0..net.param_count())
        .map(|i| {
            let orig = *work.param_mut(i);
            *work.param_mut(i) = orig + eps;
            let plus = f(&work);
            *work.param_mut(i) = orig - eps;
            let minus = f(&work);
            *work.param_mut(i) = orig;
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// Largest `|a − n| / max(|a|, |n|, floor)` over paired gradient entries.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(rng: &mut ChaCha8Rng) -> Mlp {
        Mlp::new(vec![
            Dense::uniform(4, 5, Activation::Tanh, 0.8, rng),
            Dense::uniform(5, 3, Activation::Relu, 0.8, rng),
            Dense::uniform(3, 2, Activation::Sigmoid, 0.8, rng),
        ])
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let n = net(&mut rng);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let target = [0.3, 0.9];
            let loss = |m: &Mlp| {
                let y = m.forward(&x);
                y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            };
            let trace = n.forward_trace(&x);
            let gout: Vec<f64> = trace.output().iter().zip(target).map(|(a, b)| 2.0 * (a - b)).collect();
            let mut g = Grads::zeros_like(&n);
            n.backward(&trace, &gout, &mut g);
            let numeric = numeric_gradient(&n, 1e-5, loss);
            assert!(max_relative_error(&g.flat(), &numeric, 1e-7) < 1e-4);
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = net(&mut rng);
        let x = vec![0.2, -0.4, 0.7, 0.1];
        let trace = n.forward_trace(&x);
        let mut g = Grads::zeros_like(&n);
        let gin = n.backward(&trace, &[1.0, -2.0], &mut g);
        for i in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            let f = |v: &[f64]| {
                let y = n.forward(v);
                y[0] - 2.0 * y[1]
            };
            let num = (f(&xp) - f(&xm)) / 2e-6;
            assert!((num - gin[i]).abs() < 1e-6, "{num} vs {}", gin[i]);
        }
    }

    #[test]
    fn zero_network_outputs_half() {
        let n = Mlp::new(vec![
            Dense::zeros(7, 16, Activation::Tanh),
            Dense::zeros(16, 7, Activation::Sigmoid),
        ]);
        assert!(n.forward(&[0.3; 7]).iter().all(|&p| p == 0.5));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!(sigmoid(-800.0).is_finite());
    }
}
