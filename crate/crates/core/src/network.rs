//! Multilayer perceptron with a single sigmoid output unit.
//!
//! Weights live in one flat vector. For each layer `l` with `n_in` inputs
//! and `n_out` outputs, the `n_out × n_in` weight matrix is stored
//! row-major, followed by its `n_out` biases; layers follow in order. The
//! default `[120, 5, 5, 1]` network has 605 + 30 + 6 = 641 parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Version tag of the weight layout above, stored in model files.
pub const WEIGHT_LAYOUT_VERSION: &str = "layer-major/row-major/bias-last/v1";

/// Probabilities are clamped to `[EPS, 1 − EPS]` inside the log-likelihood.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation value `a` and input `z`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    /// Always "sigmoid"; stored for model-file readers.
    #[serde(default = "sigmoid_name")]
    pub output_activation: String,
}

fn sigmoid_name() -> String {
    "sigmoid".to_string()
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            layer_sizes: vec![120, 5, 5, 1],
            hidden_activation: Activation::Tanh,
            output_activation: sigmoid_name(),
        }
    }
}

impl Architecture {
    pub fn new(layer_sizes: Vec<usize>, hidden_activation: Activation) -> Result<Self> {
        let arch = Self {
            layer_sizes,
            hidden_activation,
            output_activation: sigmoid_name(),
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = &self.layer_sizes;
        if sizes.len() < 3 {
            return Err(Error::config(
                "architecture.layer_sizes",
                "need an input layer, at least one hidden layer and the output unit",
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::config(
                "architecture.layer_sizes",
                "layer sizes must be positive",
            ));
        }
        if *sizes.last().unwrap() != 1 {
            return Err(Error::config(
                "architecture.layer_sizes",
                "the output layer must have exactly one unit",
            ));
        }
        if self.output_activation != "sigmoid" {
            return Err(Error::config(
                "architecture.output_activation",
                "only the sigmoid output is supported",
            ));
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    fn check(&self, w: &[f64], x: &[f64]) -> Result<()> {
        if w.len() != self.n_params() {
            return Err(Error::DimensionMismatch(format!(
                "weight vector has {} entries, architecture {:?} needs {}",
                w.len(),
                self.layer_sizes,
                self.n_params()
            )));
        }
        if x.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.n_inputs()
            )));
        }
        Ok(())
    }
}

/// Activations of every layer for one input; reused across items.
struct Tape {
    /// Pre-activations per non-input layer.
    z: Vec<Vec<f64>>,
    /// Activations per layer, `a[0]` is the input.
    a: Vec<Vec<f64>>,
}

impl Tape {
    fn new(arch: &Architecture) -> Self {
        Self {
            z: arch.layer_sizes[1..]
                .iter()
                .map(|&n| vec![0.0; n])
                .collect(),
            a: arch.layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Returns the output pre-activation.
    fn run(&mut self, arch: &Architecture, w: &[f64], x: &[f64]) -> f64 {
        self.a[0].copy_from_slice(x);
        let n_layers = arch.layer_sizes.len() - 1;
        let mut offset = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (arch.layer_sizes[l], arch.layer_sizes[l + 1]);
            let weights = &w[offset..offset + n_in * n_out];
            let biases = &w[offset + n_in * n_out..offset + (n_in + 1) * n_out];
            offset += (n_in + 1) * n_out;
            let (prev, rest) = self.a.split_at_mut(l + 1);
            let input = &prev[l];
            for j in 0..n_out {
                let row = &weights[j * n_in..(j + 1) * n_in];
                let zj = row.iter().zip(input).map(|(wi, xi)| wi * xi).sum::<f64>() + biases[j];
                self.z[l][j] = zj;
                rest[0][j] = if l + 1 == n_layers {
                    sigmoid(zj)
                } else {
                    arch.hidden_activation.apply(zj)
                };
            }
        }
        self.z[n_layers - 1][0]
    }
}

/// Output probability `sigmoid(z_out)` for one input (unclamped).
pub fn forward(arch: &Architecture, w: &[f64], x: &[f64]) -> Result<f64> {
    arch.check(w, x)?;
    let mut tape = Tape::new(arch);
    Ok(sigmoid(tape.run(arch, w, x)))
}

/// Bernoulli log-likelihood of one item from the output pre-activation,
/// with the probability clamped to `[PROB_EPS, 1 − PROB_EPS]`. Also returns
/// its derivative with respect to the pre-activation (zero where clamped).
fn item_log_likelihood(z: f64, y: f64) -> (f64, f64) {
    let p = sigmoid(z);
    if p < PROB_EPS {
        (y * PROB_EPS.ln() + (1.0 - y) * (-PROB_EPS).ln_1p(), 0.0)
    } else if p > 1.0 - PROB_EPS {
        (y * (-PROB_EPS).ln_1p() + (1.0 - y) * PROB_EPS.ln(), 0.0)
    } else {
        // log p = −softplus(−z), log(1 − p) = −softplus(z)
        (-y * softplus(-z) - (1.0 - y) * softplus(z), y - p)
    }
}

fn target(v: &FeatureVector) -> f64 {
    v.label.index() as f64
}

/// `Σ y·log p + (1 − y)·log(1 − p)` over the batch; 0 for an empty batch.
pub fn log_likelihood(arch: &Architecture, w: &[f64], batch: &[FeatureVector]) -> Result<f64> {
    let mut tape = Tape::new(arch);
    let mut total = 0.0;
    for item in batch {
        arch.check(w, &item.values)?;
        let z = tape.run(arch, w, &item.values);
        total += item_log_likelihood(z, target(item)).0;
    }
    Ok(total)
}

/// Gradient of [`log_likelihood`] with respect to every weight and bias.
pub fn backprop(arch: &Architecture, w: &[f64], batch: &[FeatureVector]) -> Result<Vec<f64>> {
    log_likelihood_and_grad(arch, w, batch).map(|(_, g)| g)
}

/// Log-likelihood and its gradient in one pass. Items are accumulated in
/// batch order.
pub fn log_likelihood_and_grad(
    arch: &Architecture,
    w: &[f64],
    batch: &[FeatureVector],
) -> Result<(f64, Vec<f64>)> {
    let n_layers = arch.layer_sizes.len() - 1;
    let mut grad = vec![0.0; arch.n_params()];
    let mut tape = Tape::new(arch);
    let mut delta: Vec<Vec<f64>> = arch.layer_sizes[1..]
        .iter()
        .map(|&n| vec![0.0; n])
        .collect();
    let offsets: Vec<usize> = arch
        .layer_sizes
        .windows(2)
        .scan(0, |acc, s| {
            let start = *acc;
            *acc += (s[0] + 1) * s[1];
            Some(start)
        })
        .collect();

    let mut total = 0.0;
    for item in batch {
        arch.check(w, &item.values)?;
        let z_out = tape.run(arch, w, &item.values);
        let (ll, dz) = item_log_likelihood(z_out, target(item));
        total += ll;
        if dz == 0.0 {
            continue;
        }
        delta[n_layers - 1][0] = dz;
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (arch.layer_sizes[l], arch.layer_sizes[l + 1]);
            let off = offsets[l];
            let input = &tape.a[l];
            for j in 0..n_out {
                let d = delta[l][j];
                let row = &mut grad[off + j * n_in..off + (j + 1) * n_in];
                for (g, xi) in row.iter_mut().zip(input) {
                    *g += d * xi;
                }
                grad[off + n_in * n_out + j] += d;
            }
            if l > 0 {
                let weights = &w[off..off + n_in * n_out];
                let (lower, upper) = delta.split_at_mut(l);
                let below = &mut lower[l - 1];
                for i in 0..n_in {
                    let back: f64 = (0..n_out)
                        .map(|j| weights[j * n_in + i] * upper[0][j])
                        .sum();
                    below[i] = back
                        * arch
                            .hidden_activation
                            .derivative(tape.z[l - 1][i], tape.a[l][i]);
                }
            }
        }
    }
    Ok((total, grad))
}
