//! Dense tanh multilayer perceptron evaluated in tower arithmetic.

use crate::autodiff::{Scalar, Tower};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Architecture of a dense network with tanh hidden layers and a linear
/// output layer. `layer_widths` runs input first, output last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub layer_widths: Vec<usize>,
    pub init_seed: u64,
}

impl MlpConfig {
    pub fn new(layer_widths: Vec<usize>, init_seed: u64) -> Self {
        assert!(layer_widths.len() >= 2, "need at least input and output");
        assert!(layer_widths.iter().all(|&w| w > 0));
        MlpConfig {
            layer_widths,
            init_seed,
        }
    }

    pub fn arity(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn n_params(&self) -> usize {
        self.layer_widths
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Glorot-uniform weights, zero biases. Layout per layer: weights in
    /// row-major (out × in), then biases.
    pub fn init_params(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.init_seed);
        let mut params = Vec::with_capacity(self.n_params());
        for w in self.layer_widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.gen_range(-limit..limit));
            }
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        params
    }
}

pub fn forward<S: Scalar>(
    config: &MlpConfig,
    params: &[S],
    inputs: &[Tower<S>],
) -> Tower<S> {
    assert_eq!(inputs.len(), config.arity(), "mlp input arity mismatch");
    assert_eq!(params.len(), config.n_params());
    let n_layers = config.layer_widths.len() - 1;
    let mut activations: Vec<Tower<S>> = inputs.to_vec();
    let mut offset = 0;
    for (layer, w) in config.layer_widths.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let mut next = Vec::with_capacity(fan_out);
        for j in 0..fan_out {
            let mut acc = activations[0].scale_s(params[offset + j * fan_in]);
            for i in 1..fan_in {
                acc = acc.add(&activations[i].scale_s(params[offset + j * fan_in + i]));
            }
            acc = acc.add_s(params[offset + fan_in * fan_out + j]);
            if layer + 1 < n_layers {
                acc = acc.tanh();
            }
            next.push(acc);
        }
        offset += fan_in * fan_out + fan_out;
        activations = next;
    }
    assert_eq!(activations.len(), 1, "scalar output expected");
    activations.pop().unwrap()
}
