//! Universal function approximators with a common evaluate/differentiate
//! surface: a dense tanh MLP and a simulated differentiable quantum circuit,
//! plus the exponential-pinning wrapper used to enforce boundary conditions.

pub mod dqc;
pub mod mlp;

pub use dqc::{DqcConfig, DqcError};
pub use mlp::MlpConfig;

use crate::autodiff::{Scalar, Shape, Tower};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Dqc(#[from] DqcError),
    #[error("model file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported model format version {0}")]
    FormatVersion(u32),
    #[error("parameter vector length {got} does not match architecture ({expected})")]
    ParamLength { expected: usize, got: usize },
    #[error("pinning supports conditions up to second derivative order, got order {0}")]
    PinOrder(usize),
    #[error("pinning requires a single-input model, arity is {0}")]
    PinArity(usize),
}

/// Flat parameter vector θ with an architecture-defined layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Mlp(MlpConfig),
    Dqc(DqcConfig),
}

impl ModelConfig {
    pub fn arity(&self) -> usize {
        match self {
            ModelConfig::Mlp(c) => c.arity(),
            ModelConfig::Dqc(_) => 1,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            ModelConfig::Mlp(c) => c.n_params(),
            ModelConfig::Dqc(c) => c.n_params(),
        }
    }

    pub fn init_params(&self) -> Vec<f64> {
        match self {
            ModelConfig::Mlp(c) => c.init_params(),
            ModelConfig::Dqc(c) => c.init_params(),
        }
    }

    pub fn init_seed(&self) -> u64 {
        match self {
            ModelConfig::Mlp(c) => c.init_seed,
            ModelConfig::Dqc(c) => c.init_seed,
        }
    }
}

/// Boundary pinning data: the wrapped model
/// G̃(t) = P(t) + (1 − e^{−α(t−t0)})^{m+1}·N(t)
/// satisfies G̃^{(k)}(t0) = values[k] exactly for any parameters, where P is
/// the lowest-degree polynomial matching the pinned values and m is the
/// highest pinned order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinSpec {
    pub t0: f64,
    pub alpha: f64,
    /// values[k] pins the k-th derivative at t0; up to order 2.
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: ModelConfig,
    params: ParameterVector,
    pin: Option<PinSpec>,
}

/// A UFA with its parameters. Evaluation counts are tracked so readouts can
/// assert the two-evaluation contract.
#[derive(Debug, Serialize, Deserialize)]
pub struct UfaModel {
    config: ModelConfig,
    pub params: ParameterVector,
    pin: Option<PinSpec>,
    #[serde(skip)]
    eval_count: AtomicU64,
}

impl Clone for UfaModel {
    fn clone(&self) -> Self {
        UfaModel {
            config: self.config.clone(),
            params: self.params.clone(),
            pin: self.pin.clone(),
            eval_count: AtomicU64::new(0),
        }
    }
}

impl UfaModel {
    pub fn new(config: ModelConfig) -> Self {
        let params = ParameterVector(config.init_params());
        UfaModel {
            config,
            params,
            pin: None,
            eval_count: AtomicU64::new(0),
        }
    }

    pub fn new_mlp(layer_widths: Vec<usize>, init_seed: u64) -> Self {
        Self::new(ModelConfig::Mlp(MlpConfig::new(layer_widths, init_seed)))
    }

    pub fn new_dqc(config: DqcConfig) -> Self {
        Self::new(ModelConfig::Dqc(config))
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn pin(&self) -> Option<&PinSpec> {
        self.pin.as_ref()
    }

    pub fn arity(&self) -> usize {
        self.config.arity()
    }

    pub fn n_params(&self) -> usize {
        self.config.n_params()
    }

    pub fn params(&self) -> &[f64] {
        &self.params.0
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<(), ModelError> {
        if params.len() != self.n_params() {
            return Err(ModelError::ParamLength {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        self.params = ParameterVector(params);
        Ok(())
    }

    /// Wraps this model so boundary conditions at `t0` hold exactly for any
    /// parameters. `values[k]` pins the k-th derivative; orders above 2 are
    /// rejected. An empty list returns the model unchanged.
    pub fn pinned(mut self, t0: f64, alpha: f64, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Ok(self);
        }
        if values.len() > 3 {
            return Err(ModelError::PinOrder(values.len() - 1));
        }
        if self.arity() != 1 {
            return Err(ModelError::PinArity(self.arity()));
        }
        self.pin = Some(PinSpec { t0, alpha, values });
        Ok(self)
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count.load(Ordering::Relaxed)
    }

    pub fn reset_eval_count(&self) {
        self.eval_count.store(0, Ordering::Relaxed);
    }

    /// One forward pass in tower arithmetic. This is the single entry point
    /// both for plain evaluation (f64 coefficients) and for parameter
    /// gradients (tape-variable coefficients).
    pub fn eval_tower<S: Scalar>(
        &self,
        params: &[S],
        inputs: &[Tower<S>],
    ) -> Result<Tower<S>, ModelError> {
        self.eval_count.fetch_add(1, Ordering::Relaxed);
        let raw = match &self.config {
            ModelConfig::Mlp(c) => mlp::forward(c, params, inputs),
            ModelConfig::Dqc(c) => dqc::forward(c, params, &inputs[0])?,
        };
        match &self.pin {
            None => Ok(raw),
            Some(pin) => Ok(apply_pin(pin, &inputs[0], &raw)),
        }
    }

    /// Plain scalar evaluation with the model's own parameters.
    pub fn eval_f64(&self, inputs: &[f64]) -> f64 {
        let shape = Shape::get(1, 0);
        let towers: Vec<Tower<f64>> = inputs
            .iter()
            .map(|&x| Tower::constant(shape, x))
            .collect();
        self.eval_tower(&self.params.0, &towers)
            .expect("scalar evaluation failed")
            .value()
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config: self.config.clone(),
            params: self.params.clone(),
            pin: self.pin.clone(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::FormatVersion(file.format_version));
        }
        if file.params.0.len() != file.config.n_params() {
            return Err(ModelError::ParamLength {
                expected: file.config.n_params(),
                got: file.params.0.len(),
            });
        }
        Ok(UfaModel {
            config: file.config,
            params: file.params,
            pin: file.pin,
            eval_count: AtomicU64::new(0),
        })
    }
}

fn apply_pin<S: Scalar>(pin: &PinSpec, t: &Tower<S>, raw: &Tower<S>) -> Tower<S> {
    let dt = t.add_s(S::constant(-pin.t0));
    // P(t) = Σ values[k]/k! · (t−t0)^k via Horner.
    let m = pin.values.len() - 1;
    let mut fact = 1.0;
    let coeffs: Vec<f64> = pin
        .values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            if k > 0 {
                fact *= k as f64;
            }
            v / fact
        })
        .collect();
    let mut poly = Tower::constant(t.shape, S::constant(coeffs[m]));
    for k in (0..m).rev() {
        poly = poly.mul(&dt).add_s(S::constant(coeffs[k]));
    }
    let decay = dt.scale(-pin.alpha).exp();
    let factor = Tower::constant(t.shape, S::one()).sub(&decay);
    let mut gate = factor.clone();
    for _ in 0..m {
        gate = gate.mul(&factor);
    }
    poly.add(&gate.mul(raw))
}

/// Compares the engine's ∂⟨O⟩/∂θ_k against the parameter-shift rule
/// (⟨O⟩(θ_k + π/2) − ⟨O⟩(θ_k − π/2))/2. Returns |analytic − shift| scaled by
/// max(1, |analytic|).
pub fn dqc_parameter_shift_check(
    model: &UfaModel,
    input: f64,
    param_index: usize,
) -> Result<f64, ModelError> {
    use crate::autodiff::{Tape, Var};
    let shape = Shape::get(1, 0);
    let tape = Tape::new();
    let params: Vec<Var<'_>> = model.params().iter().map(|&p| tape.var(p)).collect();
    let out = model.eval_tower(&params, &[Tower::constant(shape, Var::constant(input))])?;
    let analytic = tape.gradient(out.value(), &params)[param_index];

    let shift = std::f64::consts::FRAC_PI_2;
    let mut plus = model.clone();
    let mut theta = plus.params().to_vec();
    theta[param_index] += shift;
    plus.set_params(theta)?;
    let mut minus = model.clone();
    let mut theta = minus.params().to_vec();
    theta[param_index] -= shift;
    minus.set_params(theta)?;
    let shifted = (plus.eval_f64(&[input]) - minus.eval_f64(&[input])) / 2.0;

    Ok((analytic - shifted).abs() / analytic.abs().max(1.0))
}
