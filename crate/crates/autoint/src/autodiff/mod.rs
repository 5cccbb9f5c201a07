//! Differentiation engine: exact mixed input partials (total order ≤ 3 by
//! default) of model outputs, with optional first-order parameter gradients
//! of any such partial.

pub mod check;
pub mod scalar;
pub mod tape;
pub mod tower;

pub use check::finite_difference_check;
pub use scalar::Scalar;
pub use tape::{Tape, Var};
pub use tower::{Shape, Tower};

use crate::ufa::UfaModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ORDER_CEILING: usize = 3;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("total derivative order {requested} exceeds the configured ceiling {ceiling}")]
    OrderCeiling { requested: usize, ceiling: usize },
    #[error("input arity mismatch: model expects {expected}, request covers {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("step must be positive, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Model(#[from] crate::ufa::ModelError),
}

/// A multi-index of input-derivative orders plus a parameter-gradient flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivativeRequest {
    pub orders: Vec<usize>,
    pub with_param_grad: bool,
    #[serde(default = "default_ceiling")]
    pub ceiling: usize,
}

fn default_ceiling() -> usize {
    DEFAULT_ORDER_CEILING
}

impl DerivativeRequest {
    pub fn new(orders: Vec<usize>) -> Self {
        DerivativeRequest {
            orders,
            with_param_grad: false,
            ceiling: DEFAULT_ORDER_CEILING,
        }
    }

    pub fn with_param_grad(mut self) -> Self {
        self.with_param_grad = true;
        self
    }

    pub fn total_order(&self) -> usize {
        self.orders.iter().sum()
    }

    pub fn validate(&self, model_arity: usize) -> Result<(), AutodiffError> {
        if self.orders.len() != model_arity {
            return Err(AutodiffError::ArityMismatch {
                expected: model_arity,
                got: self.orders.len(),
            });
        }
        if self.total_order() > self.ceiling {
            return Err(AutodiffError::OrderCeiling {
                requested: self.total_order(),
                ceiling: self.ceiling,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DerivativeValue {
    pub value: f64,
    pub param_grad: Option<Vec<f64>>,
}

/// Exact mixed partial of the model output at `inputs`, with the parameter
/// gradient of that partial when requested.
pub fn eval_derivative(
    model: &UfaModel,
    inputs: &[f64],
    req: &DerivativeRequest,
) -> Result<DerivativeValue, AutodiffError> {
    req.validate(model.arity())?;
    if inputs.len() != model.arity() {
        return Err(AutodiffError::ArityMismatch {
            expected: model.arity(),
            got: inputs.len(),
        });
    }
    let seeded: Vec<usize> = (0..inputs.len()).filter(|&i| req.orders[i] > 0).collect();
    let arity = seeded.len().max(1);
    let order = req.total_order();
    let shape = Shape::get(arity, order);
    let dir_orders: Vec<usize> = if seeded.is_empty() {
        vec![0; arity]
    } else {
        seeded.iter().map(|&i| req.orders[i]).collect()
    };

    if !req.with_param_grad {
        let params = model.params().to_vec();
        let towers: Vec<Tower<f64>> = inputs
            .iter()
            .enumerate()
            .map(|(i, &x)| match seeded.iter().position(|&s| s == i) {
                Some(dir) => Tower::seed(shape, dir, x),
                None => Tower::constant(shape, x),
            })
            .collect();
        let out = model.eval_tower(&params, &towers)?;
        Ok(DerivativeValue {
            value: out.extract(&dir_orders),
            param_grad: None,
        })
    } else {
        let tape = Tape::with_capacity(1 << 14);
        let params: Vec<Var<'_>> = model.params().iter().map(|&p| tape.var(p)).collect();
        let towers: Vec<Tower<Var<'_>>> = inputs
            .iter()
            .enumerate()
            .map(|(i, &x)| match seeded.iter().position(|&s| s == i) {
                Some(dir) => Tower::seed(shape, dir, Var::constant(x)),
                None => Tower::constant(shape, Var::constant(x)),
            })
            .collect();
        let out = model.eval_tower(&params, &towers)?;
        let coeff = out.extract(&dir_orders);
        let grad = tape.gradient(coeff, &params);
        Ok(DerivativeValue {
            value: coeff.value(),
            param_grad: Some(grad),
        })
    }
}
