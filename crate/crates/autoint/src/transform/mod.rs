//! The core algorithm: a surrogate G whose input-derivative equals
//! kernel × unknown function, mechanical substitution of residuals and data
//! terms into surrogate form, and transform readout as the difference of two
//! surrogate evaluations.

pub mod expr;

pub use expr::{eval, CoordSpec, EvalCtx, Expr, Func, SurrogateCache, TransformError};

use crate::autodiff::{eval_derivative, DerivativeRequest};
use crate::ufa::UfaModel;
use serde::{Deserialize, Serialize};

/// Weight function of the integral transform, with optional support limits
/// and a guard tolerance for its zero set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    /// k as an expression over the surrogate coordinates.
    pub expr: Expr,
    /// Coordinate playing the role of the integration variable s.
    pub s_var: usize,
    /// Optional support [s_a, s_b]; k is taken to vanish outside.
    pub support: Option<(f64, f64)>,
    /// |k| at or below this is treated as a kernel zero.
    pub zero_tol: f64,
}

impl Kernel {
    pub fn new(expr: Expr, s_var: usize) -> Self {
        Kernel {
            expr,
            s_var,
            support: None,
            zero_tol: 1e-9,
        }
    }

    pub fn identity(s_var: usize) -> Self {
        Kernel::new(Expr::c(1.0), s_var)
    }

    pub fn with_support(mut self, s_a: f64, s_b: f64) -> Self {
        self.support = Some((s_a, s_b));
        self
    }

    pub fn eval_at(&self, point: &[f64]) -> Result<f64, TransformError> {
        if let Some((a, b)) = self.support {
            let s = point[self.s_var];
            if s < a || s > b {
                return Ok(0.0);
            }
        }
        self.expr.eval_plain(point)
    }

    pub fn vanishes_at(&self, point: &[f64]) -> bool {
        match self.eval_at(point) {
            Ok(k) => k.abs() <= self.zero_tol,
            Err(_) => true,
        }
    }
}

/// Anything that can stand in for the learned surrogate: the trained model,
/// or (in tests) an independently built quadrature surrogate.
pub trait Surrogate {
    fn arity(&self) -> usize;
    fn value(&self, inputs: &[f64]) -> f64;
    fn partial(&self, inputs: &[f64], orders: &[usize]) -> f64;
}

impl Surrogate for UfaModel {
    fn arity(&self) -> usize {
        UfaModel::arity(self)
    }

    fn value(&self, inputs: &[f64]) -> f64 {
        self.eval_f64(inputs)
    }

    fn partial(&self, inputs: &[f64], orders: &[usize]) -> f64 {
        eval_derivative(self, inputs, &DerivativeRequest::new(orders.to_vec()))
            .expect("derivative evaluation failed")
            .value
    }
}

/// Recovers the unknown function from the trained surrogate:
/// f = (1/k)·∂G/∂s at the query point.
pub fn recover_f(
    surrogate: &dyn Surrogate,
    kernel: &Kernel,
    point: &[f64],
) -> Result<f64, TransformError> {
    let k = kernel.eval_at(point)?;
    if k.abs() <= kernel.zero_tol {
        return Err(TransformError::SingularKernel { magnitude: k.abs() });
    }
    let mut orders = vec![0usize; surrogate.arity()];
    orders[kernel.s_var] = 1;
    Ok(surrogate.partial(point, &orders) / k)
}

/// ∫ k·f ds = G(upper, ·) − G(lower, ·): exactly two surrogate evaluations.
/// The integration variable is the surrogate's first coordinate; `rest`
/// fills in the remaining coordinates.
pub fn evaluate_transform(
    surrogate: &dyn Surrogate,
    lower: f64,
    upper: f64,
    rest: &[f64],
) -> f64 {
    let mut point = Vec::with_capacity(1 + rest.len());
    point.push(upper);
    point.extend_from_slice(rest);
    let hi = surrogate.value(&point);
    point[0] = lower;
    hi - surrogate.value(&point)
}

/// Two-dimensional transform readout by inclusion–exclusion over the box
/// corners: four surrogate evaluations. Exact even when G does not vanish on
/// the lower boundary.
pub fn evaluate_transform_2d(
    surrogate: &dyn Surrogate,
    lower: [f64; 2],
    upper: [f64; 2],
    rest: &[f64],
) -> f64 {
    let eval = |x1: f64, x2: f64| {
        let mut point = Vec::with_capacity(2 + rest.len());
        point.push(x1);
        point.push(x2);
        point.extend_from_slice(rest);
        surrogate.value(&point)
    };
    eval(upper[0], upper[1]) - eval(lower[0], upper[1]) - eval(upper[0], lower[1])
        + eval(lower[0], lower[1])
}

/// Rewrites a residual stated in terms of the unknown f into surrogate form:
/// f → (1/k)·∂G/∂s and ∫ k·f ds → G(s_b) − G(s_a). The rewrite is syntactic
/// and exact; an integral with a different kernel is rejected.
pub fn substitute_residual(
    residual: &Expr,
    kernel: &Kernel,
    arity: usize,
) -> Result<Expr, TransformError> {
    let rec = |e: &Expr| substitute_residual(e, kernel, arity);
    Ok(match residual {
        Expr::UnknownF => Expr::Div(
            Box::new(Expr::Surrogate.dd(kernel.s_var, 1)),
            Box::new(kernel.expr.clone()),
        ),
        Expr::Integral {
            kernel: k,
            lower,
            upper,
        } => {
            if **k != kernel.expr {
                return Err(TransformError::UnsupportedTransform);
            }
            let at = |limit: &CoordSpec| {
                let coords = (0..arity)
                    .map(|i| {
                        if i == kernel.s_var {
                            *limit
                        } else {
                            CoordSpec::Current(i)
                        }
                    })
                    .collect();
                Expr::SurrogateAt(coords)
            };
            Expr::Sub(Box::new(at(upper)), Box::new(at(lower)))
        }
        Expr::Add(a, b) => Expr::Add(Box::new(rec(a)?), Box::new(rec(b)?)),
        Expr::Sub(a, b) => Expr::Sub(Box::new(rec(a)?), Box::new(rec(b)?)),
        Expr::Mul(a, b) => Expr::Mul(Box::new(rec(a)?), Box::new(rec(b)?)),
        Expr::Div(a, b) => Expr::Div(Box::new(rec(a)?), Box::new(rec(b)?)),
        Expr::Neg(e) => Expr::Neg(Box::new(rec(e)?)),
        Expr::Apply(f, e) => Expr::Apply(*f, Box::new(rec(e)?)),
        Expr::Deriv(e, var, order) => Expr::Deriv(Box::new(rec(e)?), *var, *order),
        other => other.clone(),
    })
}

/// A problem fully rewritten in terms of the surrogate G: residual operators
/// on collocation grids, data and boundary constraints, and the readout
/// evaluation points.
#[derive(Debug, Clone)]
pub struct SurrogateProblem {
    pub name: String,
    pub model_arity: usize,
    pub residual_terms: Vec<ResidualTerm>,
    pub data_terms: Vec<DataTerm>,
    pub boundary_terms: Vec<BoundaryTerm>,
    /// Exact boundary enforcement by exponential pinning (single-input
    /// problems only).
    pub pin: Option<PinConditions>,
}

/// Pinned derivative values of G at a single point t0.
#[derive(Debug, Clone, PartialEq)]
pub struct PinConditions {
    pub t0: f64,
    /// Pinning steepness; defaults to 5 / domain width.
    pub alpha: f64,
    /// values[k] pins ∂^k G(t0), up to order 2.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ResidualTerm {
    pub label: String,
    pub expr: Expr,
    pub grid: Vec<Vec<f64>>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct DataTerm {
    pub label: String,
    pub expr: Expr,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub weight: f64,
}

/// Soft constraint on a derivative of G at one point.
#[derive(Debug, Clone)]
pub struct BoundaryTerm {
    pub label: String,
    pub orders: Vec<usize>,
    pub point: Vec<f64>,
    pub target: f64,
    pub weight: f64,
}

impl SurrogateProblem {
    pub fn new(name: impl Into<String>, model_arity: usize) -> Self {
        SurrogateProblem {
            name: name.into(),
            model_arity,
            residual_terms: Vec::new(),
            data_terms: Vec::new(),
            boundary_terms: Vec::new(),
            pin: None,
        }
    }
}
