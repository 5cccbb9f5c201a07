//! Declarative composition trees for residuals and data expressions.
//!
//! A tree is written over the unknown function `f`, its integral transform,
//! the surrogate `G`, input coordinates, and known elementary functions.
//! Evaluation happens in tower arithmetic, so derivative nodes are exact:
//! `Deriv` lowers a tower by shifting coefficients, and the whole tree can be
//! run with tape-variable coefficients to get parameter gradients.

use crate::autodiff::{Scalar, Tower};
use crate::ufa::{ModelError, UfaModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("kernel vanishes at the query point (|k| = {magnitude:.3e})")]
    SingularKernel { magnitude: f64 },
    #[error("residual integral kernel does not match the surrogate kernel")]
    UnsupportedTransform,
    #[error("expression still contains an integral; substitute it first")]
    Unsubstituted,
    #[error("expression references the unknown function but no closure was provided")]
    MissingUnknownF,
    #[error("derivative requested along unseeded variable {0}")]
    UnseededVariable(usize),
    #[error("tower order too low for nested derivative (need {need}, have {have})")]
    OrderExceeded { need: usize, have: usize },
    #[error("expression node not supported in plain evaluation")]
    NotPlain,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Recip,
    Acos,
    Tanh,
}

/// One coordinate of a surrogate evaluation point: either pinned to a fixed
/// value or tracking the current collocation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoordSpec {
    Fixed(f64),
    Current(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    /// G at the current collocation point.
    Surrogate,
    /// G at a point with some coordinates overridden.
    SurrogateAt(Vec<CoordSpec>),
    /// The unknown function f at the current point (pre-substitution form).
    UnknownF,
    /// ∫ k(s, ·) f ds between the given limits (pre-substitution form).
    Integral {
        kernel: Box<Expr>,
        lower: CoordSpec,
        upper: CoordSpec,
    },
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Apply(Func, Box<Expr>),
    /// ∂^order / ∂ coord^order of the inner expression.
    Deriv(Box<Expr>, usize, usize),
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn coord(i: usize) -> Expr {
        Expr::Coord(i)
    }

    pub fn dd(self, var: usize, order: usize) -> Expr {
        Expr::Deriv(Box::new(self), var, order)
    }

    pub fn apply(self, f: Func) -> Expr {
        Expr::Apply(f, Box::new(self))
    }

    pub fn recip(self) -> Expr {
        self.apply(Func::Recip)
    }

    pub fn sqrt(self) -> Expr {
        self.apply(Func::Sqrt)
    }

    pub fn exp(self) -> Expr {
        self.apply(Func::Exp)
    }

    /// Highest total derivative order any evaluation path needs.
    pub fn required_order(&self) -> usize {
        match self {
            Expr::Deriv(e, _, order) => e.required_order() + order,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.required_order().max(b.required_order())
            }
            Expr::Neg(e) | Expr::Apply(_, e) => e.required_order(),
            Expr::Integral { kernel, .. } => kernel.required_order(),
            _ => 0,
        }
    }

    /// Variables that appear under a derivative operator.
    pub fn derivative_vars(&self, out: &mut std::collections::BTreeSet<usize>) {
        match self {
            Expr::Deriv(e, var, _) => {
                out.insert(*var);
                e.derivative_vars(out);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.derivative_vars(out);
                b.derivative_vars(out);
            }
            Expr::Neg(e) | Expr::Apply(_, e) => e.derivative_vars(out),
            _ => {}
        }
    }

    pub fn contains_unknown(&self) -> bool {
        match self {
            Expr::UnknownF | Expr::Integral { .. } => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_unknown() || b.contains_unknown()
            }
            Expr::Neg(e) | Expr::Apply(_, e) | Expr::Deriv(e, _, _) => e.contains_unknown(),
            _ => false,
        }
    }

    /// Evaluation of model-free, unknown-free expressions at a plain point.
    pub fn eval_plain(&self, point: &[f64]) -> Result<f64, TransformError> {
        Ok(match self {
            Expr::Const(v) => *v,
            Expr::Coord(i) => point[*i],
            Expr::Add(a, b) => a.eval_plain(point)? + b.eval_plain(point)?,
            Expr::Sub(a, b) => a.eval_plain(point)? - b.eval_plain(point)?,
            Expr::Mul(a, b) => a.eval_plain(point)? * b.eval_plain(point)?,
            Expr::Div(a, b) => a.eval_plain(point)? / b.eval_plain(point)?,
            Expr::Neg(e) => -e.eval_plain(point)?,
            Expr::Apply(f, e) => apply_f64(*f, e.eval_plain(point)?),
            _ => return Err(TransformError::NotPlain),
        })
    }
}

fn apply_f64(f: Func, x: f64) -> f64 {
    match f {
        Func::Exp => x.exp(),
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Sqrt => x.sqrt(),
        Func::Recip => 1.0 / x,
        Func::Acos => x.acos(),
        Func::Tanh => x.tanh(),
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

/// Evaluation context. `inputs` holds one tower per model coordinate;
/// `dirs[i]` names the tower direction that coordinate is seeded along, if
/// any. Surrogate evaluations are memoized per context, so an expression
/// referencing several derivatives of G costs one model evaluation.
pub struct EvalCtx<'a, S: Scalar> {
    pub model: &'a UfaModel,
    pub params: &'a [S],
    pub inputs: &'a [Tower<S>],
    pub dirs: &'a [Option<usize>],
    #[allow(clippy::type_complexity)]
    pub unknown_f: Option<&'a dyn Fn(&[Tower<S>]) -> Tower<S>>,
    pub cache: SurrogateCache<S>,
}

/// Memo table keyed by the surrogate evaluation point; entries are few, so
/// a linear scan beats hashing.
pub struct SurrogateCache<S: Scalar>(std::cell::RefCell<Vec<(Option<Vec<CoordSpec>>, Tower<S>)>>);

impl<S: Scalar> SurrogateCache<S> {
    pub fn new() -> Self {
        SurrogateCache(std::cell::RefCell::new(Vec::new()))
    }
}

impl<S: Scalar> Default for SurrogateCache<S> {
    fn default() -> Self {
        Self::new()
    }
}

fn surrogate_cached<S: Scalar>(
    ctx: &EvalCtx<'_, S>,
    key: Option<&Vec<CoordSpec>>,
) -> Result<Tower<S>, TransformError> {
    if let Some(hit) = ctx
        .cache
        .0
        .borrow()
        .iter()
        .find(|(k, _)| k.as_ref() == key)
    {
        return Ok(hit.1.clone());
    }
    let out = match key {
        None => ctx.model.eval_tower(ctx.params, ctx.inputs)?,
        Some(coords) => {
            let shape = ctx.inputs[0].shape;
            let point: Vec<Tower<S>> = coords
                .iter()
                .map(|c| match c {
                    CoordSpec::Fixed(v) => Tower::constant(shape, S::constant(*v)),
                    CoordSpec::Current(i) => ctx.inputs[*i].clone(),
                })
                .collect();
            ctx.model.eval_tower(ctx.params, &point)?
        }
    };
    ctx.cache.0.borrow_mut().push((key.cloned(), out.clone()));
    Ok(out)
}

pub fn eval<S: Scalar>(expr: &Expr, ctx: &EvalCtx<'_, S>) -> Result<Tower<S>, TransformError> {
    let shape = ctx.inputs[0].shape;
    Ok(match expr {
        Expr::Const(v) => Tower::constant(shape, S::constant(*v)),
        Expr::Coord(i) => ctx.inputs[*i].clone(),
        Expr::Surrogate => surrogate_cached(ctx, None)?,
        Expr::SurrogateAt(coords) => surrogate_cached(ctx, Some(coords))?,
        Expr::UnknownF => match ctx.unknown_f {
            Some(f) => f(ctx.inputs),
            None => return Err(TransformError::MissingUnknownF),
        },
        Expr::Integral { .. } => return Err(TransformError::Unsubstituted),
        Expr::Add(a, b) => eval(a, ctx)?.add(&eval(b, ctx)?),
        Expr::Sub(a, b) => eval(a, ctx)?.sub(&eval(b, ctx)?),
        Expr::Mul(a, b) => eval(a, ctx)?.mul(&eval(b, ctx)?),
        Expr::Div(a, b) => eval(a, ctx)?.mul(&eval(b, ctx)?.recip()),
        Expr::Neg(e) => eval(e, ctx)?.neg(),
        Expr::Apply(f, e) => {
            let t = eval(e, ctx)?;
            match f {
                Func::Exp => t.exp(),
                Func::Sin => t.sin(),
                Func::Cos => t.cos(),
                Func::Sqrt => t.sqrt(),
                Func::Recip => t.recip(),
                Func::Acos => t.acos(),
                Func::Tanh => t.tanh(),
            }
        }
        Expr::Deriv(e, var, order) => {
            let mut t = eval(e, ctx)?;
            let dir = ctx.dirs[*var].ok_or(TransformError::UnseededVariable(*var))?;
            if t.shape.order < *order {
                return Err(TransformError::OrderExceeded {
                    need: *order,
                    have: t.shape.order,
                });
            }
            for _ in 0..*order {
                t = t.deriv(dir);
            }
            t
        }
    })
}
