//! Loss assembly: residual, data, and boundary terms compiled into callable
//! weighted mean-squared objectives with parameter gradients.

use crate::autodiff::{Scalar, Shape, Tape, Tower, Var, DEFAULT_ORDER_CEILING};
use crate::transform::{eval, EvalCtx, Expr, SurrogateProblem, TransformError};
use crate::ufa::UfaModel;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("term '{label}' needs derivative order {requested}, above the ceiling {ceiling}")]
    OrderCeiling {
        label: String,
        requested: usize,
        ceiling: usize,
    },
    #[error("non-finite loss at epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("term '{label}' failed: {source}")]
    Term {
        label: String,
        source: TransformError,
    },
    #[error("optimizer config invalid: {0}")]
    OptimizerConfig(String),
    #[error(transparent)]
    Model(#[from] crate::ufa::ModelError),
}

/// Uniformly spaced points including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Collocation points: a product of axes or an explicit list, with kernel
/// zero-set exclusion.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    pub points: Vec<Vec<f64>>,
}

impl CollocationGrid {
    pub fn explicit(points: Vec<Vec<f64>>) -> Self {
        CollocationGrid { points }
    }

    pub fn product(axes: &[Vec<f64>]) -> Self {
        let mut points = vec![Vec::new()];
        for axis in axes {
            let mut next = Vec::with_capacity(points.len() * axis.len());
            for p in &points {
                for &v in axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        CollocationGrid { points }
    }

    pub fn excluding(mut self, mut drop: impl FnMut(&[f64]) -> bool) -> Self {
        self.points.retain(|p| !drop(p));
        self
    }
}

struct CompiledTerm {
    label: String,
    expr: Expr,
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
    weight: f64,
    shape: &'static Shape,
    dirs: Vec<Option<usize>>,
}

impl CompiledTerm {
    fn new(
        label: String,
        expr: Expr,
        points: Vec<Vec<f64>>,
        targets: Vec<f64>,
        weight: f64,
        model_arity: usize,
        ceiling: usize,
    ) -> Result<Self, TrainError> {
        assert!(weight > 0.0, "term weights must be positive");
        let order = expr.required_order();
        if order > ceiling {
            return Err(TrainError::OrderCeiling {
                label,
                requested: order,
                ceiling,
            });
        }
        let mut vars = BTreeSet::new();
        expr.derivative_vars(&mut vars);
        let arity = vars.len().max(1);
        let shape = Shape::get(arity, order);
        let mut dirs = vec![None; model_arity];
        for (dir, var) in vars.iter().enumerate() {
            dirs[*var] = Some(dir);
        }
        if !targets.is_empty() {
            assert_eq!(targets.len(), points.len(), "one target per point");
        }
        Ok(CompiledTerm {
            label,
            expr,
            points,
            targets,
            weight,
            shape,
            dirs,
        })
    }

    fn towers_at<S: Scalar>(&self, point: &[f64]) -> Vec<Tower<S>> {
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| match self.dirs[i] {
                Some(dir) => Tower::seed(self.shape, dir, S::constant(x)),
                None => Tower::constant(self.shape, S::constant(x)),
            })
            .collect()
    }

    fn target(&self, i: usize) -> f64 {
        if self.targets.is_empty() {
            0.0
        } else {
            self.targets[i]
        }
    }
}

/// The assembled PINN loss: total = Σ_terms weight · mean_i (term_i)².
pub struct LossSpec {
    terms: Vec<CompiledTerm>,
    n_params: usize,
}

/// Compiles the problem's terms against a model. Boundary terms become
/// derivative constraints at single points; exact pinning is handled by
/// wrapping the model before assembly.
pub fn assemble_loss(problem: &SurrogateProblem, model: &UfaModel) -> Result<LossSpec, TrainError> {
    let arity = model.arity();
    assert_eq!(arity, problem.model_arity, "problem/model arity mismatch");
    let mut terms = Vec::new();
    for term in &problem.residual_terms {
        terms.push(CompiledTerm::new(
            term.label.clone(),
            term.expr.clone(),
            term.grid.clone(),
            Vec::new(),
            term.weight,
            arity,
            DEFAULT_ORDER_CEILING,
        )?);
    }
    for term in &problem.data_terms {
        terms.push(CompiledTerm::new(
            term.label.clone(),
            term.expr.clone(),
            term.points.clone(),
            term.targets.clone(),
            term.weight,
            arity,
            DEFAULT_ORDER_CEILING,
        )?);
    }
    for term in &problem.boundary_terms {
        let mut expr = Expr::Surrogate;
        for (var, &order) in term.orders.iter().enumerate() {
            if order > 0 {
                expr = expr.dd(var, order);
            }
        }
        terms.push(CompiledTerm::new(
            term.label.clone(),
            expr,
            vec![term.point.clone()],
            vec![term.target],
            term.weight,
            arity,
            DEFAULT_ORDER_CEILING,
        )?);
    }
    Ok(LossSpec {
        terms,
        n_params: model.n_params(),
    })
}

impl LossSpec {
    pub fn term_labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label.clone()).collect()
    }

    /// Loss value only (no tape).
    pub fn value(&self, model: &UfaModel, params: &[f64]) -> Result<(f64, Vec<f64>), TrainError> {
        let mut per_term = Vec::with_capacity(self.terms.len());
        let mut total = 0.0;
        for term in &self.terms {
            let mut acc = 0.0;
            for (i, point) in term.points.iter().enumerate() {
                let towers = term.towers_at::<f64>(point);
                let ctx = EvalCtx {
                    model,
                    params,
                    inputs: &towers,
                    dirs: &term.dirs,
                    unknown_f: None,
                    cache: Default::default(),
                };
                let r = eval(&term.expr, &ctx).map_err(|source| TrainError::Term {
                    label: term.label.clone(),
                    source,
                })? .value()
                    - term.target(i);
                acc += r * r;
            }
            let mean = term.weight * acc / term.points.len() as f64;
            per_term.push(mean);
            total += mean;
        }
        Ok((total, per_term))
    }

    /// Loss value, per-term breakdown, and the full parameter gradient.
    /// Points are reduced in a fixed order, so results are deterministic.
    pub fn value_grad(
        &self,
        model: &UfaModel,
        params: &[f64],
        tape: &Tape,
    ) -> Result<(f64, Vec<f64>, Vec<f64>), TrainError> {
        let mut grad = vec![0.0; self.n_params];
        let mut per_term = Vec::with_capacity(self.terms.len());
        let mut total = 0.0;
        for term in &self.terms {
            let mut acc = 0.0;
            let scale = term.weight / term.points.len() as f64;
            for (i, point) in term.points.iter().enumerate() {
                tape.clear();
                let vars: Vec<Var<'_>> = params.iter().map(|&p| tape.var(p)).collect();
                let towers = term.towers_at::<Var<'_>>(point);
                let ctx = EvalCtx {
                    model,
                    params: &vars,
                    inputs: &towers,
                    dirs: &term.dirs,
                    unknown_f: None,
                    cache: Default::default(),
                };
                let out = eval(&term.expr, &ctx).map_err(|source| TrainError::Term {
                    label: term.label.clone(),
                    source,
                })?;
                let r_var = out.value();
                let r = r_var.value() - term.target(i);
                acc += r * r;
                let g = tape.gradient(r_var, &vars);
                for (gi, gv) in grad.iter_mut().zip(&g) {
                    *gi += 2.0 * scale * r * gv;
                }
            }
            let mean = scale * acc;
            per_term.push(mean);
            total += mean;
        }
        Ok((total, per_term, grad))
    }
}
