//! Physics-informed optimization: weighted losses over residual, data, and
//! boundary terms; exact boundary enforcement by exponential pinning; and a
//! deterministic full-batch training loop.

pub mod loss;
pub mod optimizer;

pub use loss::{assemble_loss, linspace, CollocationGrid, LossSpec, TrainError};
pub use optimizer::{Algorithm, LbfgsState, OptimizerConfig, OptimizerState};

use crate::autodiff::Tape;
use crate::transform::SurrogateProblem;
use crate::ufa::{ModelError, UfaModel};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Wraps a model so the listed boundary conditions at t0 hold exactly for
/// any parameters: G̃(t) = P(t) + (1 − e^{−α(t−t0)})^{m+1}·N(t).
pub fn pin_boundary(
    model: UfaModel,
    t0: f64,
    alpha: f64,
    values: Vec<f64>,
) -> Result<UfaModel, ModelError> {
    model.pinned(t0, alpha, values)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub problem: String,
    pub seed: u64,
    pub epochs_run: usize,
    pub term_labels: Vec<String>,
    /// Pre-step total loss per epoch; length equals `epochs_run`.
    pub loss_history: Vec<f64>,
    /// Pre-step per-term losses per epoch.
    pub term_history: Vec<Vec<f64>>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub wall_clock_secs: f64,
    pub converged: bool,
}

impl TrainReport {
    /// CSV with one row per epoch: epoch, total, then one column per term.
    pub fn write_history_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        write!(out, "epoch,total")?;
        for label in &self.term_labels {
            write!(out, ",{label}")?;
        }
        writeln!(out)?;
        for (epoch, (total, terms)) in self
            .loss_history
            .iter()
            .zip(&self.term_history)
            .enumerate()
        {
            write!(out, "{epoch},{}", crate::fmt_sig(*total))?;
            for t in terms {
                write!(out, ",{}", crate::fmt_sig(*t))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// One L-BFGS iteration: two-loop direction plus backtracking Armijo line
/// search. Returns false when no step along the direction reduces the
/// loss (treated as converged).
fn lbfgs_step(
    loss: &LossSpec,
    model: &UfaModel,
    params: &mut Vec<f64>,
    grad: &[f64],
    total: f64,
    lbfgs: &LbfgsState,
) -> Result<bool, TrainError> {
    let mut dir = lbfgs.direction(grad);
    let mut slope: f64 = dir.iter().zip(grad).map(|(d, g)| d * g).sum();
    if slope >= 0.0 {
        // Fall back to steepest descent if the stored curvature is stale.
        dir = grad.iter().map(|g| -g).collect();
        slope = -grad.iter().map(|g| g * g).sum::<f64>();
        if slope == 0.0 {
            return Ok(false);
        }
    }
    let mut step = 1.0;
    for _ in 0..30 {
        let trial: Vec<f64> = params
            .iter()
            .zip(&dir)
            .map(|(p, d)| p + step * d)
            .collect();
        let (l, _) = loss.value(model, &trial)?;
        if l.is_finite() && l <= total + 1e-4 * step * slope {
            *params = trial;
            return Ok(true);
        }
        step *= 0.5;
    }
    Ok(false)
}

/// Full-batch deterministic training. Applies exact pinning when the
/// problem requests it, then runs the configured optimizer. The model's
/// parameters are updated in place.
pub fn train(
    model: &mut UfaModel,
    problem: &SurrogateProblem,
    config: &OptimizerConfig,
) -> Result<TrainReport, TrainError> {
    config
        .validate()
        .map_err(TrainError::OptimizerConfig)?;
    if let Some(pin) = &problem.pin {
        if model.pin().is_none() {
            let pinned =
                pin_boundary(model.clone(), pin.t0, pin.alpha, pin.values.clone())?;
            *model = pinned;
        }
    }
    let loss = assemble_loss(problem, model)?;
    let start = std::time::Instant::now();
    let tape = Tape::with_capacity(1 << 16);
    let mut params = model.params().to_vec();
    let mut state = OptimizerState::new(params.len());

    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut term_history = Vec::with_capacity(config.epochs);
    let (initial_loss, _) = loss.value(model, &params)?;
    let mut final_loss = initial_loss;

    let mut lbfgs = LbfgsState::new(10);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for epoch in 0..config.epochs {
        let (total, per_term, grad) = loss.value_grad(model, &params, &tape)?;
        if !total.is_finite() {
            return Err(TrainError::NonFinite { epoch });
        }
        loss_history.push(total);
        term_history.push(per_term);
        match config.algorithm {
            Algorithm::Lbfgs => {
                if let Some((pp, pg)) = prev.take() {
                    let s: Vec<f64> = params.iter().zip(&pp).map(|(a, b)| a - b).collect();
                    let y: Vec<f64> = grad.iter().zip(&pg).map(|(a, b)| a - b).collect();
                    lbfgs.update(s, y);
                }
                prev = Some((params.clone(), grad.clone()));
                let moved = lbfgs_step(&loss, model, &mut params, &grad, total, &lbfgs)?;
                if !moved {
                    final_loss = total;
                    break;
                }
            }
            _ => state.step(config, &mut params, &grad),
        }
        if epoch + 1 == config.epochs {
            let (l, _) = loss.value(model, &params)?;
            final_loss = l;
        }
    }
    model.set_params(params)?;

    Ok(TrainReport {
        problem: problem.name.clone(),
        seed: config.seed,
        epochs_run: loss_history.len(),
        term_labels: loss.term_labels(),
        loss_history,
        term_history,
        initial_loss,
        final_loss,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        converged: final_loss.is_finite() && final_loss <= initial_loss,
    })
}
