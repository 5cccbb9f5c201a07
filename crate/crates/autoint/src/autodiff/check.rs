//! Central finite-difference stencils used to cross-check the tower engine.

use super::{eval_derivative, AutodiffError, DerivativeRequest};
use crate::ufa::UfaModel;

/// Tensor-product central stencil for a mixed partial, applied one variable
/// at a time. `orders[i]` is the derivative order along input `i`.
pub fn central_stencil(
    f: &mut dyn FnMut(&[f64]) -> f64,
    point: &[f64],
    orders: &[usize],
    step: f64,
) -> f64 {
    fn stencil_1d(order: usize) -> Vec<(f64, f64)> {
        match order {
            0 => vec![(0.0, 1.0)],
            1 => vec![(-1.0, -0.5), (1.0, 0.5)],
            2 => vec![(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
            3 => vec![(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
            _ => panic!("central stencils implemented up to order 3"),
        }
    }

    fn recurse(
        f: &mut dyn FnMut(&[f64]) -> f64,
        point: &mut Vec<f64>,
        orders: &[usize],
        var: usize,
        step: f64,
    ) -> f64 {
        if var == orders.len() {
            return f(point);
        }
        if orders[var] == 0 {
            return recurse(f, point, orders, var + 1, step);
        }
        let base = point[var];
        let mut acc = 0.0;
        for (offset, coeff) in stencil_1d(orders[var]) {
            point[var] = base + offset * step;
            acc += coeff * recurse(f, point, orders, var + 1, step);
        }
        point[var] = base;
        acc / step.powi(orders[var] as i32)
    }

    let mut p = point.to_vec();
    recurse(f, &mut p, orders, 0, step)
}

/// Compares the analytic mixed partial against a matching central stencil.
/// Returns |analytic − stencil| / max(|analytic|, 1e−12).
pub fn finite_difference_check(
    model: &UfaModel,
    inputs: &[f64],
    req: &DerivativeRequest,
    step: f64,
) -> Result<f64, AutodiffError> {
    if step <= 0.0 {
        return Err(AutodiffError::InvalidStep(step));
    }
    let analytic = eval_derivative(model, inputs, req)?.value;
    let mut f = |p: &[f64]| model.eval_f64(p);
    let stencil = central_stencil(&mut f, inputs, &req.orders, step);
    Ok((analytic - stencil).abs() / analytic.abs().max(1e-12))
}
