//! Electric potential of a charge density advected and diffused along a
//! tube, observed from a fixed off-axis point.
//!
//! V(r∘, t) = λ·∫ C(x, t)/w(x) dx with w(x) = |r − r∘|, so the surrogate
//! kernel is 1/w and C = w·∂G/∂x. Substituting into the advection–diffusion
//! equation ∂C/∂t + v·∂C/∂x = D·∂²C/∂x² gives
//!
//!   w·G_xt + v·∂x(w·G_x) = D·∂xx(w·G_x),
//!
//! which never degenerates because w ≥ distance of the observation point
//! from the axis.

use super::AdvectionParams;
use crate::oracles::advected_gaussian;
use crate::training::linspace;
use crate::transform::{evaluate_transform, DataTerm, Expr, ResidualTerm, SurrogateProblem};
use crate::ufa::UfaModel;

#[derive(Debug, Clone)]
pub struct PotentialSetup {
    pub params: AdvectionParams,
    pub n_x: usize,
    pub n_t: usize,
    pub data_weight: f64,
}

impl PotentialSetup {
    pub fn new(params: AdvectionParams) -> Self {
        PotentialSetup {
            params,
            n_x: 50,
            n_t: 15,
            data_weight: 1.0,
        }
    }
}

/// w(x) = √((x − x∘)² + y∘² + z∘²) as an expression in coordinate 0.
fn distance_expr(p: &AdvectionParams) -> Expr {
    let dx = Expr::coord(0) - Expr::c(p.obs[0]);
    (dx.clone() * dx + Expr::c(p.obs[1] * p.obs[1] + p.obs[2] * p.obs[2])).sqrt()
}

pub fn potential_problem(setup: &PotentialSetup) -> Result<SurrogateProblem, String> {
    let p = &setup.params;
    let axis_offset = (p.obs[1] * p.obs[1] + p.obs[2] * p.obs[2]).sqrt();
    if axis_offset == 0.0 {
        return Err("observation point lies on the tube axis: kernel 1/w is singular".into());
    }
    let mut problem = SurrogateProblem::new("potential", 2);
    let w = distance_expr(p);
    let wgx = w.clone() * Expr::Surrogate.dd(0, 1);
    let residual = w * Expr::Surrogate.dd(0, 1).dd(1, 1) + Expr::c(p.velocity) * wgx.clone().dd(0, 1)
        - Expr::c(p.diffusion) * wgx.clone().dd(0, 2);

    let xs = linspace(p.x_min, p.x_max, setup.n_x);
    let ts = linspace(p.t_min, p.t_max, setup.n_t);
    let mut grid = Vec::with_capacity(xs.len() * (ts.len() - 1));
    for &t in &ts[1..] {
        for &x in &xs {
            grid.push(vec![x, t]);
        }
    }
    problem.residual_terms.push(ResidualTerm {
        label: "advection-diffusion".into(),
        expr: residual,
        grid,
        weight: 1.0,
    });

    // Initial slice at t_min: C is the analytically propagated Gaussian drop.
    let points: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, p.t_min]).collect();
    let targets: Vec<f64> = xs
        .iter()
        .map(|&x| advected_gaussian(x, p.t_min, p.velocity, p.diffusion, p.mass, p.center, p.width))
        .collect();
    problem.data_terms.push(DataTerm {
        label: "initial-slice".into(),
        expr: wgx,
        points,
        targets,
        weight: setup.data_weight,
    });
    Ok(problem)
}

/// V(r∘, t) = λ·(G(x_max, t) − G(x_min, t)): two surrogate evaluations.
pub fn potential_readout(model: &UfaModel, params: &AdvectionParams, t: f64) -> f64 {
    params.lambda * evaluate_transform(model, params.x_min, params.x_max, &[t])
}
