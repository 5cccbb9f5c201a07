//! Basket option on two independent Ornstein–Uhlenbeck assets, learned from
//! data slices alone (no PDE residual).
//!
//! The surrogate satisfies ∂²G/∂x₁∂x₂ = k(x₁,x₂)·p(x₁,x₂,t) with the
//! basket kernel k = ½(x₁+x₂). Sampled slices at several times are turned
//! into a product density estimate, and the data term constrains the mixed
//! derivative in the multiplied-through form ∂²G/∂x₁∂x₂ − k·p̂, which stays
//! regular on the anti-diagonal where k vanishes. The readout
//! E[X̄](t) = G(5,5,t) − G(−5,5,t) − G(5,−5,t) + G(−5,−5,t) is the
//! four-corner inclusion–exclusion of the box.

use super::{gaussian_samples, DensityEstimator, Histogram1d, Kde1d, OuParams};
use crate::oracles::{ou_mean, ou_variance};
use crate::training::linspace;
use crate::transform::{evaluate_transform_2d, DataTerm, Expr, SurrogateProblem};
use crate::ufa::UfaModel;

#[derive(Debug, Clone)]
pub struct BasketSetup {
    pub asset1: OuParams,
    pub asset2: OuParams,
    pub n_x: usize,
    pub n_slices: usize,
    pub slice_t_min: f64,
    pub slice_t_max: f64,
    pub n_samples: usize,
    pub sample_seed: u64,
    pub estimator: DensityEstimator,
}

impl BasketSetup {
    pub fn new(sample_seed: u64) -> Self {
        let asset1 = OuParams::default();
        let asset2 = OuParams {
            sigma: 2.0,
            nu: 3.0,
            x0: 1.0,
            ..OuParams::default()
        };
        BasketSetup {
            asset1,
            asset2,
            n_x: 8,
            n_slices: 15,
            slice_t_min: 0.3,
            slice_t_max: 1.0,
            n_samples: 50,
            sample_seed,
            estimator: DensityEstimator::Kde,
        }
    }
}

fn slice_density(setup: &BasketSetup, t: f64, slice_idx: u64) -> Box<dyn Fn(f64, f64) -> f64> {
    let draw = |p: &OuParams, salt: u64| {
        gaussian_samples(
            ou_mean(t, p.nu, p.x0, p.t0),
            ou_variance(t, p.sigma, p.nu, p.t0).sqrt(),
            setup.n_samples,
            setup.sample_seed ^ (slice_idx * 2 + salt),
        )
    };
    let s1 = draw(&setup.asset1, 0);
    let s2 = draw(&setup.asset2, 1);
    match setup.estimator {
        DensityEstimator::Kde => {
            let k1 = Kde1d::new(s1);
            let k2 = Kde1d::new(s2);
            Box::new(move |x1, x2| k1.density(x1) * k2.density(x2))
        }
        DensityEstimator::Histogram => {
            let (lo, hi) = (setup.asset1.x_min, setup.asset1.x_max);
            let h1 = Histogram1d::new(&s1, lo, hi, 25);
            let h2 = Histogram1d::new(&s2, lo, hi, 25);
            Box::new(move |x1, x2| h1.density(x1) * h2.density(x2))
        }
    }
}

pub fn basket_problem(setup: &BasketSetup) -> SurrogateProblem {
    let mut problem = SurrogateProblem::new("basket", 3);
    let xs = linspace(setup.asset1.x_min, setup.asset1.x_max, setup.n_x);
    let ts = linspace(setup.slice_t_min, setup.slice_t_max, setup.n_slices);
    let mut points = Vec::with_capacity(xs.len() * xs.len() * ts.len());
    let mut targets = Vec::with_capacity(points.capacity());
    for (j, &t) in ts.iter().enumerate() {
        let density = slice_density(setup, t, j as u64);
        for &x1 in &xs {
            for &x2 in &xs {
                points.push(vec![x1, x2, t]);
                targets.push(0.5 * (x1 + x2) * density(x1, x2));
            }
        }
    }
    problem.data_terms.push(DataTerm {
        label: "slice-density".into(),
        expr: Expr::Surrogate.dd(0, 1).dd(1, 1),
        points,
        targets,
        weight: 1.0,
    });
    problem
}

/// E[X̄](t) by four-corner readout of the trained surrogate.
pub fn basket_readout(model: &UfaModel, setup: &BasketSetup, t: f64) -> f64 {
    evaluate_transform_2d(
        model,
        [setup.asset1.x_min, setup.asset2.x_min],
        [setup.asset1.x_max, setup.asset2.x_max],
        &[t],
    )
}

/// ½(x₁∘e^{−ν₁t} + x₂∘e^{−ν₂t}), the analytic basket mean.
pub fn basket_exact(setup: &BasketSetup, t: f64) -> f64 {
    0.5 * (ou_mean(t, setup.asset1.nu, setup.asset1.x0, setup.asset1.t0)
        + ou_mean(t, setup.asset2.nu, setup.asset2.x0, setup.asset2.t0))
}
