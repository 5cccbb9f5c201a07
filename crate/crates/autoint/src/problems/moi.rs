//! Moment of inertia of a spinning vessel of fluid.
//!
//! The free surface of the rotating fluid satisfies the radial balance
//! ρg·h′(r) = ρω²·r, which fixes h only up to a constant; conservation of
//! fluid volume, ∫₀ᴿ h dr = h₀R, fixes the constant. The quantity of
//! interest is I = ρw·∫₀ᴿ r²h dr, read out as ρw·(G(R) − G(0)) from a
//! surrogate with ∂G/∂r = r²·h.
//!
//! Two surrogates are needed (kernel r² for G, kernel 1 for the volume
//! integral H). Both live in one two-input network M(r, c): channel c = 0
//! is G and c = 1 is H, tied together by the consistency residual
//! ∂G/∂r = r²·∂H/∂r. Alternatively the volume constant can be supplied in
//! closed form (h(R/√3) = h₀), which needs no auxiliary surrogate.

use super::VesselParams;
use crate::training::{linspace, train, OptimizerConfig, TrainError, TrainReport};
use crate::transform::{
    evaluate_transform, CoordSpec, DataTerm, Expr, ResidualTerm, SurrogateProblem,
};
use crate::ufa::UfaModel;

/// How the integration constant of the surface height is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeConstraint {
    /// Auxiliary kernel-1 surrogate with the volume data term (default).
    AuxiliarySurrogate,
    /// Pin the height directly at r = R/√3 where h = h₀ in closed form.
    ClosedFormConstant,
}

#[derive(Debug, Clone)]
pub struct MoiSetup {
    pub params: VesselParams,
    pub n_r: usize,
    pub constraint: VolumeConstraint,
    pub volume_weight: f64,
}

impl MoiSetup {
    pub fn new(params: VesselParams) -> Self {
        MoiSetup {
            params,
            n_r: 40,
            constraint: VolumeConstraint::AuxiliarySurrogate,
            volume_weight: 10.0,
        }
    }
}

fn at_channel(c: f64) -> Expr {
    Expr::SurrogateAt(vec![CoordSpec::Current(0), CoordSpec::Fixed(c)])
}

pub fn moi_problem(setup: &MoiSetup) -> SurrogateProblem {
    let p = &setup.params;
    let mut problem = SurrogateProblem::new("moment-of-inertia", 2);
    let r = Expr::coord(0);
    let r2 = r.clone() * r.clone();
    // Radial grid on (0, R]; r = 0 is excluded because the kernel r²
    // vanishes there (the readout still evaluates G at 0, which is fine).
    let rs = linspace(p.radius / setup.n_r as f64, p.radius, setup.n_r);
    let grid: Vec<Vec<f64>> = rs.iter().map(|&ri| vec![ri, 0.0]).collect();

    match setup.constraint {
        VolumeConstraint::AuxiliarySurrogate => {
            // ρg·H″ = ρω²·r with h = H′.
            problem.residual_terms.push(ResidualTerm {
                label: "hydrostatic".into(),
                expr: Expr::c(p.rho * p.g) * at_channel(1.0).dd(0, 2)
                    - Expr::c(p.rho * p.omega * p.omega) * r.clone(),
                grid: grid.clone(),
                weight: 1.0,
            });
            // ∂G/∂r = r²·∂H/∂r ties the two channels together.
            problem.residual_terms.push(ResidualTerm {
                label: "consistency".into(),
                expr: at_channel(0.0).dd(0, 1) - r2 * at_channel(1.0).dd(0, 1),
                grid,
                weight: 1.0,
            });
            // H(R) − H(0) = ∫₀ᴿ h dr = h₀R.
            problem.data_terms.push(DataTerm {
                label: "volume".into(),
                expr: Expr::SurrogateAt(vec![
                    CoordSpec::Fixed(p.radius),
                    CoordSpec::Fixed(1.0),
                ]) - Expr::SurrogateAt(vec![CoordSpec::Fixed(0.0), CoordSpec::Fixed(1.0)]),
                points: vec![vec![0.0, 0.0]],
                targets: vec![p.h0 * p.radius],
                weight: setup.volume_weight,
            });
        }
        VolumeConstraint::ClosedFormConstant => {
            // ρg(r·G″ − 2G′) = ρω²·r⁴, the G-only balance cleared of 1/r³.
            let r4 = r2.clone() * r2.clone();
            problem.residual_terms.push(ResidualTerm {
                label: "hydrostatic".into(),
                expr: Expr::c(p.rho * p.g)
                    * (r.clone() * at_channel(0.0).dd(0, 2)
                        - Expr::c(2.0) * at_channel(0.0).dd(0, 1))
                    - Expr::c(p.rho * p.omega * p.omega) * r4,
                grid,
                weight: 1.0,
            });
            let r_star = p.radius / 3f64.sqrt();
            problem.data_terms.push(DataTerm {
                label: "height-pin".into(),
                expr: at_channel(0.0).dd(0, 1),
                points: vec![vec![r_star, 0.0]],
                targets: vec![r_star * r_star * p.h0],
                weight: setup.volume_weight,
            });
        }
    }
    problem
}

/// I = ρw·(G(R) − G(0)): two surrogate evaluations.
pub fn moi_readout(model: &UfaModel, params: &VesselParams) -> f64 {
    params.rho * params.width * evaluate_transform(model, 0.0, params.radius, &[0.0])
}

/// Trains a fresh model per angular frequency; each run gets its own seed.
pub fn moi_sweep(
    setup: &MoiSetup,
    omegas: &[f64],
    optimizer: &OptimizerConfig,
    layer_widths: &[usize],
) -> Result<Vec<(f64, f64, TrainReport)>, TrainError> {
    let mut out = Vec::with_capacity(omegas.len());
    for (i, &omega) in omegas.iter().enumerate() {
        let mut setup_i = setup.clone();
        setup_i.params.omega = omega;
        let problem = moi_problem(&setup_i);
        let mut config = optimizer.clone();
        config.seed = optimizer.seed + i as u64;
        let mut model = UfaModel::new_mlp(layer_widths.to_vec(), config.seed);
        let report = train(&mut model, &problem, &config)?;
        out.push((omega, moi_readout(&model, &setup_i.params), report));
    }
    Ok(out)
}
