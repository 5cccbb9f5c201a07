//! Volterra–Fredholm population growth b′(t) = u(t) + ∫₀ᵗ (t − t′) b(t′) dt′
//! with b(0) = 1, solved on a simulated quantum circuit (or an MLP).
//!
//! With the antiderivative surrogate ∂G/∂t = b, differentiating the
//! equation once by the Leibniz rule collapses the two-variable kernel to a
//! plain integral of b, which the substitution machinery rewrites as
//! G(t) − G(0):
//!
//!   ∂³G/∂t³ = u′(t) + G(t) − G(0).
//!
//! Boundary conditions G(0) = 0 (by choice), G′(0) = b(0) = 1 and
//! G″(0) = b′(0) = u(0) = −1/4 are enforced exactly by exponential pinning.

use super::PopulationParams;
use crate::training::linspace;
use crate::transform::{
    substitute_residual, CoordSpec, Expr, Func, Kernel, PinConditions, ResidualTerm,
    SurrogateProblem, TransformError,
};
use crate::ufa::{DqcConfig, UfaModel};

/// The residual stated in terms of the unknown b, before surrogate
/// substitution: ∂²b/∂t² − u′(t) − ∫₀ᵗ b dt′.
pub fn population_residual_raw() -> Expr {
    let t = Expr::coord(0);
    let u_prime = Expr::c(0.25)
        * (Expr::c(6.0)
            - Expr::c(3.5) * (Expr::c(0.5) * t.clone()).exp()
            - Expr::c(4.0) * t.apply(Func::Cos));
    Expr::UnknownF.dd(0, 2)
        - u_prime
        - Expr::Integral {
            kernel: Box::new(Expr::c(1.0)),
            lower: CoordSpec::Fixed(0.0),
            upper: CoordSpec::Current(0),
        }
}

pub fn population_problem(params: &PopulationParams) -> Result<SurrogateProblem, TransformError> {
    let kernel = Kernel::identity(0);
    let residual = substitute_residual(&population_residual_raw(), &kernel, 1)?;
    let mut problem = SurrogateProblem::new("population", 1);
    problem.residual_terms.push(ResidualTerm {
        label: "integro-differential".into(),
        expr: residual,
        grid: linspace(0.0, params.t_max, params.n_points)
            .into_iter()
            .map(|t| vec![t])
            .collect(),
        weight: 1.0,
    });
    problem.pin = Some(PinConditions {
        t0: 0.0,
        alpha: 5.0 / params.t_max,
        values: vec![0.0, 1.0, -0.25],
    });
    Ok(problem)
}

/// The reference quantum model: 4 qubits, depth-4 hardware-efficient
/// ansatz, Chebyshev feature map over the problem domain.
pub fn population_dqc(params: &PopulationParams, seed: u64) -> UfaModel {
    UfaModel::new_dqc(DqcConfig::new(4, 4, [0.0, params.t_max], seed))
}

pub fn population_mlp(seed: u64) -> UfaModel {
    UfaModel::new_mlp(vec![1, 10, 10, 1], seed)
}

/// b(t) = ∂G/∂t read off the trained surrogate.
pub fn b_readout(model: &UfaModel, t: f64) -> f64 {
    use crate::transform::Surrogate;
    model.partial(&[t], &[1])
}
