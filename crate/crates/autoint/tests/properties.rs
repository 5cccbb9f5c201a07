//! Cross-cutting property suite: autodiff vs finite differences, circuit
//! vs dense statevector oracle, transform round-trips, substitution
//! equivalence, determinism, and the two-evaluation readout contract.

use autoint::autodiff::{
    eval_derivative, finite_difference_check, DerivativeRequest, Tape,
};
use autoint::oracles::{self, QuadratureRule};
use autoint::training::{assemble_loss, train, OptimizerConfig};
use autoint::transform::{
    evaluate_transform, evaluate_transform_2d, recover_f, substitute_residual, CoordSpec, Expr,
    EvalCtx, Kernel, Surrogate,
};
use autoint::ufa::{dqc_parameter_shift_check, DqcConfig, UfaModel};
use proptest::prelude::*;

fn mlp2() -> UfaModel {
    UfaModel::new_mlp(vec![2, 8, 8, 1], 42)
}

#[test]
fn autodiff_matches_finite_differences() {
    let model = mlp2();
    for (orders, step, bound) in [
        (vec![1, 0], 1e-4, 1e-6),
        (vec![0, 1], 1e-4, 1e-6),
        (vec![2, 0], 1e-4, 1e-5),
        (vec![1, 1], 1e-4, 1e-5),
        (vec![3, 0], 1e-3, 1e-3),
        (vec![2, 1], 1e-3, 1e-3),
    ] {
        let req = DerivativeRequest::new(orders.clone());
        let err = finite_difference_check(&model, &[0.3, -0.4], &req, step).unwrap();
        assert!(err < bound, "orders {orders:?}: rel err {err:e}");
    }
}

#[test]
fn dqc_matches_dense_statevector_oracle() {
    let config = DqcConfig::new(4, 4, [0.0, 1.0], 7);
    let model = UfaModel::new_dqc(config.clone());
    for i in 0..20 {
        let x = 0.025 + 0.95 * i as f64 / 19.0;
        let dense = oracles::dqc_dense_expectation(&config, model.params(), x);
        let err = (model.eval_f64(&[x]) - dense).abs();
        assert!(err < 1e-10, "x = {x}: {err:e}");
    }
}

#[test]
fn dqc_parameter_shift_everywhere() {
    let config = DqcConfig::new(3, 2, [-1.0, 2.0], 3);
    let model = UfaModel::new_dqc(config);
    for i in 0..model.n_params() {
        let err = dqc_parameter_shift_check(&model, 0.8, i).unwrap();
        assert!(err < 1e-10, "param {i}: {err:e}");
    }
}

/// Antiderivative surrogate built by quadrature rather than training;
/// used to check the transform readout identity independently.
struct QuadSurrogate {
    base: f64,
}

impl Surrogate for QuadSurrogate {
    fn arity(&self) -> usize {
        1
    }

    fn value(&self, inputs: &[f64]) -> f64 {
        let rule = QuadratureRule::GaussLegendre { points: 64 };
        oracles::quadrature_transform(
            |s| (1.3 * s).sin() + 0.2 * s * s,
            |s| 1.0 + 0.5 * s.cos(),
            self.base,
            inputs[0],
            rule,
        )
    }

    fn partial(&self, inputs: &[f64], orders: &[usize]) -> f64 {
        assert_eq!(orders, [1]);
        let s = inputs[0];
        ((1.3 * s).sin() + 0.2 * s * s) * (1.0 + 0.5 * s.cos())
    }
}

#[test]
fn transform_round_trip_matches_quadrature() {
    let surrogate = QuadSurrogate { base: -2.0 };
    let rule = QuadratureRule::AdaptiveSimpson { tol: 1e-12 };
    let direct = oracles::quadrature_transform(
        |s| (1.3 * s).sin() + 0.2 * s * s,
        |s| 1.0 + 0.5 * s.cos(),
        -1.0,
        1.7,
        rule,
    );
    let learned = evaluate_transform(&surrogate, -1.0, 1.7, &[]);
    assert!((learned - direct).abs() < 1e-8, "{learned} vs {direct}");

    let kernel = Kernel::new(
        Expr::c(1.0) + Expr::c(0.5) * Expr::coord(0).apply(autoint::transform::Func::Cos),
        0,
    );
    let f = recover_f(&surrogate, &kernel, &[0.4]).unwrap();
    let exact = (1.3f64 * 0.4).sin() + 0.2 * 0.4 * 0.4;
    assert!((f - exact).abs() < 1e-10);
}

#[test]
fn substitution_residual_equivalence() {
    // Residual in terms of the unknown f: f + ∫ₐˣ k f ds − x. Substitution
    // must equal the hand-written surrogate form (1/k)G′ + G(x) − G(a) − x.
    let kernel = Kernel::new(Expr::c(2.0) + Expr::coord(0), 0);
    let raw = Expr::UnknownF
        + Expr::Integral {
            kernel: Box::new(Expr::c(2.0) + Expr::coord(0)),
            lower: CoordSpec::Fixed(-1.0),
            upper: CoordSpec::Current(0),
        }
        - Expr::coord(0);
    let substituted = substitute_residual(&raw, &kernel, 1).unwrap();

    let model = UfaModel::new_mlp(vec![1, 6, 1], 9);
    let x = 0.37;
    let shape = autoint::autodiff::Shape::get(1, 1);
    let inputs = vec![autoint::autodiff::Tower::<f64>::seed(shape, 0, x)];
    let ctx = EvalCtx {
        model: &model,
        params: model.params(),
        inputs: &inputs,
        dirs: &[Some(0)],
        unknown_f: None,
        cache: Default::default(),
    };
    let got = autoint::transform::eval(&substituted, &ctx).unwrap().value();

    let gprime = eval_derivative(&model, &[x], &DerivativeRequest::new(vec![1]))
        .unwrap()
        .value;
    let expected = gprime / (2.0 + x) + model.eval_f64(&[x]) - model.eval_f64(&[-1.0]) - x;
    assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
}

#[test]
fn substitution_rejects_mismatched_kernel() {
    let kernel = Kernel::identity(0);
    let raw = Expr::Integral {
        kernel: Box::new(Expr::coord(0)),
        lower: CoordSpec::Fixed(0.0),
        upper: CoordSpec::Current(0),
    };
    assert!(substitute_residual(&raw, &kernel, 1).is_err());
}

#[test]
fn two_evaluation_contract() {
    let model = mlp2();
    model.reset_eval_count();
    let _ = evaluate_transform(&model, -1.0, 1.0, &[0.3]);
    assert_eq!(model.eval_count(), 2, "1-D readout must cost two evaluations");

    let model3 = UfaModel::new_mlp(vec![3, 6, 1], 5);
    model3.reset_eval_count();
    let _ = evaluate_transform_2d(&model3, [-1.0, -1.0], [1.0, 1.0], &[0.3]);
    assert_eq!(
        model3.eval_count(),
        4,
        "2-D corner readout must cost four evaluations"
    );
}

#[test]
fn pinned_model_exact_for_random_parameters() {
    for seed in [1, 2, 3] {
        let model = UfaModel::new_mlp(vec![1, 8, 1], seed)
            .pinned(0.0, 5.0, vec![0.0, 1.0, -0.25])
            .unwrap();
        let value = model.eval_f64(&[0.0]);
        let d1 = eval_derivative(&model, &[0.0], &DerivativeRequest::new(vec![1]))
            .unwrap()
            .value;
        let d2 = eval_derivative(&model, &[0.0], &DerivativeRequest::new(vec![2]))
            .unwrap()
            .value;
        assert!(value.abs() <= 1e-12);
        assert!((d1 - 1.0).abs() <= 1e-12);
        assert!((d2 + 0.25).abs() <= 1e-12);
    }
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let params = autoint::problems::PopulationParams {
            n_points: 10,
            ..Default::default()
        };
        let problem = autoint::problems::population::population_problem(&params).unwrap();
        let mut model = autoint::problems::population::population_mlp(3);
        let config = OptimizerConfig::adam(0.01, 25, 3);
        let report = train(&mut model, &problem, &config).unwrap();
        (report.loss_history, model.params().to_vec())
    };
    let (h1, p1) = run();
    let (h2, p2) = run();
    assert_eq!(h1, h2, "loss histories must be bit-identical");
    assert_eq!(p1, p2, "trained parameters must be bit-identical");
}

#[test]
fn loss_gradient_matches_finite_differences() {
    let setup = autoint::problems::european::EuropeanSetup {
        n_x: 12,
        n_t: 5,
        ..autoint::problems::european::EuropeanSetup::new(Default::default(), 11)
    };
    let problem = autoint::problems::european::european_problem(
        &setup,
        autoint::problems::european::MomentKernel::First,
    )
    .unwrap();
    let model = UfaModel::new_mlp(vec![2, 6, 1], 11);
    let loss = assemble_loss(&problem, &model).unwrap();
    let tape = Tape::with_capacity(1 << 14);
    let p0 = model.params().to_vec();
    let (_, _, grad) = loss.value_grad(&model, &p0, &tape).unwrap();
    let h = 1e-6;
    for i in (0..p0.len()).step_by(3) {
        let mut pp = p0.clone();
        pp[i] += h;
        let mut pm = p0.clone();
        pm[i] -= h;
        let fd = (loss.value(&model, &pp).unwrap().0 - loss.value(&model, &pm).unwrap().0)
            / (2.0 * h);
        let rel = (grad[i] - fd).abs() / fd.abs().max(1e-8);
        assert!(rel < 1e-4, "param {i}: analytic {} fd {fd}", grad[i]);
    }
}

#[test]
fn model_serialization_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for model in [
        mlp2(),
        UfaModel::new_dqc(DqcConfig::new(3, 2, [0.0, 1.0], 8)),
        UfaModel::new_mlp(vec![1, 5, 1], 2)
            .pinned(0.0, 5.0, vec![0.0, 1.0])
            .unwrap(),
    ] {
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = UfaModel::load(&path).unwrap();
        let probe = match model.arity() {
            1 => vec![0.4],
            _ => vec![0.4, -0.2],
        };
        assert_eq!(model.eval_f64(&probe), loaded.eval_f64(&probe));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dqc_observable_bounded(x in 0.01f64..0.99, seed in 0u64..50) {
        let model = UfaModel::new_dqc(DqcConfig::new(4, 2, [0.0, 1.0], seed));
        let y = model.eval_f64(&[x]);
        prop_assert!(y.abs() <= 4.0 + 1e-12);
    }

    #[test]
    fn transform_is_additive_over_intervals(a in -1.0f64..0.0, b in 0.0f64..1.0, c in 1.0f64..2.0) {
        let model = UfaModel::new_mlp(vec![2, 6, 1], 13);
        let whole = evaluate_transform(&model, a, c, &[0.2]);
        let split = evaluate_transform(&model, a, b, &[0.2])
            + evaluate_transform(&model, b, c, &[0.2]);
        prop_assert!((whole - split).abs() < 1e-10);
    }

    #[test]
    fn derivative_requests_are_linear(x in -0.5f64..0.5) {
        // d/dx of (model arity 2) along each direction, summed, equals the
        // directional structure of separate requests.
        let model = mlp2();
        let dx = eval_derivative(&model, &[x, 0.1], &DerivativeRequest::new(vec![1, 0])).unwrap().value;
        let req = DerivativeRequest::new(vec![1, 0]);
        let again = eval_derivative(&model, &[x, 0.1], &req).unwrap().value;
        prop_assert_eq!(dx, again);
    }
}
