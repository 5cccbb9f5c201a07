//! End-to-end acceptance: trains every case study through the CLI with its
//! committed configuration and prints one pass/fail line per criterion.
//! Compute-heavy; expect tens of minutes on a single CPU.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use autoint::autodiff::{eval_derivative, finite_difference_check, DerivativeRequest};
use autoint::oracles::{self, QuadratureRule};
use autoint::training::{train, OptimizerConfig};
use autoint::transform::{
    evaluate_transform, evaluate_transform_2d, substitute_residual, CoordSpec, EvalCtx, Expr,
    Kernel, Surrogate,
};
use autoint::ufa::{dqc_parameter_shift_check, DqcConfig, UfaModel};

#[derive(Debug, Clone)]
struct Row {
    query: String,
    learned: f64,
    oracle: f64,
    tolerance: f64,
}

impl Row {
    fn within(&self) -> bool {
        (self.learned - self.oracle).abs() <= self.tolerance
    }
}

fn repo_root() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .unwrap()
}

fn out_root() -> PathBuf {
    let dir = repo_root().join("target").join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Trains a case via the CLI binary and returns the comparison rows.
fn run_case(config: &str, seed: u64, extra: &[&str]) -> Vec<Row> {
    let out = out_root().join(format!(
        "{}-seed{}",
        Path::new(config).file_stem().unwrap().to_str().unwrap(),
        seed
    ));
    let status = Command::new(env!("CARGO_BIN_EXE_autoint"))
        .current_dir(repo_root())
        .arg("run")
        .args(["--config", &format!("configs/{config}")])
        .args(["--seed", &seed.to_string()])
        .args(["--out", out.to_str().unwrap()])
        .args(extra)
        .status()
        .expect("failed to launch CLI");
    assert!(status.success(), "CLI run failed for {config} seed {seed}");
    let text = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            Row {
                query: c[0].to_string(),
                learned: c[1].parse().unwrap(),
                oracle: c[2].parse().unwrap(),
                tolerance: c[3].parse().unwrap(),
            }
        })
        .collect()
}

fn verdict(name: &str, detail: String, ok: bool) {
    println!(
        "[{}] {name}: {detail}",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "{name}: {detail}");
}

fn european_runs() -> &'static Vec<Vec<Row>> {
    static RUNS: OnceLock<Vec<Vec<Row>>> = OnceLock::new();
    RUNS.get_or_init(|| (0..4).map(|s| run_case("european.toml", s, &[])).collect())
}

#[test]
fn criterion_1_european_payoff_and_std() {
    let runs = european_runs();
    let mut good = 0;
    let mut details = Vec::new();
    for (seed, rows) in runs.iter().enumerate() {
        let payoff = rows.iter().find(|r| r.query == "payoff").unwrap();
        let std = rows.iter().find(|r| r.query == "std").unwrap();
        let ok = payoff.within() && std.within();
        good += ok as usize;
        details.push(format!(
            "seed {seed} payoff {:.3} std {:.3}{}",
            payoff.learned,
            std.learned,
            if ok { "" } else { " (out of band)" }
        ));
    }
    verdict(
        "european payoff within 0.05 of 0.104 and std within 0.10 of 0.315 for >=3 of 4 seeds",
        format!("{good}/4 seeds in band; {}", details.join("; ")),
        good >= 3,
    );
}

#[test]
fn criterion_2_asian_intermediate_means() {
    let rows = run_case("asian.toml", 0, &[]);
    let worst = rows
        .iter()
        .map(|r| (r.learned - r.oracle).abs())
        .fold(0.0f64, f64::max);
    verdict(
        "asian mean at 5 intermediate times within 0.05 of the closed form",
        format!("{} times, worst abs error {worst:.4}", rows.len()),
        rows.len() == 5 && rows.iter().all(Row::within),
    );
}

#[test]
fn criterion_3_basket_mean_price() {
    let rows = run_case("basket.toml", 0, &[]);
    let worst = rows
        .iter()
        .map(|r| (r.learned - r.oracle).abs() / r.tolerance)
        .fold(0.0f64, f64::max);
    verdict(
        "basket mean price within max(10% relative, 0.03) over t in [0.3, 1]",
        format!("{} times, worst error {worst:.2}x tolerance", rows.len()),
        !rows.is_empty() && rows.iter().all(Row::within),
    );
}

#[test]
fn criterion_4_moment_of_inertia_sweep() {
    let rows = run_case("moi.toml", 0, &[]);
    let worst = rows
        .iter()
        .map(|r| (r.learned - r.oracle).abs() / r.oracle.abs())
        .fold(0.0f64, f64::max);
    verdict(
        "moment of inertia within 2% across the omega sweep, 1% at omega=0",
        format!("{} sweep points, worst rel error {:.2}%", rows.len(), 100.0 * worst),
        !rows.is_empty() && rows.iter().all(Row::within),
    );
}

#[test]
fn criterion_5_potential_curve() {
    let rows = run_case("potential.toml", 0, &[]);
    let worst = rows
        .iter()
        .map(|r| (r.learned - r.oracle).abs() / r.oracle.abs())
        .fold(0.0f64, f64::max);
    verdict(
        "potential within 5% of the quadrature oracle at 10 times",
        format!("{} times, worst rel error {:.2}%", rows.len(), 100.0 * worst),
        rows.len() == 10 && rows.iter().all(Row::within),
    );
}

#[test]
fn criterion_6_population_dqc_and_mlp() {
    let check = |config: &str, band: f64| -> (f64, f64, bool) {
        let rows = run_case(config, 0, &[]);
        let pin = rows
            .iter()
            .find(|r| r.query == "b@0-pinned")
            .expect("missing pinned row");
        let linf = rows
            .iter()
            .filter(|r| r.query != "b@0-pinned")
            .map(|r| (r.learned - r.oracle).abs())
            .fold(0.0f64, f64::max);
        let pin_err = (pin.learned - pin.oracle).abs();
        (linf, pin_err, linf <= band && pin_err <= 1e-12)
    };
    let (dqc_linf, dqc_pin, dqc_ok) = check("population_dqc.toml", 0.05);
    let (mlp_linf, mlp_pin, mlp_ok) = check("population_mlp.toml", 0.02);
    verdict(
        "population b(t): DQC L-inf <= 0.05, MLP L-inf <= 0.02, pinned b(0) exact to 1e-12",
        format!(
            "dqc L-inf {dqc_linf:.4} pin {dqc_pin:.1e}; mlp L-inf {mlp_linf:.4} pin {mlp_pin:.1e}"
        ),
        dqc_ok && mlp_ok,
    );
}

#[test]
fn criterion_7_numerical_property_suite() {
    let mut ok = true;
    let mut notes = Vec::new();

    // Autodiff vs finite differences.
    let model = UfaModel::new_mlp(vec![2, 8, 8, 1], 42);
    let e1 = finite_difference_check(&model, &[0.3, -0.4], &DerivativeRequest::new(vec![1, 0]), 1e-4)
        .unwrap();
    let e3 = finite_difference_check(&model, &[0.3, -0.4], &DerivativeRequest::new(vec![2, 1]), 1e-3)
        .unwrap();
    ok &= e1 < 1e-6 && e3 < 1e-3;
    notes.push(format!("fd {e1:.1e}/{e3:.1e}"));

    // Circuit model vs dense statevector oracle, and parameter shift.
    let config = DqcConfig::new(4, 3, [0.0, 1.0], 7);
    let dqc = UfaModel::new_dqc(config.clone());
    let dense = oracles::dqc_dense_expectation(&config, dqc.params(), 0.6);
    let e_dense = (dqc.eval_f64(&[0.6]) - dense).abs();
    let e_shift = (0..dqc.n_params())
        .map(|i| dqc_parameter_shift_check(&dqc, 0.6, i).unwrap())
        .fold(0.0f64, f64::max);
    ok &= e_dense < 1e-10 && e_shift < 1e-10;
    notes.push(format!("dense {e_dense:.1e} shift {e_shift:.1e}"));

    // Transform round-trip vs quadrature on a smooth integrand.
    let rule = QuadratureRule::GaussLegendre { points: 64 };
    let direct = oracles::quadrature_transform(
        |s| (2.0 * s).cos(),
        |s| 1.0 + s * s,
        -0.5,
        1.2,
        rule,
    );
    struct Quad;
    impl Surrogate for Quad {
        fn arity(&self) -> usize {
            1
        }
        fn value(&self, p: &[f64]) -> f64 {
            let rule = QuadratureRule::AdaptiveSimpson { tol: 1e-13 };
            oracles::quadrature_transform(|s| (2.0 * s).cos(), |s| 1.0 + s * s, 0.0, p[0], rule)
        }
        fn partial(&self, _: &[f64], _: &[usize]) -> f64 {
            unreachable!()
        }
    }
    let e_rt = (evaluate_transform(&Quad, -0.5, 1.2, &[]) - direct).abs();
    ok &= e_rt < 1e-8;
    notes.push(format!("round-trip {e_rt:.1e}"));

    // Substitution equivalence on f + ∫ k f ds.
    let kernel = Kernel::new(Expr::c(2.0) + Expr::coord(0), 0);
    let raw = Expr::UnknownF
        + Expr::Integral {
            kernel: Box::new(Expr::c(2.0) + Expr::coord(0)),
            lower: CoordSpec::Fixed(-1.0),
            upper: CoordSpec::Current(0),
        };
    let substituted = substitute_residual(&raw, &kernel, 1).unwrap();
    let m = UfaModel::new_mlp(vec![1, 6, 1], 9);
    let x = 0.37;
    let shape = autoint::autodiff::Shape::get(1, 1);
    let inputs = vec![autoint::autodiff::Tower::<f64>::seed(shape, 0, x)];
    let ctx = EvalCtx {
        model: &m,
        params: m.params(),
        inputs: &inputs,
        dirs: &[Some(0)],
        unknown_f: None,
        cache: Default::default(),
    };
    let got = autoint::transform::eval(&substituted, &ctx).unwrap().value();
    let gprime = eval_derivative(&m, &[x], &DerivativeRequest::new(vec![1]))
        .unwrap()
        .value;
    let want = gprime / (2.0 + x) + m.eval_f64(&[x]) - m.eval_f64(&[-1.0]);
    let e_sub = (got - want).abs();
    ok &= e_sub < 1e-10;
    notes.push(format!("substitution {e_sub:.1e}"));

    // Determinism: two short trainings must agree bit for bit.
    let deterministic = {
        let go = || {
            let params = autoint::problems::PopulationParams {
                n_points: 10,
                ..Default::default()
            };
            let problem = autoint::problems::population::population_problem(&params).unwrap();
            let mut model = autoint::problems::population::population_mlp(3);
            train(&mut model, &problem, &OptimizerConfig::adam(0.01, 20, 3)).unwrap();
            model.params().to_vec()
        };
        go() == go()
    };
    ok &= deterministic;
    notes.push(format!("deterministic {deterministic}"));

    verdict(
        "numerical property suite (autodiff, circuit oracle, round-trip, substitution, determinism)",
        notes.join(", "),
        ok,
    );
}

#[test]
fn criterion_8_two_evaluation_contract() {
    let model = UfaModel::new_mlp(vec![2, 8, 1], 1);
    model.reset_eval_count();
    let _ = evaluate_transform(&model, -1.0, 1.0, &[0.5]);
    let one_d = model.eval_count();

    let model2 = UfaModel::new_mlp(vec![3, 6, 1], 2);
    model2.reset_eval_count();
    let _ = evaluate_transform_2d(&model2, [-1.0, -1.0], [1.0, 1.0], &[0.5]);
    let two_d = model2.eval_count();

    verdict(
        "transform readout costs exactly two model evaluations (four for 2-D corners)",
        format!("1-D readout: {one_d} evaluations, 2-D readout: {two_d}"),
        one_d == 2 && two_d == 4,
    );
}
