use autoint::oracles::population_exact;
use autoint::problems::population::{population_dqc, population_problem};
use autoint::problems::PopulationParams;
use autoint::training::{train, OptimizerConfig};
use autoint::transform::{ResidualTerm, Surrogate, SurrogateProblem};
use autoint::ufa::UfaModel;
use std::time::Instant;

fn linf(model: &UfaModel) -> (f64, Vec<f64>) {
    let mut worst = 0.0f64;
    let mut profile = Vec::new();
    for i in 0..=20 {
        let t = i as f64 / 20.0;
        let err = model.partial(&[t], &[1]) - population_exact(t);
        if i % 5 == 0 {
            profile.push((err * 1e4).round() / 1e4);
        }
        worst = worst.max(err.abs());
    }
    (worst, profile)
}

/// Splits the single residual term into per-point terms with weights w(t).
fn weighted(problem: &SurrogateProblem, w: impl Fn(f64) -> f64) -> SurrogateProblem {
    let mut out = problem.clone();
    let base = &problem.residual_terms[0];
    let n = base.grid.len() as f64;
    out.residual_terms = base
        .grid
        .iter()
        .map(|p| ResidualTerm {
            label: format!("r@{:.3}", p[0]),
            expr: base.expr.clone(),
            grid: vec![p.clone()],
            weight: w(p[0]) / n,
        })
        .collect();
    out
}

fn cheb_weight(t: f64, pow: f64, floor: f64) -> f64 {
    let x = -0.95 + 1.9 * t;
    (1.0 - x * x).powf(pow).max(floor)
}

#[test]
fn dqc_snapshot_seed1() {
    let params = PopulationParams::default();
    let plain = population_problem(&params).unwrap();
    let seed = 1u64;
    let mut m = population_dqc(&params, seed);
    for (t_hi, lr, epochs) in [
        (0.25, 0.1, 1000usize),
        (0.5, 0.1, 1000),
        (0.75, 0.1, 1000),
        (1.0, 0.1, 1000),
        (1.0, 0.02, 1000),
        (1.0, 0.005, 500),
    ] {
        let mut staged = weighted(&plain, |t| cheb_weight(t, 1.5, 0.02));
        staged
            .residual_terms
            .retain(|r| r.grid[0][0] <= t_hi + 1e-9);
        train(&mut m, &staged, &OptimizerConfig::adabelief(lr, epochs, seed)).unwrap();
    }
    let (w, prof) = linf(&m);
    eprintln!("snapshot seed {seed}: linf {w:.4} profile {prof:?}");
    m.save(std::path::Path::new("/root/scratch/dqc_seed1.json"))
        .unwrap();
}

#[test]
fn dqc_long_tail() {
    let params = PopulationParams::default();
    let plain = population_problem(&params).unwrap();
    let mut m = UfaModel::load(std::path::Path::new("/root/scratch/dqc_seed1.json")).unwrap();
    let wp = weighted(&plain, |t| cheb_weight(t, 1.5, 0.02));
    for round in 0..6 {
        train(&mut m, &wp, &OptimizerConfig::adabelief(0.005, 1000, 100 + round)).unwrap();
        let (w, prof) = linf(&m);
        eprintln!("round {round}: linf {w:.4} profile {prof:?}");
    }
}

#[test]
fn dqc_finetunes() {
    let params = PopulationParams::default();
    let plain = population_problem(&params).unwrap();
    let base = UfaModel::load(std::path::Path::new("/root/scratch/dqc_seed1.json")).unwrap();

    // (i) unweighted, tiny lr
    let mut m = base.clone();
    train(&mut m, &plain, &OptimizerConfig::adabelief(1e-3, 1000, 7)).unwrap();
    let (w, prof) = linf(&m);
    eprintln!("ft unweighted lr1e-3: linf {w:.4} profile {prof:?}");

    // (ii) floor 0.3
    let mut m = base.clone();
    let wp = weighted(&plain, |t| cheb_weight(t, 1.5, 0.3));
    train(&mut m, &wp, &OptimizerConfig::adabelief(5e-3, 1000, 7)).unwrap();
    let (w, prof) = linf(&m);
    eprintln!("ft floor0.3 lr5e-3: linf {w:.4} profile {prof:?}");

    // (iii) unweighted, very tiny lr, longer
    let mut m = base.clone();
    train(&mut m, &plain, &OptimizerConfig::adabelief(1e-4, 2000, 7)).unwrap();
    let (w, prof) = linf(&m);
    eprintln!("ft unweighted lr1e-4: linf {w:.4} profile {prof:?}");
}

#[test]
fn dqc_curriculum() {
    let params = PopulationParams::default();
    let plain = population_problem(&params).unwrap();
    for seed in [0u64, 1, 2] {
        let mut m = population_dqc(&params, seed);
        for (t_hi, lr, epochs) in [
            (0.25, 0.1, 1000usize),
            (0.5, 0.1, 1000),
            (0.75, 0.1, 1000),
            (1.0, 0.1, 1000),
            (1.0, 0.02, 1000),
            (1.0, 0.005, 500),
        ] {
            let mut staged = weighted(&plain, |t| cheb_weight(t, 1.5, 0.02));
            staged
                .residual_terms
                .retain(|r| r.grid[0][0] <= t_hi + 1e-9);
            train(&mut m, &staged, &OptimizerConfig::adabelief(lr, epochs, seed)).unwrap();
            let (w, _) = linf(&m);
            eprintln!("  seed {seed} t<={t_hi} lr {lr}: linf {w:.4}");
        }
        let (w, prof) = linf(&m);
        eprintln!("curriculum seed {seed}: linf {w:.4} profile {prof:?}");
    }
}

#[test]
fn dqc_supervised() {
    use autoint::transform::{DataTerm, Expr};
    let params = PopulationParams::default();
    let mut prob = SurrogateProblem::new("sup", 1);
    let n = 50;
    prob.data_terms.push(DataTerm {
        label: "b-data".into(),
        expr: Expr::Surrogate.dd(0, 1),
        points: (0..=n).map(|i| vec![i as f64 / n as f64]).collect(),
        targets: (0..=n).map(|i| population_exact(i as f64 / n as f64)).collect(),
        weight: 1.0,
    });
    for seed in [0u64, 1] {
        let mut m = population_dqc(&params, seed);
        train(&mut m, &prob, &OptimizerConfig::adabelief(0.1, 1500, seed)).unwrap();
        train(&mut m, &prob, &OptimizerConfig::adabelief(0.02, 500, seed)).unwrap();
        let (w, prof) = linf(&m);
        eprintln!("supervised seed {seed}: linf {w:.4} profile {prof:?}");
    }
}

#[test]
fn dqc_timing() {
    let params = PopulationParams::default();
    let plain = population_problem(&params).unwrap();
    let wp = weighted(&plain, |t| cheb_weight(t, 1.5, 0.1));

    let mut m = population_dqc(&params, 0);
    let t0 = Instant::now();
    train(&mut m, &plain, &OptimizerConfig::adabelief(0.1, 200, 0)).unwrap();
    eprintln!("plain single-term 200 epochs: {:?}", t0.elapsed());

    let mut m = population_dqc(&params, 0);
    let t0 = Instant::now();
    train(&mut m, &wp, &OptimizerConfig::adabelief(0.1, 200, 0)).unwrap();
    eprintln!("per-point terms 200 epochs: {:?}", t0.elapsed());
}
