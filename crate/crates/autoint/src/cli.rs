//! Command-line entry point: run case studies from config files, emit
//! CSV/JSON artifacts and comparison reports, and run the verification
//! suite.

use crate::fmt_sig;
use crate::oracles::{
    self, moi_exact, ou_mean, ou_variance, population_exact, potential_oracle,
    QuadratureRule,
};
use crate::problems::basket::{basket_exact, basket_problem, basket_readout, BasketSetup};
use crate::problems::european::{
    asian_readout, european_problem, payoff_readout, std_readout, EuropeanSetup,
    MomentKernel,
};
use crate::problems::moi::{moi_problem, moi_readout, MoiSetup, VolumeConstraint};
use crate::problems::population::{
    b_readout, population_dqc, population_mlp, population_problem,
};
use crate::problems::potential::{potential_problem, potential_readout, PotentialSetup};
use crate::problems::{
    AdvectionParams, DensityEstimator, OuParams, PopulationParams, VesselParams,
};
use crate::training::{train, linspace, OptimizerConfig, TrainError, TrainReport};
use crate::ufa::UfaModel;
use clap::{Parser, Subcommand};
use serde::Deserialize;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

const EXIT_OK: i32 = 0;
const EXIT_FAIL: i32 = 1;
const EXIT_CONFIG: i32 = 2;
const EXIT_TRAINING: i32 = 3;

/// Environment variable naming the root directory for run artifacts.
pub const OUTPUT_ROOT_ENV: &str = "AUTOINT_OUT";

#[derive(Parser)]
#[command(name = "autoint", about = "Physics-informed training with automatic integration")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a case study and write model, report, results and comparison
    /// artifacts.
    Run {
        /// TOML config file; flags override file values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Case id: european | asian | basket | moi | potential | population.
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Model kind: mlp | dqc (population only).
        #[arg(long)]
        model: Option<String>,
        /// Output directory (default: $AUTOINT_OUT/<case> or runs/<case>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep spec for moi, e.g. omega=0:8:9 (start:end:count).
        #[arg(long)]
        sweep: Option<String>,
        /// Concurrent sweep points (per-point seeds are seed+index).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Re-verify a prior run's comparison.csv against its tolerances.
    Check {
        /// Directory holding the run artifacts.
        #[arg(long)]
        dir: PathBuf,
        /// Override every tolerance with this absolute value.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Dump the oracle curve for a case as CSV to stdout.
    Oracle {
        #[arg(long)]
        case: String,
    },
    /// Run the quick autodiff/quadrature/circuit property suite.
    Selftest,
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run {
            config,
            case,
            seed,
            epochs,
            lr,
            model,
            out,
            sweep,
            jobs,
        } => cmd_run(RunArgs {
            config,
            case,
            seed,
            epochs,
            lr,
            model,
            out,
            sweep,
            jobs,
        }),
        Cmd::Check { dir, tol } => cmd_check(&dir, tol),
        Cmd::Oracle { case } => cmd_oracle(&case),
        Cmd::Selftest => cmd_selftest(),
    }
}

struct RunArgs {
    config: Option<PathBuf>,
    case: Option<String>,
    seed: Option<u64>,
    epochs: Option<usize>,
    lr: Option<f64>,
    model: Option<String>,
    out: Option<PathBuf>,
    sweep: Option<String>,
    jobs: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    case: Option<String>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    optimizer: OptimizerSection,
    #[serde(default)]
    constants: toml::Table,
    #[serde(default)]
    grid: GridSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    kind: Option<String>,
    layer_widths: Option<Vec<usize>>,
    n_qubits: Option<usize>,
    ansatz_depth: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizerSection {
    algorithm: Option<String>,
    learning_rate: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    epsilon: Option<f64>,
    epochs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    n_x: Option<usize>,
    n_t: Option<usize>,
    n_r: Option<usize>,
    n_points: Option<usize>,
    n_slices: Option<usize>,
    n_samples: Option<usize>,
    estimator: Option<String>,
    data_weight: Option<f64>,
    volume_weight: Option<f64>,
    volume_constraint: Option<String>,
}

impl OptimizerSection {
    fn merge_into(&self, base: &mut OptimizerConfig) -> Result<(), String> {
        if let Some(a) = &self.algorithm {
            base.algorithm = match a.as_str() {
                "adam" => crate::training::Algorithm::Adam,
                "ada_belief" | "adabelief" => crate::training::Algorithm::AdaBelief,
                other => return Err(format!("unknown optimizer algorithm `{other}`")),
            };
        }
        if let Some(v) = self.learning_rate {
            base.learning_rate = v;
        }
        if let Some(v) = self.beta1 {
            base.beta1 = v;
        }
        if let Some(v) = self.beta2 {
            base.beta2 = v;
        }
        if let Some(v) = self.epsilon {
            base.epsilon = v;
        }
        if let Some(v) = self.epochs {
            base.epochs = v;
        }
        Ok(())
    }
}

/// Deserializes the `[constants]` table into a params struct, logging a
/// notice for every field that fell back to its default.
fn parse_constants<T>(table: &toml::Table, case: &str) -> Result<T, String>
where
    T: serde::de::DeserializeOwned + serde::Serialize + Default,
{
    let parsed: T = table
        .clone()
        .try_into()
        .map_err(|e| format!("invalid [constants] for case {case}: {e}"))?;
    if let Ok(toml::Value::Table(expected)) = toml::Value::try_from(T::default()) {
        let defaulted: Vec<&str> = expected
            .keys()
            .filter(|k| !table.contains_key(*k))
            .map(|k| k.as_str())
            .collect();
        if !defaulted.is_empty() {
            eprintln!("notice: case {case} using default constants for: {}", defaulted.join(", "));
        }
    }
    Ok(parsed)
}

fn config_hash(text: &str) -> u64 {
    let mut h = DefaultHasher::new();
    text.hash(&mut h);
    h.finish()
}

/// One row of the comparison artifact; the tolerance is already resolved to
/// an absolute band around the oracle value.
struct CompareRow {
    query: String,
    learned: f64,
    oracle: f64,
    tolerance: f64,
}

fn write_comparison(path: &Path, rows: &[CompareRow]) -> std::io::Result<()> {
    let mut s = String::from("query,learned,oracle,tolerance\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.query,
            fmt_sig(r.learned),
            fmt_sig(r.oracle),
            fmt_sig(r.tolerance)
        ));
    }
    std::fs::write(path, s)
}

fn write_report(path: &Path, report: &TrainReport, hash: u64) -> std::io::Result<()> {
    let wrapped = serde_json::json!({
        "config_hash": format!("{hash:016x}"),
        "report": report,
    });
    std::fs::write(path, serde_json::to_string_pretty(&wrapped).unwrap())
}

fn cmd_run(args: RunArgs) -> i32 {
    let (file, raw_text) = match &args.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read config {}: {e}", path.display());
                    return EXIT_CONFIG;
                }
            };
            match toml::from_str::<FileConfig>(&text) {
                Ok(f) => (f, text),
                Err(e) => {
                    eprintln!("error: invalid config {}: {e}", path.display());
                    return EXIT_CONFIG;
                }
            }
        }
        None => (FileConfig::default(), String::new()),
    };

    let case = match args.case.clone().or_else(|| file.case.clone()) {
        Some(c) => c,
        None => {
            eprintln!("error: no case given (flag --case or config `case`)");
            return EXIT_CONFIG;
        }
    };
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out_dir = args
        .out
        .clone()
        .or_else(|| file.output_dir.clone())
        .unwrap_or_else(|| {
            let root = std::env::var(OUTPUT_ROOT_ENV).unwrap_or_else(|_| "runs".into());
            PathBuf::from(root).join(&case)
        });
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_CONFIG;
    }
    let hash = config_hash(&format!("{raw_text}|seed={seed}"));

    let ctx = RunCtx {
        file,
        args,
        seed,
        out_dir,
        hash,
    };
    let result = match case.as_str() {
        "european" => run_european(&ctx, false),
        "asian" => run_european(&ctx, true),
        "basket" => run_basket(&ctx),
        "moi" => run_moi(&ctx),
        "potential" => run_potential(&ctx),
        "population" => run_population(&ctx),
        other => {
            eprintln!("error: unknown case `{other}`");
            return EXIT_CONFIG;
        }
    };
    match result {
        Ok(rows) => {
            let path = ctx.out_dir.join("comparison.csv");
            if let Err(e) = write_comparison(&path, &rows) {
                eprintln!("error: writing {}: {e}", path.display());
                return EXIT_CONFIG;
            }
            let worst = rows
                .iter()
                .map(|r| (r.learned - r.oracle).abs() / r.tolerance)
                .fold(0.0f64, f64::max);
            println!(
                "case {case} seed {seed}: {} comparisons, worst error at {:.2}x tolerance",
                rows.len(),
                worst
            );
            println!("artifacts in {}", ctx.out_dir.display());
            EXIT_OK
        }
        Err(RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(RunError::Train(e)) => {
            eprintln!("error: training aborted: {e}");
            EXIT_TRAINING
        }
    }
}

struct RunCtx {
    file: FileConfig,
    args: RunArgs,
    seed: u64,
    out_dir: PathBuf,
    hash: u64,
}

enum RunError {
    Config(String),
    Train(TrainError),
}

impl From<TrainError> for RunError {
    fn from(e: TrainError) -> Self {
        RunError::Train(e)
    }
}

impl RunCtx {
    fn optimizer(&self, mut base: OptimizerConfig) -> Result<OptimizerConfig, RunError> {
        base.seed = self.seed;
        self.file
            .optimizer
            .merge_into(&mut base)
            .map_err(RunError::Config)?;
        if let Some(e) = self.args.epochs {
            base.epochs = e;
        }
        if let Some(lr) = self.args.lr {
            base.learning_rate = lr;
        }
        Ok(base)
    }

    fn layer_widths(&self, default: &[usize]) -> Vec<usize> {
        self.file
            .model
            .layer_widths
            .clone()
            .unwrap_or_else(|| default.to_vec())
    }

    fn estimator(&self) -> Result<DensityEstimator, RunError> {
        match self.file.grid.estimator.as_deref() {
            None | Some("kde") => Ok(DensityEstimator::Kde),
            Some("histogram") => Ok(DensityEstimator::Histogram),
            Some(other) => Err(RunError::Config(format!("unknown estimator `{other}`"))),
        }
    }

    fn save_model(&self, model: &UfaModel, name: &str) -> Result<(), RunError> {
        model
            .save(&self.out_dir.join(name))
            .map_err(|e| RunError::Config(format!("saving model: {e}")))
    }

    fn save_report(&self, report: &TrainReport, name: &str) -> Result<(), RunError> {
        write_report(&self.out_dir.join(name), report, self.hash)
            .map_err(|e| RunError::Config(format!("writing report: {e}")))?;
        let mut csv = Vec::new();
        report.write_history_csv(&mut csv).unwrap();
        std::fs::write(
            self.out_dir.join(format!("{}.history.csv", name.trim_end_matches(".json"))),
            csv,
        )
        .map_err(|e| RunError::Config(format!("writing history: {e}")))
    }

    fn write_results(&self, header: &str, rows: &[Vec<f64>]) -> Result<(), RunError> {
        let mut s = String::from(header);
        s.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_sig(v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        std::fs::write(self.out_dir.join("results.csv"), s)
            .map_err(|e| RunError::Config(format!("writing results: {e}")))
    }
}

/// Trains the two European moment surrogates (kernels x and x²) and reads
/// out either the terminal payoff/std or the Asian per-date curve.
fn run_european(ctx: &RunCtx, asian: bool) -> Result<Vec<CompareRow>, RunError> {
    let params: OuParams = parse_constants(&ctx.file.constants, "european").map_err(RunError::Config)?;
    params.validate().map_err(RunError::Config)?;
    let mut setup = EuropeanSetup::new(params.clone(), ctx.seed);
    let g = &ctx.file.grid;
    if let Some(v) = g.n_x {
        setup.n_x = v;
    }
    if let Some(v) = g.n_t {
        setup.n_t = v;
    }
    if let Some(v) = g.n_samples {
        setup.n_samples = v;
    }
    if let Some(v) = g.data_weight {
        setup.data_weight = v;
    }
    setup.estimator = ctx.estimator()?;
    let optimizer = ctx.optimizer(OptimizerConfig::adam(0.005, 4000, ctx.seed))?;
    let widths = ctx.layer_widths(&[2, 10, 10, 1]);

    let problem_g = european_problem(&setup, MomentKernel::First).map_err(RunError::Config)?;
    let mut model_g = UfaModel::new_mlp(widths.clone(), ctx.seed);
    let report_g = train(&mut model_g, &problem_g, &optimizer)?;
    ctx.save_model(&model_g, "model_g.json")?;
    ctx.save_report(&report_g, "report_g.json")?;

    let problem_g2 = european_problem(&setup, MomentKernel::Second).map_err(RunError::Config)?;
    let mut model_g2 = UfaModel::new_mlp(widths, ctx.seed + 1);
    let mut opt2 = optimizer.clone();
    opt2.seed = ctx.seed + 1;
    let report_g2 = train(&mut model_g2, &problem_g2, &opt2)?;
    ctx.save_model(&model_g2, "model_g2.json")?;
    ctx.save_report(&report_g2, "report_g2.json")?;

    if asian {
        let times = linspace(params.t_min, params.t_max, 5);
        let learned =
            asian_readout(&model_g, &model_g2, &params, &times).map_err(RunError::Config)?;
        let mut rows = Vec::new();
        let mut results = Vec::new();
        for (&t, &(mean, std)) in times.iter().zip(&learned) {
            let mean_exact = ou_mean(t, params.nu, params.x0, params.t0);
            let std_exact = ou_variance(t, params.sigma, params.nu, params.t0).sqrt();
            results.push(vec![t, mean, mean_exact, std, std_exact]);
            rows.push(CompareRow {
                query: format!("mean@{}", (t * 1e6).round() / 1e6),
                learned: mean,
                oracle: mean_exact,
                tolerance: 0.05,
            });
        }
        ctx.write_results("t,mean_nn,mean_exact,std_nn,std_exact", &results)?;
        Ok(rows)
    } else {
        let payoff = payoff_readout(&model_g, &params);
        let std = std_readout(&model_g, &model_g2, &params, params.terminal_time);
        let t = params.terminal_time;
        let payoff_exact =
            (ou_mean(t, params.nu, params.x0, params.t0) - params.strike).max(0.0);
        let std_exact = ou_variance(t, params.sigma, params.nu, params.t0).sqrt();
        ctx.write_results(
            "payoff_nn,payoff_exact,std_nn,std_exact",
            &[vec![payoff, payoff_exact, std, std_exact]],
        )?;
        Ok(vec![
            CompareRow {
                query: "payoff".into(),
                learned: payoff,
                oracle: payoff_exact,
                tolerance: 0.05,
            },
            CompareRow {
                query: "std".into(),
                learned: std,
                oracle: std_exact,
                tolerance: 0.10,
            },
        ])
    }
}

fn run_basket(ctx: &RunCtx) -> Result<Vec<CompareRow>, RunError> {
    let mut setup = BasketSetup::new(ctx.seed);
    if !ctx.file.constants.is_empty() {
        // The [constants] table may override either asset as nested tables.
        #[derive(Deserialize, serde::Serialize, Default)]
        #[serde(deny_unknown_fields, default)]
        struct BasketConstants {
            asset1: Option<OuParams>,
            asset2: Option<OuParams>,
        }
        let c: BasketConstants =
            parse_constants(&ctx.file.constants, "basket").map_err(RunError::Config)?;
        if let Some(a) = c.asset1 {
            setup.asset1 = a;
        }
        if let Some(a) = c.asset2 {
            setup.asset2 = a;
        }
    }
    let g = &ctx.file.grid;
    if let Some(v) = g.n_x {
        setup.n_x = v;
    }
    if let Some(v) = g.n_slices {
        setup.n_slices = v;
    }
    if let Some(v) = g.n_samples {
        setup.n_samples = v;
    }
    setup.estimator = ctx.estimator()?;
    let optimizer = ctx.optimizer(OptimizerConfig::adam(0.005, 4000, ctx.seed))?;
    let widths = ctx.layer_widths(&[3, 10, 10, 10, 1]);

    let problem = basket_problem(&setup);
    let mut model = UfaModel::new_mlp(widths, ctx.seed);
    let report = train(&mut model, &problem, &optimizer)?;
    ctx.save_model(&model, "model.json")?;
    ctx.save_report(&report, "report.json")?;

    let times = linspace(setup.slice_t_min, setup.slice_t_max, setup.n_slices);
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for &t in &times {
        let learned = basket_readout(&model, &setup, t);
        let exact = basket_exact(&setup, t);
        results.push(vec![t, learned, exact]);
        rows.push(CompareRow {
            query: format!("mean@{}", (t * 1e6).round() / 1e6),
            learned,
            oracle: exact,
            tolerance: (0.1 * exact.abs()).max(0.03),
        });
    }
    ctx.write_results("t,e_nn,e_exact", &results)?;
    Ok(rows)
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>, String> {
    let (name, range) = spec
        .split_once('=')
        .ok_or_else(|| format!("sweep spec `{spec}` is not name=start:end:count"))?;
    if name != "omega" {
        return Err(format!("unknown sweep variable `{name}`"));
    }
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("sweep range `{range}` is not start:end:count"));
    }
    let start: f64 = parts[0].parse().map_err(|e| format!("bad sweep start: {e}"))?;
    let end: f64 = parts[1].parse().map_err(|e| format!("bad sweep end: {e}"))?;
    let count: usize = parts[2].parse().map_err(|e| format!("bad sweep count: {e}"))?;
    if count == 0 {
        return Err("sweep count must be positive".into());
    }
    Ok(linspace(start, end, count))
}

fn run_moi(ctx: &RunCtx) -> Result<Vec<CompareRow>, RunError> {
    let params: VesselParams =
        parse_constants(&ctx.file.constants, "moi").map_err(RunError::Config)?;
    let mut setup = MoiSetup::new(params.clone());
    if let Some(v) = ctx.file.grid.n_r {
        setup.n_r = v;
    }
    if let Some(v) = ctx.file.grid.volume_weight {
        setup.volume_weight = v;
    }
    match ctx.file.grid.volume_constraint.as_deref() {
        None | Some("auxiliary_surrogate") => {}
        Some("closed_form_constant") => setup.constraint = VolumeConstraint::ClosedFormConstant,
        Some(other) => {
            return Err(RunError::Config(format!("unknown volume constraint `{other}`")))
        }
    }
    let omegas = match &ctx.args.sweep {
        Some(spec) => parse_sweep(spec).map_err(RunError::Config)?,
        None => linspace(0.0, 8.0, 9),
    };
    let optimizer = ctx.optimizer(OptimizerConfig::adam(0.005, 3000, ctx.seed))?;
    let widths = ctx.layer_widths(&[2, 10, 10, 1]);

    // Independent sweep points; --jobs N trains them concurrently with
    // per-point seeds seed+index, so the artifacts do not depend on N.
    let jobs = ctx.args.jobs.max(1);
    let mut sweep: Vec<(f64, f64, TrainReport)> = Vec::with_capacity(omegas.len());
    if jobs == 1 {
        sweep = crate::problems::moi::moi_sweep(&setup, &omegas, &optimizer, &widths)?;
    } else {
        let mut results: Vec<Option<(f64, f64, TrainReport)>> = vec![None; omegas.len()];
        let chunks: Vec<Vec<usize>> = (0..jobs)
            .map(|j| (0..omegas.len()).filter(|i| i % jobs == j).collect())
            .collect();
        std::thread::scope(|scope| -> Result<(), TrainError> {
            let mut handles = Vec::new();
            for chunk in &chunks {
                let setup = &setup;
                let optimizer = &optimizer;
                let widths = &widths;
                let omegas = &omegas;
                handles.push(scope.spawn(move || {
                    let mut out = Vec::new();
                    for &i in chunk {
                        let mut s = setup.clone();
                        s.params.omega = omegas[i];
                        let problem = moi_problem(&s);
                        let mut config = optimizer.clone();
                        config.seed = optimizer.seed + i as u64;
                        let mut model = UfaModel::new_mlp(widths.clone(), config.seed);
                        let report = train(&mut model, &problem, &config)?;
                        out.push((i, omegas[i], moi_readout(&model, &s.params), report));
                    }
                    Ok::<_, TrainError>(out)
                }));
            }
            for handle in handles {
                for (i, omega, learned, report) in handle.join().unwrap()? {
                    results[i] = Some((omega, learned, report));
                }
            }
            Ok(())
        })?;
        sweep.extend(results.into_iter().map(Option::unwrap));
    }

    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (i, (omega, learned, report)) in sweep.iter().enumerate() {
        ctx.save_report(report, &format!("report_omega{i}.json"))?;
        let exact = moi_exact(
            *omega,
            params.rho,
            params.width,
            params.h0,
            params.radius,
            params.g,
        );
        let rel = if *omega == 0.0 { 0.01 } else { 0.02 };
        table.push(vec![*omega, *learned, exact]);
        rows.push(CompareRow {
            query: format!("I@omega={omega}"),
            learned: *learned,
            oracle: exact,
            tolerance: rel * exact.abs(),
        });
    }
    ctx.write_results("omega,i_nn,i_exact", &table)?;
    Ok(rows)
}

fn run_potential(ctx: &RunCtx) -> Result<Vec<CompareRow>, RunError> {
    let params: AdvectionParams =
        parse_constants(&ctx.file.constants, "potential").map_err(RunError::Config)?;
    let mut setup = PotentialSetup::new(params.clone());
    if let Some(v) = ctx.file.grid.n_x {
        setup.n_x = v;
    }
    if let Some(v) = ctx.file.grid.n_t {
        setup.n_t = v;
    }
    if let Some(v) = ctx.file.grid.data_weight {
        setup.data_weight = v;
    }
    let optimizer = ctx.optimizer(OptimizerConfig::adam(0.005, 4000, ctx.seed))?;
    let widths = ctx.layer_widths(&[2, 10, 10, 1]);

    let problem = potential_problem(&setup).map_err(RunError::Config)?;
    let mut model = UfaModel::new_mlp(widths, ctx.seed);
    let report = train(&mut model, &problem, &optimizer)?;
    ctx.save_model(&model, "model.json")?;
    ctx.save_report(&report, "report.json")?;

    let times = linspace(params.t_min, params.t_max, 10);
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &t in &times {
        let learned = potential_readout(&model, &params, t);
        let oracle = potential_oracle(
            t,
            params.velocity,
            params.diffusion,
            params.lambda,
            params.obs,
            params.mass,
            params.center,
            params.width,
            [params.x_min, params.x_max],
        );
        table.push(vec![t, learned, oracle]);
        rows.push(CompareRow {
            query: format!("V@{}", (t * 1e6).round() / 1e6),
            learned,
            oracle,
            tolerance: 0.05 * oracle.abs(),
        });
    }
    ctx.write_results("t,v_nn,v_oracle", &table)?;
    Ok(rows)
}

fn run_population(ctx: &RunCtx) -> Result<Vec<CompareRow>, RunError> {
    let mut params: PopulationParams =
        parse_constants(&ctx.file.constants, "population").map_err(RunError::Config)?;
    if let Some(v) = ctx.file.grid.n_points {
        params.n_points = v;
    }
    let kind = ctx
        .args
        .model
        .clone()
        .or_else(|| ctx.file.model.kind.clone())
        .unwrap_or_else(|| "dqc".into());
    let (mut model, default_opt, tol) = match kind.as_str() {
        "dqc" => (
            population_dqc(&params, ctx.seed),
            OptimizerConfig::adabelief(0.1, 4000, ctx.seed),
            0.05,
        ),
        "mlp" => (
            population_mlp(ctx.seed),
            OptimizerConfig::adabelief(0.01, 3000, ctx.seed),
            0.02,
        ),
        other => return Err(RunError::Config(format!("unknown model kind `{other}`"))),
    };
    if kind == "dqc" {
        if let Some(n) = ctx.file.model.n_qubits {
            let depth = ctx.file.model.ansatz_depth.unwrap_or(4);
            model = UfaModel::new_dqc(crate::ufa::DqcConfig::new(
                n,
                depth,
                [0.0, params.t_max],
                ctx.seed,
            ));
        }
    } else if let Some(widths) = &ctx.file.model.layer_widths {
        model = UfaModel::new_mlp(widths.clone(), ctx.seed);
    }
    let optimizer = ctx.optimizer(default_opt)?;

    let problem = population_problem(&params)
        .map_err(|e| RunError::Config(format!("building problem: {e}")))?;
    let report = train(&mut model, &problem, &optimizer)?;
    ctx.save_model(&model, "model.json")?;
    ctx.save_report(&report, "report.json")?;

    let times = linspace(0.0, params.t_max, 21);
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &t in &times {
        let learned = b_readout(&model, t);
        let exact = population_exact(t);
        table.push(vec![t, learned, exact]);
        rows.push(CompareRow {
            query: format!("b@{}", (t * 1e6).round() / 1e6),
            learned,
            oracle: exact,
            tolerance: tol,
        });
    }
    // The pin makes the initial condition exact independent of training.
    rows.push(CompareRow {
        query: "b@0-pinned".into(),
        learned: b_readout(&model, 0.0),
        oracle: 1.0,
        tolerance: 1e-12,
    });
    ctx.write_results("t,b_nn,b_exact", &table)?;
    Ok(rows)
}

fn cmd_check(dir: &Path, tol_override: Option<f64>) -> i32 {
    let path = dir.join("comparison.csv");
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: missing artifacts: cannot read {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let mut failures = 0usize;
    let mut total = 0usize;
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            eprintln!("error: malformed comparison row: {line}");
            return EXIT_CONFIG;
        }
        let parse = |s: &str| s.parse::<f64>();
        match (parse(cells[1]), parse(cells[2]), parse(cells[3])) {
            (Ok(learned), Ok(oracle), Ok(tol)) => {
                total += 1;
                let tol = tol_override.unwrap_or(tol);
                let err = (learned - oracle).abs();
                let ok = err <= tol;
                println!(
                    "{} {}: |{} - {}| = {:.3e} vs tol {:.3e}",
                    if ok { "pass" } else { "FAIL" },
                    cells[0],
                    fmt_sig(learned),
                    fmt_sig(oracle),
                    err,
                    tol
                );
                if !ok {
                    failures += 1;
                }
            }
            _ => {
                eprintln!("error: malformed comparison row: {line}");
                return EXIT_CONFIG;
            }
        }
    }
    println!("{}/{} comparisons within tolerance", total - failures, total);
    if failures == 0 {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn cmd_oracle(case: &str) -> i32 {
    let emit = |header: &str, rows: Vec<Vec<f64>>| {
        println!("{header}");
        for row in rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_sig(v)).collect();
            println!("{}", cells.join(","));
        }
        EXIT_OK
    };
    match case {
        "european" => {
            let p = OuParams::default();
            let rows = linspace(p.t_min, p.t_max, 21)
                .into_iter()
                .map(|t| {
                    vec![
                        t,
                        ou_mean(t, p.nu, p.x0, p.t0),
                        ou_variance(t, p.sigma, p.nu, p.t0).sqrt(),
                    ]
                })
                .collect();
            emit("t,mean,std", rows)
        }
        "basket" => {
            let setup = BasketSetup::new(0);
            let rows = linspace(setup.slice_t_min, setup.slice_t_max, 21)
                .into_iter()
                .map(|t| vec![t, basket_exact(&setup, t)])
                .collect();
            emit("t,mean", rows)
        }
        "moi" => {
            let p = VesselParams::default();
            let rows = linspace(0.0, 8.0, 9)
                .into_iter()
                .map(|omega| vec![omega, moi_exact(omega, p.rho, p.width, p.h0, p.radius, p.g)])
                .collect();
            emit("omega,moment_of_inertia", rows)
        }
        "potential" => {
            let p = AdvectionParams::default();
            let rows = linspace(p.t_min, p.t_max, 21)
                .into_iter()
                .map(|t| {
                    vec![
                        t,
                        potential_oracle(
                            t, p.velocity, p.diffusion, p.lambda, p.obs, p.mass, p.center,
                            p.width, [p.x_min, p.x_max],
                        ),
                    ]
                })
                .collect();
            emit("t,potential", rows)
        }
        "population" => {
            let rows = linspace(0.0, 1.0, 21)
                .into_iter()
                .map(|t| vec![t, population_exact(t)])
                .collect();
            emit("t,b", rows)
        }
        other => {
            eprintln!("error: unknown case `{other}`");
            EXIT_CONFIG
        }
    }
}

fn cmd_selftest() -> i32 {
    use crate::autodiff::{finite_difference_check, DerivativeRequest};
    let mut failures = 0;
    let mut report = |name: &str, err: f64, bound: f64| {
        let ok = err < bound;
        println!(
            "{} {name}: {err:.3e} (bound {bound:.0e})",
            if ok { "pass" } else { "FAIL" }
        );
        if !ok {
            failures += 1;
        }
    };

    let mlp = UfaModel::new_mlp(vec![2, 8, 8, 1], 42);
    for (orders, step, bound) in [(vec![1, 0], 1e-4, 1e-6), (vec![2, 1], 1e-3, 1e-3)] {
        let req = DerivativeRequest::new(orders.clone());
        let err = finite_difference_check(&mlp, &[0.3, -0.4], &req, step).unwrap();
        report(&format!("autodiff-fd order {orders:?}"), err, bound);
    }

    let gl = QuadratureRule::GaussLegendre { points: 32 };
    let quad_err = (gl.integrate(0.0, 1.0, |x| (3.0 * x).sin()) - (1.0 - 3f64.cos()) / 3.0).abs();
    report("gauss-legendre", quad_err, 1e-12);

    let dqc_cfg = crate::ufa::DqcConfig::new(4, 4, [0.0, 1.0], 42);
    let dqc = UfaModel::new_dqc(dqc_cfg.clone());
    let dense = oracles::dqc_dense_expectation(&dqc_cfg, dqc.params(), 0.5);
    report("dqc-dense-oracle", (dqc.eval_f64(&[0.5]) - dense).abs(), 1e-10);
    let shift_err = (0..dqc.n_params())
        .map(|i| crate::ufa::dqc_parameter_shift_check(&dqc, 0.37, i).unwrap())
        .fold(0.0f64, f64::max);
    report("dqc-parameter-shift", shift_err, 1e-10);

    // Transform round-trip: surrogate built by quadrature, read back as a
    // two-evaluation difference against direct quadrature.
    let f = |x: f64| (2.0 * x).cos() + 0.5 * x;
    let kernel = |x: f64| 1.0 + x * x;
    let direct = oracles::quadrature_transform(f, kernel, -1.0, 1.5, gl);
    let g_at = |x: f64| oracles::quadrature_transform(f, kernel, -2.0, x, gl);
    report("transform-round-trip", (g_at(1.5) - g_at(-1.0) - direct).abs(), 1e-8);

    if failures == 0 {
        println!("selftest: all checks passed");
        EXIT_OK
    } else {
        println!("selftest: {failures} check(s) failed");
        EXIT_FAIL
    }
}
