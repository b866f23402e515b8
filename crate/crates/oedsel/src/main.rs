//! Command-line driver: experiment runner, design evaluation, gradient
//! self-check, and the operation-count bench.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oedsel::config::{
    parse_config, parse_design, parse_grid, ExperimentConfig, ModelName, ModelSection, SelectorName,
};
use oedsel::error::Error;
use oedsel::experiment::{check_gradients, emit_results, run_bench, run_experiment};
use oedsel::mi::{mi_closed_form, mi_nmc, NmcOptions};
use oedsel::numerics::Design;

const EXIT_NUMERICAL: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "oedsel",
    version,
    about = "Greedy selection of informative observations for Bayesian inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded multi-trial experiment and write CSV rows plus a JSON
    /// summary.
    Run(RunArgs),
    /// Evaluate the mutual information of an explicit design.
    Evaluate(EvaluateArgs),
    /// Compare analytic gradients against finite differences.
    CheckGradients(CheckGradientsArgs),
    /// Measure selector operation counts over an (n, k) grid and fit the
    /// scaling laws.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model to instantiate.
    #[arg(long, value_enum)]
    model: ModelName,
    /// Candidate count (linear-Gaussian, epidemic).
    #[arg(long)]
    n: Option<usize>,
    /// Parameter dimension (linear-Gaussian).
    #[arg(long)]
    d: Option<usize>,
    /// Epidemic population size.
    #[arg(long)]
    population: Option<u64>,
    /// Epidemic observation horizon.
    #[arg(long)]
    t_end: Option<f64>,
    /// Epidemic log-prior location.
    #[arg(long)]
    mu_x: Option<f64>,
    /// Epidemic log-prior scale.
    #[arg(long)]
    sigma_x: Option<f64>,
    /// Spatial grid cells per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Spatial region side length.
    #[arg(long)]
    region: Option<f64>,
}

impl ModelArgs {
    fn apply(&self, section: &mut ModelSection) {
        section.name = self.model;
        if let Some(v) = self.n {
            section.n = v;
        }
        if let Some(v) = self.d {
            section.d = v;
        }
        if let Some(v) = self.population {
            section.population = v;
        }
        if let Some(v) = self.t_end {
            section.t_end = v;
        }
        if let Some(v) = self.mu_x {
            section.mu_x = v;
        }
        if let Some(v) = self.sigma_x {
            section.sigma_x = v;
        }
        if let Some(v) = self.grid {
            section.grid = v;
        }
        if let Some(v) = self.region {
            section.region = v;
        }
    }

    fn section(&self) -> ModelSection {
        let mut section = ModelSection::default();
        self.apply(&mut section);
        section
    }
}

#[derive(Args)]
struct RunArgs {
    /// Config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    /// Comma-separated selector list.
    #[arg(long, value_enum, value_delimiter = ',')]
    selector: Option<Vec<SelectorName>>,
    /// Largest design cardinality.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Desk preset: evaluation NMC (2000, 200), selection NMC (500, 100).
    #[arg(long)]
    desk: bool,
    /// Record measured wall times (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    population: Option<u64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    mu_x: Option<f64>,
    #[arg(long)]
    sigma_x: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    region: Option<f64>,
    /// Joint samples M for score estimation.
    #[arg(long)]
    joint_samples: Option<usize>,
    /// Prior-bank size m.
    #[arg(long)]
    prior_bank: Option<usize>,
    #[arg(long)]
    nmc_inner: Option<usize>,
    #[arg(long)]
    nmc_outer: Option<usize>,
    #[arg(long)]
    eval_inner: Option<usize>,
    #[arg(long)]
    eval_outer: Option<usize>,
    /// Use closed-form matrices for linear-Gaussian selectors.
    #[arg(long)]
    exact_lg: Option<bool>,
    /// Share one inner prior bank across NMC outer samples.
    #[arg(long)]
    recycle_inner: Option<bool>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Semicolon-joined candidate indices, e.g. "3;7;12".
    #[arg(long)]
    design: String,
    #[arg(long, default_value_t = 10_000)]
    nmc_inner: usize,
    #[arg(long, default_value_t = 1000)]
    nmc_outer: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Force the nested estimator even when a closed form exists.
    #[arg(long)]
    force_nmc: bool,
}

#[derive(Args)]
struct CheckGradientsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Corrupt the analytic gradient to demonstrate a failing report.
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid axes, e.g. `--grid n=20,40,80 k=2,4,8`.
    #[arg(long, num_args = 1.., value_name = "AXIS=V1,V2,...")]
    grid: Vec<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let mut cfg = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match parse_config(&text) {
                Ok(cfg) => cfg,
                Err(e) => return fail(&e),
            },
            Err(e) => return fail(&Error::Io(e)),
        },
        None => ExperimentConfig::default(),
    };
    if args.desk {
        cfg.apply_desk();
    }
    if let Some(m) = args.model {
        cfg.model.name = m;
    }
    if let Some(v) = args.n {
        cfg.model.n = v;
    }
    if let Some(v) = args.d {
        cfg.model.d = v;
    }
    if let Some(v) = args.population {
        cfg.model.population = v;
    }
    if let Some(v) = args.t_end {
        cfg.model.t_end = v;
    }
    if let Some(v) = args.mu_x {
        cfg.model.mu_x = v;
    }
    if let Some(v) = args.sigma_x {
        cfg.model.sigma_x = v;
    }
    if let Some(v) = args.grid {
        cfg.model.grid = v;
    }
    if let Some(v) = args.region {
        cfg.model.region = v;
    }
    if let Some(v) = args.selector {
        cfg.selectors.list = v;
    }
    if let Some(v) = args.k {
        cfg.run.k_max = v;
    }
    if let Some(v) = args.trials {
        cfg.run.trials = v;
    }
    if let Some(v) = args.seed {
        cfg.run.seed = v;
    }
    if args.timing {
        cfg.run.timing = true;
    }
    if let Some(v) = args.out {
        cfg.run.out = v.to_string_lossy().into_owned();
    }
    if let Some(v) = args.joint_samples {
        cfg.budgets.joint_samples = v;
    }
    if let Some(v) = args.prior_bank {
        cfg.budgets.prior_bank = v;
    }
    if let Some(v) = args.nmc_inner {
        cfg.budgets.nmc_inner = v;
    }
    if let Some(v) = args.nmc_outer {
        cfg.budgets.nmc_outer = v;
    }
    if let Some(v) = args.eval_inner {
        cfg.budgets.eval_inner = v;
    }
    if let Some(v) = args.eval_outer {
        cfg.budgets.eval_outer = v;
    }
    if let Some(v) = args.exact_lg {
        cfg.run.exact_linear_gaussian = v;
    }
    if let Some(v) = args.recycle_inner {
        cfg.run.recycle_inner = v;
    }

    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let out_path = PathBuf::from(&cfg.run.out);
    if let Err(e) = emit_results(&outcome.rows, &outcome.summary, &out_path) {
        return fail(&e);
    }
    println!(
        "wrote {} rows to {} (summary: {})",
        outcome.rows.len(),
        out_path.display(),
        out_path.with_extension("json").display()
    );
    for stat in &outcome.summary.per_k {
        println!(
            "{:>12}  k={:<3} mean MI {:.6} nats  (stderr {:.6})",
            stat.selector, stat.k, stat.mean_mi, stat.stderr_mi
        );
    }
    if outcome.failed() {
        for f in &outcome.summary.failures {
            eprintln!("failed: {f}");
        }
        return ExitCode::from(EXIT_NUMERICAL);
    }
    ExitCode::SUCCESS
}

fn cmd_evaluate(args: EvaluateArgs) -> ExitCode {
    let section = args.model.section();
    let spec = match section.build() {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let indices = match parse_design(&args.design) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let design = match Design::from_indices(spec.n(), indices) {
        Ok(d) => d,
        Err(e) => return fail(&e),
    };
    let use_closed = !args.force_nmc && matches!(section.name, ModelName::LinearGaussian);
    let est = if use_closed {
        mi_closed_form(&spec, &design)
    } else {
        mi_nmc(
            &spec,
            &design,
            args.nmc_inner,
            args.nmc_outer,
            args.seed,
            NmcOptions::default(),
        )
    };
    match est {
        Ok(est) => {
            let kind = if use_closed { "closed-form" } else { "nmc" };
            println!(
                "design [{}]  MI = {:.6} nats  stderr = {:.6}  ({kind})",
                design, est.value, est.stderr
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn cmd_check_gradients(args: CheckGradientsArgs) -> ExitCode {
    let spec = match args.model.section().build() {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    match check_gradients(&spec, args.points, args.seed, args.inject_fault) {
        Ok(report) => {
            println!(
                "{}: {} points, {} coordinates, max rel err {:.3e} -> {}",
                report.model,
                report.points,
                report.coordinates_checked,
                report.max_rel_err,
                if report.pass { "PASS" } else { "FAIL" }
            );
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e) => fail(&e),
    }
}

fn cmd_bench(args: BenchArgs) -> ExitCode {
    let grid = match parse_grid(&args.grid) {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    match run_bench(&grid, args.seed) {
        Ok(report) => {
            println!("  n    k   lsig_mults  gauss_mults  nmc_mi_evals  expected");
            for cell in &report.cells {
                println!(
                    "{:>4} {:>4} {:>12} {:>12} {:>13} {:>9}",
                    cell.n,
                    cell.k,
                    cell.lsig_mults,
                    cell.gauss_mults,
                    cell.nmc_mi_evals,
                    cell.nmc_mi_evals_expected
                );
            }
            for fit in [&report.lsig_fit, &report.gauss_fit] {
                println!(
                    "fit {}: c = {:.4}, ratios in [{:.4}, {:.4}], within 2x: {}",
                    fit.law, fit.c, fit.min_ratio, fit.max_ratio, fit.within_factor_two
                );
            }
            println!(
                "nmc mi-evaluation counts exact: {}",
                report.nmc_counts_exact
            );
            if report.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::CheckGradients(args) => cmd_check_gradients(args),
        Command::Bench(args) => cmd_bench(args),
    }
}
