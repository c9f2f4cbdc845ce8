use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use dynlsm::eval::{distance_ratio_stats, in_sample_auc, mean_defined};
use dynlsm::experiment::{run_experiment, ExperimentConfig};
use dynlsm::io::{
    fmt_opt, read_estimates, read_design, read_temporal_edgelist, read_truth, write_fit_result, write_mcmc_result,
    write_temporal_edgelist, write_truth, FitOptionsRecord, FitRecord,
};
use dynlsm::mcmc::{run_mcmc, McmcInit, McmcOptions};
use dynlsm::simulate::{find_preset, sample_network};
use dynlsm::vb::{fit, FitError, FitOptions, FitResult, InitStrategy};
use dynlsm::{DynamicNetwork, Hyperparameters, LatentConfiguration};

mod report;

const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "dynlsm", version, about = "Dynamic latent space models for network time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a network time series from a preset or a design file.
    Simulate(SimulateArgs),
    /// Fit a temporal edge list by variational Bayes or MCMC.
    Fit(FitArgs),
    /// Shorthand for `fit --method mcmc`.
    Mcmc(FitArgs),
    /// Score a fit against its data and, optionally, the true positions.
    Eval(EvalArgs),
    /// Write CSV summaries and per-snapshot scatter plots of a fit.
    Report(ReportArgs),
    /// Run a replicated simulation study.
    Experiment(ExperimentArgs),
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "design", required_unless_present = "design")]
    preset: Option<String>,
    /// JSON design file.
    #[arg(long)]
    design: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives network.tsv and truth.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Vb,
    Mcmc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Random,
    Mds,
}

#[derive(clap::Args)]
#[command(allow_negative_numbers = true)]
struct FitArgs {
    /// Temporal edge list.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "vb")]
    method: Method,
    /// Power on the intercept block; 1 is standard VB.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.1)]
    tau2: f64,
    #[arg(long, default_value_t = 0.0)]
    prior_xi: f64,
    #[arg(long, default_value_t = 2.0)]
    prior_psi2: f64,
    /// Starting means; MCMC with `random` starts from a prior draw.
    #[arg(long, value_enum)]
    init: Option<Init>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// MCMC burn-in steps.
    #[arg(long, default_value_t = 10_000)]
    burn_in: usize,
    /// MCMC steps after burn-in.
    #[arg(long, default_value_t = 90_000)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    /// Use the thread pool inside the fit.
    #[arg(long)]
    parallel: bool,
    /// Result file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long)]
    fit: PathBuf,
    /// Truth file; enables ratios.csv.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include n = 800 in mse-vs-n.
    #[arg(long)]
    large: bool,
    #[arg(long)]
    out: PathBuf,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<dynlsm::Error>() {
            Some(dynlsm::Error::Io(_)) => 1,
            Some(_) => EXIT_VALIDATION,
            None if error.downcast_ref::<std::io::Error>().is_some() => 1,
            None => EXIT_VALIDATION,
        };
        Self { code, error }
    }
}

impl From<dynlsm::Error> for Failure {
    fn from(e: dynlsm::Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Mcmc(a) => fit_cmd(FitArgs { method: Method::Mcmc, ..a }),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report_cmd(a),
        Command::Experiment(a) => experiment(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let design = match (&a.preset, &a.design) {
        (Some(name), None) => find_preset(name)?.design,
        (None, Some(path)) => read_design(path)?,
        _ => unreachable!("clap enforces exactly one of --preset and --design"),
    }
    .with_seed(a.seed);
    design.validate()?;
    let (net, truth) = sample_network::<f64>(&design)?;
    ensure_dir(&a.out)?;
    write_temporal_edgelist(&net, a.out.join("network.tsv"))?;
    write_truth(&truth, Some(&design), a.out.join("truth.json"))?;
    println!(
        "simulated n={} T={} with {} edges (density {:.4}) into {}",
        net.n(),
        net.num_times(),
        net.total_edge_count(),
        net.density(),
        a.out.display()
    );
    Ok(())
}

fn print_auc(auc: &[Option<f64>]) {
    for (t, a) in auc.iter().enumerate() {
        println!("  t={} auc={}", t + 1, fmt_opt(*a));
    }
    println!("mean auc: {}", fmt_opt(mean_defined(auc)));
}

fn write_parent(path: &Path) -> anyhow::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => ensure_dir(dir),
        _ => Ok(()),
    }
}

fn fit_cmd(a: FitArgs) -> CmdResult {
    let hyper = Hyperparameters::new(a.d, a.sigma2, a.tau2, a.prior_xi, a.prior_psi2, a.alpha)?;
    let net = read_temporal_edgelist(&a.input)?;
    write_parent(&a.out)?;
    match a.method {
        Method::Vb => fit_vb(&a, &net, &hyper),
        Method::Mcmc => fit_mcmc(&a, &net, &hyper),
    }
}

fn fit_vb(a: &FitArgs, net: &DynamicNetwork, hyper: &Hyperparameters<f64>) -> CmdResult {
    let opts = FitOptions {
        max_iters: a.max_iters,
        rel_tol: a.rel_tol,
        init: match a.init.unwrap_or(Init::Random) {
            Init::Random => InitStrategy::Random { scale: 1.0 },
            Init::Mds => InitStrategy::Mds,
        },
        seed: a.seed,
        parallel: a.parallel,
        ..FitOptions::default()
    };
    opts.validate()?;
    let save = |result: FitResult<f64>| -> anyhow::Result<FitResult<f64>> {
        let record = FitRecord { hyper: hyper.clone(), options: FitOptionsRecord::from(&opts), result };
        write_fit_result(&record, &a.out)?;
        Ok(record.result)
    };
    match fit(net, hyper, &opts) {
        Ok(result) => {
            let result = save(result)?;
            println!(
                "iterations: {}{}",
                result.iterations,
                if result.converged { "" } else { " (not converged)" }
            );
            println!("final objective: {}", result.final_objective());
            println!("xi_tilde: {} psi2_tilde: {}", result.state.xi_tilde, result.state.psi2_tilde);
            print_auc(&result.auc_per_time);
            Ok(())
        }
        Err(FitError::Diverged { reason, partial }) => {
            save(*partial)?;
            Err(Failure {
                code: EXIT_DIVERGED,
                error: anyhow::anyhow!("fit diverged: {reason}; partial result saved to {}", a.out.display()),
            })
        }
        Err(FitError::Invalid(e)) => Err(e.into()),
    }
}

fn fit_mcmc(a: &FitArgs, net: &DynamicNetwork, hyper: &Hyperparameters<f64>) -> CmdResult {
    let opts = McmcOptions {
        burn_in: a.burn_in,
        samples: a.samples,
        thin: a.thin,
        seed: a.seed,
        init: match a.init.unwrap_or(Init::Mds) {
            Init::Random => McmcInit::Prior,
            Init::Mds => McmcInit::Mds,
        },
        parallel: a.parallel,
        ..McmcOptions::default()
    };
    opts.validate()?;
    let summary = run_mcmc(net, hyper, &opts)?;
    write_mcmc_result(&summary, hyper, &opts, &a.out)?;
    println!("retained draws: {}", summary.beta_draws.len());
    println!("beta posterior mean: {} (mc stderr {})", summary.beta_mean, summary.beta_mc_stderr);
    let acc = &summary.acceptance;
    println!("cold latent acceptance: {:.3}", acc.latent_rate.first().copied().unwrap_or(f64::NAN));
    print_auc(&summary.auc_per_time);
    Ok(())
}

fn check_shapes(positions: &LatentConfiguration<f64>, net: &DynamicNetwork, what: &str) -> anyhow::Result<()> {
    if positions.n() != net.n() || positions.num_times() != net.num_times() {
        return Err(dynlsm::Error::Dimension(format!(
            "{what} has n={} T={} but the network has n={} T={}",
            positions.n(),
            positions.num_times(),
            net.n(),
            net.num_times()
        ))
        .into());
    }
    Ok(())
}

fn eval(a: EvalArgs) -> CmdResult {
    let est = read_estimates(&a.fit)?;
    let net = read_temporal_edgelist(&a.input)?;
    check_shapes(&est.positions, &net, "fit")?;
    println!("method: {}", est.method);
    print_auc(&in_sample_auc(&net, &est.positions)?);
    if let Some(path) = &a.truth {
        let (truth, _) = read_truth(path)?;
        check_shapes(&truth, &net, "truth")?;
        if truth.d() != est.positions.d() {
            return Err(dynlsm::Error::Dimension(format!(
                "truth has d={} but the fit has d={}",
                truth.d(),
                est.positions.d()
            ))
            .into());
        }
        let stats = distance_ratio_stats(&est.positions, &truth)?;
        let s = stats.summary;
        println!(
            "distance ratio: min {:.4} q1 {:.4} median {:.4} q3 {:.4} max {:.4} mean {:.4} ({} pairs)",
            s.min, s.q1, s.median, s.q3, s.max, stats.mean, stats.count
        );
        println!("beta estimate: {} true: {} error: {}", est.positions.beta, truth.beta, est.positions.beta - truth.beta);
    }
    Ok(())
}

fn report_cmd(a: ReportArgs) -> CmdResult {
    let est = read_estimates(&a.fit)?;
    let truth = match &a.truth {
        Some(path) => {
            let (truth, _) = read_truth(path)?;
            if truth.n() != est.positions.n()
                || truth.num_times() != est.positions.num_times()
                || truth.d() != est.positions.d()
            {
                return Err(dynlsm::Error::Dimension("truth and fit disagree in shape".into()).into());
            }
            Some(truth)
        }
        None => None,
    };
    ensure_dir(&a.out)?;
    let written = report::write_report(&est.positions, truth.as_ref(), &a.out)?;
    for name in written {
        println!("wrote {}", a.out.join(name).display());
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> CmdResult {
    let mut cfg = ExperimentConfig::new(&a.name, a.replicates, a.seed);
    cfg.large = a.large;
    let tables = run_experiment(&cfg)?;
    ensure_dir(&a.out)?;
    for (name, table) in tables {
        let path = a.out.join(&name);
        table.write(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
