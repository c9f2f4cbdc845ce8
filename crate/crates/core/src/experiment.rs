//! Replicated simulation studies.
//!
//! Each replicate draws a fresh network from a preset design with a seed
//! derived from the base seed, fits it, and records its metrics. Replicates
//! run in parallel; every fit inside runs serially, so results do not depend
//! on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{beta_mse, distance_ratio_stats, mean_defined};
use crate::io::{fmt_f64, fmt_opt, CsvTable};
use crate::mcmc::{run_mcmc, McmcInit, McmcOptions};
use crate::model::{DynamicNetwork, Hyperparameters, LatentConfiguration};
use crate::simulate::{find_preset, replicate_seed, sample_network, InitChoice, Preset};
use crate::vb::{fit, FitError, FitOptions, FitResult, InitStrategy};

pub const EXPERIMENTS: [&str; 5] = ["vb-vs-mcmc-n50", "auc-n100", "alpha-sensitivity", "mse-vs-n", "auc-vs-T"];

pub const ALPHAS: [f64; 4] = [0.2, 0.5, 0.9, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub replicates: usize,
    pub seed: u64,
    /// Adds the n = 800 design to `mse-vs-n`.
    pub large: bool,
    /// Sampler settings for `vb-vs-mcmc-n50`.
    pub mcmc: McmcOptions<f64>,
}

impl ExperimentConfig {
    pub fn new(name: &str, replicates: usize, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            replicates,
            seed,
            large: false,
            mcmc: McmcOptions {
                burn_in: 5_000,
                samples: 20_000,
                thin: 10,
                init: McmcInit::Mds,
                ..McmcOptions::default()
            },
        }
    }
}

/// One simulated dataset with its ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub seed: u64,
    pub net: DynamicNetwork,
    pub truth: LatentConfiguration<f64>,
}

pub fn simulate_dataset(preset: &Preset, seed: u64) -> Result<Dataset> {
    let (net, truth) = sample_network::<f64>(&preset.design.with_seed(seed))?;
    Ok(Dataset { seed, net, truth })
}

/// Fit options used for every preset fit: library defaults with the preset's
/// initialization.
pub fn preset_fit_options(preset: &Preset, seed: u64) -> FitOptions<f64> {
    FitOptions {
        init: match preset.fit_init {
            InitChoice::Random { scale } => InitStrategy::Random { scale },
            InitChoice::Mds => InitStrategy::Mds,
        },
        seed,
        ..FitOptions::default()
    }
}

/// Metrics of one variational fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub auc_per_time: Vec<Option<f64>>,
    pub mean_auc: Option<f64>,
    pub beta_hat: f64,
    pub ratio_median: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
}

fn summarize(result: &FitResult<f64>, data: &Dataset, diverged: bool) -> FitSummary {
    let ratio_median = distance_ratio_stats(result.state.means(), &data.truth)
        .ok()
        .map(|s| s.summary.median);
    FitSummary {
        mean_auc: result.mean_auc(),
        auc_per_time: result.auc_per_time.clone(),
        beta_hat: result.state.xi_tilde,
        ratio_median,
        iterations: result.iterations,
        converged: result.converged,
        diverged,
    }
}

/// Fits `data` with the preset's hyperparameters, overriding `alpha`.
/// A diverged fit is summarized from its last finite state.
pub fn fit_dataset(preset: &Preset, data: &Dataset, alpha: f64) -> Result<FitSummary> {
    let hyper = Hyperparameters { alpha, ..preset.fit_hyper.clone() };
    match fit(&data.net, &hyper, &preset_fit_options(preset, data.seed)) {
        Ok(r) => Ok(summarize(&r, data, false)),
        Err(FitError::Diverged { reason, partial }) => {
            log::warn!("fit of replicate {} diverged: {reason}", data.seed);
            Ok(summarize(&partial, data, true))
        }
        Err(FitError::Invalid(e)) => Err(e),
    }
}

/// Mean and standard error of the mean; the error is `None` below two values.
pub fn mean_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let m = values.len();
    if m == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (Some(mean), Some((var / m as f64).sqrt()))
}

fn datasets(preset: &Preset, cfg: &ExperimentConfig, salt: u64) -> Result<Vec<Dataset>> {
    (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| simulate_dataset(preset, replicate_seed(cfg.seed ^ salt, r)))
        .collect()
}

fn fit_all(preset: &Preset, data: &[Dataset], alpha: f64) -> Result<Vec<FitSummary>> {
    data.par_iter().map(|d| fit_dataset(preset, d, alpha)).collect()
}

fn per_time_columns(num_times: usize) -> Vec<String> {
    (1..=num_times).flat_map(|t| [format!("auc_t{t}"), format!("se_t{t}")]).collect()
}

fn per_time_cells(fits: &[FitSummary], num_times: usize) -> Vec<String> {
    (0..num_times)
        .flat_map(|t| {
            let v: Vec<f64> = fits.iter().filter_map(|f| f.auc_per_time[t]).collect();
            let (m, s) = mean_se(&v);
            [fmt_opt(m), fmt_opt(s)]
        })
        .collect()
}

fn mean_aucs(fits: &[FitSummary]) -> Vec<f64> {
    fits.iter().filter_map(|f| f.mean_auc).collect()
}

fn vb_vs_mcmc(cfg: &ExperimentConfig) -> Result<Vec<(String, CsvTable)>> {
    let mut table = CsvTable::new(["design", "vb_auc", "vb_se", "mcmc_auc", "mcmc_se"]);
    for (k, density) in ["dense", "moderate", "sparse"].iter().enumerate() {
        for (s, size) in ["small", "large"].iter().enumerate() {
            let preset = find_preset(&format!("sim50-{density}-{size}"))?;
            let data = datasets(&preset, cfg, (k * 2 + s) as u64)?;
            let vb = fit_all(&preset, &data, 1.0)?;
            let mcmc: Vec<Option<f64>> = data
                .par_iter()
                .map(|d| {
                    let opts = McmcOptions { seed: d.seed, ..cfg.mcmc.clone() };
                    run_mcmc(&d.net, &preset.fit_hyper, &opts).map(|s| mean_defined(&s.auc_per_time))
                })
                .collect::<Result<_>>()?;
            let (vm, vs) = mean_se(&mean_aucs(&vb));
            let (mm, ms) = mean_se(&mcmc.into_iter().flatten().collect::<Vec<_>>());
            table.push_row(vec![preset.name.clone(), fmt_opt(vm), fmt_opt(vs), fmt_opt(mm), fmt_opt(ms)])?;
        }
    }
    Ok(vec![("vb_vs_mcmc_n50.csv".into(), table)])
}

fn auc_n100(cfg: &ExperimentConfig) -> Result<Vec<(String, CsvTable)>> {
    let mut header = vec!["design".to_string()];
    header.extend(per_time_columns(10));
    header.extend(["mean_auc".to_string(), "mean_se".to_string()]);
    let mut table = CsvTable::new(header);
    for (k, density) in ["dense", "moderate", "sparse"].iter().enumerate() {
        for (s, size) in ["small", "large"].iter().enumerate() {
            let preset = find_preset(&format!("sim100-{density}-{size}"))?;
            let data = datasets(&preset, cfg, (k * 2 + s) as u64)?;
            let fits = fit_all(&preset, &data, 1.0)?;
            let mut row = vec![preset.name.clone()];
            row.extend(per_time_cells(&fits, 10));
            let (m, se) = mean_se(&mean_aucs(&fits));
            row.extend([fmt_opt(m), fmt_opt(se)]);
            table.push_row(row)?;
        }
    }
    Ok(vec![("auc_n100.csv".into(), table)])
}

fn alpha_sensitivity(cfg: &ExperimentConfig) -> Result<Vec<(String, CsvTable)>> {
    let preset = find_preset("alpha-study")?;
    let num_times = preset.design.num_times;
    let data = datasets(&preset, cfg, 0)?;
    let mut header = vec!["alpha".to_string()];
    header.extend(per_time_columns(num_times));
    let mut table = CsvTable::new(header);
    for alpha in ALPHAS {
        let fits = fit_all(&preset, &data, alpha)?;
        let mut row = vec![fmt_f64(alpha)];
        row.extend(per_time_cells(&fits, num_times));
        table.push_row(row)?;
    }
    Ok(vec![("alpha_sensitivity.csv".into(), table)])
}

fn mse_vs_n(cfg: &ExperimentConfig) -> Result<Vec<(String, CsvTable)>> {
    let mut sizes = vec![100, 200, 400];
    if cfg.large {
        sizes.push(800);
    }
    let mut table = CsvTable::new(["n", "beta_mse", "mse_se", "mean_auc", "auc_se"]);
    for n in sizes {
        let preset = find_preset(&format!("asym-n-{n}"))?;
        let data = datasets(&preset, cfg, n as u64)?;
        let fits = fit_all(&preset, &data, 1.0)?;
        let betas: Vec<f64> = fits.iter().map(|f| f.beta_hat).collect();
        let mse = beta_mse(&betas, preset.design.beta)?;
        let sq: Vec<f64> = betas.iter().map(|b| (b - preset.design.beta).powi(2)).collect();
        let (_, mse_se) = mean_se(&sq);
        let (m, se) = mean_se(&mean_aucs(&fits));
        table.push_row(vec![n.to_string(), fmt_f64(mse), fmt_opt(mse_se), fmt_opt(m), fmt_opt(se)])?;
    }
    Ok(vec![("mse_vs_n.csv".into(), table)])
}

fn auc_vs_t(cfg: &ExperimentConfig) -> Result<Vec<(String, CsvTable)>> {
    let mut table = CsvTable::new(["T", "mean_auc", "se"]);
    for num_times in [10, 20, 40] {
        let preset = find_preset(&format!("asym-T-{num_times}"))?;
        let data = datasets(&preset, cfg, num_times as u64)?;
        let fits = fit_all(&preset, &data, 1.0)?;
        let (m, se) = mean_se(&mean_aucs(&fits));
        table.push_row(vec![num_times.to_string(), fmt_opt(m), fmt_opt(se)])?;
    }
    Ok(vec![("auc_vs_T.csv".into(), table)])
}

/// Runs a named experiment and returns its tables keyed by file name.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<(String, CsvTable)>> {
    if cfg.replicates == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    match cfg.name.as_str() {
        "vb-vs-mcmc-n50" => vb_vs_mcmc(cfg),
        "auc-n100" => auc_n100(cfg),
        "alpha-sensitivity" => alpha_sensitivity(cfg),
        "mse-vs-n" => mse_vs_n(cfg),
        "auc-vs-T" => auc_vs_t(cfg),
        other => Err(Error::UnknownName {
            kind: "experiment",
            name: other.to_string(),
            available: EXPERIMENTS.join(", "),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_small_samples() {
        assert_eq!(mean_se(&[]), (None, None));
        assert_eq!(mean_se(&[2.0]), (Some(2.0), None));
        let (m, s) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, Some(2.0));
        assert!((s.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_experiment() {
        let err = run_experiment(&ExperimentConfig::new("nope", 1, 0)).unwrap_err();
        assert!(err.to_string().contains("auc-vs-T"));
    }
}
