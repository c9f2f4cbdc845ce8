//! File formats: temporal edge lists, JSON results and CSV tables.
//!
//! Edge lists are UTF-8 text. Lines starting with `#` are comments. The first
//! other line is the header `n=<int> T=<int> directed=<true|false>`; every
//! following line is `t src dst` with `t` in `1..=T` and 0-based nodes.
//! Undirected networks list each pair once.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::mcmc::{AcceptanceReport, McmcInit, McmcOptions, McmcSummary};
use crate::model::{DynamicNetwork, Hyperparameters, LatentConfiguration};
use crate::simulate::SimDesign;
use crate::vb::{FitOptions, FitResult, InitStrategy, VariationalState};

pub const FORMAT_VERSION: u64 = 1;

fn parse_error(source_name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_header(text: &str, source_name: &str, line: usize) -> Result<(usize, usize, bool)> {
    let mut n = None;
    let mut num_times = None;
    let mut directed = None;
    for token in text.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| parse_error(source_name, line, format!("header token `{token}` is not key=value")))?;
        let bad = || parse_error(source_name, line, format!("bad value in `{token}`"));
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
            "T" => num_times = Some(value.parse::<usize>().map_err(|_| bad())?),
            "directed" => directed = Some(value.parse::<bool>().map_err(|_| bad())?),
            _ => return Err(parse_error(source_name, line, format!("unknown header key `{key}`"))),
        }
    }
    match (n, num_times, directed) {
        (Some(n), Some(t), Some(d)) if n > 0 && t > 0 => Ok((n, t, d)),
        (Some(_), Some(_), Some(_)) => Err(parse_error(source_name, line, "n and T must be positive")),
        _ => Err(parse_error(
            source_name,
            line,
            "header must be `n=<int> T=<int> directed=<true|false>`",
        )),
    }
}

/// Parses edge-list text. `source_name` only labels error messages.
pub fn parse_temporal_edgelist(text: &str, source_name: &str) -> Result<DynamicNetwork> {
    let mut net: Option<DynamicNetwork> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let Some(net) = net.as_mut() else {
            let (n, t, d) = parse_header(content, source_name, line)?;
            net = Some(DynamicNetwork::empty(n, t, d));
            continue;
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_error(source_name, line, format!("expected `t src dst`, got `{content}`")));
        }
        let num = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_error(source_name, line, format!("{what} `{s}` is not a nonnegative integer")))
        };
        let t = num(fields[0], "snapshot")?;
        let src = num(fields[1], "source")?;
        let dst = num(fields[2], "target")?;
        if t == 0 || t > net.num_times() {
            return Err(parse_error(
                source_name,
                line,
                format!("snapshot {t} outside [1, {}]", net.num_times()),
            ));
        }
        net.insert_edge(t - 1, src, dst)
            .map_err(|e| parse_error(source_name, line, e.to_string()))?;
    }
    let mut net = net.ok_or_else(|| parse_error(source_name, 0, "missing header line"))?;
    net.finish();
    Ok(net)
}

pub fn read_temporal_edgelist(path: impl AsRef<Path>) -> Result<DynamicNetwork> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_temporal_edgelist(&text, &path.display().to_string())
}

/// Canonical text: header then edges sorted by snapshot, source, target.
pub fn format_temporal_edgelist(net: &DynamicNetwork) -> String {
    let mut out = format!("n={} T={} directed={}\n", net.n(), net.num_times(), net.directed());
    for t in 0..net.num_times() {
        for (src, dst) in net.listed_edges(t) {
            let _ = writeln!(out, "{} {src} {dst}", t + 1);
        }
    }
    out
}

pub fn write_temporal_edgelist(net: &DynamicNetwork, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_temporal_edgelist(net))?;
    Ok(())
}

fn check_version(found: u64) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::Version {
            found,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u64,
    #[serde(default)]
    method: Option<String>,
}

fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Serializable form of [`FitOptions`]. An explicit initial state is
/// recorded only by its kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptionsRecord {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub damping: f64,
    pub init: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_scale: Option<f64>,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub extrapolate: bool,
    pub parallel: bool,
}

fn default_true() -> bool {
    true
}

impl From<&FitOptions<f64>> for FitOptionsRecord {
    fn from(o: &FitOptions<f64>) -> Self {
        let (init, init_scale) = match &o.init {
            InitStrategy::Random { scale } => ("random", Some(*scale)),
            InitStrategy::Mds => ("mds", None),
            InitStrategy::Explicit(_) => ("explicit", None),
        };
        Self {
            max_iters: o.max_iters,
            rel_tol: o.rel_tol,
            damping: o.damping,
            init: init.into(),
            init_scale,
            seed: o.seed,
            extrapolate: o.extrapolate,
            parallel: o.parallel,
        }
    }
}

impl FitOptionsRecord {
    /// Rebuilds options; `explicit` cannot be restored and is an error.
    pub fn to_options(&self) -> Result<FitOptions<f64>> {
        let init = match (self.init.as_str(), self.init_scale) {
            ("random", scale) => InitStrategy::Random { scale: scale.unwrap_or(1.0) },
            ("mds", _) => InitStrategy::Mds,
            (other, _) => {
                return Err(Error::InvalidParameter(format!("init `{other}` cannot be rebuilt from a record")))
            }
        };
        let opts = FitOptions {
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            damping: self.damping,
            init,
            seed: self.seed,
            extrapolate: self.extrapolate,
            parallel: self.parallel,
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FitFile {
    version: u64,
    method: String,
    hyper: Hyperparameters<f64>,
    options: FitOptionsRecord,
    xi_tilde: f64,
    psi2_tilde: f64,
    sigma: Vec<Vec<f64>>,
    mu: Vec<Vec<Vec<f64>>>,
    objective_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    auc_per_time: Vec<Option<f64>>,
}

/// A variational fit with the settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub hyper: Hyperparameters<f64>,
    pub options: FitOptionsRecord,
    pub result: FitResult<f64>,
}

pub fn format_fit_result(record: &FitRecord) -> Result<String> {
    let r = &record.result;
    let file = FitFile {
        version: FORMAT_VERSION,
        method: "vb".into(),
        hyper: record.hyper.clone(),
        options: record.options.clone(),
        xi_tilde: r.state.xi_tilde,
        psi2_tilde: r.state.psi2_tilde,
        sigma: r.state.sigma.rows(),
        mu: r.state.means().to_nested(),
        objective_trace: r.objective_trace.clone(),
        iterations: r.iterations,
        converged: r.converged,
        auc_per_time: r.auc_per_time.clone(),
    };
    to_json(&file)
}

pub fn parse_fit_result(text: &str) -> Result<FitRecord> {
    let probe: VersionProbe = serde_json::from_str(text)?;
    check_version(probe.version)?;
    if probe.method.as_deref() != Some("vb") {
        return Err(Error::InvalidParameter(format!(
            "expected a variational fit, found method {:?}",
            probe.method
        )));
    }
    let f: FitFile = serde_json::from_str(text)?;
    let mu = LatentConfiguration::from_nested(&f.mu, f.xi_tilde)?;
    let state = VariationalState::new(mu, SquareMatrix::from_rows(&f.sigma)?, f.xi_tilde, f.psi2_tilde)?;
    if f.objective_trace.len() != f.iterations + 1 {
        return Err(Error::Dimension(format!(
            "objective_trace has {} entries for {} iterations",
            f.objective_trace.len(),
            f.iterations
        )));
    }
    Ok(FitRecord {
        hyper: f.hyper,
        options: f.options,
        result: FitResult {
            state,
            objective_trace: f.objective_trace,
            iterations: f.iterations,
            converged: f.converged,
            auc_per_time: f.auc_per_time,
        },
    })
}

pub fn write_fit_result(record: &FitRecord, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_fit_result(record)?)?;
    Ok(())
}

pub fn read_fit_result(path: impl AsRef<Path>) -> Result<FitRecord> {
    parse_fit_result(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcOptionsRecord {
    pub temperatures: Vec<f64>,
    pub a0: f64,
    pub proposal_sd_latent: f64,
    pub proposal_sd_beta: f64,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub seed: u64,
    pub init: String,
}

impl From<&McmcOptions<f64>> for McmcOptionsRecord {
    fn from(o: &McmcOptions<f64>) -> Self {
        Self {
            temperatures: o.temperatures.clone(),
            a0: o.a0,
            proposal_sd_latent: o.proposal_sd_latent,
            proposal_sd_beta: o.proposal_sd_beta,
            burn_in: o.burn_in,
            samples: o.samples,
            thin: o.thin,
            seed: o.seed,
            init: match o.init {
                McmcInit::Prior => "prior",
                McmcInit::Mds => "mds",
                McmcInit::Explicit(_) => "explicit",
            }
            .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct McmcFile {
    version: u64,
    method: String,
    hyper: Hyperparameters<f64>,
    options: McmcOptionsRecord,
    beta_mean: f64,
    beta_mc_stderr: f64,
    mu: Vec<Vec<Vec<f64>>>,
    acceptance: AcceptanceReport,
    degenerate_alignments: usize,
    auc_per_time: Vec<Option<f64>>,
}

pub fn format_mcmc_result(
    summary: &McmcSummary,
    hyper: &Hyperparameters<f64>,
    options: &McmcOptions<f64>,
) -> Result<String> {
    to_json(&McmcFile {
        version: FORMAT_VERSION,
        method: "mcmc".into(),
        hyper: hyper.clone(),
        options: options.into(),
        beta_mean: summary.beta_mean,
        // NaN is not representable in JSON
        beta_mc_stderr: if summary.beta_mc_stderr.is_finite() { summary.beta_mc_stderr } else { -1.0 },
        mu: summary.posterior_mean.to_nested(),
        acceptance: summary.acceptance.clone(),
        degenerate_alignments: summary.degenerate_alignments,
        auc_per_time: summary.auc_per_time.clone(),
    })
}

pub fn write_mcmc_result(
    summary: &McmcSummary,
    hyper: &Hyperparameters<f64>,
    options: &McmcOptions<f64>,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, format_mcmc_result(summary, hyper, options)?)?;
    Ok(())
}

/// Point estimates from either kind of result file.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub method: String,
    pub hyper: Hyperparameters<f64>,
    /// Posterior means of the positions, with `beta` the intercept estimate.
    pub positions: LatentConfiguration<f64>,
}

pub fn read_estimates(path: impl AsRef<Path>) -> Result<Estimates> {
    let text = fs::read_to_string(path)?;
    let probe: VersionProbe = serde_json::from_str(&text)?;
    check_version(probe.version)?;
    match probe.method.as_deref() {
        Some("vb") => {
            let r = parse_fit_result(&text)?;
            Ok(Estimates {
                method: "vb".into(),
                positions: r.result.state.plug_in(),
                hyper: r.hyper,
            })
        }
        Some("mcmc") => {
            let f: McmcFile = serde_json::from_str(&text)?;
            Ok(Estimates {
                method: "mcmc".into(),
                positions: LatentConfiguration::from_nested(&f.mu, f.beta_mean)?,
                hyper: f.hyper,
            })
        }
        other => Err(Error::InvalidParameter(format!("unknown result method {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TruthFile {
    version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    design: Option<SimDesign>,
    beta: f64,
    /// Positions as `[node][snapshot][coordinate]`.
    positions: Vec<Vec<Vec<f64>>>,
}

pub fn format_truth(truth: &LatentConfiguration<f64>, design: Option<&SimDesign>) -> Result<String> {
    to_json(&TruthFile {
        version: FORMAT_VERSION,
        design: design.cloned(),
        beta: truth.beta,
        positions: truth.to_nested(),
    })
}

pub fn write_truth(truth: &LatentConfiguration<f64>, design: Option<&SimDesign>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_truth(truth, design)?)?;
    Ok(())
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<(LatentConfiguration<f64>, Option<SimDesign>)> {
    let f: TruthFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    check_version(f.version)?;
    Ok((LatentConfiguration::from_nested(&f.positions, f.beta)?, f.design))
}

pub fn read_design(path: impl AsRef<Path>) -> Result<SimDesign> {
    let design: SimDesign = serde_json::from_str(&fs::read_to_string(path)?)?;
    design.validate()?;
    Ok(design)
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Dimension(format!(
                "row has {} fields but the header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Formats a float so that it parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Formats an optional value, leaving undefined entries empty.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Inputs, settings and output location of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<SimDesign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub hyper: Hyperparameters<f64>,
    pub fit: FitOptionsRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcOptionsRecord>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.design, &self.input) {
            (Some(d), None) => d.validate()?,
            (None, Some(_)) => {}
            _ => {
                return Err(Error::InvalidParameter(
                    "a run config needs exactly one of `design` and `input`".into(),
                ))
            }
        }
        self.hyper.validate()?;
        self.fit.to_options()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, to_json(self)?)?;
        Ok(())
    }
}
