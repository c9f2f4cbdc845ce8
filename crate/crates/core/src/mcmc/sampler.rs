use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    isotropic_gaussian_log_density, log_joint, log_prior_beta, DynamicNetwork, Hyperparameters,
    LatentConfiguration,
};
use crate::scalar::{log1p_exp, sq_dist, Scalar};
use crate::vb::init_mds;

use super::procrustes::procrustes_align;

/// Starting point of every replica.
#[derive(Debug, Clone, PartialEq)]
pub enum McmcInit<T> {
    /// One draw from the prior, seeded by the run seed.
    Prior,
    /// MDS positions with `beta = xi`.
    Mds,
    Explicit(Box<LatentConfiguration<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcOptions<T> {
    /// Strictly increasing, starting at 1.
    pub temperatures: Vec<T>,
    /// Probability of a within-temperature sweep rather than a swap proposal.
    pub a0: T,
    pub proposal_sd_latent: T,
    pub proposal_sd_beta: T,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub seed: u64,
    pub init: McmcInit<T>,
    /// Sweep the replicas on the rayon pool. Each replica owns its random
    /// stream, so draws do not depend on this flag.
    pub parallel: bool,
}

impl<T: Scalar> Default for McmcOptions<T> {
    fn default() -> Self {
        Self {
            temperatures: vec![T::one(), T::of(10.0), T::of(20.0)],
            a0: T::of(0.9),
            proposal_sd_latent: T::of(0.1),
            proposal_sd_beta: T::of(0.05),
            burn_in: 10_000,
            samples: 90_000,
            thin: 10,
            seed: 0,
            init: McmcInit::Mds,
            parallel: false,
        }
    }
}

impl<T: Scalar> McmcOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let temps = &self.temperatures;
        if temps.is_empty() || temps[0] != T::one() {
            return Err(Error::InvalidParameter("the first temperature must be 1".into()));
        }
        if temps.windows(2).any(|w| !(w[1] > w[0])) || temps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("temperatures must be finite and strictly increasing".into()));
        }
        if !(self.a0 > T::zero() && self.a0 < T::one()) {
            return Err(Error::InvalidParameter("a0 must lie in (0, 1)".into()));
        }
        for (name, sd) in [("latent", self.proposal_sd_latent), ("beta", self.proposal_sd_beta)] {
            if !(sd >= T::zero()) || !sd.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} proposal sd must be finite and >= 0")));
            }
        }
        if self.samples == 0 || self.thin == 0 || self.thin > self.samples {
            return Err(Error::InvalidParameter("need samples >= thin >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AcceptanceCounters {
    pub latent_attempts: u64,
    pub latent_accepts: u64,
    pub beta_attempts: u64,
    pub beta_accepts: u64,
}

/// One tempered chain. Counters belong to the temperature, not to the state,
/// so they stay in place when states are swapped.
#[derive(Debug, Clone)]
pub struct Replica<T> {
    pub temperature: T,
    pub latent: LatentConfiguration<T>,
    /// Untempered `log_joint` of `latent`.
    pub log_joint: T,
    pub counters: AcceptanceCounters,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct ChainState<T> {
    pub replicas: Vec<Replica<T>>,
    /// Attempts and accepts for swapping temperatures `k` and `k + 1`.
    pub swap_attempts: Vec<u64>,
    pub swap_accepts: Vec<u64>,
    pub iteration: u64,
    rng: ChaCha8Rng,
}

impl<T: Scalar> ChainState<T> {
    /// Every replica starts from `init`. Replica `k` draws from stream `k + 1`
    /// of the seeded generator; stream 0 drives the step and swap choices.
    pub fn new(
        net: &DynamicNetwork,
        hyper: &Hyperparameters<T>,
        init: LatentConfiguration<T>,
        temperatures: &[T],
        seed: u64,
    ) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::InvalidParameter("need at least one temperature".into()));
        }
        init.check_against(net)?;
        init.check_finite()?;
        let lj = log_joint(net, &init, hyper)?;
        if !lj.is_finite() {
            return Err(Error::NonFinite("log joint of the initial state".into()));
        }
        let replicas = temperatures
            .iter()
            .enumerate()
            .map(|(k, &temperature)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64 + 1);
                Replica {
                    temperature,
                    latent: init.clone(),
                    log_joint: lj,
                    counters: AcceptanceCounters::default(),
                    rng,
                }
            })
            .collect();
        let pairs = temperatures.len() - 1;
        Ok(Self {
            replicas,
            swap_attempts: vec![0; pairs],
            swap_accepts: vec![0; pairs],
            iteration: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn cold(&self) -> &LatentConfiguration<T> {
        &self.replicas[0].latent
    }
}

/// Metropolis decision for a tempered target: accept iff
/// `log u < log_ratio / temperature`.
pub fn metropolis_accept<T: Scalar>(log_ratio: T, temperature: T, u: T) -> bool {
    let scaled = log_ratio / temperature;
    scaled >= T::zero() || u.ln() < scaled
}

fn conditional_at<T: Scalar>(
    net: &DynamicNetwork,
    latent: &LatentConfiguration<T>,
    hyper: &Hyperparameters<T>,
    x: &[T],
    i: usize,
    t: usize,
) -> T {
    let mut total = crate::model::node_log_likelihood(net, latent, x, i, t);
    total = total
        + if t == 0 {
            isotropic_gaussian_log_density(x, None, hyper.sigma2)
        } else {
            isotropic_gaussian_log_density(x, Some(latent.position(i, t - 1)), hyper.tau2)
        };
    if t + 1 < latent.num_times() {
        total = total + isotropic_gaussian_log_density(latent.position(i, t + 1), Some(x), hyper.tau2);
    }
    total
}

/// Terms of `log_joint` that involve `X_it`: both orientations of every pair
/// at snapshot `t`, the initial or incoming transition density and, unless
/// `t` is the last snapshot, the outgoing transition density.
pub fn full_conditional_logdensity_latent<T: Scalar>(
    net: &DynamicNetwork,
    latent: &LatentConfiguration<T>,
    hyper: &Hyperparameters<T>,
    i: usize,
    t: usize,
) -> Result<T> {
    hyper.validate()?;
    latent.check_against(net)?;
    if latent.d() != hyper.d {
        return Err(Error::Dimension(format!("latent dimension {} but d={}", latent.d(), hyper.d)));
    }
    if i >= latent.n() || t >= latent.num_times() {
        return Err(Error::IndexOutOfRange(format!(
            "(i={i}, t={t}) outside n={}, T={}",
            latent.n(),
            latent.num_times()
        )));
    }
    Ok(conditional_at(net, latent, hyper, latent.position(i, t), i, t))
}

/// Change in the log-likelihood when the intercept moves from `beta` to `proposal`.
fn beta_likelihood_delta<T: Scalar>(net: &DynamicNetwork, latent: &LatentConfiguration<T>, beta: T, proposal: T) -> T {
    let n = latent.n();
    let mut pair_terms = T::zero();
    for t in 0..latent.num_times() {
        for i in 0..n {
            let xi = latent.position(i, t);
            for j in (i + 1)..n {
                let d2 = sq_dist(xi, latent.position(j, t));
                pair_terms = pair_terms + log1p_exp(proposal - d2) - log1p_exp(beta - d2);
            }
        }
    }
    T::of(net.total_edge_count() as f64) * (proposal - beta) - T::of(2.0) * pair_terms
}

fn sweep_replica<T: Scalar>(
    net: &DynamicNetwork,
    hyper: &Hyperparameters<T>,
    opts: &McmcOptions<T>,
    rep: &mut Replica<T>,
) -> Result<()> {
    let d = hyper.d;
    let mut proposal = vec![T::zero(); d];
    for t in 0..rep.latent.num_times() {
        for i in 0..rep.latent.n() {
            let current = rep.latent.position(i, t);
            for (p, &c) in proposal.iter_mut().zip(current) {
                *p = c + opts.proposal_sd_latent * T::sample_standard_normal(&mut rep.rng);
            }
            let before = conditional_at(net, &rep.latent, hyper, current, i, t);
            let after = conditional_at(net, &rep.latent, hyper, &proposal, i, t);
            let delta = after - before;
            rep.counters.latent_attempts += 1;
            let u = T::sample_unit(&mut rep.rng);
            if delta.is_finite() && metropolis_accept(delta, rep.temperature, u) {
                rep.latent.position_mut(i, t).copy_from_slice(&proposal);
                rep.log_joint = rep.log_joint + delta;
                rep.counters.latent_accepts += 1;
            }
        }
    }

    let beta = rep.latent.beta;
    let proposal = beta + opts.proposal_sd_beta * T::sample_standard_normal(&mut rep.rng);
    let delta = beta_likelihood_delta(net, &rep.latent, beta, proposal) + log_prior_beta(proposal, hyper)
        - log_prior_beta(beta, hyper);
    rep.counters.beta_attempts += 1;
    let u = T::sample_unit(&mut rep.rng);
    if delta.is_finite() && metropolis_accept(delta, rep.temperature, u) {
        rep.latent.beta = proposal;
        rep.log_joint = rep.log_joint + delta;
        rep.counters.beta_accepts += 1;
    }
    if !rep.log_joint.is_finite() {
        return Err(Error::NonFinite(format!(
            "log joint at temperature {} after {} latent moves",
            rep.temperature, rep.counters.latent_accepts
        )));
    }
    Ok(())
}

/// One random-walk sweep of replica `k`: every `X_it` as a block, then `beta`.
pub fn mh_sweep<T: Scalar>(
    net: &DynamicNetwork,
    chain: &mut ChainState<T>,
    hyper: &Hyperparameters<T>,
    opts: &McmcOptions<T>,
    k: usize,
) -> Result<()> {
    let rep = chain
        .replicas
        .get_mut(k)
        .ok_or_else(|| Error::IndexOutOfRange(format!("temperature index {k}")))?;
    sweep_replica(net, hyper, opts, rep)
}

/// With probability `a0` sweeps every replica; otherwise proposes to swap
/// the states of one uniformly chosen neighbouring pair.
pub fn pt_step<T: Scalar>(
    net: &DynamicNetwork,
    chain: &mut ChainState<T>,
    hyper: &Hyperparameters<T>,
    opts: &McmcOptions<T>,
) -> Result<()> {
    let k_max = chain.replicas.len();
    let u = T::sample_unit(&mut chain.rng);
    if k_max == 1 || u <= opts.a0 {
        if opts.parallel {
            chain
                .replicas
                .par_iter_mut()
                .try_for_each(|rep| sweep_replica(net, hyper, opts, rep))?;
        } else {
            for rep in &mut chain.replicas {
                sweep_replica(net, hyper, opts, rep)?;
            }
        }
    } else {
        let k = (T::sample_unit(&mut chain.rng).as_f64() * (k_max - 1) as f64) as usize;
        let k = k.min(k_max - 2);
        // refresh the cached densities so that rounding does not accumulate
        for rep in &mut chain.replicas[k..=k + 1] {
            rep.log_joint = log_joint(net, &rep.latent, hyper)?;
        }
        let (lo, hi) = (&chain.replicas[k], &chain.replicas[k + 1]);
        let log_ratio = (T::one() / lo.temperature - T::one() / hi.temperature) * (hi.log_joint - lo.log_joint);
        chain.swap_attempts[k] += 1;
        let u = T::sample_unit(&mut chain.rng);
        if metropolis_accept(log_ratio, T::one(), u) {
            let (left, right) = chain.replicas.split_at_mut(k + 1);
            std::mem::swap(&mut left[k].latent, &mut right[0].latent);
            std::mem::swap(&mut left[k].log_joint, &mut right[0].log_joint);
            chain.swap_accepts[k] += 1;
        }
    }
    chain.iteration += 1;
    Ok(())
}

/// Positions from the prior and `beta = xi`.
pub fn sample_prior<T: Scalar>(
    n: usize,
    num_times: usize,
    hyper: &Hyperparameters<T>,
    seed: u64,
) -> Result<LatentConfiguration<T>> {
    hyper.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut latent = LatentConfiguration::zeros(n, num_times, hyper.d);
    latent.beta = hyper.xi;
    let (s, tau) = (hyper.sigma2.sqrt(), hyper.tau2.sqrt());
    for i in 0..n {
        for t in 0..num_times {
            let prev: Vec<T> = if t == 0 { vec![T::zero(); hyper.d] } else { latent.position(i, t - 1).to_vec() };
            let scale = if t == 0 { s } else { tau };
            for (x, p) in latent.position_mut(i, t).iter_mut().zip(prev) {
                *x = p + scale * T::sample_standard_normal(&mut rng);
            }
        }
    }
    Ok(latent)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub temperatures: Vec<f64>,
    pub latent_rate: Vec<f64>,
    pub beta_rate: Vec<f64>,
    /// `None` for a pair that was never proposed.
    pub swap_rate: Vec<Option<f64>>,
}

impl AcceptanceReport {
    fn from_chain<T: Scalar>(chain: &ChainState<T>) -> Self {
        let rate = |a: u64, n: u64| if n == 0 { 0.0 } else { a as f64 / n as f64 };
        Self {
            temperatures: chain.replicas.iter().map(|r| r.temperature.as_f64()).collect(),
            latent_rate: chain
                .replicas
                .iter()
                .map(|r| rate(r.counters.latent_accepts, r.counters.latent_attempts))
                .collect(),
            beta_rate: chain
                .replicas
                .iter()
                .map(|r| rate(r.counters.beta_accepts, r.counters.beta_attempts))
                .collect(),
            swap_rate: chain
                .swap_attempts
                .iter()
                .zip(&chain.swap_accepts)
                .map(|(&n, &a)| (n > 0).then(|| a as f64 / n as f64))
                .collect(),
        }
    }
}

/// Posterior summary of the cold chain.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcSummary {
    /// Mean of the aligned retained positions, with `beta` the posterior
    /// mean of the intercept.
    pub posterior_mean: LatentConfiguration<f64>,
    pub beta_draws: Vec<f64>,
    pub beta_mean: f64,
    /// Batch-means Monte-Carlo standard error of `beta_mean`.
    pub beta_mc_stderr: f64,
    pub acceptance: AcceptanceReport,
    pub auc_per_time: Vec<Option<f64>>,
    /// Retained draws whose alignment was rank deficient.
    pub degenerate_alignments: usize,
}

fn batch_means_stderr(draws: &[f64]) -> f64 {
    let m = draws.len();
    if m < 4 {
        return f64::NAN;
    }
    let size = (m as f64).sqrt().floor() as usize;
    let batches = m / size;
    let means: Vec<f64> = (0..batches)
        .map(|b| draws[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

fn initial_latent<T: Scalar>(
    net: &DynamicNetwork,
    hyper: &Hyperparameters<T>,
    opts: &McmcOptions<T>,
) -> Result<LatentConfiguration<T>> {
    match &opts.init {
        McmcInit::Prior => sample_prior(net.n(), net.num_times(), hyper, opts.seed),
        McmcInit::Mds => {
            let mut latent = init_mds(net, hyper)?.plug_in();
            latent.beta = hyper.xi;
            Ok(latent)
        }
        McmcInit::Explicit(latent) => Ok((**latent).clone()),
    }
}

/// Runs `burn_in + samples` tempering steps and summarizes every `thin`-th
/// cold draw after burn-in. Draws are aligned jointly over all `n T` points
/// to the first retained draw, then translated onto its centroid.
pub fn run_mcmc<T: Scalar>(net: &DynamicNetwork, hyper: &Hyperparameters<T>, opts: &McmcOptions<T>) -> Result<McmcSummary> {
    hyper.validate()?;
    opts.validate()?;
    let init = initial_latent(net, hyper, opts)?;
    let mut chain = ChainState::new(net, hyper, init, &opts.temperatures, opts.seed)?;
    for _ in 0..opts.burn_in {
        pt_step(net, &mut chain, hyper, opts)?;
    }

    let (n, num_times, d) = (net.n(), net.num_times(), hyper.d);
    let mut reference: Option<Vec<f64>> = None;
    let mut sum = vec![0.0; n * num_times * d];
    let mut beta_draws = Vec::with_capacity(opts.samples / opts.thin);
    let mut degenerate = 0;
    for step in 1..=opts.samples {
        pt_step(net, &mut chain, hyper, opts)?;
        if step % opts.thin != 0 {
            continue;
        }
        let cold = chain.cold();
        beta_draws.push(cold.beta.as_f64());
        // [t][i][k] layout: all nT points as one n T x d point set
        let flat: Vec<f64> = cold.as_flat().iter().map(|x| x.as_f64()).collect();
        let aligned = match &reference {
            None => {
                reference = Some(flat.clone());
                flat
            }
            Some(r) if n * num_times >= d => {
                let p = procrustes_align(&flat, r, d)?;
                degenerate += usize::from(p.degenerate);
                p.aligned
                    .chunks(d)
                    .flat_map(|row| row.iter().zip(&p.reference_centroid).map(|(a, c)| a + c))
                    .collect()
            }
            Some(_) => flat,
        };
        for (s, a) in sum.iter_mut().zip(aligned) {
            *s += a;
        }
    }

    let draws = beta_draws.len() as f64;
    let beta_mean = beta_draws.iter().sum::<f64>() / draws;
    let positions = sum.iter().map(|s| s / draws).collect();
    let posterior_mean = LatentConfiguration::from_flat(n, num_times, d, positions, beta_mean)?;
    let auc_per_time = crate::eval::in_sample_auc(net, &posterior_mean)?;
    Ok(McmcSummary {
        acceptance: AcceptanceReport::from_chain(&chain),
        beta_mc_stderr: batch_means_stderr(&beta_draws),
        posterior_mean,
        beta_draws,
        beta_mean,
        auc_per_time,
        degenerate_alignments: degenerate,
    })
}
