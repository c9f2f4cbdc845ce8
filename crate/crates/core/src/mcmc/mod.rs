//! Parallel tempering with Metropolis-Hastings within Gibbs.
//!
//! Each replica targets `pi^(1/T_k)` for the joint posterior `pi` of the
//! latent positions and the intercept. A step either sweeps every replica
//! with random-walk proposals (probability `a0`) or proposes to swap the
//! states of one uniformly chosen pair of neighbouring temperatures.

mod procrustes;
mod sampler;

pub use procrustes::{procrustes_align, Procrustes};
pub use sampler::{
    full_conditional_logdensity_latent, metropolis_accept, mh_sweep, pt_step, run_mcmc, sample_prior,
    AcceptanceCounters, AcceptanceReport, ChainState, McmcInit, McmcOptions, McmcSummary, Replica,
};
