//! Dynamic latent space models for time series of binary networks.
//!
//! Each node `i` has a latent position `X_it` in `R^d` at every snapshot `t`.
//! Positions start from `N(0, sigma2 I)` and follow a Gaussian random walk
//! with step variance `tau2`; an edge `i -> j` at time `t` appears with
//! probability `logistic(beta - ||X_it - X_jt||^2)`.
//!
//! The crate provides mean-field variational inference ([`vb`]), a parallel
//! tempering sampler ([`mcmc`]), a simulator ([`simulate`]), evaluation
//! metrics ([`eval`]), file formats ([`io`]) and the replication experiments
//! ([`experiment`]).
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod mcmc;
pub mod model;
pub mod scalar;
pub mod simulate;
pub mod vb;

pub use error::{Error, Result};
pub use linalg::SquareMatrix;
pub use model::{
    link_probability, log_joint, log_likelihood, log_prior_beta, log_prior_latent, DynamicNetwork,
    Hyperparameters, LatentConfiguration,
};
pub use scalar::Scalar;

pub type Matrix = SquareMatrix<f64>;
pub type Hyper = Hyperparameters<f64>;
pub type Latent = LatentConfiguration<f64>;
pub type VbState = vb::VariationalState<f64>;
pub type VbOptions = vb::FitOptions<f64>;
pub type VbFit = vb::FitResult<f64>;
pub type Chain = mcmc::ChainState<f64>;
pub type McmcOptions = mcmc::McmcOptions<f64>;

pub type Hyper32 = Hyperparameters<f32>;
pub type Latent32 = LatentConfiguration<f32>;
pub type VbState32 = vb::VariationalState<f32>;
pub type VbOptions32 = vb::FitOptions<f32>;
pub type VbFit32 = vb::FitResult<f32>;
