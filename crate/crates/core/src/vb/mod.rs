//! Mean-field variational Bayes for the dynamic latent space model.
//!
//! The posterior is approximated by `q(beta) = N(xi_tilde, psi2_tilde)` and
//! independent `q(X_it) = N(mu_it, Sigma)` with one covariance shared by all
//! nodes and snapshots. The expected log-likelihood is replaced by its Jensen
//! lower bound, whose non-linear part is the coupling function
//!
//! ```text
//! f = sum_t sum_{i != j} log(1 + E_q[exp(beta - ||X_it - X_jt||^2)])
//! ```
//!
//! and the resulting KL upper bound is minimised by Newton-type coordinate
//! updates of `Sigma`, every `mu_it`, `xi_tilde` and `psi2_tilde`.

mod fit;
mod init;
mod kernel;
mod objective;
mod state;
mod updates;

pub use fit::{fit, fit_from, sweep, FitError};
pub use init::{init_mds, init_random};
pub use kernel::{
    a_factor, coupling_value, expected_sq_distance, f_deriv_psi2, f_derivs_xi, grad_f_mu,
    grad_hess_f_mu, hess_f_mu, jac_f_sigma, jensen_edge_term,
};
pub use objective::{objective_blocks, surrogate_objective, ObjectiveBlocks};
pub use state::{FitOptions, FitResult, InitStrategy, VariationalState};
pub use updates::{
    solve_xi_stationarity, update_mu, update_mu_convexified, update_psi2, update_sigma, update_xi,
};

/// Lower bound applied to the eigenvalues of `Sigma` and to `psi2_tilde`.
pub const VARIANCE_FLOOR: f64 = 1e-8;
