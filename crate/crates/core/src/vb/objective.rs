use crate::error::Result;
use crate::model::{DynamicNetwork, Hyperparameters};
use crate::scalar::{sq_dist, sq_norm, Scalar};

use super::kernel::coupling_value_with;
use super::state::VariationalState;

/// Terms of the KL upper bound, with additive constants dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBlocks<T> {
    /// `-(nT/2) log det Sigma`
    pub log_det: T,
    /// `(n / (2 sigma2) + n (T-1) / tau2) tr Sigma`
    pub prior_trace: T,
    /// `||mu_i1||^2 / (2 sigma2) + sum_t ||mu_it - mu_i(t-1)||^2 / (2 tau2)`
    pub prior_means: T,
    /// `KL(N(xi_tilde, psi2_tilde) || N(xi, psi2)) / alpha`
    pub beta_prior: T,
    /// `-sum Y_ijt (xi_tilde - 2 tr Sigma - ||mu_it - mu_jt||^2)`
    pub data: T,
    /// The coupling function `f`.
    pub coupling: T,
}

impl<T: Scalar> ObjectiveBlocks<T> {
    pub fn total(&self) -> T {
        self.log_det + self.prior_trace + self.prior_means + self.beta_prior + self.data + self.coupling
    }
}

/// Exact KL divergence between the two intercept Gaussians, scaled by `1/alpha`.
///
/// Zero when the variational factor equals the prior, for every `alpha`.
pub(crate) fn beta_prior_block<T: Scalar>(xi_tilde: T, psi2_tilde: T, hyper: &Hyperparameters<T>) -> T {
    let ratio = psi2_tilde / hyper.psi2;
    let dev = xi_tilde - hyper.xi;
    T::of(0.5) / hyper.alpha * (ratio - T::one() - ratio.ln() + dev * dev / hyper.psi2)
}

pub(crate) fn objective_blocks_with<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
    parallel: bool,
) -> Result<ObjectiveBlocks<T>> {
    hyper.validate()?;
    state.check_shape(net, hyper)?;
    let n = T::of(state.n() as f64);
    let num_times = state.num_times();
    let big_t = T::of(num_times as f64);
    let two = T::of(2.0);
    let trace = state.sigma.trace();

    let log_det = -n * big_t / two * state.sigma.log_det_spd()?;
    let prior_trace = (n / (two * hyper.sigma2) + n * (big_t - T::one()) / hyper.tau2) * trace;

    let mut initial = T::zero();
    let mut steps = T::zero();
    for i in 0..state.n() {
        initial = initial + sq_norm(state.mu(i, 0));
        for t in 1..num_times {
            steps = steps + sq_dist(state.mu(i, t), state.mu(i, t - 1));
        }
    }
    let prior_means = initial / (two * hyper.sigma2) + steps / (two * hyper.tau2);

    let mut data = T::zero();
    for t in 0..num_times {
        for &(i, j) in net.edges(t) {
            data = data + state.xi_tilde - two * trace - sq_dist(state.mu(i, t), state.mu(j, t));
        }
    }

    Ok(ObjectiveBlocks {
        log_det,
        prior_trace,
        prior_means,
        beta_prior: beta_prior_block(state.xi_tilde, state.psi2_tilde, hyper),
        data: -data,
        coupling: coupling_value_with(state, parallel)?,
    })
}

pub fn objective_blocks<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
) -> Result<ObjectiveBlocks<T>> {
    objective_blocks_with(net, state, hyper, false)
}

/// Upper bound on `KL(q || posterior)` up to additive constants. Lower is better.
pub fn surrogate_objective<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
) -> Result<T> {
    Ok(objective_blocks(net, state, hyper)?.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::linalg::SquareMatrix;
    use crate::model::LatentConfiguration;

    fn single_node_state() -> (DynamicNetwork, VariationalState<f64>) {
        let net = DynamicNetwork::new(1, 3, true, vec![vec![]; 3]).unwrap();
        let flat = vec![0.5, -0.2, 0.6, -0.1, 0.4, 0.0];
        let mu = LatentConfiguration::from_flat(1, 3, 2, flat, 0.0).unwrap();
        let s = VariationalState::new(mu, SquareMatrix::scaled_identity(2, 0.3), 0.2, 1.5).unwrap();
        (net, s)
    }

    #[test]
    fn single_node_has_no_pair_blocks() {
        let (net, s) = single_node_state();
        let hyper = Hyperparameters::new(2, 0.5, 0.1, 0.0, 2.0, 1.0).unwrap();
        let b = objective_blocks(&net, &s, &hyper).unwrap();
        assert_eq!(b.coupling, 0.0);
        assert_eq!(b.data, 0.0);
        let expected_means = (0.25 + 0.04) / 1.0 + ((0.01 + 0.01) + (0.04 + 0.01)) / 0.2;
        assert!((b.prior_means - expected_means).abs() < 1e-12);
        let expected_trace = (1.0 / 1.0 + 2.0 / 0.1) * 0.6;
        assert!((b.prior_trace - expected_trace).abs() < 1e-12);
        assert!((b.log_det + 1.5 * 2.0 * 0.3_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn beta_block_vanishes_at_prior_for_any_alpha() {
        let (net, mut s) = single_node_state();
        s.set_xi_tilde(-0.7);
        s.psi2_tilde = 2.0;
        let h1 = Hyperparameters::new(2, 0.5, 0.1, -0.7, 2.0, 1.0).unwrap();
        let h2 = Hyperparameters { alpha: 0.5, ..h1.clone() };
        let o1 = objective_blocks(&net, &s, &h1).unwrap();
        let o2 = objective_blocks(&net, &s, &h2).unwrap();
        assert_eq!(o1.beta_prior, 0.0);
        assert_eq!(o2.beta_prior, 0.0);
        assert_eq!(o1.total(), o2.total());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let (_, s) = single_node_state();
        let other = DynamicNetwork::new(2, 3, true, vec![vec![]; 3]).unwrap();
        let hyper = Hyperparameters::<f64>::friendship_defaults();
        assert!(matches!(surrogate_objective(&other, &s, &hyper), Err(Error::Dimension(_))));
    }
}
