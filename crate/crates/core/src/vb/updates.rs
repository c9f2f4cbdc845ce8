//! Coordinate updates. Each returns the new value of one block and leaves the
//! state untouched; the fit loop writes them back in order.

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::model::{DynamicNetwork, Hyperparameters};
use crate::scalar::Scalar;

use super::kernel::{f_derivs_xi_with, grad_hess_with, jac_f_sigma_with, Coupling};
use super::state::VariationalState;
use super::VARIANCE_FLOOR;

pub(crate) fn update_sigma_with<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
    parallel: bool,
) -> Result<SquareMatrix<T>> {
    state.check_shape(net, hyper)?;
    let n = T::of(state.n() as f64);
    let big_t = T::of(state.num_times() as f64);
    let two = T::of(2.0);
    let coef = n / (two * hyper.sigma2)
        + n * (big_t - T::one()) / hyper.tau2
        + two * T::of(net.total_edge_count() as f64);
    let bracket = SquareMatrix::scaled_identity(state.d(), coef).add(&jac_f_sigma_with(state, parallel)?);
    let inv = bracket.inverse_spd().map_err(|_| {
        Error::Singular("Sigma update bracket is not positive definite".into())
    })?;
    let next = inv.scale(n * big_t / two);
    if !next.is_finite() {
        return Err(Error::NonFinite("Sigma update".into()));
    }
    Ok(next.symmetrize().floor_eigenvalues(T::of(VARIANCE_FLOOR)))
}

/// `Sigma <- (nT/2) [(n/(2 sigma2) + n(T-1)/tau2 + 2 sum Y) I + J(Sigma)]^{-1}`,
/// symmetrized and eigenvalue-floored.
pub fn update_sigma<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
) -> Result<SquareMatrix<T>> {
    update_sigma_with(net, state, hyper, false)
}

/// Precision and linear term contributed by the Gaussian chain prior at
/// snapshot `t`.
fn chain_terms<T: Scalar>(state: &VariationalState<T>, hyper: &Hyperparameters<T>, i: usize, t: usize) -> (T, Vec<T>) {
    let last = state.num_times() - 1;
    let inv_s = T::one() / hyper.sigma2;
    let inv_t = T::one() / hyper.tau2;
    let mut rhs = vec![T::zero(); state.d()];
    let mut add = |v: &[T]| {
        for (r, &x) in rhs.iter_mut().zip(v) {
            *r = *r + inv_t * x;
        }
    };
    let coef = if last == 0 {
        inv_s
    } else if t == 0 {
        add(state.mu(i, 1));
        inv_s + inv_t
    } else if t == last {
        add(state.mu(i, t - 1));
        inv_t
    } else {
        add(state.mu(i, t - 1));
        add(state.mu(i, t + 1));
        T::of(2.0) * inv_t
    };
    (coef, rhs)
}

pub(crate) fn update_mu_with<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
    coupling: &Coupling<T>,
    i: usize,
    t: usize,
    damping: T,
    convexify: bool,
) -> Result<Vec<T>> {
    let d = state.d();
    let two = T::of(2.0);
    let (chain_coef, mut rhs) = chain_terms(state, hyper, i, t);

    let mut data_coef = T::zero();
    for j in 0..state.n() {
        if j == i {
            continue;
        }
        let y = net.y::<T>(t, i, j) + net.y::<T>(t, j, i);
        if y > T::zero() {
            data_coef = data_coef + two * y;
            for (r, &m) in rhs.iter_mut().zip(state.mu(j, t)) {
                *r = *r + two * y * m;
            }
        }
    }

    let (grad, mut hess) = grad_hess_with(state, coupling, i, t);
    if convexify {
        hess = hess.floor_eigenvalues(T::zero());
    }
    let current = state.mu(i, t);
    let h_mu = hess.mul_vec(current);
    for k in 0..d {
        rhs[k] = rhs[k] + h_mu[k] - grad[k];
    }
    let system = hess.add(&SquareMatrix::scaled_identity(d, chain_coef + data_coef));
    let solved = system.solve_spd(&rhs).map_err(|_| {
        Error::Singular(format!("mu update system for node {i} at snapshot {t} is not positive definite"))
    })?;
    let next: Vec<T> = solved
        .iter()
        .zip(current)
        .map(|(&s, &c)| damping * s + (T::one() - damping) * c)
        .collect();
    if next.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("mu update for node {i} at snapshot {t}")));
    }
    Ok(next)
}

/// Newton-type update of `mu_it` from a second-order expansion of `f`
/// around the current means, blended with the current value by `damping`.
pub fn update_mu<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
    i: usize,
    t: usize,
    damping: T,
) -> Result<Vec<T>> {
    state.check_shape(net, hyper)?;
    state.check_index(i, t)?;
    let c = Coupling::from_state(state)?;
    update_mu_with(net, state, hyper, &c, i, t, damping, false)
}

/// Same as [`update_mu`] with the Hessian of `f` replaced by its positive
/// semidefinite part, which keeps the linear system positive definite.
pub fn update_mu_convexified<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
    i: usize,
    t: usize,
    damping: T,
) -> Result<Vec<T>> {
    state.check_shape(net, hyper)?;
    state.check_index(i, t)?;
    let c = Coupling::from_state(state)?;
    update_mu_with(net, state, hyper, &c, i, t, damping, true)
}

pub(crate) fn update_xi_with<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
    parallel: bool,
) -> Result<T> {
    state.check_shape(net, hyper)?;
    let (f1, f2) = f_derivs_xi_with(state, parallel)?;
    let w = hyper.alpha * hyper.psi2;
    let y_sum = T::of(net.total_edge_count() as f64);
    let denom = T::one() + w * f2;
    let next = (hyper.xi + w * (y_sum + f2 * state.xi_tilde - f1)) / denom;
    if denom > T::zero() && next.is_finite() {
        return Ok(next);
    }
    solve_xi_stationarity(net, state, hyper)
}

/// `xi_tilde <- [xi + alpha psi2 (sum Y + f'' xi_tilde - f')] / (1 + alpha psi2 f'')`.
///
/// Falls back to [`solve_xi_stationarity`] if the denominator is not
/// positive.
pub fn update_xi<T: Scalar>(net: &DynamicNetwork, state: &VariationalState<T>, hyper: &Hyperparameters<T>) -> Result<T> {
    update_xi_with(net, state, hyper, false)
}

/// Exact minimiser of the objective in `xi_tilde` with everything else fixed,
/// by bisection on its derivative `(xi_tilde - xi)/(alpha psi2) - sum Y + f'(xi_tilde)`,
/// which is increasing.
pub fn solve_xi_stationarity<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
) -> Result<T> {
    state.check_shape(net, hyper)?;
    let w = hyper.alpha * hyper.psi2;
    let y_sum = T::of(net.total_edge_count() as f64);
    let mut probe = state.clone();
    let mut slope = |x: T| -> Result<T> {
        probe.set_xi_tilde(x);
        Ok((x - hyper.xi) / w - y_sum + f_derivs_xi_with(&probe, false)?.0)
    };
    // f' lies in [0, n(n-1)T], which brackets the root.
    let pairs = T::of((state.n() * state.n().saturating_sub(1) * state.num_times()) as f64);
    let mut lo = hyper.xi + w * (y_sum - pairs) - T::one();
    let mut hi = hyper.xi + w * y_sum + T::one();
    if slope(lo)? > T::zero() || slope(hi)? < T::zero() {
        return Err(Error::Singular("could not bracket the xi_tilde stationarity root".into()));
    }
    for _ in 0..200 {
        let mid = T::of(0.5) * (lo + hi);
        if slope(mid)? > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= T::epsilon() * (T::one() + mid.abs()) {
            break;
        }
    }
    Ok(T::of(0.5) * (lo + hi))
}

pub(crate) fn update_psi2_with<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
    parallel: bool,
) -> Result<T> {
    state.check_shape(net, hyper)?;
    let f_psi = T::of(0.5) * f_derivs_xi_with(state, parallel)?.0;
    let next = T::one() / (T::one() / hyper.psi2 + T::of(2.0) * hyper.alpha * f_psi);
    Ok(next.max(T::of(VARIANCE_FLOOR)))
}

/// `psi2_tilde <- (1/psi2 + 2 alpha df/dpsi2_tilde)^{-1}`, floored.
pub fn update_psi2<T: Scalar>(net: &DynamicNetwork, state: &VariationalState<T>, hyper: &Hyperparameters<T>) -> Result<T> {
    update_psi2_with(net, state, hyper, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LatentConfiguration;

    fn state(n: usize, num_times: usize, flat: Vec<f64>, sigma: f64, xi: f64, psi2: f64) -> VariationalState<f64> {
        let mu = LatentConfiguration::from_flat(n, num_times, 2, flat, 0.0).unwrap();
        VariationalState::new(mu, SquareMatrix::scaled_identity(2, sigma), xi, psi2).unwrap()
    }

    #[test]
    fn sigma_update_without_pairs() {
        let net = DynamicNetwork::new(1, 2, true, vec![vec![]; 2]).unwrap();
        let s = state(1, 2, vec![0.0; 4], 1.0, 0.0, 1.0);
        let hyper = Hyperparameters::new(2, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let next = update_sigma(&net, &s, &hyper).unwrap();
        let expected = SquareMatrix::scaled_identity(2, 2.0 / 3.0);
        assert!(next.sub(&expected).frobenius_norm() < 1e-14);
    }

    #[test]
    fn mu_symmetric_fixed_point() {
        let net = DynamicNetwork::new(2, 3, true, vec![vec![]; 3]).unwrap();
        let s = state(2, 3, vec![0.0; 12], 0.5, -1.0, 1.0);
        let hyper = Hyperparameters::new(2, 1.0, 0.5, 0.0, 1.0, 1.0).unwrap();
        let next = update_mu(&net, &s, &hyper, 1, 1, 1.0).unwrap();
        assert!(next.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn mu_single_node_is_gaussian_smoother_step() {
        // With no partners the update solves the chain-prior stationarity
        // condition for mu_it given its neighbours exactly.
        let net = DynamicNetwork::new(1, 3, true, vec![vec![]; 3]).unwrap();
        let flat = vec![1.0, -2.0, 0.3, 0.4, 2.0, 0.5];
        let s = state(1, 3, flat.clone(), 0.2, 0.0, 1.0);
        let hyper = Hyperparameters::new(2, 0.5, 0.25, 0.0, 1.0, 1.0).unwrap();
        let interior = update_mu(&net, &s, &hyper, 0, 1, 1.0).unwrap();
        assert!((interior[0] - 1.5).abs() < 1e-14 && (interior[1] + 0.75).abs() < 1e-14);
        let first = update_mu(&net, &s, &hyper, 0, 0, 1.0).unwrap();
        // (1/sigma2 + 1/tau2) x = mu_2 / tau2  =>  x = 4 * mu_2 / 6
        assert!((first[0] - 0.2).abs() < 1e-14 && (first[1] - 0.4 * 4.0 / 6.0).abs() < 1e-14);
        let last = update_mu(&net, &s, &hyper, 0, 2, 1.0).unwrap();
        assert!((last[0] - 0.3).abs() < 1e-14 && (last[1] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn mu_damping_blends_with_current() {
        let net = DynamicNetwork::new(1, 2, true, vec![vec![]; 2]).unwrap();
        let s = state(1, 2, vec![1.0, 1.0, 3.0, -1.0], 0.2, 0.0, 1.0);
        let hyper = Hyperparameters::new(2, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let full = update_mu(&net, &s, &hyper, 0, 1, 1.0).unwrap();
        let half = update_mu(&net, &s, &hyper, 0, 1, 0.5).unwrap();
        for k in 0..2 {
            assert!((half[k] - 0.5 * (full[k] + s.mu(0, 1)[k])).abs() < 1e-15);
        }
    }

    #[test]
    fn xi_update_is_prior_without_pairs() {
        let net = DynamicNetwork::new(1, 2, true, vec![vec![]; 2]).unwrap();
        let s = state(1, 2, vec![0.0; 4], 0.2, 0.7, 1.0);
        let hyper = Hyperparameters::new(2, 1.0, 1.0, -1.3, 2.0, 0.4).unwrap();
        assert_eq!(update_xi(&net, &s, &hyper).unwrap(), -1.3);
        assert_eq!(update_psi2(&net, &s, &hyper).unwrap(), 2.0);
    }

    #[test]
    fn psi2_update_shrinks_with_pairs() {
        let net = DynamicNetwork::new(3, 1, true, vec![vec![(0, 1)]]).unwrap();
        let s = state(3, 1, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], 0.1, 0.0, 1.0);
        let hyper = Hyperparameters::new(2, 1.0, 1.0, 0.0, 2.0, 1.0).unwrap();
        let next = update_psi2(&net, &s, &hyper).unwrap();
        assert!(next < 2.0 && next > 0.0);
    }
}
