//! Closed-form expectations under `q` and derivatives of the coupling
//! function `f`.
//!
//! Every summand of `f` depends on the state only through
//!
//! ```text
//! z_ijt = xi_tilde + psi2_tilde / 2 - log det(M) / 2 - D^T M^{-1} D,
//! M = I + 4 Sigma,  D = mu_it - mu_jt,
//! ```
//!
//! which is `log E_q[exp(beta - ||X_it - X_jt||^2)]`. The summand is
//! `log(1 + e^z)`, `1 / A_ijt = sigmoid(z)`, and all derivatives below are the
//! exact derivatives of `f` (both orientations of each pair included).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::scalar::{log1p_exp, logistic, sq_dist, Scalar};

use super::state::VariationalState;

/// Quantities shared by every pair for a fixed `(Sigma, xi_tilde, psi2_tilde)`.
#[derive(Debug, Clone)]
pub(crate) struct Coupling<T> {
    pub m_inv: SquareMatrix<T>,
    /// `xi_tilde + psi2_tilde / 2 - log det(M) / 2`
    pub log_scale: T,
}

impl<T: Scalar> Coupling<T> {
    pub fn new(sigma: &SquareMatrix<T>, xi_tilde: T, psi2_tilde: T) -> Result<Self> {
        if sigma.cholesky().is_none() {
            return Err(Error::NotSpd("Sigma".into()));
        }
        let m = SquareMatrix::identity(sigma.dim()).add(&sigma.scale(T::of(4.0)));
        let log_det = m.log_det_spd()?;
        Ok(Self {
            m_inv: m.inverse_spd()?,
            log_scale: xi_tilde + T::of(0.5) * psi2_tilde - T::of(0.5) * log_det,
        })
    }

    pub fn from_state(state: &VariationalState<T>) -> Result<Self> {
        Self::new(&state.sigma, state.xi_tilde, state.psi2_tilde)
    }

    /// `z` for a mean difference `diff`.
    #[inline]
    pub fn log_e(&self, diff: &[T]) -> T {
        self.log_scale - self.m_inv.quad_form(diff)
    }
}

fn check_pair<T: Scalar>(mu_i: &[T], mu_j: &[T], sigma: &SquareMatrix<T>) -> Result<()> {
    if mu_i.len() != mu_j.len() || mu_i.len() != sigma.dim() {
        return Err(Error::Dimension(format!(
            "means of length {} and {} with a {}x{} covariance",
            mu_i.len(),
            mu_j.len(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

fn diff<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `E_q ||X_i - X_j||^2 = 2 tr(Sigma) + ||mu_i - mu_j||^2`.
pub fn expected_sq_distance<T: Scalar>(mu_i: &[T], mu_j: &[T], sigma: &SquareMatrix<T>) -> Result<T> {
    check_pair(mu_i, mu_j, sigma)?;
    if sigma.cholesky().is_none() {
        return Err(Error::NotSpd("Sigma".into()));
    }
    Ok(T::of(2.0) * sigma.trace() + sq_dist(mu_i, mu_j))
}

/// One summand of `f`: `log(1 + E_q[exp(beta - ||X_i - X_j||^2)])`.
pub fn jensen_edge_term<T: Scalar>(
    mu_i: &[T],
    mu_j: &[T],
    sigma: &SquareMatrix<T>,
    xi_tilde: T,
    psi2_tilde: T,
) -> Result<T> {
    check_pair(mu_i, mu_j, sigma)?;
    let c = Coupling::new(sigma, xi_tilde, psi2_tilde)?;
    Ok(log1p_exp(c.log_e(&diff(mu_i, mu_j))))
}

/// `A_ijt = 1 + 1 / E_q[exp(beta - ||X_i - X_j||^2)]`.
pub fn a_factor<T: Scalar>(
    mu_i: &[T],
    mu_j: &[T],
    sigma: &SquareMatrix<T>,
    xi_tilde: T,
    psi2_tilde: T,
) -> Result<T> {
    check_pair(mu_i, mu_j, sigma)?;
    let c = Coupling::new(sigma, xi_tilde, psi2_tilde)?;
    Ok(T::one() + (-c.log_e(&diff(mu_i, mu_j))).exp())
}

/// Reduces a per-unordered-pair quantity over all snapshots.
///
/// Work is split into rows `(t, i)` over partners `j > i`; row results are
/// combined serially in row order in both modes, so `parallel` only changes
/// the wall-clock time.
pub(crate) fn reduce_pairs<T, A, F>(state: &VariationalState<T>, parallel: bool, zero: A, body: F) -> A
where
    T: Scalar,
    A: Clone + Send + Sync + std::ops::AddAssign,
    F: Fn(&mut A, &[T], &mut [T]) + Sync,
{
    let n = state.n();
    let d = state.d();
    let row = |r: usize| {
        let t = r / n;
        let i = r % n;
        let mut acc = zero.clone();
        let mut dv = vec![T::zero(); d];
        let mut scratch = vec![T::zero(); d];
        let mi = state.mu(i, t);
        for j in (i + 1)..n {
            let mj = state.mu(j, t);
            for k in 0..d {
                dv[k] = mi[k] - mj[k];
            }
            body(&mut acc, &dv, &mut scratch);
        }
        acc
    };
    let rows = n * state.num_times();
    let partials: Vec<A> = if parallel {
        (0..rows).into_par_iter().map(row).collect()
    } else {
        (0..rows).map(row).collect()
    };
    let mut total = zero;
    for p in partials {
        total += p;
    }
    total
}

#[derive(Clone)]
struct Sum<T>(T);

impl<T: Scalar> std::ops::AddAssign for Sum<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.0 = self.0 + rhs.0;
    }
}

#[derive(Clone)]
struct Pair<T>(T, T);

impl<T: Scalar> std::ops::AddAssign for Pair<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.0 = self.0 + rhs.0;
        self.1 = self.1 + rhs.1;
    }
}

pub(crate) fn coupling_value_with<T: Scalar>(state: &VariationalState<T>, parallel: bool) -> Result<T> {
    let c = Coupling::from_state(state)?;
    let half = reduce_pairs(state, parallel, Sum(T::zero()), |acc, dv, _| {
        acc.0 = acc.0 + log1p_exp(c.log_e(dv));
    });
    Ok(T::of(2.0) * half.0)
}

/// The coupling function `f` summed over all ordered pairs and snapshots.
pub fn coupling_value<T: Scalar>(state: &VariationalState<T>) -> Result<T> {
    coupling_value_with(state, false)
}

pub(crate) fn f_derivs_xi_with<T: Scalar>(state: &VariationalState<T>, parallel: bool) -> Result<(T, T)> {
    let c = Coupling::from_state(state)?;
    let half = reduce_pairs(state, parallel, Pair(T::zero(), T::zero()), |acc, dv, _| {
        let p = logistic(c.log_e(dv));
        acc.0 = acc.0 + p;
        acc.1 = acc.1 + p * (T::one() - p);
    });
    Ok((T::of(2.0) * half.0, T::of(2.0) * half.1))
}

/// First and second partial derivatives of `f` with respect to `xi_tilde`:
/// `sum 1/A_ijt` and `sum (A_ijt - 1) / A_ijt^2`.
pub fn f_derivs_xi<T: Scalar>(state: &VariationalState<T>) -> Result<(T, T)> {
    f_derivs_xi_with(state, false)
}

/// `df / dpsi2_tilde`. `f` depends on `xi_tilde + psi2_tilde / 2`, so this is
/// half the first `xi_tilde` derivative.
pub fn f_deriv_psi2<T: Scalar>(state: &VariationalState<T>) -> Result<T> {
    Ok(T::of(0.5) * f_derivs_xi(state)?.0)
}

pub(crate) fn jac_f_sigma_with<T: Scalar>(state: &VariationalState<T>, parallel: bool) -> Result<SquareMatrix<T>> {
    let c = Coupling::from_state(state)?;
    let d = state.d();
    // Accumulate sum p and sum p * w w^T, w = M^{-1} D, then assemble once.
    #[derive(Clone)]
    struct Acc<T> {
        p: T,
        outer: SquareMatrix<T>,
    }
    impl<T: Scalar> std::ops::AddAssign for Acc<T> {
        fn add_assign(&mut self, rhs: Self) {
            self.p = self.p + rhs.p;
            self.outer.add_assign(&rhs.outer);
        }
    }
    let zero = Acc {
        p: T::zero(),
        outer: SquareMatrix::zeros(d),
    };
    let acc = reduce_pairs(state, parallel, zero, |acc, dv, w| {
        c.m_inv.mul_vec_into(dv, w);
        let q: T = dv.iter().zip(w.iter()).fold(T::zero(), |s, (&a, &b)| s + a * b);
        let p = logistic(c.log_scale - q);
        acc.p = acc.p + p;
        acc.outer.add_outer(w, w, p);
    });
    // d/dSigma of log(1 + e^z) = p (-2 M^{-1} + 4 w w^T); ordered pairs double it.
    let mut jac = c.m_inv.scale(T::of(-4.0) * acc.p);
    jac.add_scaled_assign(&acc.outer, T::of(8.0));
    Ok(jac.symmetrize())
}

/// Symmetric matrix derivative of `f` with respect to `Sigma`, including the
/// `-log det(I + 4 Sigma) / 2` part of every summand.
///
/// The convention is `df = tr(J dSigma)` for symmetric perturbations, so an
/// off-diagonal entry of `J` is half the derivative along `E_kl + E_lk`.
pub fn jac_f_sigma<T: Scalar>(state: &VariationalState<T>) -> Result<SquareMatrix<T>> {
    jac_f_sigma_with(state, false)
}

pub(crate) fn grad_hess_with<T: Scalar>(
    state: &VariationalState<T>,
    c: &Coupling<T>,
    i: usize,
    t: usize,
) -> (Vec<T>, SquareMatrix<T>) {
    let d = state.d();
    let mi = state.mu(i, t);
    let mut grad = vec![T::zero(); d];
    let mut outer = SquareMatrix::zeros(d);
    let mut p_sum = T::zero();
    let mut dv = vec![T::zero(); d];
    let mut w = vec![T::zero(); d];
    for j in 0..state.n() {
        if j == i {
            continue;
        }
        let mj = state.mu(j, t);
        for k in 0..d {
            dv[k] = mi[k] - mj[k];
        }
        c.m_inv.mul_vec_into(&dv, &mut w);
        let q: T = dv.iter().zip(&w).fold(T::zero(), |s, (&a, &b)| s + a * b);
        let p = logistic(c.log_scale - q);
        for k in 0..d {
            grad[k] = grad[k] + p * w[k];
        }
        outer.add_outer(&w, &w, p * (T::one() - p));
        p_sum = p_sum + p;
    }
    // Pairs (i, j) and (j, i) both contain mu_it: gradient -4 sum p w,
    // Hessian 8 sum p(1-p) w w^T - 4 sum p M^{-1}.
    for g in &mut grad {
        *g = *g * T::of(-4.0);
    }
    let mut hess = c.m_inv.scale(T::of(-4.0) * p_sum);
    hess.add_scaled_assign(&outer, T::of(8.0));
    (grad, hess.symmetrize())
}

/// Gradient `G` and Hessian `H` of `f` with respect to `mu_it` in one pass.
pub fn grad_hess_f_mu<T: Scalar>(state: &VariationalState<T>, i: usize, t: usize) -> Result<(Vec<T>, SquareMatrix<T>)> {
    state.check_index(i, t)?;
    let c = Coupling::from_state(state)?;
    Ok(grad_hess_with(state, &c, i, t))
}

/// Gradient of `f` with respect to `mu_it`.
pub fn grad_f_mu<T: Scalar>(state: &VariationalState<T>, i: usize, t: usize) -> Result<Vec<T>> {
    Ok(grad_hess_f_mu(state, i, t)?.0)
}

/// Hessian of `f` with respect to `mu_it`.
pub fn hess_f_mu<T: Scalar>(state: &VariationalState<T>, i: usize, t: usize) -> Result<SquareMatrix<T>> {
    Ok(grad_hess_f_mu(state, i, t)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LatentConfiguration;

    fn state_from(mu: Vec<Vec<f64>>, sigma: SquareMatrix<f64>, xi: f64, psi2: f64) -> VariationalState<f64> {
        let n = mu.len();
        let d = mu[0].len();
        let flat = mu.into_iter().flatten().collect();
        VariationalState::new(LatentConfiguration::from_flat(n, 1, d, flat, 0.0).unwrap(), sigma, xi, psi2).unwrap()
    }

    #[test]
    fn expected_sq_distance_examples() {
        let half = SquareMatrix::scaled_identity(2, 0.5);
        assert_eq!(expected_sq_distance(&[1.0, 0.0], &[0.0, 0.0], &half).unwrap(), 3.0);
        let eye = SquareMatrix::identity(2);
        assert_eq!(expected_sq_distance(&[0.3, 0.3], &[0.3, 0.3], &eye).unwrap(), 4.0);
        let bad = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(matches!(expected_sq_distance(&[0.0, 0.0], &[1.0, 0.0], &bad), Err(Error::NotSpd(_))));
    }

    #[test]
    fn jensen_term_degenerate_and_unit_covariance() {
        let tiny = SquareMatrix::<f64>::scaled_identity(2, 1e-14);
        let v = jensen_edge_term(&[0.2, 0.1], &[0.2, 0.1], &tiny, 0.0, 1e-14).unwrap();
        assert!((v - 2.0_f64.ln()).abs() < 1e-12);
        let eye = SquareMatrix::identity(2);
        let v = jensen_edge_term(&[0.0, 0.0], &[0.0, 0.0], &eye, 0.0, 0.0).unwrap();
        assert!((v - 1.2_f64.ln()).abs() < 1e-14);
        assert!((v - 0.182322).abs() < 1e-6);
    }

    #[test]
    fn a_factor_identities() {
        let tiny = SquareMatrix::<f64>::scaled_identity(2, 1e-14);
        let a = a_factor(&[0.0, 0.0], &[0.0, 0.0], &tiny, 0.0, 1e-14).unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        let eye = SquareMatrix::<f64>::identity(2);
        let a = a_factor(&[0.0, 0.0], &[0.0, 0.0], &eye, 0.0, 0.0).unwrap();
        let j = jensen_edge_term(&[0.0, 0.0], &[0.0, 0.0], &eye, 0.0, 0.0).unwrap();
        assert!((a - 1.0 / (1.0 - (-j).exp())).abs() < 1e-12);
        assert!((a - 6.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_for_identical_means() {
        let s = state_from(vec![vec![0.4, -0.1]; 4], SquareMatrix::identity(2), 0.3, 0.5);
        let g = grad_f_mu(&s, 2, 0).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hessian_for_identical_means_is_isotropic() {
        // xi + psi2/2 = 0 keeps the exponent at exactly -log det(M)/2
        let s = state_from(vec![vec![0.0, 0.0]; 3], SquareMatrix::identity(2), -0.5e-8, 1e-8);
        let h = hess_f_mu(&s, 0, 0).unwrap();
        // exact derivative: -4 sum_j (1/A) M^{-1}, with 1/A = 1/6 and M = 5 I
        let expected = -4.0 * 2.0 * (1.0 / 6.0) / 5.0;
        assert!((h[(0, 0)] - expected).abs() < 1e-14);
        assert!((h[(1, 1)] - expected).abs() < 1e-14);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn empty_sums_for_single_node() {
        let s = state_from(vec![vec![1.0, 2.0]], SquareMatrix::identity(2), 0.0, 1.0);
        assert_eq!(f_derivs_xi(&s).unwrap(), (0.0, 0.0));
        assert_eq!(f_deriv_psi2(&s).unwrap(), 0.0);
        assert_eq!(coupling_value(&s).unwrap(), 0.0);
    }

    #[test]
    fn single_pair_at_log_two() {
        // z = 0 for both orientations: f' = 1/2 per ordered pair
        let xi = (1.0 + 4e-8_f64).ln() - 0.5e-8;
        let s = state_from(vec![vec![0.0, 0.0], vec![0.0, 0.0]], SquareMatrix::scaled_identity(2, 1e-8), xi, 1e-8);
        let (fp, _) = f_derivs_xi(&s).unwrap();
        let c = Coupling::from_state(&s).unwrap();
        assert!(c.log_scale.abs() < 1e-12);
        assert!((fp - 1.0).abs() < 1e-10);
        assert!((fp / 2.0 - 0.5).abs() < 1e-10);
    }

    #[test]
    fn index_checked() {
        let s = state_from(vec![vec![0.0, 0.0]; 2], SquareMatrix::identity(2), 0.0, 1.0);
        assert!(matches!(grad_f_mu(&s, 2, 0), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(hess_f_mu(&s, 0, 1), Err(Error::IndexOutOfRange(_))));
    }
}
