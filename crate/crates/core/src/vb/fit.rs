use std::fmt;

use crate::error::{Error, Result};
use crate::model::{DynamicNetwork, Hyperparameters};
use crate::scalar::Scalar;

use super::init::{init_mds, init_random};
use super::kernel::Coupling;
use super::objective::objective_blocks_with;
use crate::linalg::SquareMatrix;
use super::state::{FitOptions, FitResult, InitStrategy, VariationalState};
use super::updates::{update_mu_with, update_psi2_with, update_sigma_with, update_xi_with};

#[derive(Debug)]
pub enum FitError<T> {
    /// Bad input: shapes, hyperparameters or options.
    Invalid(Error),
    /// The objective became non-finite. `partial` holds the last state whose
    /// objective was finite, with `converged = false`.
    Diverged { reason: String, partial: Box<FitResult<T>> },
}

impl<T: fmt::Debug> fmt::Display for FitError<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::Invalid(e) => write!(f, "{e}"),
            FitError::Diverged { reason, partial } => {
                write!(f, "fit diverged after {} sweeps: {reason}", partial.iterations)
            }
        }
    }
}

impl<T: fmt::Debug> std::error::Error for FitError<T> {}

impl<T> From<Error> for FitError<T> {
    fn from(e: Error) -> Self {
        FitError::Invalid(e)
    }
}

/// One coordinate sweep: `Sigma`, then every `mu_it` with `t` outer and `i`
/// inner, then `xi_tilde`, then `psi2_tilde`. Each block sees the latest
/// values of the blocks before it.
///
/// A `mu` system that is not positive definite is retried with the
/// convexified Hessian.
pub fn sweep<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
    damping: T,
    parallel: bool,
) -> Result<VariationalState<T>> {
    hyper.validate()?;
    state.check_shape(net, hyper)?;
    let mut next = state.clone();
    next.sigma = update_sigma_with(net, &next, hyper, parallel)?;

    let coupling = Coupling::from_state(&next)?;
    for t in 0..next.num_times() {
        for i in 0..next.n() {
            let mu = match update_mu_with(net, &next, hyper, &coupling, i, t, damping, false) {
                Ok(mu) => mu,
                Err(Error::Singular(_)) => update_mu_with(net, &next, hyper, &coupling, i, t, damping, true)?,
                Err(e) => return Err(e),
            };
            next.mu_mut(i, t).copy_from_slice(&mu);
        }
    }

    let xi = update_xi_with(net, &next, hyper, parallel)?;
    next.set_xi_tilde(xi);
    next.psi2_tilde = update_psi2_with(net, &next, hyper, parallel)?;
    next.validate()?;
    Ok(next)
}

fn flatten<T: Scalar>(s: &VariationalState<T>) -> Vec<T> {
    let mut v = s.means().as_flat().to_vec();
    v.extend_from_slice(s.sigma.as_row_major());
    v.push(s.xi_tilde);
    v.push(s.psi2_tilde);
    v
}

fn unflatten<T: Scalar>(like: &VariationalState<T>, v: &[T]) -> Result<VariationalState<T>> {
    let m = like.means().as_flat().len();
    let d = like.d();
    let mut out = like.clone();
    out.means_mut().as_flat_mut().copy_from_slice(&v[..m]);
    out.sigma = SquareMatrix::from_row_major(d, v[m..m + d * d].to_vec())?;
    out.set_xi_tilde(v[m + d * d]);
    out.psi2_tilde = v[m + d * d + 1];
    out.validate()?;
    Ok(out)
}

/// Squared extrapolation from `x0` through two sweeps `x1`, `x2`:
/// `x0 - 2a r + a^2 v` with `r = x1 - x0`, `v = x2 - 2 x1 + x0` and
/// `a = -|r| / |v|`. The step is halved toward `a = -1` (which gives `x2`)
/// until the jump lands on a valid state.
fn squared_extrapolation<T: Scalar>(
    x0: &VariationalState<T>,
    x1: &VariationalState<T>,
    x2: &VariationalState<T>,
) -> Option<VariationalState<T>> {
    let (f0, f1, f2) = (flatten(x0), flatten(x1), flatten(x2));
    let r: Vec<T> = f1.iter().zip(&f0).map(|(&a, &b)| a - b).collect();
    let v: Vec<T> = f2.iter().zip(&f1).zip(&r).map(|((&a, &b), &c)| a - b - c).collect();
    let norm = |x: &[T]| x.iter().fold(T::zero(), |acc, &y| acc + y * y).sqrt();
    let (nr, nv) = (norm(&r), norm(&v));
    if !(nv > T::zero()) {
        return None;
    }
    let mut a = -(nr / nv);
    for _ in 0..20 {
        if a >= -T::one() {
            return None;
        }
        let jump: Vec<T> = f0
            .iter()
            .zip(&r)
            .zip(&v)
            .map(|((&x, &ri), &vi)| x - T::of(2.0) * a * ri + a * a * vi)
            .collect();
        if let Ok(state) = unflatten(x2, &jump) {
            return Some(state);
        }
        a = (a - T::one()) * T::of(0.5);
    }
    None
}

/// Objective after scaling every mean by `c` and re-solving `xi_tilde`.
fn rescaled<T: Scalar>(
    net: &DynamicNetwork,
    state: &VariationalState<T>,
    hyper: &Hyperparameters<T>,
    c: T,
    parallel: bool,
    objective: &impl Fn(&VariationalState<T>) -> Result<T>,
) -> Option<(VariationalState<T>, T)> {
    let mut out = state.clone();
    for x in out.means_mut().as_flat_mut() {
        *x = *x * c;
    }
    for _ in 0..2 {
        let xi = update_xi_with(net, &out, hyper, parallel).ok()?;
        out.set_xi_tilde(xi);
    }
    let value = objective(&out).ok()?;
    value.is_finite().then_some((out, value))
}

const SCALE_PROBE: f64 = 1e-3;

/// Moves along the joint dilation of the means and the matching shift of
/// `xi_tilde`, the direction in which coordinate sweeps converge slowest.
/// The scale comes from a parabola through `c = 1 - h, 1, 1 + h`; the move
/// is kept only if it lowers the objective.
fn rescale_step<T: Scalar>(
    net: &DynamicNetwork,
    state: VariationalState<T>,
    value: T,
    hyper: &Hyperparameters<T>,
    parallel: bool,
    objective: &impl Fn(&VariationalState<T>) -> Result<T>,
) -> (VariationalState<T>, T) {
    let h = T::of(SCALE_PROBE);
    let Some((_, centre)) = rescaled(net, &state, hyper, T::one(), parallel, objective) else {
        return (state, value);
    };
    let (Some((_, lo)), Some((_, hi))) = (
        rescaled(net, &state, hyper, T::one() - h, parallel, objective),
        rescaled(net, &state, hyper, T::one() + h, parallel, objective),
    ) else {
        return (state, value);
    };
    let curvature = lo - T::of(2.0) * centre + hi;
    if !(curvature > T::zero()) {
        return (state, value);
    }
    let step = (-(h * (hi - lo)) / (T::of(2.0) * curvature)).max(-T::of(0.5)).min(T::of(0.5));
    match rescaled(net, &state, hyper, T::one() + step, parallel, objective) {
        Some((moved, v)) if v < value => (moved, v),
        _ => (state, value),
    }
}

fn initial_state<T: Scalar>(
    net: &DynamicNetwork,
    hyper: &Hyperparameters<T>,
    opts: &FitOptions<T>,
) -> Result<VariationalState<T>> {
    match &opts.init {
        InitStrategy::Random { scale } => init_random(net.n(), net.num_times(), hyper, opts.seed, *scale),
        InitStrategy::Mds => init_mds(net, hyper),
        InitStrategy::Explicit(state) => Ok((**state).clone()),
    }
}

/// Runs coordinate sweeps from the initialization in `opts.init` until the
/// relative change of the objective drops below `opts.rel_tol`.
pub fn fit<T: Scalar>(
    net: &DynamicNetwork,
    hyper: &Hyperparameters<T>,
    opts: &FitOptions<T>,
) -> std::result::Result<FitResult<T>, FitError<T>> {
    hyper.validate()?;
    opts.validate()?;
    let state = initial_state(net, hyper, opts)?;
    fit_from(net, hyper, opts, state)
}

/// [`fit`] from an explicit starting state; `opts.init` is ignored.
pub fn fit_from<T: Scalar>(
    net: &DynamicNetwork,
    hyper: &Hyperparameters<T>,
    opts: &FitOptions<T>,
    state: VariationalState<T>,
) -> std::result::Result<FitResult<T>, FitError<T>> {
    hyper.validate()?;
    opts.validate()?;
    if net.n() < 2 {
        return Err(Error::InvalidParameter("fitting needs at least two nodes".into()).into());
    }
    state.validate()?;
    state.check_shape(net, hyper)?;

    let objective = |s: &VariationalState<T>| objective_blocks_with(net, s, hyper, opts.parallel).map(|b| b.total());
    let start = objective(&state)?;
    if !start.is_finite() {
        return Err(Error::NonFinite("objective at the initial state".into()).into());
    }

    let mut state = state;
    let mut trace = vec![start];
    let mut damping = opts.damping;
    let mut converged = false;

    let diverged = |state: VariationalState<T>, trace: Vec<T>, reason: String| {
        let iterations = trace.len() - 1;
        let auc_per_time = crate::eval::in_sample_auc(net, &state.plug_in()).unwrap_or_default();
        FitError::Diverged {
            reason,
            partial: Box::new(FitResult {
                state,
                objective_trace: trace,
                iterations,
                converged: false,
                auc_per_time,
            }),
        }
    };

    while trace.len() <= opts.max_iters {
        let prev = *trace.last().expect("trace is never empty");
        let attempt = |from: &VariationalState<T>, damping: T| -> std::result::Result<(VariationalState<T>, T), String> {
            let next = sweep(net, from, hyper, damping, opts.parallel).map_err(|e| e.to_string())?;
            let value = objective(&next).map_err(|e| e.to_string())?;
            if value.is_finite() {
                Ok((next, value))
            } else {
                Err("objective is not finite".to_string())
            }
        };
        let (mut next, mut value) = match attempt(&state, damping) {
            Ok(r) => r,
            Err(reason) => return Err(diverged(state, trace, reason)),
        };
        if value - prev > T::of(0.1) * prev.abs() {
            damping = damping * T::of(0.5);
            log::debug!("objective rose from {prev} to {value}; retrying sweep with damping {damping}");
            match attempt(&state, damping) {
                Ok((s, v)) => {
                    next = s;
                    value = v;
                }
                Err(reason) => return Err(diverged(state, trace, reason)),
            }
        }
        if opts.extrapolate && value <= prev {
            if let Ok((second, second_value)) = attempt(&next, damping) {
                let mut chosen = (second.clone(), second_value);
                if let Some(jump) = squared_extrapolation(&state, &next, &second) {
                    if let Ok((landed, landed_value)) = attempt(&jump, damping) {
                        if landed_value < second_value {
                            chosen = (landed, landed_value);
                        }
                    }
                }
                if chosen.1 <= value {
                    (next, value) = chosen;
                }
            }
            (next, value) = rescale_step(net, next, value, hyper, opts.parallel, &objective);
        }
        state = next;
        trace.push(value);
        let change = (value - prev).abs() / prev.abs();
        log::trace!("sweep {}: objective {value}, relative change {change}", trace.len() - 1);
        if change < opts.rel_tol {
            converged = true;
            break;
        }
    }

    let iterations = trace.len() - 1;
    let auc_per_time = crate::eval::in_sample_auc(net, &state.plug_in())?;
    Ok(FitResult {
        state,
        objective_trace: trace,
        iterations,
        converged,
        auc_per_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> DynamicNetwork {
        DynamicNetwork::new(2, 1, true, vec![vec![(0, 1), (1, 0)]]).unwrap()
    }

    #[test]
    fn trace_length_matches_iterations() {
        let hyper = Hyperparameters::<f64>::friendship_defaults();
        let opts = FitOptions { max_iters: 3, rel_tol: 1e-300, ..FitOptions::default() };
        let r = fit(&toy(), &hyper, &opts).unwrap();
        assert_eq!(r.iterations, 3);
        assert_eq!(r.objective_trace.len(), 4);
        assert!(!r.converged);
    }

    #[test]
    fn complete_toy_decreases_objective() {
        let hyper = Hyperparameters::<f64>::friendship_defaults();
        let r = fit(&toy(), &hyper, &FitOptions::default()).unwrap();
        assert!(r.final_objective() <= r.objective_trace[0]);
        assert!(r.converged);
        let k = r.objective_trace.len();
        let last = (r.objective_trace[k - 1] - r.objective_trace[k - 2]).abs() / r.objective_trace[k - 2].abs();
        assert!(last < 1e-6);
    }

    #[test]
    fn rejects_single_node() {
        let net = DynamicNetwork::new(1, 1, true, vec![vec![]]).unwrap();
        let hyper = Hyperparameters::<f64>::friendship_defaults();
        assert!(matches!(fit(&net, &hyper, &FitOptions::default()), Err(FitError::Invalid(_))));
    }
}
