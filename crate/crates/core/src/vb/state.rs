use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::model::{DynamicNetwork, Hyperparameters, LatentConfiguration};
use crate::scalar::Scalar;

use super::VARIANCE_FLOOR;

/// Variational parameters: means `mu_it`, shared covariance `Sigma`, and the
/// Gaussian factor `N(xi_tilde, psi2_tilde)` of the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState<T> {
    /// Means in `[t][i][k]` layout; `mu.beta` mirrors `xi_tilde`.
    mu: LatentConfiguration<T>,
    pub sigma: SquareMatrix<T>,
    pub xi_tilde: T,
    pub psi2_tilde: T,
}

impl<T: Scalar> VariationalState<T> {
    pub fn new(mu: LatentConfiguration<T>, sigma: SquareMatrix<T>, xi_tilde: T, psi2_tilde: T) -> Result<Self> {
        let mut mu = mu;
        mu.beta = xi_tilde;
        let state = Self {
            mu,
            sigma,
            xi_tilde,
            psi2_tilde,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma.dim() != self.mu.d() {
            return Err(Error::Dimension(format!(
                "Sigma is {0}x{0} but means have dimension {1}",
                self.sigma.dim(),
                self.mu.d()
            )));
        }
        if !self.sigma.is_finite() || !self.xi_tilde.is_finite() || !self.psi2_tilde.is_finite() {
            return Err(Error::NonFinite("variational state".into()));
        }
        self.mu.check_finite()?;
        let floor = T::of(VARIANCE_FLOOR);
        let tol = T::of(1e-12) * (T::one() + self.sigma.frobenius_norm());
        if self.sigma.max_asymmetry() > tol {
            return Err(Error::NotSpd("Sigma is not symmetric".into()));
        }
        // relative slack so that a floored matrix passes after round-off
        if self.sigma.min_eigenvalue() < floor * T::of(1.0 - 1e-6) {
            return Err(Error::NotSpd(format!(
                "Sigma has an eigenvalue below {VARIANCE_FLOOR}"
            )));
        }
        if self.psi2_tilde < floor * T::of(1.0 - 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "psi2_tilde = {} is below {VARIANCE_FLOOR}",
                self.psi2_tilde
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.mu.n()
    }

    #[inline]
    pub fn num_times(&self) -> usize {
        self.mu.num_times()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.mu.d()
    }

    #[inline]
    pub fn mu(&self, i: usize, t: usize) -> &[T] {
        self.mu.position(i, t)
    }

    #[inline]
    pub fn mu_mut(&mut self, i: usize, t: usize) -> &mut [T] {
        self.mu.position_mut(i, t)
    }

    pub fn means(&self) -> &LatentConfiguration<T> {
        &self.mu
    }

    pub fn means_mut(&mut self) -> &mut LatentConfiguration<T> {
        &mut self.mu
    }

    pub fn set_xi_tilde(&mut self, xi: T) {
        self.xi_tilde = xi;
        self.mu.beta = xi;
    }

    /// Posterior means as a latent configuration with `beta = xi_tilde`.
    pub fn plug_in(&self) -> LatentConfiguration<T> {
        let mut cfg = self.mu.clone();
        cfg.beta = self.xi_tilde;
        cfg
    }

    pub fn cast<U: Scalar>(&self) -> VariationalState<U> {
        VariationalState {
            mu: self.mu.cast(),
            sigma: self.sigma.cast(),
            xi_tilde: U::of(self.xi_tilde.as_f64()),
            psi2_tilde: U::of(self.psi2_tilde.as_f64()),
        }
    }

    pub(crate) fn check_shape(&self, net: &DynamicNetwork, hyper: &Hyperparameters<T>) -> Result<()> {
        if self.n() != net.n() || self.num_times() != net.num_times() {
            return Err(Error::Dimension(format!(
                "state is {}x{} but network is {}x{}",
                self.n(),
                self.num_times(),
                net.n(),
                net.num_times()
            )));
        }
        if self.d() != hyper.d {
            return Err(Error::Dimension(format!(
                "state dimension {} differs from d={}",
                self.d(),
                hyper.d
            )));
        }
        Ok(())
    }

    pub(crate) fn check_index(&self, i: usize, t: usize) -> Result<()> {
        if i >= self.n() || t >= self.num_times() {
            return Err(Error::IndexOutOfRange(format!(
                "(i={i}, t={t}) outside n={}, T={}",
                self.n(),
                self.num_times()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy<T> {
    /// Means drawn i.i.d. from `N(0, scale^2)` with the fit seed.
    Random { scale: T },
    /// Classical MDS of shortest-path distances in the aggregated graph.
    Mds,
    Explicit(Box<VariationalState<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions<T> {
    pub max_iters: usize,
    /// Stop once the relative change of the objective falls below this.
    pub rel_tol: T,
    /// Convex weight on the Newton step for `mu`; 1 takes the full step.
    pub damping: T,
    pub init: InitStrategy<T>,
    pub seed: u64,
    /// Accelerate each iteration with a squared extrapolation step built
    /// from two consecutive sweeps, kept only when it lowers the objective.
    /// Fixed points of the sweep are unaffected.
    pub extrapolate: bool,
    /// Evaluate pair reductions on the rayon pool. Results are bit-identical
    /// to the serial path because partial sums are combined in a fixed order.
    pub parallel: bool,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 500,
            rel_tol: T::of(1e-6),
            damping: T::one(),
            init: InitStrategy::Random { scale: T::one() },
            seed: 0,
            extrapolate: true,
            parallel: false,
        }
    }
}

impl<T: Scalar> FitOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > T::zero()) {
            return Err(Error::InvalidParameter("rel_tol must be positive".into()));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(Error::InvalidParameter("damping must lie in (0, 1]".into()));
        }
        if let InitStrategy::Random { scale } = self.init {
            if !(scale >= T::zero()) || !scale.is_finite() {
                return Err(Error::InvalidParameter("random init scale must be finite and >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub state: VariationalState<T>,
    /// Objective before the first sweep followed by one value per sweep.
    pub objective_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// In-sample AUC per snapshot; `None` when a snapshot has no edges or
    /// every pair is an edge.
    pub auc_per_time: Vec<Option<f64>>,
}

impl<T: Scalar> FitResult<T> {
    pub fn final_objective(&self) -> T {
        *self.objective_trace.last().expect("trace is never empty")
    }

    pub fn mean_auc(&self) -> Option<f64> {
        crate::eval::mean_defined(&self.auc_per_time)
    }
}

