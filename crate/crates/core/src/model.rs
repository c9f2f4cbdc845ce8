//! Dynamic latent space model: data containers and exact log-densities.
//!
//! Edge probabilities follow `logit P(Y_ijt = 1) = beta - ||X_it - X_jt||^2`;
//! latent trajectories start from `N(0, sigma2 I)` and move by Gaussian
//! random-walk steps `N(0, tau2 I)`. Snapshot indices are 0-based in the API
//! and 1-based only in the text file format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{log1p_exp, logistic, sq_dist, sq_norm, Scalar};

/// Time series of binary networks on a fixed node set.
///
/// Undirected networks are stored symmetrized: both orientations of every
/// edge are present, and every likelihood sum still runs over ordered pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicNetwork {
    n: usize,
    num_times: usize,
    directed: bool,
    edges: Vec<Vec<(usize, usize)>>,
    adjacency: Vec<u64>,
}

impl DynamicNetwork {
    /// Builds a network from per-snapshot edge lists.
    ///
    /// For undirected networks each unordered pair may be listed in either
    /// orientation, but only once.
    pub fn new(
        n: usize,
        num_times: usize,
        directed: bool,
        snapshots: Vec<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if n == 0 || num_times == 0 {
            return Err(Error::InvalidParameter(format!(
                "network needs n >= 1 and T >= 1 (got n={n}, T={num_times})"
            )));
        }
        if snapshots.len() != num_times {
            return Err(Error::Dimension(format!(
                "{} edge lists supplied for T={num_times}",
                snapshots.len()
            )));
        }
        let mut net = Self::empty(n, num_times, directed);
        for (t, list) in snapshots.into_iter().enumerate() {
            for (src, dst) in list {
                net.insert_edge(t, src, dst)?;
            }
        }
        net.finish();
        Ok(net)
    }

    pub(crate) fn empty(n: usize, num_times: usize, directed: bool) -> Self {
        let bits = num_times * n * n;
        Self {
            n,
            num_times,
            directed,
            edges: vec![Vec::new(); num_times],
            adjacency: vec![0; bits.div_ceil(64)],
        }
    }

    /// Inserts one edge, validating indices, self-loops and duplicates.
    pub(crate) fn insert_edge(&mut self, t: usize, src: usize, dst: usize) -> Result<()> {
        if t >= self.num_times {
            return Err(Error::IndexOutOfRange(format!(
                "snapshot {} outside [1, {}]",
                t + 1,
                self.num_times
            )));
        }
        if src >= self.n || dst >= self.n {
            return Err(Error::IndexOutOfRange(format!(
                "edge ({src}, {dst}) has a node outside [0, {})",
                self.n
            )));
        }
        if src == dst {
            return Err(Error::InvalidParameter(format!("self-loop on node {src}")));
        }
        if self.has_edge(t, src, dst) {
            return Err(Error::InvalidParameter(format!(
                "duplicate edge ({src}, {dst}) in snapshot {}",
                t + 1
            )));
        }
        self.set_bit(t, src, dst);
        self.edges[t].push((src, dst));
        if !self.directed {
            self.set_bit(t, dst, src);
            self.edges[t].push((dst, src));
        }
        Ok(())
    }

    pub(crate) fn finish(&mut self) {
        for list in &mut self.edges {
            list.sort_unstable();
        }
    }

    #[inline]
    fn bit_index(&self, t: usize, i: usize, j: usize) -> usize {
        (t * self.n + i) * self.n + j
    }

    fn set_bit(&mut self, t: usize, i: usize, j: usize) {
        let b = self.bit_index(t, i, j);
        self.adjacency[b / 64] |= 1 << (b % 64);
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn num_times(&self) -> usize {
        self.num_times
    }

    #[inline]
    pub fn directed(&self) -> bool {
        self.directed
    }

    /// `Y_ijt`, with `t` 0-based.
    #[inline]
    pub fn has_edge(&self, t: usize, i: usize, j: usize) -> bool {
        let b = self.bit_index(t, i, j);
        self.adjacency[b / 64] >> (b % 64) & 1 == 1
    }

    #[inline]
    pub(crate) fn y<T: Scalar>(&self, t: usize, i: usize, j: usize) -> T {
        if self.has_edge(t, i, j) {
            T::one()
        } else {
            T::zero()
        }
    }

    /// All ordered pairs present in snapshot `t`, sorted.
    pub fn edges(&self, t: usize) -> &[(usize, usize)] {
        &self.edges[t]
    }

    /// Edges as listed in a file: every ordered pair for directed networks,
    /// each unordered pair once (`src < dst`) otherwise.
    pub fn listed_edges(&self, t: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let directed = self.directed;
        self.edges[t]
            .iter()
            .copied()
            .filter(move |&(s, d)| directed || s < d)
    }

    /// Number of ordered pairs `(i, j)` with `Y_ijt = 1` in snapshot `t`.
    pub fn snapshot_edge_count(&self, t: usize) -> usize {
        self.edges[t].len()
    }

    /// `sum_t sum_{i != j} Y_ijt`.
    pub fn total_edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.total_edge_count() as f64 / (self.num_times * self.n * (self.n - 1)) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters<T> {
    /// Latent dimension.
    pub d: usize,
    /// Variance of the initial positions.
    pub sigma2: T,
    /// Random-walk transition variance.
    pub tau2: T,
    /// Prior mean of the intercept.
    pub xi: T,
    /// Prior variance of the intercept.
    pub psi2: T,
    /// Weight of the likelihood relative to the prior discrepancy; 1 gives standard VB.
    pub alpha: T,
}

impl<T: Scalar> Hyperparameters<T> {
    pub fn new(d: usize, sigma2: T, tau2: T, xi: T, psi2: T, alpha: T) -> Result<Self> {
        let h = Self {
            d,
            sigma2,
            tau2,
            xi,
            psi2,
            alpha,
        };
        h.validate()?;
        Ok(h)
    }

    /// Settings used for the friendship-network analysis: `N(0, 2)` intercept
    /// prior, `sigma2 = 0.5`, `tau2 = 0.1`, two latent dimensions.
    pub fn friendship_defaults() -> Self {
        Self {
            d: 2,
            sigma2: T::of(0.5),
            tau2: T::of(0.1),
            xi: T::zero(),
            psi2: T::of(2.0),
            alpha: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("latent dimension must be positive".into()));
        }
        for (name, v) in [("sigma2", self.sigma2), ("tau2", self.tau2), ("psi2", self.psi2)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.xi.is_finite() {
            return Err(Error::NonFinite("prior mean xi".into()));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Hyperparameters<U> {
        Hyperparameters {
            d: self.d,
            sigma2: U::of(self.sigma2.as_f64()),
            tau2: U::of(self.tau2.as_f64()),
            xi: U::of(self.xi.as_f64()),
            psi2: U::of(self.psi2.as_f64()),
            alpha: U::of(self.alpha.as_f64()),
        }
    }
}

/// Latent positions `X_it` for every node and snapshot plus the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentConfiguration<T> {
    n: usize,
    num_times: usize,
    d: usize,
    /// Layout `[t][i][k]`, so one snapshot is a contiguous `n * d` block.
    positions: Vec<T>,
    pub beta: T,
}

impl<T: Scalar> LatentConfiguration<T> {
    pub fn zeros(n: usize, num_times: usize, d: usize) -> Self {
        Self {
            n,
            num_times,
            d,
            positions: vec![T::zero(); n * num_times * d],
            beta: T::zero(),
        }
    }

    /// `positions` uses the `[t][i][k]` layout.
    pub fn from_flat(n: usize, num_times: usize, d: usize, positions: Vec<T>, beta: T) -> Result<Self> {
        if positions.len() != n * num_times * d {
            return Err(Error::Dimension(format!(
                "expected {} coordinates for n={n}, T={num_times}, d={d}, got {}",
                n * num_times * d,
                positions.len()
            )));
        }
        let cfg = Self {
            n,
            num_times,
            d,
            positions,
            beta,
        };
        cfg.check_finite()?;
        Ok(cfg)
    }

    /// Builds from nested `[i][t][k]` arrays (node-major, as in result files).
    pub fn from_nested(nested: &[Vec<Vec<T>>], beta: T) -> Result<Self> {
        let n = nested.len();
        let num_times = nested.first().map_or(0, Vec::len);
        let d = nested.first().and_then(|v| v.first()).map_or(0, Vec::len);
        let mut cfg = Self::zeros(n, num_times, d);
        cfg.beta = beta;
        for (i, traj) in nested.iter().enumerate() {
            if traj.len() != num_times {
                return Err(Error::Dimension(format!("node {i} has {} snapshots, expected {num_times}", traj.len())));
            }
            for (t, x) in traj.iter().enumerate() {
                if x.len() != d {
                    return Err(Error::Dimension(format!("position ({i}, {t}) has {} coordinates, expected {d}", x.len())));
                }
                cfg.position_mut(i, t).copy_from_slice(x);
            }
        }
        cfg.check_finite()?;
        Ok(cfg)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<T>>> {
        (0..self.n)
            .map(|i| (0..self.num_times).map(|t| self.position(i, t).to_vec()).collect())
            .collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        if !self.beta.is_finite() || self.positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("latent configuration".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn num_times(&self) -> usize {
        self.num_times
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn position(&self, i: usize, t: usize) -> &[T] {
        let o = (t * self.n + i) * self.d;
        &self.positions[o..o + self.d]
    }

    #[inline]
    pub fn position_mut(&mut self, i: usize, t: usize) -> &mut [T] {
        let o = (t * self.n + i) * self.d;
        &mut self.positions[o..o + self.d]
    }

    /// All `n * d` coordinates of snapshot `t`.
    pub fn snapshot(&self, t: usize) -> &[T] {
        let len = self.n * self.d;
        &self.positions[t * len..(t + 1) * len]
    }

    pub fn as_flat(&self) -> &[T] {
        &self.positions
    }

    pub fn as_flat_mut(&mut self) -> &mut [T] {
        &mut self.positions
    }

    pub fn cast<U: Scalar>(&self) -> LatentConfiguration<U> {
        LatentConfiguration {
            n: self.n,
            num_times: self.num_times,
            d: self.d,
            positions: self.positions.iter().map(|x| U::of(x.as_f64())).collect(),
            beta: U::of(self.beta.as_f64()),
        }
    }

    pub(crate) fn check_against(&self, net: &DynamicNetwork) -> Result<()> {
        if self.n != net.n() || self.num_times != net.num_times() {
            return Err(Error::Dimension(format!(
                "latent configuration is {}x{} but network is {}x{}",
                self.n,
                self.num_times,
                net.n(),
                net.num_times()
            )));
        }
        Ok(())
    }
}

/// `sigma(beta - ||x_i - x_j||^2)`.
pub fn link_probability<T: Scalar>(beta: T, x_i: &[T], x_j: &[T]) -> Result<T> {
    if x_i.len() != x_j.len() {
        return Err(Error::Dimension(format!(
            "position vectors have lengths {} and {}",
            x_i.len(),
            x_j.len()
        )));
    }
    if !beta.is_finite() || x_i.iter().chain(x_j).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("link_probability input".into()));
    }
    Ok(logistic(beta - sq_dist(x_i, x_j)))
}

/// Log of the edge likelihood, summed over snapshots and ordered pairs.
pub fn log_likelihood<T: Scalar>(net: &DynamicNetwork, latent: &LatentConfiguration<T>) -> Result<T> {
    latent.check_against(net)?;
    let mut total = T::zero();
    for t in 0..net.num_times() {
        total = total + snapshot_log_likelihood(net, latent, latent.beta, t);
    }
    Ok(total)
}

pub(crate) fn snapshot_log_likelihood<T: Scalar>(
    net: &DynamicNetwork,
    latent: &LatentConfiguration<T>,
    beta: T,
    t: usize,
) -> T {
    let n = net.n();
    let mut total = T::zero();
    for i in 0..n {
        let xi = latent.position(i, t);
        for j in 0..n {
            if i == j {
                continue;
            }
            let eta = beta - sq_dist(xi, latent.position(j, t));
            total = total + net.y::<T>(t, i, j) * eta - log1p_exp(eta);
        }
    }
    total
}

/// Likelihood terms that involve node `i` at snapshot `t`: both orientations
/// of every pair `(i, j)`.
pub(crate) fn node_log_likelihood<T: Scalar>(
    net: &DynamicNetwork,
    latent: &LatentConfiguration<T>,
    x: &[T],
    i: usize,
    t: usize,
) -> T {
    let beta = latent.beta;
    let mut total = T::zero();
    for j in 0..net.n() {
        if j == i {
            continue;
        }
        let eta = beta - sq_dist(x, latent.position(j, t));
        let y = net.y::<T>(t, i, j) + net.y::<T>(t, j, i);
        total = total + y * eta - T::of(2.0) * log1p_exp(eta);
    }
    total
}

/// Log density of an isotropic Gaussian `N(mean, var I)` at `x`, including
/// its normalizing constant.
pub(crate) fn isotropic_gaussian_log_density<T: Scalar>(x: &[T], mean: Option<&[T]>, var: T) -> T {
    let d = T::of(x.len() as f64);
    let q = match mean {
        Some(m) => sq_dist(x, m),
        None => sq_norm(x),
    };
    -T::of(0.5) * d * (T::of(2.0) * T::PI() * var).ln() - q / (T::of(2.0) * var)
}

pub fn log_prior_latent<T: Scalar>(latent: &LatentConfiguration<T>, hyper: &Hyperparameters<T>) -> Result<T> {
    hyper.validate()?;
    if latent.d() != hyper.d {
        return Err(Error::Dimension(format!(
            "latent dimension {} differs from hyperparameter d={}",
            latent.d(),
            hyper.d
        )));
    }
    let mut total = T::zero();
    for i in 0..latent.n() {
        total = total + isotropic_gaussian_log_density(latent.position(i, 0), None, hyper.sigma2);
        for t in 1..latent.num_times() {
            total = total
                + isotropic_gaussian_log_density(
                    latent.position(i, t),
                    Some(latent.position(i, t - 1)),
                    hyper.tau2,
                );
        }
    }
    Ok(total)
}

/// `log N(beta; xi, psi2)`.
pub fn log_prior_beta<T: Scalar>(beta: T, hyper: &Hyperparameters<T>) -> T {
    let diff = beta - hyper.xi;
    -T::of(0.5) * (T::of(2.0) * T::PI() * hyper.psi2).ln() - diff * diff / (T::of(2.0) * hyper.psi2)
}

/// Unnormalized log posterior of positions and intercept.
pub fn log_joint<T: Scalar>(
    net: &DynamicNetwork,
    latent: &LatentConfiguration<T>,
    hyper: &Hyperparameters<T>,
) -> Result<T> {
    Ok(log_likelihood(net, latent)? + log_prior_latent(latent, hyper)? + log_prior_beta(latent.beta, hyper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64, n: usize, num_times: usize, d: usize) -> (DynamicNetwork, LatentConfiguration<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut snaps = vec![Vec::new(); num_times];
        for (t, snap) in snaps.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.random::<f64>() < 0.3 + 0.05 * t as f64 {
                        snap.push((i, j));
                    }
                }
            }
        }
        let net = DynamicNetwork::new(n, num_times, true, snaps).unwrap();
        let flat = (0..n * num_times * d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let latent = LatentConfiguration::from_flat(n, num_times, d, flat, rng.random_range(-1.0..1.0)).unwrap();
        (net, latent)
    }

    #[test]
    fn link_probability_examples() {
        assert_eq!(link_probability(0.0, &[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.5);
        assert_eq!(link_probability(1.0, &[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.5);
        // sigma(-2.5) to seven digits, computed independently as 1/(1+e^2.5)
        let p: f64 = link_probability(-1.5, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((p - 0.0758582).abs() < 5e-8, "{p}");
    }

    #[test]
    fn link_probability_rejects_bad_input() {
        assert!(matches!(link_probability(0.0, &[1.0], &[1.0, 2.0]), Err(Error::Dimension(_))));
        assert!(matches!(link_probability(f64::NAN, &[1.0], &[2.0]), Err(Error::NonFinite(_))));
        assert!(matches!(link_probability(0.0, &[f64::INFINITY], &[2.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn link_probability_monotone_on_grid() {
        let origin = [0.0, 0.0];
        for b in -3..=3 {
            let beta = b as f64 * 0.7;
            let mut prev = f64::INFINITY;
            for k in 0..40 {
                let p = link_probability(beta, &[k as f64 * 0.1, 0.0], &origin).unwrap();
                assert!(p < prev || (k == 0));
                prev = p;
            }
        }
        for k in 0..10 {
            let x = [k as f64 * 0.3, 0.2];
            let mut prev = 0.0;
            for b in -10..10 {
                let p = link_probability(b as f64 * 0.5, &x, &origin).unwrap();
                assert!(p > prev);
                prev = p;
            }
        }
    }

    #[test]
    fn log_likelihood_two_non_edges() {
        let net = DynamicNetwork::new(2, 1, true, vec![vec![]]).unwrap();
        let latent = LatentConfiguration::<f64>::zeros(2, 1, 2);
        let ll = log_likelihood(&net, &latent).unwrap();
        assert!((ll - 2.0 * 0.5_f64.ln()).abs() < 1e-12);
        assert!((ll + 1.386294).abs() < 1e-6);
    }

    #[test]
    fn log_likelihood_single_node_is_zero() {
        let net = DynamicNetwork::new(1, 4, true, vec![vec![]; 4]).unwrap();
        let latent = LatentConfiguration::<f64>::zeros(1, 4, 2);
        assert_eq!(log_likelihood(&net, &latent).unwrap(), 0.0);
    }

    #[test]
    fn log_likelihood_matches_pair_enumeration() {
        let (net, latent) = random_instance(3, 4, 2, 2);
        let mut oracle = 0.0;
        for t in 0..2 {
            for i in 0..4 {
                for j in 0..4 {
                    if i == j {
                        continue;
                    }
                    let p = 1.0 / (1.0 + (-(latent.beta - sq_dist(latent.position(i, t), latent.position(j, t)))).exp());
                    oracle += if net.has_edge(t, i, j) { p.ln() } else { (1.0 - p).ln() };
                }
            }
        }
        let ll = log_likelihood(&net, &latent).unwrap();
        assert!((ll - oracle).abs() < 1e-10, "{ll} vs {oracle}");
        assert!(ll < 0.0);
    }

    #[test]
    fn log_likelihood_shape_mismatch() {
        let (net, _) = random_instance(1, 4, 2, 2);
        let latent = LatentConfiguration::<f64>::zeros(5, 2, 2);
        assert!(matches!(log_likelihood(&net, &latent), Err(Error::Dimension(_))));
    }

    #[test]
    fn prior_at_mode_of_bivariate_standard_normal() {
        let latent = LatentConfiguration::<f64>::zeros(1, 1, 2);
        let hyper = Hyperparameters::new(2, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let lp = log_prior_latent(&latent, &hyper).unwrap();
        assert!((lp + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert!((lp + 1.837877).abs() < 1e-6);
    }

    #[test]
    fn constant_trajectory_leaves_only_normalizers() {
        let mut latent = LatentConfiguration::<f64>::zeros(1, 3, 2);
        for t in 0..3 {
            latent.position_mut(0, t).copy_from_slice(&[0.4, -0.2]);
        }
        let tau2 = 1e-6;
        let hyper = Hyperparameters::new(2, 1.0, tau2, 0.0, 1.0, 1.0).unwrap();
        let lp = log_prior_latent(&latent, &hyper).unwrap();
        let initial = -(2.0 * std::f64::consts::PI).ln() - 0.2 / 2.0;
        let normalizers = 2.0 * -(2.0 * std::f64::consts::PI * tau2).ln();
        assert!((lp - initial - normalizers).abs() < 1e-9);
    }

    #[test]
    fn prior_matches_per_factor_densities() {
        let (_, latent) = random_instance(9, 3, 4, 2);
        let hyper = Hyperparameters::new(2, 0.7, 0.2, 0.0, 1.0, 1.0).unwrap();
        let gauss = |x: &[f64], m: &[f64], v: f64| -> f64 {
            x.iter()
                .zip(m)
                .map(|(a, b)| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (a - b).powi(2) / (2.0 * v))
                .sum()
        };
        let mut oracle = 0.0;
        for i in 0..3 {
            oracle += gauss(latent.position(i, 0), &[0.0, 0.0], 0.7);
            for t in 1..4 {
                oracle += gauss(latent.position(i, t), latent.position(i, t - 1), 0.2);
            }
        }
        assert!((log_prior_latent(&latent, &hyper).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn prior_rejects_nonpositive_variance() {
        let latent = LatentConfiguration::<f64>::zeros(1, 1, 2);
        let mut hyper = Hyperparameters::<f64>::friendship_defaults();
        hyper.tau2 = 0.0;
        assert!(matches!(log_prior_latent(&latent, &hyper), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn log_joint_decomposes() {
        let (net, latent) = random_instance(5, 4, 3, 2);
        let hyper = Hyperparameters::new(2, 0.5, 0.1, -0.3, 2.0, 1.0).unwrap();
        let joint = log_joint(&net, &latent, &hyper).unwrap();
        let parts = log_likelihood(&net, &latent).unwrap()
            + log_prior_latent(&latent, &hyper).unwrap()
            + log_prior_beta(latent.beta, &hyper);
        assert_eq!(joint, parts);
        let beta_oracle = -0.5 * (2.0 * std::f64::consts::PI * 2.0).ln() - (latent.beta + 0.3).powi(2) / 4.0;
        assert!((log_prior_beta(latent.beta, &hyper) - beta_oracle).abs() < 1e-14);
    }

    #[test]
    fn log_joint_single_node_is_prior_only() {
        let net = DynamicNetwork::new(1, 2, true, vec![vec![]; 2]).unwrap();
        let mut latent = LatentConfiguration::<f64>::zeros(1, 2, 2);
        latent.beta = 0.4;
        latent.position_mut(0, 1).copy_from_slice(&[0.1, 0.1]);
        let hyper = Hyperparameters::<f64>::friendship_defaults();
        let joint = log_joint(&net, &latent, &hyper).unwrap();
        let prior = log_prior_latent(&latent, &hyper).unwrap() + log_prior_beta(0.4, &hyper);
        assert_eq!(joint, prior);
    }

    #[test]
    fn network_validation() {
        assert!(matches!(
            DynamicNetwork::new(3, 1, true, vec![vec![(1, 1)]]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            DynamicNetwork::new(3, 1, true, vec![vec![(0, 3)]]),
            Err(Error::IndexOutOfRange(_))
        ));
        assert!(matches!(
            DynamicNetwork::new(3, 1, true, vec![vec![(0, 1), (0, 1)]]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            DynamicNetwork::new(3, 1, false, vec![vec![(0, 1), (1, 0)]]),
            Err(Error::InvalidParameter(_))
        ));
        let und = DynamicNetwork::new(3, 1, false, vec![vec![(2, 0)]]).unwrap();
        assert!(und.has_edge(0, 0, 2) && und.has_edge(0, 2, 0));
        assert_eq!(und.total_edge_count(), 2);
        assert_eq!(und.listed_edges(0).collect::<Vec<_>>(), vec![(0, 2)]);
    }
}
