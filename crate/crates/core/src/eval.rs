//! Evaluation metrics and Monte-Carlo oracles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::model::{DynamicNetwork, LatentConfiguration};
use crate::scalar::{log1p_exp, sq_dist, Scalar};

/// Scores with binary labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredPairs {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl ScoredPairs {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::NonFinite("NaN score".into()));
        }
        Ok(Self { scores, labels })
    }

    pub fn push(&mut self, score: f64, label: bool) {
        self.scores.push(score);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }
}

/// Mann-Whitney AUC: the probability that a positive outranks a negative,
/// with ties counted as one half.
pub fn auc(scored: &ScoredPairs) -> Result<f64> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&s, &l) in scored.scores.iter().zip(&scored.labels) {
        if l {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    auc_split(pos, neg).ok_or_else(|| Error::InvalidParameter("AUC needs both positive and negative labels".into()))
}

/// AUC from separate positive and negative scores; `None` if either is empty.
///
/// Counts are accumulated as integers (twice the concordant count plus the
/// ties), so the result is exactly `(2C + ties) / (2 P N)`.
fn auc_split(mut pos: Vec<f64>, mut neg: Vec<f64>) -> Option<f64> {
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    pos.sort_unstable_by(f64::total_cmp);
    neg.sort_unstable_by(f64::total_cmp);
    let mut below = 0usize;
    let mut tied_end = 0usize;
    let mut doubled: u128 = 0;
    for &p in &pos {
        while below < neg.len() && neg[below] < p {
            below += 1;
        }
        tied_end = tied_end.max(below);
        while tied_end < neg.len() && neg[tied_end] == p {
            tied_end += 1;
        }
        doubled += 2 * below as u128 + (tied_end - below) as u128;
    }
    Some(doubled as f64 / (2.0 * pos.len() as f64 * neg.len() as f64))
}

/// Per-snapshot AUC of the plug-in link scores over all ordered pairs.
///
/// Pairs are ranked by `beta - ||x_i - x_j||^2`, the log-odds of the link
/// probability, which orders pairs identically without saturating to 1.
/// Snapshots with no edges, or with every pair an edge, give `None`.
pub fn in_sample_auc<T: Scalar>(net: &DynamicNetwork, latent: &LatentConfiguration<T>) -> Result<Vec<Option<f64>>> {
    latent.check_against(net)?;
    latent.check_finite()?;
    let n = net.n();
    let beta = latent.beta.as_f64();
    let out = (0..net.num_times())
        .map(|t| {
            let mut pos = Vec::with_capacity(net.snapshot_edge_count(t));
            let mut neg = Vec::with_capacity((n * n.saturating_sub(1)).saturating_sub(pos.capacity()));
            for i in 0..n {
                let xi = latent.position(i, t);
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let score = beta - sq_dist(xi, latent.position(j, t)).as_f64();
                    if net.has_edge(t, i, j) {
                        pos.push(score);
                    } else {
                        neg.push(score);
                    }
                }
            }
            auc_split(pos, neg)
        })
        .collect();
    Ok(out)
}

/// Mean of the defined entries, `None` if there are none.
pub fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("summary of an empty sample".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}

pub const RATIO_GRID_MAX: f64 = 3.0;
pub const RATIO_GRID_BINS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRatioSummary {
    /// Pairs kept after dropping those with zero true distance.
    pub count: usize,
    pub summary: FiveNumber,
    pub mean: f64,
    /// Histogram density on `[0, 3]`, integrating to 1 over the ratios that
    /// fall inside the grid.
    pub density: Vec<f64>,
    pub bin_width: f64,
    /// Ratios above the grid.
    pub above_grid: usize,
}

/// Ratios `||mu_it - mu_jt|| / ||x_it - x_jt||` over all unordered pairs and
/// snapshots.
pub fn distance_ratios<T: Scalar>(mu_hat: &LatentConfiguration<T>, x_true: &LatentConfiguration<T>) -> Result<Vec<f64>> {
    if mu_hat.n() != x_true.n() || mu_hat.num_times() != x_true.num_times() || mu_hat.d() != x_true.d() {
        return Err(Error::Dimension(format!(
            "estimate is {}x{}x{} but truth is {}x{}x{}",
            mu_hat.n(),
            mu_hat.num_times(),
            mu_hat.d(),
            x_true.n(),
            x_true.num_times(),
            x_true.d()
        )));
    }
    let n = mu_hat.n();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2 * mu_hat.num_times());
    for t in 0..mu_hat.num_times() {
        for i in 0..n {
            for j in (i + 1)..n {
                let truth = sq_dist(x_true.position(i, t), x_true.position(j, t)).as_f64().sqrt();
                if truth < 1e-12 {
                    continue;
                }
                let est = sq_dist(mu_hat.position(i, t), mu_hat.position(j, t)).as_f64().sqrt();
                out.push(est / truth);
            }
        }
    }
    Ok(out)
}

pub fn distance_ratio_stats<T: Scalar>(
    mu_hat: &LatentConfiguration<T>,
    x_true: &LatentConfiguration<T>,
) -> Result<DistanceRatioSummary> {
    let ratios = distance_ratios(mu_hat, x_true)?;
    if ratios.is_empty() {
        return Err(Error::InvalidParameter("no pair has a nonzero true distance".into()));
    }
    let bin_width = RATIO_GRID_MAX / RATIO_GRID_BINS as f64;
    let mut counts = vec![0usize; RATIO_GRID_BINS];
    let mut above_grid = 0;
    for &r in &ratios {
        if r > RATIO_GRID_MAX {
            above_grid += 1;
        } else {
            let bin = ((r / bin_width) as usize).min(RATIO_GRID_BINS - 1);
            counts[bin] += 1;
        }
    }
    let inside = (ratios.len() - above_grid) as f64;
    let density = counts
        .iter()
        .map(|&c| if inside > 0.0 { c as f64 / (inside * bin_width) } else { 0.0 })
        .collect();
    Ok(DistanceRatioSummary {
        count: ratios.len(),
        summary: FiveNumber::of(&ratios)?,
        mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
        density,
        bin_width,
        above_grid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    /// Index of the later snapshot, 0-based.
    pub to_time: usize,
    /// `||mu_it - mu_i(t-1)||^2` for every node.
    pub squared: Vec<f64>,
    pub summary: FiveNumber,
}

/// Squared displacement of every node across each transition.
pub fn movement_stats<T: Scalar>(mu: &LatentConfiguration<T>) -> Result<Vec<Movement>> {
    if mu.num_times() < 2 {
        return Err(Error::InvalidParameter("movement needs at least two snapshots".into()));
    }
    (1..mu.num_times())
        .map(|t| {
            let squared: Vec<f64> = (0..mu.n())
                .map(|i| sq_dist(mu.position(i, t), mu.position(i, t - 1)).as_f64())
                .collect();
            Ok(Movement {
                to_time: t,
                summary: FiveNumber::of(&squared)?,
                squared,
            })
        })
        .collect()
}

pub fn beta_mse(estimates: &[f64], beta_true: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidParameter("beta_mse of an empty list".into()));
    }
    Ok(estimates.iter().map(|b| (b - beta_true).powi(2)).sum::<f64>() / estimates.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McExpectation {
    /// Estimate of `E_q[exp(beta - ||X_i - X_j||^2)]`.
    pub exp_term: f64,
    /// Estimate of `E_q[log(1 + exp(beta - ||X_i - X_j||^2))]`.
    pub log_term: f64,
    pub exp_stderr: f64,
    pub log_stderr: f64,
}

/// Monte-Carlo expectations under `X_i ~ N(mu_i, Sigma)`, `X_j ~ N(mu_j, Sigma)`
/// and `beta ~ N(xi_tilde, psi2_tilde)`, all independent.
pub fn mc_expectation_oracle(
    mu_i: &[f64],
    mu_j: &[f64],
    sigma: &SquareMatrix<f64>,
    xi_tilde: f64,
    psi2_tilde: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McExpectation> {
    if n_samples < 1000 {
        return Err(Error::InvalidParameter("the oracle needs at least 1000 samples".into()));
    }
    let d = mu_i.len();
    if mu_j.len() != d || sigma.dim() != d {
        return Err(Error::Dimension("oracle inputs disagree in dimension".into()));
    }
    if !(psi2_tilde >= 0.0) {
        return Err(Error::InvalidParameter("psi2_tilde must be nonnegative".into()));
    }
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::NotSpd("oracle covariance".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diff: Vec<f64> = mu_i.iter().zip(mu_j).map(|(a, b)| a - b).collect();
    let psi = psi2_tilde.sqrt();
    let (mut e_sum, mut e_sq, mut l_sum, mut l_sq) = (0.0, 0.0, 0.0, 0.0);
    let mut zi = vec![0.0; d];
    let mut zj = vec![0.0; d];
    for _ in 0..n_samples {
        for k in 0..d {
            zi[k] = f64::sample_standard_normal(&mut rng);
            zj[k] = f64::sample_standard_normal(&mut rng);
        }
        let mut dist2 = 0.0;
        for r in 0..d {
            let mut delta = diff[r];
            for c in 0..=r {
                delta += chol[(r, c)] * (zi[c] - zj[c]);
            }
            dist2 += delta * delta;
        }
        let eta = xi_tilde + psi * f64::sample_standard_normal(&mut rng) - dist2;
        let e = eta.exp();
        let l = log1p_exp(eta);
        e_sum += e;
        e_sq += e * e;
        l_sum += l;
        l_sq += l * l;
    }
    let m = n_samples as f64;
    let stderr = |sum: f64, sq: f64| {
        let mean = sum / m;
        ((sq / m - mean * mean).max(0.0) / (m - 1.0)).sqrt()
    };
    Ok(McExpectation {
        exp_term: e_sum / m,
        log_term: l_sum / m,
        exp_stderr: stderr(e_sum, e_sq),
        log_stderr: stderr(l_sum, l_sq),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(scores: &[f64], labels: &[bool]) -> f64 {
        let mut doubled = 0u64;
        let (mut p, mut n) = (0u64, 0u64);
        for (a, &la) in scores.iter().zip(labels) {
            if la {
                p += 1;
            } else {
                n += 1;
            }
            for (b, &lb) in scores.iter().zip(labels) {
                if la && !lb {
                    if a > b {
                        doubled += 2;
                    } else if a == b {
                        doubled += 1;
                    }
                }
            }
        }
        doubled as f64 / (2.0 * p as f64 * n as f64)
    }

    #[test]
    fn auc_examples() {
        let perfect = ScoredPairs::new(vec![0.9, 0.8, 0.2, 0.1], vec![true, true, false, false]).unwrap();
        assert_eq!(auc(&perfect).unwrap(), 1.0);
        let ties = ScoredPairs::new(vec![0.4; 5], vec![true, false, true, false, false]).unwrap();
        assert_eq!(auc(&ties).unwrap(), 0.5);
        let mixed = ScoredPairs::new(vec![0.9, 0.8, 0.3], vec![true, false, true]).unwrap();
        assert_eq!(auc(&mixed).unwrap(), 0.5);
    }

    #[test]
    fn auc_single_class_is_error() {
        let s = ScoredPairs::new(vec![0.1, 0.2], vec![true, true]).unwrap();
        assert!(auc(&s).is_err());
        assert!(ScoredPairs::new(vec![0.1], vec![]).is_err());
    }

    #[test]
    fn auc_matches_brute_force_with_ties() {
        let scores = [0.1, 0.5, 0.5, 0.3, 0.5, 0.9, 0.1, 0.3];
        let labels = [true, false, true, false, true, false, false, true];
        let s = ScoredPairs::new(scores.to_vec(), labels.to_vec()).unwrap();
        assert_eq!(auc(&s).unwrap(), brute_force(&scores, &labels));
    }

    #[test]
    fn in_sample_auc_marks_degenerate_snapshots() {
        let net = DynamicNetwork::new(3, 3, true, vec![vec![], vec![(0, 1)], vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]])
            .unwrap();
        let flat = vec![0.0, 0.0, 0.1, 0.0, 3.0, 0.0].repeat(3);
        let latent = LatentConfiguration::from_flat(3, 3, 2, flat, 0.0).unwrap();
        let a = in_sample_auc(&net, &latent).unwrap();
        assert_eq!(a[0], None);
        assert_eq!(a[2], None);
        // (0,1) is the closest pair, tied only with (1,0) which is a non-edge
        assert_eq!(a[1], Some((2.0 * 4.0 + 1.0) / (2.0 * 5.0)));
        assert_eq!(mean_defined(&a), a[1]);
    }

    #[test]
    fn ratio_examples() {
        let flat = vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.5, 0.5, 1.0, 1.0, -1.0, 0.0];
        let truth = LatentConfiguration::from_flat(3, 2, 2, flat.clone(), 0.0).unwrap();
        let same = distance_ratio_stats(&truth, &truth).unwrap();
        assert_eq!(same.count, 6);
        assert!((same.summary.median - 1.0).abs() < 1e-15);
        let doubled = LatentConfiguration::from_flat(3, 2, 2, flat.iter().map(|x| 2.0 * x).collect(), 0.0).unwrap();
        let s = distance_ratio_stats(&doubled, &truth).unwrap();
        assert!((s.summary.min - 2.0).abs() < 1e-15 && (s.summary.max - 2.0).abs() < 1e-15);
        let integral: f64 = s.density.iter().sum::<f64>() * s.bin_width;
        assert!((integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_drops_coincident_true_points() {
        let truth = LatentConfiguration::from_flat(2, 1, 1, vec![1.0, 1.0], 0.0).unwrap();
        let est = LatentConfiguration::from_flat(2, 1, 1, vec![0.0, 1.0], 0.0).unwrap();
        assert!(distance_ratio_stats(&est, &truth).is_err());
        let other = LatentConfiguration::from_flat(3, 1, 1, vec![0.0; 3], 0.0).unwrap();
        assert!(matches!(distance_ratio_stats(&other, &truth), Err(Error::Dimension(_))));
    }

    #[test]
    fn movement_examples() {
        let flat = vec![0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 2.0, 1.0];
        let mu = LatentConfiguration::from_flat(2, 2, 2, flat, 0.0).unwrap();
        let m = movement_stats(&mu).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].squared, vec![1.0, 1.0]);
        let still = LatentConfiguration::<f64>::zeros(3, 1, 2);
        assert!(movement_stats(&still).is_err());
    }

    #[test]
    fn beta_mse_examples() {
        assert_eq!(beta_mse(&[0.3, 0.3], 0.3).unwrap(), 0.0);
        assert_eq!(beta_mse(&[1.5, -0.5], 0.5).unwrap(), 1.0);
        assert!(beta_mse(&[], 0.0).is_err());
    }

    #[test]
    fn oracle_point_mass_limit() {
        let sigma = SquareMatrix::scaled_identity(2, 1e-20);
        let r = mc_expectation_oracle(&[0.3, 0.1], &[-0.2, 0.4], &sigma, -0.4, 1e-20, 1000, 1).unwrap();
        let eta: f64 = -0.4 - (0.25 + 0.09);
        assert!((r.exp_term - eta.exp()).abs() < 1e-9);
        assert!((r.log_term - log1p_exp(eta)).abs() < 1e-9);
        assert!(r.exp_stderr < 1e-9);
        assert!(mc_expectation_oracle(&[0.0], &[0.0], &SquareMatrix::identity(1), 0.0, 1.0, 999, 1).is_err());
    }
}
