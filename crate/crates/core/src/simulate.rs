//! Synthetic dynamic networks from the latent space model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DynamicNetwork, Hyperparameters, LatentConfiguration};
use crate::scalar::{logistic, sq_dist, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Isotropic variance of the component.
    pub variance: f64,
}

/// Gaussian mixture for the initial positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureInit {
    pub components: Vec<MixtureComponent>,
}

impl MixtureInit {
    /// Equal-weight components at `+-(offset, 0, ..., 0)`.
    pub fn symmetric_pair(d: usize, offset: f64, variance: f64) -> Self {
        let mean = |s: f64| {
            let mut m = vec![0.0; d];
            m[0] = s * offset;
            m
        };
        Self {
            components: vec![
                MixtureComponent { weight: 0.5, mean: mean(-1.0), variance },
                MixtureComponent { weight: 0.5, mean: mean(1.0), variance },
            ],
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter("mixture has no components".into()));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, not 1")));
        }
        for (k, c) in self.components.iter().enumerate() {
            if !(c.weight >= 0.0) {
                return Err(Error::InvalidParameter(format!("component {k} has a negative weight")));
            }
            if !(c.variance > 0.0) || !c.variance.is_finite() {
                return Err(Error::InvalidParameter(format!("component {k} needs a positive variance")));
            }
            if c.mean.len() != d {
                return Err(Error::Dimension(format!(
                    "component {k} mean has length {} but d={d}",
                    c.mean.len()
                )));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::NonFinite(format!("component {k} mean")));
            }
        }
        Ok(())
    }

    /// Per-coordinate second moment `E[x_k^2]` averaged over coordinates.
    pub fn second_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let d = c.mean.len().max(1) as f64;
                c.weight * (c.variance + c.mean.iter().map(|m| m * m).sum::<f64>() / d)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub n: usize,
    #[serde(rename = "T")]
    pub num_times: usize,
    pub d: usize,
    pub beta: f64,
    pub init: MixtureInit,
    /// Transition variance; zero freezes every trajectory.
    pub tau2: f64,
    pub directed: bool,
    pub seed: u64,
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.num_times == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("n, T and d must be positive".into()));
        }
        if !self.beta.is_finite() {
            return Err(Error::NonFinite("design beta".into()));
        }
        if !(self.tau2 >= 0.0) || !self.tau2.is_finite() {
            return Err(Error::InvalidParameter("tau2 must be finite and >= 0".into()));
        }
        self.init.validate(self.d)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

fn sample_positions(design: &SimDesign, rng: &mut ChaCha8Rng) -> LatentConfiguration<f64> {
    let (n, num_times, d) = (design.n, design.num_times, design.d);
    let mut latent = LatentConfiguration::zeros(n, num_times, d);
    latent.beta = design.beta;
    let comps = &design.init.components;
    let step = design.tau2.sqrt();
    for i in 0..n {
        let u = f64::sample_unit(rng);
        let mut acc = 0.0;
        let comp = comps
            .iter()
            .find(|c| {
                acc += c.weight;
                u < acc
            })
            .unwrap_or(&comps[comps.len() - 1]);
        let sd = comp.variance.sqrt();
        for (x, m) in latent.position_mut(i, 0).iter_mut().zip(&comp.mean) {
            *x = m + sd * f64::sample_standard_normal(rng);
        }
        for t in 1..num_times {
            for k in 0..d {
                let prev = latent.position(i, t - 1)[k];
                latent.position_mut(i, t)[k] = prev + step * f64::sample_standard_normal(rng);
            }
        }
    }
    latent
}

/// Draws positions and then every edge independently.
///
/// Undirected designs draw each unordered pair once. The ground truth is
/// drawn in `f64` and cast to `T`.
pub fn sample_network<T: Scalar>(design: &SimDesign) -> Result<(DynamicNetwork, LatentConfiguration<T>)> {
    design.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let latent = sample_positions(design, &mut rng);
    let n = design.n;
    let mut net = DynamicNetwork::empty(n, design.num_times, design.directed);
    for t in 0..design.num_times {
        for i in 0..n {
            let xi = latent.position(i, t);
            let start = if design.directed { 0 } else { i + 1 };
            for j in start..n {
                if j == i {
                    continue;
                }
                let p = logistic(design.beta - sq_dist(xi, latent.position(j, t)));
                if f64::sample_unit(&mut rng) < p {
                    net.insert_edge(t, i, j)?;
                }
            }
        }
    }
    net.finish();
    Ok((net, latent.cast()))
}

/// Average out-degree `(n - 1) * density` implied by `beta`, estimated by
/// averaging exact link probabilities over `draws` position samples.
pub fn expected_degree(design: &SimDesign, beta: f64, draws: usize) -> Result<f64> {
    design.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut total = 0.0;
    let mut pairs = 0usize;
    for _ in 0..draws.max(1) {
        let latent = sample_positions(design, &mut rng);
        for t in 0..design.num_times {
            for i in 0..design.n {
                for j in (i + 1)..design.n {
                    total += logistic(beta - sq_dist(latent.position(i, t), latent.position(j, t)));
                    pairs += 1;
                }
            }
        }
    }
    Ok(total / pairs.max(1) as f64 * (design.n - 1) as f64)
}

/// Intercept whose expected average out-degree equals `target`, by
/// bisection on [`expected_degree`] with common random numbers.
pub fn calibrate_beta(design: &SimDesign, target: f64, draws: usize) -> Result<f64> {
    if !(target > 0.0 && target < (design.n.saturating_sub(1)) as f64) {
        return Err(Error::InvalidParameter(format!("target degree {target} is not attainable")));
    }
    let (mut lo, mut hi) = (-30.0, 30.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if expected_degree(design, mid, draws)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// How the variational means are initialized for a preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitChoice {
    Random { scale: f64 },
    Mds,
}

/// A named design with the fitting settings used for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub design: SimDesign,
    pub fit_hyper: Hyperparameters<f64>,
    pub fit_init: InitChoice,
    /// Average out-degree the intercept was calibrated to, if any.
    pub target_degree: Option<f64>,
}

/// Intercepts giving average out-degree 7.5, 4 and 1.8 for the `+-1.5`
/// mixture with `T = 10`, computed by numerical integration of the expected
/// link probability over the pair-difference distribution.
const CALIBRATED: [(usize, &str, f64, [f64; 2]); 6] = [
    (100, "dense", 7.5, [-0.5038, 0.0149]),
    (100, "moderate", 4.0, [-1.2709, -0.8119]),
    (100, "sparse", 1.8, [-2.1514, -1.7267]),
    (1000, "dense", 7.5, [-3.074, -2.665]),
    (1000, "moderate", 4.0, [-3.715, -3.3109]),
    (1000, "sparse", 1.8, [-4.5212, -4.1202]),
];

const SMALL_LARGE: [&str; 2] = ["small", "large"];

#[allow(clippy::too_many_arguments)]
fn preset(
    name: String,
    description: String,
    n: usize,
    num_times: usize,
    offset: f64,
    beta: f64,
    tau2: f64,
    prior_psi2: f64,
    fit_init: InitChoice,
    target_degree: Option<f64>,
) -> Preset {
    let init = MixtureInit::symmetric_pair(2, offset, 0.5);
    let fit_hyper = Hyperparameters {
        d: 2,
        sigma2: init.second_moment(),
        tau2,
        xi: 0.0,
        psi2: prior_psi2,
        alpha: 1.0,
    };
    Preset {
        name,
        description,
        design: SimDesign { n, num_times, d: 2, beta, init, tau2, directed: true, seed: 0 },
        fit_hyper,
        fit_init,
        target_degree,
    }
}

/// Every named design.
pub fn preset_designs() -> Vec<Preset> {
    let mut out = Vec::new();
    let random = InitChoice::Random { scale: 1.0 };
    for (density, beta) in [("dense", 0.5), ("moderate", -0.5), ("sparse", -1.5)] {
        for (size, tau2) in SMALL_LARGE.iter().zip([0.0004, 0.01]) {
            out.push(preset(
                format!("sim50-{density}-{size}"),
                format!("n=50, T=10, components at (+-0.5, 0), {density}, tau2={tau2}"),
                50,
                10,
                0.5,
                beta,
                tau2,
                2.0,
                InitChoice::Mds,
                None,
            ));
        }
    }
    for (n, density, degree, betas) in CALIBRATED {
        for ((size, tau2), beta) in SMALL_LARGE.iter().zip([0.01, 0.16]).zip(betas) {
            out.push(preset(
                format!("sim{n}-{density}-{size}"),
                format!("n={n}, T=10, components at (+-1.5, 0), average degree {degree}, tau2={tau2}"),
                n,
                10,
                1.5,
                beta,
                tau2,
                2.0,
                random,
                Some(degree),
            ));
        }
    }
    for (density, size, beta, tau2) in [("dense", "small", -2.5, 0.01), ("sparse", "large", -4.5, 0.16)] {
        out.push(preset(
            format!("sim5000-{density}-{size}"),
            format!("n=5000, T=10, components at (+-1.5, 0), beta={beta}, tau2={tau2}"),
            5000,
            10,
            1.5,
            beta,
            tau2,
            0.01,
            random,
            None,
        ));
    }
    let dense_small = CALIBRATED[0].3[0];
    out.push(preset(
        "alpha-study".into(),
        "n=100, T=10 dense small-transition process for the alpha comparison".into(),
        100,
        10,
        1.5,
        dense_small,
        0.01,
        2.0,
        random,
        Some(7.5),
    ));
    for n in [100, 200, 400, 800] {
        out.push(preset(
            format!("asym-n-{n}"),
            format!("n={n}, T=10, beta=-2, components at (+-1.5, 0), tau2=0.01"),
            n,
            10,
            1.5,
            -2.0,
            0.01,
            2.0,
            random,
            None,
        ));
    }
    for num_times in [10, 20, 40] {
        out.push(preset(
            format!("asym-T-{num_times}"),
            format!("n=50, T={num_times}, dense small-transition process"),
            50,
            num_times,
            1.5,
            dense_small,
            0.01,
            2.0,
            random,
            None,
        ));
    }
    out
}

pub fn preset_names() -> Vec<String> {
    preset_designs().into_iter().map(|p| p.name).collect()
}

pub fn find_preset(name: &str) -> Result<Preset> {
    let all = preset_designs();
    let names: Vec<String> = all.iter().map(|p| p.name.clone()).collect();
    all.into_iter().find(|p| p.name == name).ok_or_else(|| Error::UnknownName {
        kind: "preset",
        name: name.to_string(),
        available: names.join(", "),
    })
}

/// Seed of replicate `r`, derived from `base` by a SplitMix64 step.
pub fn replicate_seed(base: u64, r: u64) -> u64 {
    let mut z = base.wrapping_add(r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SimDesign {
        SimDesign {
            n: 20,
            num_times: 3,
            d: 2,
            beta: 0.0,
            init: MixtureInit::symmetric_pair(2, 1.0, 0.5),
            tau2: 0.05,
            directed: true,
            seed,
        }
    }

    #[test]
    fn frozen_transitions() {
        let design = SimDesign { tau2: 0.0, ..small(1) };
        let (_, x) = sample_network::<f64>(&design).unwrap();
        for i in 0..20 {
            assert_eq!(x.position(i, 0), x.position(i, 2));
        }
    }

    #[test]
    fn very_negative_intercept_gives_empty_network() {
        let (net, _) = sample_network::<f64>(&SimDesign { beta: -50.0, ..small(2) }).unwrap();
        assert_eq!(net.total_edge_count(), 0);
    }

    #[test]
    fn seeded_and_undirected_symmetric() {
        let a = sample_network::<f64>(&small(3)).unwrap();
        let b = sample_network::<f64>(&small(3)).unwrap();
        assert_eq!(a, b);
        let (net, _) = sample_network::<f64>(&SimDesign { directed: false, ..small(3) }).unwrap();
        for t in 0..3 {
            for &(i, j) in net.edges(t) {
                assert!(net.has_edge(t, j, i));
            }
        }
    }

    #[test]
    fn catalog_entries() {
        let p = find_preset("sim100-dense-small").unwrap();
        assert_eq!((p.design.n, p.design.num_times), (100, 10));
        assert_eq!(p.design.init.components[0].mean, vec![-1.5, 0.0]);
        assert_eq!(p.design.init.components[1].mean, vec![1.5, 0.0]);
        assert_eq!(p.design.init.components[0].variance, 0.5);
        assert_eq!(find_preset("sim50-dense-small").unwrap().design.tau2, 0.0004);
        assert_eq!(find_preset("asym-n-400").unwrap().design.beta, -2.0);
        assert_eq!(find_preset("sim5000-dense-small").unwrap().fit_hyper.psi2, 0.01);
        match find_preset("nope") {
            Err(Error::UnknownName { available, .. }) => assert!(available.contains("sim50-dense-small")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_mixture() {
        let mut design = small(0);
        design.init.components[0].weight = 0.7;
        assert!(sample_network::<f64>(&design).is_err());
        let mut design = small(0);
        design.init.components[1].variance = 0.0;
        assert!(sample_network::<f64>(&design).is_err());
    }

    #[test]
    fn replicate_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|r| replicate_seed(7, r)).collect();
        let mut uniq = seeds.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), seeds.len());
        assert_eq!(replicate_seed(7, 3), seeds[3]);
    }
}
