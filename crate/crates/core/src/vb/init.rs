use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::model::{DynamicNetwork, Hyperparameters, LatentConfiguration};
use crate::scalar::Scalar;

use super::state::VariationalState;

/// Means i.i.d. `N(0, scale^2)`, `Sigma = I`, `xi_tilde = 0`, `psi2_tilde = psi2`.
pub fn init_random<T: Scalar>(
    n: usize,
    num_times: usize,
    hyper: &Hyperparameters<T>,
    seed: u64,
    scale: T,
) -> Result<VariationalState<T>> {
    hyper.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat = (0..n * num_times * hyper.d)
        .map(|_| scale * T::sample_standard_normal(&mut rng))
        .collect();
    let mu = LatentConfiguration::from_flat(n, num_times, hyper.d, flat, T::zero())?;
    VariationalState::new(mu, SquareMatrix::identity(hyper.d), T::zero(), hyper.psi2)
}

/// Classical multidimensional scaling of hop distances in the graph that
/// joins all snapshots and ignores direction. The same means are used for
/// every snapshot.
///
/// Each connected component is embedded on its own and the components are
/// laid out on a square grid, spaced one hop further apart than the widest
/// component.
pub fn init_mds<T: Scalar>(net: &DynamicNetwork, hyper: &Hyperparameters<T>) -> Result<VariationalState<T>> {
    hyper.validate()?;
    if net.total_edge_count() == 0 {
        return Err(Error::InvalidParameter("MDS initialization needs at least one edge".into()));
    }
    let n = net.n();
    let d = hyper.d;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in 0..net.num_times() {
        for &(i, j) in net.edges(t) {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let mut component = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = members.len();
        let mut queue = VecDeque::from([start]);
        component[start] = id;
        let mut list = vec![start];
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if component[v] == usize::MAX {
                    component[v] = id;
                    list.push(v);
                    queue.push_back(v);
                }
            }
        }
        list.sort_unstable();
        members.push(list);
    }

    let embeddings: Vec<Vec<Vec<f64>>> = members.iter().map(|m| embed_component(&adj, m, d)).collect();
    let radius = embeddings
        .iter()
        .flatten()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let spacing = 2.0 * radius + 1.0;
    let cols = (members.len() as f64).sqrt().ceil() as usize;

    let mut coords = vec![vec![0.0; d]; n];
    for (k, (list, emb)) in members.iter().zip(&embeddings).enumerate() {
        let mut offset = vec![0.0; d];
        offset[0] = (k % cols) as f64 * spacing;
        if d > 1 {
            offset[1] = (k / cols) as f64 * spacing;
        } else {
            offset[0] = k as f64 * spacing;
        }
        for (node, x) in list.iter().zip(emb) {
            for c in 0..d {
                coords[*node][c] = x[c] + offset[c];
            }
        }
    }
    let mut centroid = vec![0.0; d];
    for x in &coords {
        for c in 0..d {
            centroid[c] += x[c] / n as f64;
        }
    }

    let mut mu = LatentConfiguration::zeros(n, net.num_times(), d);
    for (i, x) in coords.iter().enumerate() {
        let v: Vec<T> = x.iter().zip(&centroid).map(|(a, m)| T::of(a - m)).collect();
        for t in 0..net.num_times() {
            mu.position_mut(i, t).copy_from_slice(&v);
        }
    }
    VariationalState::new(mu, SquareMatrix::identity(d), T::zero(), hyper.psi2)
}

/// Centered classical MDS of one connected component.
fn embed_component(adj: &[Vec<usize>], nodes: &[usize], d: usize) -> Vec<Vec<f64>> {
    let m = nodes.len();
    if m == 1 {
        return vec![vec![0.0; d]];
    }
    let local: std::collections::HashMap<usize, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut dist2 = DMatrix::<f64>::zeros(m, m);
    for (a, &src) in nodes.iter().enumerate() {
        let mut hops = vec![usize::MAX; m];
        hops[a] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let hu = hops[local[&u]];
            for &v in &adj[u] {
                let lv = local[&v];
                if hops[lv] == usize::MAX {
                    hops[lv] = hu + 1;
                    queue.push_back(v);
                }
            }
        }
        for (b, &h) in hops.iter().enumerate() {
            dist2[(a, b)] = (h * h) as f64;
        }
    }
    // B = -1/2 J D^2 J
    let row_means: Vec<f64> = (0..m).map(|r| dist2.row(r).sum() / m as f64).collect();
    let grand = row_means.iter().sum::<f64>() / m as f64;
    let b = DMatrix::from_fn(m, m, |r, c| -0.5 * (dist2[(r, c)] - row_means[r] - row_means[c] + grand));
    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut out = vec![vec![0.0; d]; m];
    for (c, &k) in order.iter().take(d).enumerate() {
        let lambda = eig.eigenvalues[k];
        if lambda <= 0.0 {
            continue;
        }
        let s = lambda.sqrt();
        for r in 0..m {
            out[r][c] = eig.eigenvectors[(r, k)] * s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_init_is_seeded_and_standard() {
        let hyper = Hyperparameters::<f64>::friendship_defaults();
        let a = init_random(5, 3, &hyper, 11, 1.0).unwrap();
        let b = init_random(5, 3, &hyper, 11, 1.0).unwrap();
        let c = init_random(5, 3, &hyper, 12, 1.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.sigma, SquareMatrix::identity(2));
        assert_eq!(a.xi_tilde, 0.0);
        assert_eq!(a.psi2_tilde, hyper.psi2);
    }

    #[test]
    fn mds_of_four_cycle() {
        let net = DynamicNetwork::new(4, 2, false, vec![vec![(0, 1), (1, 2), (2, 3), (3, 0)], vec![]]).unwrap();
        let hyper = Hyperparameters::<f64>::friendship_defaults();
        let s = init_mds(&net, &hyper).unwrap();
        let dist = |i: usize, j: usize| crate::scalar::sq_dist(s.mu(i, 0), s.mu(j, 0)).sqrt();
        let adjacent: Vec<f64> = vec![dist(0, 1), dist(1, 2), dist(2, 3), dist(3, 0)];
        for a in &adjacent {
            assert!((a - adjacent[0]).abs() < 1e-10, "{adjacent:?}");
        }
        // a square: diagonals are sqrt(2) times the sides
        assert!((dist(0, 2) - adjacent[0] * 2f64.sqrt()).abs() < 1e-10);
        assert!((dist(1, 3) - adjacent[0] * 2f64.sqrt()).abs() < 1e-10);
        assert_eq!(s.mu(2, 0), s.mu(2, 1));
        assert_eq!(s.sigma, SquareMatrix::identity(2));
        assert_eq!(s.psi2_tilde, 2.0);
    }

    #[test]
    fn mds_separates_components() {
        let net = DynamicNetwork::new(5, 1, true, vec![vec![(0, 1), (2, 3)]]).unwrap();
        let hyper = Hyperparameters::<f64>::friendship_defaults();
        let s = init_mds(&net, &hyper).unwrap();
        let dist = |i: usize, j: usize| crate::scalar::sq_dist(s.mu(i, 0), s.mu(j, 0)).sqrt();
        assert!((dist(0, 1) - 1.0).abs() < 1e-10);
        assert!((dist(2, 3) - 1.0).abs() < 1e-10);
        assert!(dist(0, 2) > 1.0 && dist(1, 4) > 1.0);
    }

    #[test]
    fn mds_rejects_edgeless_network() {
        let net = DynamicNetwork::new(3, 2, true, vec![vec![]; 2]).unwrap();
        let hyper = Hyperparameters::<f64>::friendship_defaults();
        assert!(matches!(init_mds(&net, &hyper), Err(Error::InvalidParameter(_))));
    }
}
