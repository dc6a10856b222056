//! Finite metric spaces, shortest-hop graph metrics, classical MDS and
//! embedding distortion.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mallows::bisect_decreasing;

const METRIC_TOL: f64 = 1e-9;

/// `N` points with a validated distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
}

impl FiniteMetricSpace {
    /// Validates symmetry, a zero diagonal, nonnegativity and the triangle
    /// inequality (tolerance `1e-9`). `dist` is row-major `n x n`.
    pub fn new(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMetric("a metric space needs at least one point".into()));
        }
        if dist.len() != n * n {
            return Err(Error::InvalidMetric(format!("expected {} distances, got {}", n * n, dist.len())));
        }
        let d = |i: usize, j: usize| dist[i * n + j];
        for i in 0..n {
            if d(i, i).abs() > METRIC_TOL {
                return Err(Error::InvalidMetric(format!("d({i},{i}) = {} is not zero", d(i, i))));
            }
            for j in 0..n {
                let v = d(i, j);
                if !v.is_finite() || v < -METRIC_TOL {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) = {v} is not a finite nonnegative value")));
                }
                if (v - d(j, i)).abs() > METRIC_TOL {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if d(i, k) > d(i, j) + d(j, k) + METRIC_TOL {
                        return Err(Error::InvalidMetric(format!("triangle inequality fails for ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { n, dist })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMetric("distance matrix must be square".into()));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    /// Mean distance over all ordered pairs, diagonal included: the
    /// expected distance between independent uniform points.
    pub fn uniform_mean_distance(&self) -> f64 {
        self.dist.iter().sum::<f64>() / (self.n * self.n) as f64
    }
}

/// All-pairs shortest-hop distances of an undirected graph.
pub fn graph_hop_metric(edges: &[(usize, usize)], n_nodes: usize) -> Result<FiniteMetricSpace> {
    if n_nodes == 0 {
        return invalid("graph needs at least one node");
    }
    let mut adj = vec![Vec::new(); n_nodes];
    for &(u, v) in edges {
        if u >= n_nodes || v >= n_nodes {
            return invalid(format!("edge ({u},{v}) references a node outside 0..{n_nodes}"));
        }
        if u == v {
            return invalid(format!("self-loop at node {u}"));
        }
        adj[u].push(v);
        adj[v].push(u);
    }
    let rows: Vec<Vec<usize>> = (0..n_nodes)
        .into_par_iter()
        .map(|s| {
            let mut d = vec![usize::MAX; n_nodes];
            let mut queue = VecDeque::from([s]);
            d[s] = 0;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if d[v] == usize::MAX {
                        d[v] = d[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            d
        })
        .collect();
    if let Some(unreached) = rows[0].iter().position(|&d| d == usize::MAX) {
        return Err(Error::Disconnected(unreached));
    }
    let dist = rows.into_iter().flatten().map(|d| d as f64).collect();
    Ok(FiniteMetricSpace { n: n_nodes, dist })
}

/// Result of a no-expansion distortion measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    /// `1 - min ratio / max ratio`, in `[0, 1]`.
    pub epsilon: f64,
    /// Factor applied to embedded distances so that no ratio exceeds one.
    pub scale: f64,
}

/// Distortion of arbitrary distances `d_g` against `d_y` over all pairs of
/// `n` points. Ratios are `d_g / d_y`; normalization divides by the largest.
pub fn distortion_with(
    n: usize,
    d_g: impl Fn(usize, usize) -> f64,
    d_y: impl Fn(usize, usize) -> f64,
) -> Result<Distortion> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dy = d_y(i, j);
            if !(dy > 0.0) {
                return Err(Error::InvalidMetric(format!("distinct points {i} and {j} are at distance zero")));
            }
            let r = d_g(i, j) / dy;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if n < 2 {
        return Ok(Distortion { epsilon: 0.0, scale: 1.0 });
    }
    if hi <= 0.0 {
        return Ok(Distortion { epsilon: 1.0, scale: 1.0 });
    }
    Ok(Distortion { epsilon: (1.0 - lo / hi).clamp(0.0, 1.0), scale: 1.0 / hi })
}

/// Distortion of point coordinates against a finite space, comparing
/// `||x_i - x_j||^c` with `d(i, j)`. The returned scale applies to the
/// compared quantity `||x_i - x_j||^c`.
pub fn distortion(space: &FiniteMetricSpace, coords: &[Vec<f64>], exponent: u32) -> Result<Distortion> {
    if coords.len() != space.len() {
        return invalid(format!("{} coordinate rows for {} points", coords.len(), space.len()));
    }
    distortion_with(
        space.len(),
        |i, j| euclidean(&coords[i], &coords[j]).powi(exponent as i32),
        |i, j| space.distance(i, j),
    )
}

/// `epsilon * mu_norm / e_min`.
pub fn distortion_bound(epsilon: f64, mu_norm: f64, e_min: f64) -> Result<f64> {
    if !(e_min > 0.0) {
        return Err(Error::Domain(format!("e_min must be positive, got {e_min}")));
    }
    if !(epsilon >= 0.0) || !(mu_norm >= 0.0) {
        return Err(Error::Domain("epsilon and the mean-parameter norm must be nonnegative".into()));
    }
    Ok(epsilon * mu_norm / e_min)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    /// `N x target_dim` coordinates, already multiplied by `scale`.
    pub coords: Vec<Vec<f64>>,
    pub target_dim: usize,
    pub epsilon: f64,
    pub scale: f64,
    /// Eigenvalues of the centered Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
}

/// Classical MDS: top `dim` eigenpairs of `-1/2 J D^2 J`, negative
/// eigenvalues truncated, then rescaled so that no distance expands.
pub fn classical_mds(space: &FiniteMetricSpace, dim: usize) -> Result<EmbeddingReport> {
    let n = space.len();
    if dim == 0 || dim + 1 > n {
        return invalid(format!("target dimension must lie in 1..={}, got {dim}", n.saturating_sub(1)));
    }
    let d2 = DMatrix::from_fn(n, n, |i, j| space.distance(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| d2.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let gram = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();

    let mut coords = vec![vec![0.0; dim]; n];
    for (col, &k) in order.iter().take(dim).enumerate() {
        let v = eig.eigenvectors.column(k);
        let lead = (0..n).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        let s = eig.eigenvalues[k].max(0.0).sqrt() * sign;
        for i in 0..n {
            coords[i][col] = v[i] * s;
        }
    }
    let dist = distortion(space, &coords, 1)?;
    for row in &mut coords {
        row.iter_mut().for_each(|x| *x *= dist.scale);
    }
    Ok(EmbeddingReport { coords, target_dim: dim, epsilon: dist.epsilon, scale: dist.scale, eigenvalues })
}

/// `E_theta[d(lambda, y)]` for labels drawn with probability proportional to
/// `exp(-theta d(lambda, y))`, averaged over a uniform truth `y`.
pub fn finite_expected_distance(space: &FiniteMetricSpace, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::Domain(format!("theta must be finite and >= 0, got {theta}")));
    }
    let n = space.len();
    let total: f64 = (0..n)
        .map(|y| {
            let (mut z, mut m) = (0.0, 0.0);
            for &d in space.row(y) {
                let w = (-theta * d).exp();
                z += w;
                m += d * w;
            }
            m / z
        })
        .sum();
    Ok(total / n as f64)
}

/// Inverts [`finite_expected_distance`] by bisection. The mean must lie
/// strictly between zero and [`FiniteMetricSpace::uniform_mean_distance`].
pub fn finite_backward_map(space: &FiniteMetricSpace, mean_distance: f64) -> Result<f64> {
    let upper = space.uniform_mean_distance();
    if !(mean_distance > 0.0 && mean_distance < upper) {
        return Err(Error::InfeasibleMean { mean: mean_distance, upper });
    }
    bisect_decreasing(mean_distance, |t| finite_expected_distance(space, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn floyd_warshall(edges: &[(usize, usize)], n: usize) -> Vec<f64> {
        let mut d = vec![f64::INFINITY; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        for &(u, v) in edges {
            d[u * n + v] = 1.0;
            d[v * n + u] = 1.0;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i * n + k] + d[k * n + j];
                    if via < d[i * n + j] {
                        d[i * n + j] = via;
                    }
                }
            }
        }
        d
    }

    #[test]
    fn hop_metric_examples() {
        let path = graph_hop_metric(&[(0, 1), (1, 2)], 3).unwrap();
        assert_eq!(path.distance(0, 2), 2.0);
        let k4: Vec<(usize, usize)> = (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j))).collect();
        let k4 = graph_hop_metric(&k4, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k4.distance(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
        assert!(matches!(graph_hop_metric(&[(0, 1)], 3), Err(Error::Disconnected(2))));
        assert!(graph_hop_metric(&[(0, 0)], 1).is_err());
        assert!(graph_hop_metric(&[(0, 5)], 3).is_err());
    }

    #[test]
    fn hop_metric_matches_floyd_warshall() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
        for _ in 0..40 {
            let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
            if u != v {
                edges.push((u, v));
            }
        }
        let space = graph_hop_metric(&edges, n).unwrap();
        let oracle = floyd_warshall(&edges, n);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(space.distance(i, j), oracle[i * n + j]);
            }
        }
        assert!(FiniteMetricSpace::new(n, oracle).is_ok());
    }

    #[test]
    fn construction_rejects_non_metrics() {
        assert!(FiniteMetricSpace::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::from_rows(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(matches!(FiniteMetricSpace::from_rows(bad), Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn mds_collinear_points() {
        let space = FiniteMetricSpace::from_rows(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let rep = classical_mds(&space, 1).unwrap();
        assert!(rep.epsilon <= 1e-9);
        assert!(((rep.coords[0][0] - rep.coords[2][0]).abs() - 2.0).abs() < 1e-9);
        assert!((rep.eigenvalues[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mds_equilateral_triangle() {
        let space = FiniteMetricSpace::from_rows(vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        let rep = classical_mds(&space, 2).unwrap();
        assert!(rep.epsilon <= 1e-9);
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!((euclidean(&rep.coords[i], &rep.coords[j]) - 1.0).abs() < 1e-9);
            }
        }
        assert!(classical_mds(&space, 3).is_err());
        assert!(classical_mds(&space, 0).is_err());
    }

    #[test]
    fn mds_reconstructs_realizable_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 1..=3 {
            let pts: Vec<Vec<f64>> = (0..12).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
            let rows = pts.iter().map(|a| pts.iter().map(|b| euclidean(a, b)).collect()).collect();
            let space = FiniteMetricSpace::from_rows(rows).unwrap();
            let rep = classical_mds(&space, dim).unwrap();
            for i in 0..12 {
                for j in (i + 1)..12 {
                    let want = space.distance(i, j);
                    let got = euclidean(&rep.coords[i], &rep.coords[j]) / rep.scale;
                    assert!((got - want).abs() <= 1e-6 * want);
                }
            }
            assert!(rep.epsilon <= 1e-9);
        }
    }

    #[test]
    fn mds_is_deterministic_with_fixed_signs() {
        let space = graph_hop_metric(&[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], 4).unwrap();
        let a = classical_mds(&space, 2).unwrap();
        let b = classical_mds(&space, 2).unwrap();
        assert_eq!(a, b);
        for col in 0..2 {
            let lead = (0..4).fold(0, |best, i| {
                if a.coords[i][col].abs() > a.coords[best][col].abs() { i } else { best }
            });
            assert!(a.coords[lead][col] >= 0.0);
        }
    }

    #[test]
    fn pair_distances_grow_with_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 15;
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
        edges.extend([(0, 7), (3, 12), (5, 9)]);
        let space = graph_hop_metric(&edges, n).unwrap();
        // Unscaled coordinates are nested prefixes, so every embedded
        // distance is nondecreasing in the target dimension. The normalized
        // distortion need not be: the min/max ratio can move either way.
        let unscaled = |d: usize| {
            let r = classical_mds(&space, d).unwrap();
            let c = r.coords.iter().map(|row| row.iter().map(|x| x / r.scale).collect::<Vec<_>>()).collect::<Vec<_>>();
            (c, r.epsilon)
        };
        let mut prev = unscaled(1).0;
        for d in 2..n {
            let (cur, eps) = unscaled(d);
            assert!((0.0..=1.0).contains(&eps));
            for i in 0..n {
                for j in 0..n {
                    let dist = |c: &Vec<Vec<f64>>| {
                        c[i].iter().zip(&c[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
                    };
                    assert!(dist(&cur) >= dist(&prev) - 1e-9);
                }
            }
            prev = cur;
        }
    }

    #[test]
    fn distortion_examples() {
        let space = FiniteMetricSpace::from_rows(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let iso = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(distortion(&space, &iso, 1).unwrap().epsilon.abs() < 1e-15);
        let halved = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let rows = vec![vec![0.0, 1.0, 2.0_f64.sqrt()], vec![1.0, 0.0, 2.0], vec![2.0_f64.sqrt(), 2.0, 0.0]];
        let space2 = FiniteMetricSpace::from_rows(rows).unwrap();
        let d = distortion(&space2, &halved, 1).unwrap();
        assert!((d.epsilon - 0.5).abs() < 1e-12);
        let dup = FiniteMetricSpace::from_rows(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(distortion(&dup, &[vec![0.0], vec![0.0]], 1), Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(distortion_bound(0.0, 3.0, 1.0).unwrap(), 0.0);
        assert!((distortion_bound(0.1, 5.0, 2.0).unwrap() - 0.25).abs() < 1e-15);
        let b = distortion_bound(0.2, 5.0, 2.0).unwrap();
        assert!((b - 2.0 * distortion_bound(0.1, 5.0, 2.0).unwrap()).abs() < 1e-15);
        assert!(matches!(distortion_bound(0.1, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn finite_backward_map_round_trips() {
        let edges: Vec<(usize, usize)> = (0..9).map(|i| (i, i + 1)).collect();
        let space = graph_hop_metric(&edges, 10).unwrap();
        for &theta in &[0.1, 0.5, 1.0, 2.0, 4.0] {
            let mean = finite_expected_distance(&space, theta).unwrap();
            let back = finite_backward_map(&space, mean).unwrap();
            assert!((back - theta).abs() < 1e-8, "{theta} {back}");
        }
        let upper = space.uniform_mean_distance();
        assert!((finite_expected_distance(&space, 0.0).unwrap() - upper).abs() < 1e-12);
        assert!(matches!(finite_backward_map(&space, upper), Err(Error::InfeasibleMean { .. })));
        assert!(finite_backward_map(&space, 0.0).is_err());
    }
}
