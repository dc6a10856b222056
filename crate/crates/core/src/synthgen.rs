//! Synthetic tasks with known truth: Mallows rankings, jointly Gaussian
//! regression labels and noisy nodes on random graphs.
//!
//! Randomness is drawn from per-task, per-LF substreams (see [`crate::rng`]),
//! so outputs depend only on the scenario, never on thread scheduling.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabelingMatrix;
use crate::error::{invalid, Error, Result};
use crate::mallows::MallowsModel;
use crate::metric_spaces::{graph_hop_metric, FiniteMetricSpace};
use crate::perm::Permutation;
use crate::rng::{substream, Domain};

/// Distribution of the true ranking.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthPrior {
    /// Uniform over all rankings.
    #[default]
    Uniform,
    /// Identity with probability `p`, otherwise the reversal.
    TwoCenter { p: f64 },
}

/// Named recipes for per-LF Mallows parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ThetaPreset {
    /// 10 LFs with `theta ~ U(0.1, 0.2)` and 8 with `theta ~ U(2, 5)`, shuffled.
    Heterogeneous,
    /// A third of `m` LFs with `theta ~ U(0.2, 1)`, the rest `U(0.001, 0.01)`, shuffled.
    Movies { m: usize },
    /// `m` LFs sharing one theta.
    Equal { m: usize, theta: f64 },
}

impl ThetaPreset {
    pub fn thetas(&self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = substream(seed, Domain::Parameters, 0, 0);
        let mut out: Vec<f64> = match *self {
            ThetaPreset::Heterogeneous => {
                (0..18).map(|k| if k < 10 { rng.random_range(0.1..0.2) } else { rng.random_range(2.0..5.0) }).collect()
            }
            ThetaPreset::Movies { m } => {
                let good = ((m as f64) / 3.0).round() as usize;
                (0..m)
                    .map(|k| if k < good { rng.random_range(0.2..1.0) } else { rng.random_range(0.001..0.01) })
                    .collect()
            }
            ThetaPreset::Equal { m, theta } => return Ok(vec![theta; m]),
        };
        out.shuffle(&mut substream(seed, Domain::Shuffle, 0, 0));
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingScenario {
    pub n: usize,
    pub rho: usize,
    pub seed: u64,
    /// Explicit per-LF thetas; exclusive with `preset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<ThetaPreset>,
    #[serde(default)]
    pub truth: TruthPrior,
}

impl RankingScenario {
    pub fn with_thetas(n: usize, rho: usize, thetas: Vec<f64>, seed: u64) -> Self {
        RankingScenario { n, rho, seed, thetas: Some(thetas), preset: None, truth: TruthPrior::Uniform }
    }

    pub fn resolved_thetas(&self) -> Result<Vec<f64>> {
        let thetas = match (&self.thetas, &self.preset) {
            (Some(t), None) => t.clone(),
            (None, Some(p)) => p.thetas(self.seed)?,
            _ => return invalid("ranking scenario needs exactly one of 'thetas' and 'preset'"),
        };
        if thetas.len() < 3 {
            return invalid(format!("field 'thetas': need at least 3 labeling functions, got {}", thetas.len()));
        }
        if let Some(t) = thetas.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return invalid(format!("field 'thetas': {t} is not a finite nonnegative value"));
        }
        Ok(thetas)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("field 'n' must be positive");
        }
        if self.rho < 2 {
            return invalid("field 'rho' must be at least 2");
        }
        if let TruthPrior::TwoCenter { p } = self.truth {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("field 'truth.p' must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

pub fn gen_ranking_tasks(s: &RankingScenario) -> Result<(Vec<Permutation>, LabelingMatrix<Permutation>)> {
    s.validate()?;
    let thetas = s.resolved_thetas()?;
    let models: Vec<MallowsModel> =
        thetas.iter().map(|&t| MallowsModel::new(Permutation::identity(s.rho), t)).collect::<Result<_>>()?;
    let rows: Vec<(Permutation, Vec<Permutation>)> = (0..s.n)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(s.seed, Domain::Truth, t as u64, 0);
            let truth = match s.truth {
                TruthPrior::Uniform => {
                    let mut v: Vec<usize> = (0..s.rho).collect();
                    v.shuffle(&mut rng);
                    Permutation::from_vec_unchecked(v)
                }
                TruthPrior::TwoCenter { p } => {
                    if rng.random::<f64>() < p {
                        Permutation::identity(s.rho)
                    } else {
                        Permutation::reversal(s.rho)
                    }
                }
            };
            let lfs = models
                .iter()
                .enumerate()
                .map(|(a, model)| {
                    // Noise around the identity, relabeled through the truth.
                    let noise = model.sample(&mut substream(s.seed, Domain::Lf, t as u64, a as u64));
                    let v = noise.as_slice().iter().map(|&k| truth.as_slice()[k]).collect();
                    Permutation::from_vec_unchecked(v)
                })
                .collect();
            (truth, lfs)
        })
        .collect();
    let (truth, lfs): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok((truth, LabelingMatrix::from_rows(lfs)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionScenario {
    pub n: usize,
    pub seed: u64,
    /// `Var(Y)`.
    pub prior_variance: f64,
    /// `Cov(lf_a, Y)` per LF.
    pub accuracies: Vec<f64>,
    /// Full `Cov(lf)`; exclusive with `noise`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lf_covariance: Option<Vec<Vec<f64>>>,
    /// Conditional noise variances of independent LFs; implies
    /// `Cov(lf) = a a^T / Var(Y) + diag(noise)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Vec<f64>>,
}

impl RegressionScenario {
    /// LFs conditionally independent given `Y`.
    pub fn conditionally_independent(n: usize, prior_variance: f64, accuracies: Vec<f64>, noise: Vec<f64>, seed: u64) -> Self {
        RegressionScenario { n, seed, prior_variance, accuracies, lf_covariance: None, noise: Some(noise) }
    }

    /// `Cov(lf)`.
    pub fn lf_covariance(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.accuracies.len();
        match (&self.lf_covariance, &self.noise) {
            (Some(c), None) => {
                if c.len() != m || c.iter().any(|r| r.len() != m) {
                    return invalid(format!("field 'lf_covariance' must be {m}x{m}"));
                }
                Ok(c.clone())
            }
            (None, Some(noise)) => {
                if noise.len() != m {
                    return invalid(format!("field 'noise' must have {m} entries"));
                }
                Ok((0..m)
                    .map(|a| {
                        (0..m)
                            .map(|b| {
                                self.accuracies[a] * self.accuracies[b] / self.prior_variance
                                    + if a == b { noise[a] } else { 0.0 }
                            })
                            .collect()
                    })
                    .collect())
            }
            _ => invalid("regression scenario needs exactly one of 'lf_covariance' and 'noise'"),
        }
    }

    /// The `(m + 1) x (m + 1)` covariance of `(lf_1, ..., lf_m, Y)`.
    pub fn joint_covariance(&self) -> Result<Vec<Vec<f64>>> {
        let mut joint = self.lf_covariance()?;
        for (row, &a) in joint.iter_mut().zip(&self.accuracies) {
            row.push(a);
        }
        let mut last = self.accuracies.clone();
        last.push(self.prior_variance);
        joint.push(last);
        Ok(joint)
    }
}

pub fn gen_regression_tasks(s: &RegressionScenario) -> Result<(Vec<f64>, LabelingMatrix<f64>)> {
    if s.n == 0 {
        return invalid("field 'n' must be positive");
    }
    if !(s.prior_variance > 0.0) {
        return invalid("field 'prior_variance' must be positive");
    }
    let m = s.accuracies.len();
    if m == 0 {
        return invalid("field 'accuracies' is empty");
    }
    let joint = s.joint_covariance()?;
    let jm = DMatrix::from_fn(m + 1, m + 1, |i, j| joint[i][j]);
    if Cholesky::new(jm).is_none() {
        return invalid("joint covariance of labeling functions and truth is not positive definite");
    }
    let cov = s.lf_covariance()?;
    let a = DVector::from_column_slice(&s.accuracies);
    let cond = DMatrix::from_fn(m, m, |i, j| cov[i][j]) - &a * a.transpose() / s.prior_variance;
    let chol = Cholesky::new(cond).ok_or_else(|| Error::Generation("conditional covariance is not positive definite".into()))?;
    let l = chol.l();
    let sd = s.prior_variance.sqrt();
    let rows: Vec<(f64, Vec<f64>)> = (0..s.n)
        .into_par_iter()
        .map(|t| {
            let y = sd * substream(s.seed, Domain::Truth, t as u64, 0).sample::<f64, _>(StandardNormal);
            let mut rng = substream(s.seed, Domain::Lf, t as u64, 0);
            let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            let noise = &l * z;
            let lfs = (0..m).map(|k| s.accuracies[k] / s.prior_variance * y + noise[k]).collect();
            (y, lfs)
        })
        .collect();
    let (truth, lfs): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok((truth, LabelingMatrix::from_rows(lfs)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphScenario {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n: usize,
    pub thetas: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_retries")]
    pub max_retries: usize,
}

fn default_retries() -> usize {
    1000
}

/// Uniformly random simple graph with the given edge count, redrawn until
/// connected. Edges are sorted.
pub fn random_connected_graph(n_nodes: usize, n_edges: usize, seed: u64, max_retries: usize) -> Result<Vec<(usize, usize)>> {
    let total = n_nodes * n_nodes.saturating_sub(1) / 2;
    if n_nodes == 0 || n_edges > total || n_edges + 1 < n_nodes {
        return invalid(format!("cannot build a connected simple graph with {n_nodes} nodes and {n_edges} edges"));
    }
    // Pair index k -> (i, j), i < j, in lexicographic order.
    let pairs: Vec<(usize, usize)> = (0..n_nodes).flat_map(|i| ((i + 1)..n_nodes).map(move |j| (i, j))).collect();
    for attempt in 0..max_retries.max(1) {
        let mut rng = substream(seed, Domain::Graph, attempt as u64, 0);
        let mut chosen: Vec<usize> = index::sample(&mut rng, total, n_edges).into_vec();
        chosen.sort_unstable();
        let edges: Vec<(usize, usize)> = chosen.into_iter().map(|k| pairs[k]).collect();
        match graph_hop_metric(&edges, n_nodes) {
            Ok(_) => return Ok(edges),
            Err(Error::Disconnected(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation(format!("no connected graph after {max_retries} attempts")))
}

/// Draws a node with probability proportional to `exp(-theta d(node, center))`.
pub fn sample_node<R: Rng + ?Sized>(space: &FiniteMetricSpace, center: usize, theta: f64, rng: &mut R) -> usize {
    let weights: Vec<f64> = space.row(center).iter().map(|&d| (-theta * d).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    // Rounding left u at the top of the range.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(center)
}

pub struct GraphTasks {
    pub edges: Vec<(usize, usize)>,
    pub space: FiniteMetricSpace,
    pub truth: Vec<usize>,
    pub data: LabelingMatrix<usize>,
}

pub fn gen_graph_tasks(s: &GraphScenario) -> Result<GraphTasks> {
    if s.n == 0 {
        return invalid("field 'n' must be positive");
    }
    if s.thetas.is_empty() {
        return invalid("field 'thetas' is empty");
    }
    if let Some(t) = s.thetas.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return invalid(format!("field 'thetas': {t} is not a finite nonnegative value"));
    }
    let edges = random_connected_graph(s.n_nodes, s.n_edges, s.seed, s.max_retries)?;
    let space = graph_hop_metric(&edges, s.n_nodes)?;
    let rows: Vec<(usize, Vec<usize>)> = (0..s.n)
        .into_par_iter()
        .map(|t| {
            let y = substream(s.seed, Domain::Truth, t as u64, 0).random_range(0..s.n_nodes);
            let lfs = s
                .thetas
                .iter()
                .enumerate()
                .map(|(a, &theta)| sample_node(&space, y, theta, &mut substream(s.seed, Domain::Lf, t as u64, a as u64)))
                .collect();
            (y, lfs)
        })
        .collect();
    let (truth, lfs): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(GraphTasks { edges, space, truth, data: LabelingMatrix::from_rows(lfs)? })
}

/// Any supported scenario, as stored in scenario JSON files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Ranking(RankingScenario),
    Regression(RegressionScenario),
    Graph(GraphScenario),
}

impl Scenario {
    pub fn seed(&self) -> u64 {
        match self {
            Scenario::Ranking(s) => s.seed,
            Scenario::Regression(s) => s.seed,
            Scenario::Graph(s) => s.seed,
        }
    }
}
