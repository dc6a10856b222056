//! Pseudolabel aggregation: `argmin_z sum_a w_a d(lf_a, z)` over a label
//! space, with majority vote as the equal-weight case.

mod gaussian;
mod kemeny;

use std::cmp::Ordering;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gaussian::{gaussian_conditional_mean, precision_matrix, GaussianInference};
pub use kemeny::{kemeny_exact, kemeny_exact_with_threshold, kemeny_local_search, kemeny_objective, EXHAUSTIVE_THRESHOLD};

use crate::data::LabelingMatrix;
use crate::error::{invalid, Error, Result};
use crate::metric_spaces::FiniteMetricSpace;
use crate::perm::{kendall_tau, Permutation};

/// Which labels are searched for the minimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidatePolicy {
    /// Every label in the space (closed form where one exists).
    EnumerateAll,
    /// Heuristic search; only rankings use it, other spaces enumerate.
    LocalSearch { restarts: usize, seed: u64 },
    /// Only the labels emitted by the LFs for this task.
    ObservedOnly,
}

/// Treatment of negative weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeWeights {
    /// Negative weights become zero.
    #[default]
    Clamp,
    /// The LF's label is replaced by its opposite and the weight negated.
    SignFlip,
}

/// Aggregation rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    MajorityVote,
    Weighted,
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mv" => Ok(Rule::MajorityVote),
            "weighted" => Ok(Rule::Weighted),
            other => invalid(format!("unknown rule '{other}'")),
        }
    }
}

/// A label space that can solve weighted aggregation problems.
pub trait LabelSpace: Sync {
    type Label: Clone + Send + Sync;

    fn distance(&self, a: &Self::Label, b: &Self::Label) -> f64;

    /// Order used to break ties.
    fn compare(&self, a: &Self::Label, b: &Self::Label) -> Ordering;

    /// The opposite label, for sign-flip mode.
    fn opposite(&self, label: &Self::Label) -> Result<Self::Label>;

    /// Minimizer for nonnegative weights with a positive sum.
    fn minimize(&self, labels: &[Self::Label], weights: &[f64], policy: CandidatePolicy) -> Result<Self::Label>;
}

/// Weighted objective `sum_a w_a d(lf_a, z)`.
pub fn objective<S: LabelSpace>(space: &S, labels: &[S::Label], weights: &[f64], z: &S::Label) -> f64 {
    labels.iter().zip(weights).map(|(l, w)| w * space.distance(l, z)).sum()
}

/// Argmin over explicit candidates. Candidates are visited in tie order and
/// a later one wins only if it improves by more than a tolerance relative to
/// the objective scale.
pub fn argmin_over<S: LabelSpace>(
    space: &S,
    mut candidates: Vec<S::Label>,
    labels: &[S::Label],
    weights: &[f64],
) -> Result<S::Label> {
    if candidates.is_empty() {
        return Err(Error::Configuration("empty candidate set".into()));
    }
    candidates.sort_by(|a, b| space.compare(a, b));
    let wsum: f64 = weights.iter().sum();
    let mut best: Option<(f64, S::Label)> = None;
    for c in candidates {
        let obj = objective(space, labels, weights, &c);
        let better = match &best {
            None => true,
            Some((b, _)) => obj < b - 1e-12 * (b.abs() + wsum),
        };
        if better {
            best = Some((obj, c));
        }
    }
    Ok(best.expect("nonempty").1)
}

fn check_problem(n_labels: usize, weights: &[f64]) -> Result<()> {
    if n_labels == 0 {
        return Err(Error::Configuration("no labels to aggregate".into()));
    }
    if weights.len() != n_labels {
        return invalid(format!("{} weights for {n_labels} labels", weights.len()));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
        return invalid(format!("weight {w} is not finite"));
    }
    Ok(())
}

/// Unweighted aggregation.
pub fn majority_vote<S: LabelSpace>(space: &S, labels: &[S::Label], policy: CandidatePolicy) -> Result<S::Label> {
    let ones = vec![1.0; labels.len()];
    check_problem(labels.len(), &ones)?;
    space.minimize(labels, &ones, policy)
}

/// Weighted aggregation with the given negative-weight policy.
pub fn weighted_aggregate<S: LabelSpace>(
    space: &S,
    labels: &[S::Label],
    weights: &[f64],
    policy: CandidatePolicy,
    negative: NegativeWeights,
) -> Result<S::Label> {
    check_problem(labels.len(), weights)?;
    let (labels, weights): (Vec<S::Label>, Vec<f64>) = match negative {
        NegativeWeights::Clamp => (labels.to_vec(), weights.iter().map(|w| w.max(0.0)).collect()),
        NegativeWeights::SignFlip => labels
            .iter()
            .zip(weights)
            .map(|(l, &w)| if w < 0.0 { space.opposite(l).map(|o| (o, -w)) } else { Ok((l.clone(), w)) })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
    };
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    space.minimize(&labels, &weights, policy)
}

/// Aggregates every task of a labeling matrix in parallel. For local
/// search each task gets its own seed derived from the policy seed.
pub fn aggregate_tasks<S: LabelSpace>(
    space: &S,
    data: &LabelingMatrix<S::Label>,
    weights: Option<&[f64]>,
    policy: CandidatePolicy,
    negative: NegativeWeights,
) -> Result<Vec<S::Label>> {
    (0..data.n_tasks())
        .into_par_iter()
        .map(|t| {
            let policy = match policy {
                CandidatePolicy::LocalSearch { restarts, seed } => {
                    CandidatePolicy::LocalSearch { restarts, seed: task_seed(seed, t as u64) }
                }
                other => other,
            };
            match weights {
                Some(w) => weighted_aggregate(space, data.row(t), w, policy, negative),
                None => majority_vote(space, data.row(t), policy),
            }
        })
        .collect()
}

fn task_seed(seed: u64, task: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ task.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rankings under Kendall tau.
#[derive(Clone, Copy, Debug)]
pub struct RankingSpace {
    pub rho: usize,
}

impl LabelSpace for RankingSpace {
    type Label = Permutation;

    fn distance(&self, a: &Permutation, b: &Permutation) -> f64 {
        kendall_tau(a, b).map_or(f64::INFINITY, |d| d as f64)
    }

    fn compare(&self, a: &Permutation, b: &Permutation) -> Ordering {
        a.cmp(b)
    }

    fn opposite(&self, label: &Permutation) -> Result<Permutation> {
        let mut v = label.as_slice().to_vec();
        v.reverse();
        Permutation::new(v)
    }

    fn minimize(&self, labels: &[Permutation], weights: &[f64], policy: CandidatePolicy) -> Result<Permutation> {
        if labels.iter().any(|p| p.len() != self.rho) {
            return invalid(format!("rankings must have length {}", self.rho));
        }
        match policy {
            CandidatePolicy::EnumerateAll => kemeny_exact(labels, weights),
            CandidatePolicy::LocalSearch { restarts, seed } => kemeny_local_search(labels, weights, restarts, seed),
            CandidatePolicy::ObservedOnly => argmin_over(self, labels.to_vec(), labels, weights),
        }
    }
}

/// Real values under squared Euclidean distance.
#[derive(Clone, Copy, Debug, Default)]
pub struct SquaredEuclidean;

impl LabelSpace for SquaredEuclidean {
    type Label = f64;

    fn distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b) * (a - b)
    }

    fn compare(&self, a: &f64, b: &f64) -> Ordering {
        a.total_cmp(b)
    }

    fn opposite(&self, label: &f64) -> Result<f64> {
        Ok(-label)
    }

    fn minimize(&self, labels: &[f64], weights: &[f64], policy: CandidatePolicy) -> Result<f64> {
        match policy {
            CandidatePolicy::ObservedOnly => argmin_over(self, labels.to_vec(), labels, weights),
            _ => {
                let wsum: f64 = weights.iter().sum();
                Ok(labels.iter().zip(weights).map(|(x, w)| w * x).sum::<f64>() / wsum)
            }
        }
    }
}

impl LabelSpace for FiniteMetricSpace {
    type Label = usize;

    fn distance(&self, a: &usize, b: &usize) -> f64 {
        FiniteMetricSpace::distance(self, *a, *b)
    }

    fn compare(&self, a: &usize, b: &usize) -> Ordering {
        a.cmp(b)
    }

    fn opposite(&self, _label: &usize) -> Result<usize> {
        Err(Error::Configuration("sign-flip mode is undefined on a finite metric space".into()))
    }

    fn minimize(&self, labels: &[usize], weights: &[f64], policy: CandidatePolicy) -> Result<usize> {
        if let Some(bad) = labels.iter().find(|&&v| v >= self.len()) {
            return invalid(format!("node {bad} outside a space of {} points", self.len()));
        }
        let candidates = match policy {
            CandidatePolicy::ObservedOnly => labels.to_vec(),
            _ => (0..self.len()).collect(),
        };
        argmin_over(self, candidates, labels, weights)
    }
}
