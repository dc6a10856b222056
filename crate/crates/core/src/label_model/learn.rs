use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moments::{empirical_pair_moments, hypercube_moments, mean_pair_distances, HypercubeMoments, PairMoments};
use super::triplets::{continuous_triplets, isotropic_accuracies, quadratic_triplets, resolve_signs};
use crate::data::{CoordinateEmbedding, EmbeddingDescriptor, LabelingMatrix, PairSignEmbedding, ScalarEmbedding, TableEmbedding};
use crate::error::{invalid, Error, Result};
use crate::inference::precision_matrix;
use crate::mallows::{backward_map, uniform_mean_distance, THETA_MAX};
use crate::metric_spaces::{classical_mds, finite_backward_map, FiniteMetricSpace};
use crate::perm::{kendall_tau, Permutation};

/// Smallest positive expected squared distance used for real-valued labels.
const REAL_DISTANCE_FLOOR: f64 = 1e-6;

/// Relative eigenvalue cutoff for the default MDS dimension.
const MDS_EIGEN_CUTOFF: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnPath {
    /// Quadratic triplets on `{-1,+1}` coordinates under a two-point prior.
    Hypercube,
    /// Continuous triplets on embedding coordinates.
    Continuous,
    /// Triplets on pairwise mean distances.
    Isotropic,
}

impl LearnPath {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnPath::Hypercube => "hypercube",
            LearnPath::Continuous => "continuous",
            LearnPath::Isotropic => "isotropic",
        }
    }
}

impl fmt::Display for LearnPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hypercube" => Ok(LearnPath::Hypercube),
            "continuous" => Ok(LearnPath::Continuous),
            "isotropic" => Ok(LearnPath::Isotropic),
            other => invalid(format!("unknown learning path '{other}'")),
        }
    }
}

/// How the partner pair `(b, c)` is chosen for each LF.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripletStrategy {
    /// The lexicographically smallest admissible pair whose moments are
    /// usable.
    #[default]
    First,
    /// Median of the estimates over every admissible pair whose moments are
    /// usable.
    Median,
}

impl FromStr for TripletStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(TripletStrategy::First),
            "median" => Ok(TripletStrategy::Median),
            other => invalid(format!("unknown triplet strategy '{other}'")),
        }
    }
}

/// Knowledge about the latent label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// Uniform over the label space.
    Uniform,
    /// Two latent labels whose embeddings are opposite on every coordinate;
    /// `p` is the probability that a coordinate equals `+1`.
    TwoPoint { p: f64 },
    /// `E[g(Y)_i^2]` per coordinate; a single value applies to all.
    SecondMoment { values: Vec<f64> },
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PriorSpec::Uniform => Ok(()),
            PriorSpec::TwoPoint { p } if *p > 0.0 && *p < 1.0 => Ok(()),
            PriorSpec::TwoPoint { p } => invalid(format!("two-point prior needs 0 < p < 1, got {p}")),
            PriorSpec::SecondMoment { values } if values.is_empty() => invalid("second-moment prior is empty"),
            PriorSpec::SecondMoment { values } => match values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                Some(v) => invalid(format!("second moments must be positive, got {v}")),
                None => Ok(()),
            },
        }
    }

    fn second_moments(&self, dim: usize) -> Result<Vec<f64>> {
        match self {
            PriorSpec::SecondMoment { values } if values.len() == 1 => Ok(vec![values[0]; dim]),
            PriorSpec::SecondMoment { values } if values.len() == dim => Ok(values.clone()),
            PriorSpec::SecondMoment { values } => {
                invalid(format!("second-moment prior has {} entries for dimension {dim}", values.len()))
            }
            _ => Err(Error::Configuration("this label space needs a second-moment prior".into())),
        }
    }
}

/// Pairs of LFs that are conditionally dependent given the true label.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationSet {
    edges: BTreeSet<(usize, usize)>,
}

impl CorrelationSet {
    pub fn new(edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return invalid(format!("correlation self-loop at labeling function {a}"));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(CorrelationSet { edges: set })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Admissible partner pairs `(b, c)`, `b < c`, for every LF, in
    /// lexicographic order. Errors if some LF has none.
    pub fn triplet_plan(&self, m: usize) -> Result<Vec<Vec<(usize, usize)>>> {
        if let Some(&(_, b)) = self.edges.iter().find(|&&(_, b)| b >= m) {
            return invalid(format!("correlation references labeling function {b} of {m}"));
        }
        (0..m)
            .map(|a| {
                let pairs: Vec<(usize, usize)> = (0..m)
                    .flat_map(|b| ((b + 1)..m).map(move |c| (b, c)))
                    .filter(|&(b, c)| {
                        b != a && c != a && !self.contains(a, b) && !self.contains(a, c) && !self.contains(b, c)
                    })
                    .collect();
                if pairs.is_empty() {
                    Err(Error::TripletUnavailable { lf: a })
                } else {
                    Ok(pairs)
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnOptions {
    pub path: LearnPath,
    pub triplets: TripletStrategy,
    /// An LF known to be better than random.
    pub anchor: Option<usize>,
    /// MDS dimension for finite metric spaces on the continuous path; by
    /// default every direction with a positive eigenvalue.
    pub mds_dim: Option<usize>,
}

impl LearnOptions {
    pub fn new(path: LearnPath) -> Self {
        LearnOptions { path, triplets: TripletStrategy::First, anchor: None, mds_dim: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    Ranking { rho: usize },
    Real { dim: usize },
    FiniteMetric { n_points: usize },
}

impl SpaceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SpaceKind::Ranking { .. } => "ranking",
            SpaceKind::Real { .. } => "real",
            SpaceKind::FiniteMetric { .. } => "finite_metric",
        }
    }
}

/// Observed LF outputs for one of the supported label spaces.
#[derive(Clone, Copy, Debug)]
pub enum LabelData<'a> {
    Rankings(&'a LabelingMatrix<Permutation>),
    Real(&'a LabelingMatrix<f64>),
    Nodes(&'a LabelingMatrix<usize>, &'a FiniteMetricSpace),
}

impl LabelData<'_> {
    pub fn n_lfs(&self) -> usize {
        match self {
            LabelData::Rankings(d) => d.n_lfs(),
            LabelData::Real(d) => d.n_lfs(),
            LabelData::Nodes(d, _) => d.n_lfs(),
        }
    }

    pub fn n_tasks(&self) -> usize {
        match self {
            LabelData::Rankings(d) => d.n_tasks(),
            LabelData::Real(d) => d.n_tasks(),
            LabelData::Nodes(d, _) => d.n_tasks(),
        }
    }

    pub fn space(&self) -> Result<SpaceKind> {
        Ok(match self {
            LabelData::Rankings(d) => SpaceKind::Ranking { rho: d.rho()? },
            LabelData::Real(_) => SpaceKind::Real { dim: 1 },
            LabelData::Nodes(d, space) => {
                if let Some(bad) = d.rows().flatten().find(|&&v| v >= space.len()) {
                    return invalid(format!("node {bad} outside a space of {} points", space.len()));
                }
                SpaceKind::FiniteMetric { n_points: space.len() }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyKind {
    /// `P(g(lf)_i = 1 | Y = y1)` per coordinate.
    ConditionalProbability,
    /// `E[g(lf)_i g(Y)_i]` per coordinate.
    SignedMoment,
    /// Only the aggregate expected distance is estimated.
    Distance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyEstimates {
    pub kind: AccuracyKind,
    /// `m x dim` raw per-coordinate estimates (empty for [`AccuracyKind::Distance`]).
    pub per_coordinate: Vec<Vec<f64>>,
    /// Raw `E[d(lf_a, Y)]` per LF, before any clamping.
    pub expected_distance: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseKind {
    /// `sum_i E[g(lf_a)_i g(lf_b)_i]`.
    EmbeddingSecondMoment,
    /// `E[d(lf_a, lf_b)]`.
    MeanDistance,
}

/// Gaussian parameters for real-valued labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    /// `E[Y^2]`.
    pub second_moment: f64,
    /// `E[lf_a Y]` per LF.
    pub accuracies: Vec<f64>,
    /// `E[lf_a lf_b]`.
    pub covariance: Vec<Vec<f64>>,
    /// Inverse of the joint `(m + 1) x (m + 1)` covariance of `(lf, Y)`.
    pub precision: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelModel {
    pub version: String,
    pub space: SpaceKind,
    pub path: LearnPath,
    pub triplets: TripletStrategy,
    pub embedding: EmbeddingDescriptor,
    pub prior: PriorSpec,
    pub n_tasks: usize,
    /// Canonical accuracy per LF.
    pub thetas: Vec<f64>,
    pub accuracies: AccuracyEstimates,
    pub pairwise_kind: PairwiseKind,
    pub pairwise_moments: Vec<Vec<f64>>,
    pub gaussian: Option<GaussianParams>,
}

impl LabelModel {
    pub fn n_lfs(&self) -> usize {
        self.thetas.len()
    }

    /// Every LF weighted equally; aggregation with it is majority vote.
    pub fn uniform(space: SpaceKind, m: usize) -> Self {
        LabelModel {
            version: crate::VERSION.to_string(),
            space,
            path: LearnPath::Isotropic,
            triplets: TripletStrategy::First,
            embedding: EmbeddingDescriptor { kind: "none".into(), dim: 0, exponent: 1 },
            prior: PriorSpec::Uniform,
            n_tasks: 0,
            thetas: vec![1.0; m],
            accuracies: AccuracyEstimates {
                kind: AccuracyKind::Distance,
                per_coordinate: Vec::new(),
                expected_distance: vec![f64::NAN; m],
            },
            pairwise_kind: PairwiseKind::MeanDistance,
            pairwise_moments: Vec::new(),
            gaussian: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: LabelModel = serde_json::from_str(s)?;
        if model.thetas.iter().any(|t| !t.is_finite()) {
            return invalid("label model contains a non-finite theta");
        }
        Ok(model)
    }

    /// Errors unless `data` lives in the same space with the same LF count.
    pub fn check_compatible(&self, data: &LabelData<'_>) -> Result<()> {
        let space = data.space()?;
        if space != self.space {
            return Err(Error::Configuration(format!(
                "model was learned on {:?} but the dataset is {:?}",
                self.space, space
            )));
        }
        if data.n_lfs() != self.n_lfs() {
            return Err(Error::Configuration(format!(
                "model has {} labeling functions but the dataset has {}",
                self.n_lfs(),
                data.n_lfs()
            )));
        }
        Ok(())
    }
}

/// Learns per-LF accuracies from LF outputs alone and maps them to
/// canonical parameters.
pub fn learn_label_model(
    data: LabelData<'_>,
    corr: &CorrelationSet,
    prior: &PriorSpec,
    opts: &LearnOptions,
) -> Result<LabelModel> {
    prior.validate()?;
    let m = data.n_lfs();
    if m < 3 {
        return Err(Error::TripletUnavailable { lf: 0 });
    }
    if let Some(a) = opts.anchor {
        if a >= m {
            return invalid(format!("anchor {a} out of range for {m} labeling functions"));
        }
    }
    let plan = corr.triplet_plan(m)?;
    let space = data.space()?;
    let base = |embedding, thetas, accuracies, pairwise_kind, pairwise_moments, gaussian| LabelModel {
        version: crate::VERSION.to_string(),
        space: space.clone(),
        path: opts.path,
        triplets: opts.triplets,
        embedding,
        prior: prior.clone(),
        n_tasks: data.n_tasks(),
        thetas,
        accuracies,
        pairwise_kind,
        pairwise_moments,
        gaussian,
    };
    match data {
        LabelData::Rankings(d) => {
            let rho = d.rho()?;
            if rho < 2 {
                return invalid("rankings need at least two items");
            }
            let emb = PairSignEmbedding { rho };
            let moments = empirical_pair_moments(d, &emb)?;
            let (accuracies, kind, pairwise) = match opts.path {
                LearnPath::Hypercube => {
                    let p = match prior {
                        PriorSpec::Uniform => 0.5,
                        PriorSpec::TwoPoint { p } => *p,
                        PriorSpec::SecondMoment { .. } => {
                            return Err(Error::Configuration(
                                "the hypercube path needs a two-point or uniform prior".into(),
                            ))
                        }
                    };
                    let hc = hypercube_moments(d, &emb)?;
                    let alpha = hypercube_accuracies(&hc, p, &plan, opts.triplets, opts.anchor)?;
                    let dist = hypercube_expected_distances(&hc, &alpha, p);
                    (
                        AccuracyEstimates {
                            kind: AccuracyKind::ConditionalProbability,
                            per_coordinate: alpha,
                            expected_distance: dist,
                        },
                        PairwiseKind::EmbeddingSecondMoment,
                        moments.summed_matrix(),
                    )
                }
                LearnPath::Continuous => {
                    let s = match prior {
                        PriorSpec::SecondMoment { .. } => prior.second_moments(emb.dim())?,
                        _ => vec![1.0; emb.dim()],
                    };
                    let acc = continuous_accuracies(&moments, &s, &plan, opts.triplets, opts.anchor)?;
                    let dist = acc.iter().map(|row| row.iter().map(|a| 0.5 * (1.0 - a)).sum()).collect();
                    (
                        AccuracyEstimates { kind: AccuracyKind::SignedMoment, per_coordinate: acc, expected_distance: dist },
                        PairwiseKind::EmbeddingSecondMoment,
                        moments.summed_matrix(),
                    )
                }
                LearnPath::Isotropic => {
                    let pd = mean_pair_distances(d, |x, y| kendall_tau(x, y).map_or(f64::NAN, |v| v as f64));
                    let dist = isotropic_expected_distances(&pd, m, &plan, opts.triplets)?;
                    (
                        AccuracyEstimates { kind: AccuracyKind::Distance, per_coordinate: Vec::new(), expected_distance: dist },
                        PairwiseKind::MeanDistance,
                        square(&pd, m),
                    )
                }
            };
            let thetas = accuracies
                .expected_distance
                .iter()
                .map(|&mean| ranking_theta(mean, rho))
                .collect::<Result<Vec<_>>>()?;
            Ok(base(emb.descriptor(), thetas, accuracies, kind, pairwise, None))
        }
        LabelData::Real(d) => match opts.path {
            LearnPath::Hypercube => {
                Err(Error::Configuration("the hypercube path applies to rankings only".into()))
            }
            LearnPath::Continuous => {
                let emb = ScalarEmbedding;
                let s = prior.second_moments(1)?;
                let moments = empirical_pair_moments(d, &emb)?;
                let acc = continuous_accuracies(&moments, &s, &plan, opts.triplets, opts.anchor)?;
                let a: Vec<f64> = acc.iter().map(|row| row[0]).collect();
                let gaussian = gaussian_params(&moments, &a, s[0])?;
                let thetas = (0..m).map(|k| 0.5 * gaussian.precision[k][k]).collect();
                let dist = (0..m).map(|k| moments.get(k, k, 0) - 2.0 * a[k] + s[0]).collect();
                let accuracies =
                    AccuracyEstimates { kind: AccuracyKind::SignedMoment, per_coordinate: acc, expected_distance: dist };
                Ok(base(
                    emb.descriptor(),
                    thetas,
                    accuracies,
                    PairwiseKind::EmbeddingSecondMoment,
                    moments.summed_matrix(),
                    Some(gaussian),
                ))
            }
            LearnPath::Isotropic => {
                let pd = mean_pair_distances(d, |x, y| (x - y) * (x - y));
                let dist = isotropic_expected_distances(&pd, m, &plan, opts.triplets)?;
                let thetas = dist.iter().map(|&v| 0.5 / v.max(REAL_DISTANCE_FLOOR)).collect();
                let accuracies =
                    AccuracyEstimates { kind: AccuracyKind::Distance, per_coordinate: Vec::new(), expected_distance: dist };
                Ok(base(
                    ScalarEmbedding.descriptor(),
                    thetas,
                    accuracies,
                    PairwiseKind::MeanDistance,
                    square(&pd, m),
                    None,
                ))
            }
        },
        LabelData::Nodes(d, metric) => match opts.path {
            LearnPath::Hypercube => {
                Err(Error::Configuration("the hypercube path applies to rankings only".into()))
            }
            LearnPath::Isotropic => {
                let pd = mean_pair_distances(d, |&x, &y| metric.distance(x, y));
                let dist = isotropic_expected_distances(&pd, m, &plan, opts.triplets)?;
                let thetas = dist.iter().map(|&v| finite_theta(metric, v)).collect::<Result<Vec<_>>>()?;
                let accuracies =
                    AccuracyEstimates { kind: AccuracyKind::Distance, per_coordinate: Vec::new(), expected_distance: dist };
                let embedding = EmbeddingDescriptor { kind: "metric".into(), dim: 0, exponent: 1 };
                Ok(base(embedding, thetas, accuracies, PairwiseKind::MeanDistance, square(&pd, m), None))
            }
            LearnPath::Continuous => {
                let n_points = metric.len();
                if n_points < 2 {
                    return invalid("a finite space needs at least two points for an embedding");
                }
                let dim = match opts.mds_dim {
                    Some(k) => k,
                    None => {
                        let ev = classical_mds(metric, 1)?.eigenvalues;
                        let cutoff = MDS_EIGEN_CUTOFF * ev[0].abs().max(1.0);
                        ev.iter().filter(|&&l| l > cutoff).count().clamp(1, n_points - 1)
                    }
                };
                let report = classical_mds(metric, dim)?;
                let emb = TableEmbedding { coords: report.coords, kind: "mds".into(), exponent: 2 };
                let s = match prior {
                    PriorSpec::Uniform => (0..dim)
                        .map(|i| emb.coords.iter().map(|c| c[i] * c[i]).sum::<f64>() / n_points as f64)
                        .collect(),
                    PriorSpec::SecondMoment { .. } => prior.second_moments(dim)?,
                    PriorSpec::TwoPoint { .. } => {
                        return Err(Error::Configuration("two-point priors apply to rankings only".into()))
                    }
                };
                let moments = empirical_pair_moments(d, &emb)?;
                let acc = continuous_accuracies(&moments, &s, &plan, opts.triplets, opts.anchor)?;
                let dist: Vec<f64> = (0..m)
                    .map(|a| (0..dim).map(|i| moments.get(a, a, i) - 2.0 * acc[a][i] + s[i]).sum())
                    .collect();
                let thetas = dist.iter().map(|&v| 0.5 * dim as f64 / v.max(REAL_DISTANCE_FLOOR)).collect();
                let accuracies =
                    AccuracyEstimates { kind: AccuracyKind::SignedMoment, per_coordinate: acc, expected_distance: dist };
                Ok(base(
                    emb.descriptor(),
                    thetas,
                    accuracies,
                    PairwiseKind::EmbeddingSecondMoment,
                    moments.summed_matrix(),
                    None,
                ))
            }
        },
    }
}

/// Mallows theta for an estimated mean distance. Means at or above the
/// uniform mean give `0`; nonpositive means give [`THETA_MAX`].
pub fn ranking_theta(mean: f64, rho: usize) -> Result<f64> {
    if mean.is_nan() {
        return Err(Error::Numeric("estimated mean distance is NaN".into()));
    }
    if mean >= uniform_mean_distance(rho) {
        return Ok(0.0);
    }
    if mean <= 0.0 {
        return Ok(THETA_MAX);
    }
    backward_map(mean, rho)
}

fn finite_theta(space: &FiniteMetricSpace, mean: f64) -> Result<f64> {
    if mean.is_nan() {
        return Err(Error::Numeric("estimated mean distance is NaN".into()));
    }
    if mean >= space.uniform_mean_distance() {
        return Ok(0.0);
    }
    if mean <= 0.0 {
        return Ok(THETA_MAX);
    }
    finite_backward_map(space, mean)
}

fn square(flat: &[f64], m: usize) -> Vec<Vec<f64>> {
    flat.chunks(m).map(<[f64]>::to_vec).collect()
}

/// Applies the triplet strategy to one LF.
fn pick(pairs: &[(usize, usize)], strategy: TripletStrategy, f: impl Fn(usize, usize) -> Result<f64>) -> Result<f64> {
    match strategy {
        TripletStrategy::First => {
            let mut first_err = None;
            for &(b, c) in pairs {
                match f(b, c) {
                    Ok(v) => return Ok(v),
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            Err(first_err.expect("at least one admissible pair"))
        }
        TripletStrategy::Median => {
            let mut first_err = None;
            let mut vals = Vec::with_capacity(pairs.len());
            for &(b, c) in pairs {
                match f(b, c) {
                    Ok(v) => vals.push(v),
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            if vals.is_empty() {
                return Err(first_err.expect("at least one admissible pair"));
            }
            vals.sort_by(f64::total_cmp);
            let k = vals.len();
            Ok(if k % 2 == 1 { vals[k / 2] } else { 0.5 * (vals[k / 2 - 1] + vals[k / 2]) })
        }
    }
}

/// Signed `E[g(lf_a)_i g(Y)_i]`, `m x dim`, from pairwise second moments.
pub fn continuous_accuracies(
    moments: &PairMoments,
    second_moments: &[f64],
    plan: &[Vec<(usize, usize)>],
    strategy: TripletStrategy,
    anchor: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    let (m, dim) = (moments.n_lfs(), moments.dim());
    if second_moments.len() != dim || plan.len() != m {
        return invalid("second moments or triplet plan do not match the moments");
    }
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mags = (0..m)
                .map(|a| {
                    pick(&plan[a], strategy, |b, c| {
                        continuous_triplets(moments.get(a, b, i), moments.get(a, c, i), moments.get(b, c, i), second_moments[i])
                            .map(|t| t.0)
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            resolve_signs(&mags, &moments.coordinate_matrix(i), anchor)
        })
        .collect::<Result<_>>()?;
    Ok(transpose(&columns, m))
}

/// `alpha = P(g(lf_a)_i = 1 | g(Y)_i = 1)`, `m x dim`, from hypercube
/// frequencies under a two-point prior with `P(g(Y)_i = 1) = p`.
pub fn hypercube_accuracies(
    hc: &HypercubeMoments,
    p: f64,
    plan: &[Vec<(usize, usize)>],
    strategy: TripletStrategy,
    anchor: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    let (m, dim) = (hc.n_lfs(), hc.dim());
    if plan.len() != m {
        return invalid("triplet plan does not match the moments");
    }
    let scale = (1.0 - p) / p;
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let l = |a: usize| hc.ones(a, i);
            let mags = (0..m)
                .map(|a| {
                    pick(&plan[a], strategy, |b, c| {
                        quadratic_triplets(hc.both(a, b, i), hc.both(a, c, i), hc.both(b, c, i), l(a), l(b), l(c), p)
                            .map(|t| (t.0 - l(a)).abs())
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let kappa: Vec<f64> = (0..m * m).map(|k| (hc.both(k / m, k % m, i) - l(k / m) * l(k % m)) * scale).collect();
            let delta = resolve_signs(&mags, &kappa, anchor)?;
            Ok((0..m).map(|a| l(a) + delta[a]).collect())
        })
        .collect::<Result<_>>()?;
    Ok(transpose(&columns, m))
}

/// `E[d_tau(lf_a, Y)] = sum_i P(g(lf_a)_i != g(Y)_i)` from hypercube
/// accuracies, with `alpha' = (l - p alpha) / (1 - p)` for the second class.
pub fn hypercube_expected_distances(hc: &HypercubeMoments, alpha: &[Vec<f64>], p: f64) -> Vec<f64> {
    alpha
        .iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(|(i, &al)| {
                    let alt = (hc.ones(a, i) - p * al) / (1.0 - p);
                    1.0 - (p * al + (1.0 - p) * (1.0 - alt))
                })
                .sum()
        })
        .collect()
}

/// `E[d(lf_a, Y)]` per LF from the row-major `m x m` mean pairwise distances.
pub fn isotropic_expected_distances(
    pair_distances: &[f64],
    m: usize,
    plan: &[Vec<(usize, usize)>],
    strategy: TripletStrategy,
) -> Result<Vec<f64>> {
    if pair_distances.len() != m * m || plan.len() != m {
        return invalid("pair distances or triplet plan do not match the number of labeling functions");
    }
    let d = |a: usize, b: usize| pair_distances[a * m + b];
    (0..m)
        .map(|a| pick(&plan[a], strategy, |b, c| isotropic_accuracies(d(a, b), d(a, c), d(b, c))))
        .collect()
}

fn transpose(columns: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    (0..m).map(|a| columns.iter().map(|col| col[a]).collect()).collect()
}

fn gaussian_params(moments: &PairMoments, acc: &[f64], second_moment: f64) -> Result<GaussianParams> {
    let m = moments.n_lfs();
    let covariance: Vec<Vec<f64>> = (0..m).map(|a| (0..m).map(|b| moments.get(a, b, 0)).collect()).collect();
    let mut joint = covariance.clone();
    for (row, &a) in joint.iter_mut().zip(acc) {
        row.push(a);
    }
    let mut last = acc.to_vec();
    last.push(second_moment);
    joint.push(last);
    let precision = precision_matrix(&joint)?;
    Ok(GaussianParams { second_moment, accuracies: acc.to_vec(), covariance, precision })
}
