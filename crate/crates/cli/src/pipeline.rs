//! Shared learn/infer/evaluate steps over any dataset kind.

use std::collections::BTreeMap;

use uws::formats::{write_labels, Dataset};
use uws::inference::{
    aggregate_tasks, CandidatePolicy, GaussianInference, NegativeWeights, RankingSpace, Rule, SquaredEuclidean,
    EXHAUSTIVE_THRESHOLD,
};
use uws::label_model::{LabelData, LabelModel};
use uws::metric_spaces::FiniteMetricSpace;
use uws::perm::{kendall_tau, Permutation};

use crate::error::{CmdResult, Failure};

pub fn label_data<'a>(data: &'a Dataset, metric: Option<&'a FiniteMetricSpace>) -> CmdResult<LabelData<'a>> {
    Ok(match data {
        Dataset::Rankings(d) => LabelData::Rankings(d),
        Dataset::Real(d) => LabelData::Real(d),
        Dataset::Nodes(d) => match metric {
            Some(space) => LabelData::Nodes(d, space),
            None => return Err(Failure::validation("node labels need --graph or --metric")),
        },
    })
}

#[derive(Clone, Copy, Debug)]
pub struct InferSettings {
    pub rule: Rule,
    pub restarts: usize,
    pub seed: u64,
    pub negative: NegativeWeights,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Labels {
    Rankings(Vec<Permutation>),
    Real(Vec<f64>),
    Nodes(Vec<usize>),
}

impl Labels {
    pub fn to_csv(&self) -> CmdResult<Vec<u8>> {
        let mut buf = Vec::new();
        match self {
            Labels::Rankings(l) => write_labels(l, "label", &mut buf)?,
            Labels::Real(l) => write_labels(l, "label", &mut buf)?,
            Labels::Nodes(l) => write_labels(l, "label", &mut buf)?,
        }
        Ok(buf)
    }
}

/// One pseudolabel per task. Majority vote ignores the model except for the
/// compatibility check.
pub fn infer(data: LabelData<'_>, model: Option<&LabelModel>, s: &InferSettings) -> CmdResult<Labels> {
    if let Some(model) = model {
        model.check_compatible(&data)?;
    }
    let weights = match (s.rule, model) {
        (Rule::MajorityVote, _) => None,
        (Rule::Weighted, Some(model)) => Some(model.thetas.as_slice()),
        (Rule::Weighted, None) => return Err(Failure::validation("--rule weighted needs --model")),
    };
    Ok(match data {
        LabelData::Rankings(d) => {
            let rho = d.rho()?;
            let policy = if rho <= EXHAUSTIVE_THRESHOLD {
                CandidatePolicy::EnumerateAll
            } else {
                CandidatePolicy::LocalSearch { restarts: s.restarts, seed: s.seed }
            };
            Labels::Rankings(aggregate_tasks(&RankingSpace { rho }, d, weights, policy, s.negative)?)
        }
        LabelData::Real(d) => match (s.rule, model.and_then(|m| m.gaussian.as_ref())) {
            (Rule::Weighted, Some(g)) => {
                let inf = GaussianInference::new(&g.accuracies, &g.covariance)?;
                Labels::Real(d.rows().map(|row| inf.predict(row)).collect::<uws::Result<_>>()?)
            }
            _ => Labels::Real(aggregate_tasks(&SquaredEuclidean, d, weights, CandidatePolicy::EnumerateAll, s.negative)?),
        },
        LabelData::Nodes(d, space) => {
            Labels::Nodes(aggregate_tasks(space, d, weights, CandidatePolicy::EnumerateAll, s.negative)?)
        }
    })
}

/// Quality of pseudolabels against the truth.
pub fn evaluate(pred: &Labels, truth: &Labels, metric: Option<&FiniteMetricSpace>) -> CmdResult<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    match (pred, truth) {
        (Labels::Rankings(p), Labels::Rankings(t)) if p.len() == t.len() => {
            let mut total = 0usize;
            for (a, b) in p.iter().zip(t) {
                total += kendall_tau(a, b)?;
            }
            out.insert("mean_kendall_tau".into(), total as f64 / p.len() as f64);
        }
        (Labels::Real(p), Labels::Real(t)) if p.len() == t.len() => {
            let mse = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64;
            out.insert("mse".into(), mse);
        }
        (Labels::Nodes(p), Labels::Nodes(t)) if p.len() == t.len() => {
            let hits = p.iter().zip(t).filter(|(a, b)| a == b).count();
            out.insert("accuracy".into(), hits as f64 / p.len() as f64);
            if let Some(space) = metric {
                if let Some(bad) = t.iter().find(|&&v| v >= space.len()) {
                    return Err(Failure::validation(format!("truth node {bad} outside the metric space")));
                }
                let d = p.iter().zip(t).map(|(&a, &b)| space.distance(a, b)).sum::<f64>() / p.len() as f64;
                out.insert("mean_distance".into(), d);
            }
        }
        _ => return Err(Failure::validation("truth does not match the dataset's label kind or task count")),
    }
    out.insert("n_tasks".into(), match pred {
        Labels::Rankings(p) => p.len(),
        Labels::Real(p) => p.len(),
        Labels::Nodes(p) => p.len(),
    } as f64);
    Ok(out)
}
