use std::path::{Path, PathBuf};

use serde_json::json;
use uws::formats::{write_dataset, write_edge_list, write_labels, write_matrix, CsvLabel, Dataset, LabelKind};
use uws::formats::read_labels;
use uws::inference::{NegativeWeights, Rule};
use uws::label_model::{learn_label_model, CorrelationSet, LabelModel, LearnOptions, LearnPath, PriorSpec, TripletStrategy};
use uws::metric_spaces::classical_mds;
use uws::perm::Permutation;
use uws::synthgen::{gen_graph_tasks, gen_ranking_tasks, gen_regression_tasks, Scenario};

use crate::error::{CmdResult, Failure};
use crate::files::{json_bytes, sibling, Session};
use crate::pipeline::{evaluate, infer, label_data, InferSettings, Labels};

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> uws::Result<()>) -> CmdResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn set_seed(scenario: &mut Scenario, seed: u64) {
    match scenario {
        Scenario::Ranking(s) => s.seed = seed,
        Scenario::Regression(s) => s.seed = seed,
        Scenario::Graph(s) => s.seed = seed,
    }
}

pub fn generate(scenario_path: &Path, out: &Path, seed: Option<u64>) -> CmdResult<()> {
    let mut session = Session::new("generate");
    let mut scenario = session.read_scenario(scenario_path)?;
    if let Some(seed) = seed {
        set_seed(&mut scenario, seed);
    }
    let file = |name: &str| out.join(name);
    let params = match &scenario {
        Scenario::Ranking(s) => {
            let thetas = s.resolved_thetas()?;
            let (truth, data) = gen_ranking_tasks(s)?;
            session.write(file("dataset.csv"), csv_bytes(|b| write_dataset(&data, b))?);
            session.write(file("truth.csv"), csv_bytes(|b| write_labels(&truth, Permutation::KIND.column(), b))?);
            json!({ "thetas": thetas })
        }
        Scenario::Regression(s) => {
            let cov = s.lf_covariance()?;
            let (truth, data) = gen_regression_tasks(s)?;
            session.write(file("dataset.csv"), csv_bytes(|b| write_dataset(&data, b))?);
            session.write(file("truth.csv"), csv_bytes(|b| write_labels(&truth, f64::KIND.column(), b))?);
            json!({ "prior_variance": s.prior_variance, "accuracies": s.accuracies, "lf_covariance": cov })
        }
        Scenario::Graph(s) => {
            let tasks = gen_graph_tasks(s)?;
            session.write(file("dataset.csv"), csv_bytes(|b| write_dataset(&tasks.data, b))?);
            session.write(file("truth.csv"), csv_bytes(|b| write_labels(&tasks.truth, usize::KIND.column(), b))?);
            session.write(file("graph.txt"), csv_bytes(|b| write_edge_list(&tasks.edges, s.n_nodes, b))?);
            json!({ "thetas": s.thetas })
        }
    };
    session.write(file("parameters.json"), json_bytes(&params)?);
    let seed = scenario.seed();
    session.finish(&file("manifest.json"), Some(seed), json!({ "scenario": scenario }))
}

pub struct LearnArgs<'a> {
    pub dataset: &'a Path,
    pub out: &'a Path,
    pub path: Option<LearnPath>,
    pub class_prob: Option<f64>,
    pub second_moment: Option<&'a [f64]>,
    pub triplets: TripletStrategy,
    pub anchor: Option<usize>,
    pub dim: Option<usize>,
    pub correlated: &'a [(usize, usize)],
    pub graph: Option<&'a Path>,
    pub metric: Option<&'a Path>,
}

pub fn default_path(kind: LabelKind) -> LearnPath {
    match kind {
        LabelKind::Perm | LabelKind::Value => LearnPath::Continuous,
        LabelKind::Node => LearnPath::Isotropic,
    }
}

pub fn prior_from(class_prob: Option<f64>, second_moment: Option<&[f64]>) -> PriorSpec {
    match (class_prob, second_moment) {
        (Some(p), _) => PriorSpec::TwoPoint { p },
        (None, Some(v)) => PriorSpec::SecondMoment { values: v.to_vec() },
        (None, None) => PriorSpec::Uniform,
    }
}

/// Never sees the truth: there is no truth parameter.
pub fn learn(a: &LearnArgs<'_>) -> CmdResult<()> {
    let mut session = Session::new("learn");
    let data = session.read_dataset(a.dataset)?;
    let metric = match data {
        Dataset::Nodes(_) => Some(session.read_metric(a.graph, a.metric)?),
        _ => None,
    };
    let path = a.path.unwrap_or_else(|| default_path(data.kind()));
    let prior = prior_from(a.class_prob, a.second_moment);
    let corr = CorrelationSet::new(a.correlated.iter().copied())?;
    let opts = LearnOptions { path, triplets: a.triplets, anchor: a.anchor, mds_dim: a.dim };
    let model = learn_label_model(label_data(&data, metric.as_ref())?, &corr, &prior, &opts)?;
    let mut text = model.to_json()?;
    text.push('\n');
    session.write(a.out.to_path_buf(), text.into_bytes());
    let config = json!({
        "path": path.as_str(),
        "prior": prior,
        "triplets": a.triplets,
        "anchor": a.anchor,
        "mds_dim": a.dim,
        "correlated": a.correlated,
    });
    session.finish(&sibling(a.out, "manifest.json"), None, config)
}

pub struct InferArgs<'a> {
    pub dataset: &'a Path,
    pub model: Option<&'a Path>,
    pub truth: Option<&'a Path>,
    pub out: &'a Path,
    pub settings: InferSettings,
    pub graph: Option<&'a Path>,
    pub metric: Option<&'a Path>,
}

pub fn read_truth(session: &mut Session, path: &Path, kind: LabelKind) -> CmdResult<Labels> {
    let bytes = session.read(path)?;
    let parsed = match kind {
        LabelKind::Perm => read_labels(&bytes[..]).map(Labels::Rankings),
        LabelKind::Value => read_labels(&bytes[..]).map(Labels::Real),
        LabelKind::Node => read_labels(&bytes[..]).map(Labels::Nodes),
    };
    parsed.map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

pub fn infer_cmd(a: &InferArgs<'_>) -> CmdResult<()> {
    let mut session = Session::new("infer");
    let data = session.read_dataset(a.dataset)?;
    let metric = match data {
        Dataset::Nodes(_) => Some(session.read_metric(a.graph, a.metric)?),
        _ => None,
    };
    let model = match a.model {
        Some(p) => {
            let bytes = session.read(p)?;
            let text = String::from_utf8(bytes).map_err(|_| Failure::validation("model file is not UTF-8"))?;
            Some(LabelModel::from_json(&text)?)
        }
        None => None,
    };
    let labels = infer(label_data(&data, metric.as_ref())?, model.as_ref(), &a.settings)?;
    session.write(a.out.to_path_buf(), labels.to_csv()?);
    if let Some(truth_path) = a.truth {
        let truth = read_truth(&mut session, truth_path, data.kind())?;
        let metrics = evaluate(&labels, &truth, metric.as_ref())?;
        session.write(sibling(a.out, "metrics.json"), json_bytes(&metrics)?);
    }
    let s = a.settings;
    let config = json!({
        "rule": match s.rule { Rule::MajorityVote => "mv", Rule::Weighted => "weighted" },
        "restarts": s.restarts,
        "negative_weights": match s.negative { NegativeWeights::Clamp => "clamp", NegativeWeights::SignFlip => "sign_flip" },
    });
    session.finish(&sibling(a.out, "manifest.json"), Some(s.seed), config)
}

pub fn graph_metric(graph: &Path, out: &Path) -> CmdResult<()> {
    let mut session = Session::new("graph-metric");
    let space = session.read_metric(Some(graph), None)?;
    let rows: Vec<Vec<f64>> = (0..space.len()).map(|i| space.row(i).to_vec()).collect();
    session.write(out.to_path_buf(), csv_bytes(|b| write_matrix(&rows, b))?);
    session.finish(&sibling(out, "manifest.json"), None, json!({}))
}

pub fn mds(graph: Option<&Path>, metric: Option<&Path>, dim: usize, out: &Path) -> CmdResult<()> {
    let mut session = Session::new("mds");
    let space = session.read_metric(graph, metric)?;
    let report = classical_mds(&space, dim)?;
    session.write(out.to_path_buf(), csv_bytes(|b| write_matrix(&report.coords, b))?);
    let descriptor = json!({
        "dim": report.target_dim,
        "epsilon": report.epsilon,
        "scale": report.scale,
        "exponent": 1,
        "eigenvalues": report.eigenvalues,
    });
    let descriptor_path: PathBuf = sibling(out, "descriptor.json");
    session.write(descriptor_path, json_bytes(&descriptor)?);
    session.finish(&sibling(out, "manifest.json"), None, json!({ "dim": dim }))
}
