//! Parameter sweeps over synthetic scenarios, written as long-format CSV.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use uws::formats::Dataset;
use uws::inference::{NegativeWeights, Rule};
use uws::label_model::{learn_label_model, CorrelationSet, LabelModel, LearnOptions, LearnPath, PriorSpec, TripletStrategy};
use uws::mallows::expected_distance;
use uws::metric_spaces::{finite_expected_distance, FiniteMetricSpace};
use uws::synthgen::{gen_graph_tasks, gen_ranking_tasks, gen_regression_tasks, Scenario};

use crate::commands::{default_path, set_seed};
use crate::error::{CmdResult, Failure};
use crate::files::{sibling, Session};
use crate::pipeline::{evaluate, infer, label_data, InferSettings, Labels};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vary {
    /// Number of tasks.
    N,
    /// Number of labeling functions (the first `m` of the scenario's).
    M,
    /// Common accuracy parameter of every labeling function.
    Theta,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: String,
    #[serde(deserialize_with = "crate::files::de_scenario")]
    pub scenario: Scenario,
    pub vary: Vary,
    pub grid: Vec<f64>,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub path: Option<LearnPath>,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
    #[serde(default)]
    pub triplets: TripletStrategy,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn one() -> usize {
    1
}

fn default_restarts() -> usize {
    8
}

impl SweepConfig {
    fn validate(&self) -> CmdResult<()> {
        if self.grid.is_empty() {
            return Err(Failure::validation("field 'grid' is empty"));
        }
        if self.replicates == 0 {
            return Err(Failure::validation("field 'replicates' must be positive"));
        }
        if let Some(v) = self.grid.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Failure::validation(format!("field 'grid': {v} is not a finite nonnegative value")));
        }
        if matches!(self.vary, Vary::N | Vary::M) {
            if let Some(v) = self.grid.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
                return Err(Failure::validation(format!("field 'grid': {v} is not a positive integer")));
            }
        }
        if self.vary == Vary::Theta && matches!(self.scenario, Scenario::Regression(_)) {
            return Err(Failure::validation("vary 'theta' applies to ranking and graph scenarios"));
        }
        Ok(())
    }
}

/// The scenario at one grid point, with the replicate's seed.
fn scenario_at(base: &Scenario, vary: Vary, value: f64, seed: u64) -> CmdResult<Scenario> {
    let mut s = base.clone();
    set_seed(&mut s, seed);
    let count = value as usize;
    match (&mut s, vary) {
        (Scenario::Ranking(r), Vary::N) => r.n = count,
        (Scenario::Regression(r), Vary::N) => r.n = count,
        (Scenario::Graph(g), Vary::N) => g.n = count,
        (Scenario::Ranking(r), Vary::M) => {
            let mut thetas = r.resolved_thetas()?;
            take(&mut thetas, count)?;
            r.thetas = Some(thetas);
            r.preset = None;
        }
        (Scenario::Graph(g), Vary::M) => take(&mut g.thetas, count)?,
        (Scenario::Regression(r), Vary::M) => {
            take(&mut r.accuracies, count)?;
            if let Some(noise) = &mut r.noise {
                take(noise, count)?;
            }
            if let Some(cov) = &mut r.lf_covariance {
                take(cov, count)?;
                for row in cov.iter_mut() {
                    take(row, count)?;
                }
            }
        }
        (Scenario::Ranking(r), Vary::Theta) => {
            let m = r.resolved_thetas()?.len();
            r.thetas = Some(vec![value; m]);
            r.preset = None;
        }
        (Scenario::Graph(g), Vary::Theta) => g.thetas.iter_mut().for_each(|t| *t = value),
        (Scenario::Regression(_), Vary::Theta) => unreachable!("rejected by validation"),
    }
    Ok(s)
}

fn take<T>(v: &mut Vec<T>, count: usize) -> CmdResult<()> {
    if count > v.len() {
        return Err(Failure::validation(format!("grid asks for {count} labeling functions but the scenario has {}", v.len())));
    }
    v.truncate(count);
    Ok(())
}

struct Generated {
    data: Dataset,
    truth: Labels,
    metric: Option<FiniteMetricSpace>,
    /// True `E[d(lf_a, Y)]` per LF.
    true_distance: Vec<f64>,
    /// True canonical parameters, where defined.
    true_theta: Option<Vec<f64>>,
    /// True `E[lf_a Y]`, for regression.
    true_accuracy: Option<Vec<f64>>,
}

fn generate(s: &Scenario) -> CmdResult<Generated> {
    Ok(match s {
        Scenario::Ranking(r) => {
            let thetas = r.resolved_thetas()?;
            let (truth, data) = gen_ranking_tasks(r)?;
            let true_distance = thetas.iter().map(|&t| expected_distance(t, r.rho)).collect::<uws::Result<_>>()?;
            Generated {
                data: Dataset::Rankings(data),
                truth: Labels::Rankings(truth),
                metric: None,
                true_distance,
                true_theta: Some(thetas),
                true_accuracy: None,
            }
        }
        Scenario::Regression(r) => {
            let cov = r.lf_covariance()?;
            let (truth, data) = gen_regression_tasks(r)?;
            let true_distance =
                r.accuracies.iter().enumerate().map(|(a, acc)| cov[a][a] - 2.0 * acc + r.prior_variance).collect();
            Generated {
                data: Dataset::Real(data),
                truth: Labels::Real(truth),
                metric: None,
                true_distance,
                true_theta: None,
                true_accuracy: Some(r.accuracies.clone()),
            }
        }
        Scenario::Graph(g) => {
            let tasks = gen_graph_tasks(g)?;
            let true_distance =
                g.thetas.iter().map(|&t| finite_expected_distance(&tasks.space, t)).collect::<uws::Result<_>>()?;
            Generated {
                data: Dataset::Nodes(tasks.data),
                truth: Labels::Nodes(tasks.truth),
                metric: Some(tasks.space),
                true_distance,
                true_theta: Some(g.thetas.clone()),
                true_accuracy: None,
            }
        }
    })
}

fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Scalar label error used for both rules.
fn label_error(metrics: &BTreeMap<String, f64>) -> f64 {
    if let Some(v) = metrics.get("mean_kendall_tau").or_else(|| metrics.get("mse")) {
        *v
    } else {
        1.0 - metrics["accuracy"]
    }
}

fn model_metrics(g: &Generated, model: &LabelModel, out: &mut BTreeMap<String, f64>) {
    out.insert("distance_error".into(), mean_abs_diff(&model.accuracies.expected_distance, &g.true_distance));
    if let Some(t) = &g.true_theta {
        let rel = model.thetas.iter().zip(t).filter(|(_, t)| **t > 0.0).map(|(e, t)| (e - t).abs() / t);
        let (sum, count) = rel.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        if count > 0 {
            out.insert("theta_rel_error".into(), sum / count as f64);
        }
    }
    if let (Some(truth), Some(gauss)) = (&g.true_accuracy, &model.gaussian) {
        out.insert("accuracy_error".into(), mean_abs_diff(&gauss.accuracies, truth));
    }
}

fn run_one(cfg: &SweepConfig, scenario: &Scenario, seed: u64) -> CmdResult<BTreeMap<String, f64>> {
    let g = generate(scenario)?;
    let data = label_data(&g.data, g.metric.as_ref())?;
    let settings = |rule| InferSettings { rule, restarts: cfg.restarts, seed, negative: NegativeWeights::Clamp };
    let mut out = BTreeMap::new();
    let mv = infer(data, None, &settings(Rule::MajorityVote))?;
    out.insert("label_error_mv".into(), label_error(&evaluate(&mv, &g.truth, g.metric.as_ref())?));
    let path = cfg.path.unwrap_or_else(|| default_path(g.data.kind()));
    let prior = cfg.prior.clone().unwrap_or(PriorSpec::Uniform);
    let opts = LearnOptions { path, triplets: cfg.triplets, anchor: None, mds_dim: None };
    match learn_label_model(data, &CorrelationSet::empty(), &prior, &opts) {
        Ok(model) => {
            out.insert("learn_failed".into(), 0.0);
            model_metrics(&g, &model, &mut out);
            match infer(data, Some(&model), &settings(Rule::Weighted)) {
                Ok(w) => {
                    out.insert("label_error_weighted".into(), label_error(&evaluate(&w, &g.truth, g.metric.as_ref())?));
                }
                Err(Failure::Runtime(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Err(e) if e.is_validation() => return Err(e.into()),
        Err(_) => {
            out.insert("learn_failed".into(), 1.0);
        }
    }
    Ok(out)
}

struct Row {
    grid_index: usize,
    replicate: usize,
    metric: String,
    value: f64,
}

/// Least-squares slope of `log y` against `log x`.
fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn sweep(config_path: &Path, out: &Path, seed: Option<u64>, replicates: Option<usize>) -> CmdResult<()> {
    let mut session = Session::new("sweep");
    let mut cfg: SweepConfig = session.read_json(config_path)?;
    if let Some(seed) = seed {
        set_seed(&mut cfg.scenario, seed);
    }
    if let Some(r) = replicates {
        cfg.replicates = r;
    }
    cfg.validate()?;
    let base_seed = cfg.scenario.seed();
    let jobs: Vec<(usize, usize)> =
        (0..cfg.grid.len()).flat_map(|g| (0..cfg.replicates).map(move |r| (g, r))).collect();
    let results: Vec<CmdResult<Vec<Row>>> = jobs
        .par_iter()
        .map(|&(gi, r)| {
            let seed = base_seed.wrapping_add(r as u64);
            let scenario = scenario_at(&cfg.scenario, cfg.vary, cfg.grid[gi], seed)?;
            let metrics = run_one(&cfg, &scenario, seed)?;
            Ok(metrics
                .into_iter()
                .map(|(metric, value)| Row { grid_index: gi, replicate: r, metric, value })
                .collect())
        })
        .collect();
    let mut rows: Vec<Row> = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| (a.grid_index, a.replicate, &a.metric).cmp(&(b.grid_index, b.replicate, &b.metric)));

    let vary = match cfg.vary {
        Vary::N => "n",
        Vary::M => "m",
        Vary::Theta => "theta",
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Runtime(e.to_string());
    w.write_record(["experiment", "vary", "grid_value", "replicate", "metric", "value"]).map_err(io)?;
    for row in &rows {
        w.write_record([
            cfg.experiment.as_str(),
            vary,
            &format!("{:?}", cfg.grid[row.grid_index]),
            &row.replicate.to_string(),
            &row.metric,
            &format!("{:?}", row.value),
        ])
        .map_err(io)?;
    }
    if cfg.vary == Vary::N {
        for (metric, slope) in slopes(&cfg.grid, &rows) {
            w.write_record([cfg.experiment.as_str(), vary, "all", "mean", &format!("{metric}_loglog_slope"), &format!("{slope:?}")])
                .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    session.write(out.to_path_buf(), bytes);
    let config = serde_json::to_value(&cfg)?;
    session.finish(&sibling(out, "manifest.json"), Some(base_seed), json!({ "sweep": config }))
}

/// Slope of the replicate-mean of each error metric against the grid, for
/// metrics present at every grid point.
fn slopes(grid: &[f64], rows: &[Row]) -> Vec<(String, f64)> {
    let mut by_metric: BTreeMap<&str, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.metric != "learn_failed") {
        let e = by_metric.entry(&row.metric).or_default().entry(row.grid_index).or_insert((0.0, 0));
        e.0 += row.value;
        e.1 += 1;
    }
    by_metric
        .into_iter()
        .filter(|(_, points)| points.len() == grid.len())
        .filter_map(|(metric, points)| {
            let xy: Vec<(f64, f64)> = points.iter().map(|(&g, &(s, c))| (grid[g], s / c as f64)).collect();
            loglog_slope(&xy).map(|s| (metric.to_string(), s))
        })
        .collect()
}
