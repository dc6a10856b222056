use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn uws(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uws")).args(args).env_remove("UWS_THREADS").output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_json(path: &Path, v: &Value) {
    fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

fn ranking_scenario(dir: &Path, n: usize) -> std::path::PathBuf {
    let path = dir.join("ranking.json");
    write_json(&path, &json!({ "kind": "ranking", "n": n, "rho": 5, "seed": 4, "thetas": [1.5, 0.8, 0.3, 0.3] }));
    path
}

#[test]
fn generate_writes_one_row_per_task_and_lf() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ranking_scenario(dir.path(), 60);
    let out = dir.path().join("gen");
    let run = uws(&["generate", "--scenario", p(&scenario), "--out", p(&out)]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert_eq!(line_count(&out.join("dataset.csv")), 1 + 60 * 4);
    assert_eq!(line_count(&out.join("truth.csv")), 1 + 60);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["outputs"].as_object().unwrap().len(), 3);
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ranking_scenario(dir.path(), 30);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(uws(&["generate", "--scenario", p(&scenario), "--out", p(&a), "--seed", "9"]).status.success());
    assert!(uws(&["generate", "--scenario", p(&scenario), "--out", p(&b)]).status.success());
    assert_ne!(fs::read(a.join("dataset.csv")).unwrap(), fs::read(b.join("dataset.csv")).unwrap());
}

#[test]
fn two_labeling_functions_cannot_be_learned() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("two.json");
    write_json(
        &scenario,
        &json!({ "kind": "regression", "n": 200, "seed": 1, "prior_variance": 1.0, "accuracies": [0.9, 0.5], "noise": [0.1, 0.5] }),
    );
    let out = dir.path().join("gen");
    assert!(uws(&["generate", "--scenario", p(&scenario), "--out", p(&out)]).status.success());
    let model = dir.path().join("model.json");
    let run = uws(&["learn", "--dataset", p(&out.join("dataset.csv")), "--out", p(&model)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("triplet unavailable"), "{}", stderr(&run));
    assert!(!model.exists());
}

#[test]
fn malformed_json_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.json");
    write_json(&scenario, &json!({ "kind": "ranking", "n": "many", "rho": 4, "seed": 1, "thetas": [1.0, 1.0, 1.0] }));
    let run = uws(&["generate", "--scenario", p(&scenario), "--out", p(&dir.path().join("x"))]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("`n`"), "{}", stderr(&run));

    write_json(&scenario, &json!({ "kind": "graph", "n_nodes": 10, "n_edges": 12, "n": 5, "seed": 1, "thetas": [1.0], "nodes": 3 }));
    let run = uws(&["generate", "--scenario", p(&scenario), "--out", p(&dir.path().join("x"))]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("`nodes`"), "{}", stderr(&run));

    let sweep = dir.path().join("sweep.json");
    write_json(
        &sweep,
        &json!({
            "experiment": "e",
            "scenario": { "kind": "ranking", "n": 10, "rho": 4, "seed": 1, "thetas": "high" },
            "vary": "n",
            "grid": [10]
        }),
    );
    let run = uws(&["sweep", "--scenario", p(&sweep), "--out", p(&dir.path().join("s.csv"))]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("`thetas`"), "{}", stderr(&run));
}

#[test]
fn exit_codes_for_usage_help_and_missing_files() {
    assert_eq!(uws(&["learn", "--bogus"]).status.code(), Some(1));
    assert_eq!(uws(&[]).status.code(), Some(1));
    assert_eq!(uws(&["--help"]).status.code(), Some(0));
    assert_eq!(uws(&["--version"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let run = uws(&["learn", "--dataset", p(&missing), "--out", p(&dir.path().join("m.json"))]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("not found"));
}

#[test]
fn learn_never_reads_the_truth() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ranking_scenario(dir.path(), 400);
    let out = dir.path().join("gen");
    assert!(uws(&["generate", "--scenario", p(&scenario), "--out", p(&out)]).status.success());
    fs::remove_file(out.join("truth.csv")).unwrap();
    let model = dir.path().join("model.json");
    let run = uws(&["learn", "--dataset", p(&out.join("dataset.csv")), "--out", p(&model)]);
    assert!(run.status.success(), "{}", stderr(&run));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("model.manifest.json")).unwrap()).unwrap();
    let inputs = manifest["inputs"].as_object().unwrap();
    assert_eq!(inputs.len(), 1);
    assert!(inputs.keys().all(|k| k.ends_with("dataset.csv")));
}

#[test]
fn equal_weights_reproduce_majority_vote() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ranking_scenario(dir.path(), 300);
    let out = dir.path().join("gen");
    assert!(uws(&["generate", "--scenario", p(&scenario), "--out", p(&out)]).status.success());
    let dataset = out.join("dataset.csv");
    let model = dir.path().join("model.json");
    assert!(uws(&["learn", "--dataset", p(&dataset), "--out", p(&model)]).status.success());

    let mut v: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    v["thetas"] = json!([1.0, 1.0, 1.0, 1.0]);
    let uniform = dir.path().join("uniform.json");
    write_json(&uniform, &v);

    let mv = dir.path().join("mv.csv");
    let w = dir.path().join("w.csv");
    assert!(uws(&["infer", "--dataset", p(&dataset), "--rule", "mv", "--out", p(&mv)]).status.success());
    let run = uws(&["infer", "--dataset", p(&dataset), "--model", p(&uniform), "--out", p(&w)]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert_eq!(fs::read(&mv).unwrap(), fs::read(&w).unwrap());
}

#[test]
fn weighted_inference_without_model_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ranking_scenario(dir.path(), 20);
    let out = dir.path().join("gen");
    assert!(uws(&["generate", "--scenario", p(&scenario), "--out", p(&out)]).status.success());
    let run = uws(&["infer", "--dataset", p(&out.join("dataset.csv")), "--out", p(&dir.path().join("l.csv"))]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn infer_with_truth_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ranking_scenario(dir.path(), 500);
    let out = dir.path().join("gen");
    assert!(uws(&["generate", "--scenario", p(&scenario), "--out", p(&out)]).status.success());
    let dataset = out.join("dataset.csv");
    let model = dir.path().join("model.json");
    assert!(uws(&["learn", "--dataset", p(&dataset), "--out", p(&model)]).status.success());
    let labels = dir.path().join("labels.csv");
    let run = uws(&[
        "infer", "--dataset", p(&dataset), "--model", p(&model), "--truth", p(&out.join("truth.csv")), "--out", p(&labels),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert_eq!(line_count(&labels), 501);
    let metrics: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("labels.metrics.json")).unwrap()).unwrap();
    let tau = metrics["mean_kendall_tau"].as_f64().unwrap();
    assert!((0.0..=10.0).contains(&tau));
    assert_eq!(metrics["n_tasks"], 500.0);
}

#[test]
fn node_labels_need_a_metric() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("graph.json");
    write_json(&scenario, &json!({ "kind": "graph", "n_nodes": 12, "n_edges": 18, "n": 200, "seed": 2, "thetas": [2.0, 1.0, 0.5] }));
    let out = dir.path().join("gen");
    assert!(uws(&["generate", "--scenario", p(&scenario), "--out", p(&out)]).status.success());
    let dataset = out.join("dataset.csv");
    let model = dir.path().join("model.json");
    let run = uws(&["learn", "--dataset", p(&dataset), "--out", p(&model)]);
    assert_eq!(run.status.code(), Some(2));
    let run = uws(&["learn", "--dataset", p(&dataset), "--graph", p(&out.join("graph.txt")), "--out", p(&model)]);
    assert!(run.status.success(), "{}", stderr(&run));
}

#[test]
fn sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    write_json(
        &cfg,
        &json!({
            "experiment": "small",
            "scenario": { "kind": "ranking", "n": 100, "rho": 4, "seed": 1, "thetas": [1.5, 1.0, 0.5] },
            "vary": "n",
            "grid": [100, 400],
            "replicates": 2
        }),
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(uws(&["sweep", "--scenario", p(&cfg), "--out", p(&a)]).status.success());
    assert!(uws(&["--threads", "1", "sweep", "--scenario", p(&cfg), "--out", p(&b)]).status.success());
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("experiment,vary,grid_value,replicate,metric,value"));
    assert!(text.contains("loglog_slope"));
}

#[test]
fn mds_writes_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let metric = dir.path().join("line.csv");
    fs::write(&metric, "0,1,2\n1,0,1\n2,1,0\n").unwrap();
    let coords = dir.path().join("coords.csv");
    let run = uws(&["mds", "--metric", p(&metric), "--dim", "1", "--out", p(&coords)]);
    assert!(run.status.success(), "{}", stderr(&run));
    let d: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("coords.descriptor.json")).unwrap()).unwrap();
    assert_eq!(d["dim"], 1);
    assert!(d["epsilon"].as_f64().unwrap() < 1e-9);
}

/// Mean value per grid point for one metric, skipping summary rows.
fn grid_means(csv_text: &str, metric: &str) -> Vec<(f64, f64)> {
    let mut sums: Vec<(f64, f64, usize)> = Vec::new();
    for line in csv_text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[4] != metric || f[3] == "mean" {
            continue;
        }
        let (g, v): (f64, f64) = (f[2].parse().unwrap(), f[5].parse().unwrap());
        match sums.iter_mut().find(|s| s.0 == g) {
            Some(s) => {
                s.1 += v;
                s.2 += 1;
            }
            None => sums.push((g, v, 1)),
        }
    }
    sums.sort_by(|a, b| a.0.total_cmp(&b.0));
    sums.into_iter().map(|(g, s, k)| (g, s / k as f64)).collect()
}

fn summary(csv_text: &str, metric: &str) -> f64 {
    let line = csv_text.lines().find(|l| l.contains(&format!(",all,mean,{metric},"))).unwrap();
    line.rsplit(',').next().unwrap().parse().unwrap()
}

#[test]
fn continuous_sweep_error_decays_at_root_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rate.csv");
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/sweep_rate.json");
    let run = uws(&["sweep", "--scenario", p(&cfg), "--replicates", "20", "--out", p(&out)]);
    assert!(run.status.success(), "{}", stderr(&run));
    let slope = summary(&fs::read_to_string(&out).unwrap(), "accuracy_error_loglog_slope");
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
}

#[test]
fn more_labeling_functions_lower_label_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.json");
    write_json(
        &cfg,
        &json!({
            "experiment": "lfs",
            "scenario": { "kind": "ranking", "n": 300, "rho": 5, "seed": 3, "thetas": [0.8, 0.5, 0.3, 0.8, 0.5, 0.3, 0.8, 0.5, 0.3, 0.8, 0.5, 0.3] },
            "vary": "m",
            "grid": [3, 6, 9, 12],
            "replicates": 5
        }),
    );
    let out = dir.path().join("m.csv");
    assert!(uws(&["sweep", "--scenario", p(&cfg), "--out", p(&out)]).status.success());
    let means = grid_means(&fs::read_to_string(&out).unwrap(), "label_error_weighted");
    assert_eq!(means.len(), 4);
    for w in means.windows(2) {
        assert!(w[1].1 <= w[0].1 * 1.05, "{means:?}");
    }
    assert!(means[3].1 < means[0].1);
}

#[test]
fn weighted_beats_majority_vote_on_heterogeneous_preset() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/ranking_heterogeneous.json");
    let gen = dir.path().join("gen");
    assert!(uws(&["generate", "--scenario", p(&scenario), "--out", p(&gen)]).status.success());
    let (dataset, truth) = (gen.join("dataset.csv"), gen.join("truth.csv"));
    let model = dir.path().join("model.json");
    assert!(uws(&["learn", "--dataset", p(&dataset), "--out", p(&model)]).status.success());
    let tau = |name: &str, extra: &[&str]| {
        let out = dir.path().join(format!("{name}.csv"));
        let mut args = vec!["infer", "--dataset", p(&dataset), "--truth", p(&truth), "--out", p(&out)];
        args.extend_from_slice(extra);
        let run = uws(&args);
        assert!(run.status.success(), "{}", stderr(&run));
        let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join(format!("{name}.metrics.json"))).unwrap()).unwrap();
        m["mean_kendall_tau"].as_f64().unwrap()
    };
    let weighted = tau("w", &["--model", p(&model)]);
    let mv = tau("mv", &["--rule", "mv"]);
    assert!(weighted < mv, "weighted {weighted} vs mv {mv}");
}
