//! Input loading and output writing. Every input read and every output
//! written is hashed into the command's manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use uws::formats::{read_dataset, read_edge_list, read_matrix, Dataset};
use uws::metric_spaces::{graph_hop_metric, FiniteMetricSpace};
use uws::synthgen::Scenario;

use crate::error::{CmdResult, Failure};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn located<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> String {
    match e.path().to_string().as_str() {
        "." => e.inner().to_string(),
        path => format!("field `{path}`: {}", e.inner()),
    }
}

fn parse_at<T: DeserializeOwned>(value: Value) -> Result<T, String> {
    serde_path_to_error::deserialize(value).map_err(located)
}

/// Dispatches on `kind` by hand so that errors keep the path of the
/// offending field, which an internally tagged enum would lose.
pub fn scenario_from_value(mut value: Value) -> Result<Scenario, String> {
    let obj = value.as_object_mut().ok_or("a scenario must be a JSON object")?;
    let kind = match obj.remove("kind") {
        Some(Value::String(k)) => k,
        Some(_) => return Err("field `kind`: expected a string".into()),
        None => return Err("missing field `kind`".into()),
    };
    match kind.as_str() {
        "ranking" => parse_at(value).map(Scenario::Ranking),
        "regression" => parse_at(value).map(Scenario::Regression),
        "graph" => parse_at(value).map(Scenario::Graph),
        other => Err(format!("field `kind`: unknown scenario kind '{other}' (expected ranking, regression or graph)")),
    }
}

/// `deserialize_with` adapter for scenarios nested in other files.
pub fn de_scenario<'de, D: Deserializer<'de>>(d: D) -> Result<Scenario, D::Error> {
    let value = Value::deserialize(d)?;
    scenario_from_value(value).map_err(D::Error::custom)
}

/// Tracks the files a command touches.
pub struct Session {
    command: &'static str,
    inputs: BTreeMap<String, String>,
    outputs: Vec<(PathBuf, Vec<u8>)>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: Option<u64>,
    config_hash: String,
    config: &'a Value,
    inputs: &'a BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Session {
    pub fn new(command: &'static str) -> Self {
        Session { command, inputs: BTreeMap::new(), outputs: Vec::new() }
    }

    pub fn read(&mut self, path: &Path) -> CmdResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Failure::validation(format!("{}: file not found", path.display())),
            _ => Failure::Runtime(format!("{}: {e}", path.display())),
        })?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn read_json<T: DeserializeOwned>(&mut self, path: &Path) -> CmdResult<T> {
        let bytes = self.read(path)?;
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        serde_path_to_error::deserialize(de).map_err(|e| Failure::validation(format!("{}: {}", path.display(), located(e))))
    }

    pub fn read_scenario(&mut self, path: &Path) -> CmdResult<Scenario> {
        let value: Value = self.read_json(path)?;
        scenario_from_value(value).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
    }

    pub fn read_dataset(&mut self, path: &Path) -> CmdResult<Dataset> {
        let bytes = self.read(path)?;
        read_dataset(&bytes[..]).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
    }

    /// A finite metric from either an edge list or a distance matrix.
    pub fn read_metric(&mut self, graph: Option<&Path>, metric: Option<&Path>) -> CmdResult<FiniteMetricSpace> {
        match (graph, metric) {
            (Some(g), None) => {
                let bytes = self.read(g)?;
                let (edges, n) = read_edge_list(BufReader::new(&bytes[..]))
                    .map_err(|e| Failure::validation(format!("{}: {e}", g.display())))?;
                Ok(graph_hop_metric(&edges, n)?)
            }
            (None, Some(m)) => {
                let bytes = self.read(m)?;
                let rows = read_matrix(&bytes[..]).map_err(|e| Failure::validation(format!("{}: {e}", m.display())))?;
                Ok(FiniteMetricSpace::from_rows(rows)?)
            }
            _ => Err(Failure::validation("node labels need exactly one of --graph and --metric")),
        }
    }

    pub fn write(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.outputs.push((path, bytes));
    }

    /// Writes every output plus the manifest at `manifest`.
    pub fn finish(self, manifest: &Path, seed: Option<u64>, config: Value) -> CmdResult<()> {
        let mut outputs = BTreeMap::new();
        for (path, bytes) in &self.outputs {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            }
            fs::write(path, bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            outputs.insert(file_name(path), sha256_hex(bytes));
        }
        let hashed = serde_json::json!({ "command": self.command, "config": config, "inputs": self.inputs });
        let doc = Manifest {
            command: self.command,
            version: uws::VERSION,
            seed,
            config_hash: sha256_hex(hashed.to_string().as_bytes()),
            config: &config,
            inputs: &self.inputs,
            outputs,
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(manifest, text).map_err(|e| Failure::Runtime(format!("{}: {e}", manifest.display())))
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// `dir/stem.<suffix>` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "out".to_string(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn json_bytes<T: Serialize>(value: &T) -> CmdResult<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}
