//! File formats.
//!
//! * Datasets: CSV with header `task_id,lf_id,<kind>` where `<kind>` is
//!   `perm` (comma-separated 0-based items), `value` (real) or `node` (index).
//! * Truth: `task_id,<kind>`; pseudolabels: `task_id,label`.
//! * Graphs: one `u v` edge per line; `#` starts a comment and an optional
//!   `# nodes N` line fixes the node count.
//! * Distance matrices and coordinates: headerless numeric CSV.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::LabelingMatrix;
use crate::error::{Error, Result};
use crate::perm::Permutation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Perm,
    Value,
    Node,
}

impl LabelKind {
    pub fn column(self) -> &'static str {
        match self {
            LabelKind::Perm => "perm",
            LabelKind::Value => "value",
            LabelKind::Node => "node",
        }
    }

    fn from_column(s: &str) -> Result<Self> {
        match s {
            "perm" => Ok(LabelKind::Perm),
            "value" => Ok(LabelKind::Value),
            "node" => Ok(LabelKind::Node),
            other => Err(Error::Parse(format!("unknown label column '{other}'; expected perm, value or node"))),
        }
    }
}

/// A label that can be written to and parsed from one CSV field.
pub trait CsvLabel: Sized + Clone {
    const KIND: LabelKind;
    fn to_field(&self) -> String;
    fn from_field(s: &str) -> Result<Self>;
}

impl CsvLabel for Permutation {
    const KIND: LabelKind = LabelKind::Perm;

    fn to_field(&self) -> String {
        self.to_string()
    }

    fn from_field(s: &str) -> Result<Self> {
        s.parse().map_err(|e: Error| Error::Parse(e.to_string()))
    }
}

impl CsvLabel for f64 {
    const KIND: LabelKind = LabelKind::Value;

    fn to_field(&self) -> String {
        format!("{self:?}")
    }

    fn from_field(s: &str) -> Result<Self> {
        let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("'{s}' is not a number")))?;
        if !v.is_finite() {
            return Err(Error::Parse(format!("'{s}' is not finite")));
        }
        Ok(v)
    }
}

impl CsvLabel for usize {
    const KIND: LabelKind = LabelKind::Node;

    fn to_field(&self) -> String {
        self.to_string()
    }

    fn from_field(s: &str) -> Result<Self> {
        s.trim().parse().map_err(|_| Error::Parse(format!("'{s}' is not a node index")))
    }
}

/// A dataset of any supported label kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Rankings(LabelingMatrix<Permutation>),
    Real(LabelingMatrix<f64>),
    Nodes(LabelingMatrix<usize>),
}

impl Dataset {
    pub fn kind(&self) -> LabelKind {
        match self {
            Dataset::Rankings(_) => LabelKind::Perm,
            Dataset::Real(_) => LabelKind::Value,
            Dataset::Nodes(_) => LabelKind::Node,
        }
    }

    pub fn n_tasks(&self) -> usize {
        match self {
            Dataset::Rankings(d) => d.n_tasks(),
            Dataset::Real(d) => d.n_tasks(),
            Dataset::Nodes(d) => d.n_tasks(),
        }
    }
}

pub fn write_dataset<T: CsvLabel, W: Write>(data: &LabelingMatrix<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["task_id", "lf_id", T::KIND.column()])?;
    for (t, row) in data.rows().enumerate() {
        for (a, label) in row.iter().enumerate() {
            w.write_record([t.to_string(), a.to_string(), label.to_field()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_index(s: &str, what: &str, line: u64) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("line {line}: {what} '{s}' is not a nonnegative integer")))
}

fn read_entries<T: CsvLabel>(records: csv::StringRecordsIter<'_, impl Read>) -> Result<LabelingMatrix<T>> {
    let mut cells: Vec<(usize, usize, T)> = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(Error::Parse(format!("line {line}: expected 3 fields, got {}", rec.len())));
        }
        let t = parse_index(&rec[0], "task_id", line)?;
        let a = parse_index(&rec[1], "lf_id", line)?;
        let label = T::from_field(&rec[2]).map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        cells.push((t, a, label));
    }
    if cells.is_empty() {
        return Err(Error::Parse("dataset has no rows".into()));
    }
    let n = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
    let m = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    if cells.len() != n * m {
        return Err(Error::Parse(format!(
            "dataset must contain every (task_id, lf_id) pair for {n} tasks x {m} labeling functions exactly once"
        )));
    }
    let mut slots: Vec<Option<T>> = vec![None; n * m];
    for (t, a, label) in cells {
        let slot = &mut slots[t * m + a];
        if slot.is_some() {
            return Err(Error::Parse(format!("duplicate entry for task {t}, labeling function {a}")));
        }
        *slot = Some(label);
    }
    let entries = slots.into_iter().map(|s| s.expect("all slots filled")).collect();
    LabelingMatrix::new(n, m, entries)
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.len() != 3 || &header[0] != "task_id" || &header[1] != "lf_id" {
        return Err(Error::Parse("dataset header must be task_id,lf_id,<perm|value|node>".into()));
    }
    Ok(match LabelKind::from_column(&header[2])? {
        LabelKind::Perm => Dataset::Rankings(read_entries(r.records())?),
        LabelKind::Value => Dataset::Real(read_entries(r.records())?),
        LabelKind::Node => Dataset::Nodes(read_entries(r.records())?),
    })
}

/// Writes `task_id,<column>` rows.
pub fn write_labels<T: CsvLabel, W: Write>(labels: &[T], column: &str, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["task_id", column])?;
    for (t, label) in labels.iter().enumerate() {
        w.write_record([t.to_string(), label.to_field()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `task_id,<label>` rows; task ids must be `0..n` in any order.
pub fn read_labels<T: CsvLabel, R: Read>(input: R) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    if r.headers()?.len() != 2 {
        return Err(Error::Parse("label file header must have two columns".into()));
    }
    let mut cells = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::Parse(format!("line {line}: expected 2 fields")));
        }
        cells.push((parse_index(&rec[0], "task_id", line)?, T::from_field(&rec[1])?));
    }
    cells.sort_by_key(|c| c.0);
    if cells.iter().enumerate().any(|(k, c)| c.0 != k) {
        return Err(Error::Parse("label file must contain task ids 0..n exactly once".into()));
    }
    Ok(cells.into_iter().map(|c| c.1).collect())
}

pub fn write_edge_list<W: Write>(edges: &[(usize, usize)], n_nodes: usize, mut out: W) -> Result<()> {
    writeln!(out, "# nodes {n_nodes}")?;
    for (u, v) in edges {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

/// Parses an edge list; returns `(edges, n_nodes)`.
pub fn read_edge_list<R: BufRead>(input: R) -> Result<(Vec<(usize, usize)>, usize)> {
    let mut edges = Vec::new();
    let mut declared = None;
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if let Some(comment) = text.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("nodes") {
                let n = parts.next().ok_or_else(|| Error::Parse(format!("line {}: missing node count", k + 1)))?;
                declared = Some(parse_index(n, "node count", k as u64 + 1)?);
            }
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let parts: Vec<&str> = text.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected 'u v'", k + 1)));
        }
        edges.push((parse_index(parts[0], "node", k as u64 + 1)?, parse_index(parts[1], "node", k as u64 + 1)?));
    }
    let implied = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = declared.unwrap_or(implied);
    if n < implied {
        return Err(Error::Parse(format!("edge references node {} but only {n} nodes are declared", implied - 1)));
    }
    Ok((edges, n))
}

/// Headerless numeric CSV.
pub fn write_matrix<W: Write>(rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(f64::from_field).collect::<Result<Vec<f64>>>()?);
    }
    Ok(rows)
}
