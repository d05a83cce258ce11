//! Data containers and tab-separated file I/O.
//!
//! Every container validates its invariants on construction and is immutable
//! afterwards. Numbers are written with 17 significant digits so that a
//! write/load cycle reproduces every `f64` bit for bit.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Formats a double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

fn check_unique(ids: &[String], kind: &'static str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

/// Samples × features matrix with row and column identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    sample_ids: Vec<String>,
    feature_ids: Vec<String>,
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(sample_ids: Vec<String>, feature_ids: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let (n, m) = values.dim();
        if n != sample_ids.len() || m != feature_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {n}x{m} but got {} sample ids and {} feature ids",
                sample_ids.len(),
                feature_ids.len()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 samples, got {n}")));
        }
        if m < 1 {
            return Err(Error::InvalidInput("need at least 1 feature".into()));
        }
        check_unique(&sample_ids, "sample")?;
        check_unique(&feature_ids, "feature")?;
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {v} at sample {i}, feature {j}"
            )));
        }
        Ok(Self {
            sample_ids,
            feature_ids,
            values,
        })
    }

    /// Builds a matrix with generated identifiers `s0..`, `f0..`.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let (n, m) = values.dim();
        let samples = (0..n).map(|i| format!("s{i}")).collect();
        let features = (0..m).map(|j| format!("f{j}")).collect();
        Self::new(samples, features, values)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn column(&self, p: usize) -> ArrayView1<'_, f64> {
        self.values.column(p)
    }

    /// Restricts to the given rows, in the given order.
    pub fn select_samples(&self, rows: &[usize]) -> Result<Self> {
        let values = self.values.select(Axis(0), rows);
        let ids = rows.iter().map(|&i| self.sample_ids[i].clone()).collect();
        Self::new(ids, self.feature_ids.clone(), values)
    }
}

/// Phenotype vector keyed by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct Phenotype {
    sample_ids: Vec<String>,
    values: Array1<f64>,
}

impl Phenotype {
    pub fn new(sample_ids: Vec<String>, values: Array1<f64>) -> Result<Self> {
        if sample_ids.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} sample ids for {} phenotype values",
                sample_ids.len(),
                values.len()
            )));
        }
        check_unique(&sample_ids, "sample")?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite phenotype value".into()));
        }
        let first = values.first().copied();
        if values.iter().all(|v| Some(*v) == first) {
            return Err(Error::ConstantPhenotype);
        }
        Ok(Self { sample_ids, values })
    }

    pub fn from_values(values: Array1<f64>) -> Result<Self> {
        let ids = (0..values.len()).map(|i| format!("s{i}")).collect();
        Self::new(ids, values)
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn select_samples(&self, rows: &[usize]) -> Result<Self> {
        let values = self.values.select(Axis(0), rows);
        let ids = rows.iter().map(|&i| self.sample_ids[i].clone()).collect();
        Self::new(ids, values)
    }
}

/// Undirected weighted edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected weighted graph over named nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNetwork {
    node_ids: Vec<String>,
    edges: Vec<Edge>,
}

impl WeightedNetwork {
    /// Validates and canonicalizes edges so that `u < v`.
    pub fn new(node_ids: Vec<String>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        check_unique(&node_ids, "node")?;
        let n = node_ids.len();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (line, (a, b, w)) in edges.into_iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if a == b {
                return Err(Error::SelfLoop {
                    id: node_ids[a].clone(),
                    line: line + 1,
                });
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NonPositiveWeight { weight: w, line: line + 1 });
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(Error::DuplicateEdge {
                    a: node_ids[u].clone(),
                    b: node_ids[v].clone(),
                    line: line + 1,
                });
            }
            out.push(Edge { u, v, w });
        }
        Ok(Self { node_ids, edges: out })
    }

    /// Network over nodes named `"0".."n-1"`.
    pub fn with_node_count(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect(), edges)
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_nodes()];
        for e in &self.edges {
            d[e.u] += e.w;
            d[e.v] += e.w;
        }
        d
    }

    /// Neighbor lists `(neighbor, weight)` in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        adj
    }

    /// Same topology with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            node_ids: self.node_ids.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge { w: e.w * factor, ..*e })
                .collect(),
        }
    }
}

/// Many-to-many feature → gene assignment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureGeneMap {
    pairs: Vec<(String, String)>,
}

impl FeatureGeneMap {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (f, g) in &pairs {
            if f.is_empty() || g.is_empty() {
                return Err(Error::InvalidInput("empty feature or gene id in mapping".into()));
            }
            if !seen.insert((f.as_str(), g.as_str())) {
                return Err(Error::DuplicateId {
                    kind: "feature-gene pair",
                    id: format!("{f}\t{g}"),
                });
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }
}

/// Parameters recorded with a selection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionParams {
    pub lambda: f64,
    pub eta: f64,
    pub mu: f64,
}

/// Selected feature indices plus the objective they achieve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionSet {
    selected: Vec<usize>,
    objective_value: f64,
    params: SelectionParams,
}

impl SelectionSet {
    /// Sorts and validates `selected` against the feature count `m`.
    pub fn new(mut selected: Vec<usize>, m: usize, objective_value: f64, params: SelectionParams) -> Result<Self> {
        selected.sort_unstable();
        if selected.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate index in selection".into()));
        }
        if selected.last().is_some_and(|&p| p >= m) {
            return Err(Error::InvalidInput(format!("selected index out of range for {m} features")));
        }
        if !objective_value.is_finite() {
            return Err(Error::InvalidInput("non-finite objective".into()));
        }
        Ok(Self {
            selected,
            objective_value,
            params,
        })
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn objective_value(&self) -> f64 {
        self.objective_value
    }

    pub fn params(&self) -> SelectionParams {
        self.params
    }

    pub fn contains(&self, p: usize) -> bool {
        self.selected.binary_search(&p).is_ok()
    }
}

/// Regression weights and solver metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub beta: Array1<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CoefficientVector {
    /// Indices of the nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(p, _)| p)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Loading

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank, non-comment lines with their 1-based line number.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_number(path: &Path, row: usize, column: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumeric {
        path: path.to_path_buf(),
        row,
        column,
        cell: cell.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite {
            path: path.to_path_buf(),
            row,
            column,
            value: v,
        });
    }
    Ok(v)
}

/// Parses `sample_id<TAB>f1<TAB>f2...` with one row per sample.
///
/// `path` is only used to label errors. Rows are counted from 1 with the
/// header being row 1; columns are counted from 1.
pub fn parse_feature_matrix(text: &str, path: &Path) -> Result<FeatureMatrix> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let header = lines.next().ok_or_else(|| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: "empty file".into(),
    })?;
    let mut head = header.split('\t');
    let first = head.next().unwrap_or_default();
    if first.trim().is_empty() {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: "first column must name the sample id column".into(),
        });
    }
    let feature_ids: Vec<String> = head.map(str::to_string).collect();
    if feature_ids.is_empty() || feature_ids.iter().any(|f| f.trim().is_empty()) {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: "expected at least one non-empty feature id".into(),
        });
    }
    check_unique(&feature_ids, "feature")?;
    let m = feature_ids.len();

    let mut sample_ids = Vec::new();
    let mut flat = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != m + 1 {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                found: fields.len(),
                expected: m + 1,
            });
        }
        sample_ids.push(fields[0].to_string());
        for (j, cell) in fields[1..].iter().enumerate() {
            flat.push(parse_number(path, row, j + 2, cell)?);
        }
    }
    check_unique(&sample_ids, "sample")?;
    let n = sample_ids.len();
    let values = Array2::from_shape_vec((n, m), flat).expect("row lengths checked");
    FeatureMatrix::new(sample_ids, feature_ids, values)
}

pub fn load_feature_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    parse_feature_matrix(&read_text(path)?, path)
}

/// Parses `sample_id<TAB>value` lines.
pub fn parse_phenotype(text: &str, path: &Path) -> Result<Phenotype> {
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (row, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                found: fields.len(),
                expected: 2,
            });
        }
        ids.push(fields[0].to_string());
        values.push(parse_number(path, row, 2, fields[1])?);
    }
    Phenotype::new(ids, Array1::from(values))
}

pub fn load_phenotype(path: impl AsRef<Path>) -> Result<Phenotype> {
    let path = path.as_ref();
    parse_phenotype(&read_text(path)?, path)
}

/// Parses `id_a<TAB>id_b[<TAB>weight]` lines against a fixed node universe.
pub fn parse_network(text: &str, path: &Path, node_universe: &[String]) -> Result<WeightedNetwork> {
    let index: HashMap<&str, usize> = node_universe
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for (line, text_line) in data_lines(text) {
        let fields: Vec<&str> = text_line.split('\t').collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row: line,
                found: fields.len(),
                expected: 3,
            });
        }
        let lookup = |id: &str| {
            index.get(id).copied().ok_or_else(|| Error::UnknownNode {
                id: id.to_string(),
                line,
            })
        };
        let a = lookup(fields[0])?;
        let b = lookup(fields[1])?;
        let w = match fields.get(2) {
            Some(cell) => parse_number(path, line, 3, cell)?,
            None => 1.0,
        };
        if a == b {
            return Err(Error::SelfLoop {
                id: fields[0].to_string(),
                line,
            });
        }
        if w <= 0.0 {
            return Err(Error::NonPositiveWeight { weight: w, line });
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::DuplicateEdge {
                a: fields[0].to_string(),
                b: fields[1].to_string(),
                line,
            });
        }
        edges.push((a, b, w));
    }
    WeightedNetwork::new(node_universe.to_vec(), edges)
}

pub fn load_network(path: impl AsRef<Path>, node_universe: &[String]) -> Result<WeightedNetwork> {
    let path = path.as_ref();
    parse_network(&read_text(path)?, path, node_universe)
}

/// Node ids appearing in the first two columns of an edge list, in order of
/// first appearance.
pub fn network_node_ids(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut seen = HashSet::new();
    let mut ids = Vec::new();
    for (_, line) in data_lines(&text) {
        for id in line.split('\t').take(2) {
            if seen.insert(id.to_string()) {
                ids.push(id.to_string());
            }
        }
    }
    Ok(ids)
}

/// Parses `feature_id<TAB>gene_id` lines.
pub fn parse_mapping(text: &str, path: &Path) -> Result<FeatureGeneMap> {
    let mut pairs = Vec::new();
    for (row, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                found: fields.len(),
                expected: 2,
            });
        }
        pairs.push((fields[0].to_string(), fields[1].to_string()));
    }
    FeatureGeneMap::new(pairs)
}

pub fn load_mapping(path: impl AsRef<Path>) -> Result<FeatureGeneMap> {
    let path = path.as_ref();
    parse_mapping(&read_text(path)?, path)
}

/// Feature groups read from `group_id<TAB>feature_id` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGroups {
    /// In order of first appearance.
    pub group_ids: Vec<String>,
    /// Feature indices per group, ascending.
    pub members: Vec<Vec<usize>>,
}

pub fn parse_groups(text: &str, path: &Path, feature_ids: &[String]) -> Result<FeatureGroups> {
    let index: HashMap<&str, usize> = feature_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut group_ids: Vec<String> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (row, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                found: fields.len(),
                expected: 2,
            });
        }
        let &p = index.get(fields[1]).ok_or_else(|| Error::UnknownNode {
            id: fields[1].to_string(),
            line: row,
        })?;
        let g = *slot.entry(fields[0].to_string()).or_insert_with(|| {
            group_ids.push(fields[0].to_string());
            members.push(Vec::new());
            members.len() - 1
        });
        if !members[g].contains(&p) {
            members[g].push(p);
        }
    }
    for m in &mut members {
        m.sort_unstable();
    }
    Ok(FeatureGroups { group_ids, members })
}

pub fn load_groups(path: impl AsRef<Path>, feature_ids: &[String]) -> Result<FeatureGroups> {
    let path = path.as_ref();
    parse_groups(&read_text(path)?, path, feature_ids)
}

/// Reads a two-column `id<TAB>number` file into an ordered list.
pub fn load_keyed_values(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (row, line) in data_lines(&text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                found: fields.len(),
                expected: 2,
            });
        }
        out.push((fields[0].to_string(), parse_number(path, row, 2, fields[1])?));
    }
    Ok(out)
}

/// Splits every data line of a file into tab-separated fields.
pub(crate) fn load_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = read_text(path)?;
    Ok(data_lines(&text)
        .map(|(row, l)| (row, l.split('\t').map(str::to_string).collect()))
        .collect())
}

pub(crate) fn parse_cell(path: &Path, row: usize, column: usize, cell: &str) -> Result<f64> {
    parse_number(path, row, column, cell)
}

// ---------------------------------------------------------------------------
// Alignment

/// Feature matrix and phenotype restricted to their shared samples.
#[derive(Debug, Clone)]
pub struct Aligned {
    pub features: FeatureMatrix,
    pub phenotype: Phenotype,
    /// Samples present only in the feature matrix.
    pub dropped_from_features: Vec<String>,
    /// Samples present only in the phenotype.
    pub dropped_from_phenotype: Vec<String>,
}

/// Restricts both inputs to the common sample ids, in feature-matrix order.
pub fn align(x: &FeatureMatrix, y: &Phenotype) -> Result<Aligned> {
    let y_index: HashMap<&str, usize> = y
        .sample_ids()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut x_rows = Vec::new();
    let mut y_rows = Vec::new();
    let mut dropped_from_features = Vec::new();
    for (i, s) in x.sample_ids().iter().enumerate() {
        match y_index.get(s.as_str()) {
            Some(&j) => {
                x_rows.push(i);
                y_rows.push(j);
            }
            None => dropped_from_features.push(s.clone()),
        }
    }
    if x_rows.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let kept: HashSet<usize> = y_rows.iter().copied().collect();
    let dropped_from_phenotype = y
        .sample_ids()
        .iter()
        .enumerate()
        .filter(|(j, _)| !kept.contains(j))
        .map(|(_, s)| s.clone())
        .collect();
    Ok(Aligned {
        features: x.select_samples(&x_rows)?,
        phenotype: y.select_samples(&y_rows)?,
        dropped_from_features,
        dropped_from_phenotype,
    })
}

// ---------------------------------------------------------------------------
// Writing

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_feature_matrix(x: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("sample_id");
    for f in x.feature_ids() {
        out.push('\t');
        out.push_str(f);
    }
    out.push('\n');
    for (i, row) in x.values().rows().into_iter().enumerate() {
        out.push_str(&x.sample_ids()[i]);
        for v in row {
            out.push('\t');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

pub fn write_phenotype(y: &Phenotype, path: impl AsRef<Path>) -> Result<()> {
    let out: String = y
        .sample_ids()
        .iter()
        .zip(y.values())
        .map(|(s, v)| format!("{s}\t{}\n", fmt_f64(*v)))
        .collect();
    write_text(path.as_ref(), &out)
}

pub fn write_network(g: &WeightedNetwork, path: impl AsRef<Path>) -> Result<()> {
    let ids = g.node_ids();
    let out: String = g
        .edges()
        .iter()
        .map(|e| format!("{}\t{}\t{}\n", ids[e.u], ids[e.v], fmt_f64(e.w)))
        .collect();
    write_text(path.as_ref(), &out)
}

/// Writes `feature_id<TAB>beta` lines.
pub fn write_coefficients(beta: &CoefficientVector, feature_ids: &[String], path: impl AsRef<Path>) -> Result<()> {
    let out: String = feature_ids
        .iter()
        .zip(beta.beta.iter())
        .map(|(f, b)| format!("{f}\t{}\n", fmt_f64(*b)))
        .collect();
    write_text(path.as_ref(), &out)
}

/// Structured result document written by every selection method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub method: String,
    pub params: BTreeMap<String, f64>,
    pub selected_ids: Vec<String>,
    pub objective: f64,
    pub converged: bool,
    pub runtime_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl Report {
    pub fn from_selection(method: &str, sel: &SelectionSet, feature_ids: &[String], runtime_ms: u64) -> Self {
        let p = sel.params();
        let params = BTreeMap::from([
            ("eta".to_string(), p.eta),
            ("lambda".to_string(), p.lambda),
            ("mu".to_string(), p.mu),
        ]);
        Self {
            method: method.to_string(),
            params,
            selected_ids: sel.selected().iter().map(|&i| feature_ids[i].clone()).collect(),
            objective: sel.objective_value(),
            converged: true,
            runtime_ms,
            details: None,
        }
    }

    pub fn from_coefficients(
        method: &str,
        params: BTreeMap<String, f64>,
        beta: &CoefficientVector,
        feature_ids: &[String],
        runtime_ms: u64,
    ) -> Self {
        Self {
            method: method.to_string(),
            params,
            selected_ids: beta.support().into_iter().map(|i| feature_ids[i].clone()).collect(),
            objective: beta.objective_value,
            converged: beta.converged,
            runtime_ms,
            details: None,
        }
    }
}

/// Path of the plain id list written next to a report.
pub fn selected_list_path(report_path: &Path) -> PathBuf {
    let stem = report_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    report_path.with_file_name(format!("{stem}.selected.txt"))
}

/// Writes the JSON report and a sibling `<stem>.selected.txt` listing one
/// selected id per line.
pub fn write_report(report: &Report, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    write_text(path, &json)?;
    let list: String = report.selected_ids.iter().map(|id| format!("{id}\n")).collect();
    write_text(&selected_list_path(path), &list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn p() -> &'static Path {
        Path::new("test.tsv")
    }

    #[test]
    fn groups_in_first_appearance_order() {
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let g = parse_groups("g2\tc\ng1\ta\ng2\tb\n# note\ng2\tc\n", p(), &ids).unwrap();
        assert_eq!(g.group_ids, ["g2", "g1"]);
        assert_eq!(g.members, vec![vec![1, 2], vec![0]]);
        assert!(parse_groups("g1\tz\n", p(), &ids).is_err());
    }

    #[test]
    fn parses_three_by_two() {
        let x = parse_feature_matrix("sample_id\tf1\tf2\na\t1\t2.5\nb\t-3e-2\t4\nc\t0\t1E3\n", p()).unwrap();
        assert_eq!(x.n_samples(), 3);
        assert_eq!(x.n_features(), 2);
        assert_eq!(x.values()[[1, 0]], -0.03);
        assert_eq!(x.values()[[2, 1]], 1000.0);
        assert_eq!(x.feature_ids(), ["f1", "f2"]);
    }

    #[test]
    fn ragged_row_names_row() {
        let err = parse_feature_matrix("sample_id\tf1\tf2\na\t1\n", p()).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { row: 2, found: 2, expected: 3, .. }), "{err}");
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn duplicate_feature_header() {
        let err = parse_feature_matrix("sample_id\tf1\tf1\na\t1\t2\nb\t3\t4\n", p()).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { kind: "feature", .. }));
    }

    #[test]
    fn duplicate_sample() {
        let err = parse_feature_matrix("sample_id\tf1\na\t1\na\t2\n", p()).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { kind: "sample", .. }));
    }

    #[test]
    fn non_numeric_cell_location() {
        let err = parse_feature_matrix("sample_id\tf1\tf2\na\t1\t2\nb\t3\tNA\n", p()).unwrap_err();
        assert!(matches!(err, Error::NonNumeric { row: 3, column: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(
            parse_feature_matrix("sample_id\n", p()).unwrap_err(),
            Error::MalformedHeader { .. }
        ));
        assert!(matches!(
            parse_feature_matrix("", p()).unwrap_err(),
            Error::MalformedHeader { .. }
        ));
    }

    #[test]
    fn network_default_weight_and_isolated_node() {
        let universe = vec!["a".to_string(), "b".into(), "c".into()];
        let g = parse_network("a\tb\t2.0\n", p(), &universe).unwrap();
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, w: 2.0 }]);
        assert_eq!(g.degrees()[2], 0.0);
        let g = parse_network("c\ta\n", p(), &universe).unwrap();
        assert_eq!(g.edges(), &[Edge { u: 0, v: 2, w: 1.0 }]);
    }

    #[test]
    fn network_errors() {
        let universe = vec!["a".to_string(), "b".into(), "c".into()];
        assert!(matches!(
            parse_network("a\ta\t1.0\n", p(), &universe).unwrap_err(),
            Error::SelfLoop { .. }
        ));
        assert!(matches!(
            parse_network("a\tb\nb\ta\n", p(), &universe).unwrap_err(),
            Error::DuplicateEdge { line: 2, .. }
        ));
        assert!(matches!(
            parse_network("a\tz\n", p(), &universe).unwrap_err(),
            Error::UnknownNode { .. }
        ));
        assert!(matches!(
            parse_network("a\tb\t0\n", p(), &universe).unwrap_err(),
            Error::NonPositiveWeight { .. }
        ));
    }

    fn xy(xs: &[&str], ys: &[&str]) -> (FeatureMatrix, Phenotype) {
        let n = xs.len();
        let x = FeatureMatrix::new(
            xs.iter().map(|s| s.to_string()).collect(),
            vec!["f".into()],
            Array2::from_shape_fn((n, 1), |(i, _)| i as f64),
        )
        .unwrap();
        let y = Phenotype::new(
            ys.iter().map(|s| s.to_string()).collect(),
            Array1::from_shape_fn(ys.len(), |i| (i * i) as f64),
        )
        .unwrap();
        (x, y)
    }

    #[test]
    fn align_identity() {
        let (x, y) = xy(&["a", "b", "c"], &["a", "b", "c"]);
        let al = align(&x, &y).unwrap();
        assert_eq!(al.features, x);
        assert_eq!(al.phenotype, y);
        assert!(al.dropped_from_features.is_empty() && al.dropped_from_phenotype.is_empty());
    }

    #[test]
    fn align_drops_extra_and_reorders() {
        let (x, y) = xy(&["a", "b", "c"], &["c", "d", "a", "b"]);
        let al = align(&x, &y).unwrap();
        assert_eq!(al.features.n_samples(), 3);
        assert_eq!(al.phenotype.sample_ids(), ["a", "b", "c"]);
        assert_eq!(al.phenotype.values(), &array![4.0, 9.0, 0.0]);
        assert_eq!(al.dropped_from_phenotype, ["d"]);
        let again = align(&al.features, &al.phenotype).unwrap();
        assert_eq!(again.features, al.features);
        assert_eq!(again.phenotype, al.phenotype);
    }

    #[test]
    fn align_disjoint_fails() {
        let (x, y) = xy(&["a", "b"], &["c", "d"]);
        assert!(matches!(align(&x, &y).unwrap_err(), Error::EmptyIntersection));
    }

    #[test]
    fn selection_set_sorts_and_validates() {
        let s = SelectionSet::new(vec![3, 1], 4, 0.5, SelectionParams::default()).unwrap();
        assert_eq!(s.selected(), &[1, 3]);
        assert!(SelectionSet::new(vec![1, 1], 4, 0.0, SelectionParams::default()).is_err());
        assert!(SelectionSet::new(vec![4], 4, 0.0, SelectionParams::default()).is_err());
    }

    #[test]
    fn constant_phenotype_rejected() {
        assert!(matches!(
            Phenotype::from_values(array![1.0, 1.0]).unwrap_err(),
            Error::ConstantPhenotype
        ));
    }
}
