//! Graph algebra over [`WeightedNetwork`] and construction of feature-level
//! networks from genomic positions and a gene network.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::datamodel::{load_rows, parse_cell, WeightedNetwork};
use crate::error::{Error, Result};

fn check_len(len: usize, g: &WeightedNetwork) -> Result<()> {
    if len != g.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {len} for a network with {} nodes",
            g.n_nodes()
        )));
    }
    Ok(())
}

/// `βᵀLβ` with `L = D − W`, computed edge-wise as `Σ_{p<q} W_pq (β_p − β_q)²`.
pub fn laplacian_quadratic(beta: &[f64], g: &WeightedNetwork) -> Result<f64> {
    check_len(beta.len(), g)?;
    Ok(g
        .edges()
        .iter()
        .map(|e| {
            let d = beta[e.u] - beta[e.v];
            e.w * d * d
        })
        .sum())
}

/// Sum over ordered pairs `Σ_{p,q} W_pq (β_p − β_q)²`, i.e. `2 βᵀLβ`.
pub fn laplacian_ordered_pair_sum(beta: &[f64], g: &WeightedNetwork) -> Result<f64> {
    Ok(2.0 * laplacian_quadratic(beta, g)?)
}

/// `out = L β`.
pub fn laplacian_matvec(beta: &[f64], g: &WeightedNetwork, out: &mut [f64]) -> Result<()> {
    check_len(beta.len(), g)?;
    check_len(out.len(), g)?;
    out.iter_mut().for_each(|o| *o = 0.0);
    for e in g.edges() {
        let d = e.w * (beta[e.u] - beta[e.v]);
        out[e.u] += d;
        out[e.v] -= d;
    }
    Ok(())
}

/// Total weight of edges with exactly one endpoint in `selected`.
pub fn cut_value(selected: &[usize], g: &WeightedNetwork) -> Result<f64> {
    let mut inside = vec![false; g.n_nodes()];
    for &p in selected {
        if p >= g.n_nodes() {
            return Err(Error::InvalidInput(format!(
                "index {p} out of range for {} nodes",
                g.n_nodes()
            )));
        }
        inside[p] = true;
    }
    Ok(cut_value_mask(&inside, g))
}

pub(crate) fn cut_value_mask(inside: &[bool], g: &WeightedNetwork) -> f64 {
    g.edges()
        .iter()
        .filter(|e| inside[e.u] != inside[e.v])
        .map(|e| e.w)
        .sum()
}

/// Connected components, each sorted ascending, ordered by smallest member.
pub fn connected_components(g: &WeightedNetwork) -> Vec<Vec<usize>> {
    let adj = g.adjacency();
    let mut seen = vec![false; g.n_nodes()];
    let mut out = Vec::new();
    for start in 0..g.n_nodes() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Chromosome and base-pair position of each feature.
#[derive(Debug, Clone, PartialEq)]
pub struct GenomicPositions {
    feature_ids: Vec<String>,
    chrom: Vec<String>,
    pos: Vec<u64>,
}

impl GenomicPositions {
    pub fn new(entries: Vec<(String, String, u64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Self {
            feature_ids: Vec::with_capacity(entries.len()),
            chrom: Vec::with_capacity(entries.len()),
            pos: Vec::with_capacity(entries.len()),
        };
        for (f, c, p) in entries {
            if !seen.insert(f.clone()) {
                return Err(Error::DuplicateId { kind: "feature", id: f });
            }
            out.feature_ids.push(f);
            out.chrom.push(c);
            out.pos.push(p);
        }
        Ok(out)
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn len(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_ids.is_empty()
    }
}

/// Chromosome and `[start, end]` span of each gene.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneIntervals {
    gene_ids: Vec<String>,
    chrom: Vec<String>,
    start: Vec<u64>,
    end: Vec<u64>,
}

impl GeneIntervals {
    pub fn new(entries: Vec<(String, String, u64, u64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Self {
            gene_ids: Vec::new(),
            chrom: Vec::new(),
            start: Vec::new(),
            end: Vec::new(),
        };
        for (g, c, s, e) in entries {
            if s > e {
                return Err(Error::InvalidInput(format!("gene {g}: start {s} > end {e}")));
            }
            if !seen.insert(g.clone()) {
                return Err(Error::DuplicateId { kind: "gene", id: g });
            }
            out.gene_ids.push(g);
            out.chrom.push(c);
            out.start.push(s);
            out.end.push(e);
        }
        Ok(out)
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }
}

fn parse_position(path: &Path, row: usize, column: usize, cell: &str) -> Result<u64> {
    let v = parse_cell(path, row, column, cell)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::InvalidInput(format!(
            "{}: row {row}, column {column}: position must be a nonnegative integer",
            path.display()
        )));
    }
    Ok(v as u64)
}

/// Reads `feature_id<TAB>chrom<TAB>pos`.
pub fn load_positions(path: impl AsRef<Path>) -> Result<GenomicPositions> {
    let path = path.as_ref();
    let mut entries = Vec::new();
    for (row, f) in load_rows(path)? {
        if f.len() != 3 {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                found: f.len(),
                expected: 3,
            });
        }
        entries.push((f[0].clone(), f[1].clone(), parse_position(path, row, 3, &f[2])?));
    }
    GenomicPositions::new(entries)
}

/// Reads `gene_id<TAB>chrom<TAB>start<TAB>end`.
pub fn load_genes(path: impl AsRef<Path>) -> Result<GeneIntervals> {
    let path = path.as_ref();
    let mut entries = Vec::new();
    for (row, f) in load_rows(path)? {
        if f.len() != 4 {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                found: f.len(),
                expected: 4,
            });
        }
        entries.push((
            f[0].clone(),
            f[1].clone(),
            parse_position(path, row, 3, &f[2])?,
            parse_position(path, row, 4, &f[3])?,
        ));
    }
    GeneIntervals::new(entries)
}

/// Which rules contribute edges to a feature network. Each mode includes the
/// edges of the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkMode {
    /// Consecutive features along each chromosome.
    Sequence,
    /// Plus a clique over the features mapped to each gene.
    Gene,
    /// Plus all feature pairs across genes adjacent in the gene network.
    Interaction,
}

impl FromStr for NetworkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequence" => Ok(Self::Sequence),
            "gene" => Ok(Self::Gene),
            "interaction" => Ok(Self::Interaction),
            other => Err(Error::InvalidParameter(format!("unknown network mode {other:?}"))),
        }
    }
}

impl fmt::Display for NetworkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sequence => "sequence",
            Self::Gene => "gene",
            Self::Interaction => "interaction",
        })
    }
}

pub const DEFAULT_WINDOW: u64 = 10_000;

/// Genes whose window-extended span `[start − window, end + window]` contains
/// each feature's position on the same chromosome.
pub fn map_features_to_genes(pos: &GenomicPositions, genes: &GeneIntervals, window: u64) -> Vec<Vec<usize>> {
    let mut by_chrom: HashMap<&str, (Vec<usize>, Vec<usize>)> = HashMap::new();
    for (f, c) in pos.chrom.iter().enumerate() {
        by_chrom.entry(c).or_default().0.push(f);
    }
    for (g, c) in genes.chrom.iter().enumerate() {
        by_chrom.entry(c).or_default().1.push(g);
    }
    let mut mapped = vec![Vec::new(); pos.len()];
    for (mut feats, mut gs) in by_chrom.into_values() {
        feats.sort_by_key(|&f| (pos.pos[f], f));
        gs.sort_by_key(|&g| (genes.start[g].saturating_sub(window), g));
        let mut next = 0;
        let mut active: Vec<usize> = Vec::new();
        for f in feats {
            let x = pos.pos[f];
            while next < gs.len() && genes.start[gs[next]].saturating_sub(window) <= x {
                active.push(gs[next]);
                next += 1;
            }
            active.retain(|&g| genes.end[g].saturating_add(window) >= x);
            let mut hit = active.clone();
            hit.sort_unstable();
            mapped[f] = hit;
        }
    }
    mapped
}

/// Builds an unweighted feature network (all edge weights 1) over the
/// features of `pos`, in their listed order.
///
/// `gene_net` nodes must be genes of `genes`; it is required for
/// [`NetworkMode::Interaction`] and ignored otherwise.
pub fn build_feature_network(
    pos: &GenomicPositions,
    genes: &GeneIntervals,
    gene_net: Option<&WeightedNetwork>,
    window: u64,
    mode: NetworkMode,
) -> Result<WeightedNetwork> {
    let gene_index: HashMap<&str, usize> = genes
        .gene_ids
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i))
        .collect();
    let gene_edges: Vec<(usize, usize)> = match (mode, gene_net) {
        (NetworkMode::Interaction, None) => {
            return Err(Error::InvalidInput("interaction mode needs a gene network".into()))
        }
        (_, Some(net)) => {
            let ids = net.node_ids();
            let lookup = |i: usize| {
                gene_index.get(ids[i].as_str()).copied().ok_or_else(|| {
                    Error::InvalidInput(format!("gene network node {:?} has no interval", ids[i]))
                })
            };
            net.edges()
                .iter()
                .map(|e| Ok((lookup(e.u)?, lookup(e.v)?)))
                .collect::<Result<_>>()?
        }
        (_, None) => Vec::new(),
    };

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut add = |a: usize, b: usize| {
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    };

    let mut by_chrom: HashMap<&str, Vec<usize>> = HashMap::new();
    for (f, c) in pos.chrom.iter().enumerate() {
        by_chrom.entry(c).or_default().push(f);
    }
    for feats in by_chrom.values_mut() {
        feats.sort_by_key(|&f| (pos.pos[f], f));
        for w in feats.windows(2) {
            add(w[0], w[1]);
        }
    }

    if mode != NetworkMode::Sequence {
        let mapped = map_features_to_genes(pos, genes, window);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); genes.gene_ids.len()];
        for (f, gs) in mapped.iter().enumerate() {
            for &g in gs {
                members[g].push(f);
            }
        }
        for fs in &members {
            for (i, &a) in fs.iter().enumerate() {
                for &b in &fs[i + 1..] {
                    add(a, b);
                }
            }
        }
        if mode == NetworkMode::Interaction {
            for &(ga, gb) in &gene_edges {
                for &a in &members[ga] {
                    for &b in &members[gb] {
                        add(a, b);
                    }
                }
            }
        }
    }

    WeightedNetwork::new(pos.feature_ids.clone(), edges.into_iter().map(|(u, v)| (u, v, 1.0)))
}
