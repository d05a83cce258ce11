//! Seeded synthetic benchmarks with a planted, connected causal module.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::datamodel::{FeatureMatrix, Phenotype, WeightedNetwork};
use crate::error::{Error, Result};
use crate::netgraph::connected_components;

/// Edges added per new node by the preferential-attachment generator.
const ATTACHMENTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Features on a `⌈√m⌉`-wide lattice, row-major, joined to their right
    /// and lower neighbours.
    Grid,
    /// Barabási–Albert preferential attachment.
    ScaleFree,
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Self::Grid),
            "scale-free" => Ok(Self::ScaleFree),
            other => Err(Error::InvalidParameter(format!("unknown graph kind '{other}' (grid, scale-free)"))),
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Grid => "grid",
            Self::ScaleFree => "scale-free",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub x: FeatureMatrix,
    pub y: Phenotype,
    /// Over the feature ids of `x`.
    pub network: WeightedNetwork,
    /// Indices of the causal features, ascending.
    pub planted: Vec<usize>,
}

pub fn grid_edges(m: usize) -> Vec<(usize, usize, f64)> {
    let width = (m as f64).sqrt().ceil() as usize;
    let mut edges = Vec::new();
    for i in 0..m {
        if (i + 1) % width != 0 && i + 1 < m {
            edges.push((i, i + 1, 1.0));
        }
        if i + width < m {
            edges.push((i, i + width, 1.0));
        }
    }
    edges
}

pub fn scale_free_edges(m: usize, rng: &mut impl Rng) -> Vec<(usize, usize, f64)> {
    let core = m.min(ATTACHMENTS + 1);
    let mut edges = Vec::new();
    // endpoints listed once per incident edge, for degree-proportional sampling
    let mut ends = Vec::new();
    for u in 0..core {
        for v in u + 1..core {
            edges.push((u, v, 1.0));
            ends.extend([u, v]);
        }
    }
    for new in core..m {
        let mut targets: Vec<usize> = Vec::with_capacity(ATTACHMENTS);
        while targets.len() < ATTACHMENTS.min(new) {
            let t = if ends.is_empty() { rng.random_range(0..new) } else { ends[rng.random_range(0..ends.len())] };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, new, 1.0));
            ends.extend([t, new]);
        }
    }
    edges
}

/// First `k` nodes reached by a breadth-first search from a random node
/// whose component has at least `k` nodes; neighbours are visited in random
/// order.
fn plant_module(g: &WeightedNetwork, k: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let eligible: Vec<usize> = connected_components(g)
        .into_iter()
        .filter(|c| c.len() >= k)
        .flatten()
        .collect();
    let &start = eligible
        .choose(rng)
        .ok_or_else(|| Error::InvalidInput(format!("no connected subgraph of {k} nodes in the network")))?;
    let adj = g.adjacency();
    let mut seen = vec![false; g.n_nodes()];
    let mut out = vec![start];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        let mut next: Vec<usize> = adj[u].iter().map(|&(v, _)| v).filter(|&v| !seen[v]).collect();
        next.shuffle(rng);
        for v in next {
            if out.len() == k {
                break;
            }
            seen[v] = true;
            out.push(v);
            queue.push_back(v);
        }
        if out.len() == k {
            break;
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// `n × m` standard-normal features, a network of the given kind, a planted
/// connected set of `module_size` features and
/// `y = effect · Σ_{p∈planted} x_p + N(0, 1)`. Identical seeds give
/// bit-identical output.
pub fn generate_synthetic(
    n: usize,
    m: usize,
    module_size: usize,
    effect: f64,
    kind: GraphKind,
    seed: u64,
) -> Result<SyntheticData> {
    if module_size > m {
        return Err(Error::InvalidParameter(format!("module size {module_size} exceeds {m} features")));
    }
    if !(effect >= 0.0 && effect.is_finite()) {
        return Err(Error::InvalidParameter(format!("effect must be finite and >= 0, got {effect}")));
    }
    if n < 2 || m == 0 {
        return Err(Error::InvalidParameter("need at least 2 samples and 1 feature".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = match kind {
        GraphKind::Grid => grid_edges(m),
        GraphKind::ScaleFree => scale_free_edges(m, &mut rng),
    };
    let x = FeatureMatrix::from_values(Array2::from_shape_fn((n, m), |_| rng.sample(StandardNormal)))?;
    let network = WeightedNetwork::new(x.feature_ids().to_vec(), edges)?;
    let planted = plant_module(&network, module_size, &mut rng)?;
    let values = x.values();
    let y: Array1<f64> = (0..n)
        .map(|i| effect * planted.iter().map(|&p| values[[i, p]]).sum::<f64>() + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let y = Phenotype::new(x.sample_ids().to_vec(), y)?;
    Ok(SyntheticData { x, y, network, planted })
}

/// F1 score of `selected` against the true support.
pub fn f1_score(selected: &[usize], truth: &[usize]) -> f64 {
    let truth: std::collections::HashSet<usize> = truth.iter().copied().collect();
    let sel: std::collections::HashSet<usize> = selected.iter().copied().collect();
    let tp = sel.intersection(&truth).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / sel.len() as f64;
    let recall = tp / truth.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
