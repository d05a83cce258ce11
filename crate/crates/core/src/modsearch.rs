//! Greedy dense-module search over a gene network scored by gene z-scores.

use std::collections::{BTreeMap, VecDeque};

use crate::datamodel::WeightedNetwork;
use crate::error::{Error, Result};
use crate::relevance::GeneScores;

/// A connected set of genes and its aggregate score.
#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    /// Node indices, ascending.
    pub genes: Vec<usize>,
    pub score: f64,
}

/// `Σz / √k`.
pub fn module_score(z: &[f64]) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::InvalidInput("module score of an empty gene set".into()));
    }
    Ok(z.iter().sum::<f64>() / (z.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleSearchParams {
    /// Minimum relative score gain required to accept an addition.
    pub r: f64,
    /// Candidates must lie within this many hops of the seed.
    pub max_depth: usize,
}

impl Default for ModuleSearchParams {
    fn default() -> Self {
        Self { r: 0.1, max_depth: 2 }
    }
}

/// Aligns gene scores to the nodes of `g` by id.
pub fn gene_z_vector(g: &WeightedNetwork, scores: &GeneScores) -> Result<Vec<f64>> {
    let by_id = scores.z_by_gene();
    g.node_ids()
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("no z-score for network gene {id:?}")))
        })
        .collect()
}

fn hop_distances(adj: &[Vec<(usize, f64)>], seed: usize, max_depth: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[seed] = 0;
    let mut queue = VecDeque::from([seed]);
    while let Some(u) = queue.pop_front() {
        if dist[u] == max_depth {
            continue;
        }
        for &(v, _) in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn accepts(old: f64, new: f64, r: f64) -> bool {
    if old > 0.0 {
        new > old * (1.0 + r)
    } else {
        new > old
    }
}

/// Grows one module from `seed`: at each step the module's neighbor (within
/// `max_depth` hops of the seed) giving the highest new score is added if the
/// growth rule accepts it.
pub fn grow_module(adj: &[Vec<(usize, f64)>], z: &[f64], seed: usize, params: ModuleSearchParams) -> Module {
    let dist = hop_distances(adj, seed, params.max_depth);
    let mut inside = vec![false; adj.len()];
    inside[seed] = true;
    let mut genes = vec![seed];
    let mut sum = z[seed];
    let mut score = sum;
    loop {
        let k = (genes.len() + 1) as f64;
        let mut best: Option<(usize, f64)> = None;
        for &u in &genes {
            for &(v, _) in &adj[u] {
                if inside[v] || dist[v] > params.max_depth {
                    continue;
                }
                let s = (sum + z[v]) / k.sqrt();
                let better = match best {
                    None => true,
                    Some((b, bs)) => s > bs || (s == bs && v < b),
                };
                if better {
                    best = Some((v, s));
                }
            }
        }
        match best {
            Some((v, s)) if accepts(score, s, params.r) => {
                inside[v] = true;
                genes.push(v);
                sum += z[v];
                score = s;
            }
            _ => break,
        }
    }
    genes.sort_unstable();
    Module { genes, score }
}

/// Runs [`grow_module`] from every node and returns the distinct modules,
/// best score first; ties go to the lexicographically smaller gene set.
pub fn greedy_module_search(g: &WeightedNetwork, z: &[f64], params: ModuleSearchParams) -> Result<Vec<Module>> {
    if z.len() != g.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "{} z-scores for {} genes",
            z.len(),
            g.n_nodes()
        )));
    }
    if let Some(v) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite z-score {v}")));
    }
    if !(params.r >= 0.0) {
        return Err(Error::InvalidParameter(format!("growth factor r must be >= 0, got {}", params.r)));
    }
    let adj = g.adjacency();
    let seeds = 0..g.n_nodes();
    #[cfg(feature = "parallel")]
    let grown: Vec<Module> = {
        use rayon::prelude::*;
        seeds.into_par_iter().map(|s| grow_module(&adj, z, s, params)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let grown: Vec<Module> = seeds.map(|s| grow_module(&adj, z, s, params)).collect();

    let unique: BTreeMap<Vec<usize>, f64> = grown.into_iter().map(|m| (m.genes, m.score)).collect();
    let mut modules: Vec<Module> = unique.into_iter().map(|(genes, score)| Module { genes, score }).collect();
    modules.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.genes.cmp(&b.genes)));
    Ok(modules)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_examples() {
        assert_eq!(module_score(&[2.3]).unwrap(), 2.3);
        assert_eq!(module_score(&[1.0; 4]).unwrap(), 2.0);
        assert!((module_score(&[3.0, -1.0]).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(module_score(&[]).is_err());
    }

    fn star() -> (WeightedNetwork, Vec<f64>) {
        let g = WeightedNetwork::with_node_count(6, (1..6).map(|i| (0, i, 1.0))).unwrap();
        let mut z = vec![0.1; 6];
        z[0] = 3.0;
        (g, z)
    }

    #[test]
    fn star_center_stays_alone() {
        let (g, z) = star();
        let mods = greedy_module_search(&g, &z, ModuleSearchParams::default()).unwrap();
        assert_eq!(mods[0], Module { genes: vec![0], score: 3.0 });
    }

    #[test]
    fn huge_r_gives_singletons() {
        let (g, z) = star();
        let mods = greedy_module_search(&g, &z, ModuleSearchParams { r: 1e9, max_depth: 2 }).unwrap();
        assert!(mods.iter().all(|m| m.genes.len() == 1));
        assert_eq!(mods.len(), 6);
    }

    #[test]
    fn non_positive_scores_need_strict_improvement() {
        // path 0-1-2, z = (-1, 0.5, -3)
        let g = WeightedNetwork::with_node_count(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let z = [-1.0, 0.5, -3.0];
        let m = grow_module(&g.adjacency(), &z, 0, ModuleSearchParams::default());
        // -1 -> (-0.5)/√2 ≈ -0.354 accepted; adding node 2 gives -3.5/√3, rejected
        assert_eq!(m.genes, vec![0, 1]);
    }

    #[test]
    fn depth_limits_growth() {
        let g = WeightedNetwork::with_node_count(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let z = [1.0, 5.0, 5.0, 5.0];
        let m = grow_module(&g.adjacency(), &z, 0, ModuleSearchParams { r: 0.0, max_depth: 1 });
        assert_eq!(m.genes, vec![0, 1]);
    }

    #[test]
    fn missing_score_is_an_error() {
        let g = WeightedNetwork::new(vec!["A".into(), "B".into()], [(0, 1, 1.0)]).unwrap();
        let scores = GeneScores {
            genes: vec![crate::relevance::GeneScore {
                gene_id: "A".into(),
                p_value: 0.1,
                z_score: 1.28,
            }],
            omitted: vec![],
        };
        assert!(gene_z_vector(&g, &scores).is_err());
    }
}
