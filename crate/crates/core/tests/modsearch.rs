mod common;

use std::collections::BTreeSet;

use netguide::modsearch::{greedy_module_search, module_score, ModuleSearchParams};
use netguide::netgraph::connected_components;
use netguide::WeightedNetwork;
use proptest::prelude::*;
use rand::Rng;

const CLIQUE: [usize; 4] = [3, 11, 17, 26];

fn planted(seed: u64, background: impl Fn(&mut rand_chacha::ChaCha8Rng) -> f64) -> (WeightedNetwork, Vec<f64>) {
    let mut rng = common::rng(seed);
    let mut edges = BTreeSet::new();
    for u in 0..30 {
        for v in u + 1..30 {
            if rng.random::<f64>() < 0.1 {
                edges.insert((u, v));
            }
        }
    }
    for (i, &u) in CLIQUE.iter().enumerate() {
        for &v in &CLIQUE[i + 1..] {
            edges.insert((u, v));
        }
    }
    let g = WeightedNetwork::with_node_count(30, edges.into_iter().map(|(u, v)| (u, v, 1.0))).unwrap();
    let z = (0..30).map(|p| if CLIQUE.contains(&p) { 4.0 } else { background(&mut rng) }).collect();
    (g, z)
}

fn induces_connected(g: &WeightedNetwork, set: &[usize]) -> bool {
    let edges: Vec<_> = g
        .edges()
        .iter()
        .filter_map(|e| Some((set.binary_search(&e.u).ok()?, set.binary_search(&e.v).ok()?, 1.0)))
        .collect();
    connected_components(&WeightedNetwork::with_node_count(set.len(), edges).unwrap()).len() == 1
}

/// Best-scoring connected set of at most `k` nodes, by growing every
/// connected set one neighbour at a time.
fn best_connected(g: &WeightedNetwork, z: &[f64], k: usize) -> (Vec<usize>, f64) {
    let adj = g.adjacency();
    let mut layer: BTreeSet<Vec<usize>> = (0..z.len()).map(|p| vec![p]).collect();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for size in 1..=k {
        for set in &layer {
            let s = module_score(&set.iter().map(|&p| z[p]).collect::<Vec<_>>()).unwrap();
            if s > best.1 {
                best = (set.clone(), s);
            }
        }
        if size == k {
            break;
        }
        let mut next = BTreeSet::new();
        for set in &layer {
            for &p in set {
                for &(q, _) in &adj[p] {
                    if let Err(at) = set.binary_search(&q) {
                        let mut grown = set.clone();
                        grown.insert(at, q);
                        next.insert(grown);
                    }
                }
            }
        }
        layer = next;
    }
    best
}

#[test]
fn planted_clique_on_flat_background_is_optimal_and_found() {
    for seed in 0..20 {
        let (g, z) = planted(seed, |r| r.random_range(-0.5..0.5));
        let (set, _) = best_connected(&g, &z, 5);
        assert_eq!(set, CLIQUE, "seed {seed}");
        let top = &greedy_module_search(&g, &z, ModuleSearchParams::default()).unwrap()[0];
        assert_eq!(top.genes, CLIQUE, "seed {seed}");
    }
}

#[test]
fn greedy_never_beats_the_exhaustive_optimum() {
    for seed in 0..10 {
        let (g, z) = planted(100 + seed, |r| r.sample(rand_distr::StandardNormal));
        let top = &greedy_module_search(&g, &z, ModuleSearchParams::default()).unwrap()[0];
        if top.genes.len() <= 5 {
            let (_, best) = best_connected(&g, &z, 5);
            assert!(top.score <= best + 1e-12);
        }
        assert!(top.score >= 8.0 - 1e-12, "seed {seed}: clique seeds reach at least the clique score");
    }
}

fn graph_and_scores() -> impl Strategy<Value = (WeightedNetwork, Vec<f64>)> {
    (2usize..14).prop_flat_map(|m| {
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v))).collect();
        (
            proptest::sample::subsequence(pairs.clone(), 0..=pairs.len()),
            proptest::collection::vec(-3.0f64..5.0, m),
        )
            .prop_map(move |(edges, z)| (WeightedNetwork::with_node_count(m, edges.into_iter().map(|(u, v)| (u, v, 1.0))).unwrap(), z))
    })
}

proptest! {
    #[test]
    fn modules_are_connected_scored_and_ranked((g, z) in graph_and_scores(), r in 0.0f64..0.5) {
        let modules = greedy_module_search(&g, &z, ModuleSearchParams { r, max_depth: 2 }).unwrap();
        prop_assert!(!modules.is_empty());
        for w in modules.windows(2) {
            prop_assert!(w[0].score >= w[1].score);
            prop_assert_ne!(&w[0].genes, &w[1].genes);
        }
        for md in &modules {
            prop_assert!(induces_connected(&g, &md.genes));
            let zs: Vec<f64> = md.genes.iter().map(|&p| z[p]).collect();
            prop_assert!((module_score(&zs).unwrap() - md.score).abs() < 1e-12);
        }
    }
}
