//! Brute-force maximization over all subsets, for certifying the graph-cut
//! solvers on small instances. The objective is evaluated here from a dense
//! weight matrix, independently of the cut construction.

use crate::datamodel::WeightedNetwork;
use crate::error::{Error, Result};
use crate::relevance::RelevanceVector;
use crate::scones::SconesParams;

const MAX_SINGLE: usize = 24;
const MAX_JOINT_BITS: usize = 24;

fn dense(g: &WeightedNetwork) -> Vec<Vec<f64>> {
    let n = g.n_nodes();
    let mut w = vec![vec![0.0; n]; n];
    for e in g.edges() {
        w[e.u][e.v] = e.w;
        w[e.v][e.u] = e.w;
    }
    w
}

fn task_value(c: &[f64], eta: f64, lambda: f64, w: &[Vec<f64>], mask: u64) -> f64 {
    let m = c.len();
    let inside = |p: usize| mask >> p & 1 == 1;
    let mut value = 0.0;
    for p in (0..m).filter(|&p| inside(p)) {
        value += c[p] - eta;
        for q in (0..m).filter(|&q| !inside(q)) {
            value -= lambda * w[p][q];
        }
    }
    value
}

/// Best subset as a bitmask together with its objective value. Ties keep the
/// numerically smallest mask.
pub fn best_subset(c: &RelevanceVector, params: &SconesParams, g: &WeightedNetwork) -> Result<(u64, f64)> {
    let m = c.len();
    if m > MAX_SINGLE || m != g.n_nodes() {
        return Err(Error::InvalidInput(format!("exhaustive search needs 1..={MAX_SINGLE} matching features")));
    }
    let w = dense(g);
    let mut best = (0u64, f64::NEG_INFINITY);
    for mask in 0u64..1 << m {
        let v = task_value(c.scores(), params.eta, params.lambda, &w, mask);
        if v > best.1 {
            best = (mask, v);
        }
    }
    Ok(best)
}

/// Best joint multi-task selection over `(2^m)^T` combinations; returns one
/// mask per task and the objective.
pub fn best_multi_subset(
    cs: &[RelevanceVector],
    params: &SconesParams,
    gs: &[&WeightedNetwork],
) -> Result<(Vec<u64>, f64)> {
    let t = cs.len();
    let m = cs.first().map_or(0, |c| c.len());
    if t == 0 || m * t > MAX_JOINT_BITS || gs.len() != t {
        return Err(Error::InvalidInput("instance too large for exhaustive multi-task search".into()));
    }
    let ws: Vec<_> = gs.iter().map(|g| dense(g)).collect();
    let full = (1u64 << m) - 1;
    let mut best = (vec![0u64; t], f64::NEG_INFINITY);
    for joint in 0u64..1 << (m * t) {
        let masks: Vec<u64> = (0..t).map(|k| joint >> (k * m) & full).collect();
        let mut v: f64 = (0..t)
            .map(|k| task_value(cs[k].scores(), params.eta, params.lambda, &ws[k], masks[k]))
            .sum();
        for u in 0..t {
            for x in u + 1..t {
                v -= params.mu * (masks[u] ^ masks[x]).count_ones() as f64;
            }
        }
        if v > best.1 {
            best = (masks, v);
        }
    }
    Ok(best)
}

/// Indices set in `mask`, ascending.
pub fn mask_to_indices(mask: u64, m: usize) -> Vec<usize> {
    (0..m).filter(|&p| mask >> p & 1 == 1).collect()
}
