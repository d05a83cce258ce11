//! Penalized-relevance selection by graph cuts.
//!
//! Single-task selection maximizes
//! `Σ_{p∈S} c_p − η|S| − λ Σ_{p∈S, q∉S} W_pq`; the multi-task variant adds
//! `−μ Σ_{u<v} |S_u △ S_v|` across tasks. Both are solved exactly as a
//! minimum s/t cut.

pub mod exhaustive;
pub mod maxflow;

pub use maxflow::{max_flow_min_cut, MinCut, STGraph};

use crate::datamodel::{SelectionParams, SelectionSet, WeightedNetwork};
use crate::error::{Error, Result};
use crate::netgraph::cut_value_mask;
use crate::relevance::RelevanceVector;

/// Sparsity price `eta`, connectivity price `lambda`, task coupling `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SconesParams {
    pub eta: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl SconesParams {
    pub fn new(eta: f64, lambda: f64, mu: f64) -> Result<Self> {
        let p = Self { eta, lambda, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta", self.eta), ("lambda", self.lambda), ("mu", self.mu)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    fn selection_params(&self) -> SelectionParams {
        SelectionParams {
            lambda: self.lambda,
            eta: self.eta,
            mu: self.mu,
        }
    }
}

fn check_sizes(c: &RelevanceVector, g: &WeightedNetwork) -> Result<()> {
    if c.len() != g.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "{} relevance scores for a network of {} nodes",
            c.len(),
            g.n_nodes()
        )));
    }
    Ok(())
}

fn add_task(st: &mut STGraph, offset: usize, c: &RelevanceVector, params: &SconesParams, g: &WeightedNetwork) -> Result<()> {
    for (p, &cp) in c.scores().iter().enumerate() {
        st.set_terminal(offset + p, cp - params.eta)?;
    }
    if params.lambda > 0.0 {
        for e in g.edges() {
            let cap = params.lambda * e.w;
            st.add_edge(offset + e.u, offset + e.v, cap, cap)?;
        }
    }
    Ok(())
}

/// s/t graph whose minimum cut solves single-task selection: `s → p` with
/// capacity `c_p − η` when positive, `p → t` with `η − c_p` when negative, and
/// `λW_pq` both ways along every network edge.
pub fn build_st_graph(c: &RelevanceVector, params: &SconesParams, g: &WeightedNetwork) -> Result<STGraph> {
    params.validate()?;
    check_sizes(c, g)?;
    let mut st = STGraph::new(c.len());
    add_task(&mut st, 0, c, params, g)?;
    Ok(st)
}

/// Single-task objective of the selection mask `inside`.
pub fn scones_objective(c: &RelevanceVector, params: &SconesParams, g: &WeightedNetwork, inside: &[bool]) -> f64 {
    let gain: f64 = c
        .scores()
        .iter()
        .zip(inside)
        .filter(|(_, &s)| s)
        .map(|(cp, _)| cp - params.eta)
        .sum();
    gain - params.lambda * cut_value_mask(inside, g)
}

/// `Σ_p max(c_p − η, 0)`: the objective upper bound that the min-cut value is
/// subtracted from.
pub fn positive_gain(c: &RelevanceVector, eta: f64) -> f64 {
    c.scores().iter().map(|cp| (cp - eta).max(0.0)).sum()
}

/// Selection together with the flow value of the cut that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SconesSolution {
    pub selection: SelectionSet,
    pub flow_value: f64,
}

/// Exact single-task selection. Among optimal sets the smallest one (the
/// source side of the minimal minimum cut) is returned.
pub fn scones_solve(c: &RelevanceVector, params: &SconesParams, g: &WeightedNetwork) -> Result<SconesSolution> {
    let st = build_st_graph(c, params, g)?;
    let cut = max_flow_min_cut(&st);
    let mut inside = vec![false; c.len()];
    for &p in &cut.source_side {
        inside[p] = true;
    }
    let objective = scones_objective(c, params, g, &inside);
    Ok(SconesSolution {
        selection: SelectionSet::new(cut.source_side, c.len(), objective, params.selection_params())?,
        flow_value: cut.flow_value,
    })
}

pub fn scones_select(c: &RelevanceVector, params: &SconesParams, g: &WeightedNetwork) -> Result<SelectionSet> {
    Ok(scones_solve(c, params, g)?.selection)
}

/// Multi-task objective; `masks[t]` is the selection of task `t`.
pub fn multi_scones_objective(
    cs: &[RelevanceVector],
    params: &SconesParams,
    gs: &[&WeightedNetwork],
    masks: &[Vec<bool>],
) -> f64 {
    let per_task: f64 = cs
        .iter()
        .zip(gs)
        .zip(masks)
        .map(|((c, g), mask)| scones_objective(c, params, g, mask))
        .sum();
    let mut disagreement = 0usize;
    for u in 0..masks.len() {
        for v in u + 1..masks.len() {
            disagreement += masks[u].iter().zip(&masks[v]).filter(|(a, b)| a != b).count();
        }
    }
    per_task - params.mu * disagreement as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSconesSolution {
    /// One selection per task; each stores the joint objective.
    pub selections: Vec<SelectionSet>,
    pub objective: f64,
    pub flow_value: f64,
}

fn task_networks(gs: &[WeightedNetwork], t: usize) -> Result<Vec<&WeightedNetwork>> {
    match gs.len() {
        1 => Ok(vec![&gs[0]; t]),
        k if k == t => Ok(gs.iter().collect()),
        k => Err(Error::DimensionMismatch(format!("{k} networks for {t} tasks"))),
    }
}

/// Exact multi-task selection by one cut on the task-stacked graph: node
/// `(p, t)` carries task `t`'s terminal and network arcs, and every feature
/// links its copies in tasks `u < v` with capacity `μ` both ways.
///
/// `gs` holds either one network per task or a single shared network.
pub fn multi_scones_solve(
    cs: &[RelevanceVector],
    params: &SconesParams,
    gs: &[WeightedNetwork],
) -> Result<MultiSconesSolution> {
    params.validate()?;
    let t = cs.len();
    if t == 0 {
        return Err(Error::InvalidInput("at least one task is required".into()));
    }
    let m = cs[0].len();
    if cs.iter().any(|c| c.len() != m) {
        return Err(Error::DimensionMismatch("tasks differ in feature count".into()));
    }
    let nets = task_networks(gs, t)?;
    let mut st = STGraph::new(m * t);
    for (k, (c, g)) in cs.iter().zip(&nets).enumerate() {
        check_sizes(c, g)?;
        add_task(&mut st, k * m, c, params, g)?;
    }
    if params.mu > 0.0 {
        for p in 0..m {
            for u in 0..t {
                for v in u + 1..t {
                    st.add_edge(u * m + p, v * m + p, params.mu, params.mu)?;
                }
            }
        }
    }
    let cut = max_flow_min_cut(&st);
    let mut masks = vec![vec![false; m]; t];
    for &node in &cut.source_side {
        masks[node / m][node % m] = true;
    }
    let objective = multi_scones_objective(cs, params, &nets, &masks);
    let selections = masks
        .iter()
        .map(|mask| {
            let sel = (0..m).filter(|&p| mask[p]).collect();
            SelectionSet::new(sel, m, objective, params.selection_params())
        })
        .collect::<Result<_>>()?;
    Ok(MultiSconesSolution {
        selections,
        objective,
        flow_value: cut.flow_value,
    })
}

pub fn multi_scones_select(
    cs: &[RelevanceVector],
    params: &SconesParams,
    gs: &[WeightedNetwork],
) -> Result<Vec<SelectionSet>> {
    Ok(multi_scones_solve(cs, params, gs)?.selections)
}
