//! Graph-guided group lasso over a partition of the features into genes.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::fista::{block_shrink, minimize, soft_threshold, Composite};
use super::linalg::Design;
use super::{check_partition, check_xy, SolverConfig};
use crate::datamodel::{CoefficientVector, WeightedNetwork};
use crate::error::{Error, Result};

/// `Σ_u √|G_u| ‖β_{G_u}‖₂`
pub(crate) fn group_norm_sum(beta: &[f64], groups: &[Vec<usize>]) -> f64 {
    groups
        .iter()
        .map(|g| (g.len() as f64).sqrt() * g.iter().map(|&p| beta[p] * beta[p]).sum::<f64>().sqrt())
        .sum()
}

/// The quadratic coupling `Σ_{u∼v} W_uv Σ_{p∈G_u, q∈G_v} (β_p − β_q)²`, one
/// term per gene-network edge.
pub(crate) struct GraphCoupling {
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    edges: Vec<(usize, usize, f64)>,
    gene_adj: Vec<Vec<(usize, f64)>>,
}

impl GraphCoupling {
    pub fn new(groups: &[Vec<usize>], gene: &WeightedNetwork, m: usize) -> Self {
        let mut group_of = vec![0; m];
        for (u, g) in groups.iter().enumerate() {
            for &p in g {
                group_of[p] = u;
            }
        }
        Self {
            groups: groups.to_vec(),
            group_of,
            edges: gene.edges().iter().map(|e| (e.u, e.v, e.w)).collect(),
            gene_adj: gene.adjacency(),
        }
    }

    fn sums(&self, beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let s = self.groups.iter().map(|g| g.iter().map(|&p| beta[p]).sum()).collect();
        let q = self.groups.iter().map(|g| g.iter().map(|&p| beta[p] * beta[p]).sum()).collect();
        (s, q)
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        let (s, q) = self.sums(beta);
        self.edges
            .iter()
            .map(|&(u, v, w)| {
                let nu = self.groups[u].len() as f64;
                let nv = self.groups[v].len() as f64;
                w * (nv * q[u] + nu * q[v] - 2.0 * s[u] * s[v])
            })
            .sum()
    }

    /// Writes the gradient of [`Self::value`].
    pub fn gradient(&self, beta: &[f64], out: &mut [f64]) {
        let (s, _) = self.sums(beta);
        for (p, o) in out.iter_mut().enumerate() {
            let u = self.group_of[p];
            *o = self.gene_adj[u]
                .iter()
                .map(|&(v, w)| 2.0 * w * (self.groups[v].len() as f64 * beta[p] - s[v]))
                .sum();
        }
    }
}

/// Graph coupling term of the penalty (without its `η₂` weight).
pub fn gggl_graph_term(beta: &[f64], groups: &[Vec<usize>], gene_net: &WeightedNetwork) -> Result<f64> {
    check_partition(groups, beta.len())?;
    if gene_net.n_nodes() != groups.len() {
        return Err(Error::DimensionMismatch(format!(
            "gene network has {} nodes for {} groups",
            gene_net.n_nodes(),
            groups.len()
        )));
    }
    Ok(GraphCoupling::new(groups, gene_net, beta.len()).value(beta))
}

struct Problem<'a> {
    design: Design,
    y: &'a [f64],
    coupling: GraphCoupling,
    eta1: f64,
    eta2: f64,
    lambda_group: f64,
}

impl Composite for Problem<'_> {
    fn dim(&self) -> usize {
        self.design.m
    }

    fn smooth(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut value = 0.0;
        match grad {
            Some(g) => {
                value += self.design.ls_value_grad(x, self.y, Some(&mut *g));
                if self.eta2 > 0.0 {
                    let mut cg = vec![0.0; x.len()];
                    self.coupling.gradient(x, &mut cg);
                    g.iter_mut().zip(&cg).for_each(|(a, b)| *a += self.eta2 * b);
                }
            }
            None => value += self.design.ls_value_grad(x, self.y, None),
        }
        if self.eta2 > 0.0 {
            value += self.eta2 * self.coupling.value(x);
        }
        value
    }

    fn penalty(&self, x: &[f64]) -> f64 {
        self.lambda_group * group_norm_sum(x, &self.coupling.groups) + self.eta1 * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, v: &[f64], step: f64, out: &mut [f64]) {
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = soft_threshold(vi, step * self.eta1);
        }
        let mut block = Vec::new();
        for g in &self.coupling.groups {
            block.clear();
            block.extend(g.iter().map(|&p| out[p]));
            block_shrink(&mut block, step * self.lambda_group * (g.len() as f64).sqrt());
            for (&p, &b) in g.iter().zip(&block) {
                out[p] = b;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn solve(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    eta1: f64,
    eta2: f64,
    groups: &[Vec<usize>],
    gene_net: &WeightedNetwork,
    lambda_group: f64,
    init: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<CoefficientVector> {
    check_xy(x, y)?;
    cfg.validate()?;
    let m = x.ncols();
    let spec = super::PenaltySpec::gggl(lambda_group, eta1, eta2, groups.to_vec(), gene_net.clone());
    spec.validate(m)?;
    let y = y.to_vec();
    let problem = Problem {
        design: Design::new(x),
        y: &y,
        coupling: GraphCoupling::new(groups, gene_net, m),
        eta1,
        eta2,
        lambda_group,
    };
    let x0 = init.map_or_else(|| vec![0.0; m], <[f64]>::to_vec);
    let out = minimize(&problem, x0, cfg);
    Ok(CoefficientVector {
        beta: Array1::from(out.x),
        objective_value: out.objective,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Least squares plus
/// `λ_group Σ_u √|G_u| ‖β_{G_u}‖₂ + η₁‖β‖₁ + η₂ Σ_{u∼v} W_uv Σ_{p∈G_u, q∈G_v} (β_p − β_q)²`,
/// by accelerated proximal gradient. `groups` must partition the features;
/// `gene_net` has one node per group.
#[allow(clippy::too_many_arguments)]
pub fn fit_gggl(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    eta1: f64,
    eta2: f64,
    groups: &[Vec<usize>],
    gene_net: &WeightedNetwork,
    lambda_group: f64,
    cfg: &SolverConfig,
) -> Result<CoefficientVector> {
    solve(x, y, eta1, eta2, groups, gene_net, lambda_group, None, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn coupling_matches_pairwise_sum() {
        let groups = vec![vec![0, 2], vec![1], vec![3, 4]];
        let gene = WeightedNetwork::with_node_count(3, [(0, 1, 0.5), (1, 2, 2.0), (0, 2, 1.5)]).unwrap();
        let beta = [0.3, -1.2, 2.0, 0.7, -0.4];
        let mut direct = 0.0;
        for e in gene.edges() {
            for &p in &groups[e.u] {
                for &q in &groups[e.v] {
                    direct += e.w * (beta[p] - beta[q]) * (beta[p] - beta[q]);
                }
            }
        }
        let c = GraphCoupling::new(&groups, &gene, 5);
        assert!((c.value(&beta) - direct).abs() < 1e-12);

        let mut g = [0.0; 5];
        c.gradient(&beta, &mut g);
        for p in 0..5 {
            let h = 1e-6;
            let mut bp = beta;
            bp[p] += h;
            let mut bm = beta;
            bm[p] -= h;
            let fd = (c.value(&bp) - c.value(&bm)) / (2.0 * h);
            assert!((fd - g[p]).abs() < 1e-6);
        }
    }

    #[test]
    fn strong_coupling_equalizes_identical_columns() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [-1.0, -1.0], [0.5, 0.5]];
        let y = array![1.0, 2.5, -0.7, 0.1];
        let gene = WeightedNetwork::with_node_count(2, [(0, 1, 1.0)]).unwrap();
        let groups = vec![vec![0], vec![1]];
        let fit = fit_gggl(x.view(), y.view(), 0.1, 100.0, &groups, &gene, 0.2, &SolverConfig::default()).unwrap();
        assert!((fit.beta[0] - fit.beta[1]).abs() < 1e-5);
    }

    #[test]
    fn objective_trace_is_monotone() {
        let x = array![[1.0, 0.4, -0.3, 0.2], [0.1, 1.2, 0.5, -0.7], [0.9, -0.2, 1.0, 0.3], [0.3, 0.8, -0.6, 1.1], [0.5, 0.5, 0.2, 0.1]];
        let y = [1.0, -0.4, 2.2, 0.3, 0.8];
        let groups = vec![vec![0, 1], vec![2], vec![3]];
        let gene = WeightedNetwork::with_node_count(3, [(0, 1, 1.0), (1, 2, 0.5)]).unwrap();
        let problem = Problem {
            design: Design::new(x.view()),
            y: &y,
            coupling: GraphCoupling::new(&groups, &gene, 4),
            eta1: 0.3,
            eta2: 0.8,
            lambda_group: 0.5,
        };
        let out = minimize(&problem, vec![0.0; 4], &SolverConfig::default());
        assert!(out.converged);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn overlapping_groups_rejected() {
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let y = array![1.0, 1.0];
        let gene = WeightedNetwork::with_node_count(2, []).unwrap();
        let groups = vec![vec![0, 1], vec![1]];
        assert!(fit_gggl(x.view(), y.view(), 0.0, 0.0, &groups, &gene, 1.0, &SolverConfig::default()).is_err());
    }
}
