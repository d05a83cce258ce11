//! Demo computations, independent of the browser bindings.

use ndarray::{Array1, Array2, Axis};
use netguide::modsearch::{greedy_module_search, ModuleSearchParams};
use netguide::netreg::{fit_path, lambda_grid, lambda_max, PenaltySpec, SolverConfig};
use netguide::relevance::{skat_linear_score, RelevanceVector};
use netguide::scones::{scones_solve, SconesParams};
use netguide::selectpipe::{f1_score, generate_synthetic, median_positive, GraphKind};
use netguide::{Result, WeightedNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// Synthetic data on a `side × side` lattice, scored once and re-solved for
/// every (η, λ).
pub struct GridScones {
    pub side: usize,
    relevance: RelevanceVector,
    network: WeightedNetwork,
    planted: Vec<usize>,
    /// Median positive relevance; a natural scale for both prices.
    pub scale: f64,
}

#[derive(Debug, Serialize)]
pub struct GridSolution {
    pub side: usize,
    pub relevance: Vec<f64>,
    pub planted: Vec<usize>,
    pub selected: Vec<usize>,
    pub objective: f64,
    pub f1: f64,
}

impl GridScones {
    pub fn new(side: usize, n: usize, module_size: usize, effect: f64, seed: u64) -> Result<Self> {
        let d = generate_synthetic(n, side * side, module_size, effect, GraphKind::Grid, seed)?;
        let relevance = skat_linear_score(&d.x, &d.y, false)?;
        let scale = median_positive(relevance.scores())
            .ok_or_else(|| netguide::Error::InvalidInput("no feature has positive relevance".into()))?;
        Ok(Self {
            side,
            relevance,
            network: d.network,
            planted: d.planted,
            scale,
        })
    }

    pub fn solve(&self, eta: f64, lambda: f64) -> Result<GridSolution> {
        let sol = scones_solve(&self.relevance, &SconesParams::new(eta, lambda, 0.0)?, &self.network)?;
        let selected = sol.selection.selected().to_vec();
        Ok(GridSolution {
            side: self.side,
            relevance: self.relevance.scores().to_vec(),
            planted: self.planted.clone(),
            f1: f1_score(&selected, &self.planted),
            objective: sol.selection.objective_value(),
            selected,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct Paths {
    /// Path parameter values, decreasing.
    pub lambdas: Vec<f64>,
    /// `[point][feature]`.
    pub lasso: Vec<Vec<f64>>,
    pub grace: Vec<Vec<f64>>,
    pub planted: Vec<usize>,
}

/// Lasso and Grace (ℓ1 weight swept, Laplacian weight `lambda2`) paths on
/// synthetic lattice data with a planted connected module.
pub fn regularization_paths(n: usize, m: usize, module_size: usize, effect: f64, lambda2: f64, seed: u64) -> Result<Paths> {
    let d = generate_synthetic(n, m, module_size, effect, GraphKind::Grid, seed)?;
    let x = d.x.values();
    let y = d.y.values();
    let xc: Array2<f64> = x - &x.mean_axis(Axis(0)).expect("n >= 2");
    let yc: Array1<f64> = y - y.mean().expect("n >= 2");
    let cfg = SolverConfig::default();
    let lasso = PenaltySpec::lasso(0.0);
    let top = lambda_max(xc.view(), yc.view(), &lasso)?;
    let lambdas = lambda_grid(top, 40, 1e-2)?;
    let collect = |spec: &PenaltySpec| -> Result<Vec<Vec<f64>>> {
        Ok(fit_path(xc.view(), yc.view(), spec, &lambdas, true, &cfg)?
            .into_iter()
            .map(|p| p.coefficients.beta.to_vec())
            .collect())
    };
    Ok(Paths {
        lasso: collect(&lasso)?,
        grace: collect(&PenaltySpec::grace(0.0, lambda2, d.network.clone()))?,
        lambdas,
        planted: d.planted,
    })
}

#[derive(Debug, Serialize)]
pub struct ModuleView {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub z: Vec<f64>,
    pub clique: Vec<usize>,
    /// Best modules first: `(genes, score)`.
    pub modules: Vec<(Vec<usize>, f64)>,
}

/// Random sparse gene network with a planted clique of high z-scores and
/// standard-normal scores scaled by `noise` elsewhere.
pub fn planted_modules(
    n_nodes: usize,
    edge_prob: f64,
    clique_size: usize,
    clique_z: f64,
    noise: f64,
    r: f64,
    seed: u64,
) -> Result<ModuleView> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clique: Vec<usize> = (0..clique_size.min(n_nodes)).map(|i| i * n_nodes / clique_size.max(1)).collect();
    let mut edges = Vec::new();
    for u in 0..n_nodes {
        for v in u + 1..n_nodes {
            let both = clique.contains(&u) && clique.contains(&v);
            if both || rng.random::<f64>() < edge_prob {
                edges.push((u, v));
            }
        }
    }
    let g = WeightedNetwork::with_node_count(n_nodes, edges.iter().map(|&(u, v)| (u, v, 1.0)))?;
    let z: Vec<f64> = (0..n_nodes)
        .map(|p| {
            let background = noise * rng.sample::<f64, _>(StandardNormal);
            if clique.contains(&p) {
                clique_z
            } else {
                background
            }
        })
        .collect();
    let found = greedy_module_search(&g, &z, ModuleSearchParams { r, ..Default::default() })?;
    Ok(ModuleView {
        n_nodes,
        edges,
        z,
        clique,
        modules: found.into_iter().take(5).map(|m| (m.genes, m.score)).collect(),
    })
}
