//! Least squares with structured sparsity penalties.
//!
//! All single-task penalties use the unscaled loss `‖Xβ − y‖²`; the
//! multi-task lasso scales each task's loss by `1/n_t`.
//!
//! | kind      | penalty                                                           | solver |
//! |-----------|-------------------------------------------------------------------|--------|
//! | `lasso`   | `λ‖β‖₁`                                                           | coordinate descent |
//! | `grace`   | `λ₁‖β‖₁ + λ₂ βᵀLβ`                                                | coordinate descent |
//! | `gfl`     | `λ(Σ_{p∼q} W_pq|β_p − β_q| + η‖β‖₁)`                              | ADMM |
//! | `ogl`     | `λ inf{Σ_g ‖v_g‖₂ : Σ_g v_g = β, supp v_g ⊆ G_g}`                 | FISTA on duplicated variables |
//! | `gggl`    | `λ Σ_u √|G_u| ‖β_{G_u}‖₂ + η₁‖β‖₁ + η₂ Σ_{u∼v} W_uv Σ_{p∈G_u, q∈G_v} (β_p − β_q)²` | FISTA |
//! | `mtlasso` | `λ Σ_p ‖(β_{1p}, …, β_{Tp})‖₂`                                    | FISTA |

mod cd;
pub(crate) mod fista;
mod gfl;
mod gggl;
pub(crate) mod linalg;
mod mtlasso;
mod ogl;
mod path;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::datamodel::WeightedNetwork;
use crate::error::{Error, Result};
use crate::netgraph::{laplacian_matvec, laplacian_quadratic};

pub use cd::{fit_grace, fit_lasso};
pub use fista::{block_shrink, soft_threshold};
pub use gfl::fit_gfl;
pub use gggl::{fit_gggl, gggl_graph_term};
pub use mtlasso::{fit_mtlasso, Task, mtlasso_lambda_max, mtlasso_objective, mtlasso_smooth};
pub use ogl::{fit_ogl, ogl_penalty, OglFit};
pub use path::{fit, fit_mtlasso_path, fit_path, lambda_grid, lambda_max, PathPoint, PATH_LENGTH, PATH_RATIO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Lasso,
    Grace,
    Gfl,
    Ogl,
    Gggl,
    Mtlasso,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 6] = [Self::Lasso, Self::Grace, Self::Gfl, Self::Ogl, Self::Gggl, Self::Mtlasso];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lasso => "lasso",
            Self::Grace => "grace",
            Self::Gfl => "gfl",
            Self::Ogl => "ogl",
            Self::Gggl => "gggl",
            Self::Mtlasso => "mtlasso",
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown penalty kind '{s}'")))
    }
}

/// A penalty and its hyperparameters. Which fields matter depends on `kind`:
///
/// * `lasso`, `ogl`, `mtlasso`: `lambda`
/// * `grace`: `eta1` (ℓ1 weight) and `eta2` (Laplacian weight), `network`
/// * `gfl`: `lambda`, `eta`, `network`
/// * `gggl`: `lambda` (group weight), `eta1`, `eta2`, `groups`, `gene_network`
#[derive(Debug, Clone)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta: f64,
    pub network: Option<WeightedNetwork>,
    pub groups: Option<Vec<Vec<usize>>>,
    pub gene_network: Option<WeightedNetwork>,
}

impl PenaltySpec {
    fn bare(kind: PenaltyKind) -> Self {
        Self {
            kind,
            lambda: 0.0,
            eta1: 0.0,
            eta2: 0.0,
            eta: 0.0,
            network: None,
            groups: None,
            gene_network: None,
        }
    }

    pub fn lasso(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::bare(PenaltyKind::Lasso)
        }
    }

    pub fn grace(lambda1: f64, lambda2: f64, network: WeightedNetwork) -> Self {
        Self {
            eta1: lambda1,
            eta2: lambda2,
            network: Some(network),
            ..Self::bare(PenaltyKind::Grace)
        }
    }

    pub fn gfl(lambda: f64, eta: f64, network: WeightedNetwork) -> Self {
        Self {
            lambda,
            eta,
            network: Some(network),
            ..Self::bare(PenaltyKind::Gfl)
        }
    }

    pub fn ogl(lambda: f64, groups: Vec<Vec<usize>>) -> Self {
        Self {
            lambda,
            groups: Some(groups),
            ..Self::bare(PenaltyKind::Ogl)
        }
    }

    pub fn gggl(lambda_group: f64, eta1: f64, eta2: f64, groups: Vec<Vec<usize>>, gene_network: WeightedNetwork) -> Self {
        Self {
            lambda: lambda_group,
            eta1,
            eta2,
            groups: Some(groups),
            gene_network: Some(gene_network),
            ..Self::bare(PenaltyKind::Gggl)
        }
    }

    pub fn mtlasso(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::bare(PenaltyKind::Mtlasso)
        }
    }

    /// The parameter swept by a regularization path.
    pub fn path_parameter(&self) -> f64 {
        match self.kind {
            PenaltyKind::Grace => self.eta1,
            _ => self.lambda,
        }
    }

    /// Copy with the path parameter replaced.
    pub fn with_path_parameter(&self, value: f64) -> Self {
        let mut s = self.clone();
        match s.kind {
            PenaltyKind::Grace => s.eta1 = value,
            _ => s.lambda = value,
        }
        s
    }

    /// Hyperparameters that matter for this kind, by name.
    pub fn named_params(&self) -> Vec<(&'static str, f64)> {
        match self.kind {
            PenaltyKind::Lasso | PenaltyKind::Ogl | PenaltyKind::Mtlasso => vec![("lambda", self.lambda)],
            PenaltyKind::Grace => vec![("lambda1", self.eta1), ("lambda2", self.eta2)],
            PenaltyKind::Gfl => vec![("lambda", self.lambda), ("eta", self.eta)],
            PenaltyKind::Gggl => vec![("lambda", self.lambda), ("eta1", self.eta1), ("eta2", self.eta2)],
        }
    }

    /// Checks parameter ranges and attachments against `m` features.
    pub fn validate(&self, m: usize) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("eta1", self.eta1), ("eta2", self.eta2), ("eta", self.eta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let need_network = |what: &str| -> Result<&WeightedNetwork> {
            let g = self
                .network
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter(format!("{what} needs a feature network")))?;
            if g.n_nodes() != m {
                return Err(Error::DimensionMismatch(format!(
                    "network has {} nodes for {m} features",
                    g.n_nodes()
                )));
            }
            Ok(g)
        };
        match self.kind {
            PenaltyKind::Lasso | PenaltyKind::Mtlasso => {}
            PenaltyKind::Grace => {
                need_network("grace")?;
            }
            PenaltyKind::Gfl => {
                need_network("gfl")?;
            }
            PenaltyKind::Ogl => {
                let groups = self
                    .groups
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("ogl needs groups".into()))?;
                check_group_indices(groups, m)?;
            }
            PenaltyKind::Gggl => {
                let groups = self
                    .groups
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("gggl needs groups".into()))?;
                let gene = self
                    .gene_network
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("gggl needs a gene network".into()))?;
                check_partition(groups, m)?;
                if gene.n_nodes() != groups.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "gene network has {} nodes for {} groups",
                        gene.n_nodes(),
                        groups.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Solver settings shared by every penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative objective change below which a solver may stop.
    pub tol: f64,
    pub admm_rho: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-8,
            admm_rho: 1.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.admm_rho > 0.0 && self.admm_rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("admm_rho must be > 0, got {}", self.admm_rho)));
        }
        Ok(())
    }
}

pub(crate) fn check_xy(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples in X but {} phenotype values",
            x.nrows(),
            y.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_group_indices(groups: &[Vec<usize>], m: usize) -> Result<()> {
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(Error::InvalidInput(format!("group {i} is empty")));
        }
        if let Some(&p) = g.iter().find(|&&p| p >= m) {
            return Err(Error::InvalidInput(format!("group {i} refers to feature {p} of {m}")));
        }
    }
    Ok(())
}

/// Groups must be non-empty, disjoint and cover `0..m`.
pub(crate) fn check_partition(groups: &[Vec<usize>], m: usize) -> Result<()> {
    check_group_indices(groups, m)?;
    let mut owner = vec![usize::MAX; m];
    for (i, g) in groups.iter().enumerate() {
        for &p in g {
            if owner[p] != usize::MAX {
                return Err(Error::InvalidInput(format!(
                    "feature {p} belongs to groups {} and {i}; groups must not overlap",
                    owner[p]
                )));
            }
            owner[p] = i;
        }
    }
    if let Some(p) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::InvalidInput(format!("feature {p} is in no group")));
    }
    Ok(())
}

fn residual_sq(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64]) -> f64 {
    let b = ArrayView1::from(beta);
    let r = x.dot(&b) - y;
    r.dot(&r)
}

fn l1(beta: &[f64]) -> f64 {
    beta.iter().map(|b| b.abs()).sum()
}

/// Total-variation term `Σ_{p∼q} W_pq |β_p − β_q|`.
pub fn graph_total_variation(beta: &[f64], g: &WeightedNetwork) -> f64 {
    g.edges().iter().map(|e| e.w * (beta[e.u] - beta[e.v]).abs()).sum()
}

/// Penalty value alone.
pub fn penalty(beta: &[f64], spec: &PenaltySpec) -> Result<f64> {
    let m = beta.len();
    spec.validate(m)?;
    Ok(match spec.kind {
        PenaltyKind::Lasso => spec.lambda * l1(beta),
        PenaltyKind::Grace => {
            let g = spec.network.as_ref().expect("validated");
            spec.eta1 * l1(beta) + spec.eta2 * laplacian_quadratic(beta, g)?
        }
        PenaltyKind::Gfl => {
            let g = spec.network.as_ref().expect("validated");
            spec.lambda * (graph_total_variation(beta, g) + spec.eta * l1(beta))
        }
        PenaltyKind::Ogl => spec.lambda * ogl_penalty(beta, spec.groups.as_ref().expect("validated"))?,
        PenaltyKind::Gggl => {
            let groups = spec.groups.as_ref().expect("validated");
            let gene = spec.gene_network.as_ref().expect("validated");
            spec.lambda * gggl::group_norm_sum(beta, groups)
                + spec.eta1 * l1(beta)
                + spec.eta2 * gggl_graph_term(beta, groups, gene)?
        }
        PenaltyKind::Mtlasso => {
            return Err(Error::InvalidParameter(
                "the multi-task penalty needs all tasks; use mtlasso_objective".into(),
            ))
        }
    })
}

/// `‖Xβ − y‖² + penalty(β)` for a single-task penalty.
pub fn objective(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64], spec: &PenaltySpec) -> Result<f64> {
    check_xy(x, y)?;
    if beta.len() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} features",
            beta.len(),
            x.ncols()
        )));
    }
    Ok(residual_sq(x, y, beta) + penalty(beta, spec)?)
}

/// Value and gradient of the differentiable part of the objective: the loss,
/// plus `λ₂βᵀLβ` for grace and the quadratic graph term for gggl.
pub fn smooth_part(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    beta: &[f64],
    spec: &PenaltySpec,
) -> Result<(f64, Array1<f64>)> {
    check_xy(x, y)?;
    let m = x.ncols();
    if beta.len() != m {
        return Err(Error::DimensionMismatch(format!("{} coefficients for {m} features", beta.len())));
    }
    spec.validate(m)?;
    let b = ArrayView1::from(beta);
    let r = x.dot(&b) - y;
    let mut value = r.dot(&r);
    let mut grad = x.t().dot(&r) * 2.0;
    match spec.kind {
        PenaltyKind::Grace => {
            let g = spec.network.as_ref().expect("validated");
            let mut lb = vec![0.0; m];
            laplacian_matvec(beta, g, &mut lb)?;
            value += spec.eta2 * laplacian_quadratic(beta, g)?;
            grad.iter_mut().zip(&lb).for_each(|(gr, l)| *gr += 2.0 * spec.eta2 * l);
        }
        PenaltyKind::Gggl => {
            let groups = spec.groups.as_ref().expect("validated");
            let gene = spec.gene_network.as_ref().expect("validated");
            let coupling = gggl::GraphCoupling::new(groups, gene, m);
            value += spec.eta2 * coupling.value(beta);
            let mut cg = vec![0.0; m];
            coupling.gradient(beta, &mut cg);
            grad.iter_mut().zip(&cg).for_each(|(gr, c)| *gr += spec.eta2 * c);
        }
        PenaltyKind::Mtlasso => {
            return Err(Error::InvalidParameter("use mtlasso_smooth for the multi-task loss".into()))
        }
        _ => {}
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn path3() -> WeightedNetwork {
        WeightedNetwork::with_node_count(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn zero_beta_gives_squared_norm() {
        let x = array![[1.0, 0.5, 0.0], [0.0, 1.0, 2.0]];
        let y = array![1.0, -2.0];
        let specs = [
            PenaltySpec::lasso(1.0),
            PenaltySpec::grace(1.0, 2.0, path3()),
            PenaltySpec::gfl(1.0, 0.5, path3()),
            PenaltySpec::ogl(1.0, vec![vec![0, 1], vec![1, 2]]),
            PenaltySpec::gggl(1.0, 0.3, 0.7, vec![vec![0], vec![1, 2]], WeightedNetwork::with_node_count(2, [(0, 1, 1.0)]).unwrap()),
        ];
        for s in &specs {
            assert!((objective(x.view(), y.view(), &[0.0; 3], s).unwrap() - 5.0).abs() < 1e-12, "{}", s.kind);
        }
    }

    #[test]
    fn lasso_objective_example() {
        let x = Array2::eye(2);
        let y = array![3.0, 0.4];
        let f = objective(x.view(), y.view(), &[2.5, 0.0], &PenaltySpec::lasso(1.0)).unwrap();
        assert!((f - 2.91).abs() < 1e-12);
    }

    #[test]
    fn constant_beta_has_no_laplacian_term() {
        let x = Array2::eye(3);
        let y = array![1.0, 1.0, 1.0];
        let f = objective(x.view(), y.view(), &[1.0; 3], &PenaltySpec::grace(0.0, 5.0, path3())).unwrap();
        assert!(f.abs() < 1e-15);
    }

    #[test]
    fn missing_attachments_rejected() {
        let mut s = PenaltySpec::grace(1.0, 1.0, path3());
        s.network = None;
        assert!(s.validate(3).is_err());
        let s = PenaltySpec::gggl(1.0, 0.0, 0.0, vec![vec![0, 1], vec![1, 2]], WeightedNetwork::with_node_count(2, []).unwrap());
        assert!(s.validate(3).is_err());
        let s = PenaltySpec::ogl(1.0, vec![vec![]]);
        assert!(s.validate(3).is_err());
        assert!(PenaltySpec::lasso(-1.0).validate(3).is_err());
        let x = Array2::eye(2);
        let y = array![1.0, 2.0];
        assert!(objective(x.view(), y.view(), &[0.0; 3], &PenaltySpec::lasso(1.0)).is_err());
        assert!(objective(x.view(), y.view(), &[0.0; 2], &PenaltySpec::mtlasso(1.0)).is_err());
    }

    #[test]
    fn kind_round_trip() {
        for k in PenaltyKind::ALL {
            assert_eq!(k.name().parse::<PenaltyKind>().unwrap(), k);
        }
        assert!("goscar".parse::<PenaltyKind>().is_err());
    }

    #[test]
    fn solver_config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { max_iters: 0, ..Default::default() }.validate().is_err());
    }
}
