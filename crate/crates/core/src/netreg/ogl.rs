//! Overlapping group lasso through latent, duplicated variables: every group
//! gets its own copy of its features, `β` is the sum of the copies, and the
//! penalty is an ordinary (non-overlapping) group lasso on the copies.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::fista::{block_shrink, minimize, Composite};
use super::linalg::{norm2, Design};
use super::{check_group_indices, check_xy, SolverConfig};
use crate::datamodel::CoefficientVector;
use crate::error::{Error, Result};

const IRLS_ITERS: usize = 20_000;

/// Groups with every uncovered feature appended as its own singleton group.
/// Duplicate indices inside a group are dropped.
fn expand_groups(groups: &[Vec<usize>], m: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut covered = vec![false; m];
    let mut out: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| {
            let mut g = g.clone();
            g.sort_unstable();
            g.dedup();
            g.iter().for_each(|&p| covered[p] = true);
            g
        })
        .collect();
    let implicit: Vec<usize> = (0..m).filter(|&p| !covered[p]).collect();
    out.extend(implicit.iter().map(|&p| vec![p]));
    (out, implicit)
}

/// Decomposition of `beta` across `groups` minimizing `Σ‖v_g‖₂`, by
/// iteratively reweighted least squares. Every feature must be covered.
fn decompose(beta: &[f64], groups: &[Vec<usize>]) -> (Vec<Vec<f64>>, f64) {
    let m = beta.len();
    let mut weights = vec![1.0; groups.len()];
    let mut blocks: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.len()]).collect();
    let mut prev = f64::INFINITY;
    let mut value = 0.0;
    for _ in 0..IRLS_ITERS {
        let mut total = vec![0.0; m];
        for (g, &w) in groups.iter().zip(&weights) {
            g.iter().for_each(|&p| total[p] += w);
        }
        for ((g, &w), block) in groups.iter().zip(&weights).zip(&mut blocks) {
            for (&p, b) in g.iter().zip(block.iter_mut()) {
                *b = if total[p] > 0.0 { beta[p] * w / total[p] } else { 0.0 };
            }
        }
        value = 0.0;
        for (w, block) in weights.iter_mut().zip(&blocks) {
            *w = norm2(block).max(f64::MIN_POSITIVE);
            value += norm2(block);
        }
        if prev - value <= 1e-15 * value.max(f64::MIN_POSITIVE) {
            break;
        }
        prev = value;
    }
    (blocks, value)
}

/// `inf { Σ_g ‖v_g‖₂ : Σ_g v_g = β, supp(v_g) ⊆ G_g }`, with uncovered
/// features as implicit singleton groups.
pub fn ogl_penalty(beta: &[f64], groups: &[Vec<usize>]) -> Result<f64> {
    check_group_indices(groups, beta.len())?;
    let (expanded, _) = expand_groups(groups, beta.len());
    Ok(decompose(beta, &expanded).1)
}

/// Result of [`fit_ogl`].
#[derive(Debug, Clone)]
pub struct OglFit {
    pub coefficients: CoefficientVector,
    /// The groups actually used: the given ones (deduplicated) followed by
    /// implicit singletons.
    pub groups: Vec<Vec<usize>>,
    /// Latent vector of each group, aligned with `groups`.
    pub latent: Vec<Vec<f64>>,
    /// Features that were in no group.
    pub implicit_singletons: Vec<usize>,
}

struct Latent<'a> {
    design: Design,
    y: &'a [f64],
    groups: &'a [Vec<usize>],
    offsets: Vec<usize>,
    lambda: f64,
}

impl Latent<'_> {
    fn aggregate(&self, v: &[f64]) -> Vec<f64> {
        let mut beta = vec![0.0; self.design.m];
        for (g, &off) in self.groups.iter().zip(&self.offsets) {
            for (i, &p) in g.iter().enumerate() {
                beta[p] += v[off + i];
            }
        }
        beta
    }

    fn blocks<'v>(&self, v: &'v [f64]) -> impl Iterator<Item = &'v [f64]> + use<'v, '_> {
        self.groups
            .iter()
            .zip(&self.offsets)
            .map(move |(g, &off)| &v[off..off + g.len()])
    }
}

impl Composite for Latent<'_> {
    fn dim(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.groups.last().map_or(0, Vec::len)
    }

    fn smooth(&self, v: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let beta = self.aggregate(v);
        match grad {
            Some(out) => {
                let mut gb = vec![0.0; self.design.m];
                let value = self.design.ls_value_grad(&beta, self.y, Some(&mut gb));
                for (g, &off) in self.groups.iter().zip(&self.offsets) {
                    for (i, &p) in g.iter().enumerate() {
                        out[off + i] = gb[p];
                    }
                }
                value
            }
            None => self.design.ls_value_grad(&beta, self.y, None),
        }
    }

    fn penalty(&self, v: &[f64]) -> f64 {
        self.lambda * self.blocks(v).map(norm2).sum::<f64>()
    }

    fn prox(&self, v: &[f64], step: f64, out: &mut [f64]) {
        out.copy_from_slice(v);
        for (g, &off) in self.groups.iter().zip(&self.offsets) {
            block_shrink(&mut out[off..off + g.len()], step * self.lambda);
        }
    }
}

pub(crate) fn solve(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    groups: &[Vec<usize>],
    init: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<OglFit> {
    check_xy(x, y)?;
    cfg.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let m = x.ncols();
    check_group_indices(groups, m)?;
    let (expanded, implicit) = expand_groups(groups, m);
    let mut offsets = Vec::with_capacity(expanded.len());
    let mut acc = 0;
    for g in &expanded {
        offsets.push(acc);
        acc += g.len();
    }
    let y = y.to_vec();
    let problem = Latent {
        design: Design::new(x),
        y: &y,
        groups: &expanded,
        offsets,
        lambda,
    };
    let v0 = match init {
        Some(beta) => decompose(beta, &expanded).0.concat(),
        None => vec![0.0; problem.dim()],
    };
    let out = minimize(&problem, v0, cfg);
    let beta = problem.aggregate(&out.x);
    let latent: Vec<Vec<f64>> = problem.blocks(&out.x).map(<[f64]>::to_vec).collect();
    let latent_norm: f64 = latent.iter().map(|b| norm2(b)).sum();
    let loss = problem.design.ls_value_grad(&beta, &y, None);
    let omega = decompose(&beta, &expanded).1.min(latent_norm);
    Ok(OglFit {
        coefficients: CoefficientVector {
            beta: Array1::from(beta),
            objective_value: loss + lambda * omega,
            iterations: out.iterations,
            converged: out.converged,
        },
        groups: expanded,
        latent,
        implicit_singletons: implicit,
    })
}

/// Least squares plus `λ·Ω(β)` with the overlapping group norm `Ω`
/// ([`ogl_penalty`]), solved by accelerated proximal gradient on the latent
/// copies. Features in no group are penalized as singletons.
pub fn fit_ogl(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    groups: &[Vec<usize>],
    cfg: &SolverConfig,
) -> Result<OglFit> {
    solve(x, y, lambda, groups, None, cfg)
}
