//! Generalized fused lasso on a feature network by ADMM.
//!
//! The problem `‖Xβ − y‖² + λ‖Dβ‖₁ + λη‖β‖₁`, with `D` the weighted edge
//! difference operator (row `W_pq(e_p − e_q)` per edge), is split as
//! `z = Dβ`, `w = β`. The β-update solves a fixed linear system with matrix
//! `2XᵀX + ρ(DᵀD + I)`, factored once per value of ρ.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::fista::soft_threshold;
use super::linalg::{dot, Cholesky, Design};
use super::{check_xy, graph_total_variation, SolverConfig};
use crate::datamodel::{CoefficientVector, WeightedNetwork};
use crate::error::{Error, Result};

const MAX_REFACTORIZATIONS: usize = 20;
const BALANCE_RATIO: f64 = 10.0;

struct Diff<'a> {
    g: &'a WeightedNetwork,
}

impl Diff<'_> {
    fn apply(&self, beta: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(self.g.edges()) {
            *o = e.w * (beta[e.u] - beta[e.v]);
        }
    }

    fn apply_t(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&zi, e) in z.iter().zip(self.g.edges()) {
            out[e.u] += e.w * zi;
            out[e.v] -= e.w * zi;
        }
    }
}

fn system(gram: &[f64], g: &WeightedNetwork, m: usize, rho: f64) -> Result<Cholesky> {
    let mut k: Vec<f64> = gram.iter().map(|v| 2.0 * v).collect();
    for p in 0..m {
        k[p * m + p] += rho;
    }
    for e in g.edges() {
        let w2 = rho * e.w * e.w;
        k[e.u * m + e.u] += w2;
        k[e.v * m + e.v] += w2;
        k[e.u * m + e.v] -= w2;
        k[e.v * m + e.u] -= w2;
    }
    Cholesky::factor(&k, m).ok_or_else(|| Error::InvalidInput("ADMM system is not positive definite".into()))
}

fn sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn solve(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    eta: f64,
    g: &WeightedNetwork,
    init: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<CoefficientVector> {
    check_xy(x, y)?;
    cfg.validate()?;
    let m = x.ncols();
    super::PenaltySpec::gfl(lambda, eta, g.clone()).validate(m)?;

    let design = Design::new(x);
    let y = y.to_vec();
    let gram = design.gram();
    let mut xty2 = vec![0.0; m];
    design.tmatvec(&y, &mut xty2);
    xty2.iter_mut().for_each(|v| *v *= 2.0);

    let n_edges = g.edges().len();
    let diff = Diff { g };
    let eps = cfg.tol.clamp(1e-12, 1e-8);
    let mut rho = cfg.admm_rho;
    let mut chol = system(&gram, g, m, rho)?;
    let mut refactorizations = 0;

    let mut beta = init.map_or_else(|| vec![0.0; m], <[f64]>::to_vec);
    let mut z = vec![0.0; n_edges];
    diff.apply(&beta, &mut z);
    let mut w: Vec<f64> = beta.clone();
    let mut a = vec![0.0; n_edges];
    let mut b = vec![0.0; m];
    let mut db = vec![0.0; n_edges];
    let mut rhs = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        // β-update
        let za: Vec<f64> = z.iter().zip(&a).map(|(z, a)| z - a).collect();
        diff.apply_t(&za, &mut tmp);
        for p in 0..m {
            rhs[p] = xty2[p] + rho * (tmp[p] + w[p] - b[p]);
        }
        beta = chol.solve(&rhs);
        diff.apply(&beta, &mut db);

        let z_old = std::mem::take(&mut z);
        z = db.iter().zip(&a).map(|(d, a)| soft_threshold(d + a, lambda / rho)).collect();
        let w_old = std::mem::take(&mut w);
        w = beta.iter().zip(&b).map(|(bt, b)| soft_threshold(bt + b, lambda * eta / rho)).collect();

        let mut r_pri = 0.0;
        for e in 0..n_edges {
            let r = db[e] - z[e];
            a[e] += r;
            r_pri += r * r;
        }
        for p in 0..m {
            let r = beta[p] - w[p];
            b[p] += r;
            r_pri += r * r;
        }
        let r_pri = r_pri.sqrt();
        let dz: Vec<f64> = z.iter().zip(&z_old).map(|(n, o)| n - o).collect();
        diff.apply_t(&dz, &mut tmp);
        let dw2: f64 = w.iter().zip(&w_old).map(|(n, o)| (n - o) * (n - o)).sum();
        let s_dual = rho * (sq(&tmp) + dw2).sqrt();

        let eps_pri = ((n_edges + m) as f64).sqrt() * eps + eps * (sq(&db) + sq(&beta)).sqrt().max((sq(&z) + sq(&w)).sqrt());
        diff.apply_t(&a, &mut tmp);
        let eps_dual = (m as f64).sqrt() * eps + eps * rho * (sq(&tmp) + sq(&b)).sqrt();
        if r_pri < eps_pri && s_dual < eps_dual {
            converged = true;
            break;
        }

        if refactorizations < MAX_REFACTORIZATIONS {
            let factor = if r_pri > BALANCE_RATIO * s_dual {
                2.0
            } else if s_dual > BALANCE_RATIO * r_pri {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                a.iter_mut().chain(b.iter_mut()).for_each(|u| *u /= factor);
                chol = system(&gram, g, m, rho)?;
                refactorizations += 1;
            }
        }
    }

    // the split copy carries exact zeros when there is an ℓ1 term
    let out = if lambda * eta > 0.0 { w } else { beta };
    let loss = design.ls_value_grad(&out, &y, None);
    let objective = loss + lambda * (graph_total_variation(&out, g) + eta * out.iter().map(|v| v.abs()).sum::<f64>());
    Ok(CoefficientVector {
        beta: Array1::from(out),
        objective_value: objective,
        iterations,
        converged,
    })
}

/// `‖Xβ − y‖² + λ(Σ_{p∼q} W_pq|β_p − β_q| + η‖β‖₁)` by ADMM, stopping when
/// the primal and dual residuals meet absolute and relative tolerances of
/// `cfg.tol` clamped to `[1e-12, 1e-8]`.
pub fn fit_gfl(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    eta: f64,
    g: &WeightedNetwork,
    cfg: &SolverConfig,
) -> Result<CoefficientVector> {
    solve(x, y, lambda, eta, g, None, cfg)
}
