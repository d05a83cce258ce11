//! Cyclic coordinate descent for the lasso and for the Laplacian-smoothed
//! lasso (`‖Xβ − y‖² + λ₁‖β‖₁ + λ₂ βᵀLβ`).

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::fista::{optimality_tol, soft_threshold};
use super::linalg::{dot, norm_inf, Design};
use super::{check_xy, SolverConfig};
use crate::datamodel::{CoefficientVector, WeightedNetwork};
use crate::error::{Error, Result};
use crate::netgraph::laplacian_quadratic;

#[derive(Debug, Clone)]
pub(crate) struct CdOutcome {
    pub beta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

struct Smoothing<'a> {
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    lambda2: f64,
    net: &'a WeightedNetwork,
}

fn objective(resid: &[f64], beta: &[f64], lambda1: f64, smoothing: Option<&Smoothing<'_>>) -> f64 {
    let mut f = dot(resid, resid) + lambda1 * beta.iter().map(|b| b.abs()).sum::<f64>();
    if let Some(s) = smoothing {
        f += s.lambda2 * laplacian_quadratic(beta, s.net).expect("sizes checked");
    }
    f
}

/// Largest violation of the subgradient optimality conditions.
fn kkt_residual(design: &Design, resid: &[f64], beta: &[f64], lambda1: f64, smoothing: Option<&Smoothing<'_>>) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..design.m {
        let mut g = -2.0 * dot(design.col(p), resid);
        if let Some(s) = smoothing {
            let lb: f64 = s.degree[p] * beta[p] - s.adj[p].iter().map(|&(q, w)| w * beta[q]).sum::<f64>();
            g += 2.0 * s.lambda2 * lb;
        }
        let r = if beta[p] != 0.0 {
            (g + lambda1 * beta[p].signum()).abs()
        } else {
            (g.abs() - lambda1).max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}

fn run(
    design: &Design,
    y: &[f64],
    lambda1: f64,
    smoothing: Option<&Smoothing<'_>>,
    init: Option<&[f64]>,
    cfg: &SolverConfig,
) -> CdOutcome {
    let m = design.m;
    let sq = design.col_sq_norms();
    let mut beta = init.map_or_else(|| vec![0.0; m], <[f64]>::to_vec);
    let mut resid = design.residual(&beta, y);
    let mut xty = vec![0.0; m];
    design.tmatvec(y, &mut xty);
    let opt_tol = optimality_tol(cfg.tol, (2.0 * norm_inf(&xty)).max(1.0));

    let mut f = objective(&resid, &beta, lambda1, smoothing);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let all: Vec<usize> = (0..m).collect();
    let sweep = |coords: &[usize], beta: &mut [f64], resid: &mut [f64]| {
        for &p in coords {
            let (curv, coupling) = match smoothing {
                Some(s) => (
                    sq[p] + s.lambda2 * s.degree[p],
                    s.lambda2 * s.adj[p].iter().map(|&(q, w)| w * beta[q]).sum::<f64>(),
                ),
                None => (sq[p], 0.0),
            };
            let old = beta[p];
            if curv <= 0.0 {
                beta[p] = 0.0;
                continue;
            }
            let col = design.col(p);
            let b = dot(col, resid) + sq[p] * old + coupling;
            let new = soft_threshold(b, 0.5 * lambda1) / curv;
            if new != old {
                let delta = new - old;
                resid.iter_mut().zip(col).for_each(|(r, x)| *r -= delta * x);
                beta[p] = new;
            }
        }
    };
    // full sweeps alternate with sweeps restricted to the current support
    'outer: while iterations < cfg.max_iters {
        iterations += 1;
        sweep(&all, &mut beta, &mut resid);
        let f_new = objective(&resid, &beta, lambda1, smoothing);
        trace.push(f_new);
        let rel = (f - f_new).abs() / f_new.abs().max(f64::MIN_POSITIVE);
        f = f_new;
        if rel < cfg.tol && kkt_residual(design, &resid, &beta, lambda1, smoothing) <= opt_tol {
            converged = true;
            break;
        }
        let active: Vec<usize> = (0..m).filter(|&p| beta[p] != 0.0).collect();
        if active.len() == m {
            continue;
        }
        while iterations < cfg.max_iters {
            iterations += 1;
            sweep(&active, &mut beta, &mut resid);
            let f_new = objective(&resid, &beta, lambda1, smoothing);
            trace.push(f_new);
            let rel = (f - f_new).abs() / f_new.abs().max(f64::MIN_POSITIVE);
            f = f_new;
            if rel < 0.1 * cfg.tol {
                continue 'outer;
            }
        }
    }
    CdOutcome {
        beta,
        objective: f,
        iterations,
        converged,
        trace,
    }
}

fn to_coefficients(out: CdOutcome) -> CoefficientVector {
    CoefficientVector {
        beta: Array1::from(out.beta),
        objective_value: out.objective,
        iterations: out.iterations,
        converged: out.converged,
    }
}

fn check_lambda(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

pub(crate) fn lasso_outcome(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    init: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<CdOutcome> {
    check_xy(x, y)?;
    check_lambda("lambda", lambda)?;
    cfg.validate()?;
    let design = Design::new(x);
    let y = y.to_vec();
    Ok(run(&design, &y, lambda, None, init, cfg))
}

pub(crate) fn grace_outcome(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda1: f64,
    lambda2: f64,
    g: &WeightedNetwork,
    init: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<CdOutcome> {
    check_xy(x, y)?;
    check_lambda("lambda1", lambda1)?;
    check_lambda("lambda2", lambda2)?;
    cfg.validate()?;
    if g.n_nodes() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "network has {} nodes for {} features",
            g.n_nodes(),
            x.ncols()
        )));
    }
    let design = Design::new(x);
    let y = y.to_vec();
    let smoothing = Smoothing {
        adj: g.adjacency(),
        degree: g.degrees(),
        lambda2,
        net: g,
    };
    Ok(run(&design, &y, lambda1, Some(&smoothing), init, cfg))
}

/// Lasso `‖Xβ − y‖² + λ‖β‖₁` by cyclic coordinate descent.
///
/// With `λ = 0` and more features than samples the minimizer is not unique;
/// one of them is returned.
pub fn fit_lasso(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, lambda: f64, cfg: &SolverConfig) -> Result<CoefficientVector> {
    lasso_outcome(x, y, lambda, None, cfg).map(to_coefficients)
}

/// `‖Xβ − y‖² + λ₁‖β‖₁ + λ₂ βᵀLβ` by cyclic coordinate descent, with `L` the
/// Laplacian of `g` (one node per feature).
pub fn fit_grace(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda1: f64,
    lambda2: f64,
    g: &WeightedNetwork,
    cfg: &SolverConfig,
) -> Result<CoefficientVector> {
    grace_outcome(x, y, lambda1, lambda2, g, None, cfg).map(to_coefficients)
}

pub(crate) fn warm_lasso(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    init: &[f64],
    cfg: &SolverConfig,
) -> Result<CoefficientVector> {
    lasso_outcome(x, y, lambda, Some(init), cfg).map(to_coefficients)
}

pub(crate) fn warm_grace(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda1: f64,
    lambda2: f64,
    g: &WeightedNetwork,
    init: &[f64],
    cfg: &SolverConfig,
) -> Result<CoefficientVector> {
    grace_outcome(x, y, lambda1, lambda2, g, Some(init), cfg).map(to_coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn orthonormal_closed_form() {
        let x = Array2::eye(2);
        let y = array![3.0, 0.4];
        let fit = fit_lasso(x.view(), y.view(), 1.0, &SolverConfig::default()).unwrap();
        assert!((fit.beta[0] - 2.5).abs() < 1e-12);
        assert_eq!(fit.beta[1], 0.0);
        assert!((fit.objective_value - 2.91).abs() < 1e-12);
        assert!(fit.converged);
    }

    #[test]
    fn trace_is_monotone() {
        let x = array![[1.0, 0.9, 0.1], [0.2, 1.1, -0.5], [0.5, 0.4, 1.0], [1.5, -0.3, 0.2]];
        let y = array![1.0, 2.0, -0.5, 0.7];
        let out = lasso_outcome(x.view(), y.view(), 0.1, None, &SolverConfig::default()).unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let g = WeightedNetwork::with_node_count(3, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let out = grace_outcome(x.view(), y.view(), 0.1, 0.7, &g, None, &SolverConfig::default()).unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(out.converged);
    }

    #[test]
    fn zero_column_stays_zero() {
        let x = array![[1.0, 0.0], [2.0, 0.0], [0.5, 0.0]];
        let y = array![1.0, 2.0, 3.0];
        let fit = fit_lasso(x.view(), y.view(), 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(fit.beta[1], 0.0);
    }

    #[test]
    fn errors() {
        let x = Array2::eye(2);
        let y = array![1.0, 2.0];
        assert!(fit_lasso(x.view(), y.view(), -1.0, &SolverConfig::default()).is_err());
        let g = WeightedNetwork::with_node_count(3, []).unwrap();
        assert!(fit_grace(x.view(), y.view(), 1.0, 1.0, &g, &SolverConfig::default()).is_err());
        let y3 = array![1.0, 2.0, 3.0];
        assert!(fit_lasso(x.view(), y3.view(), 1.0, &SolverConfig::default()).is_err());
    }
}
