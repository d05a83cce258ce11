//! Multi-task lasso: one coefficient vector per task, coupled by an ℓ2 norm
//! across tasks for every feature.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::fista::{block_shrink, minimize, Composite};
use super::linalg::Design;
use super::{check_xy, SolverConfig};
use crate::datamodel::CoefficientVector;
use crate::error::{Error, Result};

/// One task's data.
pub type Task<'a> = (ArrayView2<'a, f64>, ArrayView1<'a, f64>);

fn check_tasks(tasks: &[Task<'_>]) -> Result<usize> {
    let m = tasks
        .first()
        .ok_or_else(|| Error::InvalidInput("at least one task is required".into()))?
        .0
        .ncols();
    for (t, (x, y)) in tasks.iter().enumerate() {
        check_xy(*x, *y)?;
        if x.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "task {t} has {} features, task 0 has {m}",
                x.ncols()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::InvalidInput(format!("task {t} has no samples")));
        }
    }
    Ok(m)
}

fn check_betas(betas: &[&[f64]], t: usize, m: usize) -> Result<()> {
    if betas.len() != t || betas.iter().any(|b| b.len() != m) {
        return Err(Error::DimensionMismatch(format!("expected {t} coefficient vectors of length {m}")));
    }
    Ok(())
}

fn block_norm_sum(betas: &[&[f64]], m: usize) -> f64 {
    (0..m)
        .map(|p| betas.iter().map(|b| b[p] * b[p]).sum::<f64>().sqrt())
        .sum()
}

/// `Σ_t (1/n_t)‖X_t β_t − y_t‖²` and its gradient, one vector per task.
pub fn mtlasso_smooth(tasks: &[Task<'_>], betas: &[&[f64]]) -> Result<(f64, Vec<Array1<f64>>)> {
    let m = check_tasks(tasks)?;
    check_betas(betas, tasks.len(), m)?;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(tasks.len());
    for ((x, y), b) in tasks.iter().zip(betas) {
        let scale = 1.0 / x.nrows() as f64;
        let r = x.dot(&ArrayView1::from(*b)) - y;
        value += scale * r.dot(&r);
        grads.push(x.t().dot(&r) * (2.0 * scale));
    }
    Ok((value, grads))
}

/// `Σ_t (1/n_t)‖X_t β_t − y_t‖² + λ Σ_p ‖(β_{1p}, …, β_{Tp})‖₂`
pub fn mtlasso_objective(tasks: &[Task<'_>], betas: &[&[f64]], lambda: f64) -> Result<f64> {
    let (value, _) = mtlasso_smooth(tasks, betas)?;
    Ok(value + lambda * block_norm_sum(betas, betas[0].len()))
}

/// Smallest `λ` at which all coefficients are zero:
/// `max_p ‖((2/n_t) x_{tp}ᵀ y_t)_t‖₂`.
pub fn mtlasso_lambda_max(tasks: &[Task<'_>]) -> Result<f64> {
    let m = check_tasks(tasks)?;
    let cols: Vec<Array1<f64>> = tasks
        .iter()
        .map(|(x, y)| x.t().dot(y) * (2.0 / x.nrows() as f64))
        .collect();
    Ok((0..m)
        .map(|p| cols.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

struct Problem {
    designs: Vec<Design>,
    ys: Vec<Vec<f64>>,
    m: usize,
    lambda: f64,
}

impl Composite for Problem {
    fn dim(&self) -> usize {
        self.m * self.designs.len()
    }

    fn smooth(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let m = self.m;
        let mut value = 0.0;
        for (t, (d, y)) in self.designs.iter().zip(&self.ys).enumerate() {
            let scale = 1.0 / d.n as f64;
            let beta = &x[t * m..(t + 1) * m];
            match grad.as_deref_mut() {
                Some(g) => {
                    let gt = &mut g[t * m..(t + 1) * m];
                    value += scale * d.ls_value_grad(beta, y, Some(&mut *gt));
                    gt.iter_mut().for_each(|v| *v *= scale);
                }
                None => value += scale * d.ls_value_grad(beta, y, None),
            }
        }
        value
    }

    fn penalty(&self, x: &[f64]) -> f64 {
        let betas: Vec<&[f64]> = x.chunks(self.m).collect();
        self.lambda * block_norm_sum(&betas, self.m)
    }

    fn prox(&self, v: &[f64], step: f64, out: &mut [f64]) {
        let (m, t) = (self.m, self.designs.len());
        let mut block = vec![0.0; t];
        for p in 0..m {
            for k in 0..t {
                block[k] = v[k * m + p];
            }
            block_shrink(&mut block, step * self.lambda);
            for k in 0..t {
                out[k * m + p] = block[k];
            }
        }
    }
}

pub(crate) fn solve(
    tasks: &[Task<'_>],
    lambda: f64,
    init: Option<&[Vec<f64>]>,
    cfg: &SolverConfig,
) -> Result<Vec<CoefficientVector>> {
    let m = check_tasks(tasks)?;
    cfg.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let problem = Problem {
        designs: tasks.iter().map(|(x, _)| Design::new(*x)).collect(),
        ys: tasks.iter().map(|(_, y)| y.to_vec()).collect(),
        m,
        lambda,
    };
    let x0 = match init {
        Some(b) => {
            let refs: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
            check_betas(&refs, tasks.len(), m)?;
            b.concat()
        }
        None => vec![0.0; problem.dim()],
    };
    let out = minimize(&problem, x0, cfg);
    Ok(out
        .x
        .chunks(m)
        .map(|b| CoefficientVector {
            beta: Array1::from(b.to_vec()),
            objective_value: out.objective,
            iterations: out.iterations,
            converged: out.converged,
        })
        .collect())
}

/// Multi-task lasso by accelerated proximal gradient with a per-feature block
/// shrink. Each returned vector carries the joint objective.
pub fn fit_mtlasso(tasks: &[Task<'_>], lambda: f64, cfg: &SolverConfig) -> Result<Vec<CoefficientVector>> {
    solve(tasks, lambda, None, cfg)
}
