//! Accelerated proximal gradient (monotone FISTA with adaptive restart and
//! backtracking) for `f(x) + h(x)` with quadratic `f`.

use super::linalg::{dot, norm_inf, power_iteration};
use super::SolverConfig;

/// Soft-thresholding `sign(v)·max(|v| − t, 0)`.
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Scales `block` in place by `max(1 − t/‖block‖₂, 0)`.
pub fn block_shrink(block: &mut [f64], t: f64) {
    let norm = dot(block, block).sqrt();
    let scale = if norm > t { 1.0 - t / norm } else { 0.0 };
    block.iter_mut().for_each(|b| *b *= scale);
}

pub(crate) trait Composite {
    fn dim(&self) -> usize;
    /// Value of the smooth part; writes its gradient when `grad` is given.
    fn smooth(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64;
    fn penalty(&self, x: &[f64]) -> f64;
    /// `out = prox_{step·h}(v)`.
    fn prox(&self, v: &[f64], step: f64, out: &mut [f64]);
    /// Scale used to make the optimality tolerance relative.
    fn gradient_scale(&self) -> f64 {
        let zero = vec![0.0; self.dim()];
        let mut g = vec![0.0; self.dim()];
        self.smooth(&zero, Some(&mut g));
        norm_inf(&g).max(1.0)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

/// Curvature bound of a quadratic smooth part from power iteration on its
/// Hessian `∇f(v) − ∇f(0)`.
fn curvature<P: Composite>(problem: &P, seed: u64) -> f64 {
    let d = problem.dim();
    let zero = vec![0.0; d];
    let mut g0 = vec![0.0; d];
    problem.smooth(&zero, Some(&mut g0));
    power_iteration(d, seed, 60, |v, out| {
        problem.smooth(v, Some(out));
        out.iter_mut().zip(&g0).for_each(|(o, g)| *o -= g);
    })
}

/// Optimality tolerance derived from the relative objective tolerance.
pub(crate) fn optimality_tol(tol: f64, scale: f64) -> f64 {
    1e-3 * tol.sqrt() * scale
}

pub(crate) fn minimize<P: Composite>(problem: &P, x0: Vec<f64>, cfg: &SolverConfig) -> Outcome {
    let d = problem.dim();
    let opt_tol = optimality_tol(cfg.tol, problem.gradient_scale());
    // step = 0.99 / L̂, i.e. L = L̂ / 0.99
    let mut lip = (curvature(problem, cfg.seed) / 0.99).max(1e-12);

    let mut x = x0;
    let mut x_prev = x.clone();
    let mut z = x.clone();
    let mut f_x = problem.smooth(&x, None) + problem.penalty(&x);
    let mut t = 1.0f64;
    let mut grad = vec![0.0; d];
    let mut u = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let f_z = problem.smooth(&z, Some(&mut grad));
        let smooth_u = loop {
            for i in 0..d {
                v[i] = z[i] - grad[i] / lip;
            }
            problem.prox(&v, 1.0 / lip, &mut u);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for i in 0..d {
                let diff = u[i] - z[i];
                lin += grad[i] * diff;
                sq += diff * diff;
            }
            let f_u = problem.smooth(&u, None);
            let bound = f_z + lin + 0.5 * lip * sq;
            if f_u <= bound + 1e-12 * bound.abs().max(1.0) {
                break f_u;
            }
            lip *= 2.0;
        };
        let gap = lip * z.iter().zip(&u).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        let f_u = smooth_u + problem.penalty(&u);

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let previous = f_x;
        std::mem::swap(&mut x_prev, &mut x);
        if f_u <= previous {
            x.copy_from_slice(&u);
            f_x = f_u;
            for i in 0..d {
                z[i] = x[i] + ((t - 1.0) / t_next) * (x[i] - x_prev[i]);
            }
            t = t_next;
        } else {
            // reject the step and restart momentum from the last accepted point
            x.copy_from_slice(&x_prev);
            z.copy_from_slice(&x);
            t = 1.0;
        }
        trace.push(f_x);

        let rel_change = (previous - f_x).abs() / f_x.abs().max(f64::MIN_POSITIVE);
        if rel_change < cfg.tol && gap <= opt_tol {
            converged = true;
            break;
        }
    }
    Outcome {
        x,
        objective: f_x,
        iterations,
        converged,
        trace,
    }
}
