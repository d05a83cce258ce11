//! Test-only reference solvers, optimality residuals and instance generators.
//! Everything here is written against dense matrices and shares no code with
//! the library solvers.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use netguide::WeightedNetwork;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| rng.sample(StandardNormal))
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.sample(StandardNormal))
}

/// Erdős–Rényi graph with weights uniform in [0.5, 2).
pub fn random_graph(rng: &mut ChaCha8Rng, m: usize, p: f64) -> WeightedNetwork {
    let mut edges = Vec::new();
    for u in 0..m {
        for v in u + 1..m {
            if rng.random::<f64>() < p {
                edges.push((u, v, rng.random_range(0.5..2.0)));
            }
        }
    }
    WeightedNetwork::with_node_count(m, edges).unwrap()
}

pub fn path_graph(m: usize) -> WeightedNetwork {
    WeightedNetwork::with_node_count(m, (1..m).map(|p| (p - 1, p, 1.0))).unwrap()
}

/// Random partition of `0..m` into `k` non-empty groups.
pub fn random_partition(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
    for p in k..m {
        groups[rng.random_range(0..k)].push(p);
    }
    groups
}

fn dense_gram(x: ArrayView2<'_, f64>) -> Array2<f64> {
    x.t().dot(&x)
}

fn frobenius_sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// Inverse of a symmetric positive definite matrix by Gauss–Jordan.
pub fn invert(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut aug = Array2::zeros((n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            aug[[i, j]] = a[[i, j]];
        }
        aug[[i, n + i]] = 1.0;
    }
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| aug[[i, c]].abs().total_cmp(&aug[[j, c]].abs())).unwrap();
        for j in 0..2 * n {
            let t = aug[[c, j]];
            aug[[c, j]] = aug[[piv, j]];
            aug[[piv, j]] = t;
        }
        let d = aug[[c, c]];
        for j in 0..2 * n {
            aug[[c, j]] /= d;
        }
        for i in 0..n {
            if i != c {
                let f = aug[[i, c]];
                for j in 0..2 * n {
                    aug[[i, j]] -= f * aug[[c, j]];
                }
            }
        }
    }
    aug.slice(ndarray::s![.., n..]).to_owned()
}

/// Plain FISTA with a fixed step `1/lip` for `iters` iterations; returns the
/// best point seen under `objective`.
pub fn fista_reference(
    x0: Vec<f64>,
    lip: f64,
    iters: usize,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    prox: impl Fn(&[f64], f64) -> Vec<f64>,
    objective: impl Fn(&[f64]) -> f64,
) -> (Vec<f64>, f64) {
    let mut x = x0.clone();
    let mut z = x0;
    let mut t = 1.0f64;
    let mut best = (x.clone(), objective(&x));
    for _ in 0..iters {
        let g = grad(&z);
        let v: Vec<f64> = z.iter().zip(&g).map(|(z, g)| z - g / lip).collect();
        let x_new = prox(&v, 1.0 / lip);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = x_new.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / t_new * (a - b)).collect();
        x = x_new;
        t = t_new;
        let f = objective(&x);
        if f < best.1 {
            best = (x.clone(), f);
        }
    }
    best
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn shrink(block: &mut [f64], t: f64) {
    let n = block.iter().map(|v| v * v).sum::<f64>().sqrt();
    let s = if n > t { 1.0 - t / n } else { 0.0 };
    block.iter_mut().for_each(|b| *b *= s);
}

fn ls_grad(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64]) -> Array1<f64> {
    let r = x.dot(&ArrayView1::from(beta)) - y;
    x.t().dot(&r) * 2.0
}

fn ls_value(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64]) -> f64 {
    let r = x.dot(&ArrayView1::from(beta)) - y;
    r.dot(&r)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------- lasso, grace

/// Largest violation of the subgradient conditions of
/// `‖Xβ − y‖² + λ₁‖β‖₁ + λ₂βᵀLβ`.
pub fn grace_kkt(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    beta: &[f64],
    lambda1: f64,
    lambda2: f64,
    g: Option<&WeightedNetwork>,
) -> f64 {
    let mut grad = ls_grad(x, y, beta);
    if let Some(g) = g {
        for e in g.edges() {
            let d = 2.0 * lambda2 * e.w * (beta[e.u] - beta[e.v]);
            grad[e.u] += d;
            grad[e.v] -= d;
        }
    }
    grad.iter()
        .zip(beta)
        .map(|(&gp, &b)| if b != 0.0 { (gp + lambda1 * b.signum()).abs() } else { (gp.abs() - lambda1).max(0.0) })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- gfl

pub struct GflReference {
    pub beta: Vec<f64>,
    pub primal: f64,
    /// Lower bound on the optimal value from the dual.
    pub dual: f64,
}

pub fn gfl_objective(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64], lambda: f64, eta: f64, g: &WeightedNetwork) -> f64 {
    let tv: f64 = g.edges().iter().map(|e| e.w * (beta[e.u] - beta[e.v]).abs()).sum();
    ls_value(x, y, beta) + lambda * (tv + eta * beta.iter().map(|b| b.abs()).sum::<f64>())
}

/// Accelerated projected gradient on the box-constrained dual; needs `XᵀX`
/// invertible.
pub fn gfl_reference(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, lambda: f64, eta: f64, g: &WeightedNetwork, iters: usize) -> GflReference {
    let m = x.ncols();
    let e = g.edges().len();
    let h_inv = invert(&(dense_gram(x) * 2.0));
    let gvec = x.t().dot(&y) * 2.0;
    let mut a = Array2::zeros((e + m, m));
    for (i, ed) in g.edges().iter().enumerate() {
        a[[i, ed.u]] = lambda * ed.w;
        a[[i, ed.v]] = -lambda * ed.w;
    }
    for p in 0..m {
        a[[e + p, p]] = lambda * eta;
    }
    let q = a.dot(&h_inv).dot(&a.t());
    let lip = frobenius_sq(&q).sqrt().max(1e-12);
    let yy = y.dot(&y);
    let dual_of = |u: &[f64]| {
        let r = &gvec - &a.t().dot(&ArrayView1::from(u));
        yy - 0.5 * r.dot(&h_inv.dot(&r))
    };
    let (u, _) = fista_reference(
        vec![0.0; e + m],
        lip,
        iters,
        |u| {
            let r = &gvec - &a.t().dot(&ArrayView1::from(u));
            (-a.dot(&h_inv.dot(&r))).to_vec()
        },
        |v, _| v.iter().map(|x| x.clamp(-1.0, 1.0)).collect(),
        |u| -dual_of(u),
    );
    let r = &gvec - &a.t().dot(&ArrayView1::from(&u[..]));
    let beta = h_inv.dot(&r).to_vec();
    GflReference {
        primal: gfl_objective(x, y, &beta, lambda, eta, g),
        dual: dual_of(&u),
        beta,
    }
}

/// Subgradient residual of the fused objective: the smallest `‖·‖∞` of
/// `∇f + λDᵀs + ληt` found by box-constrained least squares over the free
/// signs (differences and coefficients within `delta` of zero count as zero).
pub fn gfl_residual(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    beta: &[f64],
    lambda: f64,
    eta: f64,
    g: &WeightedNetwork,
    delta: f64,
) -> f64 {
    let m = beta.len();
    let grad = ls_grad(x, y, beta);
    // columns of the combined operator, each with its current value and box
    struct Var {
        entries: Vec<(usize, f64)>,
        value: f64,
        free: bool,
    }
    let mut vars = Vec::new();
    for ed in g.edges() {
        let d = beta[ed.u] - beta[ed.v];
        let c = lambda * ed.w;
        vars.push(Var {
            entries: vec![(ed.u, c), (ed.v, -c)],
            value: if d.abs() > delta { d.signum() } else { 0.0 },
            free: d.abs() <= delta,
        });
    }
    for (p, &b) in beta.iter().enumerate() {
        vars.push(Var {
            entries: vec![(p, lambda * eta)],
            value: if b.abs() > delta { b.signum() } else { 0.0 },
            free: b.abs() <= delta,
        });
    }
    let mut r = grad.to_vec();
    for v in &vars {
        for &(i, c) in &v.entries {
            r[i] += c * v.value;
        }
    }
    for _ in 0..20_000 {
        let mut moved = 0.0f64;
        for v in vars.iter_mut().filter(|v| v.free) {
            let denom: f64 = v.entries.iter().map(|(_, c)| c * c).sum();
            if denom == 0.0 {
                continue;
            }
            let num: f64 = v.entries.iter().map(|&(i, c)| c * r[i]).sum();
            let new = (v.value - num / denom).clamp(-1.0, 1.0);
            let d = new - v.value;
            if d != 0.0 {
                for &(i, c) in &v.entries {
                    r[i] += c * d;
                }
                v.value = new;
                moved = moved.max(d.abs());
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    debug_assert_eq!(r.len(), m);
    r.iter().fold(0.0, |a, v| a.max(v.abs()))
}

// ---------------------------------------------------------------- ogl

/// Groups plus singletons for uncovered features.
pub fn cover(groups: &[Vec<usize>], m: usize) -> Vec<Vec<usize>> {
    let mut out = groups.to_vec();
    for p in 0..m {
        if !groups.iter().any(|g| g.contains(&p)) {
            out.push(vec![p]);
        }
    }
    out
}

/// Reference objective for the overlapping group lasso from long-run FISTA on
/// the latent copies.
pub fn ogl_reference(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, lambda: f64, groups: &[Vec<usize>], iters: usize) -> f64 {
    let m = x.ncols();
    let groups = cover(groups, m);
    let mut mult = vec![0usize; m];
    groups.iter().flatten().for_each(|&p| mult[p] += 1);
    let lip = 2.0 * frobenius_sq(&dense_gram(x)).sqrt() * *mult.iter().max().unwrap() as f64;
    let dim: usize = groups.iter().map(Vec::len).sum();
    let aggregate = |v: &[f64]| {
        let mut b = vec![0.0; m];
        let mut k = 0;
        for g in &groups {
            for &p in g {
                b[p] += v[k];
                k += 1;
            }
        }
        b
    };
    let objective = |v: &[f64]| {
        let mut k = 0;
        let mut pen = 0.0;
        for g in &groups {
            pen += norm(&v[k..k + g.len()]);
            k += g.len();
        }
        ls_value(x, y, &aggregate(v)) + lambda * pen
    };
    fista_reference(
        vec![0.0; dim],
        lip,
        iters,
        |v| {
            let gb = ls_grad(x, y, &aggregate(v));
            groups.iter().flatten().map(|&p| gb[p]).collect()
        },
        |v, step| {
            let mut out = v.to_vec();
            let mut k = 0;
            for g in &groups {
                shrink(&mut out[k..k + g.len()], step * lambda);
                k += g.len();
            }
            out
        },
        objective,
    )
    .1
}

/// Block optimality residual of a latent decomposition.
pub fn ogl_residual(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64], lambda: f64, groups: &[Vec<usize>], latent: &[Vec<f64>]) -> f64 {
    let grad = ls_grad(x, y, beta);
    groups
        .iter()
        .zip(latent)
        .map(|(g, v)| {
            let gg: Vec<f64> = g.iter().map(|&p| grad[p]).collect();
            let nv = norm(v);
            if nv > 0.0 {
                let r: Vec<f64> = gg.iter().zip(v).map(|(a, b)| a + lambda * b / nv).collect();
                norm(&r)
            } else {
                (norm(&gg) - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- gggl

pub fn gggl_coupling(beta: &[f64], groups: &[Vec<usize>], gene: &WeightedNetwork) -> f64 {
    let mut s = 0.0;
    for e in gene.edges() {
        for &p in &groups[e.u] {
            for &q in &groups[e.v] {
                s += e.w * (beta[p] - beta[q]).powi(2);
            }
        }
    }
    s
}

fn gggl_coupling_grad(beta: &[f64], groups: &[Vec<usize>], gene: &WeightedNetwork) -> Vec<f64> {
    let mut g = vec![0.0; beta.len()];
    for e in gene.edges() {
        for &p in &groups[e.u] {
            for &q in &groups[e.v] {
                let d = 2.0 * e.w * (beta[p] - beta[q]);
                g[p] += d;
                g[q] -= d;
            }
        }
    }
    g
}

pub struct Gggl<'a> {
    pub lambda: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub groups: &'a [Vec<usize>],
    pub gene: &'a WeightedNetwork,
}

impl Gggl<'_> {
    pub fn objective(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64]) -> f64 {
        let group: f64 = self
            .groups
            .iter()
            .map(|g| (g.len() as f64).sqrt() * norm(&g.iter().map(|&p| beta[p]).collect::<Vec<_>>()))
            .sum();
        ls_value(x, y, beta)
            + self.lambda * group
            + self.eta1 * beta.iter().map(|b| b.abs()).sum::<f64>()
            + self.eta2 * gggl_coupling(beta, self.groups, self.gene)
    }

    fn smooth_grad(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64]) -> Vec<f64> {
        let mut g = ls_grad(x, y, beta).to_vec();
        for (a, b) in g.iter_mut().zip(gggl_coupling_grad(beta, self.groups, self.gene)) {
            *a += self.eta2 * b;
        }
        g
    }

    pub fn reference(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, iters: usize) -> f64 {
        let m = x.ncols();
        let mut gershgorin = 0.0f64;
        for u in 0..self.groups.len() {
            let s: f64 = self
                .gene
                .edges()
                .iter()
                .filter(|e| e.u == u || e.v == u)
                .map(|e| e.w * self.groups[if e.u == u { e.v } else { e.u }].len() as f64)
                .sum();
            gershgorin = gershgorin.max(4.0 * s);
        }
        let lip = 2.0 * frobenius_sq(&dense_gram(x)).sqrt() + self.eta2 * gershgorin;
        fista_reference(
            vec![0.0; m],
            lip,
            iters,
            |b| self.smooth_grad(x, y, b),
            |v, step| {
                let mut out: Vec<f64> = v.iter().map(|&a| soft(a, step * self.eta1)).collect();
                for g in self.groups {
                    let mut block: Vec<f64> = g.iter().map(|&p| out[p]).collect();
                    shrink(&mut block, step * self.lambda * (g.len() as f64).sqrt());
                    for (&p, b) in g.iter().zip(block) {
                        out[p] = b;
                    }
                }
                out
            },
            |b| self.objective(x, y, b),
        )
        .1
    }

    pub fn residual(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64]) -> f64 {
        let grad = self.smooth_grad(x, y, beta);
        let mut worst = 0.0f64;
        for g in self.groups {
            let w = self.lambda * (g.len() as f64).sqrt();
            let bg: Vec<f64> = g.iter().map(|&p| beta[p]).collect();
            let nb = norm(&bg);
            if nb == 0.0 {
                let s: Vec<f64> = g.iter().map(|&p| soft(grad[p], self.eta1)).collect();
                worst = worst.max((norm(&s) - w).max(0.0));
            } else {
                for &p in g {
                    let r = if beta[p] != 0.0 {
                        (grad[p] + self.eta1 * beta[p].signum() + w * beta[p] / nb).abs()
                    } else {
                        (grad[p].abs() - self.eta1).max(0.0)
                    };
                    worst = worst.max(r);
                }
            }
        }
        worst
    }
}

// ---------------------------------------------------------------- mtlasso

pub fn mt_objective(tasks: &[(Array2<f64>, Array1<f64>)], betas: &[Vec<f64>], lambda: f64) -> f64 {
    let m = betas[0].len();
    let loss: f64 = tasks
        .iter()
        .zip(betas)
        .map(|((x, y), b)| ls_value(x.view(), y.view(), b) / x.nrows() as f64)
        .sum();
    let pen: f64 = (0..m).map(|p| norm(&betas.iter().map(|b| b[p]).collect::<Vec<_>>())).sum();
    loss + lambda * pen
}

fn mt_grads(tasks: &[(Array2<f64>, Array1<f64>)], betas: &[Vec<f64>]) -> Vec<Vec<f64>> {
    tasks
        .iter()
        .zip(betas)
        .map(|((x, y), b)| (ls_grad(x.view(), y.view(), b) / x.nrows() as f64).to_vec())
        .collect()
}

pub fn mt_reference(tasks: &[(Array2<f64>, Array1<f64>)], lambda: f64, iters: usize) -> f64 {
    let m = tasks[0].0.ncols();
    let t = tasks.len();
    let lip = tasks
        .iter()
        .map(|(x, _)| 2.0 * frobenius_sq(&dense_gram(x.view())).sqrt() / x.nrows() as f64)
        .fold(0.0, f64::max);
    let split = |v: &[f64]| v.chunks(m).map(<[f64]>::to_vec).collect::<Vec<_>>();
    fista_reference(
        vec![0.0; m * t],
        lip,
        iters,
        |v| mt_grads(tasks, &split(v)).concat(),
        |v, step| {
            let mut out = v.to_vec();
            for p in 0..m {
                let mut block: Vec<f64> = (0..t).map(|k| v[k * m + p]).collect();
                shrink(&mut block, step * lambda);
                for k in 0..t {
                    out[k * m + p] = block[k];
                }
            }
            out
        },
        |v| mt_objective(tasks, &split(v), lambda),
    )
    .1
}

pub fn mt_residual(tasks: &[(Array2<f64>, Array1<f64>)], betas: &[Vec<f64>], lambda: f64) -> f64 {
    let grads = mt_grads(tasks, betas);
    let m = betas[0].len();
    (0..m)
        .map(|p| {
            let g: Vec<f64> = grads.iter().map(|g| g[p]).collect();
            let b: Vec<f64> = betas.iter().map(|b| b[p]).collect();
            let nb = norm(&b);
            if nb > 0.0 {
                norm(&g.iter().zip(&b).map(|(g, b)| g + lambda * b / nb).collect::<Vec<_>>())
            } else {
                (norm(&g) - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- gradients

/// Largest relative error between `grad` and central differences of `f`.
pub fn finite_difference_error(f: impl Fn(&[f64]) -> f64, point: &[f64], grad: &[f64], h: f64) -> f64 {
    let mut fd = vec![0.0; point.len()];
    for i in 0..point.len() {
        let mut a = point.to_vec();
        let mut b = point.to_vec();
        a[i] += h;
        b[i] -= h;
        fd[i] = (f(&a) - f(&b)) / (2.0 * h);
    }
    let diff: Vec<f64> = fd.iter().zip(grad).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(grad).max(1e-12)
}
