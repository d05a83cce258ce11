//! Small dense linear-algebra helpers for the regression solvers.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Column-major copy of a design matrix.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub n: usize,
    pub m: usize,
    cols: Vec<f64>,
}

impl Design {
    pub fn new(x: ArrayView2<'_, f64>) -> Self {
        let (n, m) = x.dim();
        let mut cols = Vec::with_capacity(n * m);
        for p in 0..m {
            cols.extend(x.column(p).iter());
        }
        Self { n, m, cols }
    }

    pub fn col(&self, p: usize) -> &[f64] {
        &self.cols[p * self.n..(p + 1) * self.n]
    }

    /// `out = X β`
    pub fn matvec(&self, beta: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (p, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(b, self.col(p), out);
            }
        }
    }

    /// `out = Xᵀ r`
    pub fn tmatvec(&self, r: &[f64], out: &mut [f64]) {
        for (p, o) in out.iter_mut().enumerate() {
            *o = dot(self.col(p), r);
        }
    }

    /// `y − X β`
    pub fn residual(&self, beta: &[f64], y: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        self.matvec(beta, &mut r);
        r.iter_mut().zip(y).for_each(|(ri, yi)| *ri = yi - *ri);
        r
    }

    /// `‖Xβ − y‖²`, writing `2Xᵀ(Xβ − y)` into `grad` when given.
    pub fn ls_value_grad(&self, beta: &[f64], y: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut r = vec![0.0; self.n];
        self.matvec(beta, &mut r);
        r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
        if let Some(g) = grad {
            self.tmatvec(&r, g);
            g.iter_mut().for_each(|v| *v *= 2.0);
        }
        dot(&r, &r)
    }

    pub fn col_sq_norms(&self) -> Vec<f64> {
        (0..self.m).map(|p| dot(self.col(p), self.col(p))).collect()
    }

    /// Dense Gram matrix `XᵀX`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.m;
        let mut g = vec![0.0; m * m];
        for p in 0..m {
            for q in p..m {
                let v = dot(self.col(p), self.col(q));
                g[p * m + q] = v;
                g[q * m + p] = v;
            }
        }
        g
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Returns `None` when `a` is not numerically positive definite.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration from a seeded random start.
pub(crate) fn power_iteration(dim: usize, seed: u64, iters: usize, mut apply: impl FnMut(&[f64], &mut [f64])) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 0.5).collect();
    let mut w = vec![0.0; dim];
    let mut estimate = 0.0;
    for _ in 0..iters {
        let nv = norm2(&v);
        if nv == 0.0 {
            return estimate;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        apply(&v, &mut w);
        estimate = norm2(&w);
        std::mem::swap(&mut v, &mut w);
    }
    estimate
}
