//! Cross-validated grid search over selection hyperparameters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis as NdAxis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::grid::{default_axis, median_positive, Axis, GridSpec};
use super::stability::stability_across_folds;
use crate::datamodel::{CoefficientVector, FeatureMatrix, Phenotype, SelectionParams, SelectionSet, WeightedNetwork};
use crate::error::{Error, Result};
use crate::netreg::linalg::Cholesky;
use crate::netreg::{
    self, fit_mtlasso, fit_mtlasso_path, fit_path, mtlasso_lambda_max, PenaltyKind, PenaltySpec, SolverConfig, Task,
};
use crate::relevance::{skat_linear_score, RelevanceVector};
use crate::scones::{multi_scones_select, scones_select, SconesParams};

/// Value given to secondary regression hyperparameters when the grid does
/// not list them.
pub const DEFAULT_SECONDARY: f64 = 1.0;

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_RIDGE: f64 = 1e-3;

/// Reported with every result so the exclusion convention can be audited.
pub const EXCLUSION_RULE: &str = "grid points whose mean selection size over folds is 0 or m are not eligible";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Scones,
    MultiScones,
    Netreg(PenaltyKind),
}

impl Method {
    /// Grid axes the method reads.
    pub fn axes(self) -> &'static [&'static str] {
        match self {
            Self::Scones => &["eta", "lambda"],
            Self::MultiScones => &["eta", "lambda", "mu"],
            Self::Netreg(PenaltyKind::Lasso | PenaltyKind::Ogl | PenaltyKind::Mtlasso) => &["lambda"],
            Self::Netreg(PenaltyKind::Grace) => &["lambda1", "lambda2"],
            Self::Netreg(PenaltyKind::Gfl) => &["eta", "lambda"],
            Self::Netreg(PenaltyKind::Gggl) => &["eta1", "eta2", "lambda"],
        }
    }

    fn multi_task(self) -> bool {
        matches!(self, Self::MultiScones | Self::Netreg(PenaltyKind::Mtlasso))
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scones" => Ok(Self::Scones),
            "multi-scones" => Ok(Self::MultiScones),
            other => other.parse().map(Self::Netreg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scones => f.write_str("scones"),
            Self::MultiScones => f.write_str("multi-scones"),
            Self::Netreg(k) => f.write_str(k.name()),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Chance-corrected agreement of the fold selections
    /// ([`GridPointResult::stability`]).
    Stability,
    /// Mean held-out R².
    Predictivity,
    /// `stability · max(predictivity, 0)`.
    Product,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stability" => Ok(Self::Stability),
            "predictivity" => Ok(Self::Predictivity),
            "product" => Ok(Self::Product),
            other => Err(Error::InvalidParameter(format!(
                "unknown criterion '{other}' (stability, predictivity, product)"
            ))),
        }
    }
}

/// One task: features, phenotype and the feature network.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub x: FeatureMatrix,
    pub y: Phenotype,
    pub network: WeightedNetwork,
}

#[derive(Debug, Clone)]
pub struct CvData {
    pub tasks: Vec<TaskData>,
    /// Feature groups, for `ogl` and `gggl`.
    pub groups: Option<Vec<Vec<usize>>>,
    /// Network over the groups, for `gggl`.
    pub gene_network: Option<WeightedNetwork>,
}

impl CvData {
    pub fn single(x: FeatureMatrix, y: Phenotype, network: WeightedNetwork) -> Self {
        Self {
            tasks: vec![TaskData { x, y, network }],
            groups: None,
            gene_network: None,
        }
    }

    fn n_features(&self) -> usize {
        self.tasks[0].x.n_features()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub criterion: Criterion,
    pub seed: u64,
    /// Ridge penalty of the predictivity refit.
    pub ridge: f64,
    /// Use normalized relevance scores for the SConES methods.
    pub normalize: bool,
    pub solver: SolverConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            criterion: Criterion::Product,
            seed: 0,
            ridge: DEFAULT_RIDGE,
            normalize: false,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPointResult {
    pub params: BTreeMap<String, f64>,
    /// `[fold][task]`.
    pub fold_selections: Vec<Vec<SelectionSet>>,
    /// Mean pairwise correlation of the fold selections' indicator vectors
    /// (the consistency index generalized to unequal sizes; undefined pairs
    /// count as 0), averaged over tasks. Lies in [−1, 1].
    pub stability: f64,
    /// Mean pairwise Jaccard index, averaged over tasks.
    pub jaccard: f64,
    /// Mean consistency index, when every fold selection of every task has
    /// the same size strictly between 0 and `m`.
    pub kuncheva: Option<f64>,
    /// Every fold selected nothing.
    pub all_empty: bool,
    /// Mean held-out R², over folds and tasks.
    pub predictivity: f64,
    pub mean_selected: f64,
    pub admissible: bool,
    /// Criterion value; absent for inadmissible points.
    pub score: Option<f64>,
    pub chosen: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvResult {
    pub method: Method,
    pub criterion: Criterion,
    pub folds: usize,
    pub seed: u64,
    pub exclusion_rule: &'static str,
    pub points: Vec<GridPointResult>,
    /// Index into `points`.
    pub chosen: usize,
    /// Refit on all samples at the chosen point, one set per task.
    pub final_selection: Vec<SelectionSet>,
    /// Regression weights of the refit, one vector per task.
    pub final_beta: Option<Vec<Vec<f64>>>,
    #[serde(skip)]
    pub final_coefficients: Option<Vec<CoefficientVector>>,
}

impl CvResult {
    pub fn chosen_point(&self) -> &GridPointResult {
        &self.points[self.chosen]
    }
}

/// Fold id of every sample: a seeded shuffle dealt round-robin.
pub fn assign_folds(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    fold_of
}

/// Held-out R² of a ridge fit on the `selected` columns, trained on `train`
/// rows and scored on `test` rows. Features and phenotype are centered with
/// training means. Returns 0 for an empty selection or a constant held-out
/// phenotype.
pub fn ridge_predictivity(
    x: &Array2<f64>,
    y: &Array1<f64>,
    train: &[usize],
    test: &[usize],
    selected: &[usize],
    alpha: f64,
) -> f64 {
    if selected.is_empty() || train.is_empty() || test.is_empty() {
        return 0.0;
    }
    let s = selected.len();
    let n = train.len();
    let y_mean = train.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
    let x_mean: Vec<f64> = selected
        .iter()
        .map(|&p| train.iter().map(|&i| x[[i, p]]).sum::<f64>() / n as f64)
        .collect();
    // training block, row-major n × s
    let mut a = vec![0.0; n * s];
    for (r, &i) in train.iter().enumerate() {
        for (c, &p) in selected.iter().enumerate() {
            a[r * s + c] = x[[i, p]] - x_mean[c];
        }
    }
    let yc: Vec<f64> = train.iter().map(|&i| y[i] - y_mean).collect();
    let beta = if s <= n {
        let mut gram = vec![0.0; s * s];
        let mut rhs = vec![0.0; s];
        for r in 0..n {
            let row = &a[r * s..(r + 1) * s];
            for j in 0..s {
                rhs[j] += row[j] * yc[r];
                for k in 0..=j {
                    gram[j * s + k] += row[j] * row[k];
                }
            }
        }
        for j in 0..s {
            for k in 0..j {
                gram[k * s + j] = gram[j * s + k];
            }
            gram[j * s + j] += alpha;
        }
        match Cholesky::factor(&gram, s) {
            Some(ch) => ch.solve(&rhs),
            None => return 0.0,
        }
    } else {
        let mut kernel = vec![0.0; n * n];
        for r in 0..n {
            for q in 0..=r {
                let v: f64 = (0..s).map(|c| a[r * s + c] * a[q * s + c]).sum();
                kernel[r * n + q] = v;
                kernel[q * n + r] = v;
            }
            kernel[r * n + r] += alpha;
        }
        let dual = match Cholesky::factor(&kernel, n) {
            Some(ch) => ch.solve(&yc),
            None => return 0.0,
        };
        (0..s).map(|c| (0..n).map(|r| a[r * s + c] * dual[r]).sum()).collect()
    };
    let test_mean = test.iter().map(|&i| y[i]).sum::<f64>() / test.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &i in test {
        let pred = y_mean + selected.iter().zip(&x_mean).zip(&beta).map(|((&p, mu), b)| (x[[i, p]] - mu) * b).sum::<f64>();
        ss_res += (y[i] - pred).powi(2);
        ss_tot += (y[i] - test_mean).powi(2);
    }
    if ss_tot == 0.0 {
        0.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Training data of one task in one fold, with what the methods need
/// precomputed.
struct Prepared {
    train: Vec<usize>,
    test: Vec<usize>,
    relevance: Option<RelevanceVector>,
    /// Column- and mean-centered training design and phenotype.
    centered: Option<(Array2<f64>, Array1<f64>)>,
}

fn centered(x: &Array2<f64>, y: &Array1<f64>, rows: &[usize]) -> (Array2<f64>, Array1<f64>) {
    let mut xs = x.select(NdAxis(0), rows);
    let mut ys = y.select(NdAxis(0), rows);
    if let Some(mean) = xs.mean_axis(NdAxis(0)) {
        xs -= &mean;
    }
    let ym = ys.mean().unwrap_or(0.0);
    ys -= ym;
    (xs, ys)
}

fn prepare(method: Method, task: &TaskData, train: Vec<usize>, test: Vec<usize>, normalize: bool) -> Result<Prepared> {
    let (relevance, centered) = match method {
        Method::Scones | Method::MultiScones => {
            let c = skat_linear_score(&task.x.select_samples(&train)?, &task.y.select_samples(&train)?, normalize)?;
            // the unnormalized score sums over samples; put folds on the
            // scale of the full data so grid values mean the same in both
            let c = if normalize || train.len() == task.x.n_samples() {
                c
            } else {
                let f = task.x.n_samples() as f64 / train.len() as f64;
                RelevanceVector::new(c.scores().iter().map(|v| v * f).collect())?
            };
            (Some(c), None)
        }
        Method::Netreg(_) => (None, Some(centered(task.x.values(), task.y.values(), &train))),
    };
    Ok(Prepared {
        train,
        test,
        relevance,
        centered,
    })
}

fn param(point: &BTreeMap<String, f64>, name: &str) -> f64 {
    point.get(name).copied().unwrap_or(0.0)
}

fn netreg_spec(kind: PenaltyKind, point: &BTreeMap<String, f64>, data: &CvData) -> Result<PenaltySpec> {
    let p = |n: &str| param(point, n);
    let groups = || {
        data.groups
            .clone()
            .ok_or_else(|| Error::InvalidInput(format!("{kind} needs feature groups")))
    };
    Ok(match kind {
        PenaltyKind::Lasso => PenaltySpec::lasso(p("lambda")),
        PenaltyKind::Grace => PenaltySpec::grace(p("lambda1"), p("lambda2"), data.tasks[0].network.clone()),
        PenaltyKind::Gfl => PenaltySpec::gfl(p("lambda"), p("eta"), data.tasks[0].network.clone()),
        PenaltyKind::Ogl => PenaltySpec::ogl(p("lambda"), groups()?),
        PenaltyKind::Gggl => {
            let gene = data
                .gene_network
                .clone()
                .ok_or_else(|| Error::InvalidInput("gggl needs a gene network".into()))?;
            PenaltySpec::gggl(p("lambda"), p("eta1"), p("eta2"), groups()?, gene)
        }
        PenaltyKind::Mtlasso => PenaltySpec::mtlasso(p("lambda")),
    })
}

type Fitted = (Vec<SelectionSet>, Option<Vec<CoefficientVector>>);

fn path_name(method: Method) -> Option<&'static str> {
    match method {
        Method::Netreg(PenaltyKind::Grace) => Some("lambda1"),
        Method::Netreg(_) => Some("lambda"),
        _ => None,
    }
}

/// Point indices bundled so that regression points differing only in the
/// path parameter are solved in one warm-started sweep, largest value first.
fn sweeps(method: Method, points: &[BTreeMap<String, f64>]) -> Vec<Vec<usize>> {
    let Some(path) = path_name(method) else {
        return (0..points.len()).map(|i| vec![i]).collect();
    };
    let mut out: Vec<(BTreeMap<String, f64>, Vec<usize>)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let mut key = p.clone();
        key.remove(path);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(i),
            None => out.push((key, vec![i])),
        }
    }
    out.into_iter()
        .map(|(_, mut v)| {
            v.sort_by(|&a, &b| points[b][path].total_cmp(&points[a][path]));
            v
        })
        .collect()
}

fn netreg_params(kind: PenaltyKind, spec: &PenaltySpec) -> SelectionParams {
    SelectionParams {
        lambda: spec.path_parameter(),
        eta: match kind {
            PenaltyKind::Grace => spec.eta2,
            PenaltyKind::Gggl => spec.eta1,
            _ => spec.eta,
        },
        mu: 0.0,
    }
}

fn to_sets(fits: Vec<CoefficientVector>, m: usize, params: SelectionParams) -> Result<Fitted> {
    let sets = fits
        .iter()
        .map(|f| SelectionSet::new(f.support(), m, f.objective_value, params))
        .collect::<Result<_>>()?;
    Ok((sets, Some(fits)))
}

/// Fits every point of one sweep, in sweep order.
fn select_sweep(
    method: Method,
    pts: &[&BTreeMap<String, f64>],
    prepared: &[&Prepared],
    data: &CvData,
    cfg: &CvConfig,
) -> Result<Vec<Fitted>> {
    let Method::Netreg(kind) = method else {
        return pts.iter().map(|p| select(method, p, prepared, data, cfg)).collect();
    };
    let m = data.n_features();
    let spec = netreg_spec(kind, pts[0], data)?;
    let path = path_name(method).expect("regression");
    let values: Vec<f64> = pts.iter().map(|p| param(p, path)).collect();
    if kind == PenaltyKind::Mtlasso {
        let tasks: Vec<Task<'_>> = prepared
            .iter()
            .map(|p| {
                let (x, y) = p.centered.as_ref().expect("prepared for regression");
                (x.view(), y.view())
            })
            .collect();
        return fit_mtlasso_path(&tasks, &values, true, &cfg.solver)?
            .into_iter()
            .map(|(v, fits)| to_sets(fits, m, netreg_params(kind, &spec.with_path_parameter(v))))
            .collect();
    }
    let (x, y) = prepared[0].centered.as_ref().expect("prepared for regression");
    fit_path(x.view(), y.view(), &spec, &values, true, &cfg.solver)?
        .into_iter()
        .map(|pp| to_sets(vec![pp.coefficients], m, netreg_params(kind, &spec.with_path_parameter(pp.value))))
        .collect()
}

fn select(method: Method, point: &BTreeMap<String, f64>, prepared: &[&Prepared], data: &CvData, cfg: &CvConfig) -> Result<Fitted> {
    let m = data.n_features();
    let sparams = || SconesParams::new(param(point, "eta"), param(point, "lambda"), param(point, "mu"));
    let relevance = |p: &Prepared| p.relevance.clone().expect("prepared for scones");
    match method {
        Method::Scones => {
            let sel = scones_select(&relevance(prepared[0]), &sparams()?, &data.tasks[0].network)?;
            Ok((vec![sel], None))
        }
        Method::MultiScones => {
            let cs: Vec<RelevanceVector> = prepared.iter().map(|p| relevance(p)).collect();
            let nets: Vec<WeightedNetwork> = data.tasks.iter().map(|t| t.network.clone()).collect();
            Ok((multi_scones_select(&cs, &sparams()?, &nets)?, None))
        }
        Method::Netreg(kind) => {
            let spec = netreg_spec(kind, point, data)?;
            let params = netreg_params(kind, &spec);
            let fits = if kind == PenaltyKind::Mtlasso {
                let tasks: Vec<Task<'_>> = prepared
                    .iter()
                    .map(|p| {
                        let (x, y) = p.centered.as_ref().expect("prepared for regression");
                        (x.view(), y.view())
                    })
                    .collect();
                fit_mtlasso(&tasks, spec.lambda, &cfg.solver)?
            } else {
                let (x, y) = prepared[0].centered.as_ref().expect("prepared for regression");
                vec![netreg::fit(x.view(), y.view(), &spec, &cfg.solver)?]
            };
            to_sets(fits, m, params)
        }
    }
}

fn check_data(method: Method, data: &CvData) -> Result<()> {
    let t = data.tasks.len();
    if t == 0 {
        return Err(Error::InvalidInput("no tasks".into()));
    }
    if !method.multi_task() && t != 1 {
        return Err(Error::InvalidInput(format!("{method} takes exactly one task, got {t}")));
    }
    let m = data.n_features();
    for task in &data.tasks {
        if task.x.n_features() != m {
            return Err(Error::DimensionMismatch("tasks differ in feature count".into()));
        }
        if task.x.n_samples() != task.y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples in features, {} in phenotype",
                task.x.n_samples(),
                task.y.len()
            )));
        }
        if task.network.n_nodes() != m {
            return Err(Error::DimensionMismatch(format!(
                "network has {} nodes for {m} features",
                task.network.n_nodes()
            )));
        }
    }
    Ok(())
}

/// The grid actually searched: the axes of `grid` plus defaults for the
/// missing ones. SConES axes default to [`default_axis`] of the median
/// positive relevance on all samples (`mu` to that median alone); the
/// regression path parameter defaults to [`default_axis`] of its zero
/// threshold and the other regression parameters to [`DEFAULT_SECONDARY`].
pub fn complete_grid(method: Method, data: &CvData, grid: &GridSpec, cfg: &CvConfig) -> Result<GridSpec> {
    check_data(method, data)?;
    let wanted = method.axes();
    if let Some(extra) = grid.names().find(|n| !wanted.contains(n)) {
        return Err(Error::InvalidParameter(format!(
            "{method} has no parameter '{extra}' (expects {})",
            wanted.join(", ")
        )));
    }
    let mut out = grid.clone();
    if wanted.iter().all(|n| grid.axis(n).is_some()) {
        return Ok(out);
    }
    match method {
        Method::Scones | Method::MultiScones => {
            let mut all = Vec::new();
            for t in &data.tasks {
                all.extend_from_slice(skat_linear_score(&t.x, &t.y, cfg.normalize)?.scores());
            }
            let q = median_positive(&all)
                .ok_or_else(|| Error::InvalidInput("no feature has positive relevance".into()))?;
            for name in ["eta", "lambda"] {
                if out.axis(name).is_none() {
                    out.set(name, default_axis(q)?);
                }
            }
            if method == Method::MultiScones && out.axis("mu").is_none() {
                out.set("mu", Axis::new(vec![q])?);
            }
        }
        Method::Netreg(kind) => {
            let path_name = if kind == PenaltyKind::Grace { "lambda1" } else { "lambda" };
            for &name in wanted.iter().filter(|&&n| n != path_name) {
                if out.axis(name).is_none() {
                    out.set(name, Axis::new(vec![DEFAULT_SECONDARY])?);
                }
            }
            if out.axis(path_name).is_none() {
                let centered: Vec<(Array2<f64>, Array1<f64>)> = data
                    .tasks
                    .iter()
                    .map(|t| centered(t.x.values(), t.y.values(), &(0..t.x.n_samples()).collect::<Vec<_>>()))
                    .collect();
                let q = if kind == PenaltyKind::Mtlasso {
                    let tasks: Vec<Task<'_>> = centered.iter().map(|(x, y)| (x.view(), y.view())).collect();
                    mtlasso_lambda_max(&tasks)?
                } else {
                    // secondary parameters at their first grid value
                    let first: BTreeMap<String, f64> =
                        out.names().map(|n| (n.to_string(), out.axis(n).expect("listed").values()[0])).collect();
                    let spec = netreg_spec(kind, &first, data)?;
                    netreg::lambda_max(centered[0].0.view(), centered[0].1.view(), &spec)?
                };
                if !(q > 0.0 && q.is_finite()) {
                    return Err(Error::InvalidInput("phenotype is orthogonal to every feature".into()));
                }
                out.set(path_name, default_axis(q)?);
            }
        }
    }
    Ok(out)
}

/// Grid search with `cfg.folds` seeded folds per task. Missing axes are
/// filled by [`complete_grid`].
pub fn cv_grid_search(method: Method, data: &CvData, grid: &GridSpec, cfg: &CvConfig) -> Result<CvResult> {
    check_data(method, data)?;
    if cfg.folds < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {}", cfg.folds)));
    }
    let fold_of: Vec<Vec<usize>> = data
        .tasks
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let n = task.x.n_samples();
            if n < 2 * cfg.folds {
                return Err(Error::InvalidInput(format!(
                    "{n} samples is fewer than 2 per fold for {} folds",
                    cfg.folds
                )));
            }
            Ok(assign_folds(n, cfg.folds, cfg.seed.wrapping_add(t as u64)))
        })
        .collect::<Result<_>>()?;
    cv_grid_search_with_folds(method, data, grid, &fold_of, cfg)
}

/// Grid search with explicit fold ids (`fold_of[task][sample]`); the number
/// of folds is the largest id plus one and `cfg.folds` is ignored.
pub fn cv_grid_search_with_folds(
    method: Method,
    data: &CvData,
    grid: &GridSpec,
    fold_of: &[Vec<usize>],
    cfg: &CvConfig,
) -> Result<CvResult> {
    check_data(method, data)?;
    if !(cfg.ridge > 0.0 && cfg.ridge.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge must be > 0, got {}", cfg.ridge)));
    }
    cfg.solver.validate()?;
    if fold_of.len() != data.tasks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} fold assignments for {} tasks",
            fold_of.len(),
            data.tasks.len()
        )));
    }
    let k = fold_of.iter().flatten().max().map_or(0, |&f| f + 1);
    if k < 2 {
        return Err(Error::InvalidParameter("need at least 2 folds".into()));
    }
    for (ids, task) in fold_of.iter().zip(&data.tasks) {
        if ids.len() != task.x.n_samples() {
            return Err(Error::DimensionMismatch("fold assignment length differs from sample count".into()));
        }
        if (0..k).any(|f| !ids.contains(&f)) {
            return Err(Error::InvalidInput("every task needs samples in every fold".into()));
        }
    }
    let grid = complete_grid(method, data, grid, cfg)?;
    let points = grid.points();
    let m = data.n_features();

    // prepared[fold][task]
    let prepared: Vec<Vec<Prepared>> = (0..k)
        .map(|f| {
            data.tasks
                .iter()
                .zip(fold_of)
                .map(|(task, ids)| {
                    let train = (0..ids.len()).filter(|&i| ids[i] != f).collect();
                    let test = (0..ids.len()).filter(|&i| ids[i] == f).collect();
                    prepare(method, task, train, test, cfg.normalize)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let sweeps = sweeps(method, &points);
    let run = |job: usize| -> Result<Vec<(usize, Vec<SelectionSet>, Vec<f64>)>> {
        let (sw, f) = (&sweeps[job / k], job % k);
        let fold: Vec<&Prepared> = prepared[f].iter().collect();
        let pts: Vec<&BTreeMap<String, f64>> = sw.iter().map(|&i| &points[i]).collect();
        let fitted = select_sweep(method, &pts, &fold, data, cfg)?;
        Ok(sw
            .iter()
            .zip(fitted)
            .map(|(&i, (sets, _))| {
                let r2 = sets
                    .iter()
                    .zip(&data.tasks)
                    .zip(&fold)
                    .map(|((s, task), p)| {
                        ridge_predictivity(task.x.values(), task.y.values(), &p.train, &p.test, s.selected(), cfg.ridge)
                    })
                    .collect();
                (i * k + f, sets, r2)
            })
            .collect())
    };
    let jobs = sweeps.len() * k;
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Vec<_>> = (0..jobs).into_par_iter().map(run).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Vec<_>> = (0..jobs).map(run).collect::<Result<_>>()?;
    // back to point-major, fold-minor order
    let mut slots: Vec<Option<(Vec<SelectionSet>, Vec<f64>)>> = vec![None; points.len() * k];
    for (slot, sets, r2) in outcomes.into_iter().flatten() {
        slots[slot] = Some((sets, r2));
    }

    let mut results = Vec::with_capacity(points.len());
    let mut chunks = slots.into_iter().map(|s| s.expect("every job filled"));
    for point in &points {
        let folds: Vec<(Vec<SelectionSet>, Vec<f64>)> = chunks.by_ref().take(k).collect();
        results.push(summarize(point.clone(), folds, m, cfg.criterion)?);
    }

    let chosen = choose(&results).ok_or(Error::NoAdmissibleModel)?;
    results[chosen].chosen = true;

    let all: Vec<Prepared> = data
        .tasks
        .iter()
        .map(|task| {
            let n = task.x.n_samples();
            prepare(method, task, (0..n).collect(), Vec::new(), cfg.normalize)
        })
        .collect::<Result<_>>()?;
    let all_refs: Vec<&Prepared> = all.iter().collect();
    let (final_selection, final_coefficients) = select(method, &points[chosen], &all_refs, data, cfg)?;
    Ok(CvResult {
        method,
        criterion: cfg.criterion,
        folds: k,
        seed: cfg.seed,
        exclusion_rule: EXCLUSION_RULE,
        points: results,
        chosen,
        final_selection,
        final_beta: final_coefficients
            .as_ref()
            .map(|fits| fits.iter().map(|f| f.beta.to_vec()).collect()),
        final_coefficients,
    })
}

/// Admissible point with the highest score. Equal scores (typically 0 under
/// `product` when no point predicts better than the mean) are broken by raw
/// predictivity, then stability, then grid order.
fn choose(results: &[GridPointResult]) -> Option<usize> {
    let key = |r: &GridPointResult| r.score.map(|s| (s, r.predictivity, r.stability));
    let mut best: Option<(usize, (f64, f64, f64))> = None;
    for (i, r) in results.iter().enumerate() {
        if let Some(k) = key(r) {
            if best.is_none_or(|(_, b)| k.partial_cmp(&b) == Some(std::cmp::Ordering::Greater)) {
                best = Some((i, k));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn summarize(
    params: BTreeMap<String, f64>,
    folds: Vec<(Vec<SelectionSet>, Vec<f64>)>,
    m: usize,
    criterion: Criterion,
) -> Result<GridPointResult> {
    let tasks = folds[0].0.len();
    let (mut jac, mut phi, mut kun, mut kun_all, mut all_empty) = (0.0, 0.0, 0.0, true, true);
    for t in 0..tasks {
        let sets: Vec<Vec<usize>> = folds.iter().map(|(s, _)| s[t].selected().to_vec()).collect();
        let st = stability_across_folds(&sets, m)?;
        jac += st.jaccard;
        phi += st.consistency;
        match st.kuncheva {
            Some(v) => kun += v,
            None => kun_all = false,
        }
        all_empty &= st.all_empty;
    }
    let count = (folds.len() * tasks) as f64;
    let predictivity = folds.iter().flat_map(|(_, r)| r).sum::<f64>() / count;
    let mean_selected = folds.iter().flat_map(|(s, _)| s).map(|s| s.len() as f64).sum::<f64>() / count;
    let stability = phi / tasks as f64;
    let admissible = mean_selected > 0.0 && mean_selected < m as f64;
    let score = admissible.then(|| match criterion {
        Criterion::Stability => stability,
        Criterion::Predictivity => predictivity,
        Criterion::Product => stability * predictivity.max(0.0),
    });
    Ok(GridPointResult {
        params,
        fold_selections: folds.into_iter().map(|(s, _)| s).collect(),
        stability,
        jaccard: jac / tasks as f64,
        kuncheva: kun_all.then(|| kun / tasks as f64),
        all_empty,
        predictivity,
        mean_selected,
        admissible,
        score,
        chosen: false,
    })
}
