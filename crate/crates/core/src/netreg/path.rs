//! Dispatch by penalty kind, zero-solution thresholds and regularization
//! paths.

use ndarray::{ArrayView1, ArrayView2};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::fista::soft_threshold;
use super::mtlasso::Task;
use super::{cd, check_xy, gfl, gggl, mtlasso, ogl, PenaltyKind, PenaltySpec, SolverConfig};
use crate::datamodel::CoefficientVector;
use crate::error::{Error, Result};

/// Default number of points on a regularization path.
pub const PATH_LENGTH: usize = 30;
/// Default ratio between the smallest and largest path value.
pub const PATH_RATIO: f64 = 1e-3;

/// Value of the path parameter ([`PenaltySpec::path_parameter`]) above which
/// the solution is zero. Exact for lasso, grace, ogl and gggl; for gfl it is
/// the sufficient bound `2‖Xᵀy‖∞/η`, and with `η = 0` (where β never vanishes
/// unless `Xᵀy = 0`) the full-fusion bound `2‖Xᵀy‖₁`.
pub fn lambda_max(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, spec: &PenaltySpec) -> Result<f64> {
    check_xy(x, y)?;
    let m = x.ncols();
    spec.validate(m)?;
    let g = x.t().dot(&y) * 2.0;
    let inf = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let group_norm = |grp: &[usize], f: &dyn Fn(f64) -> f64| grp.iter().map(|&p| f(g[p]).powi(2)).sum::<f64>().sqrt();
    Ok(match spec.kind {
        PenaltyKind::Lasso | PenaltyKind::Grace => inf,
        PenaltyKind::Gfl if spec.eta > 0.0 => inf / spec.eta,
        PenaltyKind::Gfl => g.iter().map(|v| v.abs()).sum(),
        PenaltyKind::Ogl => {
            let groups = spec.groups.as_ref().expect("validated");
            let mut covered = vec![false; m];
            let mut best = 0.0f64;
            for grp in groups {
                grp.iter().for_each(|&p| covered[p] = true);
                best = best.max(group_norm(grp, &|v| v));
            }
            for p in (0..m).filter(|&p| !covered[p]) {
                best = best.max(g[p].abs());
            }
            best
        }
        PenaltyKind::Gggl => {
            let groups = spec.groups.as_ref().expect("validated");
            groups
                .iter()
                .map(|grp| group_norm(grp, &|v| soft_threshold(v, spec.eta1)) / (grp.len() as f64).sqrt())
                .fold(0.0, f64::max)
        }
        PenaltyKind::Mtlasso => {
            return Err(Error::InvalidParameter("use mtlasso_lambda_max for the multi-task lasso".into()))
        }
    })
}

/// `count` log-spaced values from `max` down to `max·ratio`.
pub fn lambda_grid(max: f64, count: usize, ratio: f64) -> Result<Vec<f64>> {
    if count == 0 || !(max >= 0.0 && max.is_finite()) || !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bad path: max {max}, {count} points, ratio {ratio}"
        )));
    }
    if count == 1 {
        return Ok(vec![max]);
    }
    let step = ratio.ln() / (count - 1) as f64;
    Ok((0..count).map(|i| max * (step * i as f64).exp()).collect())
}

fn fit_from(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    spec: &PenaltySpec,
    init: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<CoefficientVector> {
    spec.validate(x.ncols())?;
    match spec.kind {
        PenaltyKind::Lasso => match init {
            Some(b) => cd::warm_lasso(x, y, spec.lambda, b, cfg),
            None => cd::fit_lasso(x, y, spec.lambda, cfg),
        },
        PenaltyKind::Grace => {
            let g = spec.network.as_ref().expect("validated");
            match init {
                Some(b) => cd::warm_grace(x, y, spec.eta1, spec.eta2, g, b, cfg),
                None => cd::fit_grace(x, y, spec.eta1, spec.eta2, g, cfg),
            }
        }
        PenaltyKind::Gfl => gfl::solve(x, y, spec.lambda, spec.eta, spec.network.as_ref().expect("validated"), init, cfg),
        PenaltyKind::Ogl => {
            ogl::solve(x, y, spec.lambda, spec.groups.as_ref().expect("validated"), init, cfg).map(|f| f.coefficients)
        }
        PenaltyKind::Gggl => gggl::solve(
            x,
            y,
            spec.eta1,
            spec.eta2,
            spec.groups.as_ref().expect("validated"),
            spec.gene_network.as_ref().expect("validated"),
            spec.lambda,
            init,
            cfg,
        ),
        PenaltyKind::Mtlasso => Err(Error::InvalidParameter("use fit_mtlasso for the multi-task lasso".into())),
    }
}

/// Fits any single-task penalty.
pub fn fit(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, spec: &PenaltySpec, cfg: &SolverConfig) -> Result<CoefficientVector> {
    fit_from(x, y, spec, None, cfg)
}

/// One solution on a regularization path.
#[derive(Debug, Clone)]
pub struct PathPoint {
    pub value: f64,
    pub coefficients: CoefficientVector,
}

/// Solutions along `values` of the path parameter. With `warm_start` the
/// points are solved in order, each starting from the previous solution;
/// otherwise they are independent (and run in parallel when available).
pub fn fit_path(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    spec: &PenaltySpec,
    values: &[f64],
    warm_start: bool,
    cfg: &SolverConfig,
) -> Result<Vec<PathPoint>> {
    let solve_at = |v: f64, init: Option<&[f64]>| -> Result<PathPoint> {
        let coefficients = fit_from(x, y, &spec.with_path_parameter(v), init, cfg)?;
        Ok(PathPoint { value: v, coefficients })
    };
    if warm_start {
        let mut out: Vec<PathPoint> = Vec::with_capacity(values.len());
        for &v in values {
            let init = out.last().map(|p| p.coefficients.beta.as_slice().expect("contiguous"));
            let point = solve_at(v, init)?;
            out.push(point);
        }
        return Ok(out);
    }
    #[cfg(feature = "parallel")]
    let points = values.par_iter().map(|&v| solve_at(v, None)).collect();
    #[cfg(not(feature = "parallel"))]
    let points = values.iter().map(|&v| solve_at(v, None)).collect();
    points
}

/// Multi-task analogue of [`fit_path`]; each entry holds one vector per task.
pub fn fit_mtlasso_path(
    tasks: &[Task<'_>],
    values: &[f64],
    warm_start: bool,
    cfg: &SolverConfig,
) -> Result<Vec<(f64, Vec<CoefficientVector>)>> {
    let mut out: Vec<(f64, Vec<CoefficientVector>)> = Vec::with_capacity(values.len());
    for &v in values {
        let init: Option<Vec<Vec<f64>>> = if warm_start {
            out.last().map(|(_, fits)| fits.iter().map(|f| f.beta.to_vec()).collect())
        } else {
            None
        };
        let fits = mtlasso::solve(tasks, v, init.as_deref(), cfg)?;
        out.push((v, fits));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::WeightedNetwork;
    use ndarray::array;

    #[test]
    fn grid_is_log_spaced() {
        let g = lambda_grid(10.0, 4, 1e-3).unwrap();
        assert_eq!(g.len(), 4);
        assert!((g[0] - 10.0).abs() < 1e-12 && (g[3] - 0.01).abs() < 1e-12);
        assert!((g[1] / g[0] - g[2] / g[1]).abs() < 1e-12);
        assert!(lambda_grid(1.0, 0, 0.1).is_err());
    }

    #[test]
    fn thresholds_give_zero_solutions() {
        let x = array![[1.0, 0.5, -0.2], [0.3, 1.0, 0.4], [-0.5, 0.2, 1.0], [0.8, -0.1, 0.3]];
        let y = array![1.0, -0.5, 2.0, 0.3];
        let net = WeightedNetwork::with_node_count(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let gene = WeightedNetwork::with_node_count(2, [(0, 1, 1.0)]).unwrap();
        let specs = [
            PenaltySpec::lasso(0.0),
            PenaltySpec::grace(0.0, 0.5, net.clone()),
            PenaltySpec::gfl(0.0, 0.7, net),
            PenaltySpec::ogl(0.0, vec![vec![0, 1], vec![1]]),
            PenaltySpec::gggl(0.0, 0.3, 0.5, vec![vec![0, 2], vec![1]], gene),
        ];
        for s in &specs {
            let lmax = lambda_max(x.view(), y.view(), s).unwrap();
            let above = fit(x.view(), y.view(), &s.with_path_parameter(lmax * 1.001), &SolverConfig::default()).unwrap();
            assert!(above.beta.iter().all(|&b| b.abs() < 1e-9), "{} {:?}", s.kind, above.beta);
            if s.kind != PenaltyKind::Gfl {
                let below = fit(x.view(), y.view(), &s.with_path_parameter(lmax * 0.9), &SolverConfig::default()).unwrap();
                assert!(below.beta.iter().any(|&b| b.abs() > 1e-9), "{}", s.kind);
            }
        }
    }

    #[test]
    fn warm_and_cold_paths_agree() {
        let x = array![[1.0, 0.5, -0.2], [0.3, 1.0, 0.4], [-0.5, 0.2, 1.0], [0.8, -0.1, 0.3]];
        let y = array![1.0, -0.5, 2.0, 0.3];
        let spec = PenaltySpec::lasso(0.0);
        let grid = lambda_grid(lambda_max(x.view(), y.view(), &spec).unwrap(), 8, 1e-2).unwrap();
        let cfg = SolverConfig { tol: 1e-12, ..Default::default() };
        let warm = fit_path(x.view(), y.view(), &spec, &grid, true, &cfg).unwrap();
        let cold = fit_path(x.view(), y.view(), &spec, &grid, false, &cfg).unwrap();
        for (w, c) in warm.iter().zip(&cold) {
            for (a, b) in w.coefficients.beta.iter().zip(c.coefficients.beta.iter()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
