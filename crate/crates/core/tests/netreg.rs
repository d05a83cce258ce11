mod common;

use common::*;
use ndarray::{array, Array2, Axis};
use netguide::netgraph::laplacian_quadratic;
use netguide::netreg::{
    fit, fit_gfl, fit_gggl, fit_grace, fit_lasso, fit_mtlasso, fit_ogl, lambda_max, mtlasso_smooth, objective, smooth_part,
    PenaltySpec, SolverConfig,
};
use netguide::WeightedNetwork;

fn tight() -> SolverConfig {
    SolverConfig {
        tol: 1e-14,
        max_iters: 200_000,
        ..Default::default()
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn lasso_zero_above_threshold() {
    let mut r = rng(1);
    let x = normal_matrix(&mut r, 20, 30);
    let y = normal_vec(&mut r, 20);
    let lmax = 2.0 * x.t().dot(&y).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!((lambda_max(x.view(), y.view(), &PenaltySpec::lasso(0.0)).unwrap() - lmax).abs() < 1e-12);
    for lam in [lmax, lmax * 1.5] {
        let fit = fit_lasso(x.view(), y.view(), lam, &SolverConfig::default()).unwrap();
        assert!(fit.beta.iter().all(|&b| b == 0.0));
    }
}

#[test]
fn lasso_without_penalty_is_least_squares() {
    let mut r = rng(2);
    let x = normal_matrix(&mut r, 40, 6);
    let y = normal_vec(&mut r, 40);
    let fit = fit_lasso(x.view(), y.view(), 0.0, &tight()).unwrap();
    let resid = &y - &x.dot(&fit.beta);
    assert!(x.t().dot(&resid).iter().all(|v| v.abs() < 1e-8));
}

#[test]
fn lasso_kkt_on_random_instances() {
    for seed in 0..5 {
        let mut r = rng(10 + seed);
        let x = normal_matrix(&mut r, 30, 50);
        let y = normal_vec(&mut r, 30);
        let lam = 0.2 * lambda_max(x.view(), y.view(), &PenaltySpec::lasso(0.0)).unwrap();
        let fit = fit_lasso(x.view(), y.view(), lam, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        let kkt = grace_kkt(x.view(), y.view(), fit.beta.as_slice().unwrap(), lam, 0.0, None);
        assert!(kkt < 1e-4, "seed {seed}: {kkt}");
    }
}

#[test]
fn grace_reduces_to_lasso() {
    let mut r = rng(3);
    let x = normal_matrix(&mut r, 25, 15);
    let y = normal_vec(&mut r, 25);
    let g = random_graph(&mut r, 15, 0.3);
    let lasso = fit_lasso(x.view(), y.view(), 3.0, &tight()).unwrap();
    let grace = fit_grace(x.view(), y.view(), 3.0, 0.0, &g, &tight()).unwrap();
    assert!(max_diff(lasso.beta.as_slice().unwrap(), grace.beta.as_slice().unwrap()) < 1e-6);
}

#[test]
fn grace_equalizes_identical_connected_columns() {
    let mut r = rng(4);
    let mut x = normal_matrix(&mut r, 20, 5);
    let c = x.column(1).to_owned();
    x.column_mut(2).assign(&c);
    let y = &x.column(1) * 2.0 + normal_vec(&mut r, 20) * 0.1;
    let g = WeightedNetwork::with_node_count(5, [(1, 2, 1.0), (0, 3, 1.0)]).unwrap();
    let fit = fit_grace(x.view(), y.view(), 0.5, 1.0, &g, &tight()).unwrap();
    assert!((fit.beta[1] - fit.beta[2]).abs() <= 1e-6, "{:?}", fit.beta);
    assert!(fit.beta[1] > 0.5);
}

#[test]
fn grace_smoothness_decreases_along_lambda2() {
    let mut r = rng(5);
    let x = normal_matrix(&mut r, 30, 12);
    let y = normal_vec(&mut r, 30);
    let g = random_graph(&mut r, 12, 0.3);
    let mut last = f64::INFINITY;
    for l2 in [0.0, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0] {
        let fit = fit_grace(x.view(), y.view(), 1.0, l2, &g, &tight()).unwrap();
        let smooth = laplacian_quadratic(fit.beta.as_slice().unwrap(), &g).unwrap();
        assert!(smooth <= last + 1e-9, "{l2}: {smooth} > {last}");
        last = smooth;
    }
}

#[test]
fn gfl_without_penalty_is_least_squares() {
    let mut r = rng(6);
    let x = normal_matrix(&mut r, 30, 8);
    let y = normal_vec(&mut r, 30);
    let fit = fit_gfl(x.view(), y.view(), 0.0, 0.0, &path_graph(8), &tight()).unwrap();
    let resid = &y - &x.dot(&fit.beta);
    assert!(x.t().dot(&resid).iter().all(|v| v.abs() < 1e-6));
}

#[test]
fn gfl_complete_graph_fuses_to_one_value() {
    let mut r = rng(7);
    let x = normal_matrix(&mut r, 30, 6);
    let y = normal_vec(&mut r, 30);
    let edges: Vec<_> = (0..6).flat_map(|u| (u + 1..6).map(move |v| (u, v, 1.0))).collect();
    let g = WeightedNetwork::with_node_count(6, edges).unwrap();
    let fit = fit_gfl(x.view(), y.view(), 1e3, 0.0, &g, &SolverConfig::default()).unwrap();
    let hi = fit.beta.iter().cloned().fold(f64::MIN, f64::max);
    let lo = fit.beta.iter().cloned().fold(f64::MAX, f64::min);
    assert!(hi - lo <= 1e-4);
    // one-dimensional grid search on the summed column
    let s = x.sum_axis(Axis(1));
    let best = (-200_000..=200_000)
        .map(|i| i as f64 * 1e-5)
        .min_by(|a, b| {
            let fa = (&s * *a - &y).mapv(|v| v * v).sum();
            let fb = (&s * *b - &y).mapv(|v| v * v).sum();
            fa.total_cmp(&fb)
        })
        .unwrap();
    assert!((fit.beta[0] - best).abs() < 2e-5, "{} vs {best}", fit.beta[0]);
}

#[test]
fn gfl_matches_dual_reference() {
    for seed in 0..3 {
        let mut r = rng(20 + seed);
        let x = normal_matrix(&mut r, 30, 12);
        let y = normal_vec(&mut r, 30);
        let g = path_graph(12);
        let (lam, eta) = (2.0, 0.5);
        let fit = fit_gfl(x.view(), y.view(), lam, eta, &g, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        let reference = gfl_reference(x.view(), y.view(), lam, eta, &g, 100_000);
        assert!(reference.dual <= reference.primal + 1e-9);
        assert!(fit.objective_value <= reference.primal + 1e-5, "{} vs {}", fit.objective_value, reference.primal);
        assert!(fit.objective_value >= reference.dual - 1e-9);
        let res = gfl_residual(x.view(), y.view(), fit.beta.as_slice().unwrap(), lam, eta, &g, 1e-5);
        assert!(res <= 1e-4, "residual {res}");
    }
}

#[test]
fn ogl_singletons_match_lasso() {
    let mut r = rng(8);
    let x = normal_matrix(&mut r, 25, 10);
    let y = normal_vec(&mut r, 25);
    let singles: Vec<Vec<usize>> = (0..10).map(|p| vec![p]).collect();
    let lasso = fit_lasso(x.view(), y.view(), 4.0, &tight()).unwrap();
    let ogl = fit_ogl(x.view(), y.view(), 4.0, &singles, &tight()).unwrap();
    assert!(max_diff(lasso.beta.as_slice().unwrap(), ogl.coefficients.beta.as_slice().unwrap()) < 1e-6);
    assert_eq!(lasso.support(), ogl.coefficients.support());
}

#[test]
fn ogl_disjoint_groups_zero_above_block_threshold() {
    let mut r = rng(9);
    let x = normal_matrix(&mut r, 20, 9);
    let y = normal_vec(&mut r, 20);
    let groups = vec![vec![0, 1, 2], vec![3, 4], vec![5, 6, 7, 8]];
    let g2 = x.t().dot(&y) * 2.0;
    let thr = groups
        .iter()
        .map(|g| g.iter().map(|&p| g2[p] * g2[p]).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let fit = fit_ogl(x.view(), y.view(), thr * 1.0001, &groups, &SolverConfig::default()).unwrap();
    assert!(fit.coefficients.beta.iter().all(|&b| b == 0.0));
    let fit = fit_ogl(x.view(), y.view(), thr * 0.99, &groups, &SolverConfig::default()).unwrap();
    assert!(fit.coefficients.beta.iter().any(|&b| b != 0.0));
}

#[test]
fn ogl_overlapping_matches_reference() {
    let mut r = rng(10);
    let x = normal_matrix(&mut r, 30, 12);
    let y = normal_vec(&mut r, 30);
    let groups = vec![vec![0, 1, 2, 3], vec![2, 3, 4, 5], vec![5, 6, 7], vec![8, 9]];
    let lam = 6.0;
    let fit = fit_ogl(x.view(), y.view(), lam, &groups, &SolverConfig::default()).unwrap();
    let reference = ogl_reference(x.view(), y.view(), lam, &groups, 50_000);
    assert!(fit.coefficients.objective_value <= reference + 1e-5);
    let res = ogl_residual(x.view(), y.view(), fit.coefficients.beta.as_slice().unwrap(), lam, &fit.groups, &fit.latent);
    assert!(res <= 1e-4, "{res}");
    // implicit singletons for features 10, 11
    assert_eq!(fit.implicit_singletons, vec![10, 11]);
}

#[test]
fn gggl_chain_reduces_to_lasso() {
    let mut r = rng(11);
    let x = normal_matrix(&mut r, 25, 10);
    let y = normal_vec(&mut r, 25);
    let singles: Vec<Vec<usize>> = (0..10).map(|p| vec![p]).collect();
    let gene = random_graph(&mut r, 10, 0.3);
    let lasso = fit_lasso(x.view(), y.view(), 4.0, &tight()).unwrap();
    let gggl = fit_gggl(x.view(), y.view(), 0.0, 0.0, &singles, &gene, 4.0, &tight()).unwrap();
    assert!(max_diff(lasso.beta.as_slice().unwrap(), gggl.beta.as_slice().unwrap()) < 1e-6);
}

#[test]
fn gggl_matches_reference() {
    let mut r = rng(12);
    let x = normal_matrix(&mut r, 30, 12);
    let y = normal_vec(&mut r, 30);
    let groups = random_partition(&mut r, 12, 4);
    let gene = WeightedNetwork::with_node_count(4, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0)]).unwrap();
    let model = Gggl {
        lambda: 3.0,
        eta1: 1.0,
        eta2: 0.2,
        groups: &groups,
        gene: &gene,
    };
    let fit = fit_gggl(x.view(), y.view(), 1.0, 0.2, &groups, &gene, 3.0, &SolverConfig::default()).unwrap();
    let beta = fit.beta.as_slice().unwrap();
    assert!((model.objective(x.view(), y.view(), beta) - fit.objective_value).abs() < 1e-9);
    assert!(fit.objective_value <= model.reference(x.view(), y.view(), 50_000) + 1e-5);
    assert!(model.residual(x.view(), y.view(), beta) <= 1e-4);
}

#[test]
fn mtlasso_single_task_is_scaled_lasso() {
    let mut r = rng(13);
    let x = normal_matrix(&mut r, 20, 8);
    let y = normal_vec(&mut r, 20);
    let lam = 0.3;
    let mt = fit_mtlasso(&[(x.view(), y.view())], lam, &tight()).unwrap();
    let lasso = fit_lasso(x.view(), y.view(), 20.0 * lam, &tight()).unwrap();
    assert!(max_diff(mt[0].beta.as_slice().unwrap(), lasso.beta.as_slice().unwrap()) < 1e-6);
}

#[test]
fn mtlasso_identical_tasks_collapse() {
    let mut r = rng(14);
    let x = normal_matrix(&mut r, 20, 8);
    let y = normal_vec(&mut r, 20);
    let lam = 0.3;
    let mt = fit_mtlasso(&[(x.view(), y.view()), (x.view(), y.view())], lam, &tight()).unwrap();
    assert!(max_diff(mt[0].beta.as_slice().unwrap(), mt[1].beta.as_slice().unwrap()) < 1e-5);
    let lasso = fit_lasso(x.view(), y.view(), 20.0 * lam / 2f64.sqrt(), &tight()).unwrap();
    assert!(max_diff(mt[0].beta.as_slice().unwrap(), lasso.beta.as_slice().unwrap()) < 1e-5);
    assert_eq!(mt[0].support(), lasso.support());
}

#[test]
fn mtlasso_matches_reference() {
    let mut r = rng(15);
    let tasks: Vec<(Array2<f64>, ndarray::Array1<f64>)> = [25, 18, 30]
        .iter()
        .map(|&n| (normal_matrix(&mut r, n, 10), normal_vec(&mut r, n)))
        .collect();
    let views: Vec<_> = tasks.iter().map(|(x, y)| (x.view(), y.view())).collect();
    let lam = 0.4;
    let fits = fit_mtlasso(&views, lam, &SolverConfig::default()).unwrap();
    let betas: Vec<Vec<f64>> = fits.iter().map(|f| f.beta.to_vec()).collect();
    assert!((mt_objective(&tasks, &betas, lam) - fits[0].objective_value).abs() < 1e-9);
    assert!(fits[0].objective_value <= mt_reference(&tasks, lam, 50_000) + 1e-5);
    assert!(mt_residual(&tasks, &betas, lam) <= 1e-4);
}

#[test]
fn smooth_gradients_match_finite_differences() {
    let mut r = rng(16);
    let x = normal_matrix(&mut r, 30, 12);
    let y = normal_vec(&mut r, 30);
    let g = random_graph(&mut r, 12, 0.3);
    let groups = random_partition(&mut r, 12, 5);
    let gene = random_graph(&mut r, 5, 0.5);
    let beta = normal_vec(&mut r, 12).to_vec();
    for spec in [
        PenaltySpec::grace(1.0, 0.7, g.clone()),
        PenaltySpec::gfl(1.0, 0.3, g.clone()),
        PenaltySpec::gggl(1.0, 0.5, 0.8, groups.clone(), gene.clone()),
    ] {
        let (_, grad) = smooth_part(x.view(), y.view(), &beta, &spec).unwrap();
        let f = |b: &[f64]| smooth_part(x.view(), y.view(), b, &spec).unwrap().0;
        let err = finite_difference_error(f, &beta, grad.as_slice().unwrap(), 1e-4);
        assert!(err < 1e-5, "{}: {err}", spec.kind);
    }
    let y2 = &y * 0.5;
    let views = [(x.view(), y.view()), (x.view(), y2.view())];
    let b2 = normal_vec(&mut r, 12).to_vec();
    let (_, grads) = mtlasso_smooth(&views, &[&beta, &b2]).unwrap();
    let joint = [grads[0].to_vec(), grads[1].to_vec()].concat();
    let f = |v: &[f64]| mtlasso_smooth(&views, &[&v[..12], &v[12..]]).unwrap().0;
    let err = finite_difference_error(f, &[beta.clone(), b2].concat(), &joint, 1e-4);
    assert!(err < 1e-5, "mtlasso: {err}");
}

#[test]
fn dispatcher_objective_matches_solver() {
    let x = array![[1.0, 0.2], [0.3, 1.0], [0.5, -0.4]];
    let y = array![1.0, 2.0, -0.5];
    let g = path_graph(2);
    for spec in [
        PenaltySpec::lasso(0.5),
        PenaltySpec::grace(0.5, 0.3, g.clone()),
        PenaltySpec::gfl(0.5, 0.3, g.clone()),
        PenaltySpec::ogl(0.5, vec![vec![0, 1]]),
    ] {
        let fit = fit(x.view(), y.view(), &spec, &SolverConfig::default()).unwrap();
        let obj = objective(x.view(), y.view(), fit.beta.as_slice().unwrap(), &spec).unwrap();
        assert!((obj - fit.objective_value).abs() < 1e-8, "{}", spec.kind);
    }
}
