use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use ndarray::{Array1, Array2, Axis as NdAxis};
use netguide::datamodel::{
    fmt_f64, load_groups, load_keyed_values, load_mapping, load_network, network_node_ids, write_coefficients,
    write_feature_matrix, write_network, write_phenotype, write_report,
};
use netguide::modsearch::{gene_z_vector, greedy_module_search, ModuleSearchParams};
use netguide::netgraph::{build_feature_network, load_genes, load_positions};
use netguide::netreg::{
    fit, fit_mtlasso, fit_mtlasso_path, fit_path, lambda_grid, lambda_max, mtlasso_lambda_max, PenaltyKind, PenaltySpec,
    SolverConfig, Task, PATH_LENGTH, PATH_RATIO,
};
use netguide::relevance::{skat_linear_score, summarize_gene_pvalues, GeneScore, GeneScores, RelevanceVector};
use netguide::scones::{multi_scones_solve, scones_select, SconesParams};
use netguide::selectpipe::{cv_grid_search, generate_synthetic, Axis, CvConfig, CvData, GridSpec, Method, TaskData};
use netguide::{CoefficientVector, Report, WeightedNetwork};
use serde_json::json;

use crate::tasks::{load_tasks, load_xy, task_name};
use crate::{
    BuildNetworkArgs, CvArgs, GenePvalsArgs, MtlassoArgs, ModulesArgs, MultiSconesArgs, Output, RegressionArgs,
    SconesArgs, Solver, SynthArgs,
};

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn print_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(report: &Report, output: &Output) -> Result<()> {
    match &output.out {
        Some(path) => write_report(report, path)?,
        None => print_stdout(&format!("{}\n", serde_json::to_string_pretty(report)?))?,
    }
    Ok(())
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print_stdout(text)?,
    }
    Ok(())
}

pub fn build_network(a: BuildNetworkArgs) -> Result<()> {
    let pos = load_positions(&a.positions)?;
    let genes = load_genes(&a.genes)?;
    let gene_net = a
        .gene_network
        .as_ref()
        .map(|p| load_network(p, genes.gene_ids()))
        .transpose()?;
    let g = build_feature_network(&pos, &genes, gene_net.as_ref(), a.window, a.mode)?;
    match &a.out {
        Some(p) => write_network(&g, p)?,
        None => {
            let ids = g.node_ids();
            let text: String = g.edges().iter().map(|e| format!("{}\t{}\t{}\n", ids[e.u], ids[e.v], fmt_f64(e.w))).collect();
            print_stdout(&text)?;
        }
    }
    eprintln!("{} nodes, {} edges", g.n_nodes(), g.edges().len());
    Ok(())
}

pub fn gene_pvals(a: GenePvalsArgs) -> Result<()> {
    let pvals: HashMap<String, f64> = load_keyed_values(&a.pvals)?.into_iter().collect();
    let mapping = load_mapping(&a.mapping)?;
    let scores = summarize_gene_pvalues(&pvals, &mapping, a.method)?;
    if !scores.omitted.is_empty() {
        eprintln!("warning: {} genes have no scored features and were omitted", scores.omitted.len());
    }
    let mut text = String::from("# gene_id\tp\tz\n");
    for g in &scores.genes {
        writeln!(text, "{}\t{}\t{}", g.gene_id, fmt_f64(g.p_value), fmt_f64(g.z_score))?;
    }
    write_or_print(&text, a.out.as_deref())
}

fn load_gene_scores(path: &Path) -> Result<GeneScores> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut genes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            bail!("{}:{}: expected gene_id<TAB>p<TAB>z", path.display(), i + 1);
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow!("{}:{}: bad number {s:?}", path.display(), i + 1));
        genes.push(GeneScore {
            gene_id: f[0].to_string(),
            p_value: num(f[1])?,
            z_score: num(f[2])?,
        });
    }
    Ok(GeneScores { genes, omitted: Vec::new() })
}

pub fn modules(a: ModulesArgs) -> Result<()> {
    let scores = load_gene_scores(&a.scores)?;
    let mut ids = network_node_ids(&a.network)?;
    // genes without edges still seed singleton modules
    for g in &scores.genes {
        if !ids.contains(&g.gene_id) {
            ids.push(g.gene_id.clone());
        }
    }
    let g = load_network(&a.network, &ids)?;
    let z = gene_z_vector(&g, &scores)?;
    let modules = greedy_module_search(&g, &z, ModuleSearchParams { r: a.r, max_depth: a.max_depth })?;
    let mut text = String::from("# rank\tscore\tgene_ids\n");
    for (rank, m) in modules.iter().enumerate() {
        let genes: Vec<&str> = m.genes.iter().map(|&p| ids[p].as_str()).collect();
        writeln!(text, "{}\t{}\t{}", rank + 1, fmt_f64(m.score), genes.join(","))?;
    }
    write_or_print(&text, a.out.as_deref())
}

fn axis_or(value: Option<f64>, grid: Option<Axis>, name: &str) -> Result<Vec<f64>> {
    match (value, grid) {
        (_, Some(g)) => Ok(g.values().to_vec()),
        (Some(v), None) => Ok(vec![v]),
        (None, None) => bail!("--{name} or --{name}-grid is required"),
    }
}

pub fn scones(a: SconesArgs) -> Result<()> {
    let (x, y) = load_xy(&a.inputs.features, &a.inputs.phenotype)?;
    let g = load_network(&a.network, x.feature_ids())?;
    let c = skat_linear_score(&x, &y, a.normalize)?;
    let etas = axis_or(a.eta, a.eta_grid, "eta")?;
    let lambdas = axis_or(a.lambda, a.lambda_grid, "lambda")?;
    let mut reports = Vec::new();
    for &eta in &etas {
        for &lambda in &lambdas {
            let start = Instant::now();
            let sel = scones_select(&c, &SconesParams::new(eta, lambda, 0.0)?, &g)?;
            let mut r = Report::from_selection("scones", &sel, x.feature_ids(), elapsed_ms(start));
            r.params.remove("mu");
            reports.push(r);
        }
    }
    if reports.len() == 1 {
        return emit(&reports[0], &a.output);
    }
    let json = serde_json::to_string_pretty(&reports)? + "\n";
    write_or_print(&json, a.output.out.as_deref())
}

fn union_ids(per_task: &[Vec<String>], order: &[String]) -> Vec<String> {
    order
        .iter()
        .filter(|id| per_task.iter().any(|t| t.contains(id)))
        .cloned()
        .collect()
}

pub fn multi_scones(a: MultiSconesArgs) -> Result<()> {
    let (names, tasks) = load_tasks(&a.tasks, a.network.as_deref(), true)?;
    let cs: Vec<RelevanceVector> = tasks
        .iter()
        .map(|t| skat_linear_score(&t.x, &t.y, a.normalize))
        .collect::<netguide::Result<_>>()?;
    let nets: Vec<WeightedNetwork> = tasks.iter().map(|t| t.network.clone()).collect();
    let start = Instant::now();
    let sol = multi_scones_solve(&cs, &SconesParams::new(a.eta, a.lambda, a.mu)?, &nets)?;
    let ids = tasks[0].x.feature_ids();
    let per_task: Vec<Vec<String>> = sol
        .selections
        .iter()
        .map(|s| s.selected().iter().map(|&p| ids[p].clone()).collect())
        .collect();
    let mut r = Report::from_selection("multi-scones", &sol.selections[0], ids, elapsed_ms(start));
    r.selected_ids = union_ids(&per_task, ids);
    r.details = Some(json!({
        "selected_ids_union_of_tasks": true,
        "tasks": names.iter().zip(&per_task).map(|(n, s)| json!({"task": n, "selected_ids": s})).collect::<Vec<_>>(),
        "flow_value": sol.flow_value,
    }));
    emit(&r, &a.output)
}

fn solver_config(s: &Solver) -> SolverConfig {
    SolverConfig {
        tol: s.tol,
        max_iters: s.max_iters,
        ..SolverConfig::default()
    }
}

/// Column-centered design, centered phenotype and the means removed.
fn center(x: &Array2<f64>, y: &Array1<f64>) -> (Array2<f64>, Array1<f64>, Array1<f64>, f64) {
    let xm = x.mean_axis(NdAxis(0)).expect("at least two samples");
    let ym = y.mean().expect("at least two samples");
    (x - &xm, y - ym, xm, ym)
}

fn require(v: Option<f64>, flag: &str, kind: PenaltyKind) -> Result<f64> {
    v.ok_or_else(|| anyhow!("{kind} needs --{flag}"))
}

pub fn regression(kind: PenaltyKind, a: RegressionArgs) -> Result<()> {
    let (x, y) = load_xy(&a.inputs.features, &a.inputs.phenotype)?;
    let ids = x.feature_ids();
    let network = || -> Result<WeightedNetwork> {
        let p = a.network.as_ref().ok_or_else(|| anyhow!("{kind} needs --network"))?;
        Ok(load_network(p, ids)?)
    };
    let groups = || -> Result<netguide::datamodel::FeatureGroups> {
        let p = a.groups.as_ref().ok_or_else(|| anyhow!("{kind} needs --groups"))?;
        Ok(load_groups(p, ids)?)
    };
    // the path parameter may be left out when a path is requested
    let path_value = |v: Option<f64>, flag: &str| if a.lambda_path { Ok(v.unwrap_or(0.0)) } else { require(v, flag, kind) };
    let spec = match kind {
        PenaltyKind::Lasso => PenaltySpec::lasso(path_value(a.lambda, "lambda")?),
        PenaltyKind::Grace => PenaltySpec::grace(path_value(a.eta1, "eta1")?, require(a.eta2, "eta2", kind)?, network()?),
        PenaltyKind::Gfl => PenaltySpec::gfl(path_value(a.lambda, "lambda")?, require(a.eta, "eta", kind)?, network()?),
        PenaltyKind::Ogl => PenaltySpec::ogl(path_value(a.lambda, "lambda")?, groups()?.members),
        PenaltyKind::Gggl => {
            let g = groups()?;
            let gp = a.gene_network.as_ref().ok_or_else(|| anyhow!("gggl needs --gene-network"))?;
            let gene = load_network(gp, &g.group_ids)?;
            PenaltySpec::gggl(
                path_value(a.lambda, "lambda")?,
                require(a.eta1, "eta1", kind)?,
                require(a.eta2, "eta2", kind)?,
                g.members,
                gene,
            )
        }
        PenaltyKind::Mtlasso => bail!("use the mtlasso subcommand"),
    };
    let cfg = solver_config(&a.solver);
    let (xs, ys, xm, ym) = if a.solver.no_center {
        let m = x.n_features();
        (x.values().clone(), y.values().clone(), Array1::zeros(m), 0.0)
    } else {
        center(x.values(), y.values())
    };
    let intercept = |b: &CoefficientVector| ym - xm.dot(&b.beta);
    let start = Instant::now();
    let (fitted, path) = if a.lambda_path {
        let top = lambda_max(xs.view(), ys.view(), &spec)?;
        let points = fit_path(xs.view(), ys.view(), &spec, &lambda_grid(top, PATH_LENGTH, PATH_RATIO)?, true, &cfg)?;
        let rows: Vec<_> = points
            .iter()
            .map(|p| {
                json!({
                    "value": p.value,
                    "objective": p.coefficients.objective_value,
                    "converged": p.coefficients.converged,
                    "selected_ids": p.coefficients.support().iter().map(|&i| &ids[i]).collect::<Vec<_>>(),
                })
            })
            .collect();
        let last = points.last().expect("non-empty path").coefficients.clone();
        (last, Some(rows))
    } else {
        (fit(xs.view(), ys.view(), &spec, &cfg)?, None)
    };
    let mut last_spec = spec.clone();
    if let Some(rows) = &path {
        last_spec = spec.with_path_parameter(rows.last().and_then(|r| r["value"].as_f64()).unwrap_or(0.0));
    }
    let params: BTreeMap<String, f64> = last_spec.named_params().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let mut r = Report::from_coefficients(kind.name(), params, &fitted, ids, elapsed_ms(start));
    let mut details = json!({
        "centered": !a.solver.no_center,
        "intercept": intercept(&fitted),
        "iterations": fitted.iterations,
    });
    if let Some(rows) = path {
        details["path"] = json!(rows);
    }
    r.details = Some(details);
    if let Some(p) = &a.beta {
        write_coefficients(&fitted, ids, p)?;
    }
    emit(&r, &a.output)
}

pub fn mtlasso(a: MtlassoArgs) -> Result<()> {
    let (names, tasks) = load_tasks(&a.tasks, None, false)?;
    let ids = tasks[0].x.feature_ids().to_vec();
    let centered: Vec<_> = tasks
        .iter()
        .map(|t| {
            if a.solver.no_center {
                (t.x.values().clone(), t.y.values().clone())
            } else {
                let (x, y, _, _) = center(t.x.values(), t.y.values());
                (x, y)
            }
        })
        .collect();
    let views: Vec<Task<'_>> = centered.iter().map(|(x, y)| (x.view(), y.view())).collect();
    let cfg = solver_config(&a.solver);
    let start = Instant::now();
    let (lambda, fits, path) = if a.lambda_path {
        let values = lambda_grid(mtlasso_lambda_max(&views)?, PATH_LENGTH, PATH_RATIO)?;
        let mut points = fit_mtlasso_path(&views, &values, true, &cfg)?;
        let rows: Vec<_> = points
            .iter()
            .map(|(v, fits)| json!({"value": v, "objective": fits[0].objective_value, "support_sizes": fits.iter().map(|f| f.support().len()).collect::<Vec<_>>()}))
            .collect();
        let (v, fits) = points.pop().expect("non-empty path");
        (v, fits, Some(rows))
    } else {
        let lambda = a.lambda.expect("required by clap");
        (lambda, fit_mtlasso(&views, lambda, &cfg)?, None)
    };
    let support: Vec<Vec<String>> = fits.iter().map(|f| f.support().iter().map(|&i| ids[i].clone()).collect()).collect();
    let mut r = Report::from_coefficients("mtlasso", BTreeMap::from([("lambda".into(), lambda)]), &fits[0], &ids, elapsed_ms(start));
    r.selected_ids = union_ids(&support, &ids);
    r.converged = fits.iter().all(|f| f.converged);
    let mut details = json!({
        "selected_ids_union_of_tasks": true,
        "centered": !a.solver.no_center,
        "tasks": names.iter().zip(&support).map(|(n, s)| json!({"task": n, "selected_ids": s})).collect::<Vec<_>>(),
    });
    if let Some(rows) = path {
        details["path"] = json!(rows);
    }
    r.details = Some(details);
    if let Some(dir) = &a.beta_dir {
        std::fs::create_dir_all(dir)?;
        for (n, f) in names.iter().zip(&fits) {
            write_coefficients(f, &ids, dir.join(format!("beta_{n}.tsv")))?;
        }
    }
    emit(&r, &a.output)
}

pub fn cv(a: CvArgs) -> Result<()> {
    let (names, tasks) = match (&a.features, &a.phenotype, &a.tasks) {
        (Some(f), Some(p), None) => {
            let (x, y) = load_xy(f, p)?;
            let network = match &a.network {
                Some(n) => load_network(n, x.feature_ids())?,
                None => WeightedNetwork::new(x.feature_ids().to_vec(), [])?,
            };
            (vec![task_name(f)], vec![TaskData { x, y, network }])
        }
        (None, None, Some(dir)) => load_tasks(dir, a.network.as_deref(), false)?,
        _ => bail!("give either --features and --phenotype, or --tasks"),
    };
    let needs_network = matches!(
        a.method,
        Method::Scones | Method::MultiScones | Method::Netreg(PenaltyKind::Grace) | Method::Netreg(PenaltyKind::Gfl)
    );
    if needs_network && a.network.is_none() && tasks.iter().all(|t| t.network.edges().is_empty()) {
        eprintln!("warning: {} runs without any network edges", a.method);
    }
    let ids = tasks[0].x.feature_ids().to_vec();
    let (groups, group_ids) = match &a.groups {
        Some(p) => {
            let g = load_groups(p, &ids)?;
            (Some(g.members), Some(g.group_ids))
        }
        None => (None, None),
    };
    let gene_network = match (&a.gene_network, &group_ids) {
        (Some(p), Some(gids)) => Some(load_network(p, gids)?),
        (Some(_), None) => bail!("--gene-network needs --groups"),
        _ => None,
    };
    let data = CvData {
        tasks,
        groups,
        gene_network,
    };
    let mut grid = GridSpec::new();
    for (name, axis) in [
        ("eta", a.grid_eta),
        ("lambda", a.grid_lambda),
        ("mu", a.grid_mu),
        ("lambda1", a.grid_lambda1),
        ("lambda2", a.grid_lambda2),
        ("eta1", a.grid_eta1),
        ("eta2", a.grid_eta2),
    ] {
        if let Some(axis) = axis {
            grid.set(name, axis);
        }
    }
    let cfg = CvConfig {
        folds: a.folds,
        criterion: a.criterion,
        seed: a.seed,
        normalize: a.normalize,
        ..CvConfig::default()
    };
    let start = Instant::now();
    let result = cv_grid_search(a.method, &data, &grid, &cfg)?;
    let per_task: Vec<Vec<String>> = result
        .final_selection
        .iter()
        .map(|s| s.selected().iter().map(|&p| ids[p].clone()).collect())
        .collect();
    let mut r = Report::from_selection(&a.method.to_string(), &result.final_selection[0], &ids, elapsed_ms(start));
    r.params = result.chosen_point().params.clone();
    r.selected_ids = union_ids(&per_task, &ids);
    if let Some(fits) = &result.final_coefficients {
        r.converged = fits.iter().all(|f| f.converged);
    }
    let mut details = serde_json::to_value(&result)?;
    if per_task.len() > 1 {
        details["tasks"] = json!(names.iter().zip(&per_task).map(|(n, s)| json!({"task": n, "selected_ids": s})).collect::<Vec<_>>());
    }
    r.details = Some(details);
    emit(&r, &a.output)
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let d = generate_synthetic(a.n, a.m, a.module_size, a.effect, a.graph, a.seed)?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    write_feature_matrix(&d.x, a.out_dir.join("features.tsv"))?;
    write_phenotype(&d.y, a.out_dir.join("phenotype.tsv"))?;
    write_network(&d.network, a.out_dir.join("network.tsv"))?;
    let planted: String = d.planted.iter().map(|&p| format!("{}\n", d.x.feature_ids()[p])).collect();
    std::fs::write(a.out_dir.join("planted.txt"), planted)?;
    eprintln!(
        "{} samples, {} features, {} edges, {} planted features in {}",
        a.n,
        a.m,
        d.network.edges().len(),
        d.planted.len(),
        a.out_dir.display()
    );
    Ok(())
}
