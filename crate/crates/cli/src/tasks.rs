//! Loading of single- and multi-task inputs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use netguide::datamodel::{align, load_feature_matrix, load_network, load_phenotype};
use netguide::selectpipe::TaskData;
use netguide::{FeatureMatrix, Phenotype, WeightedNetwork};

/// Feature matrix and phenotype restricted to their shared samples; dropped
/// samples are reported on stderr.
pub fn load_xy(features: &Path, phenotype: &Path) -> Result<(FeatureMatrix, Phenotype)> {
    let x = load_feature_matrix(features)?;
    let y = load_phenotype(phenotype)?;
    let a = align(&x, &y)?;
    if !a.dropped_from_features.is_empty() || !a.dropped_from_phenotype.is_empty() {
        eprintln!(
            "warning: {} samples without phenotype and {} phenotype entries without features were dropped",
            a.dropped_from_features.len(),
            a.dropped_from_phenotype.len()
        );
    }
    Ok((a.features, a.phenotype))
}

/// Task subdirectories in name order.
fn task_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading task directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    if out.is_empty() {
        bail!("{} has no task subdirectories", dir.display());
    }
    Ok(out)
}

/// Name of a task directory, used to label per-task output.
pub fn task_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads every task of `dir`. A task's own `network.tsv` takes precedence over
/// `shared`; with `need_network` one of them must exist. All tasks must list
/// the same features in the same order.
pub fn load_tasks(dir: &Path, shared: Option<&Path>, need_network: bool) -> Result<(Vec<String>, Vec<TaskData>)> {
    let mut names = Vec::new();
    let mut tasks: Vec<TaskData> = Vec::new();
    for d in task_dirs(dir)? {
        let (x, y) = load_xy(&d.join("features.tsv"), &d.join("phenotype.tsv"))?;
        if let Some(first) = tasks.first() {
            if first.x.feature_ids() != x.feature_ids() {
                bail!("task {} lists different features than task {}", task_name(&d), names[0]);
            }
        }
        let own = d.join("network.tsv");
        let network = if own.exists() {
            load_network(&own, x.feature_ids())?
        } else if let Some(p) = shared {
            load_network(p, x.feature_ids())?
        } else if need_network {
            bail!("task {} has no network.tsv and no --network was given", task_name(&d));
        } else {
            WeightedNetwork::new(x.feature_ids().to_vec(), [])?
        };
        names.push(task_name(&d));
        tasks.push(TaskData { x, y, network });
    }
    Ok((names, tasks))
}
