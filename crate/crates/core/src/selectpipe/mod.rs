//! Model selection: stability measures, hyperparameter grids,
//! cross-validated grid search and synthetic benchmarks.

mod cv;
mod grid;
mod stability;
mod synth;

pub use cv::{
    assign_folds, complete_grid, cv_grid_search, cv_grid_search_with_folds, ridge_predictivity, Criterion, CvConfig,
    CvData, CvResult, GridPointResult, Method, TaskData, DEFAULT_FOLDS, DEFAULT_RIDGE, DEFAULT_SECONDARY,
    EXCLUSION_RULE,
};
pub use grid::{default_axis, log_range, median_positive, Axis, GridSpec, DEFAULT_GRID_SIZE};
pub use stability::{jaccard, kuncheva_index, kuncheva_pair, phi_pair, stability_across_folds, Stability};
pub use synth::{f1_score, generate_synthetic, grid_edges, scale_free_edges, GraphKind, SyntheticData};
