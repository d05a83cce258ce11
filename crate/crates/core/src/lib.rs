//! Network-guided feature selection.
//!
//! Three families of methods select features that are both associated with a
//! phenotype and connected on a prior network:
//!
//! * [`modsearch`]: post-hoc greedy search for high-scoring gene modules;
//! * [`netreg`]: least squares with network-aware sparsity penalties;
//! * [`scones`]: penalized relevance maximized exactly by a minimum s/t cut,
//!   in single- and multi-task form.
//!
//! [`selectpipe`] picks hyperparameters by cross-validated stability and
//! predictivity and generates synthetic benchmarks.

pub mod datamodel;
pub mod error;
pub mod modsearch;
pub mod netgraph;
pub mod netreg;
pub mod relevance;
pub mod scones;
pub mod selectpipe;

pub use datamodel::{
    align, CoefficientVector, FeatureGeneMap, FeatureMatrix, Phenotype, Report, SelectionParams, SelectionSet,
    WeightedNetwork,
};
pub use error::{Error, Result};
