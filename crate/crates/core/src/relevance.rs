//! Per-feature association scores and gene-level p-value summaries.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView1, Axis};

use crate::datamodel::{FeatureGeneMap, FeatureMatrix, Phenotype};
use crate::error::{Error, Result};

/// Nonnegative relevance score per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceVector {
    scores: Vec<f64>,
}

impl RelevanceVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(s) = scores.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "relevance scores must be finite and nonnegative, got {s}"
            )));
        }
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Elementwise sum of several relevance vectors of equal length.
    pub fn sum(vectors: &[RelevanceVector]) -> Result<Self> {
        let m = vectors.first().map_or(0, |v| v.len());
        if vectors.iter().any(|v| v.len() != m) {
            return Err(Error::DimensionMismatch("relevance vectors differ in length".into()));
        }
        let mut out = vec![0.0; m];
        for v in vectors {
            out.iter_mut().zip(&v.scores).for_each(|(o, s)| *o += s);
        }
        Self::new(out)
    }
}

fn centered_dot(col: ArrayView1<'_, f64>, y_centered: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.sum() / n;
    let mut dot = 0.0;
    let mut norm2 = 0.0;
    for (x, y) in col.iter().zip(y_centered) {
        let c = x - mean;
        dot += c * y;
        norm2 += c * c;
    }
    (dot, norm2)
}

/// Linear-kernel score-test numerator per feature.
///
/// With column `x̃_p` and phenotype `ỹ` both centered, the score is
/// `(x̃_pᵀỹ)²`; with `normalize` it is divided by `‖x̃_p‖²‖ỹ‖²`, the squared
/// Pearson correlation, and constant columns score 0.
pub fn skat_linear_score(x: &FeatureMatrix, y: &Phenotype, normalize: bool) -> Result<RelevanceVector> {
    if x.n_samples() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples in features, {} in phenotype",
            x.n_samples(),
            y.len()
        )));
    }
    let mean = y.values().mean().unwrap_or(0.0);
    let yc: Vec<f64> = y.values().iter().map(|v| v - mean).collect();
    let y_norm2: f64 = yc.iter().map(|v| v * v).sum();
    if y_norm2 == 0.0 {
        return Err(Error::ConstantPhenotype);
    }
    let score = |col: ArrayView1<'_, f64>| {
        let (dot, norm2) = centered_dot(col, &yc);
        if !normalize {
            dot * dot
        } else if norm2 == 0.0 {
            0.0
        } else {
            (dot * dot / (norm2 * y_norm2)).min(1.0)
        }
    };
    let cols = x.values().axis_iter(Axis(1));
    #[cfg(feature = "parallel")]
    let scores: Vec<f64> = {
        use rayon::prelude::*;
        let cols: Vec<_> = cols.collect();
        cols.into_par_iter().map(score).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let scores: Vec<f64> = cols.map(score).collect();
    RelevanceVector::new(scores)
}

/// How the p-values of the features mapped to one gene are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summary {
    Min,
    Max,
    Mean,
}

impl FromStr for Summary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Self::Min),
            "max" => Ok(Self::Max),
            "mean" => Ok(Self::Mean),
            other => Err(Error::InvalidParameter(format!("unknown summary method {other:?}"))),
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Min => "min",
            Self::Max => "max",
            Self::Mean => "mean",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneScore {
    pub gene_id: String,
    pub p_value: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneScores {
    pub genes: Vec<GeneScore>,
    /// Genes present in the mapping whose features carry no p-value.
    pub omitted: Vec<String>,
}

impl GeneScores {
    pub fn z_by_gene(&self) -> HashMap<&str, f64> {
        self.genes.iter().map(|g| (g.gene_id.as_str(), g.z_score)).collect()
    }
}

/// Summarizes feature p-values per gene. Genes are reported in order of first
/// appearance in `mapping`.
pub fn summarize_gene_pvalues(
    snp_p: &HashMap<String, f64>,
    mapping: &FeatureGeneMap,
    method: Summary,
) -> Result<GeneScores> {
    if let Some(p) = snp_p.values().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::PValueOutOfRange(*p));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut per_gene: HashMap<&str, Vec<f64>> = HashMap::new();
    for (feature, gene) in mapping.pairs() {
        let entry = per_gene.entry(gene.as_str()).or_insert_with(|| {
            order.push(gene.as_str());
            Vec::new()
        });
        if let Some(&p) = snp_p.get(feature) {
            entry.push(p);
        }
    }
    let mut genes = Vec::new();
    let mut omitted = Vec::new();
    for gene in order {
        let ps = &per_gene[gene];
        if ps.is_empty() {
            omitted.push(gene.to_string());
            continue;
        }
        let p = match method {
            Summary::Min => ps.iter().copied().fold(f64::INFINITY, f64::min),
            Summary::Max => ps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Summary::Mean => ps.iter().sum::<f64>() / ps.len() as f64,
        };
        genes.push(GeneScore {
            gene_id: gene.to_string(),
            p_value: p,
            z_score: z_from_p(p)?,
        });
    }
    Ok(GeneScores { genes, omitted })
}

const P_FLOOR: f64 = 1e-300;
const P_CEIL: f64 = 1.0 - 1e-16;

/// Upper-tail normal quantile `Φ⁻¹(1 − p)`.
///
/// Accepts `p ∈ (0, 1]`; values are clamped to `[1e-300, 1 − 1e-16]` first.
pub fn z_from_p(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::PValueOutOfRange(p));
    }
    Ok(-norm_quantile(p.clamp(P_FLOOR, P_CEIL)))
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile `Φ⁻¹(p)` for `p ∈ (0, 1)`.
///
/// Acklam's rational approximation followed by one Halley step on the lower
/// tail, where `Φ` is evaluated through `erfc` without cancellation. Upper-half
/// inputs are reflected, and `1 − p` is exact there.
pub fn norm_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    if p > 0.5 {
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // Halley refinement
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}
