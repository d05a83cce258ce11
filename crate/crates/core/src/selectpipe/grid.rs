//! Hyperparameter grids.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of values per axis in the default grids.
pub const DEFAULT_GRID_SIZE: usize = 7;

/// `count` values spaced evenly in log scale from `low` to `high`.
pub fn log_range(low: f64, high: f64, count: usize) -> Result<Vec<f64>> {
    if !(low > 0.0 && high >= low && high.is_finite()) || count == 0 {
        return Err(Error::InvalidParameter(format!(
            "log range needs 0 < low <= high and count >= 1, got {low}:{high}:{count}"
        )));
    }
    if count == 1 {
        return Ok(vec![low]);
    }
    let (a, b) = (low.ln(), high.ln());
    Ok((0..count)
        .map(|i| match i {
            0 => low,
            i if i == count - 1 => high,
            i => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect())
}

/// Values of one hyperparameter: sorted ascending, non-negative, non-empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis(Vec<f64>);

impl Axis {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("grid axis is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("grid values must be finite and >= 0, got {v}")));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Accepts `log:LOW:HIGH:COUNT` or a comma-separated list of values.
impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::InvalidParameter(format!("bad grid '{s}': {what}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("'{t}' is not a number")));
        if let Some(rest) = s.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("expected log:LOW:HIGH:COUNT"));
            }
            let count = parts[2].trim().parse::<usize>().map_err(|_| bad("COUNT must be a positive integer"))?;
            return Self::new(log_range(num(parts[0])?, num(parts[1])?, count)?);
        }
        let list = s.strip_prefix("list:").unwrap_or(s);
        Self::new(list.split(',').map(num).collect::<Result<_>>()?)
    }
}

/// Named axes; grid points are their Cartesian product.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GridSpec {
    axes: BTreeMap<String, Axis>,
}

impl GridSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, axis: Axis) -> Self {
        self.axes.insert(name.to_string(), axis);
        self
    }

    pub fn set(&mut self, name: &str, axis: Axis) {
        self.axes.insert(name.to_string(), axis);
    }

    pub fn axis(&self, name: &str) -> Option<&Axis> {
        self.axes.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.axes.keys().map(String::as_str)
    }

    /// All combinations, with the last axis (alphabetically) varying fastest.
    pub fn points(&self) -> Vec<BTreeMap<String, f64>> {
        let mut out = vec![BTreeMap::new()];
        for (name, axis) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.values().iter().map(move |&v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn len(&self) -> usize {
        self.axes.values().map(|a| a.values().len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }
}

/// Median of the strictly positive entries, if any.
pub fn median_positive(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| *x > 0.0).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
}

/// `DEFAULT_GRID_SIZE` log-spaced values over `[q·1e-2, q·1e2]`.
pub fn default_axis(q: f64) -> Result<Axis> {
    Axis::new(log_range(q * 1e-2, q * 1e2, DEFAULT_GRID_SIZE)?)
}
