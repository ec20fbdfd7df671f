use serde::{Deserialize, Serialize};

use super::InsightError;
use crate::sampler::SampleSet;

/// Continuous features (row-major) plus optional categorical codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub n: usize,
    pub feature_names: Vec<String>,
    pub values: Vec<f64>,
    /// Min-max bounds per feature when `values` are normalized.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Constant features removed during normalization, with their value.
    pub dropped: Vec<(String, f64)>,
    pub categorical_names: Vec<String>,
    /// Row-major `n × categorical_names.len()` indices into the levels.
    pub categories: Vec<u32>,
    pub category_levels: Vec<Vec<String>>,
}

fn check_columns(names: &[String], columns: &[Vec<f64>]) -> Result<usize, InsightError> {
    if names.len() != columns.len() {
        return Err(InsightError::Parameter(format!(
            "{} names for {} columns",
            names.len(),
            columns.len()
        )));
    }
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(InsightError::Parameter("columns differ in length".into()));
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(InsightError::Parameter("non-finite feature value".into()));
    }
    Ok(n)
}

fn row_major(columns: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * columns.len());
    for i in 0..n {
        out.extend(columns.iter().map(|c| c[i]));
    }
    out
}

impl Dataset {
    /// Features in their own units, nothing dropped.
    pub fn physical(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self, InsightError> {
        let n = check_columns(&names, columns)?;
        if n == 0 && !columns.is_empty() {
            return Err(InsightError::Degenerate("no rows".into()));
        }
        Ok(Self {
            n,
            feature_names: names,
            values: row_major(columns, n),
            bounds: None,
            dropped: Vec::new(),
            categorical_names: Vec::new(),
            categories: Vec::new(),
            category_levels: Vec::new(),
        })
    }

    /// Min-max normalized features; constant columns are dropped.
    /// Categorical levels are sorted, so codes follow level order.
    pub fn normalized(
        names: Vec<String>,
        columns: &[Vec<f64>],
        categorical: Vec<(String, Vec<String>)>,
    ) -> Result<Self, InsightError> {
        let mut n = check_columns(&names, columns)?;
        if columns.is_empty() {
            n = categorical.first().map_or(0, |c| c.1.len());
        }
        if n == 0 {
            return Err(InsightError::Degenerate("no rows".into()));
        }
        let mut kept_names = Vec::new();
        let mut kept = Vec::new();
        let mut bounds = Vec::new();
        let mut dropped = Vec::new();
        for (name, col) in names.into_iter().zip(columns) {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                kept.push(col.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect::<Vec<_>>());
                kept_names.push(name);
                bounds.push((lo, hi));
            } else {
                dropped.push((name, lo));
            }
        }
        let mut categorical_names = Vec::new();
        let mut levels = Vec::new();
        let mut codes: Vec<Vec<u32>> = Vec::new();
        for (name, col) in categorical {
            if col.len() != n {
                return Err(InsightError::Parameter(format!("categorical column {name} has {} rows, expected {n}", col.len())));
            }
            let mut lv: Vec<String> = col.clone();
            lv.sort();
            lv.dedup();
            codes.push(col.iter().map(|v| lv.binary_search(v).expect("level present") as u32).collect());
            categorical_names.push(name);
            levels.push(lv);
        }
        let mut categories = Vec::with_capacity(n * codes.len());
        for i in 0..n {
            categories.extend(codes.iter().map(|c| c[i]));
        }
        Ok(Self {
            n,
            feature_names: kept_names,
            values: row_major(&kept, n),
            bounds: Some(bounds),
            dropped,
            categorical_names,
            categories,
            category_levels: levels,
        })
    }

    /// Normalized dataset from samples, optionally with the carrier tag
    /// as a categorical column.
    pub fn from_samples(set: &SampleSet, with_carrier: bool) -> Result<Self, InsightError> {
        let columns: Vec<Vec<f64>> = (0..set.dim()).map(|j| set.column(j)).collect();
        let categorical = match (with_carrier, set.carrier_tags()) {
            (true, Some(tags)) => vec![("carrier".to_string(), tags)],
            (true, None) => return Err(InsightError::Parameter("samples carry no carrier tags".into())),
            (false, _) => Vec::new(),
        };
        Self::normalized(set.variables.clone(), &columns, categorical)
    }

    /// Physical-unit features from samples.
    pub fn physical_from_samples(set: &SampleSet) -> Result<Self, InsightError> {
        let columns: Vec<Vec<f64>> = (0..set.dim()).map(|j| set.column(j)).collect();
        Self::physical(set.variables.clone(), &columns)
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_categorical(&self) -> usize {
        self.categorical_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn categorical_row(&self, i: usize) -> &[u32] {
        let q = self.n_categorical();
        &self.categories[i * q..(i + 1) * q]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.values[i * self.n_features() + j]).collect()
    }

    /// Maps a normalized point back to physical units.
    pub fn denormalize(&self, x: &[f64]) -> Vec<f64> {
        match &self.bounds {
            Some(b) => x.iter().zip(b).map(|(v, (lo, hi))| lo + v * (hi - lo)).collect(),
            None => x.to_vec(),
        }
    }

    /// The retained continuous features in physical units.
    pub fn to_physical(&self) -> Dataset {
        let p = self.n_features();
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.n {
            values.extend(self.denormalize(&self.values[i * p..(i + 1) * p]));
        }
        Dataset {
            n: self.n,
            feature_names: self.feature_names.clone(),
            values,
            bounds: None,
            dropped: Vec::new(),
            categorical_names: Vec::new(),
            categories: Vec::new(),
            category_levels: Vec::new(),
        }
    }
}
