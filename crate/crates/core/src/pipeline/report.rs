use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::insight::{ClusterExport, DecisionTree};
use crate::model::PathwayMetrics;

/// Equal-width counts over `[lo, hi]` with the optimum's position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub variable: String,
    pub unit: String,
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Cost-optimal value, when there is a single optimum to mark.
    pub optimum: Option<f64>,
}

impl Histogram {
    /// Values outside the range land in the end bins.
    pub fn new(variable: &str, unit: &str, values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize, optimum: Option<f64>) -> Self {
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + i as f64 * width }).collect();
        let mut counts = vec![0; bins];
        for v in values {
            let b = if width > 0.0 {
                (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        Self {
            variable: variable.to_string(),
            unit: unit.to_string(),
            edges,
            counts,
            optimum,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableRange {
    pub variable: String,
    pub unit: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    pub checked: usize,
    pub verified: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Everything plotted for one pathway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayReport {
    pub pathway: String,
    pub carrier: String,
    pub epsilon: f64,
    pub f_star: f64,
    pub lcoh_eur_per_mwh: f64,
    pub metrics: PathwayMetrics,
    pub optimum: BTreeMap<String, f64>,
    /// Hull extents per MGA axis.
    pub ranges: Vec<VariableRange>,
    pub hull_volume: f64,
    pub maa_iterations: usize,
    pub maa_converged: bool,
    pub n_samples: usize,
    /// Relative to the output directory.
    pub samples_file: String,
    pub histograms: Vec<Histogram>,
    pub cost: Option<CostStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub pathways: Vec<PathwayReport>,
    pub clusters: Option<ClusterExport>,
    pub tree: Option<DecisionTree>,
}
