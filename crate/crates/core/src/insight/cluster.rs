use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::silhouette;
use super::tree::{fit_cart, TreeOptions};
use super::{Dataset, InsightError};
use crate::sampler::partition_rng;

pub const DEFAULT_GAMMA: f64 = 0.02;
/// Rows used for silhouette scores in `select_k`.
pub const SILHOUETTE_ROWS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterOptions {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            k: 3,
            seed: 0,
            restarts: 10,
            max_iterations: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub gamma: f64,
    /// Normalized continuous centers.
    pub centroids: Vec<Vec<f64>>,
    pub modes: Vec<Vec<u32>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Empty clusters re-seeded from the farthest point.
    pub reseeded: usize,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

#[inline]
pub(crate) fn dis(x: &[f64], xc: &[u32], c: &[f64], cc: &[u32], gamma: f64) -> f64 {
    let e: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    let m = xc.iter().zip(cc).filter(|(a, b)| a != b).count();
    e + gamma * m as f64
}

/// Squared Euclidean distance plus `gamma` per categorical mismatch.
pub fn dissimilarity(x: &[f64], x_cat: &[u32], c: &[f64], c_cat: &[u32], gamma: f64) -> Result<f64, InsightError> {
    if x.len() != c.len() || x_cat.len() != c_cat.len() {
        return Err(InsightError::Parameter("row and center dimensions differ".into()));
    }
    Ok(dis(x, x_cat, c, c_cat, gamma))
}

/// Mean population standard deviation of the continuous columns.
pub fn auto_gamma(data: &Dataset) -> Result<f64, InsightError> {
    let p = data.n_features();
    if p == 0 {
        return Err(InsightError::Parameter("no continuous features".into()));
    }
    let n = data.n as f64;
    let mean_std = (0..p)
        .map(|j| {
            let col = data.column(j);
            let mu = col.iter().sum::<f64>() / n;
            (col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n).sqrt()
        })
        .sum::<f64>()
        / p as f64;
    if mean_std > 0.0 {
        Ok(mean_std)
    } else {
        Err(InsightError::Parameter("continuous features have zero variance".into()))
    }
}

pub fn kmeans(data: &Dataset, options: &ClusterOptions) -> Result<ClusterModel, InsightError> {
    if data.n_categorical() > 0 {
        return Err(InsightError::Parameter("k-means takes continuous data only; use k-prototypes".into()));
    }
    fit(data, 0.0, options)
}

pub fn kprototypes(data: &Dataset, gamma: f64, options: &ClusterOptions) -> Result<ClusterModel, InsightError> {
    if data.n_categorical() == 0 {
        return Err(InsightError::Parameter("k-prototypes needs a categorical column".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(InsightError::Parameter("gamma must be positive".into()));
    }
    fit(data, gamma, options)
}

fn fit(data: &Dataset, gamma: f64, options: &ClusterOptions) -> Result<ClusterModel, InsightError> {
    let k = options.k;
    if k == 0 || k > data.n {
        return Err(InsightError::Parameter(format!("k = {k} with {} rows", data.n)));
    }
    if options.restarts == 0 || options.max_iterations == 0 {
        return Err(InsightError::Parameter("restarts and max_iterations must be positive".into()));
    }
    let runs: Vec<ClusterModel> = (0..options.restarts)
        .into_par_iter()
        .map(|r| run_once(data, gamma, k, options.max_iterations, options.seed, r as u64))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    Ok(best)
}

fn seed_centers(data: &Dataset, gamma: f64, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = data.n;
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = vec![f64::INFINITY; n];
    while chosen.len() < k {
        let c = *chosen.last().expect("non-empty");
        let (cx, cc) = (data.row(c), data.categorical_row(c));
        nearest.par_iter_mut().enumerate().for_each(|(i, d)| {
            *d = d.min(dis(data.row(i), data.categorical_row(i), cx, cc, gamma));
        });
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                acc += d;
                if acc > u && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
    }
    chosen
}

fn run_once(data: &Dataset, gamma: f64, k: usize, max_iterations: usize, seed: u64, restart: u64) -> ClusterModel {
    let mut rng = partition_rng(seed, restart);
    let n = data.n;
    let p = data.n_features();
    let q = data.n_categorical();
    let seeds = seed_centers(data, gamma, k, &mut rng);
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&i| data.row(i).to_vec()).collect();
    let mut modes: Vec<Vec<u32>> = seeds.iter().map(|&i| data.categorical_row(i).to_vec()).collect();
    let n_levels: Vec<usize> = data.category_levels.iter().map(|l| l.len()).collect();

    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut reseeded = 0;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iterations {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let (x, xc) = (data.row(i), data.categorical_row(i));
                let mut best = (0, f64::INFINITY);
                for j in 0..k {
                    let d = dis(x, xc, &centroids[j], &modes[j], gamma);
                    if d < best.1 {
                        best = (j, d);
                    }
                }
                best
            })
            .collect();
        trace.push(assigned.iter().map(|a| a.1).sum());
        let changed = assigned.iter().zip(&labels).any(|(a, &l)| a.0 != l);
        for (l, a) in labels.iter_mut().zip(&assigned) {
            *l = a.0;
        }
        if !changed {
            converged = true;
            break;
        }

        let mut sums = vec![vec![0.0; p]; k];
        let mut counts = vec![0usize; k];
        let mut level_counts: Vec<Vec<Vec<usize>>> = (0..k).map(|_| n_levels.iter().map(|&m| vec![0; m]).collect()).collect();
        for i in 0..n {
            let l = labels[i];
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(data.row(i)) {
                *s += v;
            }
            for (m, &code) in data.categorical_row(i).iter().enumerate() {
                level_counts[l][m][code as usize] += 1;
            }
        }
        let mut used = Vec::new();
        for j in 0..k {
            if counts[j] == 0 {
                // Farthest point from its own center takes over the empty cluster.
                let far = (0..n)
                    .filter(|i| !used.contains(i))
                    .max_by(|&a, &b| assigned[a].1.total_cmp(&assigned[b].1).then(b.cmp(&a)))
                    .expect("k <= n");
                used.push(far);
                centroids[j] = data.row(far).to_vec();
                modes[j] = data.categorical_row(far).to_vec();
                reseeded += 1;
                continue;
            }
            centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            modes[j] = (0..q)
                .map(|m| {
                    let c = &level_counts[j][m];
                    // First maximum wins, i.e. the lowest level index.
                    (0..c.len()).fold(0, |best, v| if c[v] > c[best] { v } else { best }) as u32
                })
                .collect();
        }
    }
    let inertia = (0..n)
        .map(|i| dis(data.row(i), data.categorical_row(i), &centroids[labels[i]], &modes[labels[i]], gamma))
        .sum();
    ClusterModel {
        k,
        gamma,
        centroids,
        modes,
        labels,
        inertia,
        iterations,
        converged,
        reseeded,
        inertia_trace: trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KDiagnostics {
    pub k: usize,
    pub inertia: f64,
    pub silhouette: Option<f64>,
    pub tree_accuracy: f64,
}

/// Per-k inertia, silhouette (on a seeded subsample) and the training
/// accuracy of a CART tree of `tree_depth` fitted to the cluster labels.
pub fn select_k(
    data: &Dataset,
    ks: &[usize],
    gamma: f64,
    seed: u64,
    tree_depth: usize,
) -> Result<Vec<KDiagnostics>, InsightError> {
    if ks.is_empty() {
        return Err(InsightError::Parameter("empty k range".into()));
    }
    let physical = data.to_physical();
    let probe: Vec<usize> = if data.n > SILHOUETTE_ROWS {
        let mut rows = index::sample(&mut partition_rng(seed, u64::MAX), data.n, SILHOUETTE_ROWS).into_vec();
        rows.sort_unstable();
        rows
    } else {
        (0..data.n).collect()
    };
    let probe_data = subset(data, &probe);
    ks.iter()
        .map(|&k| {
            let options = ClusterOptions {
                k,
                seed,
                ..ClusterOptions::default()
            };
            let model = if data.n_categorical() > 0 {
                kprototypes(data, gamma, &options)?
            } else {
                kmeans(data, &options)?
            };
            let probe_labels: Vec<usize> = probe.iter().map(|&i| model.labels[i]).collect();
            let tree = fit_cart(
                &physical,
                &model.labels,
                &TreeOptions {
                    max_depth: tree_depth,
                    ..TreeOptions::default()
                },
            )?;
            Ok(KDiagnostics {
                k,
                inertia: model.inertia,
                silhouette: silhouette(&probe_data, &probe_labels, model.gamma),
                tree_accuracy: tree.accuracy,
            })
        })
        .collect()
}

fn subset(data: &Dataset, rows: &[usize]) -> Dataset {
    let mut out = data.clone();
    out.n = rows.len();
    out.values = rows.iter().flat_map(|&i| data.row(i).to_vec()).collect();
    out.categories = rows.iter().flat_map(|&i| data.categorical_row(i).to_vec()).collect();
    out
}

/// Cluster centers in physical units, for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterExport {
    pub k: usize,
    pub gamma: f64,
    pub variables: Vec<String>,
    pub centroids: Vec<Vec<f64>>,
    pub constant_features: Vec<(String, f64)>,
    pub categorical: Vec<String>,
    pub modes: Vec<Vec<String>>,
    pub sizes: Vec<usize>,
    pub inertia: f64,
}

impl ClusterExport {
    pub fn new(model: &ClusterModel, data: &Dataset) -> Self {
        Self {
            k: model.k,
            gamma: model.gamma,
            variables: data.feature_names.clone(),
            centroids: model.centroids.iter().map(|c| data.denormalize(c)).collect(),
            constant_features: data.dropped.clone(),
            categorical: data.categorical_names.clone(),
            modes: model
                .modes
                .iter()
                .map(|m| m.iter().enumerate().map(|(j, &c)| data.category_levels[j][c as usize].clone()).collect())
                .collect(),
            sizes: model.sizes(),
            inertia: model.inertia,
        }
    }
}
