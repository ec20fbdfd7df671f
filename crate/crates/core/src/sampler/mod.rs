//! Uniform sampling of hull interiors and LP re-verification of samples.

mod io;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{ConvexHull, GeometryError, Simplex};
use crate::lp::{LpError, SimplexSolver, SolveStatus, SolverOptions, SparseLp};
use crate::maa::{cost_cap, find_optimum, MaaError};

pub use io::{read_samples, sidecar_path, write_samples, Sidecar, SIDECAR_FORMAT};

/// Rows drawn per partition; each partition has its own RNG stream.
pub const PARTITION_ROWS: usize = 8192;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Maa(#[from] MaaError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed sample file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Near-optimal designs, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub variables: Vec<String>,
    pub units: Vec<String>,
    /// Row-major `n_samples × variables.len()`.
    pub matrix: Vec<f64>,
    /// Run-length encoded carrier labels covering every row, if tagged.
    pub carrier_runs: Vec<(String, usize)>,
    /// Re-evaluated minimum cost per row; NaN where not evaluated.
    pub cost: Option<Vec<f64>>,
    /// Cluster label per row, if assigned.
    pub labels: Option<Vec<usize>>,
    pub seed: u64,
    pub hull_id: String,
}

impl SampleSet {
    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn len(&self) -> usize {
        if self.variables.is_empty() {
            0
        } else {
            self.matrix.len() / self.variables.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.matrix[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks_exact(self.dim().max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Carrier label of every row, expanded from the runs.
    pub fn carrier_tags(&self) -> Option<Vec<String>> {
        if self.carrier_runs.is_empty() {
            return None;
        }
        Some(
            self.carrier_runs
                .iter()
                .flat_map(|(c, k)| std::iter::repeat_n(c.clone(), *k))
                .collect(),
        )
    }

    pub fn with_carrier(mut self, carrier: &str) -> Self {
        self.carrier_runs = vec![(carrier.to_string(), self.len())];
        self
    }

    /// Stacks sets with identical variables, keeping carrier runs and
    /// costs; labels are dropped.
    pub fn concat(sets: &[SampleSet]) -> Result<SampleSet, SamplerError> {
        let first = sets
            .first()
            .ok_or_else(|| SamplerError::Parameter("nothing to concatenate".into()))?;
        let mut out = SampleSet {
            variables: first.variables.clone(),
            units: first.units.clone(),
            matrix: Vec::new(),
            carrier_runs: Vec::new(),
            cost: None,
            labels: None,
            seed: first.seed,
            hull_id: sets.iter().map(|s| s.hull_id.as_str()).collect::<Vec<_>>().join("+"),
        };
        let any_cost = sets.iter().any(|s| s.cost.is_some());
        let mut cost = Vec::new();
        for s in sets {
            if s.variables != out.variables {
                return Err(SamplerError::Parameter(format!(
                    "variables {:?} do not match {:?}",
                    s.variables, out.variables
                )));
            }
            out.matrix.extend_from_slice(&s.matrix);
            out.carrier_runs.extend(s.carrier_runs.iter().cloned());
            if any_cost {
                match &s.cost {
                    Some(c) => cost.extend_from_slice(c),
                    None => cost.extend(std::iter::repeat_n(f64::NAN, s.len())),
                }
            }
        }
        if any_cost {
            out.cost = Some(cost);
        }
        Ok(out)
    }

    /// The given rows, in order.
    pub fn subset(&self, rows: &[usize]) -> SampleSet {
        let mut matrix = Vec::with_capacity(rows.len() * self.dim());
        for &r in rows {
            matrix.extend_from_slice(self.row(r));
        }
        let tags = self.carrier_tags();
        let mut runs: Vec<(String, usize)> = Vec::new();
        if let Some(tags) = tags {
            for &r in rows {
                match runs.last_mut() {
                    Some((c, k)) if *c == tags[r] => *k += 1,
                    _ => runs.push((tags[r].clone(), 1)),
                }
            }
        }
        SampleSet {
            variables: self.variables.clone(),
            units: self.units.clone(),
            matrix,
            carrier_runs: runs,
            cost: self.cost.as_ref().map(|c| rows.iter().map(|&r| c[r]).collect()),
            labels: self.labels.as_ref().map(|l| rows.iter().map(|&r| l[r]).collect()),
            seed: self.seed,
            hull_id: self.hull_id.clone(),
        }
    }
}

/// SHA-256 of the hull's JSON form.
pub fn hull_id(hull: &ConvexHull) -> String {
    let bytes = serde_json::to_vec(hull).expect("hull serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Centroid fan of the hull. Volumes sum to the hull volume.
pub fn triangulate(hull: &ConvexHull) -> Result<Vec<Simplex>, SamplerError> {
    let simplices = hull.triangulate();
    if simplices.is_empty() && hull.rank > 0 {
        return Err(GeometryError::Degenerate {
            rank: hull.rank,
            dim: hull.dim,
        }
        .into());
    }
    Ok(simplices)
}

/// Flat Dirichlet weights over `k` vertices (normalized unit exponentials).
pub fn flat_dirichlet<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        w.iter_mut().for_each(|x| *x /= s);
    } else {
        w.iter_mut().for_each(|x| *x = 1.0 / k as f64);
    }
    w
}

/// Volume-weighted simplex picker over a triangulated hull.
#[derive(Debug, Clone)]
pub struct HullSampler {
    simplices: Vec<Simplex>,
    cumulative: Vec<f64>,
    dim: usize,
    point: Option<Vec<f64>>,
}

impl HullSampler {
    pub fn new(hull: &ConvexHull) -> Result<Self, SamplerError> {
        let simplices = triangulate(hull)?;
        let mut total = 0.0;
        let cumulative = simplices
            .iter()
            .map(|s| {
                total += s.volume;
                total
            })
            .collect();
        let point = (hull.rank == 0).then(|| hull.vertices[0].clone());
        Ok(Self {
            simplices,
            cumulative,
            dim: hull.dim,
            point,
        })
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn total_volume(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Index of a simplex drawn with probability proportional to volume.
    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.total_volume();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.simplices.len() - 1)
    }

    /// One uniform point and the simplex it came from.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Vec<f64>) {
        if let Some(p) = &self.point {
            return (0, p.clone());
        }
        let i = self.pick(rng);
        let s = &self.simplices[i];
        let lambda = flat_dirichlet(rng, s.vertices.len());
        let mut x = vec![0.0; self.dim];
        for (l, v) in lambda.iter().zip(&s.vertices) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += l * vi;
            }
        }
        (i, x)
    }
}

/// RNG for one partition of a seeded run.
pub fn partition_rng(seed: u64, partition: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(partition);
    rng
}

/// Draws `n` uniform points from the hull. Partitioning is fixed, so the
/// result does not depend on the thread count.
pub fn sample(hull: &ConvexHull, n: usize, seed: u64) -> Result<SampleSet, SamplerError> {
    if n == 0 {
        return Err(SamplerError::Parameter("need at least one sample".into()));
    }
    let sampler = HullSampler::new(hull)?;
    let partitions = n.div_ceil(PARTITION_ROWS);
    let chunks: Vec<Vec<f64>> = (0..partitions)
        .into_par_iter()
        .map(|p| {
            let rows = PARTITION_ROWS.min(n - p * PARTITION_ROWS);
            let mut rng = partition_rng(seed, p as u64);
            let mut out = Vec::with_capacity(rows * hull.dim);
            for _ in 0..rows {
                out.extend(sampler.draw(&mut rng).1);
            }
            out
        })
        .collect();
    Ok(SampleSet {
        variables: (1..=hull.dim).map(|i| format!("x{i}")).collect(),
        units: vec![String::new(); hull.dim],
        matrix: chunks.concat(),
        carrier_runs: Vec::new(),
        cost: None,
        labels: None,
        seed,
        hull_id: hull_id(hull),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Share of rows to re-solve; 1.0 checks every row.
    pub fraction: f64,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            fraction: 0.01,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    pub cost: f64,
    /// `cost / threshold - 1`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub threshold: f64,
    pub checked: Vec<usize>,
    /// Minimum cost per checked row; NaN when indeterminate.
    pub costs: Vec<f64>,
    pub verified: usize,
    pub violations: Vec<Violation>,
    pub indeterminate: Vec<(usize, String)>,
}

impl VerificationReport {
    pub fn all_verified(&self) -> bool {
        self.verified == self.checked.len()
    }
}

/// Pins the MGA columns of `lp` to each checked row and re-minimizes cost.
pub fn verify_near_optimal(
    samples: &SampleSet,
    lp: &SparseLp,
    f_star: f64,
    epsilon: f64,
    options: &VerifyOptions,
) -> Result<VerificationReport, SamplerError> {
    if !(options.fraction > 0.0 && options.fraction <= 1.0) {
        return Err(SamplerError::Parameter("fraction must be in (0, 1]".into()));
    }
    let columns: Vec<usize> = samples
        .variables
        .iter()
        .map(|t| lp.mga_column(t))
        .collect::<Result<_, _>>()?;
    let n = samples.len();
    let checked: Vec<usize> = if options.fraction >= 1.0 {
        (0..n).collect()
    } else {
        let k = ((n as f64 * options.fraction).ceil() as usize).clamp(1, n);
        let mut rng = ChaCha20Rng::seed_from_u64(options.seed);
        let mut rows = index::sample(&mut rng, n, k).into_vec();
        rows.sort_unstable();
        rows
    };
    let threshold = {
        let cap = cost_cap(f_star, epsilon);
        cap + 1e-6 * cap.abs()
    };
    let optimum = find_optimum(lp, options.solver)?;
    let base = SimplexSolver::new(&lp.with_cost_objective(), options.solver).map_err(MaaError::from)?;
    let outcomes: Vec<Result<f64, String>> = checked
        .par_iter()
        .map_init(
            || base.clone(),
            |solver, &row| {
                for (&c, &v) in columns.iter().zip(samples.row(row)) {
                    // Round-off can leave coordinates a hair below zero.
                    let v = v.max(lp.lower()[c]);
                    solver.set_bounds(c, v, v).map_err(|e| e.to_string())?;
                }
                // Same start for every row keeps costs independent of scheduling.
                solver.set_basis(&optimum.basis).map_err(|e| e.to_string())?;
                match solver.solve() {
                    Ok(s) if s.is_optimal() => Ok(s.objective_value),
                    Ok(s) if s.status == SolveStatus::Infeasible => Ok(f64::INFINITY),
                    Ok(s) => Err(format!("{:?}", s.status)),
                    Err(e) => Err(e.to_string()),
                }
            },
        )
        .collect();
    let mut report = VerificationReport {
        threshold,
        checked: checked.clone(),
        costs: Vec::with_capacity(checked.len()),
        verified: 0,
        violations: Vec::new(),
        indeterminate: Vec::new(),
    };
    for (&row, outcome) in checked.iter().zip(outcomes) {
        match outcome {
            Ok(cost) => {
                report.costs.push(cost);
                if cost <= threshold {
                    report.verified += 1;
                } else {
                    report.violations.push(Violation {
                        row,
                        cost,
                        excess: cost / threshold - 1.0,
                    });
                }
            }
            Err(reason) => {
                report.costs.push(f64::NAN);
                report.indeterminate.push((row, reason));
            }
        }
    }
    Ok(report)
}

/// Writes verified costs back into the sample set.
pub fn attach_costs(samples: &mut SampleSet, report: &VerificationReport) {
    let cost = samples.cost.get_or_insert_with(|| vec![f64::NAN; samples.matrix.len() / samples.variables.len().max(1)]);
    for (&row, &c) in report.checked.iter().zip(&report.costs) {
        cost[row] = c;
    }
}
