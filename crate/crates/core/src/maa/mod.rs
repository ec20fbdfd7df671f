//! Modeling All Alternatives: maps the near-optimal region of an LP,
//! projected onto its MGA variables, by growing a convex hull along
//! facet-normal search directions until its volume settles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexHull, GeometryError, HullOptions};
use crate::lp::{Basis, LpError, LpSolution, SimplexSolver, SolveStatus, SolverError, SolverOptions, SparseLp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaaError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{stage} solve ended {status:?}")]
    NotOptimal { stage: String, status: SolveStatus },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaaConfig {
    pub epsilon: f64,
    /// MGA tags spanning the explored space, in axis order.
    pub mga_variables: Vec<String>,
    pub volume_rel_tol: f64,
    pub max_iterations: usize,
    pub max_directions_per_iter: usize,
    /// Directions closer than this angle (radians) to a used one are skipped.
    pub angle_tol: f64,
    pub hull: HullOptions,
    pub feas_tol: f64,
    pub opt_tol: f64,
}

impl Default for MaaConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            mga_variables: crate::model::MGA_TAGS.iter().map(|s| s.to_string()).collect(),
            volume_rel_tol: 1e-2,
            max_iterations: 20,
            max_directions_per_iter: 64,
            angle_tol: 1e-6,
            hull: HullOptions::default(),
            feas_tol: crate::lp::DEFAULT_FEAS_TOL,
            opt_tol: crate::lp::DEFAULT_OPT_TOL,
        }
    }
}

impl MaaConfig {
    pub fn validate(&self) -> Result<(), MaaError> {
        let bad = |m: &str| Err(MaaError::Parameter(m.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive; at zero slack the region is the optimal face");
        }
        let d = self.mga_variables.len();
        if !(2..=8).contains(&d) {
            return Err(MaaError::Parameter(format!("need 2 to 8 MGA variables, got {d}")));
        }
        let mut seen = self.mga_variables.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != d {
            return bad("MGA variables must be distinct");
        }
        if !(self.volume_rel_tol > 0.0) {
            return bad("volume_rel_tol must be positive");
        }
        if self.max_iterations == 0 || self.max_directions_per_iter == 0 {
            return bad("iteration and direction budgets must be at least one");
        }
        if !(self.angle_tol >= 0.0) {
            return bad("angle_tol must be non-negative");
        }
        Ok(())
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            feas_tol: self.feas_tol,
            opt_tol: self.opt_tol,
            ..SolverOptions::default()
        }
    }
}

/// The cost-optimal solution and the basis it was found in.
#[derive(Debug, Clone)]
pub struct Optimum {
    pub solution: LpSolution,
    pub basis: Basis,
}

impl Optimum {
    pub fn f_star(&self) -> f64 {
        self.solution.objective_value
    }
}

/// Solves `lp` for its minimum system cost.
pub fn find_optimum(lp: &SparseLp, options: SolverOptions) -> Result<Optimum, MaaError> {
    let lp = lp.with_cost_objective();
    let mut solver = SimplexSolver::new(&lp, options)?;
    let solution = solver.solve()?;
    if !solution.is_optimal() {
        return Err(MaaError::NotOptimal {
            stage: "cost-optimal".into(),
            status: solution.status,
        });
    }
    Ok(Optimum {
        solution,
        basis: solver.basis(),
    })
}

/// `+e_1, -e_1, ..., +e_d, -e_d`.
pub fn initial_directions(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * d);
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut w = vec![0.0; d];
            w[i] = sign;
            out.push(w);
        }
    }
    out
}

/// Right-hand side of the cost cap for slack `epsilon`.
pub fn cost_cap(f_star: f64, epsilon: f64) -> f64 {
    f_star + epsilon * f_star.abs()
}

/// Minimizes weighted MGA sums over the cost-capped LP, always restarting
/// from the cost-optimal basis so results do not depend on solve order.
#[derive(Debug, Clone)]
pub struct DirectionSolver {
    solver: SimplexSolver,
    start: Basis,
    columns: Vec<usize>,
    n: usize,
}

impl DirectionSolver {
    pub fn new(
        lp: &SparseLp,
        optimum: &Optimum,
        epsilon: f64,
        columns: Vec<usize>,
        options: SolverOptions,
    ) -> Result<Self, MaaError> {
        let capped = lp.add_cost_cap(cost_cap(optimum.f_star(), epsilon));
        let solver = SimplexSolver::new(&capped, options)?;
        Ok(Self {
            solver,
            start: optimum.basis.with_extra_rows(1),
            columns,
            n: lp.n_vars(),
        })
    }

    /// Minimizes `w · x_mga`; returns the MGA coordinates and the full solution.
    pub fn solve(&mut self, w: &[f64]) -> Result<(Vec<f64>, LpSolution), MaaError> {
        if w.len() != self.columns.len() {
            return Err(MaaError::Parameter(format!(
                "direction has {} entries for {} MGA variables",
                w.len(),
                self.columns.len()
            )));
        }
        let mut objective = vec![0.0; self.n];
        for (&c, &wi) in self.columns.iter().zip(w) {
            objective[c] = wi;
        }
        self.solver.set_objective(&objective);
        self.solver.set_basis(&self.start)?;
        let solution = self.solver.solve()?;
        if !solution.is_optimal() {
            return Err(MaaError::NotOptimal {
                stage: "direction".into(),
                status: solution.status,
            });
        }
        let point = self.columns.iter().map(|&c| solution.x[c]).collect();
        Ok((point, solution))
    }
}

/// One-shot direction solve on an LP that already carries its cost cap.
pub fn direction_solve(capped_lp: &SparseLp, columns: &[usize], w: &[f64], options: SolverOptions) -> Result<Vec<f64>, MaaError> {
    let mut objective = vec![0.0; capped_lp.n_vars()];
    for (&c, &wi) in columns.iter().zip(w) {
        objective[c] = wi;
    }
    let lp = capped_lp.with_objective_vector(objective)?;
    let mut solver = SimplexSolver::new(&lp, options)?;
    let solution = solver.solve()?;
    if !solution.is_optimal() {
        return Err(MaaError::NotOptimal {
            stage: "direction".into(),
            status: solution.status,
        });
    }
    Ok(columns.iter().map(|&c| solution.x[c]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub directions: usize,
    pub new_points: usize,
    pub rank: usize,
    pub volume: f64,
    pub simplex_iterations: usize,
}

/// Outcome of an MAA run. Serializes as the hull export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaaResult {
    pub config: MaaConfig,
    pub f_star: f64,
    pub cap: f64,
    /// MGA coordinates of the cost optimum.
    pub optimum: Vec<f64>,
    pub hull: ConvexHull,
    /// Every point handed to the hull, in discovery order.
    pub points: Vec<Vec<f64>>,
    /// Search weights in the order they were solved (minimized).
    pub directions: Vec<Vec<f64>>,
    pub volume_trace: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

impl MaaResult {
    pub fn volume(&self) -> f64 {
        self.hull.volume
    }
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    2.0 * (d / 2.0).min(1.0).asin()
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

/// Next batch of search weights: probes along flat directions first (both
/// signs), then outward facet normals by decreasing facet size.
fn next_directions(hull: &ConvexHull, used: &[Vec<f64>], config: &MaaConfig) -> Vec<Vec<f64>> {
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for f in &hull.flat_directions {
        candidates.push(f.clone());
        candidates.push(f.iter().map(|v| -v).collect());
    }
    let mut order: Vec<usize> = (0..hull.facets.len()).collect();
    order.sort_by(|&a, &b| hull.facets[b].size.total_cmp(&hull.facets[a].size).then(a.cmp(&b)));
    for i in order {
        // Minimizing -n.x pushes the hull outward through the facet.
        candidates.push(hull.facets[i].normal.iter().map(|v| -v).collect());
    }
    let mut picked: Vec<Vec<f64>> = Vec::new();
    for c in candidates {
        let Some(w) = unit(&c) else { continue };
        let near = |u: &Vec<f64>| angle(u, &w) < config.angle_tol;
        if used.iter().any(near) || picked.iter().any(near) {
            continue;
        }
        picked.push(w);
        if picked.len() == config.max_directions_per_iter {
            break;
        }
    }
    picked
}

fn solve_batch(
    base: &DirectionSolver,
    directions: &[Vec<f64>],
) -> Result<Vec<(Vec<f64>, usize)>, MaaError> {
    directions
        .par_iter()
        .map_init(
            || base.clone(),
            |solver, w| solver.solve(w).map(|(p, s)| (p, s.iterations)),
        )
        .collect()
}

/// Runs MAA from scratch: optimum, then hull iterations.
pub fn run_maa(lp: &SparseLp, config: &MaaConfig) -> Result<MaaResult, MaaError> {
    config.validate()?;
    let optimum = find_optimum(lp, config.solver_options())?;
    run_maa_from(lp, &optimum, config)
}

/// Runs MAA around a known optimum of `lp`.
pub fn run_maa_from(lp: &SparseLp, optimum: &Optimum, config: &MaaConfig) -> Result<MaaResult, MaaError> {
    config.validate()?;
    let columns: Vec<usize> = config
        .mga_variables
        .iter()
        .map(|t| lp.mga_column(t))
        .collect::<Result<_, _>>()?;
    let d = columns.len();
    let f_star = optimum.f_star();
    let cap = cost_cap(f_star, config.epsilon);
    let base = DirectionSolver::new(lp, optimum, config.epsilon, columns.clone(), config.solver_options())?;
    let start: Vec<f64> = columns.iter().map(|&c| optimum.solution.x[c]).collect();

    let mut points = vec![start.clone()];
    let mut used: Vec<Vec<f64>> = Vec::new();
    let mut trace = Vec::new();
    let mut records = Vec::new();
    let mut hull: Option<ConvexHull> = None;
    let mut converged = false;
    let mut batch = initial_directions(d);

    for iteration in 0..config.max_iterations {
        if batch.is_empty() {
            converged = true;
            break;
        }
        let results = solve_batch(&base, &batch)?;
        let simplex_iterations = results.iter().map(|r| r.1).sum();
        let mut fresh = 0;
        for (p, _) in results {
            let outside = match &hull {
                None => !points.contains(&p),
                Some(h) => !h.contains(&p),
            };
            if outside {
                points.push(p);
                fresh += 1;
            }
        }
        used.extend(batch.iter().cloned());
        let previous = hull.as_ref().map(|h| (h.volume, h.rank));
        if fresh > 0 || hull.is_none() {
            hull = Some(ConvexHull::collapsing(&points, config.hull)?);
        }
        let current = hull.as_ref().expect("hull built above");
        trace.push(current.volume);
        records.push(IterationRecord {
            directions: batch.len(),
            new_points: fresh,
            rank: current.rank,
            volume: current.volume,
            simplex_iterations,
        });
        log::info!(
            "maa iteration {iteration}: {} directions, {fresh} new points, rank {}, volume {:.6e}",
            batch.len(),
            current.rank,
            current.volume
        );
        if let Some((v_prev, r_prev)) = previous {
            let settled = if current.volume > 0.0 {
                (current.volume - v_prev).abs() / current.volume < config.volume_rel_tol
            } else {
                v_prev == 0.0
            };
            if settled && r_prev == current.rank {
                converged = true;
                break;
            }
        }
        batch = next_directions(current, &used, config);
    }
    let hull = hull.expect("at least one iteration ran");
    Ok(MaaResult {
        config: config.clone(),
        f_star,
        cap,
        optimum: start,
        hull,
        points,
        directions: used,
        volume_trace: trace,
        iterations: records,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_directions_are_signed_axes() {
        let dirs = initial_directions(2);
        assert_eq!(dirs, vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        assert_eq!(initial_directions(5).len(), 10);
        for w in initial_directions(5) {
            assert_eq!(w.iter().map(|v| v * v).sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn config_rejects_zero_slack() {
        let c = MaaConfig {
            epsilon: 0.0,
            ..MaaConfig::default()
        };
        assert!(matches!(c.validate(), Err(MaaError::Parameter(_))));
        let c = MaaConfig {
            mga_variables: vec!["pv".into()],
            ..MaaConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn angles() {
        assert!(angle(&[1.0, 0.0], &[1.0, 0.0]) == 0.0);
        assert!((angle(&[1.0, 0.0], &[0.0, 1.0]) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((angle(&[1.0, 0.0], &[-1.0, 0.0]) - std::f64::consts::PI).abs() < 1e-12);
    }
}
