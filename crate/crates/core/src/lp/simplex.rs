//! Bounded-variable primal revised simplex.
//!
//! Every row `i` gets a slack `s_i` with `a_i.x + s_i = b_i`, so the problem
//! handled internally is `A x + s = b` with bounds on both `x` and `s`. Phase 1
//! minimizes the sum of bound violations of the basic variables from whatever
//! basis the solver holds; phase 2 minimizes the objective. Pricing is Devex
//! with lowest-index tie-breaking; after a run of degenerate pivots the solver
//! switches to Bland's rule until it makes progress again.

use serde::{Deserialize, Serialize};

use super::lu::{BasisFactor, SparseLu};
use super::{LpError, LpSolution, RowSense, SolveStatus, SolverError, SparseLp};

const PIVOT_TOL: f64 = 1e-9;
const DEVEX_RESET: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// Hard iteration cap; `None` picks a limit from the problem size.
    pub max_iterations: Option<usize>,
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots tolerated before Bland's rule kicks in.
    pub degenerate_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: super::DEFAULT_FEAS_TOL,
            opt_tol: super::DEFAULT_OPT_TOL,
            max_iterations: None,
            refactor_interval: 100,
            degenerate_limit: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Simplex basis over structural columns followed by one slack per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

impl Basis {
    /// Extends a basis with basic slacks for `extra` rows appended to the problem.
    pub fn with_extra_rows(&self, extra: usize) -> Basis {
        let mut status = self.status.clone();
        status.extend(std::iter::repeat(VarStatus::Basic).take(extra));
        Basis { status }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexSolver {
    opts: SolverOptions,
    n: usize,
    m: usize,
    // Scaled structural matrix, column- and row-major.
    col_ptr: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_ptr: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    rhs: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    col_scale: Vec<f64>,
    row_scale: Vec<f64>,
    obj_scale: f64,
    orig_objective: Vec<f64>,
    // Iteration state.
    status: Vec<VarStatus>,
    basic: Vec<usize>,
    pos_of: Vec<usize>,
    x: Vec<f64>,
    factor: Option<BasisFactor>,
    devex: Vec<f64>,
    iterations: usize,
}

enum Phase {
    One,
    Two,
}

enum Step {
    Unbounded,
    Progress { degenerate: bool },
}

impl SimplexSolver {
    pub fn new(lp: &SparseLp, opts: SolverOptions) -> Result<Self, SolverError> {
        if !(opts.feas_tol > 0.0 && opts.opt_tol > 0.0) {
            return Err(LpError::Parameter("tolerances must be positive".into()).into());
        }
        let n = lp.n_vars();
        let m = lp.n_rows();
        let (row_scale, col_scale) = equilibrate(n, m, lp.entries());

        let mut col_count = vec![0usize; n];
        for &(_, c, _) in lp.entries() {
            col_count[c] += 1;
        }
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + col_count[j];
        }
        let nnz = lp.entries().len();
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut fill = col_ptr.clone();
        let mut row_ptr = vec![0usize; m + 1];
        let mut row_col = Vec::with_capacity(nnz);
        let mut row_val = Vec::with_capacity(nnz);
        // Entries are sorted by (row, col), so the row-major copy is direct.
        for &(r, c, v) in lp.entries() {
            let sv = v * row_scale[r] * col_scale[c];
            col_row[fill[c]] = r;
            col_val[fill[c]] = sv;
            fill[c] += 1;
            row_col.push(c);
            row_val.push(sv);
            row_ptr[r + 1] += 1;
        }
        for i in 0..m {
            row_ptr[i + 1] += row_ptr[i];
        }

        let mut lb = Vec::with_capacity(n + m);
        let mut ub = Vec::with_capacity(n + m);
        for j in 0..n {
            lb.push(lp.lower()[j] / col_scale[j]);
            ub.push(lp.upper()[j] / col_scale[j]);
        }
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in lp.rows().iter().enumerate() {
            rhs.push(row.rhs * row_scale[i]);
            let (l, u) = match row.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lb.push(l);
            ub.push(u);
        }

        let mut solver = Self {
            opts,
            n,
            m,
            col_ptr,
            col_row,
            col_val,
            row_ptr,
            row_col,
            row_val,
            rhs,
            lb,
            ub,
            cost: vec![0.0; n + m],
            col_scale,
            row_scale,
            obj_scale: 1.0,
            orig_objective: Vec::new(),
            status: Vec::new(),
            basic: Vec::new(),
            pos_of: Vec::new(),
            x: vec![0.0; n + m],
            factor: None,
            devex: vec![1.0; n + m],
            iterations: 0,
        };
        solver.set_objective(lp.objective());
        solver.reset_to_slack_basis();
        Ok(solver)
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Replaces the minimized objective (unscaled coefficients).
    pub fn set_objective(&mut self, objective: &[f64]) {
        assert_eq!(objective.len(), self.n);
        self.orig_objective = objective.to_vec();
        let max = objective
            .iter()
            .zip(&self.col_scale)
            .fold(0.0f64, |acc, (c, s)| acc.max((c * s).abs()));
        self.obj_scale = if max > 0.0 { pow2(1.0 / max) } else { 1.0 };
        for j in 0..self.n {
            self.cost[j] = objective[j] * self.col_scale[j] * self.obj_scale;
        }
    }

    /// Restricts structural column `col` to `[lower, upper]` (unscaled).
    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        if col >= self.n {
            return Err(LpError::IndexOutOfRange {
                row: 0,
                col,
                rows: self.m,
                cols: self.n,
            });
        }
        if lower > upper {
            return Err(LpError::InvalidBounds { col, lower, upper });
        }
        self.lb[col] = lower / self.col_scale[col];
        self.ub[col] = upper / self.col_scale[col];
        if self.status[col] != VarStatus::Basic {
            self.status[col] = nonbasic_status(self.lb[col], self.ub[col]);
            self.x[col] = nonbasic_value(self.status[col], self.lb[col], self.ub[col]);
        }
        Ok(())
    }

    pub fn basis(&self) -> Basis {
        Basis {
            status: self.status.clone(),
        }
    }

    /// Installs a starting basis; statuses are clamped to the current bounds.
    pub fn set_basis(&mut self, basis: &Basis) -> Result<(), LpError> {
        if basis.status.len() != self.n + self.m {
            return Err(LpError::Parameter(format!(
                "basis has {} entries, problem has {}",
                basis.status.len(),
                self.n + self.m
            )));
        }
        let n_basic = basis.status.iter().filter(|s| **s == VarStatus::Basic).count();
        if n_basic != self.m {
            return Err(LpError::Parameter(format!(
                "basis has {n_basic} basic variables for {} rows",
                self.m
            )));
        }
        self.status = basis.status.clone();
        for j in 0..self.n + self.m {
            let s = self.status[j];
            if s != VarStatus::Basic {
                let fixed = match s {
                    VarStatus::AtLower if self.lb[j].is_finite() => s,
                    VarStatus::AtUpper if self.ub[j].is_finite() => s,
                    VarStatus::Free if !self.lb[j].is_finite() && !self.ub[j].is_finite() => s,
                    _ => nonbasic_status(self.lb[j], self.ub[j]),
                };
                self.status[j] = fixed;
                self.x[j] = nonbasic_value(fixed, self.lb[j], self.ub[j]);
            }
        }
        self.rebuild_positions();
        self.factor = None;
        self.devex.iter_mut().for_each(|w| *w = 1.0);
        Ok(())
    }

    fn reset_to_slack_basis(&mut self) {
        self.status = Vec::with_capacity(self.n + self.m);
        for j in 0..self.n {
            let s = nonbasic_status(self.lb[j], self.ub[j]);
            self.status.push(s);
            self.x[j] = nonbasic_value(s, self.lb[j], self.ub[j]);
        }
        self.status.extend(std::iter::repeat(VarStatus::Basic).take(self.m));
        self.rebuild_positions();
        self.factor = None;
    }

    fn rebuild_positions(&mut self) {
        self.basic.clear();
        self.pos_of = vec![usize::MAX; self.n + self.m];
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                self.pos_of[j] = self.basic.len();
                self.basic.push(j);
            }
        }
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            (self.col_ptr[j]..self.col_ptr[j + 1])
                .map(|k| (self.col_row[k], self.col_val[k]))
                .collect()
        } else {
            vec![(j - self.n, 1.0)]
        }
    }

    fn scatter_column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                out[self.col_row[k]] = self.col_val[k];
            }
        } else {
            out[j - self.n] = 1.0;
        }
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            (self.col_ptr[j]..self.col_ptr[j + 1])
                .map(|k| self.col_val[k] * y[self.col_row[k]])
                .sum()
        } else {
            y[j - self.n]
        }
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        for _attempt in 0..3 {
            let cols: Vec<Vec<(usize, f64)>> = self.basic.iter().map(|&j| self.column(j)).collect();
            match SparseLu::factorize(self.m, &cols) {
                Ok(lu) => {
                    self.factor = Some(BasisFactor::new(lu));
                    self.compute_basic_values();
                    return Ok(());
                }
                Err(sing) => {
                    // Swap unpivoted columns for the slacks of unpivoted rows.
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.basic[pos];
                        let s = nonbasic_status(self.lb[out], self.ub[out]);
                        self.status[out] = s;
                        self.x[out] = nonbasic_value(s, self.lb[out], self.ub[out]);
                        let slack = self.n + row;
                        self.status[slack] = VarStatus::Basic;
                    }
                    self.rebuild_positions();
                }
            }
        }
        Err(SolverError::Numerical {
            iterations: self.iterations,
            reason: "basis repeatedly singular".into(),
        })
    }

    fn compute_basic_values(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                if j < self.n {
                    for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                        r[self.col_row[k]] -= self.col_val[k] * xj;
                    }
                } else {
                    r[j - self.n] -= xj;
                }
            }
        }
        self.factor.as_mut().expect("factorized").ftran(&mut r);
        for (p, &j) in self.basic.iter().enumerate() {
            self.x[j] = r[p];
        }
    }

    fn infeasibility(&self) -> f64 {
        let tol = self.opts.feas_tol;
        self.basic
            .iter()
            .map(|&j| {
                let v = self.x[j];
                if v < self.lb[j] - tol {
                    self.lb[j] - v
                } else if v > self.ub[j] + tol {
                    v - self.ub[j]
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn max_iterations(&self) -> usize {
        self.opts
            .max_iterations
            .unwrap_or(50_000 + 20 * (self.n + self.m))
    }

    /// Solves from the currently held basis (a slack basis for a fresh solver).
    pub fn solve(&mut self) -> Result<LpSolution, SolverError> {
        self.iterations = 0;
        self.refactor()?;
        let limit = self.max_iterations();
        let mut bland = false;
        let mut degenerate_run = 0usize;
        let mut verified = false;
        // Phase-2 reduced costs are carried across pivots and only recomputed
        // after refactorization or when phase 1 is active.
        let mut d_valid = false;
        let mut y = vec![0.0; self.m];
        let mut d = vec![0.0; self.n + self.m];
        let mut alpha = vec![0.0; self.m];
        let mut rho = vec![0.0; self.m];
        let mut alpha_row = vec![0.0; self.n + self.m];

        loop {
            if self.iterations >= limit {
                return Err(SolverError::Stalled {
                    iterations: self.iterations,
                });
            }
            if self.factor.as_ref().expect("factorized").needs_refactor(self.opts.refactor_interval) {
                self.refactor()?;
                d_valid = false;
            }
            let phase = if self.infeasibility() > 0.0 {
                Phase::One
            } else {
                Phase::Two
            };
            if matches!(phase, Phase::One) || !d_valid {
                self.price(&phase, &mut y, &mut d);
                d_valid = matches!(phase, Phase::Two);
            }
            let entering = self.choose_entering(&d, bland);
            let Some(q) = entering else {
                // Confirm on a fresh factorization before declaring a verdict.
                if !verified {
                    verified = true;
                    self.refactor()?;
                    d_valid = false;
                    continue;
                }
                return Ok(match phase {
                    Phase::One => self.finish(SolveStatus::Infeasible),
                    Phase::Two => self.finish(SolveStatus::Optimal),
                });
            };
            verified = false;
            let update_d = matches!(phase, Phase::Two);
            match self.pivot(q, &mut d, update_d, &phase, bland, &mut alpha, &mut rho, &mut alpha_row)? {
                Step::Unbounded => match phase {
                    Phase::Two => return Ok(self.finish(SolveStatus::Unbounded)),
                    Phase::One => {
                        // Phase 1 is bounded below; treat as numerical trouble.
                        self.refactor()?;
                        d_valid = false;
                        bland = true;
                    }
                },
                Step::Progress { degenerate } => {
                    if degenerate {
                        degenerate_run += 1;
                        if degenerate_run > self.opts.degenerate_limit {
                            bland = true;
                        }
                    } else {
                        degenerate_run = 0;
                        bland = false;
                    }
                }
            }
            self.iterations += 1;
        }
    }

    fn phase_cost(&self, j: usize, phase: &Phase) -> f64 {
        match phase {
            Phase::Two => self.cost[j],
            Phase::One => {
                if self.status[j] != VarStatus::Basic {
                    return 0.0;
                }
                let tol = self.opts.feas_tol;
                let v = self.x[j];
                if v < self.lb[j] - tol {
                    -1.0
                } else if v > self.ub[j] + tol {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn price(&mut self, phase: &Phase, y: &mut [f64], d: &mut [f64]) {
        for (p, &j) in self.basic.iter().enumerate() {
            y[p] = self.phase_cost(j, phase);
        }
        self.factor.as_mut().expect("factorized").btran(y);
        for j in 0..self.n + self.m {
            d[j] = if self.status[j] == VarStatus::Basic {
                0.0
            } else {
                self.phase_cost(j, phase) - self.col_dot(j, y)
            };
        }
    }

    fn choose_entering(&self, d: &[f64], bland: bool) -> Option<usize> {
        let tol = self.opts.opt_tol;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n + self.m {
            let eligible = match self.status[j] {
                VarStatus::Basic => false,
                _ if self.lb[j] == self.ub[j] => false,
                VarStatus::AtLower => d[j] < -tol,
                VarStatus::AtUpper => d[j] > tol,
                VarStatus::Free => d[j].abs() > tol,
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some(j);
            }
            let score = d[j] * d[j] / self.devex[j];
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    #[allow(clippy::too_many_arguments)]
    fn pivot(
        &mut self,
        q: usize,
        d: &mut [f64],
        update_d: bool,
        phase: &Phase,
        bland: bool,
        alpha: &mut [f64],
        rho: &mut [f64],
        alpha_row: &mut [f64],
    ) -> Result<Step, SolverError> {
        let tol = self.opts.feas_tol;
        let dir = if d[q] < 0.0 { 1.0 } else { -1.0 };
        self.scatter_column(q, alpha);
        self.factor.as_mut().expect("factorized").ftran(alpha);

        // Ratio test (Harris two-pass unless in Bland mode).
        let phase_one = matches!(phase, Phase::One);
        let mut theta_max = f64::INFINITY;
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new(); // (pos, exact ratio, bound)
        for p in 0..self.m {
            let a = alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basic[p];
            let rate = -dir * a;
            let v = self.x[j];
            let (lo, hi) = if phase_one {
                if v < self.lb[j] - tol {
                    (f64::NEG_INFINITY, self.lb[j])
                } else if v > self.ub[j] + tol {
                    (self.ub[j], f64::INFINITY)
                } else {
                    (self.lb[j], self.ub[j])
                }
            } else {
                (self.lb[j], self.ub[j])
            };
            let (bound, gap) = if rate < 0.0 {
                if lo == f64::NEG_INFINITY {
                    continue;
                }
                (lo, v - lo)
            } else {
                if hi == f64::INFINITY {
                    continue;
                }
                (hi, hi - v)
            };
            let exact = gap.max(0.0) / rate.abs();
            let relaxed = (gap + tol) / rate.abs();
            if bland {
                theta_max = theta_max.min(exact);
            } else {
                theta_max = theta_max.min(relaxed);
            }
            candidates.push((p, exact, bound));
        }
        let range = self.ub[q] - self.lb[q];
        if range <= theta_max {
            if range.is_infinite() {
                return Ok(Step::Unbounded);
            }
            // Bound flip: the entering variable crosses to its opposite bound.
            for p in 0..self.m {
                let j = self.basic[p];
                self.x[j] -= dir * range * alpha[p];
            }
            if dir > 0.0 {
                self.status[q] = VarStatus::AtUpper;
                self.x[q] = self.ub[q];
            } else {
                self.status[q] = VarStatus::AtLower;
                self.x[q] = self.lb[q];
            }
            return Ok(Step::Progress { degenerate: false });
        }
        if theta_max.is_infinite() {
            return Ok(Step::Unbounded);
        }
        let mut leave: Option<(usize, f64, f64)> = None;
        for &(p, exact, bound) in &candidates {
            if bland {
                if exact <= theta_max + 1e-15 {
                    let better = match leave {
                        None => true,
                        Some((lp, _, _)) => self.basic[p] < self.basic[lp],
                    };
                    if better {
                        leave = Some((p, exact, bound));
                    }
                }
            } else if exact <= theta_max {
                let better = match leave {
                    None => true,
                    Some((lp, _, _)) => {
                        let (a, b) = (alpha[p].abs(), alpha[lp].abs());
                        a > b || (a == b && self.basic[p] < self.basic[lp])
                    }
                };
                if better {
                    leave = Some((p, exact, bound));
                }
            }
        }
        let Some((p, theta, bound)) = leave else {
            return Err(SolverError::Numerical {
                iterations: self.iterations,
                reason: "ratio test found no leaving variable".into(),
            });
        };

        // Pivot row: drives the Devex weights and the reduced-cost update.
        rho.iter_mut().for_each(|v| *v = 0.0);
        rho[p] = 1.0;
        self.factor.as_mut().expect("factorized").btran(rho);
        alpha_row.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.m {
            let r = rho[i];
            if r == 0.0 {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                alpha_row[self.row_col[k]] += r * self.row_val[k];
            }
            alpha_row[self.n + i] = r;
        }
        let apq = alpha[p];
        let leaving = self.basic[p];
        if !bland {
            let wq = self.devex[q];
            let mut reset = false;
            for j in 0..self.n + self.m {
                if self.status[j] == VarStatus::Basic || j == q {
                    continue;
                }
                let ratio = alpha_row[j] / apq;
                let w = (ratio * ratio * wq).max(self.devex[j]);
                self.devex[j] = w;
                if w > DEVEX_RESET {
                    reset = true;
                }
            }
            self.devex[leaving] = (wq / (apq * apq)).max(1.0);
            if reset {
                self.devex.iter_mut().for_each(|w| *w = 1.0);
            }
        }
        let dq = d[q];
        if update_d {
            let step = dq / apq;
            for j in 0..self.n + self.m {
                if self.status[j] != VarStatus::Basic || j == leaving {
                    d[j] -= step * alpha_row[j];
                }
            }
            d[q] = 0.0;
        }

        // Primal update.
        for r in 0..self.m {
            let j = self.basic[r];
            self.x[j] -= dir * theta * alpha[r];
        }
        self.x[q] += dir * theta;
        self.x[leaving] = bound;
        self.status[leaving] = if bound == self.lb[leaving] {
            VarStatus::AtLower
        } else {
            VarStatus::AtUpper
        };
        self.pos_of[leaving] = usize::MAX;
        self.status[q] = VarStatus::Basic;
        self.basic[p] = q;
        self.pos_of[q] = p;
        self.factor.as_mut().expect("factorized").update(p, alpha);
        let degenerate = theta * dq.abs() <= 1e-12;
        Ok(Step::Progress { degenerate })
    }

    fn finish(&self, status: SolveStatus) -> LpSolution {
        let x: Vec<f64> = (0..self.n).map(|j| self.x[j] * self.col_scale[j]).collect();
        let objective_value = super::dot(&self.orig_objective, &x);
        LpSolution {
            status,
            x,
            objective_value,
            iterations: self.iterations,
        }
    }

    /// Row scaling factors applied internally (powers of two).
    pub fn row_scale(&self) -> &[f64] {
        &self.row_scale
    }
}

fn nonbasic_status(lb: f64, ub: f64) -> VarStatus {
    if lb.is_finite() {
        VarStatus::AtLower
    } else if ub.is_finite() {
        VarStatus::AtUpper
    } else {
        VarStatus::Free
    }
}

fn nonbasic_value(s: VarStatus, lb: f64, ub: f64) -> f64 {
    match s {
        VarStatus::AtLower => lb,
        VarStatus::AtUpper => ub,
        _ => 0.0,
    }
}

fn pow2(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return 1.0;
    }
    2f64.powi(v.log2().round() as i32)
}

/// Geometric-mean equilibration; returns (row, column) factors as powers of two.
fn equilibrate(n: usize, m: usize, entries: &[(usize, usize, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut rs = vec![1.0; m];
    let mut cs = vec![1.0; n];
    for _pass in 0..6 {
        let mut rmax = vec![0.0f64; m];
        let mut rmin = vec![f64::INFINITY; m];
        for &(r, c, v) in entries {
            let a = (v * cs[c]).abs();
            rmax[r] = rmax[r].max(a);
            rmin[r] = rmin[r].min(a);
        }
        for i in 0..m {
            if rmax[i] > 0.0 {
                rs[i] = 1.0 / (rmax[i] * rmin[i]).sqrt();
            }
        }
        let mut cmax = vec![0.0f64; n];
        let mut cmin = vec![f64::INFINITY; n];
        for &(r, c, v) in entries {
            let a = (v * rs[r]).abs();
            cmax[c] = cmax[c].max(a);
            cmin[c] = cmin[c].min(a);
        }
        for j in 0..n {
            if cmax[j] > 0.0 {
                cs[j] = 1.0 / (cmax[j] * cmin[j]).sqrt();
            }
        }
    }
    // Final pass: rows scaled so their largest entry is about one.
    let mut rmax = vec![0.0f64; m];
    for &(r, c, v) in entries {
        rmax[r] = rmax[r].max((v * cs[c]).abs());
    }
    for i in 0..m {
        if rmax[i] > 0.0 {
            rs[i] = 1.0 / rmax[i];
        }
    }
    (
        rs.into_iter().map(pow2).collect(),
        cs.into_iter().map(pow2).collect(),
    )
}
