//! Sparse linear programs and a bounded-variable revised simplex solver.
//!
//! A [`SparseLp`] is immutable once built. Problems are assembled with an
//! [`LpBuilder`], solved with [`solve`] (or a reusable [`SimplexSolver`] when
//! warm starts matter), and transformed for near-optimal exploration with
//! [`SparseLp::add_cost_cap`] and [`SparseLp::with_objective`].

pub mod lu;
pub mod mps;
mod simplex;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use simplex::{Basis, SimplexSolver, SolverOptions, VarStatus};

/// Default absolute primal feasibility tolerance (on scaled rows).
pub const DEFAULT_FEAS_TOL: f64 = 1e-7;
/// Default reduced-cost optimality tolerance.
pub const DEFAULT_OPT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("entry ({row}, {col}) out of range for a {rows}x{cols} problem")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("column {col} has lower bound {lower} above upper bound {upper}")]
    InvalidBounds { col: usize, lower: f64, upper: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("unknown MGA variable `{0}`")]
    UnknownTag(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("simplex stalled after {iterations} iterations")]
    Stalled { iterations: usize },
    #[error("numerical failure after {iterations} iterations: {reason}")]
    Numerical { iterations: usize, reason: String },
    #[error(transparent)]
    Problem(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A linear program `min c.x  s.t.  A x (<=,=,>=) b,  l <= x <= u`.
///
/// `objective` is what gets minimized; `cost` is the system-cost vector the
/// problem was built with and is what cost caps constrain. The two only differ
/// after [`SparseLp::with_objective`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseLp {
    objective: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    column_labels: Vec<String>,
    mga_tags: BTreeMap<String, usize>,
    rows: Vec<Row>,
    /// Canonical triplets sorted by (row, col) without duplicates or zeros.
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Incremental construction of a [`SparseLp`].
#[derive(Debug, Default, Clone)]
pub struct LpBuilder {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    labels: Vec<String>,
    mga_tags: BTreeMap<String, usize>,
    rows: Vec<Row>,
    entries: Vec<(usize, usize, f64)>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_column(&mut self, label: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.labels.push(label.into());
        self.cost.len() - 1
    }

    pub fn tag_mga(&mut self, col: usize, tag: impl Into<String>) {
        self.mga_tags.insert(tag.into(), col);
    }

    pub fn add_row(&mut self, label: impl Into<String>, sense: RowSense, rhs: f64, coeffs: &[(usize, f64)]) -> usize {
        let r = self.rows.len();
        self.rows.push(Row {
            label: label.into(),
            sense,
            rhs,
        });
        self.entries.extend(coeffs.iter().map(|&(c, v)| (r, c, v)));
        r
    }

    pub fn num_columns(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn build(self) -> Result<SparseLp, LpError> {
        SparseLp::from_parts(
            self.cost.clone(),
            self.cost,
            self.lower,
            self.upper,
            self.labels,
            self.mga_tags,
            self.rows,
            self.entries,
        )
    }
}

impl SparseLp {
    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        objective: Vec<f64>,
        cost: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        column_labels: Vec<String>,
        mga_tags: BTreeMap<String, usize>,
        rows: Vec<Row>,
        entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        let m = rows.len();
        if cost.len() != n || lower.len() != n || upper.len() != n || column_labels.len() != n {
            return Err(LpError::Parameter("column vectors differ in length".into()));
        }
        for j in 0..n {
            if !objective[j].is_finite() || !cost[j].is_finite() {
                return Err(LpError::NonFinite(format!("objective of column {j}")));
            }
            if lower[j] > upper[j] || lower[j] == f64::INFINITY || upper[j] == f64::NEG_INFINITY {
                return Err(LpError::InvalidBounds {
                    col: j,
                    lower: lower[j],
                    upper: upper[j],
                });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of row {i}")));
            }
        }
        for (_, &col) in &mga_tags {
            if col >= n {
                return Err(LpError::IndexOutOfRange {
                    row: 0,
                    col,
                    rows: m,
                    cols: n,
                });
            }
        }
        let mut entries = entries;
        for &(r, c, v) in &entries {
            if r >= m || c >= n {
                return Err(LpError::IndexOutOfRange {
                    row: r,
                    col: c,
                    rows: m,
                    cols: n,
                });
            }
            if !v.is_finite() {
                return Err(LpError::NonFinite(format!("entry ({r}, {c})")));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut canon: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match canon.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => canon.push((r, c, v)),
            }
        }
        canon.retain(|e| e.2 != 0.0);
        Ok(Self {
            objective,
            cost,
            lower,
            upper,
            column_labels,
            mga_tags,
            rows,
            entries: canon,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn column_labels(&self) -> &[String] {
        &self.column_labels
    }

    pub fn mga_tags(&self) -> &BTreeMap<String, usize> {
        &self.mga_tags
    }

    pub fn mga_column(&self, tag: &str) -> Result<usize, LpError> {
        self.mga_tags
            .get(tag)
            .copied()
            .ok_or_else(|| LpError::UnknownTag(tag.to_string()))
    }

    /// `c.x` for the minimized objective.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// `cost.x`, the system cost regardless of the current objective.
    pub fn cost_at(&self, x: &[f64]) -> f64 {
        dot(&self.cost, x)
    }

    /// Row activities `A x`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.rows.len()];
        for &(r, c, v) in &self.entries {
            act[r] += v * x[c];
        }
        act
    }

    /// Largest absolute violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let act = self.activities(x);
        let mut worst: f64 = 0.0;
        for (row, a) in self.rows.iter().zip(&act) {
            let v = match row.sense {
                RowSense::Le => a - row.rhs,
                RowSense::Ge => row.rhs - a,
                RowSense::Eq => (a - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }

    /// The same problem with one extra row `cost.x <= cap`.
    pub fn add_cost_cap(&self, cap: f64) -> SparseLp {
        let mut lp = self.clone();
        let r = lp.rows.len();
        lp.rows.push(Row {
            label: "cost_cap".into(),
            sense: RowSense::Le,
            rhs: cap,
        });
        lp.entries.extend(
            self.cost
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(j, &c)| (r, j, c)),
        );
        lp
    }

    /// The same constraints with the objective replaced by a weighted sum of MGA columns.
    pub fn with_objective(&self, weights: &BTreeMap<String, f64>) -> Result<SparseLp, LpError> {
        let mut objective = vec![0.0; self.n_vars()];
        for (tag, &w) in weights {
            if !w.is_finite() {
                return Err(LpError::NonFinite(format!("weight for `{tag}`")));
            }
            objective[self.mga_column(tag)?] = w;
        }
        let mut lp = self.clone();
        lp.objective = objective;
        Ok(lp)
    }

    /// The same constraints with an explicit dense objective vector.
    pub fn with_objective_vector(&self, objective: Vec<f64>) -> Result<SparseLp, LpError> {
        if objective.len() != self.n_vars() {
            return Err(LpError::Parameter(format!(
                "objective has {} entries for {} columns",
                objective.len(),
                self.n_vars()
            )));
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        let mut lp = self.clone();
        lp.objective = objective;
        Ok(lp)
    }

    /// The same problem with the minimized objective reset to the system cost.
    pub fn with_cost_objective(&self) -> SparseLp {
        let mut lp = self.clone();
        lp.objective = lp.cost.clone();
        lp
    }

    /// The same problem with column `col` restricted to `[lower, upper]`.
    pub fn with_bounds(&self, col: usize, lower: f64, upper: f64) -> Result<SparseLp, LpError> {
        if col >= self.n_vars() {
            return Err(LpError::IndexOutOfRange {
                row: 0,
                col,
                rows: self.n_rows(),
                cols: self.n_vars(),
            });
        }
        if lower > upper {
            return Err(LpError::InvalidBounds { col, lower, upper });
        }
        let mut lp = self.clone();
        lp.lower[col] = lower;
        lp.upper[col] = upper;
        Ok(lp)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Solves `lp` from a slack basis.
///
/// Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; only numerical breakdown produces an error.
pub fn solve(lp: &SparseLp, feas_tol: f64, opt_tol: f64) -> Result<LpSolution, SolverError> {
    let options = SolverOptions {
        feas_tol,
        opt_tol,
        ..SolverOptions::default()
    };
    let mut solver = SimplexSolver::new(lp, options)?;
    solver.solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SparseLp {
        let mut b = LpBuilder::new();
        let x = b.add_column("x", 1.0, 0.0, f64::INFINITY);
        let y = b.add_column("y", 2.0, 0.0, f64::INFINITY);
        b.tag_mga(x, "pv");
        b.tag_mga(y, "wind");
        b.add_row("demand", RowSense::Ge, 1.0, &[(x, 1.0), (y, 1.0)]);
        b.build().unwrap()
    }

    #[test]
    fn duplicate_triplets_are_merged() {
        let mut b = LpBuilder::new();
        let x = b.add_column("x", 1.0, 0.0, 1.0);
        b.add_row("r", RowSense::Le, 1.0, &[(x, 0.5), (x, 0.25)]);
        b.add_row("z", RowSense::Le, 1.0, &[(x, 1.0), (x, -1.0)]);
        let lp = b.build().unwrap();
        assert_eq!(lp.entries(), &[(0, 0, 0.75)]);
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        let mut b = LpBuilder::new();
        b.add_column("x", 1.0, 0.0, 1.0);
        b.add_row("r", RowSense::Le, 1.0, &[(3, 1.0)]);
        assert!(matches!(b.build(), Err(LpError::IndexOutOfRange { .. })));
    }

    #[test]
    fn inverted_bounds_are_rejected() {
        let mut b = LpBuilder::new();
        b.add_column("x", 1.0, 2.0, 1.0);
        assert!(matches!(b.build(), Err(LpError::InvalidBounds { .. })));
    }

    #[test]
    fn cost_cap_appends_one_row() {
        let lp = tiny();
        let capped = lp.add_cost_cap(110.0);
        assert_eq!(capped.n_rows(), lp.n_rows() + 1);
        assert_eq!(&capped.rows()[..lp.n_rows()], lp.rows());
        let cap = capped.rows().last().unwrap();
        assert_eq!(cap.rhs, 110.0);
        assert_eq!(cap.sense, RowSense::Le);
    }

    #[test]
    fn with_objective_zeroes_other_columns() {
        let lp = tiny();
        let w = BTreeMap::from([("wind".to_string(), -1.0)]);
        let swapped = lp.with_objective(&w).unwrap();
        assert_eq!(swapped.objective(), &[0.0, -1.0]);
        assert_eq!(swapped.cost(), lp.cost());
        assert_eq!(swapped.entries(), lp.entries());
        let bad = BTreeMap::from([("nuclear".to_string(), 1.0)]);
        assert_eq!(lp.with_objective(&bad), Err(LpError::UnknownTag("nuclear".into())));
    }
}
