//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use nearopt::lp::{LpBuilder, RowSense, SparseLp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One linear inequality or equality `a.x (<=|=|>=) b` in dense form.
#[derive(Clone, Debug)]
pub struct DenseCon {
    pub a: Vec<f64>,
    pub b: f64,
    pub sense: RowSense,
}

fn dense_constraints(lp: &SparseLp) -> Vec<DenseCon> {
    let n = lp.n_vars();
    let mut cons: Vec<DenseCon> = lp
        .rows()
        .iter()
        .map(|r| DenseCon {
            a: vec![0.0; n],
            b: r.rhs,
            sense: r.sense,
        })
        .collect();
    for &(r, c, v) in lp.entries() {
        cons[r].a[c] = v;
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if lp.lower()[j].is_finite() {
            cons.push(DenseCon {
                a: e.clone(),
                b: lp.lower()[j],
                sense: RowSense::Ge,
            });
        }
        if lp.upper()[j].is_finite() {
            cons.push(DenseCon {
                a: e,
                b: lp.upper()[j],
                sense: RowSense::Le,
            });
        }
    }
    cons
}

/// Gaussian elimination with partial pivoting; `None` when (near) singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 && idx[0] == n - k {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimum objective over all basic feasible solutions, by enumerating every
/// choice of `n` active constraints. Assumes the feasible set is bounded.
/// Returns `None` if no vertex is feasible.
pub fn brute_force_min(lp: &SparseLp) -> Option<f64> {
    let n = lp.n_vars();
    let cons = dense_constraints(lp);
    let mut best: Option<f64> = None;
    // Every vertex has n linearly independent active constraints; equality
    // rows are active everywhere, so checking feasibility afterwards suffices.
    combinations(cons.len(), n, |active| {
        let a: Vec<Vec<f64>> = active.iter().map(|&i| cons[i].a.clone()).collect();
        let b: Vec<f64> = active.iter().map(|&i| cons[i].b).collect();
        let Some(x) = solve_dense(a, b) else { return };
        let feasible = cons.iter().all(|c| {
            let lhs: f64 = c.a.iter().zip(&x).map(|(a, x)| a * x).sum();
            let tol = 1e-9 * (1.0 + c.b.abs());
            match c.sense {
                RowSense::Le => lhs <= c.b + tol,
                RowSense::Ge => lhs >= c.b - tol,
                RowSense::Eq => (lhs - c.b).abs() <= tol,
            }
        });
        if feasible {
            let obj = lp.objective_at(&x);
            if best.map_or(true, |b| obj < b) {
                best = Some(obj);
            }
        }
    });
    best
}

/// Random LP whose rows are built around a point of the box, so most
/// instances are feasible; about one in seven gets random right-hand sides
/// instead. With `boxed == false` variables are only nonnegative and a
/// budget row keeps the feasible set bounded.
pub fn random_lp(seed: u64, n: usize, m: usize, boxed: bool) -> SparseLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = LpBuilder::new();
    let mut anchor = Vec::with_capacity(n);
    let cols: Vec<usize> = (0..n)
        .map(|j| {
            let (lo, hi) = if boxed {
                let lo = if rng.random_bool(0.3) {
                    -rng.random_range(0.0..3.0)
                } else {
                    0.0
                };
                (lo, lo + rng.random_range(0.5..10.0))
            } else {
                (0.0, f64::INFINITY)
            };
            let top = if hi.is_finite() { hi } else { 5.0 };
            anchor.push(rng.random_range(lo..top));
            b.add_column(format!("x{j}"), rng.random_range(-5.0..5.0), lo, hi)
        })
        .collect();
    let scramble = rng.random_bool(0.15);
    let rows = if boxed { m } else { m - 1 };
    for i in 0..rows {
        let mut coeffs = Vec::new();
        for &c in &cols {
            if rng.random_bool(0.6) {
                coeffs.push((c, rng.random_range(-4.0..4.0)));
            }
        }
        if coeffs.is_empty() {
            coeffs.push((cols[i % n], 1.0));
        }
        let sense = match rng.random_range(0..10) {
            0 => RowSense::Eq,
            1..=3 => RowSense::Ge,
            _ => RowSense::Le,
        };
        let at_anchor: f64 = coeffs.iter().map(|&(c, v)| v * anchor[c]).sum();
        let rhs = if scramble {
            rng.random_range(-15.0..15.0)
        } else {
            match sense {
                RowSense::Eq => at_anchor,
                RowSense::Le => at_anchor + rng.random_range(0.0..3.0),
                RowSense::Ge => at_anchor - rng.random_range(0.0..3.0),
            }
        };
        b.add_row(format!("r{i}"), sense, rhs, &coeffs);
    }
    if !boxed {
        let all: Vec<(usize, f64)> = cols.iter().map(|&c| (c, 1.0)).collect();
        b.add_row("budget", RowSense::Le, 5.0 * n as f64, &all);
    }
    b.build().unwrap()
}

pub fn random_bounded_lp(seed: u64, n: usize, m: usize) -> SparseLp {
    random_lp(seed, n, m, true)
}
