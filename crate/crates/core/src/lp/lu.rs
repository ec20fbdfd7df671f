//! Sparse LU factorization of simplex basis matrices.
//!
//! Right-looking Gaussian elimination with Markowitz pivot selection and
//! threshold partial pivoting. Basis updates between refactorizations are
//! kept as a product-form eta file on top of the LU factors.

/// Relative threshold for accepting a pivot against the largest entry of its column.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Entries below this magnitude are never chosen as pivots.
const ABS_PIVOT_TOL: f64 = 1e-11;
/// Number of Markowitz candidates examined before settling.
const SEARCH_LIMIT: usize = 4;

/// A basis matrix could not be factorized.
///
/// `positions` are the basis positions whose columns were left unpivoted and
/// `rows` the rows that received no pivot; both have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

/// `P B Q = L U` for an `m x m` sparse matrix given column by column.
#[derive(Debug, Clone)]
pub struct SparseLu {
    m: usize,
    piv_row: Vec<usize>,
    piv_col: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_diag: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

struct Active {
    cols: Vec<Vec<(usize, f64)>>,
    row_pattern: Vec<Vec<usize>>,
    row_count: Vec<usize>,
    col_count: Vec<usize>,
    row_done: Vec<bool>,
    col_done: Vec<bool>,
    col_buckets: Vec<Vec<usize>>,
    row_buckets: Vec<Vec<usize>>,
}

impl Active {
    fn push_col(&mut self, c: usize) {
        let k = self.col_count[c];
        if k < self.col_buckets.len() {
            self.col_buckets[k].push(c);
        }
    }

    fn push_row(&mut self, r: usize) {
        let k = self.row_count[r];
        if k < self.row_buckets.len() {
            self.row_buckets[k].push(r);
        }
    }

    fn col_max(&self, c: usize) -> f64 {
        self.cols[c].iter().fold(0.0, |acc, &(_, v)| acc.max(v.abs()))
    }
}

impl SparseLu {
    /// Factorizes the matrix whose column `j` holds the `(row, value)` pairs in `columns[j]`.
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        assert_eq!(columns.len(), m, "basis must be square");
        let mut act = Active {
            cols: Vec::with_capacity(m),
            row_pattern: vec![Vec::new(); m],
            row_count: vec![0; m],
            col_count: vec![0; m],
            row_done: vec![false; m],
            col_done: vec![false; m],
            col_buckets: vec![Vec::new(); m + 2],
            row_buckets: vec![Vec::new(); m + 2],
        };
        for (j, col) in columns.iter().enumerate() {
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(i, v) in col {
                if v == 0.0 {
                    continue;
                }
                if let Some(e) = entries.iter_mut().find(|e| e.0 == i) {
                    e.1 += v;
                } else {
                    entries.push((i, v));
                }
            }
            for &(i, _) in &entries {
                act.row_pattern[i].push(j);
                act.row_count[i] += 1;
            }
            act.col_count[j] = entries.len();
            act.cols.push(entries);
        }
        for j in 0..m {
            act.push_col(j);
        }
        for i in 0..m {
            act.push_row(i);
        }

        let mut lu = SparseLu {
            m,
            piv_row: Vec::with_capacity(m),
            piv_col: Vec::with_capacity(m),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_diag: Vec::with_capacity(m),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
        };

        let mut slot = vec![usize::MAX; m];
        let mut singular_cols: Vec<usize> = Vec::new();
        let mut remaining = m;
        while remaining > 0 {
            match select_pivot(&mut act) {
                Some((r, c)) => {
                    lu.eliminate(&mut act, r, c, &mut slot);
                    remaining -= 1;
                }
                None => {
                    // Every remaining column is numerically empty.
                    for c in 0..m {
                        if !act.col_done[c] {
                            act.col_done[c] = true;
                            singular_cols.push(c);
                            remaining -= 1;
                        }
                    }
                }
            }
        }
        if !singular_cols.is_empty() {
            let rows: Vec<usize> = (0..m).filter(|&i| !act.row_done[i]).collect();
            return Err(Singular {
                positions: singular_cols,
                rows,
            });
        }
        Ok(lu)
    }

    fn eliminate(&mut self, act: &mut Active, r: usize, c: usize, slot: &mut [usize]) {
        let col_c = std::mem::take(&mut act.cols[c]);
        let pivot = col_c
            .iter()
            .find(|e| e.0 == r)
            .map(|e| e.1)
            .expect("pivot entry present");

        // U row: remaining active entries of row r.
        let u_begin = self.u_idx.len();
        let pattern = std::mem::take(&mut act.row_pattern[r]);
        for &j in &pattern {
            if j == c || act.col_done[j] {
                continue;
            }
            let col = &mut act.cols[j];
            if let Some(pos) = col.iter().position(|e| e.0 == r) {
                let (_, v) = col.swap_remove(pos);
                self.u_idx.push(j);
                self.u_val.push(v);
                act.col_count[j] -= 1;
            }
        }
        act.row_done[r] = true;
        act.col_done[c] = true;

        // L multipliers and Schur complement update.
        let l_begin = self.l_idx.len();
        for &(i, v) in &col_c {
            if i == r {
                continue;
            }
            self.l_idx.push(i);
            self.l_val.push(v / pivot);
            act.row_count[i] -= 1;
        }
        let u_end = self.u_idx.len();
        let l_end = self.l_idx.len();
        if l_end > l_begin {
            for t in u_begin..u_end {
                let j = self.u_idx[t];
                let urj = self.u_val[t];
                {
                    let col = &act.cols[j];
                    for (p, e) in col.iter().enumerate() {
                        slot[e.0] = p;
                    }
                }
                for s in l_begin..l_end {
                    let i = self.l_idx[s];
                    let delta = -self.l_val[s] * urj;
                    if slot[i] != usize::MAX {
                        act.cols[j][slot[i]].1 += delta;
                    } else {
                        slot[i] = act.cols[j].len();
                        act.cols[j].push((i, delta));
                        act.row_pattern[i].push(j);
                        act.row_count[i] += 1;
                        act.col_count[j] += 1;
                    }
                }
                for e in act.cols[j].iter() {
                    slot[e.0] = usize::MAX;
                }
                act.push_col(j);
            }
            for s in l_begin..l_end {
                let i = self.l_idx[s];
                act.push_row(i);
            }
        } else {
            for t in u_begin..u_end {
                let j = self.u_idx[t];
                act.push_col(j);
            }
        }

        self.piv_row.push(r);
        self.piv_col.push(c);
        self.u_diag.push(pivot);
        self.u_start.push(u_end);
        self.l_start.push(l_end);
    }

    /// Solves `B x = b`. Input is indexed by row, output by basis position.
    pub fn ftran(&self, b: &mut [f64], work: &mut [f64]) {
        debug_assert_eq!(b.len(), self.m);
        for k in 0..self.m {
            let v = b[self.piv_row[k]];
            if v != 0.0 {
                for s in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[s]] -= self.l_val[s] * v;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut acc = b[self.piv_row[k]];
            for s in self.u_start[k]..self.u_start[k + 1] {
                acc -= self.u_val[s] * work[self.u_idx[s]];
            }
            work[self.piv_col[k]] = acc / self.u_diag[k];
        }
        b.copy_from_slice(work);
    }

    /// Solves `y^T B = c^T`. Input is indexed by basis position, output by row.
    pub fn btran(&self, c: &mut [f64], work: &mut [f64]) {
        debug_assert_eq!(c.len(), self.m);
        for k in 0..self.m {
            let w = c[self.piv_col[k]] / self.u_diag[k];
            work[self.piv_row[k]] = w;
            if w != 0.0 {
                for s in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[s]] -= w * self.u_val[s];
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut acc = 0.0;
            for s in self.l_start[k]..self.l_start[k + 1] {
                acc += self.l_val[s] * work[self.l_idx[s]];
            }
            if acc != 0.0 {
                work[self.piv_row[k]] -= acc;
            }
        }
        c.copy_from_slice(work);
    }

    pub fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }
}

fn select_pivot(act: &mut Active) -> Option<(usize, usize)> {
    let m = act.cols.len();
    let mut best: Option<(usize, usize, usize)> = None; // (markowitz, row, col)
    let mut examined = 0usize;
    for k in 1..=m {
        // Columns with k active entries.
        let mut b = 0;
        while b < act.col_buckets[k].len() {
            let c = act.col_buckets[k][b];
            if act.col_done[c] || act.col_count[c] != k {
                act.col_buckets[k].swap_remove(b);
                continue;
            }
            b += 1;
            let cmax = act.col_max(c);
            if cmax < ABS_PIVOT_TOL {
                continue;
            }
            for &(i, v) in &act.cols[c] {
                if v.abs() >= PIVOT_THRESHOLD * cmax && v.abs() >= ABS_PIVOT_TOL {
                    let mk = (act.row_count[i] - 1) * (k - 1);
                    if better(best, mk, i, c) {
                        best = Some((mk, i, c));
                    }
                }
            }
            examined += 1;
            if examined >= SEARCH_LIMIT {
                break;
            }
        }
        if let Some((mk, _, _)) = best {
            if mk <= (k - 1) * (k - 1) || examined >= SEARCH_LIMIT {
                break;
            }
        }
        // Rows with k active entries.
        let mut b = 0;
        while b < act.row_buckets[k].len() {
            let r = act.row_buckets[k][b];
            if act.row_done[r] || act.row_count[r] != k {
                act.row_buckets[k].swap_remove(b);
                continue;
            }
            b += 1;
            for &c in &act.row_pattern[r] {
                if act.col_done[c] {
                    continue;
                }
                let Some(v) = act.cols[c].iter().find(|e| e.0 == r).map(|e| e.1) else {
                    continue;
                };
                let cmax = act.col_max(c);
                if v.abs() >= PIVOT_THRESHOLD * cmax && v.abs() >= ABS_PIVOT_TOL {
                    let mk = (k - 1) * (act.col_count[c] - 1);
                    if better(best, mk, r, c) {
                        best = Some((mk, r, c));
                    }
                }
            }
            examined += 1;
            if examined >= SEARCH_LIMIT {
                break;
            }
        }
        if let Some((mk, _, _)) = best {
            if mk <= k * (k - 1) || examined >= SEARCH_LIMIT {
                break;
            }
        }
    }
    if best.is_none() {
        // Fall back to an exhaustive scan; buckets may have lost stale columns.
        for c in 0..m {
            if act.col_done[c] {
                continue;
            }
            let cmax = act.col_max(c);
            if cmax < ABS_PIVOT_TOL {
                continue;
            }
            for &(i, v) in &act.cols[c] {
                if v.abs() >= PIVOT_THRESHOLD * cmax {
                    let mk = (act.row_count[i] - 1) * (act.col_count[c] - 1);
                    if better(best, mk, i, c) {
                        best = Some((mk, i, c));
                    }
                }
            }
        }
    }
    best.map(|(_, r, c)| (r, c))
}

fn better(best: Option<(usize, usize, usize)>, mk: usize, r: usize, c: usize) -> bool {
    match best {
        None => true,
        Some((bm, br, bc)) => (mk, c, r) < (bm, bc, br),
    }
}

/// Product-form update of a basis inverse: `B_k = B_0 F_1 ... F_k`.
#[derive(Debug, Clone)]
pub struct Eta {
    pub pos: usize,
    pub pivot: f64,
    pub entries: Vec<(usize, f64)>,
}

/// LU factors plus the eta file accumulated since the last refactorization.
#[derive(Debug, Clone)]
pub struct BasisFactor {
    lu: SparseLu,
    etas: Vec<Eta>,
    eta_nnz: usize,
    work: Vec<f64>,
}

impl BasisFactor {
    pub fn new(lu: SparseLu) -> Self {
        let m = lu.m;
        Self {
            lu,
            etas: Vec::new(),
            eta_nnz: 0,
            work: vec![0.0; m],
        }
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Refactorize after `limit` updates or once the eta file outgrows the factors.
    pub fn needs_refactor(&self, limit: usize) -> bool {
        self.etas.len() >= limit || self.eta_nnz > 2 * self.lu.nnz()
    }

    pub fn fill(&self) -> usize {
        self.lu.nnz() + self.eta_nnz
    }

    /// `b` (by row) becomes `B^{-1} b` (by position).
    pub fn ftran(&mut self, b: &mut [f64]) {
        self.lu.ftran(b, &mut self.work);
        for eta in &self.etas {
            let xp = b[eta.pos] / eta.pivot;
            if xp != 0.0 {
                for &(i, a) in &eta.entries {
                    b[i] -= a * xp;
                }
            }
            b[eta.pos] = xp;
        }
    }

    /// `c` (by position) becomes `B^{-T} c` (by row).
    pub fn btran(&mut self, c: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut acc = c[eta.pos];
            for &(i, a) in &eta.entries {
                acc -= a * c[i];
            }
            c[eta.pos] = acc / eta.pivot;
        }
        self.lu.btran(c, &mut self.work);
    }

    /// Records the replacement of the column at `pos` given `alpha = B^{-1} a_q`.
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let entries: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a.abs() > 1e-14)
            .map(|(i, &a)| (i, a))
            .collect();
        self.eta_nnz += entries.len() + 1;
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| {
                (0..m)
                    .filter(|&i| a[i][j] != 0.0)
                    .map(|i| (i, a[i][j]))
                    .collect()
            })
            .collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
            .collect()
    }

    #[test]
    fn solves_small_dense_system() {
        let a = vec![
            vec![4.0, 1.0, 0.0, 2.0],
            vec![1.0, 3.0, 1.0, 0.0],
            vec![0.0, 1.0, 5.0, 1.0],
            vec![2.0, 0.0, 1.0, 6.0],
        ];
        let lu = SparseLu::factorize(4, &dense_to_cols(&a)).unwrap();
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut b = matvec(&a, &x_true);
        let mut work = vec![0.0; 4];
        lu.ftran(&mut b, &mut work);
        for (p, q) in b.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-12);
        }
        // Transposed solve.
        let y_true = [0.3, 1.0, -1.0, 2.0];
        let mut c: Vec<f64> = (0..4)
            .map(|j| (0..4).map(|i| a[i][j] * y_true[i]).sum())
            .collect();
        lu.btran(&mut c, &mut work);
        for (p, q) in c.iter().zip(&y_true) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_singular_matrix() {
        let a = vec![
            vec![1.0, 2.0, 0.0],
            vec![2.0, 4.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let err = SparseLu::factorize(3, &dense_to_cols(&a)).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let a = vec![
            vec![2.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 3.0],
        ];
        let lu = SparseLu::factorize(3, &dense_to_cols(&a)).unwrap();
        let mut f = BasisFactor::new(lu);
        // Replace column 1 with (1, 2, 1).
        let newcol = [1.0, 2.0, 1.0];
        let mut alpha = newcol.to_vec();
        f.ftran(&mut alpha);
        f.update(1, &alpha);
        let mut a2 = a.clone();
        for i in 0..3 {
            a2[i][1] = newcol[i];
        }
        let x_true = [0.5, -1.0, 2.0];
        let mut b = matvec(&a2, &x_true);
        f.ftran(&mut b);
        for (p, q) in b.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-12, "{b:?}");
        }
        let y_true = [1.0, 2.0, -3.0];
        let mut c: Vec<f64> = (0..3)
            .map(|j| (0..3).map(|i| a2[i][j] * y_true[i]).sum())
            .collect();
        f.btran(&mut c);
        for (p, q) in c.iter().zip(&y_true) {
            assert!((p - q).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn random_sparse_matrices_roundtrip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..50 {
            let m = 5 + trial % 30;
            let mut a = vec![vec![0.0; m]; m];
            for i in 0..m {
                a[i][i] = rng.random_range(0.5..2.0);
                for _ in 0..2 {
                    let j = rng.random_range(0..m);
                    a[i][j] += rng.random_range(-1.0..1.0);
                }
            }
            let Ok(lu) = SparseLu::factorize(m, &dense_to_cols(&a)) else {
                continue;
            };
            let x_true: Vec<f64> = (0..m).map(|i| (i as f64).sin()).collect();
            let mut b = matvec(&a, &x_true);
            let mut work = vec![0.0; m];
            lu.ftran(&mut b, &mut work);
            let err = b
                .iter()
                .zip(&x_true)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "trial {trial}: err {err}");
        }
    }
}
