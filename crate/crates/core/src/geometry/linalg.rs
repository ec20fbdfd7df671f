//! Small dense helpers for hull geometry (dimensions up to ~8).

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Determinant of a row-major `n × n` matrix by partial-pivot elimination.
pub fn det(mut m: Vec<f64>, n: usize) -> f64 {
    debug_assert_eq!(m.len(), n * n);
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a * n + c].abs().total_cmp(&m[b * n + c].abs()))
            .expect("non-empty range");
        let pivot = m[p * n + c];
        if pivot == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                m.swap(p * n + k, c * n + k);
            }
            d = -d;
        }
        d *= pivot;
        for r in c + 1..n {
            let f = m[r * n + c] / pivot;
            if f != 0.0 {
                for k in c..n {
                    m[r * n + k] -= f * m[c * n + k];
                }
            }
        }
    }
    d
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `k`-dimensional measure of the simplex spanned by `points[0]` and the
/// `k` edges to the other points, in an ambient space of any dimension.
pub fn simplex_measure(points: &[&[f64]]) -> f64 {
    let k = points.len().saturating_sub(1);
    if k == 0 {
        return 0.0;
    }
    let dim = points[0].len();
    let edges: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, points[0])).collect();
    if k == dim {
        let m: Vec<f64> = edges.iter().flatten().copied().collect();
        return det(m, k).abs() / factorial(k);
    }
    // Gram determinant for simplices embedded in a larger space.
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = dot(&edges[i], &edges[j]);
        }
    }
    det(g, k).max(0.0).sqrt() / factorial(k)
}

/// Orthonormal basis of the span of `vectors`, built greedily by modified
/// Gram-Schmidt taking the largest remaining residual first. Returns the
/// basis and the index of each chosen vector. Residuals at or below `tol`
/// are treated as dependent.
pub fn greedy_basis(vectors: &[Vec<f64>], tol: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut residual: Vec<Vec<f64>> = vectors.to_vec();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut chosen = Vec::new();
    let dim = vectors.first().map_or(0, |v| v.len());
    let mut taken = vec![false; vectors.len()];
    while basis.len() < dim.min(vectors.len()) {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in residual.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let n = norm(r);
            if n > tol && best.is_none_or(|(_, b)| n > b) {
                best = Some((i, n));
            }
        }
        let Some((i, n)) = best else { break };
        taken[i] = true;
        let q: Vec<f64> = residual[i].iter().map(|v| v / n).collect();
        for r in residual.iter_mut() {
            let c = dot(r, &q);
            for (x, qv) in r.iter_mut().zip(&q) {
                *x -= c * qv;
            }
        }
        basis.push(q);
        chosen.push(i);
    }
    (basis, chosen)
}

/// Unit vector orthogonal to every row of the orthonormal set `q`, chosen
/// as the projected coordinate axis with the largest residual.
pub fn orthogonal_complement_vector(q: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best = vec![0.0; dim];
    let mut best_norm = -1.0;
    for a in 0..dim {
        let mut r = vec![0.0; dim];
        r[a] = 1.0;
        for _ in 0..2 {
            for qv in q {
                let c = dot(&r, qv);
                for (x, y) in r.iter_mut().zip(qv) {
                    *x -= c * y;
                }
            }
        }
        let n = norm(&r);
        if n > best_norm {
            best_norm = n;
            best = r;
        }
    }
    best.iter().map(|v| v / best_norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_of_small_matrices() {
        assert_eq!(det(vec![2.0], 1), 2.0);
        assert!((det(vec![1.0, 2.0, 3.0, 4.0], 2) + 2.0).abs() < 1e-15);
        assert!((det(vec![0.0, 1.0, 1.0, 0.0], 2) + 1.0).abs() < 1e-15);
        assert_eq!(det(vec![1.0, 2.0, 2.0, 4.0], 2), 0.0);
    }

    #[test]
    fn simplex_measures() {
        let o = [0.0, 0.0, 0.0];
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 1.0, 0.0];
        let c = [0.0, 0.0, 1.0];
        assert!((simplex_measure(&[&o, &a, &b, &c]) - 1.0 / 6.0).abs() < 1e-15);
        // A unit right triangle lying in 3-D space.
        assert!((simplex_measure(&[&o, &a, &b]) - 0.5).abs() < 1e-15);
        assert!((simplex_measure(&[&a, &b]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn greedy_basis_detects_rank() {
        let v = vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]];
        let (q, idx) = greedy_basis(&v, 1e-12);
        assert_eq!(q.len(), 2);
        // Largest residual first: the third vector, then the longer of the parallel pair.
        assert_eq!(idx, vec![2, 1]);
        let n = orthogonal_complement_vector(&q, 3);
        assert!(q.iter().all(|b| dot(b, &n).abs() < 1e-15));
        assert!((norm(&n) - 1.0).abs() < 1e-15);
    }
}
