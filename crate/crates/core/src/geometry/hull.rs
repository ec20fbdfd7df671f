use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::linalg::{dot, greedy_basis, norm, orthogonal_complement_vector, simplex_measure, sub};
use super::GeometryError;

/// Visibility tolerance in normalized coordinates.
pub const DEFAULT_GEOM_TOL: f64 = 1e-9;
/// Residual below which a direction counts as flat, in normalized coordinates.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullOptions {
    pub tol: f64,
    pub rank_tol: f64,
}

impl Default for HullOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_GEOM_TOL,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// A hull facet in physical units: `normal · x <= offset` on the hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    /// Indices into `ConvexHull::vertices`.
    pub vertices: Vec<usize>,
    pub normal: Vec<f64>,
    pub offset: f64,
    /// Facet measure in normalized coordinates, used to rank facets.
    pub size: f64,
}

/// Maps physical points into the orthonormal coordinates of the hull's
/// affine subspace, after per-axis scaling to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub lower: Vec<f64>,
    pub scale: Vec<f64>,
    /// Normalized coordinates of the subspace origin.
    pub origin: Vec<f64>,
    /// Orthonormal basis of the subspace, in normalized coordinates.
    pub basis: Vec<Vec<f64>>,
}

impl Frame {
    fn fit(points: &[Vec<f64>], rank_tol: f64) -> (Self, Vec<usize>) {
        let d = points[0].len();
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for p in points {
            for i in 0..d {
                lower[i] = lower[i].min(p[i]);
                upper[i] = upper[i].max(p[i]);
            }
        }
        let scale: Vec<f64> = (0..d)
            .map(|i| {
                let span = upper[i] - lower[i];
                let mag = lower[i].abs().max(upper[i].abs()).max(1.0);
                if span > 1e-9 * mag {
                    span
                } else {
                    mag
                }
            })
            .collect();
        let normalized: Vec<Vec<f64>> = points
            .iter()
            .map(|p| (0..d).map(|i| (p[i] - lower[i]) / scale[i]).collect())
            .collect();
        let origin = normalized[0].clone();
        let diffs: Vec<Vec<f64>> = normalized[1..].iter().map(|y| sub(y, &origin)).collect();
        let (basis, chosen) = greedy_basis(&diffs, rank_tol);
        let mut simplex = vec![0];
        simplex.extend(chosen.iter().map(|c| c + 1));
        (
            Self {
                lower,
                scale,
                origin,
                basis,
            },
            simplex,
        )
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.lower)
            .zip(&self.scale)
            .map(|((v, lo), s)| (v - lo) / s)
            .collect()
    }

    pub fn to_internal(&self, x: &[f64]) -> Vec<f64> {
        let y = sub(&self.normalize(x), &self.origin);
        self.basis.iter().map(|q| dot(q, &y)).collect()
    }

    /// Distance of `x` from the subspace, in normalized coordinates.
    pub fn off_subspace(&self, x: &[f64]) -> f64 {
        let mut y = sub(&self.normalize(x), &self.origin);
        for q in &self.basis {
            let c = dot(q, &y);
            for (a, b) in y.iter_mut().zip(q) {
                *a -= c * b;
            }
        }
        norm(&y)
    }
}

/// A halfspace `normal · z <= offset` in internal coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Convex hull of a point cloud in `dim` dimensions, possibly collapsed onto
/// a lower-dimensional affine subspace of dimension `rank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexHull {
    pub dim: usize,
    pub rank: usize,
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<Facet>,
    /// `rank`-dimensional measure in physical units.
    pub volume: f64,
    /// Unit directions (physical units) along which the hull has no extent.
    pub flat_directions: Vec<Vec<f64>>,
    pub frame: Frame,
    pub halfspaces: Vec<Halfspace>,
    pub options: HullOptions,
}

/// A simplex of the hull triangulation, in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
    pub volume: f64,
}

impl ConvexHull {
    /// Full-dimensional hull; an affinely dependent cloud is an error.
    pub fn new(points: &[Vec<f64>], options: HullOptions) -> Result<Self, GeometryError> {
        let hull = Self::collapsing(points, options)?;
        if hull.rank < hull.dim {
            return Err(GeometryError::Degenerate {
                rank: hull.rank,
                dim: hull.dim,
            });
        }
        Ok(hull)
    }

    /// Hull in the affine subspace spanned by the points, whatever its rank.
    pub fn collapsing(points: &[Vec<f64>], options: HullOptions) -> Result<Self, GeometryError> {
        let first = points.first().ok_or(GeometryError::Empty)?;
        let dim = first.len();
        if dim == 0 {
            return Err(GeometryError::Dimension { expected: 1, found: 0 });
        }
        for p in points {
            if p.len() != dim {
                return Err(GeometryError::Dimension {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::NonFinite);
            }
        }
        let (frame, simplex) = Frame::fit(points, options.rank_tol);
        let rank = frame.rank();
        let internal: Vec<Vec<f64>> = points.iter().map(|p| frame.to_internal(p)).collect();
        let raw = if rank == 0 {
            Vec::new()
        } else {
            quickhull(&internal, &simplex, options.tol)?
        };

        let mut used: Vec<usize> = if rank == 0 {
            vec![0]
        } else {
            raw.iter().flat_map(|f| f.verts.iter().copied()).collect()
        };
        used.sort_unstable();
        used.dedup();
        let remap: HashMap<usize, usize> = used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let vertices: Vec<Vec<f64>> = used.iter().map(|&i| points[i].clone()).collect();

        let mut facets = Vec::with_capacity(raw.len());
        let mut halfspaces = Vec::with_capacity(raw.len());
        for f in &raw {
            let lifted: Vec<f64> = (0..dim)
                .map(|i| frame.basis.iter().zip(&f.normal).map(|(q, u)| q[i] * u).sum::<f64>() / frame.scale[i])
                .collect();
            let n = norm(&lifted);
            let normal: Vec<f64> = lifted.iter().map(|v| v / n).collect();
            let verts: Vec<usize> = f.verts.iter().map(|v| remap[v]).collect();
            let offset = verts.iter().map(|&v| dot(&normal, &vertices[v])).sum::<f64>() / verts.len() as f64;
            let corners: Vec<&[f64]> = f.verts.iter().map(|&v| internal[v].as_slice()).collect();
            facets.push(Facet {
                vertices: verts,
                normal,
                offset,
                size: facet_size(&corners),
            });
            halfspaces.push(Halfspace {
                normal: f.normal.clone(),
                offset: f.offset,
            });
        }

        let flat_directions = flat_directions(&frame, dim);
        let mut hull = Self {
            dim,
            rank,
            vertices,
            facets,
            volume: 0.0,
            flat_directions,
            frame,
            halfspaces,
            options,
        };
        hull.volume = hull.triangulate().iter().map(|s| s.volume).sum();
        Ok(hull)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for v in &self.vertices {
            for (a, b) in c.iter_mut().zip(v) {
                *a += b;
            }
        }
        let n = self.vertices.len() as f64;
        c.iter_mut().for_each(|a| *a /= n);
        c
    }

    /// Fan decomposition: one simplex per facet, apexed at the vertex centroid.
    pub fn triangulate(&self) -> Vec<Simplex> {
        let c = self.centroid();
        self.facets
            .iter()
            .map(|f| {
                let mut vertices = vec![c.clone()];
                vertices.extend(f.vertices.iter().map(|&v| self.vertices[v].clone()));
                let refs: Vec<&[f64]> = vertices.iter().map(|v| v.as_slice()).collect();
                let volume = simplex_measure(&refs);
                Simplex { vertices, volume }
            })
            .collect()
    }

    /// Largest facet violation of `x` in internal coordinates (non-positive
    /// inside). Distance from the affine subspace is not included.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let z = self.frame.to_internal(x);
        self.halfspaces
            .iter()
            .map(|h| dot(&h.normal, &z) - h.offset)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if self.rank < self.dim && self.frame.off_subspace(x) > self.options.rank_tol {
            return false;
        }
        self.violation(x) <= self.options.tol
    }

    /// Per-axis (min, max) over the vertices.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|i| {
                self.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v[i]), hi.max(v[i]))
                })
            })
            .collect()
    }
}

fn facet_size(corners: &[&[f64]]) -> f64 {
    if corners.len() <= 1 {
        return 1.0;
    }
    simplex_measure(corners)
}

fn flat_directions(frame: &Frame, dim: usize) -> Vec<Vec<f64>> {
    let spanning: Vec<Vec<f64>> = frame
        .basis
        .iter()
        .map(|q| q.iter().zip(&frame.scale).map(|(a, s)| a * s).collect())
        .collect();
    let biggest = spanning.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let (mut ortho, _) = greedy_basis(&spanning, 1e-12 * biggest);
    let mut flats = Vec::new();
    while ortho.len() < dim {
        let v = orthogonal_complement_vector(&ortho, dim);
        ortho.push(v.clone());
        flats.push(v);
    }
    flats
}

struct QFacet {
    verts: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    /// `neighbors[i]` shares the ridge opposite `verts[i]`.
    neighbors: Vec<usize>,
    outside: Vec<usize>,
    alive: bool,
}

fn oriented_facet(pts: &[Vec<f64>], verts: Vec<usize>, interior: &[f64]) -> QFacet {
    let k = pts[0].len();
    let base = &pts[verts[0]];
    let edges: Vec<Vec<f64>> = verts[1..].iter().map(|&v| sub(&pts[v], base)).collect();
    let (q, _) = greedy_basis(&edges, 0.0);
    let mut normal = orthogonal_complement_vector(&q, k);
    let mut offset = dot(&normal, base);
    if dot(&normal, interior) > offset {
        normal.iter_mut().for_each(|v| *v = -*v);
        offset = -offset;
    }
    QFacet {
        neighbors: vec![usize::MAX; verts.len()],
        verts,
        normal,
        offset,
        outside: Vec::new(),
        alive: true,
    }
}

fn distance(f: &QFacet, p: &[f64]) -> f64 {
    dot(&f.normal, p) - f.offset
}

/// Quickhull in `k = pts[0].len()` dimensions starting from the simplex
/// `init` (k + 1 affinely independent point indices). Returns live facets.
fn quickhull(pts: &[Vec<f64>], init: &[usize], tol: f64) -> Result<Vec<QFacet>, GeometryError> {
    let k = pts[0].len();
    debug_assert_eq!(init.len(), k + 1);
    let mut interior = vec![0.0; k];
    for &i in init {
        for (a, b) in interior.iter_mut().zip(&pts[i]) {
            *a += b / (k + 1) as f64;
        }
    }
    let mut facets: Vec<QFacet> = Vec::new();
    for omit in 0..=k {
        let verts: Vec<usize> = (0..=k).filter(|&j| j != omit).map(|j| init[j]).collect();
        let mut f = oriented_facet(pts, verts, &interior);
        f.neighbors = (0..=k).filter(|&j| j != omit).collect();
        facets.push(f);
    }
    let mut in_init = vec![false; pts.len()];
    for &i in init {
        in_init[i] = true;
    }
    for (p, pt) in pts.iter().enumerate() {
        if in_init[p] {
            continue;
        }
        if let Some(f) = facets.iter_mut().find(|f| distance(f, pt) > tol) {
            f.outside.push(p);
        }
    }

    let mut visible_mark: Vec<u32> = vec![0; facets.len()];
    let mut checked_mark: Vec<u32> = vec![0; facets.len()];
    let mut round: u32 = 0;
    let mut cursor = 0;
    loop {
        while cursor < facets.len() && (!facets[cursor].alive || facets[cursor].outside.is_empty()) {
            cursor += 1;
        }
        if cursor == facets.len() {
            break;
        }
        let start = cursor;
        let p = {
            let f = &facets[start];
            let mut best = f.outside[0];
            let mut best_d = distance(f, &pts[best]);
            for &o in &f.outside[1..] {
                let d = distance(f, &pts[o]);
                if d > best_d {
                    best = o;
                    best_d = d;
                }
            }
            best
        };
        round += 1;
        visible_mark.resize(facets.len(), 0);
        checked_mark.resize(facets.len(), 0);
        let mut visible = vec![start];
        visible_mark[start] = round;
        checked_mark[start] = round;
        let mut head = 0;
        while head < visible.len() {
            let f = visible[head];
            head += 1;
            for i in 0..facets[f].neighbors.len() {
                let g = facets[f].neighbors[i];
                if checked_mark[g] == round {
                    continue;
                }
                checked_mark[g] = round;
                if distance(&facets[g], &pts[p]) > tol {
                    visible_mark[g] = round;
                    visible.push(g);
                }
            }
        }

        let mut horizon: Vec<(Vec<usize>, usize, usize)> = Vec::new();
        for &f in &visible {
            for i in 0..facets[f].verts.len() {
                let g = facets[f].neighbors[i];
                if visible_mark[g] != round {
                    let ridge: Vec<usize> = facets[f]
                        .verts
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &v)| v)
                        .collect();
                    horizon.push((ridge, f, g));
                }
            }
        }

        let mut pending: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        let first_new = facets.len();
        for (ridge, old, g) in horizon {
            let id = facets.len();
            let mut verts = ridge.clone();
            verts.push(p);
            let mut nf = oriented_facet(pts, verts, &interior);
            nf.neighbors[k - 1] = g;
            let slot = facets[g]
                .neighbors
                .iter()
                .position(|&n| n == old)
                .ok_or_else(|| GeometryError::Numerical("horizon neighbor is not adjacent".into()))?;
            facets[g].neighbors[slot] = id;
            for j in 0..ridge.len() {
                let mut key: Vec<usize> = ridge.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect();
                key.sort_unstable();
                if let Some((other, oslot)) = pending.remove(&key) {
                    nf.neighbors[j] = other;
                    facets[other].neighbors[oslot] = id;
                } else {
                    pending.insert(key, (id, j));
                }
            }
            facets.push(nf);
        }
        if !pending.is_empty() {
            return Err(GeometryError::Numerical("horizon is not a closed ridge cycle".into()));
        }

        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            facets[f].alive = false;
            orphans.append(&mut facets[f].outside);
        }
        orphans.sort_unstable();
        for o in orphans {
            if o == p {
                continue;
            }
            if let Some(f) = facets[first_new..].iter_mut().find(|f| distance(f, &pts[o]) > tol) {
                f.outside.push(o);
            }
        }
    }
    Ok(facets.into_iter().filter(|f| f.alive).collect())
}
