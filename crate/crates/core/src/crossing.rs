//! Straight-line drawings with crossings, planarization and the
//! level-removal scheme for graphs with few crossings per edge.

use serde::{Deserialize, Serialize};

use crate::dp::table_cap;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{energy_unchecked, Instance, Objective, Partition};
use crate::shifting::{best_of, bfs_layers, into_result, stitch, ApproxResult, Candidate, Piece};

const GEOM_EPS: f64 = 1e-12;

/// A proper crossing of two edges, with the parameter of the crossing
/// point along each edge (0 at the first endpoint, 1 at the second).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub edge_a: usize,
    pub edge_b: usize,
    pub t_a: f64,
    pub t_b: f64,
    pub point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drawing {
    pub coords: Vec<[f64; 2]>,
    pub crossings: Vec<Crossing>,
}

impl Drawing {
    /// Crossings on each edge.
    pub fn per_edge(&self, num_edges: usize) -> Vec<usize> {
        let mut count = vec![0usize; num_edges];
        for c in &self.crossings {
            count[c.edge_a] += 1;
            count[c.edge_b] += 1;
        }
        count
    }

    /// Crossing parameter: the most crossings on any single edge.
    pub fn phi(&self, num_edges: usize) -> usize {
        self.per_edge(num_edges).into_iter().max().unwrap_or(0)
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn scale(pts: &[[f64; 2]]) -> f64 {
    pts.iter()
        .flat_map(|p| p.iter())
        .fold(1.0f64, |m, x| m.max(x.abs()))
}

/// Whether `p` lies strictly inside segment `ab` (up to tolerance).
fn on_open_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2], eps: f64) -> bool {
    let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
    if orient(a, b, p).abs() > eps * len2.sqrt().max(1.0) {
        return false;
    }
    let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / len2;
    t > GEOM_EPS && t < 1.0 - GEOM_EPS
}

/// All proper pairwise segment intersections of a straight-line drawing.
pub fn compute_crossings(coords: &[[f64; 2]], edges: &[(usize, usize)]) -> Result<Drawing> {
    let n = coords.len();
    let eps = GEOM_EPS * scale(coords).powi(2);
    for (i, p) in coords.iter().enumerate() {
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Degeneracy(format!(
                "vertex {i} has a non-finite coordinate"
            )));
        }
        for (j, r) in coords.iter().enumerate().skip(i + 1) {
            if (p[0] - r[0]).abs() <= GEOM_EPS && (p[1] - r[1]).abs() <= GEOM_EPS {
                return Err(Error::Degeneracy(format!(
                    "vertices {i} and {j} share a point"
                )));
            }
        }
    }
    for (e, &(u, v)) in edges.iter().enumerate() {
        if u >= n || v >= n {
            return Err(Error::Consistency(format!(
                "edge {e} references a vertex without coordinates"
            )));
        }
        for w in 0..n {
            if w != u && w != v && on_open_segment(coords[w], coords[u], coords[v], eps) {
                return Err(Error::Degeneracy(format!(
                    "vertex {w} lies on the interior of edge {e} ({u},{v})"
                )));
            }
        }
    }

    let mut crossings = Vec::new();
    for (ea, &(a0, a1)) in edges.iter().enumerate() {
        for (eb, &(b0, b1)) in edges.iter().enumerate().skip(ea + 1) {
            let (p, p2, r, r2) = (coords[a0], coords[a1], coords[b0], coords[b1]);
            let o1 = orient(p, p2, r);
            let o2 = orient(p, p2, r2);
            let o3 = orient(r, r2, p);
            let o4 = orient(r, r2, p2);
            // collinear overlaps put a vertex on an edge interior, rejected above
            let shares = a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1;
            if shares || (o1.abs() <= eps && o2.abs() <= eps) {
                continue;
            }
            if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                let t_a = o3 / (o3 - o4);
                let t_b = o1 / (o1 - o2);
                let point = [p[0] + t_a * (p2[0] - p[0]), p[1] + t_a * (p2[1] - p[1])];
                crossings.push(Crossing {
                    edge_a: ea,
                    edge_b: eb,
                    t_a,
                    t_b,
                    point,
                });
            }
        }
    }
    let tol = 1e-9 * scale(coords);
    for i in 0..crossings.len() {
        for j in i + 1..crossings.len() {
            let (a, b) = (crossings[i].point, crossings[j].point);
            if (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol {
                return Err(Error::Degeneracy(format!(
                    "crossings of edges ({}, {}) and ({}, {}) share a point",
                    crossings[i].edge_a,
                    crossings[i].edge_b,
                    crossings[j].edge_a,
                    crossings[j].edge_b
                )));
            }
        }
    }
    Ok(Drawing {
        coords: coords.to_vec(),
        crossings,
    })
}

/// Planar graph obtained by replacing every crossing with a new vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Planarization {
    pub graph: Graph,
    /// Number of original vertices; vertex `original + c` stands for crossing `c`.
    pub original: usize,
    /// Original edge of every planarized edge segment.
    pub segment_origin: Vec<usize>,
}

impl Planarization {
    pub fn crossing_of(&self, v: usize) -> Option<usize> {
        v.checked_sub(self.original)
    }
}

pub fn planarize(graph: &Graph, drawing: &Drawing) -> Result<Planarization> {
    let n = graph.num_vertices();
    let m = graph.edges().len();
    if drawing.coords.len() != n {
        return Err(Error::Consistency(format!(
            "drawing has {} points for {n} vertices",
            drawing.coords.len()
        )));
    }
    let mut along: Vec<Vec<(f64, usize)>> = vec![Vec::new(); m];
    for (c, x) in drawing.crossings.iter().enumerate() {
        if x.edge_a >= m || x.edge_b >= m || x.edge_a == x.edge_b {
            return Err(Error::Consistency(format!(
                "crossing {c} references invalid edges"
            )));
        }
        for t in [x.t_a, x.t_b] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Consistency(format!(
                    "crossing {c} has parameter {t} outside (0,1)"
                )));
            }
        }
        along[x.edge_a].push((x.t_a, n + c));
        along[x.edge_b].push((x.t_b, n + c));
    }
    let mut edges = Vec::new();
    let mut segment_origin = Vec::new();
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        along[e].sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prev = u;
        for &(_, x) in &along[e] {
            edges.push((prev, x));
            segment_origin.push(e);
            prev = x;
        }
        edges.push((prev, v));
        segment_origin.push(e);
    }
    Ok(Planarization {
        graph: Graph::new(n + drawing.crossings.len(), &edges),
        original: n,
        segment_origin,
    })
}

/// `(k - φ - 2) / k`.
pub fn crossing_ratio(k: usize, phi: usize) -> f64 {
    (k as f64 - phi as f64 - 2.0) / k as f64
}

/// Removes `φ` consecutive levels of every period of `k` BFS levels of the
/// planarization and solves the remaining chunks of original vertices.
pub fn crossing_solve(
    inst: &Instance,
    drawing: &Drawing,
    part: &Partition,
    k: usize,
) -> Result<ApproxResult> {
    if inst.is_directed() {
        return Err(Error::Precondition(
            "crossing scheme expects an undirected instance; merge arcs first".into(),
        ));
    }
    part.check_for(inst)?;
    inst.require_nonnegative("crossing max-sum shifting")?;
    let graph = inst.graph();
    let phi = drawing.phi(graph.edges().len());
    if k <= phi + 2 {
        return Err(Error::Parameter(format!(
            "need k > phi + 2 = {}, got k = {k}",
            phi + 2
        )));
    }
    let planar = planarize(&graph, drawing)?;
    let levels = bfs_layers(&planar.graph).level;
    let n = inst.num_vertices();
    let period = k as i64;
    let cap = table_cap();
    let shifts = (0..k).map(|ell| vec![ell]).collect();

    let (best, per_shift) = best_of(shifts, Objective::Max, |shift| {
        let ell = shift[0] as i64;
        let residue = |v: usize| (levels[v] as i64 - ell).rem_euclid(period) as usize;
        let chunk = |v: usize| (levels[v] as i64 - ell).div_euclid(period);
        let removed = |v: usize| residue(v) < phi;
        let keep = |e: usize| {
            let (u, v) = graph.edges()[e];
            !removed(u) && !removed(v) && chunk(u) == chunk(v)
        };
        let kept: Vec<(usize, usize)> = (0..graph.edges().len())
            .filter(|&e| keep(e))
            .map(|e| graph.edges()[e])
            .collect();
        let pieces: Vec<Piece> = Graph::new(n, &kept)
            .components()
            .into_iter()
            .filter(|c| !removed(c[0]))
            .map(|vertices| {
                let interior = vertices
                    .iter()
                    .copied()
                    .filter(|&v| {
                        let r = residue(v);
                        r != phi && r != k - 1
                    })
                    .collect();
                Piece {
                    vertices,
                    interior,
                    groups: None,
                }
            })
            .collect();
        let mut cand = stitch(inst, part, shift, &pieces, &keep, Objective::Max, cap)?;
        let dropped: Vec<usize> = (0..n).filter(|&v| removed(v)).collect();
        improve_greedily(inst, &mut cand, &dropped);
        Ok(cand)
    })?;
    Ok(into_result(best, per_shift, crossing_ratio(k, phi), k))
}

/// One pass over `vertices`, moving each to the label that maximizes the
/// energy with all other labels fixed. Only strict gains are taken.
fn improve_greedily(inst: &Instance, cand: &mut Candidate, vertices: &[usize]) {
    if vertices.is_empty() {
        return;
    }
    let incidence = inst.incidence();
    for &v in vertices {
        let local = |labels: &[usize]| -> f64 {
            let mut s = inst.vertex_potential(v)[labels[v]];
            for &(e, w, first) in &incidence[v] {
                s += if first {
                    inst.edge_value(e, labels[v], labels[w])
                } else {
                    inst.edge_value(e, labels[w], labels[v])
                };
            }
            s
        };
        let mut best = local(&cand.labels);
        let current = cand.labels[v];
        let mut choice = current;
        for &a in inst.allowed_labels(v) {
            cand.labels[v] = a;
            let s = local(&cand.labels);
            if s > best {
                best = s;
                choice = a;
            }
        }
        cand.labels[v] = choice;
    }
    cand.energy = energy_unchecked(inst, &cand.labels);
    cand.value = cand.energy;
}
