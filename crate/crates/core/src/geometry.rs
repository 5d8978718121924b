//! Geometric graphs over d-dimensional balls, grid decompositions and the
//! multi-axis shifting scheme.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dp::table_cap;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{
    balance_report, to_undirected, AlphaStar, Instance, Objective, Partition, DEFAULT_BALANCE_CAP,
};
use crate::shifting::{best_of, ceil_tolerant, into_result, stitch, ApproxResult, Piece};

/// Snapping distance to grid planes.
const PLANE_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSet {
    pub d: usize,
    pub centers: Vec<Vec<f64>>,
    pub diameters: Vec<f64>,
}

impl BallSet {
    pub fn new(d: usize, centers: Vec<Vec<f64>>, diameters: Vec<f64>) -> Result<Self> {
        let balls = BallSet {
            d,
            centers,
            diameters,
        };
        balls.check()?;
        Ok(balls)
    }

    pub fn check(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidInstance(
                "ball dimension must be at least 1".into(),
            ));
        }
        if self.centers.len() != self.diameters.len() {
            return Err(Error::InvalidInstance(format!(
                "{} centers but {} diameters",
                self.centers.len(),
                self.diameters.len()
            )));
        }
        for (i, c) in self.centers.iter().enumerate() {
            if c.len() != self.d || c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "center {i} must have {} finite coordinates",
                    self.d
                )));
            }
            if !(self.diameters[i] > 0.0 && self.diameters[i].is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "ball {i} needs a positive diameter"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn d_max(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.centers[i]
            .iter()
            .zip(&self.centers[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoMode {
    Intersection,
    Interference,
}

impl GeoMode {
    pub fn cell_size(self, balls: &BallSet) -> f64 {
        match self {
            GeoMode::Intersection => balls.d_max(),
            GeoMode::Interference => balls.d_max() / 2.0,
        }
    }
}

/// Edge `(i, j)` iff `dist(i, j) <= (d_i + d_j) / 2`.
pub fn intersection_graph(balls: &BallSet) -> Graph {
    let n = balls.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if balls.dist(i, j) <= (balls.diameters[i] + balls.diameters[j]) / 2.0 {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, &edges)
}

/// Arc `i → j` iff `dist(i, j) <= d_i / 2`.
pub fn interference_graph(balls: &BallSet) -> Vec<(usize, usize)> {
    let n = balls.len();
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && balls.dist(i, j) <= balls.diameters[i] / 2.0 {
                arcs.push((i, j));
            }
        }
    }
    arcs
}

/// Unordered vertex pairs of the mode's (merged) graph, sorted.
pub fn mode_pairs(balls: &BallSet, mode: GeoMode) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = match mode {
        GeoMode::Intersection => intersection_graph(balls).edges().to_vec(),
        GeoMode::Interference => interference_graph(balls)
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect(),
    };
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDecomposition {
    pub cell_size: f64,
    pub origin: Vec<f64>,
    pub cell_index: Vec<Vec<i64>>,
    pub density: usize,
}

impl GridDecomposition {
    /// Largest number of centers sharing one axis-`axis` slab.
    pub fn thickness(&self, axis: usize) -> usize {
        let mut count: HashMap<i64, usize> = HashMap::new();
        for c in &self.cell_index {
            *count.entry(c[axis]).or_default() += 1;
        }
        count.values().copied().max().unwrap_or(0)
    }
}

/// Largest integer `c` with `origin + c·size < x`; coordinates within
/// `1e-12` of a plane count as on it and fall to the lower cell.
pub fn cell_coordinate(x: f64, origin: f64, size: f64) -> i64 {
    let t = (x - origin) / size;
    let nearest = t.round();
    if (x - (origin + nearest * size)).abs() <= PLANE_SNAP {
        nearest as i64 - 1
    } else {
        t.floor() as i64
    }
}

fn cells_for(balls: &BallSet, size: f64, origin: &[f64]) -> Vec<Vec<i64>> {
    balls
        .centers
        .iter()
        .map(|c| {
            c.iter()
                .zip(origin)
                .map(|(&x, &o)| cell_coordinate(x, o, size))
                .collect()
        })
        .collect()
}

fn density_of(cells: &[Vec<i64>]) -> usize {
    let mut count: HashMap<&[i64], usize> = HashMap::new();
    for c in cells {
        *count.entry(c.as_slice()).or_default() += 1;
    }
    count.values().copied().max().unwrap_or(0)
}

/// Grid of hypercubes with side `d_max` (intersection) or `d_max/2`
/// (interference). `origin` defaults to the all-zeros point.
pub fn grid_decompose(
    balls: &BallSet,
    mode: GeoMode,
    origin: Option<&[f64]>,
) -> Result<GridDecomposition> {
    balls.check()?;
    let origin = origin
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; balls.d]);
    if origin.len() != balls.d {
        return Err(Error::Parameter(format!(
            "origin has {} coordinates, balls live in dimension {}",
            origin.len(),
            balls.d
        )));
    }
    let size = mode.cell_size(balls);
    let cell_index = cells_for(balls, size, &origin);
    let density = density_of(&cell_index);
    Ok(GridDecomposition {
        cell_size: size,
        origin,
        cell_index,
        density,
    })
}

/// Coordinate-wise search over offsets `{center mod cell_size}` (and 0)
/// for an origin of small density. Ties keep the smaller offset.
pub fn search_origin(balls: &BallSet, mode: GeoMode) -> Result<Vec<f64>> {
    balls.check()?;
    let size = mode.cell_size(balls);
    let mut origin = vec![0.0; balls.d];
    for axis in 0..balls.d {
        let mut candidates: Vec<f64> = balls
            .centers
            .iter()
            .map(|c| c[axis].rem_euclid(size))
            .collect();
        candidates.push(0.0);
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        let mut best = (usize::MAX, 0.0);
        for cand in candidates {
            origin[axis] = cand;
            let density = density_of(&cells_for(balls, size, &origin));
            if density < best.0 {
                best = (density, cand);
            }
        }
        origin[axis] = best.1;
    }
    Ok(origin)
}

/// Smallest `k` with `(k/(k+2))^{d-1} >= 1 - epsilon`.
pub fn k_for_epsilon_geo(epsilon: f64, d: usize) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if d <= 1 {
        return Ok(1);
    }
    let rho = (1.0 - epsilon).powf(1.0 / (d - 1) as f64);
    Ok(ceil_tolerant(2.0 * rho / (1.0 - rho)).max(1))
}

/// `(k/(k+2))^{d-1}`.
pub fn geo_ratio(k: usize, d: usize) -> f64 {
    (k as f64 / (k + 2) as f64).powi(d.saturating_sub(1) as i32)
}

/// Settings for [`geo_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeoOptions {
    pub mode: GeoMode,
    pub origin: Option<Vec<f64>>,
    pub objective: Objective,
}

impl Default for GeoOptions {
    fn default() -> Self {
        GeoOptions {
            mode: GeoMode::Intersection,
            origin: None,
            objective: Objective::Max,
        }
    }
}

/// Errors unless the instance's vertex pairs are exactly the mode's graph.
pub fn check_ball_consistency(inst: &Instance, balls: &BallSet, mode: GeoMode) -> Result<()> {
    if balls.len() != inst.num_vertices() {
        return Err(Error::Consistency(format!(
            "{} balls for an instance with {} vertices",
            balls.len(),
            inst.num_vertices()
        )));
    }
    let mut pairs: Vec<(usize, usize)> = inst
        .edges()
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let expected = mode_pairs(balls, mode);
    if pairs != expected {
        let have: HashSet<_> = pairs.iter().collect();
        let want: HashSet<_> = expected.iter().collect();
        let witness = have.symmetric_difference(&want).min().copied();
        return Err(Error::Consistency(format!(
            "instance graph differs from the {mode:?} graph of the balls (e.g. pair {witness:?})"
        )));
    }
    Ok(())
}

/// Shifts along the first `d-1` grid axes, solving each tube with a path
/// decomposition of its axis-`d` slabs.
pub fn geo_solve(
    inst: &Instance,
    balls: &BallSet,
    part: &Partition,
    k: usize,
    options: &GeoOptions,
) -> Result<ApproxResult> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    balls.check()?;
    let merged;
    let inst = if inst.is_directed() {
        merged = to_undirected(inst)?;
        &merged
    } else {
        inst
    };
    part.check_for(inst)?;
    check_ball_consistency(inst, balls, options.mode)?;
    let ratio = match options.objective {
        Objective::Max => {
            inst.require_nonnegative("geometric max-sum shifting")?;
            geo_ratio(k, balls.d)
        }
        Objective::Min => {
            inst.require_nonnegative("geometric min-sum shifting")?;
            match balance_report(inst, part, DEFAULT_BALANCE_CAP)?.alpha_star {
                AlphaStar::Finite(a) => 1.0 + (a - 1.0) * (1.0 - geo_ratio(k, balls.d)),
                AlphaStar::Unbalanced { vertex } => return Err(Error::Domain(format!(
                    "vertex {vertex} has balancer 0; min-sum of unbalanced f_i is not approximable"
                ))),
            }
        }
    };

    let grid = grid_decompose(balls, options.mode, options.origin.as_deref())?;
    let d = balls.d;
    let period = (k + 2) as i64;
    let cap = table_cap();
    let graph = inst.graph();

    let mut shifts: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..d - 1 {
        shifts = shifts
            .into_iter()
            .flat_map(|s| {
                (0..k + 2).map(move |l| {
                    let mut t = s.clone();
                    t.push(l);
                    t
                })
            })
            .collect();
    }

    let cells = &grid.cell_index;
    let (best, per_shift) = best_of(shifts, options.objective, |shift| {
        let deleted = |e: usize| {
            let (u, v) = graph.edges()[e];
            shift.iter().enumerate().any(|(axis, &ell)| {
                let (lo, hi) = (
                    cells[u][axis].min(cells[v][axis]),
                    cells[u][axis].max(cells[v][axis]),
                );
                hi == lo + 1 && lo.rem_euclid(period) == ell as i64
            })
        };
        let boundary = |v: usize| {
            shift.iter().enumerate().any(|(axis, &ell)| {
                let r = (cells[v][axis] - ell as i64).rem_euclid(period);
                r == 0 || r == 1
            })
        };
        let kept: Vec<(usize, usize)> = (0..graph.edges().len())
            .filter(|&e| !deleted(e))
            .map(|e| graph.edges()[e])
            .collect();
        let pieces: Vec<Piece> = Graph::new(graph.num_vertices(), &kept)
            .components()
            .into_iter()
            .map(|vertices| {
                let mut slabs: Vec<(i64, usize)> =
                    vertices.iter().map(|&v| (cells[v][d - 1], v)).collect();
                slabs.sort_unstable();
                let mut groups: Vec<Vec<usize>> = Vec::new();
                let mut last = None;
                for (slab, v) in slabs {
                    if last != Some(slab) {
                        groups.push(Vec::new());
                        last = Some(slab);
                    }
                    groups.last_mut().unwrap().push(v);
                }
                let interior = vertices.iter().copied().filter(|&v| !boundary(v)).collect();
                Piece {
                    vertices,
                    interior,
                    groups: Some(groups),
                }
            })
            .collect();
        let keep = |e: usize| !deleted(e);
        stitch(
            inst,
            part,
            shift.clone(),
            &pieces,
            &keep,
            options.objective,
            cap,
        )
        .map_err(|e| match e {
            Error::Capacity(msg) => {
                Error::Capacity(format!("{msg} (grid density {})", grid.density))
            }
            other => other,
        })
    })?;
    Ok(into_result(best, per_shift, ratio, k))
}
