//! Breadth-first layering and the layer-shifting approximation schemes:
//! max-sum, balanced min-sum and max-product.

use rayon::prelude::*;
use serde::Serialize;

use crate::dp::{dp_opt_with_cap, solve_factors, table_cap, Domains, Factor};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{
    balance_report, energy_unchecked, vertex_function, AlphaStar, Configuration, Instance,
    Objective, Partition, DEFAULT_BALANCE_CAP,
};
use crate::treedecomp::{build_pd_from_slabs, build_td, validate_td};

/// BFS level of every vertex and the root of every component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerAssignment {
    pub level: Vec<usize>,
    pub roots: Vec<usize>,
}

/// Levels from the smallest vertex id of each component.
pub fn bfs_layers(graph: &Graph) -> LayerAssignment {
    let roots: Vec<usize> = graph.components().iter().map(|c| c[0]).collect();
    bfs_layers_from(graph, &roots)
}

/// Levels from explicitly chosen roots, one per component.
pub fn bfs_layers_from(graph: &Graph, roots: &[usize]) -> LayerAssignment {
    let mut level = vec![usize::MAX; graph.num_vertices()];
    for &r in roots {
        if level[r] != usize::MAX {
            continue;
        }
        for (v, d) in graph.bfs_distances(r).into_iter().enumerate() {
            if let Some(d) = d {
                level[v] = d;
            }
        }
    }
    debug_assert!(
        level.iter().all(|&l| l != usize::MAX),
        "a component has no root"
    );
    LayerAssignment {
        level,
        roots: roots.to_vec(),
    }
}

/// One connected piece left after deleting the shift's edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftComponent {
    pub vertices: Vec<usize>,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftPlan {
    pub k: usize,
    pub ell: usize,
    /// Indices into the graph's edge list.
    pub deleted_edges: Vec<usize>,
    pub components: Vec<ShiftComponent>,
}

impl ShiftPlan {
    pub fn is_deleted(&self, e: usize) -> bool {
        self.deleted_edges.binary_search(&e).is_ok()
    }
}

/// Deletes every edge from a level `≡ ell` to the next level `≡ ell+1`
/// (mod `k+2`); vertices on those two residues form the boundary.
pub fn shift_split(
    graph: &Graph,
    layers: &LayerAssignment,
    k: usize,
    ell: usize,
) -> Result<ShiftPlan> {
    let period = k + 2;
    if k == 0 || ell >= period {
        return Err(Error::Parameter(format!(
            "need k >= 1 and 0 <= ell <= k+1, got k={k}, ell={ell}"
        )));
    }
    let level = &layers.level;
    let mut deleted = Vec::new();
    let mut kept = Vec::new();
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        let (lo, hi) = (level[u].min(level[v]), level[u].max(level[v]));
        if hi == lo + 1 && lo % period == ell {
            deleted.push(e);
        } else {
            kept.push((u, v));
        }
    }
    let is_boundary = |v: usize| {
        let r = level[v] % period;
        r == ell || r == (ell + 1) % period
    };
    let rest = Graph::new(graph.num_vertices(), &kept);
    let components = rest
        .components()
        .into_iter()
        .map(|vertices| {
            let (boundary, interior) = vertices.iter().partition(|&&v| is_boundary(v));
            ShiftComponent {
                vertices,
                interior,
                boundary,
            }
        })
        .collect();
    Ok(ShiftPlan {
        k,
        ell,
        deleted_edges: deleted,
        components,
    })
}

/// Outcome of one shift, kept for auditing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftOutcome {
    pub shift: Vec<usize>,
    pub value: f64,
    pub dp_bound: f64,
    /// Decomposition widths of the shift's pieces.
    pub widths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxResult {
    pub cfg: Configuration,
    /// Full energy of `cfg` on the input instance.
    pub energy: f64,
    /// The scheme's objective: equal to `energy` for sum schemes, the
    /// product `Π f_i` for max-product.
    pub value: f64,
    /// Sum (product for max-product) of the per-piece DP optima of the
    /// winning shift. Certifies `value >= dp_bound` for maximization.
    pub dp_bound: f64,
    pub ratio_guarantee: f64,
    pub k: usize,
    pub winning_shift: Vec<usize>,
    /// Decomposition widths of the winning shift's pieces.
    pub widths: Vec<usize>,
    pub per_shift: Vec<ShiftOutcome>,
}

/// Smallest `k` with `k/(k+2) >= 1 - epsilon`.
pub fn k_for_epsilon(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(ceil_tolerant(2.0 * (1.0 - epsilon) / epsilon).max(1))
}

pub(crate) fn ceil_tolerant(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// A set of vertices solved by one DP call.
#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub vertices: Vec<usize>,
    /// Vertices whose folded function is optimized (global ids).
    pub interior: Vec<usize>,
    /// Slab groups for a path decomposition; min-fill when absent.
    pub groups: Option<Vec<Vec<usize>>>,
}

pub(crate) struct PieceSolution {
    pub labels: Vec<usize>,
    pub value: f64,
    pub width: usize,
}

pub(crate) fn local_ids(vertices: &[usize], n: usize) -> Vec<usize> {
    let mut local = vec![usize::MAX; n];
    for (i, &v) in vertices.iter().enumerate() {
        local[v] = i;
    }
    local
}

/// Optimizes `Σ_{i∈interior} f_i` on the sub-instance induced by the piece
/// with only the edges accepted by `keep`.
pub(crate) fn solve_piece(
    inst: &Instance,
    part: &Partition,
    piece: &Piece,
    keep: &(dyn Fn(usize) -> bool + Sync),
    objective: Objective,
    cap: u64,
) -> Result<PieceSolution> {
    let (sub, origin) = inst.restrict(&piece.vertices, keep);
    let sub_part = part.select(&origin);
    let local = local_ids(&piece.vertices, inst.num_vertices());
    let interior: Vec<usize> = piece.interior.iter().map(|&v| local[v]).collect();
    let graph = sub.graph();
    let td = match &piece.groups {
        Some(groups) => {
            let groups: Vec<Vec<usize>> = groups
                .iter()
                .map(|g| g.iter().map(|&v| local[v]).collect())
                .collect();
            build_pd_from_slabs(&graph, &groups)?
        }
        None => build_td(&graph),
    };
    let (value, cfg) = dp_opt_with_cap(&sub, &td, &sub_part, &interior, objective, cap)?;
    Ok(PieceSolution {
        labels: cfg.into_labels(),
        value,
        width: td.width(),
    })
}

/// Max of `Σ_{i∈interior} log f_i` on the piece, with every `f_i` kept as a
/// factor over its closed neighborhood.
fn solve_piece_log_product(
    inst: &Instance,
    part: &Partition,
    piece: &Piece,
    keep: &(dyn Fn(usize) -> bool + Sync),
    cap: u64,
) -> Result<PieceSolution> {
    const MAX_DEGREE: usize = 8;
    let (sub, origin) = inst.restrict(&piece.vertices, keep);
    let sub_part = part.select(&origin);
    let local = local_ids(&piece.vertices, inst.num_vertices());
    let q = sub.q();
    let incidence = sub.incidence();
    let mut aug_edges: Vec<(usize, usize)> = sub.edges().to_vec();
    let mut factors = Vec::new();
    let mut labels = vec![0usize; sub.num_vertices()];
    for &g in &piece.interior {
        let v = local[g];
        let mut scope: Vec<usize> = incidence[v].iter().map(|&(_, w, _)| w).collect();
        scope.push(v);
        scope.sort_unstable();
        scope.dedup();
        if scope.len() > MAX_DEGREE + 1 {
            return Err(Error::Capacity(format!(
                "max-product needs degree <= {MAX_DEGREE}; vertex {g} has degree {}",
                scope.len() - 1
            )));
        }
        let mut table = Vec::with_capacity(q.pow(scope.len() as u32));
        let mut digits = vec![0usize; scope.len()];
        loop {
            for (pos, &w) in scope.iter().enumerate() {
                labels[w] = digits[pos];
            }
            table.push(vertex_function(&sub, &sub_part, &incidence[v], v, &labels).ln());
            if !crate::model::advance(&mut digits, |_| q) {
                break;
            }
        }
        for (i, &a) in scope.iter().enumerate() {
            for &b in &scope[i + 1..] {
                aug_edges.push((a, b));
            }
        }
        factors.push(Factor::new(scope, table));
    }
    let td = build_td(&Graph::new(sub.num_vertices(), &aug_edges));
    let allowed: Vec<Vec<usize>> = (0..sub.num_vertices())
        .map(|v| sub.allowed_labels(v).to_vec())
        .collect();
    let (value, labels) = solve_factors(
        Domains {
            q,
            allowed: &allowed,
        },
        &factors,
        &td,
        Objective::Max,
        cap,
    )?;
    Ok(PieceSolution {
        labels,
        value,
        width: td.width(),
    })
}

pub(crate) struct Candidate {
    pub shift: Vec<usize>,
    pub labels: Vec<usize>,
    pub energy: f64,
    pub value: f64,
    pub bound: f64,
    pub widths: Vec<usize>,
}

/// Solves every piece and stitches the labels; vertices outside all pieces
/// keep their smallest allowed label.
pub(crate) fn stitch(
    inst: &Instance,
    part: &Partition,
    shift: Vec<usize>,
    pieces: &[Piece],
    keep: &(dyn Fn(usize) -> bool + Sync),
    objective: Objective,
    cap: u64,
) -> Result<Candidate> {
    let mut labels = inst.smallest_configuration().into_labels();
    let mut bound = 0.0;
    let mut widths = Vec::with_capacity(pieces.len());
    for (i, piece) in pieces.iter().enumerate() {
        let sol = solve_piece(inst, part, piece, keep, objective, cap)
            .map_err(|e| with_context(e, &shift, i))?;
        for (&v, &a) in piece.vertices.iter().zip(&sol.labels) {
            labels[v] = a;
        }
        bound += sol.value;
        widths.push(sol.width);
    }
    let energy = energy_unchecked(inst, &labels);
    Ok(Candidate {
        shift,
        labels,
        energy,
        value: energy,
        bound,
        widths,
    })
}

pub(crate) fn with_context(err: Error, shift: &[usize], piece: usize) -> Error {
    match err {
        Error::Capacity(msg) => Error::Capacity(format!("shift {shift:?}, piece {piece}: {msg}")),
        other => other,
    }
}

/// Evaluates all shifts in parallel and picks the best value; ties go to
/// the earliest shift in the given order.
pub(crate) fn best_of<F>(
    shifts: Vec<Vec<usize>>,
    objective: Objective,
    eval: F,
) -> Result<(Candidate, Vec<ShiftOutcome>)>
where
    F: Fn(Vec<usize>) -> Result<Candidate> + Sync,
{
    let candidates: Vec<Candidate> = shifts
        .into_par_iter()
        .map(&eval)
        .collect::<Result<Vec<_>>>()?;
    let outcomes = candidates
        .iter()
        .map(|c| ShiftOutcome {
            shift: c.shift.clone(),
            value: c.value,
            dp_bound: c.bound,
            widths: c.widths.clone(),
        })
        .collect();
    let mut best: Option<Candidate> = None;
    for c in candidates {
        if best
            .as_ref()
            .is_none_or(|b| objective.improves(c.value, b.value))
        {
            best = Some(c);
        }
    }
    let best = best.ok_or_else(|| Error::Parameter("no shift to evaluate".into()))?;
    Ok((best, outcomes))
}

pub(crate) fn into_result(
    best: Candidate,
    per_shift: Vec<ShiftOutcome>,
    ratio_guarantee: f64,
    k: usize,
) -> ApproxResult {
    ApproxResult {
        cfg: Configuration::new(best.labels),
        energy: best.energy,
        value: best.value,
        dp_bound: best.bound,
        ratio_guarantee,
        k,
        winning_shift: best.shift,
        widths: best.widths,
        per_shift,
    }
}

fn check_common(inst: &Instance, part: &Partition, k: usize, context: &str) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    part.check_for(inst)?;
    inst.require_nonnegative(context)
}

fn pieces_of(plan: &ShiftPlan) -> Vec<Piece> {
    plan.components
        .iter()
        .map(|c| Piece {
            vertices: c.vertices.clone(),
            interior: c.interior.clone(),
            groups: None,
        })
        .collect()
}

fn run_layer_shifts(
    inst: &Instance,
    part: &Partition,
    k: usize,
    objective: Objective,
) -> Result<(Candidate, Vec<ShiftOutcome>)> {
    let graph = inst.graph();
    let layers = bfs_layers(&graph);
    let cap = table_cap();
    let shifts = (0..k + 2).map(|ell| vec![ell]).collect();
    best_of(shifts, objective, |shift| {
        let plan = shift_split(&graph, &layers, k, shift[0])?;
        let keep = |e: usize| !plan.is_deleted(e);
        stitch(inst, part, shift, &pieces_of(&plan), &keep, objective, cap)
    })
}

/// Layer-shifting maximization of `Σ f_i`; at least `k/(k+2)` of optimal
/// when every potential is nonnegative.
pub fn baker_max(inst: &Instance, part: &Partition, k: usize) -> Result<ApproxResult> {
    check_common(inst, part, k, "max-sum shifting")?;
    let (best, per_shift) = run_layer_shifts(inst, part, k, Objective::Max)?;
    Ok(into_result(best, per_shift, k as f64 / (k + 2) as f64, k))
}

/// Layer-shifting minimization for `α`-balanced folded functions; within
/// `1 + 2(α-1)/(k+2)` of optimal.
pub fn baker_min_balanced(inst: &Instance, part: &Partition, k: usize) -> Result<ApproxResult> {
    check_common(inst, part, k, "min-sum shifting")?;
    let alpha = match balance_report(inst, part, DEFAULT_BALANCE_CAP)?.alpha_star {
        AlphaStar::Finite(a) => a,
        AlphaStar::Unbalanced { vertex } => {
            return Err(Error::Domain(format!(
                "vertex {vertex} has balancer 0 with a positive maximum; min-sum of unbalanced \
                 f_i admits no such approximation guarantee"
            )))
        }
    };
    let (best, per_shift) = run_layer_shifts(inst, part, k, Objective::Min)?;
    Ok(into_result(
        best,
        per_shift,
        1.0 + 2.0 * (alpha - 1.0) / (k + 2) as f64,
        k,
    ))
}

/// `Π_i f_i` under `labels`.
pub fn product_value(inst: &Instance, part: &Partition, labels: &[usize]) -> f64 {
    let incidence = inst.incidence();
    (0..inst.num_vertices())
        .map(|v| vertex_function(inst, part, &incidence[v], v, labels))
        .product()
}

/// Layer-shifting maximization of `Π f_i` for `f_i >= 1`, reaching at least
/// `OPT^{k/(k+2)}`. `ratio_guarantee` holds that exponent.
pub fn max_product(inst: &Instance, part: &Partition, k: usize) -> Result<ApproxResult> {
    check_common(inst, part, k, "max-product shifting")?;
    let report = balance_report(inst, part, DEFAULT_BALANCE_CAP)?;
    if let Some((v, b)) = report.balancers.iter().enumerate().find(|(_, &b)| b < 1.0) {
        return Err(Error::Domain(format!(
            "max-product needs f_i >= 1 everywhere, but vertex {v} reaches {b}"
        )));
    }
    let graph = inst.graph();
    let layers = bfs_layers(&graph);
    let cap = table_cap();
    let shifts = (0..k + 2).map(|ell| vec![ell]).collect();
    let (best, per_shift) = best_of(shifts, Objective::Max, |shift| {
        let plan = shift_split(&graph, &layers, k, shift[0])?;
        let keep = |e: usize| !plan.is_deleted(e);
        let mut labels = inst.smallest_configuration().into_labels();
        let mut log_bound = 0.0;
        let mut widths = Vec::new();
        for (i, piece) in pieces_of(&plan).iter().enumerate() {
            let sol = solve_piece_log_product(inst, part, piece, &keep, cap)
                .map_err(|e| with_context(e, &shift, i))?;
            for (&v, &a) in piece.vertices.iter().zip(&sol.labels) {
                labels[v] = a;
            }
            log_bound += sol.value;
            widths.push(sol.width);
        }
        Ok(Candidate {
            shift,
            energy: energy_unchecked(inst, &labels),
            value: product_value(inst, part, &labels),
            labels,
            bound: log_bound.exp(),
            widths,
        })
    })?;
    Ok(into_result(best, per_shift, k as f64 / (k + 2) as f64, k))
}

/// Exact optimum of `Σ_i f_i` (i.e. the energy) with a min-fill
/// decomposition of the whole graph.
pub fn td_exact(inst: &Instance, part: &Partition, objective: Objective) -> Result<ApproxResult> {
    part.check_for(inst)?;
    let graph = inst.graph();
    let td = build_td(&graph);
    debug_assert!(validate_td(&graph, &td).is_ok());
    let all: Vec<usize> = (0..inst.num_vertices()).collect();
    let (value, cfg) = dp_opt_with_cap(inst, &td, part, &all, objective, table_cap())?;
    let energy = energy_unchecked(inst, cfg.labels());
    Ok(ApproxResult {
        cfg,
        energy,
        value: energy,
        dp_bound: value,
        ratio_guarantee: 1.0,
        k: 0,
        winning_shift: Vec::new(),
        widths: vec![td.width()],
        per_shift: Vec::new(),
    })
}
