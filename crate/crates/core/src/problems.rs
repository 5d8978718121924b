//! Encoders from named optimization problems to energy instances, plus the
//! MAX k-CUT terminal enumeration and Edwards-Anderson ground states.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    balance_report, AlphaStar, Instance, Objective, Partition, DEFAULT_BALANCE_CAP,
};
use crate::oracle::{exact_opt, DEFAULT_ORACLE_CAP};
use crate::shifting::{baker_max, baker_min_balanced, td_exact, ApproxResult};

/// Accumulates edge tables, summing repeated vertex pairs into the first
/// occurrence (transposing when the orientation differs).
struct TableBuilder {
    q: usize,
    directed: bool,
    slot: HashMap<(usize, usize), usize>,
    edges: Vec<(usize, usize)>,
    tables: Vec<Vec<f64>>,
}

impl TableBuilder {
    fn new(q: usize, directed: bool) -> Self {
        TableBuilder {
            q,
            directed,
            slot: HashMap::new(),
            edges: Vec::new(),
            tables: Vec::new(),
        }
    }

    fn add(&mut self, u: usize, v: usize, entry: impl Fn(usize, usize) -> f64) {
        let q = self.q;
        let key = if self.directed {
            (u, v)
        } else {
            (u.min(v), u.max(v))
        };
        let idx = *self.slot.entry(key).or_insert_with(|| {
            self.edges.push((u, v));
            self.tables.push(vec![0.0; q * q]);
            self.edges.len() - 1
        });
        let flipped = self.edges[idx].0 != u;
        for a in 0..q {
            for b in 0..q {
                self.tables[idx][a * q + b] += if flipped { entry(b, a) } else { entry(a, b) };
            }
        }
    }

    fn finish(self, n: usize) -> Result<Instance> {
        Instance::new(
            self.q,
            self.directed,
            n,
            self.edges,
            vec![vec![0.0; self.q]; n],
            self.tables,
        )
    }
}

fn check_weight(w: f64, what: &str) -> Result<()> {
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::Domain(format!(
            "{what} weight must be a finite nonnegative number, got {w}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspConstraint {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    /// `satisfied[a][b]`: whether labels `(a, b)` for `(u, v)` satisfy it.
    pub satisfied: Vec<Vec<bool>>,
}

/// MAX 2-CSP: `φ_uv(a, b) = w·[constraint satisfied]`, zero vertex terms.
pub fn encode_max2csp(
    q: usize,
    num_vars: usize,
    constraints: &[CspConstraint],
) -> Result<Instance> {
    let mut builder = TableBuilder::new(q, false);
    for (i, c) in constraints.iter().enumerate() {
        check_weight(c.weight, "constraint")?;
        if c.satisfied.len() != q || c.satisfied.iter().any(|row| row.len() != q) {
            return Err(Error::InvalidInstance(format!(
                "constraint {i} table must be {q}x{q}"
            )));
        }
        if c.u >= num_vars || c.v >= num_vars || c.u == c.v {
            return Err(Error::InvalidInstance(format!(
                "constraint {i} joins invalid variables ({}, {})",
                c.u, c.v
            )));
        }
        builder.add(
            c.u,
            c.v,
            |a, b| if c.satisfied[a][b] { c.weight } else { 0.0 },
        );
    }
    builder.finish(num_vars)
}

/// MAX-CUT: `q = 2`, weight `w` on the off-diagonal of every edge table.
pub fn encode_maxcut(n: usize, edges: &[(usize, usize, f64)]) -> Result<Instance> {
    encode_kcut(n, edges, 2)
}

/// Cut tables over `k_cut` labels: `w` when the labels differ.
pub fn encode_kcut(n: usize, edges: &[(usize, usize, f64)], k_cut: usize) -> Result<Instance> {
    let mut builder = TableBuilder::new(k_cut, false);
    for &(u, v, w) in edges {
        check_weight(w, "edge")?;
        if u >= n || v >= n || u == v {
            return Err(Error::InvalidInstance(format!("invalid edge ({u}, {v})")));
        }
        builder.add(u, v, |a, b| if a != b { w } else { 0.0 });
    }
    builder.finish(n)
}

/// MAX-DICUT: directed instance with `φ_uv(1, 0) = w`. Merge with
/// [`crate::model::to_undirected`] before solving.
pub fn encode_maxdicut(n: usize, arcs: &[(usize, usize, f64)]) -> Result<Instance> {
    let mut builder = TableBuilder::new(2, true);
    for &(u, v, w) in arcs {
        check_weight(w, "arc")?;
        if u >= n || v >= n || u == v {
            return Err(Error::InvalidInstance(format!("invalid arc ({u}, {v})")));
        }
        builder.add(u, v, |a, b| if a == 1 && b == 0 { w } else { 0.0 });
    }
    builder.finish(n)
}

/// Solver used for every terminal assignment in [`solve_maxkcut`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KCutBackend {
    Oracle,
    /// Exact tree-decomposition DP on the whole graph.
    Exact,
    Baker {
        k: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KCutOptions {
    pub backend: KCutBackend,
    /// Enumerate ordered terminal tuples; unordered (increasing ids) gives
    /// the same optimum with `k_cut!` fewer solves.
    pub ordered: bool,
    pub cap: u64,
}

impl Default for KCutOptions {
    fn default() -> Self {
        KCutOptions {
            backend: KCutBackend::Oracle,
            ordered: true,
            cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KCutResult {
    pub value: f64,
    pub labels: Vec<usize>,
    pub terminals: Vec<usize>,
}

fn terminal_tuples(n: usize, k: usize, ordered: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; n];
    fn rec(
        n: usize,
        k: usize,
        ordered: bool,
        current: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let start = if ordered {
            0
        } else {
            current.last().map_or(0, |&l| l + 1)
        };
        for v in start..n {
            if !used[v] {
                used[v] = true;
                current.push(v);
                rec(n, k, ordered, current, used, out);
                current.pop();
                used[v] = false;
            }
        }
    }
    rec(n, k, ordered, &mut current, &mut used, &mut out);
    out
}

fn count_tuples(n: usize, k: usize, ordered: bool) -> Option<u64> {
    let mut num: u64 = 1;
    for i in 0..k as u64 {
        num = num.checked_mul(n as u64 - i)?;
    }
    if !ordered {
        for i in 1..=k as u64 {
            num /= i;
        }
    }
    Some(num)
}

/// MAX k-CUT by fixing terminal `s_t` to label `t` for every terminal
/// tuple, solving the remaining labeling, and keeping the best.
pub fn solve_maxkcut(
    n: usize,
    edges: &[(usize, usize, f64)],
    k_cut: usize,
    options: &KCutOptions,
) -> Result<KCutResult> {
    if k_cut < 2 || k_cut > n {
        return Err(Error::Parameter(format!(
            "need 2 <= k_cut <= n = {n}, got {k_cut}"
        )));
    }
    match count_tuples(n, k_cut, options.ordered) {
        Some(c) if c <= options.cap => {}
        _ => {
            return Err(Error::Capacity(format!(
                "more than {} terminal tuples for n = {n}, k = {k_cut}; use unordered mode or a larger cap",
                options.cap
            )))
        }
    }
    let base = encode_kcut(n, edges, k_cut)?;
    let part = Partition::uniform(base.edges().len());
    let tuples = terminal_tuples(n, k_cut, options.ordered);
    let solved: Vec<(f64, Vec<usize>)> = tuples
        .par_iter()
        .map(|terms| {
            let mut allowed: Vec<Vec<usize>> = vec![(0..k_cut).collect(); n];
            for (t, &s) in terms.iter().enumerate() {
                allowed[s] = vec![t];
            }
            let inst = base.clone().with_allowed_labels(allowed)?;
            let (value, cfg) = match options.backend {
                KCutBackend::Oracle => exact_opt(&inst, Objective::Max, None, DEFAULT_ORACLE_CAP)?,
                KCutBackend::Exact => {
                    let r = td_exact(&inst, &part, Objective::Max)?;
                    (r.energy, r.cfg)
                }
                KCutBackend::Baker { k } => {
                    let r = baker_max(&inst, &part, k)?;
                    (r.energy, r.cfg)
                }
            };
            Ok((value, cfg.into_labels()))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<KCutResult> = None;
    for (terms, (value, labels)) in tuples.into_iter().zip(solved) {
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(KCutResult {
                value,
                labels,
                terminals: terms,
            });
        }
    }
    best.ok_or_else(|| Error::Parameter("no terminal tuple".into()))
}

/// Edwards-Anderson lattice in the convention `E(σ) = Σ J_ij σ_i σ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdwardsAnderson {
    pub dims: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub couplings: Vec<f64>,
    /// Cut-table encoding with `φ_ij = J_ij·[σ_i ≠ σ_j]`.
    pub instance: Instance,
    /// `C = Σ J_ij`.
    pub constant: f64,
}

/// Nearest-neighbor edges of an open lattice, sites in row-major order.
pub fn lattice_edges(dims: &[usize]) -> Vec<(usize, usize)> {
    let n: usize = dims.iter().product();
    let mut strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let mut edges = Vec::new();
    for site in 0..n {
        for (a, &len) in dims.iter().enumerate() {
            let coord = site / strides[a] % len;
            if coord + 1 < len {
                edges.push((site, site + strides[a]));
            }
        }
    }
    edges
}

/// Zero-field ferromagnetic Edwards-Anderson model as MAX-CUT.
/// `couplings` holds one `J` per lattice edge, or a single shared value.
pub fn encode_edwards_anderson(
    dims: &[usize],
    couplings: &[f64],
    field: f64,
) -> Result<EdwardsAnderson> {
    if field != 0.0 {
        return Err(Error::Unsupported(format!(
            "external field B = {field}; only the zero-field model maps to MAX-CUT"
        )));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Parameter(format!(
            "lattice dimensions {dims:?} must be positive"
        )));
    }
    let edges = lattice_edges(dims);
    let couplings: Vec<f64> = match couplings.len() {
        1 => vec![couplings[0]; edges.len()],
        m if m == edges.len() => couplings.to_vec(),
        m => {
            return Err(Error::Parameter(format!(
                "{m} couplings for a lattice with {} edges",
                edges.len()
            )))
        }
    };
    if let Some(j) = couplings.iter().find(|&&j| !(j > 0.0 && j.is_finite())) {
        return Err(Error::Domain(format!(
            "couplings must be positive, got {j}"
        )));
    }
    let n: usize = dims.iter().product();
    let weighted: Vec<(usize, usize, f64)> = edges
        .iter()
        .zip(&couplings)
        .map(|(&(u, v), &j)| (u, v, j))
        .collect();
    let instance = encode_maxcut(n, &weighted)?;
    Ok(EdwardsAnderson {
        dims: dims.to_vec(),
        constant: couplings.iter().sum(),
        edges,
        couplings,
        instance,
    })
}

impl EdwardsAnderson {
    /// Label 0 ↦ spin −1, label 1 ↦ spin +1.
    pub fn spins(labels: &[usize]) -> Vec<i8> {
        labels
            .iter()
            .map(|&a| if a == 0 { -1 } else { 1 })
            .collect()
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        self.edges
            .iter()
            .zip(&self.couplings)
            .map(|(&(u, v), &j)| j * (spins[u] as f64) * (spins[v] as f64))
            .sum()
    }

    /// `E_min = C − 2·maxcut`, with the maximizing cut from an exact DP.
    pub fn ground_state(&self) -> Result<(f64, Vec<i8>)> {
        let part = Partition::uniform(self.edges.len());
        let cut = td_exact(&self.instance, &part, Objective::Max)?;
        Ok((
            self.constant - 2.0 * cut.energy,
            Self::spins(cut.cfg.labels()),
        ))
    }
}

/// Standard pairwise and data terms for labeling problems on images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VisionPotential {
    /// `w·(1 − δ(a, b))`.
    Potts { w: f64 },
    /// `min(κ, |a − b|)`.
    TruncAbs { kappa: f64 },
    /// `min(κ, (a − b)²)`.
    TruncQuad { kappa: f64 },
    /// `(a − p)²`.
    Data { p: f64 },
}

impl VisionPotential {
    pub fn check(&self) -> Result<()> {
        match *self {
            VisionPotential::Potts { w } if w.is_nan() || w < 0.0 => Err(Error::Domain(format!(
                "Potts weight must be nonnegative, got {w}"
            ))),
            VisionPotential::TruncAbs { kappa } | VisionPotential::TruncQuad { kappa }
                if kappa.is_nan() || kappa <= 0.0 =>
            {
                Err(Error::Domain(format!(
                    "truncation must be positive, got {kappa}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn pairwise(&self, a: usize, b: usize) -> f64 {
        let diff = a as f64 - b as f64;
        match *self {
            VisionPotential::Potts { w } => {
                if a == b {
                    0.0
                } else {
                    w
                }
            }
            VisionPotential::TruncAbs { kappa } => kappa.min(diff.abs()),
            VisionPotential::TruncQuad { kappa } => kappa.min(diff * diff),
            VisionPotential::Data { p } => (a as f64 - p).powi(2),
        }
    }

    /// `q×q` table for pairwise kinds, length-`q` vector for `Data`.
    pub fn table(&self, q: usize) -> Vec<f64> {
        match self {
            VisionPotential::Data { .. } => (0..q).map(|a| self.pairwise(a, 0)).collect(),
            _ => (0..q * q).map(|i| self.pairwise(i / q, i % q)).collect(),
        }
    }
}

/// 4-connected `width × height` grid with data terms `(a − p_i)²` and the
/// given smoothness term on every grid edge.
pub fn vision_grid(
    width: usize,
    height: usize,
    q: usize,
    observed: &[f64],
    smoothness: VisionPotential,
) -> Result<Instance> {
    smoothness.check()?;
    if matches!(smoothness, VisionPotential::Data { .. }) {
        return Err(Error::Parameter("smoothness term must be pairwise".into()));
    }
    let n = width * height;
    if observed.len() != n {
        return Err(Error::Parameter(format!(
            "{} observations for {n} pixels",
            observed.len()
        )));
    }
    let edges = lattice_edges(&[height, width]);
    let table = smoothness.table(q);
    let m = edges.len();
    Instance::new(
        q,
        false,
        n,
        edges,
        observed
            .iter()
            .map(|&p| VisionPotential::Data { p }.table(q))
            .collect(),
        vec![table; m],
    )
}

/// Min-sum layer shifting for vision energies. When the folded functions
/// are unbalanced, every data term is raised by `shift` until each
/// balancer is positive; reported energies have the shift removed.
pub fn solve_vision_min(
    inst: &Instance,
    part: &Partition,
    k: usize,
    shift: f64,
) -> Result<(ApproxResult, f64)> {
    let report = balance_report(inst, part, DEFAULT_BALANCE_CAP)?;
    let applied = match report.alpha_star {
        AlphaStar::Finite(_) => 0.0,
        AlphaStar::Unbalanced { vertex } => {
            if shift.is_nan() || shift <= 0.0 {
                return Err(Error::Parameter(format!(
                    "data shift must be positive, got {shift}"
                )));
            }
            log::info!(
                "vertex {vertex} is unbalanced; adding {shift} to every data term and removing it from reported energies"
            );
            shift
        }
    };
    let shifted = inst.shift_vertex_potentials(applied);
    let mut res = baker_min_balanced(&shifted, part, k)?;
    let offset = applied * inst.num_vertices() as f64;
    res.energy -= offset;
    res.value -= offset;
    res.dp_bound -= offset;
    for s in &mut res.per_shift {
        s.value -= offset;
    }
    Ok((res, applied))
}

/// Cut weight of a labeling.
pub fn cut_value(edges: &[(usize, usize, f64)], labels: &[usize]) -> f64 {
    edges
        .iter()
        .filter(|&&(u, v, _)| labels[u] != labels[v])
        .map(|&(_, _, w)| w)
        .sum()
}
