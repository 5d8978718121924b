//! Pairwise energy model: vertex potentials, edge tables, configurations,
//! edge-function partitions and the folded per-vertex objective.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Absolute tolerance used for real comparisons across the crate.
pub const TOL: f64 = 1e-9;

/// Direction of optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Max,
    Min,
}

impl Objective {
    /// True when `candidate` is strictly better than `incumbent`.
    #[inline]
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Objective::Max => candidate > incumbent,
            Objective::Min => candidate < incumbent,
        }
    }

    pub fn worst(self) -> f64 {
        match self {
            Objective::Max => f64::NEG_INFINITY,
            Objective::Min => f64::INFINITY,
        }
    }
}

/// A labeled-graph energy instance.
///
/// Edge tables are dense `q×q` row-major arrays indexed by
/// `(label of first endpoint, label of second endpoint)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    q: usize,
    directed: bool,
    n: usize,
    edges: Vec<(usize, usize)>,
    vertex_potentials: Vec<Vec<f64>>,
    edge_potentials: Vec<Vec<f64>>,
    allowed: Vec<Vec<usize>>,
    explicit_allowed: bool,
}

impl Instance {
    pub fn new(
        q: usize,
        directed: bool,
        n: usize,
        edges: Vec<(usize, usize)>,
        vertex_potentials: Vec<Vec<f64>>,
        edge_potentials: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInstance(
                "domain size q must be at least 1".into(),
            ));
        }
        if vertex_potentials.len() != n {
            return Err(Error::InvalidInstance(format!(
                "expected {n} vertex potentials, got {}",
                vertex_potentials.len()
            )));
        }
        if edge_potentials.len() != edges.len() {
            return Err(Error::InvalidInstance(format!(
                "expected {} edge potentials, got {}",
                edges.len(),
                edge_potentials.len()
            )));
        }
        for (i, p) in vertex_potentials.iter().enumerate() {
            if p.len() != q {
                return Err(Error::InvalidInstance(format!(
                    "vertex {i} potential has {} entries, expected {q}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "vertex {i} potential is not finite"
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (e, (&(u, v), t)) in edges.iter().zip(&edge_potentials).enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidInstance(format!(
                    "edge {e} ({u},{v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInstance(format!(
                    "edge {e} is a self-loop at {u}"
                )));
            }
            let key = if directed {
                (u, v)
            } else {
                (u.min(v), u.max(v))
            };
            if !seen.insert(key) {
                return Err(Error::InvalidInstance(format!("duplicate edge ({u},{v})")));
            }
            if t.len() != q * q {
                return Err(Error::InvalidInstance(format!(
                    "edge {e} table has {} entries, expected {}",
                    t.len(),
                    q * q
                )));
            }
            if t.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "edge {e} table is not finite"
                )));
            }
        }
        Ok(Instance {
            q,
            directed,
            n,
            edges,
            vertex_potentials,
            edge_potentials,
            allowed: vec![(0..q).collect(); n],
            explicit_allowed: false,
        })
    }

    /// Instance with all potentials zero.
    pub fn zeros(q: usize, n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let m = edges.len();
        Self::new(
            q,
            false,
            n,
            edges,
            vec![vec![0.0; q]; n],
            vec![vec![0.0; q * q]; m],
        )
    }

    /// Restricts each vertex to a nonempty subset of labels.
    pub fn with_allowed_labels(mut self, allowed: Vec<Vec<usize>>) -> Result<Self> {
        if allowed.len() != self.n {
            return Err(Error::InvalidInstance(format!(
                "expected {} allowed-label sets, got {}",
                self.n,
                allowed.len()
            )));
        }
        let mut normalized = Vec::with_capacity(self.n);
        for (i, mut set) in allowed.into_iter().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::InvalidInstance(format!(
                    "vertex {i} has no allowed labels"
                )));
            }
            if let Some(&bad) = set.iter().find(|&&a| a >= self.q) {
                return Err(Error::InvalidInstance(format!(
                    "vertex {i} allows label {bad} outside 0..{}",
                    self.q
                )));
            }
            normalized.push(set);
        }
        self.allowed = normalized;
        self.explicit_allowed = true;
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vertex_potential(&self, v: usize) -> &[f64] {
        &self.vertex_potentials[v]
    }

    pub fn edge_table(&self, e: usize) -> &[f64] {
        &self.edge_potentials[e]
    }

    #[inline]
    pub fn edge_value(&self, e: usize, a: usize, b: usize) -> f64 {
        self.edge_potentials[e][a * self.q + b]
    }

    pub fn allowed_labels(&self, v: usize) -> &[usize] {
        &self.allowed[v]
    }

    /// `Some` only when the instance was built with explicit label restrictions.
    pub fn explicit_allowed_labels(&self) -> Option<&[Vec<usize>]> {
        self.explicit_allowed.then_some(self.allowed.as_slice())
    }

    pub fn graph(&self) -> Graph {
        Graph::new(self.n, &self.edges)
    }

    /// Smallest potential entry across all tables, `+∞` for an empty instance.
    pub fn min_potential(&self) -> f64 {
        self.vertex_potentials
            .iter()
            .chain(&self.edge_potentials)
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Fails with a domain error when any potential is negative.
    pub fn require_nonnegative(&self, context: &str) -> Result<()> {
        for (i, p) in self.vertex_potentials.iter().enumerate() {
            if let Some(x) = p.iter().find(|x| **x < 0.0) {
                return Err(Error::Domain(format!(
                    "{context} requires f_i >= 0 for every vertex, but vertex {i} has potential {x}"
                )));
            }
        }
        for (e, t) in self.edge_potentials.iter().enumerate() {
            if let Some(x) = t.iter().find(|x| **x < 0.0) {
                let (u, v) = self.edges[e];
                return Err(Error::Domain(format!(
                    "{context} requires f_i >= 0 for every vertex, but edge ({u},{v}) has entry {x}"
                )));
            }
        }
        Ok(())
    }

    /// Per vertex: `(edge index, neighbor, vertex is the first endpoint)`.
    pub fn incidence(&self) -> Vec<Vec<(usize, usize, bool)>> {
        let mut inc = vec![Vec::new(); self.n];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            inc[u].push((e, v, true));
            inc[v].push((e, u, false));
        }
        inc
    }

    /// Adds `shift` to every vertex potential entry.
    pub fn shift_vertex_potentials(&self, shift: f64) -> Instance {
        let mut out = self.clone();
        for p in &mut out.vertex_potentials {
            for x in p.iter_mut() {
                *x += shift;
            }
        }
        out
    }

    /// Sub-instance induced by `vertices` (renumbered in the given order),
    /// keeping only the edges accepted by `keep`. Returns the original index
    /// of every retained edge.
    pub fn restrict(
        &self,
        vertices: &[usize],
        mut keep: impl FnMut(usize) -> bool,
    ) -> (Instance, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut edges = Vec::new();
        let mut tables = Vec::new();
        let mut origin = Vec::new();
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            if local[u] != usize::MAX && local[v] != usize::MAX && keep(e) {
                edges.push((local[u], local[v]));
                tables.push(self.edge_potentials[e].clone());
                origin.push(e);
            }
        }
        let sub = Instance {
            q: self.q,
            directed: self.directed,
            n: vertices.len(),
            edges,
            vertex_potentials: vertices
                .iter()
                .map(|&v| self.vertex_potentials[v].clone())
                .collect(),
            edge_potentials: tables,
            allowed: vertices.iter().map(|&v| self.allowed[v].clone()).collect(),
            explicit_allowed: self.explicit_allowed,
        };
        (sub, origin)
    }

    /// Configuration assigning every vertex its smallest allowed label.
    pub fn smallest_configuration(&self) -> Configuration {
        Configuration::new(self.allowed.iter().map(|a| a[0]).collect())
    }

    pub fn check_configuration(&self, cfg: &Configuration) -> Result<()> {
        if cfg.len() != self.n {
            return Err(Error::InvalidConfiguration(format!(
                "configuration has {} labels for {} vertices",
                cfg.len(),
                self.n
            )));
        }
        for (v, &a) in cfg.labels().iter().enumerate() {
            if a >= self.q {
                return Err(Error::InvalidConfiguration(format!(
                    "vertex {v} has label {a} outside 0..{}",
                    self.q
                )));
            }
            if self.allowed[v].binary_search(&a).is_err() {
                return Err(Error::InvalidConfiguration(format!(
                    "vertex {v} has label {a} outside its allowed set {:?}",
                    self.allowed[v]
                )));
            }
        }
        Ok(())
    }
}

/// Label assignment for every vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(Vec<usize>);

impl Configuration {
    pub fn new(labels: Vec<usize>) -> Self {
        Configuration(labels)
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for Configuration {
    fn from(labels: Vec<usize>) -> Self {
        Configuration(labels)
    }
}

/// Per-edge split coefficients `(alpha_uv, alpha_vu)` folding each edge
/// table into the vertex functions of its two endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition(Vec<(f64, f64)>);

impl Partition {
    pub fn new(split: Vec<(f64, f64)>) -> Result<Self> {
        for (e, &(a, b)) in split.iter().enumerate() {
            if !(a >= 0.0 && b >= 0.0) || (a + b - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidPartition(format!(
                    "edge {e} has coefficients ({a}, {b}); need nonnegative values summing to 1"
                )));
            }
        }
        Ok(Partition(split))
    }

    /// `(1/2, 1/2)` on every edge.
    pub fn uniform(num_edges: usize) -> Self {
        Partition(vec![(0.5, 0.5); num_edges])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, e: usize) -> (f64, f64) {
        self.0[e]
    }

    pub fn check_for(&self, inst: &Instance) -> Result<()> {
        if self.0.len() != inst.edges().len() {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} edges, instance has {}",
                self.0.len(),
                inst.edges().len()
            )));
        }
        Ok(())
    }

    /// Partition of a sub-instance whose edges map to `origin` in this one.
    pub fn select(&self, origin: &[usize]) -> Partition {
        Partition(origin.iter().map(|&e| self.0[e]).collect())
    }

    /// Weight with which edge `e` enters `Σ_{i∈U} f_i`.
    #[inline]
    pub fn coefficient(&self, e: usize, u_in: bool, v_in: bool) -> f64 {
        let (a, b) = self.0[e];
        (if u_in { a } else { 0.0 }) + (if v_in { b } else { 0.0 })
    }
}

/// `Σ_i φ_i(σ_i) + Σ_(i,j) φ_ij(σ_i,σ_j)`, vertices first, then edges in list order.
pub fn energy(inst: &Instance, cfg: &Configuration) -> Result<f64> {
    inst.check_configuration(cfg)?;
    Ok(energy_unchecked(inst, cfg.labels()))
}

pub(crate) fn energy_unchecked(inst: &Instance, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (v, &a) in labels.iter().enumerate() {
        total += inst.vertex_potentials[v][a];
    }
    for (e, &(u, v)) in inst.edges.iter().enumerate() {
        total += inst.edge_value(e, labels[u], labels[v]);
    }
    total
}

/// Membership mask for a vertex subset.
pub fn vertex_mask(n: usize, subset: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &v in subset {
        if v >= n {
            return Err(Error::InvalidInstance(format!(
                "vertex set contains unknown vertex {v} (instance has {n})"
            )));
        }
        mask[v] = true;
    }
    Ok(mask)
}

/// `Σ_{i∈U} f_i` with `f_i = φ_i + Σ_j α_ij φ_ij`.
pub fn folded_energy(
    inst: &Instance,
    part: &Partition,
    subset: &[usize],
    cfg: &Configuration,
) -> Result<f64> {
    part.check_for(inst)?;
    let mask = vertex_mask(inst.n, subset)?;
    inst.check_configuration(cfg)?;
    Ok(folded_energy_masked(inst, part, &mask, cfg.labels()))
}

pub(crate) fn folded_energy_masked(
    inst: &Instance,
    part: &Partition,
    mask: &[bool],
    labels: &[usize],
) -> f64 {
    let mut total = 0.0;
    for (v, &a) in labels.iter().enumerate() {
        if mask[v] {
            total += inst.vertex_potentials[v][a];
        }
    }
    for (e, &(u, v)) in inst.edges.iter().enumerate() {
        let c = part.coefficient(e, mask[u], mask[v]);
        if c != 0.0 {
            total += c * inst.edge_value(e, labels[u], labels[v]);
        }
    }
    total
}

/// `f_v` evaluated under `labels` (only `v` and its neighbors are read).
pub fn vertex_function(
    inst: &Instance,
    part: &Partition,
    incidence: &[(usize, usize, bool)],
    v: usize,
    labels: &[usize],
) -> f64 {
    let mut total = inst.vertex_potentials[v][labels[v]];
    for &(e, w, first) in incidence {
        let (a, b) = part.get(e);
        total += if first {
            a * inst.edge_value(e, labels[v], labels[w])
        } else {
            b * inst.edge_value(e, labels[w], labels[v])
        };
    }
    total
}

/// Converts a directed instance into an undirected one with identical
/// energies. Antiparallel arcs merge into one edge oriented like the first
/// arc seen, with table `T_ij(a,b) + T_ji(b,a)`.
pub fn to_undirected(inst: &Instance) -> Result<Instance> {
    if !inst.directed {
        return Err(Error::Precondition(
            "to_undirected expects a directed instance".into(),
        ));
    }
    let q = inst.q;
    let mut slot: std::collections::HashMap<(usize, usize), usize> = Default::default();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut tables: Vec<Vec<f64>> = Vec::new();
    for (e, &(u, v)) in inst.edges.iter().enumerate() {
        let key = (u.min(v), u.max(v));
        match slot.get(&key) {
            None => {
                slot.insert(key, edges.len());
                edges.push((u, v));
                tables.push(inst.edge_potentials[e].clone());
            }
            Some(&idx) => {
                let (fu, _) = edges[idx];
                let table = &mut tables[idx];
                for a in 0..q {
                    for b in 0..q {
                        table[a * q + b] += if fu == u {
                            inst.edge_value(e, a, b)
                        } else {
                            inst.edge_value(e, b, a)
                        };
                    }
                }
            }
        }
    }
    let out = Instance::new(
        q,
        false,
        inst.n,
        edges,
        inst.vertex_potentials.clone(),
        tables,
    )?;
    if inst.explicit_allowed {
        out.with_allowed_labels(inst.allowed.clone())
    } else {
        Ok(out)
    }
}

/// Least `α` for which the folded functions are `α`-balanced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaStar {
    Finite(f64),
    /// Some vertex has balancer 0 but a positive maximum.
    Unbalanced {
        vertex: usize,
    },
}

impl AlphaStar {
    pub fn value(self) -> Option<f64> {
        match self {
            AlphaStar::Finite(a) => Some(a),
            AlphaStar::Unbalanced { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub balancers: Vec<f64>,
    pub maxima: Vec<f64>,
    pub alpha_star: AlphaStar,
}

pub const DEFAULT_BALANCE_CAP: u64 = 1_000_000;

/// Balancer `b_i = min f_i` and maximum `M_i = max f_i` per vertex, by
/// enumeration of closed-neighborhood labelings.
pub fn balance_report(inst: &Instance, part: &Partition, cap: u64) -> Result<BalanceReport> {
    part.check_for(inst)?;
    if inst.min_potential() < 0.0 {
        inst.require_nonnegative("balance analysis")?;
    }
    let incidence = inst.incidence();
    let mut labels = inst.smallest_configuration().into_labels();
    let mut balancers = Vec::with_capacity(inst.n);
    let mut maxima = Vec::with_capacity(inst.n);
    let mut alpha = 1.0f64;
    let mut unbalanced = None;
    for v in 0..inst.n {
        let mut scope: Vec<usize> = incidence[v].iter().map(|&(_, w, _)| w).collect();
        scope.push(v);
        scope.sort_unstable();
        scope.dedup();
        let count = scope.iter().try_fold(1u64, |acc, &w| {
            acc.checked_mul(inst.allowed[w].len() as u64)
                .filter(|&c| c <= cap)
        });
        if count.is_none() {
            return Err(Error::Capacity(format!(
                "closed neighborhood of vertex {v} has more than {cap} labelings"
            )));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut digits = vec![0usize; scope.len()];
        loop {
            for (pos, &w) in scope.iter().enumerate() {
                labels[w] = inst.allowed[w][digits[pos]];
            }
            let f = vertex_function(inst, part, &incidence[v], v, &labels);
            lo = lo.min(f);
            hi = hi.max(f);
            if !advance(&mut digits, |pos| inst.allowed[scope[pos]].len()) {
                break;
            }
        }
        if lo > 0.0 {
            alpha = alpha.max(hi / lo);
        } else if hi > 0.0 && unbalanced.is_none() {
            unbalanced = Some(v);
        }
        balancers.push(lo);
        maxima.push(hi);
    }
    let alpha_star = match unbalanced {
        Some(vertex) => AlphaStar::Unbalanced { vertex },
        None => AlphaStar::Finite(alpha),
    };
    Ok(BalanceReport {
        balancers,
        maxima,
        alpha_star,
    })
}

/// Odometer increment with the last position fastest. Returns false on wrap.
pub(crate) fn advance(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for pos in (0..digits.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < radix(pos) {
            return true;
        }
        digits[pos] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> Instance {
        Instance::new(
            2,
            false,
            2,
            vec![(0, 1)],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![vec![5.0, 6.0, 7.0, 8.0]],
        )
        .unwrap()
    }

    #[test]
    fn energy_direct_sum() {
        assert_eq!(energy(&p2(), &vec![1, 0].into()).unwrap(), 12.0);
        let zero = Instance::zeros(3, 3, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(energy(&zero, &vec![2, 1, 0].into()).unwrap(), 0.0);
    }

    #[test]
    fn energy_cut_table() {
        let inst = Instance::new(
            2,
            false,
            2,
            vec![(0, 1)],
            vec![vec![0.0; 2]; 2],
            vec![vec![0.0, 3.0, 3.0, 0.0]],
        )
        .unwrap();
        assert_eq!(energy(&inst, &vec![0, 1].into()).unwrap(), 3.0);
    }

    #[test]
    fn energy_rejects_bad_labels() {
        let inst = p2();
        assert!(matches!(
            energy(&inst, &vec![2, 0].into()),
            Err(Error::InvalidConfiguration(_))
        ));
        let restricted = inst.with_allowed_labels(vec![vec![0], vec![0, 1]]).unwrap();
        assert!(matches!(
            energy(&restricted, &vec![1, 0].into()),
            Err(Error::InvalidConfiguration(_))
        ));
        assert!(matches!(
            energy(&restricted, &vec![0].into()),
            Err(Error::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn invalid_instances_are_rejected() {
        assert!(Instance::zeros(0, 1, vec![]).is_err());
        assert!(Instance::zeros(2, 2, vec![(0, 0)]).is_err());
        assert!(Instance::zeros(2, 2, vec![(0, 1), (1, 0)]).is_err());
        assert!(Instance::zeros(2, 2, vec![(0, 2)]).is_err());
        assert!(Instance::new(2, false, 1, vec![], vec![vec![0.0]], vec![]).is_err());
        assert!(Instance::zeros(2, 2, vec![])
            .unwrap()
            .with_allowed_labels(vec![vec![], vec![0]])
            .is_err());
        // antiparallel arcs are fine in a digraph
        assert!(Instance::new(
            2,
            true,
            2,
            vec![(0, 1), (1, 0)],
            vec![vec![0.0; 2]; 2],
            vec![vec![0.0; 4]; 2]
        )
        .is_ok());
    }

    #[test]
    fn folded_energy_cases() {
        let inst = p2();
        let part = Partition::uniform(1);
        let cfg: Configuration = vec![1, 1].into();
        let all = folded_energy(&inst, &part, &[0, 1], &cfg).unwrap();
        assert!((all - energy(&inst, &cfg).unwrap()).abs() < TOL);
        assert_eq!(folded_energy(&inst, &part, &[], &cfg).unwrap(), 0.0);
        assert!(folded_energy(&inst, &part, &[5], &cfg).is_err());

        let edge_only = Instance::new(
            2,
            false,
            2,
            vec![(0, 1)],
            vec![vec![0.0; 2]; 2],
            vec![vec![5.0, 6.0, 7.0, 8.0]],
        )
        .unwrap();
        let one_sided = Partition::new(vec![(1.0, 0.0)]).unwrap();
        assert_eq!(
            folded_energy(&edge_only, &one_sided, &[0], &vec![1, 0].into()).unwrap(),
            7.0
        );
        assert_eq!(
            folded_energy(&edge_only, &one_sided, &[1], &vec![1, 0].into()).unwrap(),
            0.0
        );
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![(0.3, 0.7)]).is_ok());
        assert!(Partition::new(vec![(0.3, 0.6)]).is_err());
        assert!(Partition::new(vec![(-0.5, 1.5)]).is_err());
        assert!(Partition::new(vec![(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn to_undirected_single_arc_and_empty() {
        let inst = Instance::new(
            2,
            true,
            2,
            vec![(0, 1)],
            vec![vec![0.0; 2]; 2],
            vec![vec![1.0, 2.0, 3.0, 4.0]],
        )
        .unwrap();
        let u = to_undirected(&inst).unwrap();
        assert!(!u.is_directed());
        assert_eq!(u.edges(), &[(0, 1)]);
        assert_eq!(u.edge_table(0), &[1.0, 2.0, 3.0, 4.0]);

        let empty = Instance::new(3, true, 0, vec![], vec![], vec![]).unwrap();
        let u = to_undirected(&empty).unwrap();
        assert_eq!(u.num_vertices(), 0);
        assert!(u.edges().is_empty());
        assert!(to_undirected(&u).is_err());
    }

    #[test]
    fn to_undirected_merges_antiparallel_pair() {
        let t1 = vec![1.0, 2.0, 3.0, 4.0];
        let t2 = vec![10.0, 20.0, 30.0, 40.0];
        let inst = Instance::new(
            2,
            true,
            2,
            vec![(0, 1), (1, 0)],
            vec![vec![0.5, 0.25]; 2],
            vec![t1.clone(), t2.clone()],
        )
        .unwrap();
        let u = to_undirected(&inst).unwrap();
        assert_eq!(u.edges().len(), 1);
        // merged(a,b) = T1(a,b) + T2(b,a)
        assert_eq!(u.edge_table(0), &[11.0, 32.0, 23.0, 44.0]);
        for a in 0..2 {
            for b in 0..2 {
                let cfg: Configuration = vec![a, b].into();
                assert_eq!(energy(&inst, &cfg).unwrap(), energy(&u, &cfg).unwrap());
            }
        }
    }

    #[test]
    fn balance_isolated_vertices() {
        let inst = Instance::new(
            2,
            false,
            2,
            vec![],
            vec![vec![2.0, 2.0], vec![1.0, 2.0]],
            vec![],
        )
        .unwrap();
        let rep = balance_report(&inst, &Partition::uniform(0), DEFAULT_BALANCE_CAP).unwrap();
        assert_eq!(rep.balancers, vec![2.0, 1.0]);
        assert_eq!(rep.maxima, vec![2.0, 2.0]);
        assert_eq!(rep.alpha_star, AlphaStar::Finite(2.0));

        let single = Instance::new(2, false, 1, vec![], vec![vec![2.0, 2.0]], vec![]).unwrap();
        let rep = balance_report(&single, &Partition::uniform(0), DEFAULT_BALANCE_CAP).unwrap();
        assert_eq!(rep.alpha_star, AlphaStar::Finite(1.0));
    }

    #[test]
    fn balance_p2_potts() {
        // f_i ranges over 1 + 0.5·[σ_0 != σ_1]: min 1, max 1.5.
        let inst = Instance::new(
            2,
            false,
            2,
            vec![(0, 1)],
            vec![vec![1.0, 1.0]; 2],
            vec![vec![0.0, 1.0, 1.0, 0.0]],
        )
        .unwrap();
        let rep = balance_report(&inst, &Partition::uniform(1), DEFAULT_BALANCE_CAP).unwrap();
        assert_eq!(rep.balancers, vec![1.0, 1.0]);
        assert_eq!(rep.maxima, vec![1.5, 1.5]);
        assert_eq!(rep.alpha_star, AlphaStar::Finite(1.5));
    }

    #[test]
    fn balance_errors() {
        let neg = Instance::new(2, false, 1, vec![], vec![vec![-1.0, 2.0]], vec![]).unwrap();
        assert!(matches!(
            balance_report(&neg, &Partition::uniform(0), DEFAULT_BALANCE_CAP),
            Err(Error::Domain(_))
        ));
        let star = Instance::zeros(3, 6, (1..6).map(|v| (0, v)).collect()).unwrap();
        assert!(matches!(
            balance_report(&star, &Partition::uniform(5), 100),
            Err(Error::Capacity(_))
        ));
        let zero_min = Instance::new(2, false, 1, vec![], vec![vec![0.0, 1.0]], vec![]).unwrap();
        let rep = balance_report(&zero_min, &Partition::uniform(0), DEFAULT_BALANCE_CAP).unwrap();
        assert_eq!(rep.alpha_star, AlphaStar::Unbalanced { vertex: 0 });
    }
}
