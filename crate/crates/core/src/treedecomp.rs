//! Tree and path decompositions: validation, min-fill construction and
//! slab-ordered path decompositions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Bags `X_i` joined into a tree, rooted at `root`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub tree_edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub root: usize,
}

impl TreeDecomposition {
    /// Sorts and deduplicates bag contents.
    pub fn new(bags: Vec<Vec<usize>>, tree_edges: Vec<(usize, usize)>, root: usize) -> Self {
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        TreeDecomposition {
            bags,
            tree_edges,
            root,
        }
    }

    /// `max |X_i| - 1`, saturating at zero for decompositions of the empty graph.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
            .saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// Parent of every bag and a pre-order of the bags from the root.
    /// Assumes the tree structure has been validated.
    pub(crate) fn rooted(&self) -> (Vec<Option<usize>>, Vec<usize>, Vec<Vec<usize>>) {
        let nb = self.bags.len();
        let mut adj = vec![Vec::new(); nb];
        for &(a, b) in &self.tree_edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut parent = vec![None; nb];
        let mut children = vec![Vec::new(); nb];
        let mut order = Vec::with_capacity(nb);
        let mut seen = vec![false; nb];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(b) = stack.pop() {
            order.push(b);
            for &c in adj[b].iter().rev() {
                if !seen[c] {
                    seen[c] = true;
                    parent[c] = Some(b);
                    stack.push(c);
                }
            }
        }
        for &b in &order {
            if let Some(p) = parent[b] {
                children[p].push(b);
            }
        }
        (parent, order, children)
    }
}

/// The first failed condition of the decomposition definition, with a witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoBags,
    RootOutOfRange { root: usize },
    BagVertexOutOfRange { bag: usize, vertex: usize },
    TreeEdgeOutOfRange { edge: (usize, usize) },
    NotATree { reason: String },
    VertexUncovered { vertex: usize },
    EdgeUncovered { u: usize, v: usize },
    DisconnectedSubtree { vertex: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoBags => write!(f, "decomposition has no bags"),
            Violation::RootOutOfRange { root } => write!(f, "root bag {root} does not exist"),
            Violation::BagVertexOutOfRange { bag, vertex } => {
                write!(f, "bag {bag} contains unknown vertex {vertex}")
            }
            Violation::TreeEdgeOutOfRange { edge } => {
                write!(
                    f,
                    "tree edge ({}, {}) references a missing bag",
                    edge.0, edge.1
                )
            }
            Violation::NotATree { reason } => write!(f, "bags do not form a tree: {reason}"),
            Violation::VertexUncovered { vertex } => write!(f, "vertex {vertex} is in no bag"),
            Violation::EdgeUncovered { u, v } => write!(f, "edge ({u}, {v}) is in no bag"),
            Violation::DisconnectedSubtree { vertex } => {
                write!(f, "bags containing vertex {vertex} are not connected")
            }
        }
    }
}

/// Checks tree-ness, vertex coverage, edge coverage and the connected
/// subtree condition, in that order.
pub fn validate_td(graph: &Graph, td: &TreeDecomposition) -> std::result::Result<(), Violation> {
    let n = graph.num_vertices();
    let nb = td.bags.len();
    if nb == 0 {
        return Err(Violation::NoBags);
    }
    if td.root >= nb {
        return Err(Violation::RootOutOfRange { root: td.root });
    }
    for (b, bag) in td.bags.iter().enumerate() {
        if let Some(&v) = bag.iter().find(|&&v| v >= n) {
            return Err(Violation::BagVertexOutOfRange { bag: b, vertex: v });
        }
    }
    if let Some(&edge) = td.tree_edges.iter().find(|&&(a, b)| a >= nb || b >= nb) {
        return Err(Violation::TreeEdgeOutOfRange { edge });
    }
    if td.tree_edges.len() != nb - 1 {
        return Err(Violation::NotATree {
            reason: format!(
                "{} bags need {} tree edges, found {}",
                nb,
                nb - 1,
                td.tree_edges.len()
            ),
        });
    }
    let tree = Graph::new(nb, &td.tree_edges);
    if td.tree_edges.iter().any(|&(a, b)| a == b) {
        return Err(Violation::NotATree {
            reason: "tree edge is a self-loop".into(),
        });
    }
    if tree.components().len() != 1 {
        return Err(Violation::NotATree {
            reason: "tree edges do not connect all bags".into(),
        });
    }

    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (b, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if holders[v].last() != Some(&b) {
                holders[v].push(b);
            }
        }
    }
    if let Some(vertex) = (0..n).find(|&v| holders[v].is_empty()) {
        return Err(Violation::VertexUncovered { vertex });
    }
    for &(u, v) in graph.edges() {
        let covered = holders[u].iter().any(|&b| td.bags[b].contains(&v));
        if !covered {
            return Err(Violation::EdgeUncovered { u, v });
        }
    }
    // connected subtree: |holders| - 1 tree edges inside the holder set
    let mut inside = vec![0usize; n];
    for &(a, b) in &td.tree_edges {
        for v in shared(&td.bags[a], &td.bags[b]) {
            inside[v] += 1;
        }
    }
    if let Some(vertex) = (0..n).find(|&v| inside[v] + 1 != holders[v].len()) {
        return Err(Violation::DisconnectedSubtree { vertex });
    }
    Ok(())
}

fn shared<'a>(a: &'a [usize], b: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
    let b: BTreeSet<usize> = b.iter().copied().collect();
    let mut a: Vec<usize> = a.to_vec();
    a.sort_unstable();
    a.dedup();
    a.into_iter().filter(move |v| b.contains(v))
}

/// Min-fill greedy elimination; ties go to the smallest vertex id.
/// Bag 0 belongs to the last eliminated vertex and is the root.
pub fn build_td(graph: &Graph) -> TreeDecomposition {
    let n = graph.num_vertices();
    if n == 0 {
        return TreeDecomposition::new(vec![Vec::new()], Vec::new(), 0);
    }
    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|v| graph.neighbors(v).iter().copied().collect())
        .collect();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    let mut elim_bags: Vec<Vec<usize>> = vec![Vec::new(); n];

    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for v in (0..n).filter(|&v| alive[v]) {
            let fill = fill_in(&adj, v);
            if best.is_none_or(|(f, _)| fill < f) {
                best = Some((fill, v));
                if fill == 0 {
                    break;
                }
            }
        }
        let (_, v) = best.expect("a live vertex remains");
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        alive[v] = false;
        let mut bag = nbrs;
        bag.push(v);
        elim_bags[v] = bag;
        order.push(v);
    }

    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    // bag index = reverse elimination position
    let index = |v: usize| n - 1 - pos[v];
    let mut bags = vec![Vec::new(); n];
    let mut tree_edges = Vec::with_capacity(n - 1);
    for &v in &order {
        let parent = elim_bags[v]
            .iter()
            .filter(|&&w| w != v)
            .min_by_key(|&&w| pos[w])
            .copied();
        match parent {
            Some(p) => tree_edges.push((index(p), index(v))),
            None if index(v) != 0 => tree_edges.push((0, index(v))),
            None => {}
        }
        bags[index(v)] = std::mem::take(&mut elim_bags[v]);
    }
    TreeDecomposition::new(bags, tree_edges, 0)
}

fn fill_in(adj: &[BTreeSet<usize>], v: usize) -> usize {
    let nbrs: Vec<usize> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if !adj[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Path decomposition whose `t`-th bag is `groups[t] ∪ groups[t+1]`.
///
/// Every vertex of `graph` must lie in exactly one group and every edge must
/// join the same or consecutive groups.
pub fn build_pd_from_slabs(graph: &Graph, groups: &[Vec<usize>]) -> Result<TreeDecomposition> {
    let n = graph.num_vertices();
    let mut group_of = vec![usize::MAX; n];
    for (g, members) in groups.iter().enumerate() {
        for &v in members {
            if v >= n {
                return Err(Error::Precondition(format!(
                    "group {g} contains unknown vertex {v}"
                )));
            }
            if group_of[v] != usize::MAX {
                return Err(Error::Precondition(format!(
                    "vertex {v} appears in two groups"
                )));
            }
            group_of[v] = g;
        }
    }
    if let Some(v) = (0..n).find(|&v| group_of[v] == usize::MAX) {
        return Err(Error::Precondition(format!("vertex {v} is in no group")));
    }
    for &(u, v) in graph.edges() {
        if group_of[u].abs_diff(group_of[v]) > 1 {
            return Err(Error::Precondition(format!(
                "edge ({u}, {v}) joins non-adjacent groups {} and {}",
                group_of[u], group_of[v]
            )));
        }
    }
    if groups.len() <= 1 {
        let bag = groups.first().cloned().unwrap_or_default();
        return Ok(TreeDecomposition::new(vec![bag], Vec::new(), 0));
    }
    let bags: Vec<Vec<usize>> = groups
        .windows(2)
        .map(|w| w[0].iter().chain(&w[1]).copied().collect())
        .collect();
    let tree_edges = (1..bags.len()).map(|t| (t - 1, t)).collect();
    Ok(TreeDecomposition::new(bags, tree_edges, 0))
}
