//! Exact optimization of `Σ_{i∈U} f_i` by dynamic programming over a tree
//! decomposition.
//!
//! The folded objective is optimized in its pairwise form
//! `Σ_{i∈U} φ_i + Σ_(i,j) (α_ij·[i∈U] + α_ji·[j∈U])·φ_ij`. Every term becomes a
//! factor that is charged to exactly one bag containing its scope; each bag
//! then sends its children's best completions up as separator messages.

use crate::error::{Error, Result};
use crate::model::{vertex_mask, Configuration, Instance, Objective, Partition};
use crate::treedecomp::{validate_td, TreeDecomposition};

pub const DEFAULT_TABLE_CAP: u64 = 100_000_000;

/// Table cap from `LAYERCUT_TABLE_CAP`, falling back to the default.
pub fn table_cap() -> u64 {
    std::env::var("LAYERCUT_TABLE_CAP")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_TABLE_CAP)
}

/// A real-valued table over the joint labels of `scope`, row-major with the
/// first scope vertex most significant and every axis of length `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub scope: Vec<usize>,
    pub table: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, table: Vec<f64>) -> Self {
        Factor { scope, table }
    }
}

/// Domain of the factor problem: label count and per-vertex allowed labels.
#[derive(Debug, Clone, Copy)]
pub struct Domains<'a> {
    pub q: usize,
    pub allowed: &'a [Vec<usize>],
}

/// Optimum of `folded_energy(inst, part, subset, ·)`.
pub fn dp_opt(
    inst: &Instance,
    td: &TreeDecomposition,
    part: &Partition,
    subset: &[usize],
    objective: Objective,
) -> Result<(f64, Configuration)> {
    dp_opt_with_cap(inst, td, part, subset, objective, table_cap())
}

pub fn dp_opt_with_cap(
    inst: &Instance,
    td: &TreeDecomposition,
    part: &Partition,
    subset: &[usize],
    objective: Objective,
    cap: u64,
) -> Result<(f64, Configuration)> {
    part.check_for(inst)?;
    let mask = vertex_mask(inst.num_vertices(), subset)?;
    if let Err(v) = validate_td(&inst.graph(), td) {
        return Err(Error::Precondition(format!(
            "invalid tree decomposition: {v}"
        )));
    }
    let factors = pairwise_factors(inst, part, &mask);
    let allowed: Vec<Vec<usize>> = (0..inst.num_vertices())
        .map(|v| inst.allowed_labels(v).to_vec())
        .collect();
    let domains = Domains {
        q: inst.q(),
        allowed: &allowed,
    };
    let (value, labels) = solve_factors(domains, &factors, td, objective, cap)?;
    Ok((value, Configuration::new(labels)))
}

/// Factors of the folded objective; zero-weight edges are dropped.
pub fn pairwise_factors(inst: &Instance, part: &Partition, mask: &[bool]) -> Vec<Factor> {
    let mut out = Vec::new();
    for v in 0..inst.num_vertices() {
        if mask[v] {
            out.push(Factor::new(vec![v], inst.vertex_potential(v).to_vec()));
        }
    }
    for (e, &(u, v)) in inst.edges().iter().enumerate() {
        let c = part.coefficient(e, mask[u], mask[v]);
        if c != 0.0 {
            let table = inst.edge_table(e).iter().map(|x| c * x).collect();
            out.push(Factor::new(vec![u, v], table));
        }
    }
    out
}

struct BagPlan {
    vars: Vec<usize>,
    radix: Vec<usize>,
    size: usize,
    /// Per bag position: stride into this bag's separator with its parent.
    up_stride: Vec<usize>,
    sep_size: usize,
    /// Per child: stride of each bag position in the child's separator.
    child_strides: Vec<Vec<usize>>,
    factors: Vec<usize>,
}

/// Optimizes the sum of `factors` over all labelings allowed by `domains`.
///
/// Every factor scope must be contained in some bag and every vertex must
/// appear in some bag. Ties are broken toward the smallest bag assignment
/// in odometer order (smallest labels of the smallest vertex ids first).
pub fn solve_factors(
    domains: Domains<'_>,
    factors: &[Factor],
    td: &TreeDecomposition,
    objective: Objective,
    cap: u64,
) -> Result<(f64, Vec<usize>)> {
    let n = domains.allowed.len();
    let q = domains.q;
    if td.bags.is_empty() || td.root >= td.bags.len() {
        return Err(Error::Precondition(
            "tree decomposition has no usable root".into(),
        ));
    }
    let (parent, order, children) = td.rooted();
    if order.len() != td.bags.len() {
        return Err(Error::Precondition(
            "tree decomposition is not connected".into(),
        ));
    }

    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut bag_vars: Vec<Vec<usize>> = Vec::with_capacity(td.bags.len());
    for (b, bag) in td.bags.iter().enumerate() {
        let mut vars = bag.clone();
        vars.sort_unstable();
        vars.dedup();
        for &v in &vars {
            if v >= n {
                return Err(Error::Precondition(format!(
                    "bag {b} holds unknown vertex {v}"
                )));
            }
            holders[v].push(b);
        }
        bag_vars.push(vars);
    }
    if let Some(v) = (0..n).find(|&v| holders[v].is_empty()) {
        return Err(Error::Precondition(format!("vertex {v} is in no bag")));
    }

    let mut total: u64 = 0;
    let mut sizes = Vec::with_capacity(td.bags.len());
    for (b, vars) in bag_vars.iter().enumerate() {
        let size = vars.iter().try_fold(1u64, |acc, &v| {
            acc.checked_mul(domains.allowed[v].len() as u64)
        });
        total = match size.and_then(|s| total.checked_add(s)) {
            Some(t) if t <= cap => t,
            _ => {
                return Err(Error::Capacity(format!(
                    "bag {b} with {} vertices pushes the DP past {cap} table entries",
                    vars.len()
                )))
            }
        };
        sizes.push(size.unwrap() as usize);
    }

    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); td.bags.len()];
    for (f, factor) in factors.iter().enumerate() {
        let first = *factor
            .scope
            .first()
            .ok_or_else(|| Error::Precondition(format!("factor {f} has an empty scope")))?;
        if factor.table.len() != q.pow(factor.scope.len() as u32) {
            return Err(Error::Precondition(format!(
                "factor {f} table has the wrong size"
            )));
        }
        let home = holders
            .get(first)
            .into_iter()
            .flatten()
            .copied()
            .find(|&b| {
                factor
                    .scope
                    .iter()
                    .all(|v| bag_vars[b].binary_search(v).is_ok())
            })
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "no bag contains the scope {:?} of factor {f}",
                    factor.scope
                ))
            })?;
        assigned[home].push(f);
    }

    let mut plans: Vec<BagPlan> = Vec::with_capacity(td.bags.len());
    for (b, vars) in bag_vars.iter().enumerate() {
        let radix: Vec<usize> = vars.iter().map(|&v| domains.allowed[v].len()).collect();
        let (up_stride, sep_size) = match parent[b] {
            Some(p) => separator_strides(vars, &radix, &bag_vars[p]),
            None => (vec![0; vars.len()], 1),
        };
        plans.push(BagPlan {
            vars: vars.clone(),
            radix,
            size: sizes[b],
            up_stride,
            sep_size,
            child_strides: Vec::new(),
            factors: std::mem::take(&mut assigned[b]),
        });
    }
    for b in 0..td.bags.len() {
        let strides: Vec<Vec<usize>> = children[b]
            .iter()
            .map(|&c| {
                let (_, _, by_parent) = child_separator(&plans[c], &plans[b].vars);
                by_parent
            })
            .collect();
        plans[b].child_strides = strides;
    }

    // messages[b][s]: best value of bag b's subtree given separator state s
    let mut messages: Vec<Vec<f64>> = vec![Vec::new(); td.bags.len()];
    let mut argbest: Vec<Vec<usize>> = vec![Vec::new(); td.bags.len()];
    let mut root_best = (objective.worst(), 0usize);

    for &b in order.iter().rev() {
        let plan = &plans[b];
        let factor_plans: Vec<(Vec<usize>, Vec<usize>, &[f64])> = plan
            .factors
            .iter()
            .map(|&f| {
                let factor = &factors[f];
                let positions = factor
                    .scope
                    .iter()
                    .map(|v| plan.vars.binary_search(v).unwrap())
                    .collect();
                let k = factor.scope.len();
                let strides = (0..k).map(|i| q.pow((k - 1 - i) as u32)).collect();
                (positions, strides, factor.table.as_slice())
            })
            .collect();

        let mut msg = vec![objective.worst(); plan.sep_size];
        let mut arg = vec![usize::MAX; plan.sep_size];
        let mut digits = vec![0usize; plan.vars.len()];
        for idx in 0..plan.size {
            let mut value = 0.0;
            for (positions, strides, table) in &factor_plans {
                let mut t = 0;
                for (&pos, &stride) in positions.iter().zip(strides) {
                    t += domains.allowed[plan.vars[pos]][digits[pos]] * stride;
                }
                value += table[t];
            }
            for (ci, &c) in children[b].iter().enumerate() {
                let strides = &plan.child_strides[ci];
                let s: usize = digits.iter().zip(strides).map(|(d, st)| d * st).sum();
                value += messages[c][s];
            }
            if parent[b].is_some() {
                let s: usize = digits
                    .iter()
                    .zip(&plan.up_stride)
                    .map(|(d, st)| d * st)
                    .sum();
                if objective.improves(value, msg[s]) || arg[s] == usize::MAX {
                    msg[s] = value;
                    arg[s] = idx;
                }
            } else if objective.improves(value, root_best.0) || idx == 0 {
                root_best = (value, idx);
            }
            step(&mut digits, &plan.radix);
        }
        for &c in &children[b] {
            messages[c] = Vec::new();
        }
        messages[b] = msg;
        argbest[b] = arg;
    }

    let mut labels = vec![usize::MAX; n];
    let mut chosen = vec![0usize; td.bags.len()];
    chosen[td.root] = root_best.1;
    for &b in &order {
        let plan = &plans[b];
        let digits = unrank(chosen[b], &plan.radix);
        for (pos, &v) in plan.vars.iter().enumerate() {
            labels[v] = domains.allowed[v][digits[pos]];
        }
        for (ci, &c) in children[b].iter().enumerate() {
            let s: usize = digits
                .iter()
                .zip(&plan.child_strides[ci])
                .map(|(d, st)| d * st)
                .sum();
            chosen[c] = argbest[c][s];
        }
    }
    Ok((root_best.0, labels))
}

/// Strides of `vars` positions into the separator `vars ∩ other`.
fn separator_strides(vars: &[usize], radix: &[usize], other: &[usize]) -> (Vec<usize>, usize) {
    let mut strides = vec![0usize; vars.len()];
    let mut size = 1usize;
    for pos in (0..vars.len()).rev() {
        if other.binary_search(&vars[pos]).is_ok() {
            strides[pos] = size;
            size *= radix[pos];
        }
    }
    (strides, size)
}

/// For child plan and the parent's vars: (child strides, size, strides of
/// the parent's positions into the same separator index).
fn child_separator(child: &BagPlan, parent_vars: &[usize]) -> (Vec<usize>, usize, Vec<usize>) {
    let (child_strides, size) = separator_strides(&child.vars, &child.radix, parent_vars);
    let mut by_parent = vec![0usize; parent_vars.len()];
    for (pos, &v) in child.vars.iter().enumerate() {
        if child_strides[pos] != 0 {
            let ppos = parent_vars.binary_search(&v).unwrap();
            by_parent[ppos] = child_strides[pos];
        }
    }
    (child_strides, size, by_parent)
}

#[inline]
fn step(digits: &mut [usize], radix: &[usize]) {
    for pos in (0..digits.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < radix[pos] {
            return;
        }
        digits[pos] = 0;
    }
}

fn unrank(mut idx: usize, radix: &[usize]) -> Vec<usize> {
    let mut digits = vec![0usize; radix.len()];
    for pos in (0..radix.len()).rev() {
        digits[pos] = idx % radix[pos];
        idx /= radix[pos];
    }
    digits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::folded_energy;
    use crate::oracle::{exact_opt, DEFAULT_ORACLE_CAP};
    use crate::treedecomp::build_td;

    fn cut(n: usize, edges: Vec<(usize, usize)>) -> Instance {
        let m = edges.len();
        Instance::new(
            2,
            false,
            n,
            edges,
            vec![vec![0.0; 2]; n],
            vec![vec![0.0, 1.0, 1.0, 0.0]; m],
        )
        .unwrap()
    }

    #[test]
    fn empty_subset_gives_zero_and_smallest_labels() {
        let inst = cut(3, vec![(0, 1), (1, 2)])
            .with_allowed_labels(vec![vec![1], vec![0, 1], vec![0, 1]])
            .unwrap();
        let td = build_td(&inst.graph());
        let (v, cfg) = dp_opt(&inst, &td, &Partition::uniform(2), &[], Objective::Max).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(cfg.labels(), &[1, 0, 0]);
    }

    #[test]
    fn single_bag_matches_brute_force() {
        let inst = cut(4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]);
        let part = Partition::new(vec![
            (0.2, 0.8),
            (0.5, 0.5),
            (1.0, 0.0),
            (0.3, 0.7),
            (0.9, 0.1),
        ])
        .unwrap();
        let td = TreeDecomposition::new(vec![vec![0, 1, 2, 3]], vec![], 0);
        let subset = [0, 2, 3];
        for obj in [Objective::Max, Objective::Min] {
            let (v, cfg) = dp_opt(&inst, &td, &part, &subset, obj).unwrap();
            let (want, want_cfg) =
                exact_opt(&inst, obj, Some((&subset, &part)), DEFAULT_ORACLE_CAP).unwrap();
            assert!((v - want).abs() < 1e-9);
            assert_eq!(cfg, want_cfg);
        }
    }

    #[test]
    fn p4_max_cut_on_width_one_path() {
        // oracle: the alternating labelings cut all 3 edges
        let inst = cut(4, vec![(0, 1), (1, 2), (2, 3)]);
        let td = TreeDecomposition::new(
            vec![vec![0, 1], vec![1, 2], vec![2, 3]],
            vec![(0, 1), (1, 2)],
            0,
        );
        let (v, cfg) = dp_opt(
            &inst,
            &td,
            &Partition::uniform(3),
            &[0, 1, 2, 3],
            Objective::Max,
        )
        .unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(cfg.labels(), &[0, 1, 0, 1]);
        let (oracle, _) = exact_opt(&inst, Objective::Max, None, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(oracle, 3.0);
    }

    #[test]
    fn returned_configuration_attains_value() {
        let inst = Instance::new(
            3,
            false,
            5,
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)],
            (0..5).map(|i| vec![i as f64, 0.5, 1.0]).collect(),
            (0..6)
                .map(|e| (0..9).map(|x| ((x * 7 + e * 3) % 5) as f64).collect())
                .collect(),
        )
        .unwrap();
        let part = Partition::uniform(6);
        let td = build_td(&inst.graph());
        for obj in [Objective::Max, Objective::Min] {
            let (v, cfg) = dp_opt(&inst, &td, &part, &[0, 1, 3], obj).unwrap();
            let check = folded_energy(&inst, &part, &[0, 1, 3], &cfg).unwrap();
            assert!((v - check).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_invalid_decomposition_and_capacity() {
        let inst = cut(3, vec![(0, 1), (1, 2)]);
        let bad = TreeDecomposition::new(vec![vec![0, 1], vec![2]], vec![(0, 1)], 0);
        assert!(matches!(
            dp_opt(&inst, &bad, &Partition::uniform(2), &[0], Objective::Max),
            Err(Error::Precondition(_))
        ));
        let td = build_td(&inst.graph());
        assert!(matches!(
            dp_opt_with_cap(&inst, &td, &Partition::uniform(2), &[0], Objective::Max, 3),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn general_factor_needs_a_covering_bag() {
        let allowed = vec![vec![0, 1]; 3];
        let domains = Domains {
            q: 2,
            allowed: &allowed,
        };
        let td = TreeDecomposition::new(vec![vec![0, 1], vec![1, 2]], vec![(0, 1)], 0);
        let f = Factor::new(vec![0, 1, 2], vec![0.0; 8]);
        assert!(solve_factors(domains, &[f], &td, Objective::Max, 1000).is_err());
        let f = Factor::new(vec![2, 1], vec![0.0, 1.0, 5.0, 2.0]);
        let (v, labels) = solve_factors(domains, &[f], &td, Objective::Max, 1000).unwrap();
        assert_eq!(v, 5.0);
        assert_eq!(labels, vec![0, 0, 1]);
    }
}
