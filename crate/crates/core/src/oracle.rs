//! Exhaustive optimizer used as ground truth.

use crate::error::{Error, Result};
use crate::model::{
    advance, energy_unchecked, folded_energy_masked, vertex_mask, Configuration, Instance,
    Objective, Partition,
};

pub const DEFAULT_ORACLE_CAP: u64 = 10_000_000;

/// Globally optimal energy (or folded energy over `subset`) by enumerating
/// every valid configuration in odometer order over vertex indices.
///
/// Only strict improvements replace the incumbent, so the returned
/// configuration is the lexicographically smallest optimum.
pub fn exact_opt(
    inst: &Instance,
    objective: Objective,
    folded: Option<(&[usize], &Partition)>,
    cap: u64,
) -> Result<(f64, Configuration)> {
    let n = inst.num_vertices();
    let count = (0..n).try_fold(1u64, |acc, v| {
        acc.checked_mul(inst.allowed_labels(v).len() as u64)
            .filter(|&c| c <= cap)
    });
    if count.is_none() {
        return Err(Error::Capacity(format!(
            "exhaustive search over {n} vertices exceeds {cap} configurations"
        )));
    }
    let mask = match folded {
        Some((subset, part)) => {
            part.check_for(inst)?;
            Some((vertex_mask(n, subset)?, part))
        }
        None => None,
    };
    let evaluate = |labels: &[usize]| match &mask {
        Some((m, part)) => folded_energy_masked(inst, part, m, labels),
        None => energy_unchecked(inst, labels),
    };

    let mut digits = vec![0usize; n];
    let mut labels = inst.smallest_configuration().into_labels();
    let mut best_value = objective.worst();
    let mut best = labels.clone();
    loop {
        let value = evaluate(&labels);
        if objective.improves(value, best_value) {
            best_value = value;
            best.copy_from_slice(&labels);
        }
        if !advance(&mut digits, |v| inst.allowed_labels(v).len()) {
            break;
        }
        for (v, &d) in digits.iter().enumerate() {
            labels[v] = inst.allowed_labels(v)[d];
        }
    }
    Ok((best_value, Configuration::new(best)))
}
