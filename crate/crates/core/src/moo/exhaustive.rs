//! Exact Pareto fronts by enumerating every permutation.

use std::collections::HashMap;

use super::front::fitness_key;
use super::sorting::{cmp_fitness, dominates_unchecked};
use super::{evaluate, Individual, Objective, ParetoFront, Provenance};
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::rank::Rank;

/// Largest item count accepted by [`brute_force_front`] (8! = 40320 permutations).
pub const MAX_EXHAUSTIVE_ITEMS: usize = 8;

/// Exact non-dominated set over all `n!` priority ranks of the catalog.
///
/// Every genome attaining a non-dominated fitness vector is kept.
pub fn brute_force_front(catalog: &Catalog, objectives: &[Objective]) -> Result<ParetoFront> {
    brute_force_front_for(catalog.len(), objectives)
}

/// [`brute_force_front`] for a bare item count.
pub fn brute_force_front_for(item_count: usize, objectives: &[Objective]) -> Result<ParetoFront> {
    if item_count > MAX_EXHAUSTIVE_ITEMS {
        return Err(Error::SizeGuard {
            n: item_count,
            max: MAX_EXHAUSTIVE_ITEMS,
        });
    }
    if item_count == 0 {
        return Err(Error::Config("cannot enumerate an empty catalog".into()));
    }
    if objectives.is_empty() {
        return Err(Error::Config("at least one objective is required".into()));
    }

    // Group permutations by fitness vector.
    let mut groups: HashMap<Vec<u64>, (Vec<f64>, Vec<Rank>)> = HashMap::new();
    let mut perm: Vec<u64> = (1..=item_count as u64).collect();
    loop {
        let genome = Rank::from_permutation(&perm)?;
        let fitness = evaluate(&genome, objectives)?;
        groups
            .entry(fitness_key(&fitness))
            .or_insert_with(|| (fitness, Vec::new()))
            .1
            .push(genome);
        if !next_permutation(&mut perm) {
            break;
        }
    }

    // In lexicographic order a vector can only be dominated by an earlier one,
    // and checking the running archive suffices by transitivity.
    let mut distinct: Vec<(Vec<f64>, Vec<Rank>)> = groups.into_values().collect();
    distinct.sort_by(|a, b| cmp_fitness(&a.0, &b.0));
    let mut archive: Vec<(Vec<f64>, Vec<Rank>)> = Vec::new();
    for (fitness, genomes) in distinct {
        if !archive.iter().any(|(f, _)| dominates_unchecked(f, &fitness)) {
            archive.push((fitness, genomes));
        }
    }

    let members = archive
        .into_iter()
        .flat_map(|(fitness, genomes)| {
            genomes.into_iter().map(move |genome| Individual {
                genome,
                fitness: fitness.clone(),
            })
        })
        .collect();
    ParetoFront::new(
        members,
        objectives.iter().map(Objective::info).collect(),
        Provenance::default(),
    )
}

/// Advances to the next lexicographic permutation; false after the last one.
fn next_permutation(v: &mut [u64]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("pivot has a larger successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}
