use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::sorting::{cmp_fitness, dominates_unchecked, sort_fitness};
use super::{Individual, ObjectiveInfo};
use crate::error::{Error, Result};

/// Run parameters recorded alongside a front. Fields are `null` for exhaustive fronts.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub generations: Option<usize>,
    pub population_size: Option<usize>,
}

/// A set of mutually non-dominated priority ranks.
///
/// Members are unique by genome and ordered lexicographically by fitness
/// vector, then by genome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoFront {
    provenance: Provenance,
    objectives: Vec<ObjectiveInfo>,
    members: Vec<Individual>,
}

pub(crate) fn cmp_members(a: &Individual, b: &Individual) -> Ordering {
    cmp_fitness(&a.fitness, &b.fitness).then_with(|| a.genome.rankings().cmp(b.genome.rankings()))
}

impl ParetoFront {
    /// Keeps the non-dominated, genome-unique subset of `population`.
    pub fn from_population(
        population: &[Individual],
        objectives: Vec<ObjectiveInfo>,
        provenance: Provenance,
    ) -> Result<Self> {
        let fitness: Vec<&[f64]> = population.iter().map(|i| i.fitness.as_slice()).collect();
        let fronts = sort_fitness(&fitness)?;
        let best = fronts.into_iter().next().unwrap_or_default();
        let members = best.into_iter().map(|i| population[i].clone()).collect();
        ParetoFront::new(members, objectives, provenance)
    }

    /// Builds a front from members that are already mutually non-dominated.
    pub fn new(mut members: Vec<Individual>, objectives: Vec<ObjectiveInfo>, provenance: Provenance) -> Result<Self> {
        let k = objectives.len();
        let n = members.first().map(|m| m.genome.len());
        for (i, m) in members.iter().enumerate() {
            if m.fitness.len() != k {
                return Err(Error::Dimension {
                    expected: k,
                    actual: m.fitness.len(),
                });
            }
            if Some(m.genome.len()) != n {
                return Err(Error::Validation(format!("member {i} has a different item count")));
            }
            if !m.genome.is_permutation() {
                return Err(Error::Validation(format!("member {i} genome is not a permutation")));
            }
            if m.fitness.iter().any(|f| f.is_nan()) {
                return Err(Error::Validation(format!("member {i} has a NaN fitness")));
            }
        }
        members.sort_by(cmp_members);
        members.dedup_by(|a, b| a.genome == b.genome);
        let front = ParetoFront {
            provenance,
            objectives,
            members,
        };
        if let Some((a, b)) = front.dominated_pair() {
            return Err(Error::Validation(format!("member {a} dominates member {b}")));
        }
        Ok(front)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            provenance: Provenance,
            objectives: Vec<ObjectiveInfo>,
            members: Vec<Individual>,
        }
        let raw: Raw = serde_json::from_str(json).map_err(|e| Error::Parse {
            line: e.line() as u64,
            field: format!("column {}", e.column()),
            message: e.to_string(),
        })?;
        ParetoFront::new(raw.members, raw.objectives, raw.provenance)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("front serialization is infallible");
        s.push('\n');
        s
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn objectives(&self) -> &[ObjectiveInfo] {
        &self.objectives
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of ranked items (zero for an empty front).
    pub fn item_count(&self) -> usize {
        self.members.first().map_or(0, |m| m.genome.len())
    }

    /// Distinct fitness vectors, in member order.
    pub fn distinct_fitness(&self) -> Vec<Vec<f64>> {
        let mut seen = HashSet::new();
        self.members
            .iter()
            .filter(|m| seen.insert(fitness_key(&m.fitness)))
            .map(|m| m.fitness.clone())
            .collect()
    }

    /// Minimum and maximum fitness per objective.
    pub fn fitness_ranges(&self) -> Vec<(f64, f64)> {
        (0..self.objectives.len())
            .map(|m| {
                self.members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                    (lo.min(i.fitness[m]), hi.max(i.fitness[m]))
                })
            })
            .collect()
    }

    /// First pair `(a, b)` where member `a` dominates member `b`, if any.
    pub fn dominated_pair(&self) -> Option<(usize, usize)> {
        for (a, x) in self.members.iter().enumerate() {
            for (b, y) in self.members.iter().enumerate() {
                if dominates_unchecked(&x.fitness, &y.fitness) {
                    return Some((a, b));
                }
            }
        }
        None
    }
}

/// Bit-exact hashable key for a fitness vector (`-0.0` folded into `0.0`).
pub fn fitness_key(fitness: &[f64]) -> Vec<u64> {
    fitness.iter().map(|f| (f + 0.0).to_bits()).collect()
}
