//! Multi-objective prioritization over permutation-encoded ranks.
//!
//! Each objective pairs a metric with its perfect rank; a candidate priority
//! rank's fitness on that objective is its distance to the perfect rank. All
//! objectives are minimized: correlation-style metrics are negated so that an
//! exact match scores `-1`. The search is NSGA-II with order crossover and swap
//! mutation, and [`brute_force_front`] enumerates small problems exactly.

mod exhaustive;
mod front;
pub mod operators;
mod sorting;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::distance::{canberra, kendall_normalized_tied, spearman_rho};
use crate::error::{Error, Result};
use crate::rank::{Rank, Ranking, TieScheme};

pub use exhaustive::{brute_force_front, brute_force_front_for, MAX_EXHAUSTIVE_ITEMS};
pub use front::{fitness_key, ParetoFront, Provenance};
pub use sorting::{cmp_fitness, crowding_distance, dominates, sort_fitness};

/// Distance backing an objective's fitness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessKind {
    /// Negated Spearman's rho.
    Spearman,
    /// Negated normalized Kendall tau.
    Kendall,
    /// Canberra distance.
    Canberra,
}

impl FitnessKind {
    pub fn name(self) -> &'static str {
        match self {
            FitnessKind::Spearman => "spearman",
            FitnessKind::Kendall => "kendall",
            FitnessKind::Canberra => "canberra",
        }
    }

    /// Fitness of a rank identical to the perfect rank.
    pub fn ideal(self) -> f64 {
        match self {
            FitnessKind::Spearman | FitnessKind::Kendall => -1.0,
            FitnessKind::Canberra => 0.0,
        }
    }
}

impl fmt::Display for FitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitnessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spearman" => Ok(FitnessKind::Spearman),
            "kendall" => Ok(FitnessKind::Kendall),
            "canberra" => Ok(FitnessKind::Canberra),
            other => Err(Error::Validation(format!("unknown fitness distance `{other}`"))),
        }
    }
}

/// One optimization objective: stay close to the perfect rank of a metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub name: String,
    pub perfect_rank: Rank,
    pub distance: FitnessKind,
}

impl Objective {
    pub fn new(name: impl Into<String>, perfect_rank: Rank, distance: FitnessKind) -> Self {
        Objective {
            name: name.into(),
            perfect_rank,
            distance,
        }
    }

    /// Objective for `metric`, using the catalog's perfect rank under `scheme`.
    pub fn for_metric(catalog: &Catalog, metric: &str, distance: FitnessKind, scheme: TieScheme) -> Result<Self> {
        Ok(Objective::new(metric, catalog.perfect_rank(metric, scheme)?, distance))
    }

    pub fn info(&self) -> ObjectiveInfo {
        ObjectiveInfo {
            name: self.name.clone(),
            distance: self.distance,
        }
    }

    /// The perfect rank with ties broken by ascending item index.
    pub fn tie_broken_perfect_rank(&self) -> Rank {
        let r = self.perfect_rank.rankings();
        let mut order: Vec<usize> = (0..r.len()).collect();
        order.sort_by_key(|&i| r[i]);
        Rank::from_order(&order).expect("sorted indices form a permutation")
    }

    fn fitness(&self, genome: &Rank) -> Result<f64> {
        let p = &self.perfect_rank;
        if genome.len() == 1 {
            // A single item can only be ranked one way.
            return Ok(self.distance.ideal());
        }
        let f = match self.distance {
            FitnessKind::Spearman => match spearman_rho(genome, p) {
                Ok(rho) => -rho,
                // A constant metric expresses no preference between ranks.
                Err(Error::Degenerate(_)) => 0.0,
                Err(e) => return Err(e),
            },
            FitnessKind::Kendall => -kendall_normalized_tied(genome, p)?,
            FitnessKind::Canberra => canberra(genome, p)?,
        };
        Ok(f + 0.0)
    }
}

/// Serialized description of an objective (no perfect rank).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveInfo {
    pub name: String,
    pub distance: FitnessKind,
}

/// A candidate priority rank and its fitness vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Rank,
    pub fitness: Vec<f64>,
}

impl Individual {
    pub fn evaluated(genome: Rank, objectives: &[Objective]) -> Result<Self> {
        let fitness = evaluate(&genome, objectives)?;
        Ok(Individual { genome, fitness })
    }

    fn permutation(&self) -> Vec<u32> {
        self.genome
            .rankings()
            .iter()
            .map(|r| (r.halves() / 2) as u32)
            .collect()
    }
}

/// Fitness vector of `genome` against every objective (all minimized).
pub fn evaluate(genome: &Rank, objectives: &[Objective]) -> Result<Vec<f64>> {
    if !genome.is_permutation() {
        return Err(Error::Contract("genome must be a permutation of 1..n".into()));
    }
    objectives
        .iter()
        .map(|o| {
            if o.perfect_rank.len() != genome.len() {
                return Err(Error::Dimension {
                    expected: genome.len(),
                    actual: o.perfect_rank.len(),
                });
            }
            o.fitness(genome)
        })
        .collect()
}

/// NSGA-II hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MooConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene swap probability; `None` means `1 / n`.
    pub mutation_rate: Option<f64>,
    pub seed: u64,
    /// Inject the tie-broken perfect ranks into the initial population.
    pub seed_extremes: bool,
}

impl Default for MooConfig {
    fn default() -> Self {
        MooConfig {
            population_size: 100,
            generations: 200,
            crossover_rate: 0.9,
            mutation_rate: None,
            seed: 0,
            seed_extremes: true,
        }
    }
}

impl MooConfig {
    pub fn validate(&self, objective_count: usize) -> Result<()> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "population size must be an even number >= 2, got {}",
                self.population_size
            )));
        }
        if self.generations == 0 {
            return Err(Error::Config("generations must be positive".into()));
        }
        if self.seed_extremes && self.population_size < 2 * objective_count {
            return Err(Error::Config(format!(
                "population size {} is below twice the objective count ({objective_count})",
                self.population_size
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config(format!("crossover rate {} outside [0, 1]", self.crossover_rate)));
        }
        if let Some(rate) = self.mutation_rate {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("mutation rate {rate} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// NSGA-II state over permutations of `n` items.
///
/// Generation 0 is the initial population; each [`Evolution::step`] produces
/// one more generation. One seeded generator drives every random choice in a
/// fixed order, so runs are reproducible; fitness evaluation is parallel but
/// consumes no randomness.
pub struct Evolution<'a> {
    objectives: &'a [Objective],
    config: MooConfig,
    mutation_rate: f64,
    rng: ChaCha8Rng,
    population: Vec<Individual>,
    front_rank: Vec<usize>,
    crowding: Vec<f64>,
    generation: usize,
}

impl<'a> Evolution<'a> {
    pub fn new(item_count: usize, objectives: &'a [Objective], config: MooConfig) -> Result<Self> {
        if item_count == 0 {
            return Err(Error::Config("cannot optimize an empty catalog".into()));
        }
        if objectives.is_empty() {
            return Err(Error::Config("at least one objective is required".into()));
        }
        if objectives.len() == 1 {
            warn!("single objective: the search degenerates to single-objective optimization");
        }
        for o in objectives {
            if o.perfect_rank.len() != item_count {
                return Err(Error::Dimension {
                    expected: item_count,
                    actual: o.perfect_rank.len(),
                });
            }
        }
        config.validate(objectives.len())?;

        let mutation_rate = config.mutation_rate.unwrap_or(1.0 / item_count as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut genomes: Vec<Rank> = Vec::with_capacity(config.population_size);
        if config.seed_extremes {
            genomes.extend(objectives.iter().map(Objective::tie_broken_perfect_rank));
        }
        let mut base: Vec<u32> = (1..=item_count as u32).collect();
        while genomes.len() < config.population_size {
            base.shuffle(&mut rng);
            genomes.push(to_rank(&base));
        }
        let population = evaluate_all(genomes, objectives);
        let mut evo = Evolution {
            objectives,
            config,
            mutation_rate,
            rng,
            population,
            front_rank: Vec::new(),
            crowding: Vec::new(),
            generation: 0,
        };
        evo.assign_ranks();
        Ok(evo)
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    /// Non-dominated subset of the current population.
    pub fn front(&self) -> ParetoFront {
        ParetoFront::from_population(
            &self.population,
            self.objectives.iter().map(Objective::info).collect(),
            Provenance {
                seed: Some(self.config.seed),
                generations: Some(self.generation),
                population_size: Some(self.config.population_size),
            },
        )
        .expect("population is evaluated")
    }

    /// Produces the next generation: selection, variation, evaluation and elitist survival.
    pub fn step(&mut self) {
        let size = self.config.population_size;
        let mut offspring = Vec::with_capacity(size);
        while offspring.len() < size {
            let a = self.tournament();
            let b = self.tournament();
            let (p1, p2) = (self.population[a].permutation(), self.population[b].permutation());
            let (mut c1, mut c2) = if self.rng.gen_bool(self.config.crossover_rate) {
                operators::order_crossover(&p1, &p2, &mut self.rng)
            } else {
                (p1, p2)
            };
            operators::swap_mutation(&mut c1, self.mutation_rate, &mut self.rng);
            operators::swap_mutation(&mut c2, self.mutation_rate, &mut self.rng);
            offspring.push(to_rank(&c1));
            offspring.push(to_rank(&c2));
        }
        let mut merged = std::mem::take(&mut self.population);
        merged.extend(evaluate_all(offspring, self.objectives));
        self.population = survivors(merged, size);
        self.assign_ranks();
        self.generation += 1;
    }

    /// Runs until the configured generation count and returns the final front.
    pub fn run(mut self) -> ParetoFront {
        while self.generation < self.config.generations {
            self.step();
        }
        self.front()
    }

    /// Binary tournament on (front rank, crowding distance).
    fn tournament(&mut self) -> usize {
        let n = self.population.len();
        let i = self.rng.gen_range(0..n);
        let j = self.rng.gen_range(0..n);
        match self.front_rank[i].cmp(&self.front_rank[j]) {
            std::cmp::Ordering::Less => i,
            std::cmp::Ordering::Greater => j,
            std::cmp::Ordering::Equal if self.crowding[j] > self.crowding[i] => j,
            std::cmp::Ordering::Equal => i,
        }
    }

    fn assign_ranks(&mut self) {
        let n = self.population.len();
        self.front_rank = vec![0; n];
        self.crowding = vec![0.0; n];
        let fitness: Vec<&[f64]> = self.population.iter().map(|i| i.fitness.as_slice()).collect();
        let fronts = sort_fitness(&fitness).expect("population is evaluated");
        for (rank, front) in fronts.iter().enumerate() {
            let members: Vec<&[f64]> = front.iter().map(|&i| fitness[i]).collect();
            for (&i, d) in front.iter().zip(crowding_distance(&members)) {
                self.front_rank[i] = rank;
                self.crowding[i] = d;
            }
        }
    }
}

fn to_rank(perm: &[u32]) -> Rank {
    Rank::new(perm.iter().map(|&v| Ranking::whole(v as u64)).collect()).expect("operators keep permutations")
}

fn evaluate_all(genomes: Vec<Rank>, objectives: &[Objective]) -> Vec<Individual> {
    genomes
        .into_par_iter()
        .map(|g| Individual::evaluated(g, objectives).expect("objectives are validated against genome size"))
        .collect()
}

/// Elitist (mu + lambda) survival.
///
/// Unique genomes are preferred over duplicates. Whole fronts are taken while
/// they fit; the overflowing front is truncated by [`truncate_front`].
fn survivors(merged: Vec<Individual>, size: usize) -> Vec<Individual> {
    let mut seen = HashMap::new();
    let mut unique = Vec::with_capacity(merged.len());
    let mut duplicates = Vec::new();
    for ind in merged {
        if seen.insert(ind.genome.clone(), ()).is_none() {
            unique.push(ind);
        } else {
            duplicates.push(ind);
        }
    }

    let fitness: Vec<&[f64]> = unique.iter().map(|i| i.fitness.as_slice()).collect();
    let fronts = sort_fitness(&fitness).expect("population is evaluated");
    let mut chosen: Vec<usize> = Vec::with_capacity(size);
    for front in fronts {
        let room = size - chosen.len();
        if room == 0 {
            break;
        }
        if front.len() <= room {
            chosen.extend(front);
        } else {
            chosen.extend(truncate_front(&front, &fitness, room));
            break;
        }
    }

    let mut slots: Vec<Option<Individual>> = unique.into_iter().map(Some).collect();
    let mut next: Vec<Individual> = chosen.into_iter().filter_map(|i| slots[i].take()).collect();
    next.extend(duplicates.into_iter().take(size - next.len()));
    next
}

/// Picks `room` members of `front`, spreading picks over distinct fitness vectors.
///
/// Members sharing a fitness vector form one group; groups are ordered by the
/// crowding distance of their vector (descending, then first appearance), and
/// members are taken one per group per pass. Every distinct vector survives
/// whenever `room` is at least the number of groups.
fn truncate_front(front: &[usize], fitness: &[&[f64]], room: usize) -> Vec<usize> {
    let mut group_of: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in front {
        let g = *group_of.entry(fitness_key(fitness[i])).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    let vectors: Vec<&[f64]> = groups.iter().map(|g| fitness[g[0]]).collect();
    let crowd = crowding_distance(&vectors);
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));

    let mut picked = Vec::with_capacity(room);
    let mut pass = 0;
    while picked.len() < room {
        for &g in &order {
            if let Some(&i) = groups[g].get(pass) {
                picked.push(i);
                if picked.len() == room {
                    break;
                }
            }
        }
        pass += 1;
    }
    picked
}

/// Runs NSGA-II on `catalog` and returns the final non-dominated set.
pub fn evolve(catalog: &Catalog, objectives: &[Objective], config: MooConfig) -> Result<ParetoFront> {
    Ok(Evolution::new(catalog.len(), objectives, config)?.run())
}
