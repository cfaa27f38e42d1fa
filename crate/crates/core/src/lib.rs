//! Vulnerability risk prioritization.
//!
//! Risk metrics of a vulnerability catalog (CVSS severity, age, data
//! importance, ...) each induce a *perfect rank*. Rather than collapsing them
//! into one score up front, the engine searches for priority ranks that trade
//! the metrics off against each other and keeps the whole Pareto front, so a
//! single rank can be picked later by weights or thresholds.
//!
//! * [`rank`]: item-based ranks and tie schemes.
//! * [`distance`]: Canberra, Spearman's rho and Kendall tau.
//! * [`aggregation`]: Borda-style baselines and pairwise-majority analysis.
//! * [`catalog`]: vulnerability records, metric specs, CSV/JSON ingestion.
//! * [`moo`]: NSGA-II over permutations and an exhaustive reference front.
//! * [`selection`]: weighted scalarization and thresholded lexicographic choice.

pub mod aggregation;
pub mod catalog;
pub mod distance;
pub mod error;
pub mod moo;
pub mod rank;
pub mod selection;

pub use aggregation::{borda_aggregate, pairwise_majority, BordaStat, MajorityReport, RankMatrix};
pub use catalog::{parse_catalog, Catalog, MetricSpec, RiskDirection, SourceFormat, VulnRecord};
pub use distance::{canberra, kendall_distance, kendall_normalized, spearman_rho};
pub use error::{Error, Result};
pub use moo::{
    brute_force_front, evaluate, evolve, FitnessKind, Individual, MooConfig, Objective, ParetoFront,
};
pub use rank::{is_permutation, rank_from_scores, Rank, Ranking, SortDirection, TieScheme};
pub use selection::{scalarize_select, tlo_select, Selected, ThresholdSpec, WeightVector};
