//! Borda-family rank aggregation and pairwise-majority analysis.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::{rank_by_key, Rank, TieScheme};

/// Ranks of the same items from several rankers (one column per ranker).
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    ranks: Vec<Rank>,
}

impl RankMatrix {
    pub fn new(ranks: Vec<Rank>) -> Result<Self> {
        let first = ranks.first().ok_or_else(|| {
            Error::Validation("a rank matrix needs at least one ranker".into())
        })?;
        let n = first.len();
        if let Some(bad) = ranks.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                actual: bad.len(),
            });
        }
        Ok(RankMatrix { ranks })
    }

    /// Number of items.
    pub fn item_count(&self) -> usize {
        self.ranks[0].len()
    }

    /// Number of rankers.
    pub fn ranker_count(&self) -> usize {
        self.ranks.len()
    }

    pub fn ranks(&self) -> &[Rank] {
        &self.ranks
    }

    fn item_halves(&self, item: usize) -> impl Iterator<Item = u64> + '_ {
        self.ranks.iter().map(move |r| r.rankings()[item].halves())
    }
}

/// Per-item summary statistic for Borda aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BordaStat {
    ArithmeticMean,
    Median,
    GeometricMean,
    /// `sqrt(Σ r²) / sqrt(k)`, i.e. the root mean square of the rankings.
    L2Norm,
}

impl BordaStat {
    pub const ALL: [BordaStat; 4] = [
        BordaStat::ArithmeticMean,
        BordaStat::Median,
        BordaStat::GeometricMean,
        BordaStat::L2Norm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BordaStat::ArithmeticMean => "mean",
            BordaStat::Median => "median",
            BordaStat::GeometricMean => "geometric-mean",
            BordaStat::L2Norm => "l2-norm",
        }
    }

    /// Floating-point value of the statistic over one item's rankings.
    fn value(self, rankings: &mut [f64]) -> f64 {
        let k = rankings.len() as f64;
        match self {
            BordaStat::ArithmeticMean => rankings.iter().sum::<f64>() / k,
            BordaStat::Median => {
                rankings.sort_by(f64::total_cmp);
                let mid = rankings.len() / 2;
                if rankings.len() % 2 == 1 {
                    rankings[mid]
                } else {
                    (rankings[mid - 1] + rankings[mid]) / 2.0
                }
            }
            BordaStat::GeometricMean => (rankings.iter().map(|r| r.ln()).sum::<f64>() / k).exp(),
            BordaStat::L2Norm => (rankings.iter().map(|r| r * r).sum::<f64>() / k).sqrt(),
        }
    }

    /// Exact integer key, strictly monotone in the statistic for a fixed ranker count.
    ///
    /// Comparing keys instead of floats keeps tie detection exact and makes the
    /// aggregate independent of ranker order.
    fn order_key(self, halves: &mut [u64]) -> BigUint {
        match self {
            BordaStat::ArithmeticMean => halves.iter().map(|&h| BigUint::from(h)).sum(),
            BordaStat::Median => {
                halves.sort_unstable();
                let mid = halves.len() / 2;
                if halves.len() % 2 == 1 {
                    BigUint::from(halves[mid]) * 2u32
                } else {
                    BigUint::from(halves[mid - 1]) + BigUint::from(halves[mid])
                }
            }
            BordaStat::GeometricMean => halves.iter().map(|&h| BigUint::from(h)).product(),
            BordaStat::L2Norm => halves
                .iter()
                .map(|&h| BigUint::from(h) * BigUint::from(h))
                .sum(),
        }
    }
}

impl fmt::Display for BordaStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BordaStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" | "arithmetic-mean" => Ok(BordaStat::ArithmeticMean),
            "median" => Ok(BordaStat::Median),
            "geometric-mean" | "geomean" => Ok(BordaStat::GeometricMean),
            "l2-norm" | "l2" => Ok(BordaStat::L2Norm),
            other => Err(Error::Validation(format!("unknown Borda statistic `{other}`"))),
        }
    }
}

/// Per-item statistic values, for reporting.
pub fn borda_statistics(m: &RankMatrix, stat: BordaStat) -> Vec<f64> {
    (0..m.item_count())
        .map(|item| {
            let mut values: Vec<f64> = m.item_halves(item).map(|h| h as f64 / 2.0).collect();
            stat.value(&mut values)
        })
        .collect()
}

/// Aggregates a rank matrix into one global rank; a lower statistic ranks ahead.
pub fn borda_aggregate(m: &RankMatrix, stat: BordaStat, scheme: TieScheme) -> Rank {
    let keys: Vec<BigUint> = (0..m.item_count())
        .map(|item| {
            let mut halves: Vec<u64> = m.item_halves(item).collect();
            stat.order_key(&mut halves)
        })
        .collect();
    rank_by_key(&keys, |a, b| a.cmp(b), scheme)
}

/// Outcome of a head-to-head majority vote between two items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "outcome", content = "item")]
pub enum Majority {
    Preferred(usize),
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairPreference {
    pub a: usize,
    pub b: usize,
    /// Rankers placing `a` strictly ahead of `b`.
    pub votes_a: usize,
    /// Rankers placing `b` strictly ahead of `a`.
    pub votes_b: usize,
    pub majority: Majority,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MajorityReport {
    pub item_count: usize,
    /// One entry per unordered pair `a < b`, in lexicographic pair order.
    pub pairs: Vec<PairPreference>,
    pub cycle_detected: bool,
}

impl MajorityReport {
    /// The majority-preferred item of the pair, if any.
    pub fn preferred(&self, x: usize, y: usize) -> Option<usize> {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        self.pairs
            .iter()
            .find(|p| p.a == a && p.b == b)
            .and_then(|p| match p.majority {
                Majority::Preferred(i) => Some(i),
                Majority::Tie => None,
            })
    }
}

/// Head-to-head strict-majority preferences between every pair of items.
pub fn pairwise_majority(m: &RankMatrix) -> MajorityReport {
    let n = m.item_count();
    let k = m.ranker_count();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut beats = vec![Vec::new(); n];
    for a in 0..n {
        for b in a + 1..n {
            let (mut votes_a, mut votes_b) = (0, 0);
            for r in m.ranks() {
                match r.rankings()[a].cmp(&r.rankings()[b]) {
                    Ordering::Less => votes_a += 1,
                    Ordering::Greater => votes_b += 1,
                    Ordering::Equal => {}
                }
            }
            let majority = if 2 * votes_a > k {
                beats[a].push(b);
                Majority::Preferred(a)
            } else if 2 * votes_b > k {
                beats[b].push(a);
                Majority::Preferred(b)
            } else {
                Majority::Tie
            };
            pairs.push(PairPreference {
                a,
                b,
                votes_a,
                votes_b,
                majority,
            });
        }
    }
    MajorityReport {
        item_count: n,
        pairs,
        cycle_detected: has_cycle(&beats),
    }
}

fn has_cycle(edges: &[Vec<usize>]) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut marks = vec![Mark::New; edges.len()];
    for root in 0..edges.len() {
        if marks[root] != Mark::New {
            continue;
        }
        // Iterative DFS: (node, next edge index).
        let mut stack = vec![(root, 0usize)];
        marks[root] = Mark::Open;
        while let Some((node, next)) = stack.last_mut() {
            if let Some(&child) = edges[*node].get(*next) {
                *next += 1;
                match marks[child] {
                    Mark::Open => return true,
                    Mark::New => {
                        marks[child] = Mark::Open;
                        stack.push((child, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                marks[*node] = Mark::Done;
                stack.pop();
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[f64]) -> Rank {
        Rank::from_values(v).unwrap()
    }

    /// Three rankers over items a, b, c: (a,b,c), (b,c,a), (c,a,b).
    fn condorcet_matrix() -> RankMatrix {
        RankMatrix::new(vec![r(&[1., 2., 3.]), r(&[3., 1., 2.]), r(&[2., 3., 1.])]).unwrap()
    }

    #[test]
    fn condorcet_cycle() {
        let report = pairwise_majority(&condorcet_matrix());
        assert_eq!(report.preferred(0, 1), Some(0));
        assert_eq!(report.preferred(1, 2), Some(1));
        assert_eq!(report.preferred(0, 2), Some(2));
        assert!(report.cycle_detected);
    }

    #[test]
    fn condorcet_mean_is_three_way_tie() {
        let agg = borda_aggregate(&condorcet_matrix(), BordaStat::ArithmeticMean, TieScheme::Mean);
        assert_eq!(agg.to_f64_vec(), [2.0, 2.0, 2.0]);
        assert_eq!(borda_statistics(&condorcet_matrix(), BordaStat::ArithmeticMean), [2.0, 2.0, 2.0]);
    }

    #[test]
    fn single_ranker_is_identity() {
        let rank = r(&[2., 4., 1., 3.]);
        let m = RankMatrix::new(vec![rank.clone()]).unwrap();
        for stat in BordaStat::ALL {
            assert_eq!(borda_aggregate(&m, stat, TieScheme::Mean), rank);
        }
    }

    #[test]
    fn identical_rankers_agree_and_have_no_cycle() {
        let rank = r(&[3., 1., 2.]);
        let m = RankMatrix::new(vec![rank.clone(), rank.clone()]).unwrap();
        assert_eq!(borda_aggregate(&m, BordaStat::Median, TieScheme::Mean), rank);
        let report = pairwise_majority(&m);
        assert_eq!(report.preferred(0, 1), Some(1));
        assert_eq!(report.preferred(1, 2), Some(1));
        assert_eq!(report.preferred(0, 2), Some(2));
        assert!(!report.cycle_detected);
    }

    #[test]
    fn opposite_rankers_tie_every_pair() {
        let m = RankMatrix::new(vec![r(&[1., 2., 3., 4.]), r(&[4., 3., 2., 1.])]).unwrap();
        let report = pairwise_majority(&m);
        assert!(report.pairs.iter().all(|p| p.majority == Majority::Tie));
        assert!(!report.cycle_detected);
    }

    #[test]
    fn even_median_uses_midpoint() {
        let m = RankMatrix::new(vec![r(&[1., 2., 3.]), r(&[2., 3., 1.])]).unwrap();
        assert_eq!(borda_statistics(&m, BordaStat::Median), [1.5, 2.5, 2.0]);
        assert_eq!(borda_aggregate(&m, BordaStat::Median, TieScheme::Mean).to_f64_vec(), [1.0, 3.0, 2.0]);
    }

    #[test]
    fn geometric_mean_ties_are_exact() {
        // {1, 4} and {2, 2} share a geometric mean of 2; {3, 3} sits behind both.
        let m = RankMatrix::new(vec![r(&[1., 2., 3., 4.]), r(&[4., 2., 3., 1.])]).unwrap();
        let agg = borda_aggregate(&m, BordaStat::GeometricMean, TieScheme::Mean);
        assert_eq!(agg.to_f64_vec(), [2.0, 2.0, 4.0, 2.0]);
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        assert!(RankMatrix::new(vec![r(&[1., 2.]), r(&[1., 2., 3.])]).is_err());
        assert!(RankMatrix::new(vec![]).is_err());
    }

    #[test]
    fn stat_names_parse() {
        for stat in BordaStat::ALL {
            assert_eq!(stat.name().parse::<BordaStat>().unwrap(), stat);
        }
        assert!("mode".parse::<BordaStat>().is_err());
    }
}
