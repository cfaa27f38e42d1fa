//! Item-based ranks.
//!
//! A [`Rank`] holds one ranking value per item, index-aligned to a catalog's
//! record order. Value `1` is the highest priority. Ranking values are kept
//! in half units so that mean-scheme ties (`2.5`) stay exact.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A single ranking value, stored as twice its numeric value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ranking(u64);

impl Ranking {
    pub const fn whole(value: u64) -> Self {
        Ranking(value * 2)
    }

    pub const fn from_halves(halves: u64) -> Self {
        Ranking(halves)
    }

    pub const fn halves(self) -> u64 {
        self.0
    }

    pub const fn is_whole(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Parses a numeric ranking value; only whole and half values are representable.
    pub fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() || value < 0.0 {
            return None;
        }
        let halves = value * 2.0;
        if halves.fract() != 0.0 || halves > u64::MAX as f64 / 2.0 {
            return None;
        }
        Some(Ranking(halves as u64))
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_whole() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}

impl Serialize for Ranking {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_whole() {
            serializer.serialize_u64(self.0 / 2)
        } else {
            serializer.serialize_f64(self.as_f64())
        }
    }
}

/// Tie-resolution scheme for equally scored items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieScheme {
    /// Every tied item gets the smallest position of its group.
    Min,
    /// Every tied item gets the largest position of its group.
    Max,
    /// Tied items share the next consecutive ranking; group sizes are ignored.
    Dense,
    /// Tied items share the mean of the positions they occupy.
    #[default]
    Mean,
}

impl TieScheme {
    pub const ALL: [TieScheme; 4] = [TieScheme::Min, TieScheme::Max, TieScheme::Dense, TieScheme::Mean];

    pub fn name(self) -> &'static str {
        match self {
            TieScheme::Min => "min",
            TieScheme::Max => "max",
            TieScheme::Dense => "dense",
            TieScheme::Mean => "mean",
        }
    }
}

impl FromStr for TieScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "min" => Ok(TieScheme::Min),
            "max" => Ok(TieScheme::Max),
            "dense" => Ok(TieScheme::Dense),
            "mean" => Ok(TieScheme::Mean),
            other => Err(Error::Validation(format!("unknown tie scheme `{other}`"))),
        }
    }
}

/// Which end of a score scale receives ranking 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SortDirection {
    HigherFirst,
    LowerFirst,
}

impl SortDirection {
    pub fn reversed(self) -> Self {
        match self {
            SortDirection::HigherFirst => SortDirection::LowerFirst,
            SortDirection::LowerFirst => SortDirection::HigherFirst,
        }
    }
}

/// Item-based rank over a fixed item ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rank {
    rankings: Vec<Ranking>,
}

impl Rank {
    /// Builds a rank, checking that every value lies in `[1, n]`.
    pub fn new(rankings: Vec<Ranking>) -> Result<Self> {
        let n = rankings.len();
        if n == 0 {
            return Err(Error::InvalidInput {
                index: 0,
                reason: "a rank needs at least one item".into(),
            });
        }
        let upper = Ranking::whole(n as u64);
        for (index, r) in rankings.iter().enumerate() {
            if *r < Ranking::whole(1) || *r > upper {
                return Err(Error::InvalidInput {
                    index,
                    reason: format!("ranking {r} outside [1, {n}]"),
                });
            }
        }
        Ok(Rank { rankings })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        let rankings = values
            .iter()
            .enumerate()
            .map(|(index, &v)| {
                Ranking::from_f64(v).ok_or_else(|| Error::InvalidInput {
                    index,
                    reason: format!("ranking {v} is not a whole or half value"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Rank::new(rankings)
    }

    /// Builds a permutation rank from 1-based integer rankings.
    pub fn from_permutation(values: &[u64]) -> Result<Self> {
        let rank = Rank::new(values.iter().map(|&v| Ranking::whole(v)).collect())?;
        if !rank.is_permutation() {
            return Err(Error::InvalidInput {
                index: 0,
                reason: "rankings are not a permutation of 1..n".into(),
            });
        }
        Ok(rank)
    }

    /// Builds a permutation rank from a rank-based order: `order[k]` is the item placed k-th.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let n = order.len();
        let mut rankings = vec![0u64; n];
        for (pos, &item) in order.iter().enumerate() {
            if item >= n || rankings[item] != 0 {
                return Err(Error::InvalidInput {
                    index: pos,
                    reason: format!("item {item} is out of range or repeated"),
                });
            }
            rankings[item] = pos as u64 + 1;
        }
        Rank::from_permutation(&rankings)
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn get(&self, item: usize) -> Option<Ranking> {
        self.rankings.get(item).copied()
    }

    pub fn values(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.rankings.iter().map(|r| r.as_f64())
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values().collect()
    }

    /// True iff the rankings are exactly the integers `1..=n` in some order.
    pub fn is_permutation(&self) -> bool {
        let n = self.rankings.len();
        let mut seen = vec![false; n];
        for r in &self.rankings {
            if !r.is_whole() {
                return false;
            }
            let v = (r.halves() / 2) as usize;
            if v == 0 || v > n || seen[v - 1] {
                return false;
            }
            seen[v - 1] = true;
        }
        true
    }

    pub fn has_ties(&self) -> bool {
        let mut sorted = self.rankings.clone();
        sorted.sort_unstable();
        sorted.windows(2).any(|w| w[0] == w[1])
    }

    /// Integer rankings of a permutation rank (1-based).
    pub fn permutation_values(&self) -> Option<Vec<u64>> {
        self.is_permutation()
            .then(|| self.rankings.iter().map(|r| r.halves() / 2).collect())
    }

    /// Rank-based export of a tie-free permutation: item indices in priority order.
    pub fn to_order(&self) -> Option<Vec<usize>> {
        let values = self.permutation_values()?;
        let mut order = vec![0usize; values.len()];
        for (item, v) in values.iter().enumerate() {
            order[*v as usize - 1] = item;
        }
        Some(order)
    }

    pub fn rankings_sum(&self) -> Ranking {
        Ranking::from_halves(self.rankings.iter().map(|r| r.halves()).sum())
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.rankings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

impl Serialize for Rank {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rankings.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        Rank::from_values(&values).map_err(serde::de::Error::custom)
    }
}

/// True iff `rank` is a permutation of `1..=n`.
pub fn is_permutation(rank: &Rank) -> bool {
    rank.is_permutation()
}

/// Ranks items by score.
///
/// Items are ordered by score in `direction`; equal scores form tie groups
/// that receive rankings according to `scheme`. Within a group, item indices
/// keep ascending order.
pub fn rank_from_scores(scores: &[f64], direction: SortDirection, scheme: TieScheme) -> Result<Rank> {
    if scores.is_empty() {
        return Err(Error::InvalidInput {
            index: 0,
            reason: "no scores to rank".into(),
        });
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidInput {
            index,
            reason: format!("score {} is not finite", scores[index]),
        });
    }
    // Finite values only, so partial_cmp is total here and -0.0 ties with 0.0.
    let cmp = |a: &f64, b: &f64| a.partial_cmp(b).unwrap_or(Ordering::Equal);
    Ok(rank_by_key(scores, |a, b| match direction {
        SortDirection::LowerFirst => cmp(a, b),
        SortDirection::HigherFirst => cmp(b, a),
    }, scheme))
}

/// Ranks items by an arbitrary ordering where `Less` means "ranked ahead".
pub(crate) fn rank_by_key<T>(keys: &[T], mut better: impl FnMut(&T, &T) -> Ordering, scheme: TieScheme) -> Rank {
    let n = keys.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ascending item index inside tie groups.
    order.sort_by(|&a, &b| better(&keys[a], &keys[b]));

    let mut rankings = vec![Ranking::whole(0); n];
    let mut start = 0usize;
    let mut dense = 0u64;
    while start < n {
        let mut end = start + 1;
        while end < n && better(&keys[order[start]], &keys[order[end]]) == Ordering::Equal {
            end += 1;
        }
        dense += 1;
        let size = (end - start) as u64;
        let first = start as u64 + 1;
        let value = match scheme {
            TieScheme::Min => Ranking::whole(first),
            TieScheme::Max => Ranking::whole(first + size - 1),
            TieScheme::Dense => Ranking::whole(dense),
            TieScheme::Mean => Ranking::from_halves(2 * first + size - 1),
        };
        for &item in &order[start..end] {
            rankings[item] = value;
        }
        start = end;
    }
    Rank { rankings }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(r: &Rank) -> Vec<f64> {
        r.to_f64_vec()
    }

    #[test]
    fn tie_schemes_on_shared_second_place() {
        let scores = [9.0, 5.0, 5.0, 2.0];
        let hf = SortDirection::HigherFirst;
        assert_eq!(vals(&rank_from_scores(&scores, hf, TieScheme::Mean).unwrap()), [1.0, 2.5, 2.5, 4.0]);
        assert_eq!(vals(&rank_from_scores(&scores, hf, TieScheme::Min).unwrap()), [1.0, 2.0, 2.0, 4.0]);
        assert_eq!(vals(&rank_from_scores(&scores, hf, TieScheme::Max).unwrap()), [1.0, 3.0, 3.0, 4.0]);
        assert_eq!(vals(&rank_from_scores(&scores, hf, TieScheme::Dense).unwrap()), [1.0, 2.0, 2.0, 3.0]);
    }

    #[test]
    fn lower_first_without_ties() {
        let r = rank_from_scores(&[3.0, 1.0, 2.0], SortDirection::LowerFirst, TieScheme::Mean).unwrap();
        assert_eq!(vals(&r), [3.0, 1.0, 2.0]);
    }

    #[test]
    fn non_finite_score_names_index() {
        let err = rank_from_scores(&[1.0, f64::NAN, 2.0], SortDirection::LowerFirst, TieScheme::Mean).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { index: 1, .. }));
        let err = rank_from_scores(&[f64::INFINITY], SortDirection::LowerFirst, TieScheme::Mean).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { index: 0, .. }));
        assert!(rank_from_scores(&[], SortDirection::LowerFirst, TieScheme::Mean).is_err());
    }

    #[test]
    fn negative_zero_ties_with_zero() {
        let r = rank_from_scores(&[0.0, -0.0, 1.0], SortDirection::HigherFirst, TieScheme::Mean).unwrap();
        assert_eq!(vals(&r), [2.5, 2.5, 1.0]);
    }

    #[test]
    fn permutation_detection() {
        assert!(Rank::from_values(&[4.0, 1.0, 3.0, 2.0]).unwrap().is_permutation());
        assert!(!Rank::from_values(&[1.0, 2.5, 2.5, 4.0]).unwrap().is_permutation());
        assert!(!Rank::from_values(&[1.0, 1.0, 3.0]).unwrap().is_permutation());
    }

    #[test]
    fn rejects_out_of_range_and_quarter_values() {
        assert!(Rank::from_values(&[0.0, 1.0]).is_err());
        assert!(Rank::from_values(&[1.0, 3.0]).is_err());
        assert!(Rank::from_values(&[1.25, 2.0]).is_err());
        assert!(Rank::from_permutation(&[1, 1]).is_err());
    }

    #[test]
    fn order_round_trip() {
        let r = Rank::from_permutation(&[4, 1, 3, 2]).unwrap();
        let order = r.to_order().unwrap();
        assert_eq!(order, [1, 3, 2, 0]);
        assert_eq!(Rank::from_order(&order).unwrap(), r);
    }

    #[test]
    fn json_uses_integers_for_whole_values() {
        let r = Rank::from_values(&[1.0, 2.5, 2.5, 4.0]).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), "[1,2.5,2.5,4]");
        let back: Rank = serde_json::from_str("[1,2.5,2.5,4.0]").unwrap();
        assert_eq!(back, r);
    }
}
