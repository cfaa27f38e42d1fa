//! A-posteriori selection of one rank from a stored front.
//!
//! Selection never re-optimizes: it only reads the front, so preferences can
//! change and be re-applied cheaply.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moo::{cmp_fitness, Individual, ParetoFront};

/// Tolerance on the weight sum.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Non-negative objective weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Validation("weights must not be empty".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput {
                index: i,
                reason: format!("weight {} must be finite and non-negative", weights[i]),
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Validation(format!("weights sum to {sum}, expected 1")));
        }
        Ok(WeightVector(weights))
    }

    /// Divides raw non-negative weights by their sum.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        if let Some(i) = raw.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput {
                index: i,
                reason: format!("weight {} must be finite and non-negative", raw[i]),
            });
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Validation("weights sum to zero".into()));
        }
        WeightVector::new(raw.iter().map(|w| w / sum).collect())
    }

    /// Unit weight on objective `m` of `k`.
    pub fn unit(k: usize, m: usize) -> Result<Self> {
        if m >= k {
            return Err(Error::Dimension { expected: k, actual: m + 1 });
        }
        let mut w = vec![0.0; k];
        w[m] = 1.0;
        WeightVector::new(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn score(&self, fitness: &[f64]) -> f64 {
        self.0.iter().zip(fitness).map(|(w, f)| w * f).sum()
    }
}

/// Per-objective fitness ceilings plus a lexicographic priority order.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    thresholds: Vec<f64>,
    priority: Vec<usize>,
}

impl ThresholdSpec {
    /// `thresholds[m]` is the largest acceptable fitness on objective `m`
    /// (`f64::INFINITY` for none); `priority` must be a permutation of `0..k`.
    pub fn new(thresholds: Vec<f64>, priority: Vec<usize>) -> Result<Self> {
        let k = thresholds.len();
        if priority.len() != k {
            return Err(Error::Dimension {
                expected: k,
                actual: priority.len(),
            });
        }
        let mut seen = vec![false; k];
        for &p in &priority {
            if p >= k || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Validation(format!(
                    "priority {priority:?} is not a permutation of 0..{k}"
                )));
            }
        }
        if let Some(i) = thresholds.iter().position(|t| t.is_nan()) {
            return Err(Error::InvalidInput {
                index: i,
                reason: "threshold is NaN".into(),
            });
        }
        Ok(ThresholdSpec { thresholds, priority })
    }

    /// No ceilings; priority `0, 1, ..., k-1`.
    pub fn unbounded(k: usize) -> Self {
        ThresholdSpec {
            thresholds: vec![f64::INFINITY; k],
            priority: (0..k).collect(),
        }
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn priority(&self) -> &[usize] {
        &self.priority
    }

    fn admits(&self, fitness: &[f64]) -> bool {
        fitness.iter().zip(&self.thresholds).all(|(f, t)| f <= t)
    }

    fn cmp(&self, a: &[f64], b: &[f64]) -> Ordering {
        self.priority
            .iter()
            .map(|&m| a[m].total_cmp(&b[m]))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// A chosen front member and its position in the front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selected<'a> {
    pub index: usize,
    pub member: &'a Individual,
}

fn check_objectives(front: &ParetoFront, k: usize) -> Result<()> {
    if front.is_empty() {
        return Err(Error::Validation("cannot select from an empty front".into()));
    }
    if front.objectives().len() != k {
        return Err(Error::Dimension {
            expected: front.objectives().len(),
            actual: k,
        });
    }
    Ok(())
}

fn tie_break(a: &Individual, b: &Individual) -> Ordering {
    cmp_fitness(&a.fitness, &b.fitness).then_with(|| a.genome.rankings().cmp(b.genome.rankings()))
}

/// Member minimizing the weighted fitness sum.
///
/// Equal sums fall back to lexicographic fitness, then lexicographic genome.
pub fn scalarize_select<'a>(front: &'a ParetoFront, weights: &WeightVector) -> Result<Selected<'a>> {
    check_objectives(front, weights.len())?;
    let (index, member) = front
        .members()
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            weights
                .score(&a.fitness)
                .total_cmp(&weights.score(&b.fitness))
                .then_with(|| tie_break(a, b))
        })
        .expect("front is non-empty");
    Ok(Selected { index, member })
}

/// Thresholded lexicographic ordering.
///
/// Members above any ceiling are discarded; the survivor that is smallest in
/// priority order wins. `Ok(None)` means every member was eliminated.
pub fn tlo_select<'a>(front: &'a ParetoFront, spec: &ThresholdSpec) -> Result<Option<Selected<'a>>> {
    check_objectives(front, spec.thresholds.len())?;
    Ok(front
        .members()
        .iter()
        .enumerate()
        .filter(|(_, m)| spec.admits(&m.fitness))
        .min_by(|(_, a), (_, b)| spec.cmp(&a.fitness, &b.fitness).then_with(|| tie_break(a, b)))
        .map(|(index, member)| Selected { index, member }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moo::{FitnessKind, ObjectiveInfo, Provenance};
    use crate::rank::Rank;

    fn front(members: &[(&[u64], [f64; 2])]) -> ParetoFront {
        let members = members
            .iter()
            .map(|(g, f)| Individual {
                genome: Rank::from_permutation(g).unwrap(),
                fitness: f.to_vec(),
            })
            .collect();
        let objectives = ["cvss", "age"]
            .iter()
            .map(|n| ObjectiveInfo {
                name: n.to_string(),
                distance: FitnessKind::Spearman,
            })
            .collect();
        ParetoFront::new(members, objectives, Provenance::default()).unwrap()
    }

    fn genome_of(s: &Selected<'_>) -> Vec<u64> {
        s.member.genome.permutation_values().unwrap()
    }

    #[test]
    fn scalarize_examples() {
        let f = front(&[(&[1, 2, 3], [-1.0, 0.2]), (&[2, 1, 3], [-0.5, -0.5])]);
        let a = scalarize_select(&f, &WeightVector::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(genome_of(&a), [1, 2, 3]);
        let b = scalarize_select(&f, &WeightVector::new(vec![0.5, 0.5]).unwrap()).unwrap();
        assert_eq!(genome_of(&b), [2, 1, 3]);
        let single = front(&[(&[1, 2], [0.3, 0.3])]);
        assert_eq!(scalarize_select(&single, &WeightVector::new(vec![0.2, 0.8]).unwrap()).unwrap().index, 0);
    }

    #[test]
    fn weight_validation() {
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![-0.5, 1.5]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        assert_eq!(WeightVector::normalized(&[2.0, 6.0]).unwrap().as_slice(), [0.25, 0.75]);
        assert!(WeightVector::normalized(&[0.0, 0.0]).is_err());
        let f = front(&[(&[1, 2, 3], [-1.0, 0.2])]);
        let w3 = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(scalarize_select(&f, &w3), Err(Error::Dimension { .. })));
    }

    #[test]
    fn tlo_examples() {
        let f = front(&[(&[1, 2, 3], [-1.0, 0.8]), (&[2, 1, 3], [-0.6, 0.1])]);
        let spec = ThresholdSpec::new(vec![0.0, 0.5], vec![0, 1]).unwrap();
        let pick = tlo_select(&f, &spec).unwrap().unwrap();
        assert_eq!(genome_of(&pick), [2, 1, 3]);

        let pick = tlo_select(&f, &ThresholdSpec::unbounded(2)).unwrap().unwrap();
        assert_eq!(genome_of(&pick), [1, 2, 3]);

        let none = ThresholdSpec::new(vec![-2.0, f64::INFINITY], vec![0, 1]).unwrap();
        assert!(tlo_select(&f, &none).unwrap().is_none());
    }

    #[test]
    fn tlo_priority_order_matters() {
        let f = front(&[(&[1, 2, 3], [-1.0, 0.8]), (&[2, 1, 3], [-0.6, 0.1])]);
        let spec = ThresholdSpec::new(vec![f64::INFINITY; 2], vec![1, 0]).unwrap();
        assert_eq!(genome_of(&tlo_select(&f, &spec).unwrap().unwrap()), [2, 1, 3]);
    }

    #[test]
    fn threshold_validation() {
        assert!(ThresholdSpec::new(vec![0.0, 0.0], vec![0, 0]).is_err());
        assert!(ThresholdSpec::new(vec![0.0, 0.0], vec![0, 2]).is_err());
        assert!(ThresholdSpec::new(vec![0.0, 0.0], vec![0]).is_err());
        assert!(ThresholdSpec::new(vec![f64::NAN, 0.0], vec![0, 1]).is_err());
    }
}
