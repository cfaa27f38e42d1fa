//! Pareto dominance, fast non-dominated sorting and crowding distance (minimization).

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Splits fitness vectors into successive non-dominated fronts.
///
/// Front 0 holds every vector no other vector dominates; front `i + 1` is the
/// non-dominated set once fronts `0..=i` are removed. Indices within a front
/// are ascending.
pub fn sort_fitness<F: AsRef<[f64]>>(fitness: &[F]) -> Result<Vec<Vec<usize>>> {
    let n = fitness.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let dims = fitness[0].as_ref().len();
    for (i, f) in fitness.iter().enumerate() {
        let f = f.as_ref();
        if f.is_empty() {
            return Err(Error::Contract(format!("individual {i} has not been evaluated")));
        }
        if f.len() != dims {
            return Err(Error::Dimension {
                expected: dims,
                actual: f.len(),
            });
        }
    }

    let mut dominated_by_count = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (fitness[i].as_ref(), fitness[j].as_ref());
            if dominates_unchecked(a, b) {
                dominating[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominating[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    Ok(fronts)
}

/// Crowding distance of each member of one front.
///
/// Boundary members on any objective receive `f64::INFINITY`. Interior members
/// accumulate the range-normalized gap between their neighbours on every
/// objective. Equal objective values keep input order.
pub fn crowding_distance<F: AsRef<[f64]>>(front: &[F]) -> Vec<f64> {
    let len = front.len();
    if len <= 2 {
        return vec![f64::INFINITY; len];
    }
    let dims = front[0].as_ref().len();
    let mut distance = vec![0.0f64; len];
    let mut order: Vec<usize> = (0..len).collect();
    for m in 0..dims {
        let value = |i: usize| front[i].as_ref()[m];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let (first, last) = (order[0], order[len - 1]);
        distance[first] = f64::INFINITY;
        distance[last] = f64::INFINITY;
        let range = value(last) - value(first);
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            let gap = (value(w[2]) - value(w[0])) / range;
            distance[w[1]] += gap;
        }
    }
    distance
}

/// Lexicographic comparison of fitness vectors using a total order on floats.
pub fn cmp_fitness(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}
