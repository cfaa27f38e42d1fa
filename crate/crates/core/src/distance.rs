//! Rank comparison metrics: Canberra distance, Spearman's rho and Kendall tau.
//!
//! Pairs tied in either rank count as neither concordant nor discordant for
//! Kendall tau. Spearman's rho falls back to the product-moment correlation of
//! the ranking vectors whenever either input has ties.

use crate::error::{Error, Result};
use crate::rank::Rank;

fn check_lengths(p: &Rank, q: &Rank, min: usize) -> Result<usize> {
    if p.len() != q.len() {
        return Err(Error::Dimension {
            expected: p.len(),
            actual: q.len(),
        });
    }
    if p.len() < min {
        return Err(Error::InvalidInput {
            index: 0,
            reason: format!("metric needs at least {min} items, got {}", p.len()),
        });
    }
    Ok(p.len())
}

/// Canberra distance: `Σ |p_i − q_i| / (p_i + q_i)`.
///
/// Mismatches near the top of a rank (small rankings) weigh more than the
/// same displacement further down.
pub fn canberra(p: &Rank, q: &Rank) -> Result<f64> {
    check_lengths(p, q, 1)?;
    Ok(p.rankings()
        .iter()
        .zip(q.rankings())
        .map(|(a, b)| {
            let (a, b) = (a.halves() as f64, b.halves() as f64);
            (a - b).abs() / (a + b)
        })
        .sum())
}

/// Spearman's rank correlation coefficient.
pub fn spearman_rho(p: &Rank, q: &Rank) -> Result<f64> {
    let n = check_lengths(p, q, 2)?;
    if p.is_permutation() && q.is_permutation() {
        // Half units: d_halves = 2 d, so Σd² = Σd_halves² / 4.
        let sum_sq: u128 = p
            .rankings()
            .iter()
            .zip(q.rankings())
            .map(|(a, b)| {
                let d = a.halves().abs_diff(b.halves()) as u128;
                d * d
            })
            .sum();
        let n = n as f64;
        return Ok(1.0 - 6.0 * (sum_sq as f64 / 4.0) / (n * (n * n - 1.0)));
    }
    pearson_halves(p, q)
}

/// Product-moment correlation computed with exact integer moments.
fn pearson_halves(p: &Rank, q: &Rank) -> Result<f64> {
    let n = p.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (a, b) in p.rankings().iter().zip(q.rankings()) {
        let (x, y) = (a.halves() as i128, b.halves() as i128);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let cov = n * sxy - sx * sy;
    let var_x = n * sxx - sx * sx;
    let var_y = n * syy - sy * sy;
    if var_x == 0 || var_y == 0 {
        return Err(Error::Degenerate(
            "a ranking vector has zero variance (all items tied)".into(),
        ));
    }
    let rho = cov as f64 / ((var_x as f64).sqrt() * (var_y as f64).sqrt());
    Ok(rho.clamp(-1.0, 1.0))
}

/// Kendall tau distance: number of item pairs ordered strictly oppositely in `p` and `q`.
///
/// Runs in `O(n log n)` by counting strict inversions with a merge sort.
pub fn kendall_distance(p: &Rank, q: &Rank) -> Result<u64> {
    let n = check_lengths(p, q, 1)?;
    let pr = p.rankings();
    let qr = q.rankings();
    let mut order: Vec<usize> = (0..n).collect();
    // Ties in p are sorted by q ascending, so they never register as inversions.
    order.sort_by(|&a, &b| pr[a].cmp(&pr[b]).then(qr[a].cmp(&qr[b])));
    let mut seq: Vec<u64> = order.iter().map(|&i| qr[i].halves()).collect();
    let mut buf = vec![0u64; n];
    Ok(count_strict_inversions(&mut seq, &mut buf))
}

fn count_strict_inversions(seq: &mut [u64], buf: &mut [u64]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = seq.split_at_mut(mid);
        let (lbuf, rbuf) = buf.split_at_mut(mid);
        count_strict_inversions(left, lbuf) + count_strict_inversions(right, rbuf)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            buf[k] = seq[i];
            i += 1;
        } else {
            buf[k] = seq[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + (mid - i)].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..k + (n - j)].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    count
}

/// Normalized Kendall tau in `[-1, 1]`: `1 − 4K / (n(n−1))`.
///
/// Defined only for tie-free permutations; identical ranks give `1` and a
/// full reversal gives `-1`.
pub fn kendall_normalized(p: &Rank, q: &Rank) -> Result<f64> {
    check_lengths(p, q, 2)?;
    if !p.is_permutation() || !q.is_permutation() {
        return Err(Error::UnsupportedTies("normalized Kendall tau"));
    }
    kendall_normalized_tied(p, q)
}

/// `1 − 4K / (n(n−1))` with tied pairs contributing nothing to `K`.
///
/// Extends [`kendall_normalized`] to ranks with ties; used by the optimizer
/// when a perfect rank contains tie groups.
pub fn kendall_normalized_tied(p: &Rank, q: &Rank) -> Result<f64> {
    let n = check_lengths(p, q, 2)? as f64;
    let k = kendall_distance(p, q)? as f64;
    Ok(1.0 - 4.0 * k / (n * (n - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn r(v: &[f64]) -> Rank {
        Rank::from_values(v).unwrap()
    }

    #[test]
    fn canberra_examples() {
        assert_eq!(canberra(&r(&[1., 2., 3.]), &r(&[1., 2., 3.])).unwrap(), 0.0);
        assert!((canberra(&r(&[1., 2., 3.]), &r(&[3., 2., 1.])).unwrap() - 1.0).abs() < TOL);
        assert!((canberra(&r(&[1., 2.]), &r(&[2., 1.])).unwrap() - 2.0 / 3.0).abs() < TOL);
    }

    #[test]
    fn spearman_examples() {
        let id = r(&[1., 2., 3.]);
        assert!((spearman_rho(&id, &id).unwrap() - 1.0).abs() < TOL);
        assert!((spearman_rho(&id, &r(&[3., 2., 1.])).unwrap() + 1.0).abs() < TOL);
        assert!((spearman_rho(&id, &r(&[1., 3., 2.])).unwrap() - 0.5).abs() < TOL);
    }

    #[test]
    fn spearman_with_ties_is_pearson_on_rankings() {
        // x = [1, 2.5, 2.5, 4], y = [1, 2, 3, 4]: cov = 4.5/4, var_x = 4.5/4, var_y = 5/4.
        let rho = spearman_rho(&r(&[1., 2.5, 2.5, 4.]), &r(&[1., 2., 3., 4.])).unwrap();
        assert!((rho - (4.5f64 / (4.5f64 * 5.0).sqrt())).abs() < TOL);
    }

    #[test]
    fn spearman_zero_variance_is_degenerate() {
        let err = spearman_rho(&r(&[1.5, 1.5]), &r(&[1., 2.])).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn kendall_examples() {
        let id = r(&[1., 2., 3.]);
        assert_eq!(kendall_distance(&id, &id).unwrap(), 0);
        assert_eq!(kendall_distance(&id, &r(&[3., 2., 1.])).unwrap(), 3);
        assert_eq!(kendall_distance(&r(&[1., 2.5, 2.5, 4.]), &r(&[1., 2., 3., 4.])).unwrap(), 0);
    }

    #[test]
    fn kendall_normalized_examples() {
        let id = r(&[1., 2., 3.]);
        assert_eq!(kendall_normalized(&id, &id).unwrap(), 1.0);
        assert_eq!(kendall_normalized(&id, &r(&[3., 2., 1.])).unwrap(), -1.0);
        assert!((kendall_normalized(&id, &r(&[1., 3., 2.])).unwrap() - 1.0 / 3.0).abs() < TOL);
    }

    #[test]
    fn kendall_normalized_refuses_ties() {
        let err = kendall_normalized(&r(&[1., 2.5, 2.5, 4.]), &r(&[1., 2., 3., 4.])).unwrap_err();
        assert_eq!(err, Error::UnsupportedTies("normalized Kendall tau"));
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        let a = r(&[1., 2.]);
        let b = r(&[1., 2., 3.]);
        assert!(matches!(canberra(&a, &b), Err(Error::Dimension { .. })));
        assert!(matches!(spearman_rho(&a, &b), Err(Error::Dimension { .. })));
        assert!(matches!(kendall_distance(&a, &b), Err(Error::Dimension { .. })));
        assert!(matches!(kendall_normalized(&a, &b), Err(Error::Dimension { .. })));
    }
}
