//! Permutation-preserving variation operators.
//!
//! Genomes here are item-based rankings (`genome[i]` = ranking of item `i`,
//! values `1..=n`). Both operators map permutations to permutations.

use rand::Rng;

/// Order crossover (OX).
///
/// Each child copies a contiguous segment from one parent and fills the
/// remaining positions, starting after the segment and wrapping around, with
/// the other parent's values in the order they appear after the segment.
pub fn order_crossover<R: Rng + ?Sized>(p1: &[u32], p2: &[u32], rng: &mut R) -> (Vec<u32>, Vec<u32>) {
    debug_assert_eq!(p1.len(), p2.len());
    let n = p1.len();
    if n < 2 {
        return (p1.to_vec(), p2.to_vec());
    }
    let mut a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    (ox_child(p1, p2, a, b), ox_child(p2, p1, a, b))
}

fn ox_child(keep: &[u32], fill: &[u32], a: usize, b: usize) -> Vec<u32> {
    let n = keep.len();
    let mut child = vec![0u32; n];
    let mut used = vec![false; n + 1];
    for i in a..=b {
        child[i] = keep[i];
        used[keep[i] as usize] = true;
    }
    let mut pos = (b + 1) % n;
    for k in 0..n {
        let v = fill[(b + 1 + k) % n];
        if used[v as usize] {
            continue;
        }
        child[pos] = v;
        used[v as usize] = true;
        pos = (pos + 1) % n;
    }
    child
}

/// Swap mutation: each position is, with probability `rate`, swapped with another random position.
pub fn swap_mutation<R: Rng + ?Sized>(genome: &mut [u32], rate: f64, rng: &mut R) {
    let n = genome.len();
    if n < 2 || rate <= 0.0 {
        return;
    }
    for i in 0..n {
        if rng.gen_bool(rate) {
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            genome.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ox_fixed_cut() {
        let p1 = [1, 2, 3, 4, 5, 6, 7, 8];
        let p2 = [8, 6, 4, 2, 7, 5, 3, 1];
        // Segment 2..=4 from p1 is [3, 4, 5]; p2 read from index 5 minus those is 1,8,6,2,7,
        // written from index 5 with wrap-around.
        let child = ox_child(&p1, &p2, 2, 4);
        assert_eq!(child, [2, 7, 3, 4, 5, 1, 8, 6]);
    }

    #[test]
    fn operators_preserve_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p1: Vec<u32> = (1..=9).collect();
        let p2: Vec<u32> = (1..=9).rev().collect();
        for _ in 0..200 {
            let (mut c1, mut c2) = order_crossover(&p1, &p2, &mut rng);
            swap_mutation(&mut c1, 0.3, &mut rng);
            swap_mutation(&mut c2, 1.0, &mut rng);
            for c in [c1, c2] {
                let mut sorted = c.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, p1);
            }
        }
    }

    #[test]
    fn single_item_is_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (c1, c2) = order_crossover(&[1], &[1], &mut rng);
        assert_eq!((c1, c2), (vec![1], vec![1]));
        let mut g = [1];
        swap_mutation(&mut g, 1.0, &mut rng);
        assert_eq!(g, [1]);
    }
}
