//! Exact small-threshold decider: look up every vector in the radius-`t`
//! Hamming ball around each query.

use std::collections::HashSet;

use super::GapAnnInstance;
use crate::error::{Error, Result};
use crate::featuremap::binomial;

/// Elementary steps allowed for ball enumeration.
pub const BALL_BUDGET: u128 = 100_000_000;

/// `n · Σ_{k ≤ t} C(d, k)`, saturating.
pub fn ball_work(n: usize, d: usize, t: usize) -> u128 {
    let ball = (0..=t.min(d)).fold(0u128, |acc, k| {
        acc.saturating_add(binomial(d as u64, k as u64).unwrap_or(u128::MAX))
    });
    ball.saturating_mul(n as u128)
}

fn pack(p: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; p.len().div_ceil(64)];
    for (k, &bit) in p.iter().enumerate() {
        words[k / 64] |= u64::from(bit) << (k % 64);
    }
    words
}

/// Flags `i` iff some `b_j` has `‖a_i − b_j‖₀ ≤ t`: the `b` vectors go in a
/// hash set keyed by their packed bits, and for each `a_i` every vector in
/// its radius-`t` ball is generated by flipping coordinates in increasing
/// order and looked up.
pub fn hamming_ball_decide(inst: &GapAnnInstance) -> Result<Vec<bool>> {
    let work = ball_work(inst.n(), inst.dim(), inst.t());
    if work > BALL_BUDGET {
        return Err(Error::BruteForceBudget {
            work,
            budget: BALL_BUDGET,
        });
    }
    let table: HashSet<Vec<u64>> = inst.points_b().iter().map(|b| pack(b)).collect();
    let radius = inst.t().min(inst.dim());
    Ok(inst
        .points_a()
        .iter()
        .map(|a| {
            let mut key = pack(a);
            search(&table, &mut key, 0, inst.dim(), radius)
        })
        .collect())
}

fn search(table: &HashSet<Vec<u64>>, key: &mut Vec<u64>, from: usize, dim: usize, left: usize) -> bool {
    if table.contains(key) {
        return true;
    }
    if left == 0 {
        return false;
    }
    for k in from..dim {
        key[k / 64] ^= 1 << (k % 64);
        let hit = search(table, key, k + 1, dim, left - 1);
        key[k / 64] ^= 1 << (k % 64);
        if hit {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annreduce::hamming_bruteforce;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<u8>> {
        (0..n).map(|_| (0..d).map(|_| rng.random_range(0..=1u8)).collect()).collect()
    }

    #[test]
    fn zero_radius_is_membership() {
        let a = vec![vec![1, 0, 1], vec![0, 0, 0]];
        let b = vec![vec![1, 0, 1], vec![1, 1, 1]];
        let inst = GapAnnInstance::new(a, b, 0, 0.5).unwrap();
        assert_eq!(hamming_ball_decide(&inst).unwrap(), vec![true, false]);
    }

    #[test]
    fn full_radius_covers_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = GapAnnInstance::new(random_points(6, 3, &mut rng), random_points(6, 3, &mut rng), 3, 0.5).unwrap();
        assert!(hamming_ball_decide(&inst).unwrap().iter().all(|&f| f));
    }

    #[test]
    fn matches_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for t in 0..4 {
            let inst =
                GapAnnInstance::new(random_points(16, 12, &mut rng), random_points(16, 12, &mut rng), t, 0.5).unwrap();
            let want: Vec<bool> = hamming_bruteforce(&inst).iter().map(|&m| m <= t).collect();
            assert_eq!(hamming_ball_decide(&inst).unwrap(), want);
        }
        // wider than one packed word
        let inst = GapAnnInstance::new(random_points(8, 130, &mut rng), random_points(8, 130, &mut rng), 2, 0.5).unwrap();
        let want: Vec<bool> = hamming_bruteforce(&inst).iter().map(|&m| m <= 2).collect();
        assert_eq!(hamming_ball_decide(&inst).unwrap(), want);
    }

    #[test]
    fn budget() {
        assert_eq!(ball_work(2, 4, 1), 10);
        assert_eq!(ball_work(1, 3, 9), 8);
        let inst = GapAnnInstance::new(vec![vec![0; 64]], vec![vec![1; 64]], 20, 0.5).unwrap();
        assert!(matches!(hamming_ball_decide(&inst), Err(Error::BruteForceBudget { .. })));
    }
}
