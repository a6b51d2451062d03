//! Random instances that satisfy the gap promise by construction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{hamming, GapAnnInstance};
use crate::error::{Error, Result};

const MAX_REDRAWS: usize = 100_000;

/// `n` uniform `b` points; `near` queries are copies of a random `b` with
/// up to `t` coordinates flipped, and the rest are uniform points redrawn
/// until all `b` are at least `(1+ε)t` away. Query order is shuffled.
pub fn planted_instance(n: usize, d: usize, t: usize, eps: f64, near: usize, seed: u64) -> Result<GapAnnInstance> {
    if near > n {
        return Err(Error::InvalidParameter(format!("{near} near queries out of {n}")));
    }
    if t > d {
        return Err(Error::InvalidParameter(format!("threshold {t} exceeds dimension {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| -> Vec<u8> { (0..d).map(|_| rng.random_range(0..=1u8)).collect() };
    let b: Vec<Vec<u8>> = (0..n).map(|_| point(&mut rng)).collect();
    let far_from = ((1.0 + eps) * t as f64).ceil() as usize;

    let mut a = Vec::with_capacity(n);
    for _ in 0..near {
        let mut q = b[rng.random_range(0..n)].clone();
        let flips = rng.random_range(0..=t);
        for k in rand::seq::index::sample(&mut rng, d, flips) {
            q[k] ^= 1;
        }
        a.push(q);
    }
    for _ in near..n {
        let mut tries = 0;
        loop {
            let q = point(&mut rng);
            if b.iter().all(|p| hamming(&q, p) >= far_from) {
                a.push(q);
                break;
            }
            tries += 1;
            if tries == MAX_REDRAWS {
                return Err(Error::InvalidParameter(format!(
                    "could not draw a point at distance ≥ {far_from} from all of B in {d} dimensions"
                )));
            }
        }
    }
    a.shuffle(&mut rng);
    GapAnnInstance::new(a, b, t, eps)
}
