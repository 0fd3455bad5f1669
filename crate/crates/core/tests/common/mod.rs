#![allow(dead_code)]

use ifpc_core::linsys::mat::Mat;
use ifpc_core::StateSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Stable by construction: the symmetric part of A is negative definite.
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> StateSpace {
    let q = random_mat(rng, n, n);
    let s = random_mat(rng, n, n);
    let shift = rng.random_range(0.05..1.0);
    let a = -(&q * q.transpose()) - Mat::identity(n, n) * shift + 2.0 * (&s - s.transpose());
    StateSpace::new(a, random_mat(rng, n, m), random_mat(rng, p, n), random_mat(rng, p, m) * 0.5).unwrap()
}
