#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spotcov::linalg::SquareMatrix;
use spotcov::sampling::TickSeries;

/// Window length of the random instances.
pub const L: f64 = 100.0;

/// `d` assets on [0, L], each with between 1 and `max_n` returns at random
/// times.
pub fn random_ticks(seed: u64, d: usize, max_n: usize) -> Vec<TickSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d)
        .map(|j| {
            let n = rng.random_range(1..=max_n);
            let mut inner: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.0..L)).collect();
            inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
            inner.dedup();
            let mut t = vec![0.0];
            t.extend(inner.into_iter().filter(|&x| x > 0.0 && x < L));
            t.push(L);
            let mut x = vec![0.0];
            for _ in 1..t.len() {
                let z: f64 = rng.sample(StandardNormal);
                x.push(x.last().unwrap() + 0.1 * z);
            }
            TickSeries::new(j, t, x).unwrap()
        })
        .collect()
}

pub fn rel_frobenius(a: &SquareMatrix<f64>, b: &SquareMatrix<f64>) -> f64 {
    let num: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.as_slice().iter().map(|y| y * y).sum();
    num.sqrt() / den.sqrt().max(1e-300)
}
