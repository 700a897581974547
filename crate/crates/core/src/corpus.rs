//! Named test corpora: analytic weights with known behaviour plus seeded
//! lognormal grids.
//!
//! A master `ChaCha8Rng::seed_from_u64(seed)` draws, per random case in order,
//! a grid seed (`u64`), a σ uniform in `[0.25, 1.5]` and a level uniform in
//! the requested range. Each grid is then `rand:<grid seed>:lognormal:<σ>`.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{make_grid, WeightGrid};

pub const POW_EXPONENTS: [f64; 5] = [-0.75, -0.5, -0.25, 0.5, 1.0];

pub fn analytic_specs(dim: u8) -> Vec<String> {
    let mut v: Vec<String> = ["const:1", "const:3"].iter().map(|s| s.to_string()).collect();
    if dim == 1 {
        v.push("step:2,1".into());
        v.push("step:1,4,2,8".into());
        v.extend(POW_EXPONENTS.iter().map(|a| format!("pow:{a}")));
    } else {
        v.push("step:1,2,3,4".into());
        v.push("step:1,3,2,5,4,1,6,2,2,7,1,3,5,1,2,9".into());
    }
    v
}

pub fn analytic(dim: u8, level: u32) -> Result<Vec<WeightGrid>> {
    analytic_specs(dim).iter().map(|s| make_grid(dim, level, s)).collect()
}

/// `(level, spec)` pairs drawn from the master seed.
pub fn random_specs(seed: u64, n: usize, levels: RangeInclusive<u32>) -> Vec<(u32, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let s: u64 = rng.random();
            let sigma: f64 = rng.random_range(0.25..=1.5);
            let level = rng.random_range(levels.clone());
            (level, format!("rand:{s}:lognormal:{sigma}"))
        })
        .collect()
}

pub fn random(seed: u64, n: usize, dim: u8, levels: RangeInclusive<u32>) -> Result<Vec<WeightGrid>> {
    random_specs(seed, n, levels).iter().map(|(l, s)| make_grid(dim, *l, s)).collect()
}

/// Analytic weights at `level` followed by `n_random` seeded grids with levels up to `level`.
pub fn full(dim: u8, level: u32, seed: u64, n_random: usize) -> Result<Vec<WeightGrid>> {
    let mut v = analytic(dim, level)?;
    v.extend(random(seed, n_random, dim, 2.min(level)..=level)?);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_sized() {
        let a = random(11, 5, 2, 1..=4).unwrap();
        let b = random(11, 5, 2, 1..=4).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|g| (1..=4).contains(&g.level()) && g.dim() == 2));
        assert_eq!(analytic(1, 6).unwrap().len(), 9);
        assert_eq!(analytic(2, 4).unwrap().len(), 4);
    }
}
