//! Reproducible random sampling.
//!
//! Every sample index gets its own generator derived from
//! `(master seed, stream, index)`, so results do not depend on how work is
//! split across threads.

use num::complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Named sub-streams so that different consumers of one master seed do not
/// see correlated draws.
pub mod stream {
    pub const SCAN: u64 = 1;
    pub const REGULARITY: u64 = 2;
    pub const MASS: u64 = 3;
    pub const MEASURE: u64 = 4;
    pub const PROBE: u64 = 5;
    pub const WITNESS: u64 = 6;
    pub const BASIN: u64 = 7;
}

pub fn index_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(splitmix(seed ^ splitmix(stream)) ^ index))
}

pub fn complex_gaussian<R: rand::Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// A unit vector of `C^dim` whose line is Fubini–Study uniform in `P^{dim-1}`.
pub fn fs_uniform<R: rand::Rng>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-300 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// `n` FS-uniform unit lifts, generated in parallel, in index order.
pub fn fs_uniform_points(seed: u64, stream: u64, n: usize, dim: usize) -> Vec<Vec<Complex64>> {
    (0..n)
        .into_par_iter()
        .map(|i| fs_uniform(&mut index_rng(seed, stream, i as u64), dim))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unit() {
        let a = fs_uniform_points(7, stream::SCAN, 50, 3);
        let b = fs_uniform_points(7, stream::SCAN, 50, 3);
        assert_eq!(a, b);
        for v in &a {
            let n: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        let c = fs_uniform_points(8, stream::SCAN, 50, 3);
        assert_ne!(a, c);
    }

    #[test]
    fn coordinate_moments_match_unitary_invariance() {
        // E|z_i|^2 = 1/(k+1) for an FS-uniform unit lift
        let pts = fs_uniform_points(1, stream::SCAN, 40_000, 3);
        for i in 0..3 {
            let m = pts.iter().map(|v| v[i].norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((m - 1.0 / 3.0).abs() < 0.01, "{m}");
        }
    }
}
