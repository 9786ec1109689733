//! Deterministic random-stream derivation.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream derived
//! from the master seed, a purpose label and a list of indices (sweep point,
//! trial, ...). Streams are independent of thread scheduling, so results are
//! reproducible for any worker count.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::CVec;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(label: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a reproducible generator from `seed`, a purpose `label` and
/// positional `indices`.
pub fn stream(seed: u64, label: &str, indices: &[u64]) -> ChaCha8Rng {
    let mut key = splitmix(seed ^ fnv1a(label));
    for &ix in indices {
        key = splitmix(key ^ ix.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    ChaCha8Rng::seed_from_u64(key)
}

/// One draw from the standard circularly symmetric complex Gaussian
/// (zero mean, unit variance split evenly between the parts).
pub fn standard_complex<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Vector of iid standard complex Gaussian entries.
pub fn standard_complex_vec<R: Rng>(rng: &mut R, n: usize) -> CVec {
    DVector::from_fn(n, |_, _| standard_complex(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = stream(7, "channels", &[3, 1]);
        let mut b = stream(7, "channels", &[3, 1]);
        for _ in 0..16 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }

    #[test]
    fn streams_differ_by_label_and_index() {
        let a = stream(7, "channels", &[0]).gen::<u64>();
        let b = stream(7, "noise", &[0]).gen::<u64>();
        let c = stream(7, "channels", &[1]).gen::<u64>();
        let d = stream(8, "channels", &[0]).gen::<u64>();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn complex_gaussian_has_unit_variance() {
        let mut rng = stream(2024, "unit-test", &[]);
        let n = 200_000;
        let mut acc = 0.0;
        let mut mean = Complex64::ZERO;
        for _ in 0..n {
            let z = standard_complex(&mut rng);
            acc += z.norm_sqr();
            mean += z;
        }
        let var = acc / n as f64;
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        assert!((mean / n as f64).norm() < 0.01);
    }
}
