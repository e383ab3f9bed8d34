//! Deterministic seeding and random quantum objects.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::ComplexMatrix;

/// Generator used throughout the crate.
pub type DetRng = ChaCha8Rng;

/// Independent sub-seed for task `index` of a run seeded with `seed`
/// (splitmix64 finalizer over the pair).
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, index: u64) -> DetRng {
    DetRng::seed_from_u64(sub_seed(seed, index))
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let overlap: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(c) {
                    *x -= overlap * a;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

pub fn random_pure_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let u = random_unitary(n, rng);
    (0..n).map(|i| u[(i, 0)]).collect()
}

/// Projective measurement with `outcomes` elements on an `n`-dimensional
/// space: the columns of a Haar unitary dealt round-robin to the outcomes.
pub fn random_projective_measurement<R: Rng + ?Sized>(
    n: usize,
    outcomes: usize,
    rng: &mut R,
) -> Vec<ComplexMatrix> {
    let u = random_unitary(n, rng);
    let mut effects = alloc::vec![ComplexMatrix::zeros(n, n); outcomes];
    for k in 0..n {
        let col: Vec<Complex64> = (0..n).map(|i| u[(i, k)]).collect();
        effects[k % outcomes].add_scaled(&ComplexMatrix::outer(&col), 1.0);
    }
    effects
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..64).map(|i| sub_seed(7, i)).collect();
        for i in 0..a.len() {
            for j in 0..i {
                assert_ne!(a[i], a[j]);
            }
        }
        assert_eq!(sub_seed(7, 3), a[3]);
        assert_ne!(sub_seed(8, 3), a[3]);
    }

    #[test]
    fn unitary_and_measurement() {
        let mut rng = rng_for(1, 0);
        let u = random_unitary(5, &mut rng);
        let g = u.adjoint().matmul(&u).unwrap();
        assert!((&g - &ComplexMatrix::identity(5)).max_abs() < 1e-12);
        let m = random_projective_measurement(5, 2, &mut rng);
        let total = &m[0] + &m[1];
        assert!((&total - &ComplexMatrix::identity(5)).max_abs() < 1e-12);
        let sq = m[0].matmul(&m[0]).unwrap();
        assert!((&sq - &m[0]).max_abs() < 1e-12);
    }
}
