//! Reproducible random systems. Every consumer derives its generator from a
//! master seed and a stream index, so parallel batches draw the same numbers
//! in any schedule.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::Result;
use crate::quantum::{Hamiltonian, StateVector, C64};

/// Generator for item `stream` of the run seeded with `master`.
pub fn rng_for(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unit vector in `C^n`.
pub fn haar_state<R: Rng>(rng: &mut R, n: usize) -> Result<StateVector> {
    let v: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
    crate::quantum::make_state(&v)
}

/// Haar-distributed unitary from the QR decomposition of a complex Gaussian
/// matrix, with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng>(rng: &mut R, n: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `n` energies drawn uniformly from `[lo, hi]`.
pub fn random_spectrum<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..=hi)).collect()
}

/// Hamiltonian with a uniform random spectrum in `[lo, hi]` and a Haar
/// random eigenbasis.
pub fn random_hamiltonian<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Result<Hamiltonian> {
    let e = random_spectrum(rng, n, lo, hi);
    let u = haar_unitary(rng, n);
    Hamiltonian::from_spectrum(&e, u)
}

/// A point drawn uniformly from the probability simplex.
pub fn uniform_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = x.iter().sum();
    x.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = rng_for(7, 3).random();
        let b: f64 = rng_for(7, 3).random();
        let c: f64 = rng_for(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = rng_for(1, 0);
        let u = haar_unitary(&mut rng, 5);
        let defect = (u.adjoint() * &u - DMatrix::<C64>::identity(5, 5)).camax();
        assert!(defect < 1e-12);
    }

    #[test]
    fn simplex_points_sum_to_one() {
        let mut rng = rng_for(2, 0);
        for _ in 0..10 {
            let p = uniform_simplex(&mut rng, 4);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }
}
