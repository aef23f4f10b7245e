//! Invariants checked on randomly generated systems.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng as _;
use qsl_core::alpha::{alpha_value, feasible_r_interval};
use qsl_core::bounds::bound_report;
use qsl_core::extremal::extreme_value;
use qsl_core::first_passage::fidelity_at;
use qsl_core::geometry::{dynamical_phase, hamiltonian_curve, DiscretizedCurve};
use qsl_core::oracle::{constraint_g, constraint_h, objective_f, reduce_triple, SpectralPoint};
use qsl_core::quantum::{energy_stats, fidelity, evolve, Hamiltonian, StateVector, C64};
use qsl_core::sampling::{haar_state, haar_unitary, random_hamiltonian, rng_for};
use qsl_core::saturators::bloch_from_state;

fn system(seed: u64, n: usize) -> (Hamiltonian, StateVector) {
    let mut rng = rng_for(seed, 0);
    (random_hamiltonian(&mut rng, n, -2.0, 2.0).unwrap(), haar_state(&mut rng, n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_keeps_norm(seed in any::<u64>(), n in 2usize..7, t in -20.0f64..20.0) {
        let (h, psi) = system(seed, n);
        let out = evolve(&h, &psi, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evolution_composes(seed in any::<u64>(), n in 2usize..6, t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
        let (h, psi) = system(seed, n);
        let a = evolve(&h, &evolve(&h, &psi, t1).unwrap(), t2).unwrap();
        let b = evolve(&h, &psi, t1 + t2).unwrap();
        prop_assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-11);
    }

    #[test]
    fn energy_is_conserved(seed in any::<u64>(), n in 2usize..6, t in 0.0f64..30.0) {
        let (h, psi) = system(seed, n);
        let (a, b) = (energy_stats(&h, &psi).unwrap(), energy_stats(&h, &evolve(&h, &psi, t).unwrap()).unwrap());
        prop_assert!((a.mean - b.mean).abs() < 1e-12);
        prop_assert!((a.variance - b.variance).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_unitarily_invariant(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = rng_for(seed, 1);
        let a = haar_state(&mut rng, n).unwrap();
        let b = haar_state(&mut rng, n).unwrap();
        let u = haar_unitary(&mut rng, n);
        let ua = StateVector::from_vector(&u * a.amplitudes()).unwrap();
        let ub = StateVector::from_vector(&u * b.amplitudes()).unwrap();
        let f = fidelity(&a.projector(), &b.projector()).unwrap();
        prop_assert!((f - fidelity(&ua.projector(), &ub.projector()).unwrap()).abs() < 1e-12);
        prop_assert!((f - fidelity(&b.projector(), &a.projector()).unwrap()).abs() < 1e-14);
        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&f));
    }

    #[test]
    fn bloch_dot_product_is_fidelity(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 2);
        let a = haar_state(&mut rng, 2).unwrap().projector();
        let b = haar_state(&mut rng, 2).unwrap().projector();
        let (l0, l1) = (StateVector::basis(2, 0).unwrap(), StateVector::basis(2, 1).unwrap());
        let ra = bloch_from_state(&a, &l0, &l1).unwrap();
        let rb = bloch_from_state(&b, &l0, &l1).unwrap();
        prop_assert!((ra.norm() - 1.0).abs() < 1e-12);
        prop_assert!((ra.dot(&rb) - (2.0 * fidelity(&a, &b).unwrap() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn dynamical_phase_is_gauge_independent(seed in any::<u64>(), n in 2usize..5) {
        let (h, psi) = system(seed, n);
        let curve = hamiltonian_curve(&h, &psi, 1.0, 401).unwrap();
        let mut rng = rng_for(seed, 3);
        let rephased: Vec<StateVector> =
            curve.samples().iter().map(|s| s.with_phase(rng.random_range(0.0..2.0 * PI))).collect();
        let other = DiscretizedCurve::new(rephased, curve.step()).unwrap();
        let sigma = h.eigenvector(0).unwrap().projector();
        let sigma_rot = h.eigenvector(0).unwrap().with_phase(1.234).projector();
        let a = dynamical_phase(&curve, &sigma).unwrap();
        prop_assert!((a - dynamical_phase(&other, &sigma).unwrap()).abs() < 1e-12);
        prop_assert!((a - dynamical_phase(&curve, &sigma_rot).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn spectral_functions_are_permutation_invariant(
        p in proptest::collection::vec(0.0f64..1.0, 2..6),
        eps_seed in any::<u64>(),
        shift in 0usize..6,
    ) {
        let mut rng = rng_for(eps_seed, 4);
        let n = p.len();
        let eps: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let a = SpectralPoint::new(p.clone(), eps.clone()).unwrap();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let b = SpectralPoint::new(perm.iter().map(|&i| p[i]).collect(), perm.iter().map(|&i| eps[i]).collect()).unwrap();
        prop_assert!((objective_f(&a).unwrap() - objective_f(&b).unwrap()).abs() < 1e-12);
        prop_assert!((constraint_g(&a).unwrap() - constraint_g(&b).unwrap()).abs() < 1e-12);
        prop_assert!((constraint_h(&a).unwrap() - constraint_h(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_block_rotation_changes_nothing(seed in any::<u64>(), t in 0.0f64..10.0) {
        // levels 1 and 2 share an eigenvalue; rotating inside that block
        // changes the eigenvectors but not the operator
        let mut rng = rng_for(seed, 5);
        let u = haar_unitary(&mut rng, 4);
        let block = haar_unitary(&mut rng, 2);
        let mut r = DMatrix::<C64>::identity(4, 4);
        r.view_mut((1, 1), (2, 2)).copy_from(&block);
        let e = [0.0, 0.7, 0.7, 1.9];
        let h1 = Hamiltonian::from_spectrum(&e, u.clone()).unwrap();
        let h2 = Hamiltonian::from_spectrum(&e, &u * r).unwrap();
        let psi = haar_state(&mut rng, 4).unwrap();
        prop_assert!((fidelity_at(&h1, &psi, t).unwrap() - fidelity_at(&h2, &psi, t).unwrap()).abs() < 1e-12);
        let (a, b) = (energy_stats(&h1, &psi).unwrap(), energy_stats(&h2, &psi).unwrap());
        prop_assert!((a.normalized_mean - b.normalized_mean).abs() < 1e-12);
        prop_assert!((a.variance - b.variance).abs() < 1e-12);
    }

    #[test]
    fn alpha_lies_below_mandelstam_tamm_angle(delta in 0.0f64..=1.0) {
        let a = alpha_value(delta).unwrap();
        prop_assert!(a >= 0.0 && a <= delta.sqrt().acos() + 1e-12);
    }

    #[test]
    fn alpha_decreases(d1 in 0.0f64..=1.0, d2 in 0.0f64..=1.0) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(alpha_value(hi).unwrap() <= alpha_value(lo).unwrap() + 1e-12);
    }

    #[test]
    fn extreme_values_never_undercut_alpha(delta in 0.0f64..0.99, s in 0.0f64..=1.0) {
        let (lo, hi) = feasible_r_interval(delta);
        let r = lo + s * (hi - lo);
        let v = extreme_value(r, delta).unwrap();
        prop_assert!(v.positive >= alpha_value(delta).unwrap() - 1e-12);
        prop_assert!(v.positive <= PI && v.negative == -v.positive);
    }

    #[test]
    fn bounds_are_shift_invariant_and_scale_inversely(seed in any::<u64>(), n in 2usize..5, c in -3.0f64..3.0, k in 0.2f64..5.0, delta in 0.0f64..0.99) {
        let (h, psi) = system(seed, n);
        let tol = 1e-10;
        let base = bound_report(delta, &energy_stats(&h, &psi).unwrap(), tol).unwrap();
        let shifted = bound_report(delta, &energy_stats(&h.shifted(c), &psi).unwrap(), tol).unwrap();
        let scaled = bound_report(delta, &energy_stats(&h.scaled(k), &psi).unwrap(), tol).unwrap();
        for ((name, a), ((_, b), (_, s))) in base.named().iter().zip(shifted.named().iter().zip(scaled.named().iter())) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{name}");
            prop_assert!((a / k - s).abs() <= 1e-9 * a.abs().max(1.0), "{name}");
        }
    }

    #[test]
    fn reduction_preserves_fidelity(seed in any::<u64>(), n in 2usize..5, tau in 0.1f64..8.0) {
        let (h, psi) = system(seed, n);
        let pair = reduce_triple(&h, &psi, tau).unwrap();
        prop_assert!((fidelity_at(&pair.hamiltonian, &psi, 1.0).unwrap() - fidelity_at(&h, &psi, tau).unwrap()).abs() < 1e-10);
        let e = pair.hamiltonian.energies();
        prop_assert!(e[0].abs() < 1e-12 && e[e.len() - 1] < 2.0 * PI);
        let before = tau * energy_stats(&h, &psi).unwrap().normalized_mean;
        prop_assert!(energy_stats(&pair.hamiltonian, &psi).unwrap().mean <= before + 1e-10);
    }
}
