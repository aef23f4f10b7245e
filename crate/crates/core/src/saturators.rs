//! Bloch-sphere coordinates of effective qubits and the systems that attain
//! the Margolus-Levitin, dual and Mandelstam-Tamm bounds exactly.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::alpha::{self, sweep_angle, CLAMP_SLACK};
use crate::error::{check_fidelity, QslError, Result};
use crate::quantum::{check_dims, Hamiltonian, PureState, StateVector, C64};

const LEAK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector3 {
    pub fn dot(&self, o: &BlochVector3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Azimuth about the `z` axis.
    pub fn azimuth(&self) -> f64 {
        self.y.atan2(self.x)
    }
}

/// Bloch vector of `rho` with respect to the orthonormal pair
/// `level0`, `level1`.
pub fn bloch_from_state(rho: &PureState, level0: &StateVector, level1: &StateVector) -> Result<BlochVector3> {
    check_dims(rho.dim(), level0.dim())?;
    check_dims(rho.dim(), level1.dim())?;
    let m = rho.matrix();
    let elem = |a: &StateVector, b: &StateVector| -> C64 {
        (a.amplitudes().adjoint() * m * b.amplitudes())[(0, 0)]
    };
    let r00 = elem(level0, level0).re;
    let r11 = elem(level1, level1).re;
    let r10 = elem(level1, level0);
    let r01 = elem(level0, level1);
    let leak = (1.0 - r00 - r11).abs();
    if leak > LEAK_TOL {
        return Err(QslError::NotEffectiveQubit(leak));
    }
    let x = (r10 + r01).re;
    let y = (C64::i() * (r10 - r01)).re;
    Ok(BlochVector3 { x, y, z: 1.0 - 2.0 * r00 })
}

fn check_gap(eps0: f64, eps1: f64) -> Result<f64> {
    if eps1 > eps0 {
        Ok(eps1 - eps0)
    } else {
        Err(QslError::DegenerateGap { eps0, eps1 })
    }
}

/// Bloch height of a qubit with normalized mean energy `normalized_mean`.
pub fn z_from_energy(normalized_mean: f64, eps0: f64, eps1: f64) -> Result<f64> {
    let gap = check_gap(eps0, eps1)?;
    Ok(2.0 * normalized_mean / gap - 1.0)
}

/// First time a qubit at Bloch height `z` reaches fidelity `delta`.
pub fn arrival_time(delta: f64, z: f64, eps0: f64, eps1: f64) -> Result<f64> {
    let gap = check_gap(eps0, eps1)?;
    check_fidelity(delta)?;
    if z * z > delta + CLAMP_SLACK {
        return Err(QslError::Unreachable { delta, z });
    }
    if delta == 1.0 {
        return Ok(0.0);
    }
    let angle = sweep_angle(delta, z).map_err(|e| match e {
        QslError::OutsideFeasibleInterval { .. } => QslError::Unreachable { delta, z },
        other => other,
    })?;
    Ok(angle / gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SaturatorKind {
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "ML_DUAL")]
    MlDual,
    #[serde(rename = "MT")]
    Mt,
}

impl SaturatorKind {
    pub fn name(self) -> &'static str {
        match self {
            SaturatorKind::Ml => "ML",
            SaturatorKind::MlDual => "ML_DUAL",
            SaturatorKind::Mt => "MT",
        }
    }
}

impl std::str::FromStr for SaturatorKind {
    type Err = QslError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(SaturatorKind::Ml),
            "dual" | "ml_dual" | "ml-dual" => Ok(SaturatorKind::MlDual),
            "mt" => Ok(SaturatorKind::Mt),
            _ => Err(QslError::InvalidArgument(format!("unknown saturator kind {s:?}"))),
        }
    }
}

/// A Hamiltonian, an initial state and the time at which the state first
/// reaches the target fidelity, chosen so that one bound is attained.
#[derive(Debug, Clone)]
pub struct SaturatingSystem {
    pub hamiltonian: Hamiltonian,
    pub state: StateVector,
    pub delta: f64,
    pub predicted_time: f64,
    pub kind: SaturatorKind,
    /// Ascending level indices of the two occupied eigenvalues.
    pub embedding: [usize; 2],
    /// Bloch height of the state in its two-level subspace.
    pub z: f64,
}

/// Saturator of `kind` in dimension `dim`. The qubit sits on the first two
/// coordinates; any extra levels lie strictly inside `(eps0, eps1)` and are
/// unoccupied.
pub fn saturating_system(kind: SaturatorKind, delta: f64, eps0: f64, eps1: f64, dim: usize) -> Result<SaturatingSystem> {
    let gap = check_gap(eps0, eps1)?;
    check_fidelity(delta)?;
    if dim < 2 {
        return Err(QslError::DimensionTooSmall(dim));
    }
    let z = match kind {
        SaturatorKind::Ml => alpha::alpha(delta, alpha::DEFAULT_TOL)?.z_star,
        SaturatorKind::MlDual => -alpha::alpha(delta, alpha::DEFAULT_TOL)?.z_star,
        SaturatorKind::Mt => 0.0,
    };
    let mut energies = vec![eps0, eps1];
    energies.extend((1..dim - 1).map(|k| eps0 + gap * k as f64 / (dim - 1) as f64));
    let hamiltonian = Hamiltonian::diagonal(&energies)?;
    let r = 0.5 * (-z).clamp(-1.0, 1.0).acos();
    let mut amps = DVector::zeros(dim);
    amps[0] = C64::new(r.cos(), 0.0);
    amps[1] = C64::new(r.sin(), 0.0);
    let state = StateVector::from_vector(amps)?;
    let predicted_time = if delta == 1.0 { 0.0 } else { arrival_time(delta, z, eps0, eps1)? };
    Ok(SaturatingSystem { hamiltonian, state, delta, predicted_time, kind, embedding: [0, dim - 1], z })
}

pub fn ml_saturating_system(delta: f64, eps0: f64, eps1: f64) -> Result<SaturatingSystem> {
    saturating_system(SaturatorKind::Ml, delta, eps0, eps1, 2)
}

pub fn dual_saturating_system(delta: f64, eps0: f64, eps1: f64) -> Result<SaturatingSystem> {
    saturating_system(SaturatorKind::MlDual, delta, eps0, eps1, 2)
}

pub fn mt_saturating_system(delta: f64, eps0: f64, eps1: f64) -> Result<SaturatingSystem> {
    saturating_system(SaturatorKind::Mt, delta, eps0, eps1, 2)
}

/// ML saturator of an arbitrary Hamiltonian built on its ground level and
/// level `upper`.
pub fn ml_saturator_on_levels(h: &Hamiltonian, upper: usize, delta: f64) -> Result<SaturatingSystem> {
    if upper == 0 || upper >= h.dim() {
        return Err(QslError::InvalidArgument(format!("level {upper} cannot pair with the ground level")));
    }
    let (e0, e1) = (h.ground_energy(), h.energies()[upper]);
    check_gap(e0, e1)?;
    let z = alpha::alpha(delta, alpha::DEFAULT_TOL)?.z_star;
    let r = 0.5 * (-z).clamp(-1.0, 1.0).acos();
    let v0 = h.eigenvector(0)?;
    let v1 = h.eigenvector(upper)?;
    let amps = v0.amplitudes() * C64::new(r.cos(), 0.0) + v1.amplitudes() * C64::new(r.sin(), 0.0);
    let state = StateVector::from_vector(amps)?;
    let predicted_time = if delta == 1.0 { 0.0 } else { arrival_time(delta, z, e0, e1)? };
    Ok(SaturatingSystem {
        hamiltonian: h.clone(),
        state,
        delta,
        predicted_time,
        kind: SaturatorKind::Ml,
        embedding: [0, upper],
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{energy_stats, fidelity};
    use std::f64::consts::PI;

    fn basis2() -> (StateVector, StateVector) {
        (StateVector::basis(2, 0).unwrap(), StateVector::basis(2, 1).unwrap())
    }

    #[test]
    fn bloch_examples() {
        let (b0, b1) = basis2();
        let v = bloch_from_state(&b0.projector(), &b0, &b1).unwrap();
        assert_eq!((v.x, v.y, v.z), (0.0, 0.0, -1.0));
        let v = bloch_from_state(&b1.projector(), &b0, &b1).unwrap();
        assert_eq!((v.x, v.y, v.z), (0.0, 0.0, 1.0));
        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap();
        let v = bloch_from_state(&plus.projector(), &b0, &b1).unwrap();
        assert!((v.x - 1.0).abs() < 1e-15 && v.y.abs() < 1e-15 && v.z.abs() < 1e-15);
    }

    #[test]
    fn bloch_rejects_leaking_state() {
        let psi = StateVector::from_real(&[1.0, 0.0, 1.0]).unwrap();
        let b0 = StateVector::basis(3, 0).unwrap();
        let b1 = StateVector::basis(3, 1).unwrap();
        assert!(matches!(bloch_from_state(&psi.projector(), &b0, &b1), Err(QslError::NotEffectiveQubit(_))));
    }

    #[test]
    fn z_from_energy_examples() {
        assert_eq!(z_from_energy(0.0, 1.0, 3.0).unwrap(), -1.0);
        assert_eq!(z_from_energy(1.0, 1.0, 3.0).unwrap(), 0.0);
        assert_eq!(z_from_energy(2.0, 1.0, 3.0).unwrap(), 1.0);
        assert!(matches!(z_from_energy(0.5, 1.0, 1.0), Err(QslError::DegenerateGap { .. })));
    }

    #[test]
    fn arrival_time_examples() {
        assert!((arrival_time(0.0, 0.0, 0.0, 1.0).unwrap() - PI).abs() < 1e-15);
        assert_eq!(arrival_time(1.0, 0.3, 0.0, 1.0).unwrap(), 0.0);
        assert!((arrival_time(0.5, 0.0, 0.0, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(matches!(arrival_time(0.25, 0.6, 0.0, 1.0), Err(QslError::Unreachable { .. })));
    }

    #[test]
    fn ml_saturator_products() {
        for k in 0..=10 {
            let d = k as f64 / 10.0;
            let s = ml_saturating_system(d, 0.0, 1.0).unwrap();
            let stats = energy_stats(&s.hamiltonian, &s.state).unwrap();
            let a = alpha::alpha_value(d).unwrap();
            assert!((s.predicted_time * stats.normalized_mean - a).abs() < 1e-9, "delta {d}");
        }
        let s = ml_saturating_system(0.0, 0.0, 1.0).unwrap();
        let amps = s.state.amplitudes();
        assert!((amps[0].re - amps[1].re).abs() < 1e-15);
        assert_eq!(ml_saturating_system(1.0, 0.0, 1.0).unwrap().predicted_time, 0.0);
        let s = ml_saturating_system(0.5, 0.0, 1.0).unwrap();
        let z = alpha::alpha(0.5, alpha::DEFAULT_TOL).unwrap().z_star;
        assert_eq!(s.predicted_time, arrival_time(0.5, z, 0.0, 1.0).unwrap());
    }

    #[test]
    fn dual_saturator_products() {
        for k in 0..10 {
            let d = k as f64 / 10.0;
            let s = dual_saturating_system(d, -1.0, 2.0).unwrap();
            let stats = energy_stats(&s.hamiltonian, &s.state).unwrap();
            let a = alpha::alpha_value(d).unwrap();
            assert!((s.predicted_time * stats.dual_mean - a).abs() < 1e-9, "delta {d}");
        }
        assert!(dual_saturating_system(0.5, 0.0, 1.0).unwrap().z > 0.0);
        assert_eq!(dual_saturating_system(1.0, 0.0, 1.0).unwrap().predicted_time, 0.0);
        let (a, b) = (ml_saturating_system(0.0, 0.0, 1.0).unwrap(), dual_saturating_system(0.0, 0.0, 1.0).unwrap());
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn mt_saturator_products() {
        let s = mt_saturating_system(0.0, 0.0, 1.0).unwrap();
        let stats = energy_stats(&s.hamiltonian, &s.state).unwrap();
        assert!((stats.uncertainty() - 0.5).abs() < 1e-15);
        assert!((s.predicted_time - PI).abs() < 1e-14);
        for &d in &[0.1, 0.25, 0.7] {
            let s = mt_saturating_system(d, 0.0, 2.0).unwrap();
            let stats = energy_stats(&s.hamiltonian, &s.state).unwrap();
            assert!((s.predicted_time * stats.uncertainty() - f64::sqrt(d).acos()).abs() < 1e-9);
        }
        assert_eq!(mt_saturating_system(1.0, 0.0, 1.0).unwrap().predicted_time, 0.0);
    }

    #[test]
    fn padded_embedding_keeps_the_qubit() {
        let s = saturating_system(SaturatorKind::Ml, 0.3, 0.0, 1.0, 5).unwrap();
        assert_eq!(s.embedding, [0, 4]);
        let e = s.hamiltonian.energies();
        assert!(e[1..4].iter().all(|&x| x > 0.0 && x < 1.0));
        let two = ml_saturating_system(0.3, 0.0, 1.0).unwrap();
        assert_eq!(s.predicted_time, two.predicted_time);
        assert!(s.state.amplitudes().iter().skip(2).all(|c| c.norm() == 0.0));
    }

    #[test]
    fn ml_and_dual_heights_have_opposite_signs() {
        for k in 1..10 {
            let d = k as f64 / 10.0;
            let a = ml_saturating_system(d, 0.0, 1.0).unwrap().z;
            let b = dual_saturating_system(d, 0.0, 1.0).unwrap().z;
            assert!(a < 0.0 && b > 0.0);
        }
    }

    #[test]
    fn azimuthal_speed_equals_gap() {
        let s = ml_saturating_system(0.4, 0.5, 2.25).unwrap();
        let (b0, b1) = basis2();
        let h = 1e-5;
        for &t in &[0.1, 0.7, 1.3] {
            let at = |t: f64| {
                let psi = s.hamiltonian.propagate(&s.state, t).unwrap();
                bloch_from_state(&psi.projector(), &b0, &b1).unwrap()
            };
            let (a, b) = (at(t - h), at(t + h));
            let mut dphi = b.azimuth() - a.azimuth();
            dphi = (dphi + PI).rem_euclid(2.0 * PI) - PI;
            assert!((dphi / (2.0 * h) - 1.75).abs() < 1e-8);
            assert!((a.z - b.z).abs() < 1e-14);
        }
    }

    #[test]
    fn larger_gap_reaches_sooner() {
        let h = Hamiltonian::diagonal(&[0.0, 0.4, 1.1, 2.5]).unwrap();
        let times: Vec<f64> = (1..4).map(|k| ml_saturator_on_levels(&h, k, 0.3).unwrap().predicted_time).collect();
        let best = times.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(best, 2);
        let rho = ml_saturator_on_levels(&h, 3, 0.3).unwrap();
        let end = h.propagate(&rho.state, rho.predicted_time).unwrap();
        assert!((fidelity(&rho.state.projector(), &end.projector()).unwrap() - 0.3).abs() < 1e-9);
    }
}
