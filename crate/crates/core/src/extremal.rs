//! Curves of constant distance from a reference state and the dynamical
//! phase functional on them.
//!
//! A curve on the geodesic sphere of radius `r` about `sigma` splits as
//! `cos r phi + sin r u_t` with `u_t` a unit vector orthogonal to `phi`. Its
//! extremals for fixed endpoints are `u_t = e^{-i Lambda_t} w`, whose phase is
//! `sin^2 r Lambda_tau`. The endpoint fidelity pins `cos Lambda_tau`, so the
//! extreme values are `+- sin^2 r arccos(1 - 2(1 - delta)/sin^2 2r)`.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::{clamped_acos, feasible_r_interval};
use crate::error::{check_fidelity, QslError, Result};
use crate::geometry::{dynamical_phase, DiscretizedCurve};
use crate::quantum::{PureState, StateVector, C64};
use crate::sampling::rng_for;
use crate::scalar::scan_minimize;

/// Largest `|<phi|w>|` accepted for the orthogonal direction.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;
/// Largest change of the endpoint fidelity a variation may cause.
pub const VARIATION_FIDELITY_TOL: f64 = 1e-10;
/// Grid size of the radius scan in [`min_positive_extreme_value`].
pub const R_GRID: usize = 1001;

/// `cos r phi + sin r e^{-i Lambda_t} w` with `Lambda` sampled uniformly.
#[derive(Debug, Clone)]
pub struct ExtremalCurveSpec {
    sigma: PureState,
    r: f64,
    w: StateVector,
    profile: Vec<f64>,
    step: f64,
}

impl ExtremalCurveSpec {
    pub fn new(sigma: PureState, r: f64, w: StateVector, profile: Vec<f64>, step: f64) -> Result<Self> {
        if !(r > 0.0 && r < PI / 2.0) {
            return Err(QslError::InvalidArgument(format!("radius {r} must lie in (0, pi/2)")));
        }
        if w.dim() != sigma.dim() {
            return Err(QslError::InvalidArgument(format!(
                "direction has dimension {} but the reference state {}",
                w.dim(),
                sigma.dim()
            )));
        }
        let phi = sigma.representative();
        let c = phi.inner(&w)?.norm();
        if c > ORTHOGONALITY_TOL {
            return Err(QslError::InvalidArgument(format!("direction overlaps the reference state ({c:e})")));
        }
        if profile.len() < 2 || profile[0] != 0.0 || profile.iter().any(|x| !x.is_finite()) {
            return Err(QslError::InvalidArgument("phase profile needs >= 2 finite samples starting at 0".into()));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(QslError::InvalidArgument(format!("invalid step {step}")));
        }
        Ok(Self { sigma, r, w, profile, step })
    }

    /// Linear profile `Lambda_t = lambda_tau t / tau` on `samples` points.
    pub fn linear(sigma: PureState, r: f64, w: StateVector, lambda_tau: f64, tau: f64, samples: usize) -> Result<Self> {
        if samples < 2 || !(tau > 0.0) {
            return Err(QslError::InvalidArgument("need samples >= 2 and tau > 0".into()));
        }
        let k = (samples - 1) as f64;
        let profile = (0..samples).map(|i| lambda_tau * i as f64 / k).collect();
        Self::new(sigma, r, w, profile, tau / k)
    }

    pub fn sigma(&self) -> &PureState {
        &self.sigma
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn w(&self) -> &StateVector {
        &self.w
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Final phase `Lambda_tau`.
    pub fn lambda_tau(&self) -> f64 {
        self.profile[self.profile.len() - 1]
    }

    /// The curve's unit directions `e^{-i Lambda_t} w`.
    pub fn sphere_curve(&self) -> SphereCurve {
        let w = self.w.amplitudes();
        let directions = self.profile.iter().map(|&l| w * C64::from_polar(1.0, -l)).collect();
        SphereCurve { sigma: self.sigma.clone(), phi: self.sigma.representative(), r: self.r, directions, step: self.step }
    }
}

/// A sampled curve `cos r phi + sin r u_t` on the sphere of radius `r`.
#[derive(Debug, Clone)]
pub struct SphereCurve {
    sigma: PureState,
    phi: StateVector,
    r: f64,
    directions: Vec<DVector<C64>>,
    step: f64,
}

impl SphereCurve {
    /// Builds the curve from directions, which are projected orthogonally to
    /// `phi` and normalized.
    pub fn new(sigma: PureState, r: f64, directions: Vec<DVector<C64>>, step: f64) -> Result<Self> {
        if !(r > 0.0 && r < PI / 2.0) {
            return Err(QslError::InvalidArgument(format!("radius {r} must lie in (0, pi/2)")));
        }
        if directions.len() < 2 {
            return Err(QslError::InvalidArgument("a curve needs at least two samples".into()));
        }
        let phi = sigma.representative();
        let directions = directions
            .into_iter()
            .map(|u| {
                crate::quantum::check_dims(phi.dim(), u.len())?;
                project_unit(phi.amplitudes(), u)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sigma, phi, r, directions, step })
    }

    pub fn sigma(&self) -> &PureState {
        &self.sigma
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn directions(&self) -> &[DVector<C64>] {
        &self.directions
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn state(&self, u: &DVector<C64>) -> StateVector {
        let (s, c) = self.r.sin_cos();
        StateVector::from_unit(self.phi.amplitudes() * C64::new(c, 0.0) + u * C64::new(s, 0.0))
    }

    pub fn curve(&self) -> Result<DiscretizedCurve> {
        DiscretizedCurve::new(self.directions.iter().map(|u| self.state(u)).collect(), self.step)
    }

    /// Fidelity between the two endpoints.
    pub fn endpoint_fidelity(&self) -> f64 {
        let a = self.state(&self.directions[0]);
        let b = self.state(&self.directions[self.directions.len() - 1]);
        a.amplitudes().dotc(b.amplitudes()).norm_sqr()
    }
}

fn project_unit(phi: &DVector<C64>, u: DVector<C64>) -> Result<DVector<C64>> {
    let v = &u - phi * phi.dotc(&u);
    let n = v.norm();
    if !(n > 1e-12) {
        return Err(QslError::InvalidVariation(n));
    }
    Ok(v / C64::new(n, 0.0))
}

/// Samples the extremal curve.
pub fn extremal_curve(curve_spec: &ExtremalCurveSpec) -> Result<DiscretizedCurve> {
    curve_spec.sphere_curve().curve()
}

/// Dynamical phase of `curve` in the gauge fixed by `sigma`.
pub fn functional_j(curve: &DiscretizedCurve, sigma: &PureState) -> Result<f64> {
    dynamical_phase(curve, sigma)
}

/// The two signed extreme values at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeValues {
    pub positive: f64,
    pub negative: f64,
}

/// `+- sin^2 r arccos(1 - 2(1 - delta)/sin^2 2r)`. Both lie in `[-pi, pi]`,
/// so they are already principal values mod `2pi`.
pub fn extreme_value(r: f64, delta: f64) -> Result<ExtremeValues> {
    check_fidelity(delta)?;
    let s2 = (2.0 * r).sin().powi(2);
    if !(r > 0.0 && r < PI / 2.0) || s2 == 0.0 {
        return Err(QslError::InfeasibleRadius { r, delta });
    }
    let lambda = clamped_acos(1.0 - 2.0 * (1.0 - delta) / s2).ok_or(QslError::InfeasibleRadius { r, delta })?;
    let v = r.sin().powi(2) * lambda;
    Ok(ExtremeValues { positive: v, negative: -v })
}

/// Rows `(r, positive extreme value, running minimum)` on a uniform grid of
/// the feasible radii.
pub fn extreme_value_scan(delta: f64, points: usize) -> Result<Vec<[f64; 3]>> {
    check_fidelity(delta)?;
    if points < 2 {
        return Err(QslError::InvalidArgument("need at least two grid points".into()));
    }
    if delta == 1.0 {
        return Err(QslError::InfeasibleRadius { r: 0.0, delta });
    }
    let (lo, hi) = feasible_r_interval(delta);
    let mut best = f64::INFINITY;
    crate::scalar::grid(lo, hi, points)
        .map(|r| {
            let v = extreme_value(r, delta)?.positive;
            best = best.min(v);
            Ok([r, v, best])
        })
        .collect()
}

/// Smallest positive extreme value over the feasible radii and the radius
/// attaining it: a grid scan refined by golden-section search.
pub fn min_positive_extreme_value(delta: f64) -> Result<(f64, f64)> {
    check_fidelity(delta)?;
    if delta == 1.0 {
        return Ok((0.0, 0.0));
    }
    let (lo, hi) = feasible_r_interval(delta);
    if hi - lo < 1e-15 {
        return Ok((lo, extreme_value(lo, delta)?.positive));
    }
    let f = |r: f64| extreme_value(r, delta).map(|v| v.positive).unwrap_or(f64::INFINITY);
    Ok(scan_minimize(f, lo, hi, R_GRID, 1e-12))
}

/// A variation direction for every sample of a sphere curve.
#[derive(Debug, Clone)]
pub struct Variation {
    pub directions: Vec<DVector<C64>>,
}

/// `u_k -> normalize(P(u_k + h eta_k))` with `P` the projection orthogonal to
/// `phi`, keeping the curve on its sphere. Raises [`QslError::InvalidVariation`]
/// if the endpoint fidelity changes.
pub fn apply_variation(curve: &SphereCurve, variation: &Variation, h: f64) -> Result<SphereCurve> {
    if variation.directions.len() != curve.directions.len() {
        return Err(QslError::InvalidArgument("variation and curve differ in length".into()));
    }
    let directions = curve
        .directions
        .iter()
        .zip(&variation.directions)
        .map(|(u, eta)| project_unit(curve.phi.amplitudes(), u + eta * C64::new(h, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let out = SphereCurve { directions, ..curve.clone() };
    let change = (out.endpoint_fidelity() - curve.endpoint_fidelity()).abs();
    if change > VARIATION_FIDELITY_TOL {
        return Err(QslError::InvalidVariation(change));
    }
    Ok(out)
}

/// Reversal of the phase of `w`, which leaves every state's projector
/// unchanged up to one global phase of `u`.
pub fn gauge_variation(curve: &SphereCurve) -> Variation {
    Variation { directions: curve.directions.iter().map(|u| u * C64::new(0.0, 1.0)).collect() }
}

/// Random variation: a smooth bump supported strictly inside the curve times
/// a random direction plus a random multiple of the phase direction `i u`.
pub fn random_variation<R: Rng>(rng: &mut R, curve: &SphereCurve) -> Variation {
    let n = curve.directions.len();
    let dim = curve.phi.dim();
    let a = rng.random_range(0.0..0.6);
    let b = rng.random_range(a + 0.3..=1.0);
    let mut xi = DVector::from_fn(dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let phi = curve.phi.amplitudes();
    xi -= phi * phi.dotc(&xi);
    let xi = &xi / C64::new(xi.norm().max(1e-300), 0.0);
    let phase = rng.random_range(-1.0..1.0);
    let directions = (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            let bump = if t > a && t < b { (PI * (t - a) / (b - a)).sin().powi(2) } else { 0.0 };
            (&xi + &curve.directions[k] * C64::new(0.0, phase)) * C64::new(bump, 0.0)
        })
        .collect();
    Variation { directions }
}

/// Central-difference slopes of the functional along one variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSlope {
    pub at_h: f64,
    pub at_half_h: f64,
    /// Richardson combination `(4 D(h/2) - D(h)) / 3`.
    pub extrapolated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub magnitude: f64,
    pub slopes: Vec<DirectionalSlope>,
    /// Largest `|extrapolated|` over all variations.
    pub max_first_order: f64,
}

/// Central-difference slope of the functional along `variation`.
pub fn directional_slope(curve: &SphereCurve, variation: &Variation, h: f64) -> Result<DirectionalSlope> {
    let j = |s: f64| -> Result<f64> {
        let c = apply_variation(curve, variation, s)?;
        functional_j(&c.curve()?, &curve.sigma)
    };
    let d = |s: f64| -> Result<f64> { Ok((j(s)? - j(-s)?) / (2.0 * s)) };
    let (at_h, at_half_h) = (d(h)?, d(0.5 * h)?);
    Ok(DirectionalSlope { at_h, at_half_h, extrapolated: (4.0 * at_half_h - at_h) / 3.0 })
}

/// First-order change of the functional under `n_perturbations` random
/// fixed-endpoint variations of `curve`.
pub fn sphere_stationarity_test(
    curve: &SphereCurve,
    n_perturbations: usize,
    magnitude: f64,
    seed: u64,
) -> Result<StationarityReport> {
    if !(magnitude > 0.0) || n_perturbations == 0 {
        return Err(QslError::InvalidArgument("need a positive magnitude and at least one variation".into()));
    }
    let slopes = (0..n_perturbations)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, k as u64);
            directional_slope(curve, &random_variation(&mut rng, curve), magnitude)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_first_order = slopes.iter().map(|s| s.extrapolated.abs()).fold(0.0, f64::max);
    Ok(StationarityReport { magnitude, slopes, max_first_order })
}

/// [`sphere_stationarity_test`] on an extremal curve.
pub fn stationarity_test(
    curve_spec: &ExtremalCurveSpec,
    n_perturbations: usize,
    magnitude: f64,
    seed: u64,
) -> Result<StationarityReport> {
    sphere_stationarity_test(&curve_spec.sphere_curve(), n_perturbations, magnitude, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::alpha_value;
    use crate::quantum::Hamiltonian;

    fn setup(dim: usize) -> (PureState, StateVector) {
        let sigma = StateVector::basis(dim, 0).unwrap().projector();
        let w = StateVector::basis(dim, 1).unwrap();
        (sigma, w)
    }

    #[test]
    fn spec_validation() {
        let (sigma, w) = setup(2);
        assert!(ExtremalCurveSpec::new(sigma.clone(), 0.0, w.clone(), vec![0.0, 0.1], 0.1).is_err());
        assert!(ExtremalCurveSpec::new(sigma.clone(), 0.3, w.clone(), vec![0.1, 0.1], 0.1).is_err());
        let bad = StateVector::from_real(&[1.0, 1.0]).unwrap();
        assert!(matches!(
            ExtremalCurveSpec::new(sigma, 0.3, bad, vec![0.0, 0.1], 0.1),
            Err(QslError::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_profile_is_constant() {
        let (sigma, w) = setup(2);
        let curve_spec = ExtremalCurveSpec::new(sigma.clone(), 0.4, w, vec![0.0; 11], 0.1).unwrap();
        let c = extremal_curve(&curve_spec).unwrap();
        assert!(c.fs_length() < 1e-15);
        assert_eq!(functional_j(&c, &sigma).unwrap(), 0.0);
    }

    #[test]
    fn curve_stays_on_sphere() {
        let (sigma, w) = setup(3);
        let profile: Vec<f64> = (0..201).map(|k| (k as f64 * 0.01).powi(2) + 0.3 * (k as f64 * 0.05).sin()).collect();
        let curve_spec = ExtremalCurveSpec::new(sigma.clone(), 0.7, w, profile, 0.01).unwrap();
        for s in extremal_curve(&curve_spec).unwrap().samples() {
            let d = crate::geometry::fs_distance(&sigma, &s.projector()).unwrap();
            assert!((d - 0.7).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_profile_is_hamiltonian_evolution() {
        let (sigma, w) = setup(3);
        let (r, gap, tau) = (0.6, 1.3, 2.0);
        let curve_spec = ExtremalCurveSpec::linear(sigma, r, w, gap * tau, tau, 101).unwrap();
        let h = Hamiltonian::diagonal(&[0.2, 0.2 + gap, 5.0]).unwrap();
        let psi = StateVector::from_real(&[r.cos(), r.sin(), 0.0]).unwrap();
        let c = extremal_curve(&curve_spec).unwrap();
        for (k, s) in c.samples().iter().enumerate() {
            let e = h.propagate(&psi, curve_spec.step() * k as f64).unwrap();
            assert!((s.overlap(&e).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn functional_examples() {
        let (sigma, w) = setup(2);
        let curve_spec = ExtremalCurveSpec::linear(sigma.clone(), PI / 4.0, w.clone(), 1.0, 1.0, 201).unwrap();
        let c = extremal_curve(&curve_spec).unwrap();
        let j = functional_j(&c, &sigma).unwrap();
        assert!((j - 0.5).abs() < 1e-8);
        assert!((functional_j(&c.reversed(), &sigma).unwrap() + j).abs() < 1e-12);
        // nonlinear profile with the same endpoint phase
        let profile: Vec<f64> = (0..401).map(|k| {
            let t = k as f64 / 400.0;
            2.0 * t * t + 0.4 * (3.0 * PI * t).sin()
        }).collect();
        let curve_spec = ExtremalCurveSpec::new(sigma.clone(), 0.9, w, profile, 1.0 / 400.0).unwrap();
        let j = functional_j(&extremal_curve(&curve_spec).unwrap(), &sigma).unwrap();
        assert!((j - 0.9f64.sin().powi(2) * curve_spec.lambda_tau()).abs() < 1e-6);
    }

    #[test]
    fn extreme_value_examples() {
        let v = extreme_value(PI / 4.0, 0.0).unwrap();
        assert!((v.positive - PI / 2.0).abs() < 1e-15 && v.negative == -v.positive);
        for &r in &[0.2, 0.7, 1.3] {
            assert_eq!(extreme_value(r, 1.0).unwrap().positive, 0.0);
        }
        assert!(matches!(extreme_value(0.1, 0.5), Err(QslError::InfeasibleRadius { .. })));
        assert!(matches!(extreme_value(0.0, 0.5), Err(QslError::InfeasibleRadius { .. })));
    }

    #[test]
    fn minimum_over_radius_is_alpha() {
        for k in 0..10 {
            let d = k as f64 / 10.0;
            let (_, v) = min_positive_extreme_value(d).unwrap();
            assert!((v - alpha_value(d).unwrap()).abs() < 1e-8, "delta {d}");
        }
        let rows = extreme_value_scan(0.5, 101).unwrap();
        assert!(rows.windows(2).all(|w| w[1][2] <= w[0][2]));
        assert!(rows.iter().all(|r| r[1] <= PI));
    }

    #[test]
    fn extremal_curves_are_stationary() {
        let (sigma, w) = setup(3);
        let curve_spec = ExtremalCurveSpec::linear(sigma, 0.6, w, 1.7, 1.0, 401).unwrap();
        let rep = stationarity_test(&curve_spec, 8, 1e-3, 7).unwrap();
        assert!(rep.max_first_order < 1e-4, "{rep:?}");
    }

    #[test]
    fn gauge_variation_changes_nothing() {
        let (sigma, w) = setup(3);
        let curve_spec = ExtremalCurveSpec::linear(sigma, 0.6, w, 1.7, 1.0, 201).unwrap();
        let curve = curve_spec.sphere_curve();
        let s = directional_slope(&curve, &gauge_variation(&curve), 1e-3).unwrap();
        assert!(s.at_h.abs() < 1e-12 && s.at_half_h.abs() < 1e-12);
    }

    #[test]
    fn endpoint_moving_variation_is_rejected() {
        let (sigma, w) = setup(3);
        let curve_spec = ExtremalCurveSpec::linear(sigma, 0.6, w, 1.7, 1.0, 51).unwrap();
        let curve = curve_spec.sphere_curve();
        let mut v = Variation { directions: vec![DVector::zeros(3); 51] };
        v.directions[50] = curve.directions()[50].map(|x| x * C64::new(0.0, 1.0));
        assert!(matches!(apply_variation(&curve, &v, 1e-2), Err(QslError::InvalidVariation(_))));
    }

    #[test]
    fn curve_leaving_the_phase_circle_is_not_stationary() {
        // u_t mixes in a second direction in the interior; endpoints as before
        let (sigma, w) = setup(3);
        let w2 = StateVector::basis(3, 2).unwrap();
        let n = 401;
        let dirs: Vec<DVector<C64>> = (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                w.amplitudes() * C64::from_polar(1.0, -1.7 * t) + w2.amplitudes() * C64::new(0.8 * (PI * t).sin(), 0.0)
            })
            .collect();
        let curve = SphereCurve::new(sigma, 0.6, dirs, 1.0 / (n - 1) as f64).unwrap();
        let rep = sphere_stationarity_test(&curve, 8, 1e-3, 7).unwrap();
        assert!(rep.max_first_order > 1e-2, "{rep:?}");
    }
}
