//! The Margolus-Levitin action `alpha(delta)`: the smallest value of
//! `tau * <H - eps_0>` compatible with evolving to fidelity `delta`.
//!
//! No closed form exists. The minimum is located by a dense scan of the
//! one-dimensional objective followed by golden-section refinement and a last
//! bisection on the slope, in either the Bloch-height coordinate `z` or the
//! geodesic radius `r = arccos(-z)/2`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{check_fidelity, QslError, Result};
use crate::scalar::{bisect, grid, local_minima, scan_minimize};

/// Default width of the final bracket on the minimizer.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Samples in the bracketing scan.
pub const SCAN_POINTS: usize = 2001;

/// Arguments of `arccos` may overshoot `[-1, 1]` by this much before the
/// point is declared infeasible.
pub(crate) const CLAMP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub delta: f64,
    pub value: f64,
    /// Bloch height of the saturating state.
    pub z_star: f64,
    /// Fubini-Study distance of the saturating state from the ground state.
    pub r_star: f64,
}

/// `arccos` with arguments within [`CLAMP_SLACK`] of `-1` or `1` snapped to
/// the boundary. Returns `None` for larger overshoots.
pub(crate) fn clamped_acos(x: f64) -> Option<f64> {
    if x < -1.0 - CLAMP_SLACK || x > 1.0 + CLAMP_SLACK || x.is_nan() {
        None
    } else if x <= -1.0 + CLAMP_SLACK {
        Some(std::f64::consts::PI)
    } else if x >= 1.0 - CLAMP_SLACK {
        Some(0.0)
    } else {
        Some(x.acos())
    }
}

/// Rotation angle `arccos((2 delta - 1 - z^2) / (1 - z^2))` a Bloch vector at
/// height `z` sweeps before reaching fidelity `delta`.
pub(crate) fn sweep_angle(delta: f64, z: f64) -> Result<f64> {
    if z.abs() >= 1.0 {
        return Err(QslError::Singular);
    }
    let q = 1.0 - z * z;
    let arg = (2.0 * delta - 1.0 - z * z) / q;
    clamped_acos(arg).ok_or(QslError::OutsideFeasibleInterval { delta, z })
}

/// `(1 + z)/2 * arccos((2 delta - 1 - z^2)/(1 - z^2))`.
pub fn objective_z(delta: f64, z: f64) -> Result<f64> {
    check_fidelity(delta)?;
    if z.abs() >= 1.0 {
        return Err(QslError::Singular);
    }
    if z * z > delta + CLAMP_SLACK {
        return Err(QslError::OutsideFeasibleInterval { delta, z });
    }
    Ok(0.5 * (1.0 + z) * sweep_angle(delta, z)?)
}

/// `sin^2 r * arccos(1 - 2(1 - delta)/sin^2(2r))`.
pub fn objective_r(delta: f64, r: f64) -> Result<f64> {
    check_fidelity(delta)?;
    let s2 = (2.0 * r).sin().powi(2);
    if s2 == 0.0 {
        return Err(QslError::Singular);
    }
    let arg = 1.0 - 2.0 * (1.0 - delta) / s2;
    let angle = clamped_acos(arg)
        .ok_or(QslError::OutsideFeasibleInterval { delta, z: -(2.0 * r).cos() })?;
    Ok(r.sin().powi(2) * angle)
}

/// Derivative of [`objective_z`] in `z`, for interior points.
fn objective_z_slope(delta: f64, z: f64) -> f64 {
    let q = 1.0 - z * z;
    let u = (2.0 * delta - 1.0 - z * z) / q;
    let du = -4.0 * z * (1.0 - delta) / (q * q);
    0.5 * u.clamp(-1.0, 1.0).acos() - 0.5 * (1.0 + z) * du / (1.0 - u * u).sqrt()
}

/// Derivative of [`objective_r`] in `r`, for interior points.
fn objective_r_slope(delta: f64, r: f64) -> f64 {
    let s2 = (2.0 * r).sin();
    let v = 1.0 - 2.0 * (1.0 - delta) / (s2 * s2);
    let dv = 8.0 * (1.0 - delta) * (2.0 * r).cos() / (s2 * s2 * s2);
    s2 * v.clamp(-1.0, 1.0).acos() - r.sin().powi(2) * dv / (1.0 - v * v).sqrt()
}

/// Sharpens a minimizer found from function values alone, whose position is
/// only good to about the square root of machine precision, by bisecting on
/// the analytic slope within `width` of `x`.
fn polish<F: Fn(f64) -> f64>(slope: F, x: f64, width: f64, lo: f64, hi: f64) -> f64 {
    let a = (x - width).max(lo);
    let b = (x + width).min(hi);
    let (sa, sb) = (slope(a), slope(b));
    if !(sa < 0.0 && sb > 0.0) {
        return x;
    }
    let (a, b) = bisect(slope, a, b, 0.0);
    0.5 * (a + b)
}

/// `[-sqrt(delta), sqrt(delta)]`.
pub fn feasible_z_interval(delta: f64) -> (f64, f64) {
    let s = delta.sqrt();
    (-s, s)
}

/// `[arccos(sqrt(delta))/2, arccos(-sqrt(delta))/2]`.
pub fn feasible_r_interval(delta: f64) -> (f64, f64) {
    let s = delta.sqrt();
    (0.5 * s.acos(), 0.5 * (-s).acos())
}

fn validate(delta: f64, tol: f64) -> Result<()> {
    check_fidelity(delta)?;
    if !(tol > 0.0) {
        return Err(QslError::InvalidTolerance(tol));
    }
    Ok(())
}

fn endpoint_result(delta: f64) -> Option<AlphaResult> {
    if delta == 1.0 {
        // every z is a minimizer; report the limit of z*(delta) as delta -> 1
        Some(AlphaResult { delta, value: 0.0, z_star: -1.0, r_star: 0.0 })
    } else if delta == 0.0 {
        Some(AlphaResult { delta, value: FRAC_PI_2, z_star: 0.0, r_star: FRAC_PI_4 })
    } else {
        None
    }
}

/// `alpha(delta)` and its minimizer, searched over the Bloch height `z`.
pub fn alpha(delta: f64, tol: f64) -> Result<AlphaResult> {
    validate(delta, tol)?;
    if let Some(r) = endpoint_result(delta) {
        return Ok(r);
    }
    let (lo, hi) = feasible_z_interval(delta);
    let f = |z: f64| objective_z(delta, z).unwrap_or(f64::INFINITY);
    let (z0, v0) = scan_minimize(f, lo, hi, SCAN_POINTS, tol);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let z = polish(|z| objective_z_slope(delta, z), z0, step, lo, hi);
    let (z_star, value) = if f(z) <= v0 + 4.0 * f64::EPSILON { (z, f(z)) } else { (z0, v0) };
    Ok(AlphaResult { delta, value, z_star, r_star: 0.5 * (-z_star).acos() })
}

/// `alpha(delta)` searched over the geodesic radius `r`.
pub fn alpha_via_r(delta: f64, tol: f64) -> Result<AlphaResult> {
    validate(delta, tol)?;
    if let Some(r) = endpoint_result(delta) {
        return Ok(r);
    }
    let (lo, hi) = feasible_r_interval(delta);
    let f = |r: f64| objective_r(delta, r).unwrap_or(f64::INFINITY);
    let (r0, v0) = scan_minimize(f, lo, hi, SCAN_POINTS, tol);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let r = polish(|r| objective_r_slope(delta, r), r0, step, lo, hi);
    let (r_star, value) = if f(r) <= v0 + 4.0 * f64::EPSILON { (r, f(r)) } else { (r0, v0) };
    Ok(AlphaResult { delta, value, z_star: -(2.0 * r_star).cos(), r_star })
}

/// `alpha(delta)` at the default tolerance.
pub fn alpha_value(delta: f64) -> Result<f64> {
    Ok(alpha(delta, DEFAULT_TOL)?.value)
}

/// Number of interior local minima of the `z` objective seen on a scan of
/// `points` samples; 1 is evidence for a unique minimizer.
pub fn scan_minimum_count(delta: f64, points: usize) -> Result<usize> {
    check_fidelity(delta)?;
    let (lo, hi) = feasible_z_interval(delta);
    let values: Vec<f64> =
        grid(lo, hi, points).map(|z| objective_z(delta, z).unwrap_or(f64::INFINITY)).collect();
    let mut count = local_minima(&values).len();
    // a minimum sitting on the first or last sample
    if values.len() > 1 && values[0] < values[1] {
        count += 1;
    }
    if values.len() > 1 && values[values.len() - 1] < values[values.len() - 2] {
        count += 1;
    }
    Ok(count)
}

/// Rows of `(delta, alpha, z_star, r_star, arccos(sqrt(delta)))` on a
/// uniform grid.
pub fn alpha_table(delta_min: f64, delta_max: f64, points: usize, tol: f64) -> Result<Vec<[f64; 5]>> {
    use rayon::prelude::*;
    check_fidelity(delta_min)?;
    check_fidelity(delta_max)?;
    if points < 2 || delta_max < delta_min {
        return Err(QslError::InvalidArgument("need points >= 2 and delta_min <= delta_max".into()));
    }
    let deltas: Vec<f64> = grid(delta_min, delta_max, points).collect();
    deltas
        .par_iter()
        .map(|&d| {
            let a = alpha(d, tol)?;
            Ok([d, a.value, a.z_star, a.r_star, d.sqrt().acos()])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Brute-force minimum over an evenly spaced set of `n` points.
    fn brute_force(delta: f64, n: usize) -> (f64, f64) {
        let s = delta.sqrt();
        (0..n)
            .map(|k| -s + 2.0 * s * k as f64 / (n - 1) as f64)
            .map(|z| {
                let arg = ((2.0 * delta - 1.0 - z * z) / (1.0 - z * z)).clamp(-1.0, 1.0);
                (z, 0.5 * (1.0 + z) * arg.acos())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
    }

    #[test]
    fn objective_examples() {
        assert!((objective_z(0.0, 0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        for &d in &[0.1f64, 0.3, 0.81] {
            let s: f64 = d.sqrt();
            let v = objective_z(d, s).unwrap();
            assert!((v - (1.0 + s) * PI / 2.0).abs() < 1e-12);
        }
        assert!((objective_z(0.25, 0.0).unwrap() - PI / 3.0).abs() < 1e-15);
        assert!(((-0.5_f64).acos() / 2.0 - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn objective_errors() {
        assert!(matches!(objective_z(0.25, 0.6), Err(QslError::OutsideFeasibleInterval { .. })));
        assert_eq!(objective_z(1.0, 1.0), Err(QslError::Singular));
        assert_eq!(objective_z(1.0, -1.0), Err(QslError::Singular));
        assert!(matches!(objective_z(1.5, 0.0), Err(QslError::InvalidFidelity(_))));
    }

    #[test]
    fn endpoint_values() {
        let a0 = alpha(0.0, DEFAULT_TOL).unwrap();
        assert!((a0.value - PI / 2.0).abs() < 1e-15);
        assert_eq!(a0.z_star, 0.0);
        assert_eq!(alpha(1.0, DEFAULT_TOL).unwrap().value, 0.0);
        let r0 = alpha_via_r(0.0, DEFAULT_TOL).unwrap();
        assert!((r0.value - PI / 2.0).abs() < 1e-15);
        assert!((r0.r_star - PI / 4.0).abs() < 1e-15);
        assert_eq!(alpha_via_r(1.0, DEFAULT_TOL).unwrap().value, 0.0);
    }

    #[test]
    fn invalid_tolerance() {
        assert_eq!(alpha(0.5, 0.0), Err(QslError::InvalidTolerance(0.0)));
        assert_eq!(alpha_via_r(0.5, -1.0), Err(QslError::InvalidTolerance(-1.0)));
    }

    #[test]
    fn matches_brute_force_at_half() {
        let (z_bf, v_bf) = brute_force(0.5, 1_000_001);
        // stationary point of the objective, solved in 30-digit arithmetic
        const ALPHA_HALF: f64 = 0.416_252_936_011_856_54;
        const Z_STAR_HALF: f64 = -0.670_460_336_228_739_05;
        assert!((v_bf - ALPHA_HALF).abs() < 1e-11);
        assert!((z_bf - Z_STAR_HALF).abs() < 2e-6);
        let a = alpha(0.5, DEFAULT_TOL).unwrap();
        assert!(a.value <= v_bf + 1e-15);
        assert!((a.value - ALPHA_HALF).abs() < 1e-14);
        assert!((a.z_star - Z_STAR_HALF).abs() < 1e-9);
        let r = alpha_via_r(0.5, DEFAULT_TOL).unwrap();
        assert!((r.value - a.value).abs() < 1e-8);
        assert!((r.z_star - a.z_star).abs() < 1e-5);
    }

    #[test]
    fn result_invariants() {
        for k in 1..100 {
            let d = k as f64 / 100.0;
            let a = alpha(d, DEFAULT_TOL).unwrap();
            assert!((a.z_star + (2.0 * a.r_star).cos()).abs() < 1e-9);
            assert!((objective_z(d, a.z_star).unwrap() - a.value).abs() < 1e-9);
            assert!(a.value > 0.0 && a.value < PI / 2.0);
            assert!(a.z_star < 0.0, "z* must be negative at delta {d}");
            let (rlo, rhi) = feasible_r_interval(d);
            assert!(a.r_star >= rlo - 1e-12 && a.r_star <= rhi + 1e-12);
        }
    }

    #[test]
    fn single_scan_minimum() {
        for k in 1..20 {
            let d = k as f64 / 20.0;
            assert_eq!(scan_minimum_count(d, 20001).unwrap(), 1, "delta {d}");
        }
    }

    #[test]
    fn table_rows() {
        let rows = alpha_table(0.0, 1.0, 11, DEFAULT_TOL).unwrap();
        assert_eq!(rows.len(), 11);
        assert!((rows[0][1] - PI / 2.0).abs() < 1e-15);
        assert_eq!(rows[10][1], 0.0);
        assert!((rows[5][4] - (0.5_f64).sqrt().acos()).abs() < 1e-15);
    }
}
