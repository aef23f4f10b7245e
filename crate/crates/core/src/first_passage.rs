//! Fidelity against time and the first time it drops to a target value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::alpha;
use crate::bounds::{bound_report, BoundReport};
use crate::error::{check_fidelity, QslError, Result};
use crate::quantum::{energy_stats, Hamiltonian, SpectralWeights, StateVector};
use crate::scalar::{bisect, golden_section};

/// Default number of scan samples.
pub const DEFAULT_SCAN: usize = 4096;
/// Default bound on `|F - delta|` at the reported time.
pub const DEFAULT_PASSAGE_TOL: f64 = 1e-12;
/// Relative slack allowed when comparing a passage time with a bound.
pub const HOLD_SLACK: f64 = 1e-8;
/// Relative distance below which a bound counts as attained.
pub const SATURATION_TOL: f64 = 1e-6;

/// `|<psi|e^{-itH}|psi>|^2`.
pub fn fidelity_at(h: &Hamiltonian, psi: &StateVector, t: f64) -> Result<f64> {
    Ok(h.spectral_weights(psi)?.fidelity(t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageResult {
    pub target_delta: f64,
    pub time: Option<f64>,
    /// Scan samples `(t, F(t))` up to where the scan stopped.
    pub fidelity_trace: Vec<(f64, f64)>,
    /// Final bracket of the refinement.
    pub bracket: Option<(f64, f64)>,
}

/// Earliest `t` in `[0, t_max]` with `F(t) = delta`.
///
/// A uniform scan of `n_scan` samples looks for the first sample at or below
/// `delta` and for dips between samples: at every discrete local minimum the
/// true minimum is located on `F'`, so a crossing hidden between two samples
/// is still found. Crossings are refined by bisection on `F - delta`. A
/// minimum that touches `delta` to within `tol` without going below is
/// reported as the passage time.
pub fn first_passage_time(
    h: &Hamiltonian,
    psi: &StateVector,
    delta: f64,
    t_max: f64,
    n_scan: usize,
    tol: f64,
) -> Result<PassageResult> {
    if !(0.0..1.0).contains(&delta) {
        return Err(QslError::InvalidArgument(format!("target fidelity {delta} must lie in [0, 1)")));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(QslError::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    if n_scan < 100 {
        return Err(QslError::InvalidArgument(format!("n_scan must be at least 100, got {n_scan}")));
    }
    if !(tol > 0.0) {
        return Err(QslError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let sw = h.spectral_weights(psi)?;
    let step = t_max / (n_scan - 1) as f64;
    let at = |k: usize| if k == n_scan - 1 { t_max } else { step * k as f64 };
    let mut trace = Vec::with_capacity(n_scan.min(1 << 16));
    trace.push((0.0, sw.fidelity(0.0)));
    for k in 1..n_scan {
        let t = at(k);
        let f = sw.fidelity(t);
        trace.push((t, f));
        let (t_prev, f_prev) = trace[k - 1];
        if f <= delta {
            let (lo, hi) = refine_crossing(&sw, delta, t_prev, t);
            let time = pick(&sw, delta, lo, hi);
            return Ok(PassageResult { target_delta: delta, time: Some(time), fidelity_trace: trace, bracket: Some((lo, hi)) });
        }
        if k >= 2 {
            let (t_pp, f_pp) = trace[k - 2];
            if f_prev < f_pp && f_prev <= f {
                let t_min = true_minimum(&sw, t_pp, t);
                let f_min = sw.fidelity(t_min);
                if f_min < delta {
                    let (lo, hi) = refine_crossing(&sw, delta, t_pp, t_min);
                    let time = pick(&sw, delta, lo, hi);
                    return Ok(PassageResult { target_delta: delta, time: Some(time), fidelity_trace: trace, bracket: Some((lo, hi)) });
                }
                if f_min - delta <= tol {
                    return Ok(PassageResult {
                        target_delta: delta,
                        time: Some(t_min),
                        fidelity_trace: trace,
                        bracket: Some((t_pp, t)),
                    });
                }
            }
        }
    }
    Ok(PassageResult { target_delta: delta, time: None, fidelity_trace: trace, bracket: None })
}

/// Minimizer of `F` on `[a, b]`, a bracket around a discrete local minimum.
fn true_minimum(sw: &SpectralWeights, a: f64, b: f64) -> f64 {
    let (da, db) = (sw.fidelity_derivative(a), sw.fidelity_derivative(b));
    if da < 0.0 && db > 0.0 {
        let (lo, hi) = bisect(|t| sw.fidelity_derivative(t), a, b, 0.0);
        let cands = [lo, hi, 0.5 * (lo + hi)];
        cands.into_iter().min_by(|x, y| sw.fidelity(*x).total_cmp(&sw.fidelity(*y))).unwrap()
    } else {
        golden_section(|t| sw.fidelity(t), a, b, 1e-15 * b.max(1.0)).0
    }
}

/// Bisection for `F = delta` on `[a, b]` with `F(a) > delta >= F(b)`.
fn refine_crossing(sw: &SpectralWeights, delta: f64, a: f64, b: f64) -> (f64, f64) {
    bisect(|t| sw.fidelity(t) - delta, a, b, 0.0)
}

fn pick(sw: &SpectralWeights, delta: f64, lo: f64, hi: f64) -> f64 {
    if (sw.fidelity(lo) - delta).abs() <= (sw.fidelity(hi) - delta).abs() {
        lo
    } else {
        hi
    }
}

/// `4 pi` over the smallest nonzero gap between eigenvalues of `h`.
pub fn default_t_max(h: &Hamiltonian) -> Result<f64> {
    let e = h.energies();
    let scale = e.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let gap = e
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > 1e-12 * scale)
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        Ok(4.0 * PI / gap)
    } else {
        Err(QslError::StationaryState)
    }
}

/// Scan length that keeps at least 32 samples per period of the fastest
/// occupied frequency, and never fewer than [`DEFAULT_SCAN`].
pub fn default_n_scan(h: &Hamiltonian, psi: &StateVector, t_max: f64) -> Result<usize> {
    let spread = h.spectral_weights(psi)?.occupied_spread(1e-14);
    let per_period = (32.0 * t_max * spread / (2.0 * PI)).ceil();
    Ok((per_period as usize).max(DEFAULT_SCAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub bound: f64,
    /// `tau >= bound`; absent when the target is not reached.
    pub holds: Option<bool>,
    pub saturated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub delta: f64,
    pub t_max: f64,
    pub time: Option<f64>,
    pub bounds: BoundReport,
    pub checks: Vec<BoundCheck>,
    /// No bound is violated (vacuously true if the target is never reached).
    pub all_hold: bool,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn saturates(&self, name: &str) -> bool {
        self.check(name).and_then(|c| c.saturated).unwrap_or(false)
    }
}

/// Compares the measured passage time against every bound.
pub fn verify_bounds(h: &Hamiltonian, psi: &StateVector, delta: f64, t_max: f64) -> Result<VerifyReport> {
    check_fidelity(delta)?;
    let stats = energy_stats(h, psi)?;
    let bounds = bound_report(delta, &stats, alpha::DEFAULT_TOL)?;
    let n_scan = default_n_scan(h, psi, t_max)?;
    let passage = first_passage_time(h, psi, delta, t_max, n_scan, DEFAULT_PASSAGE_TOL)?;
    let checks: Vec<BoundCheck> = bounds
        .named()
        .iter()
        .map(|&(name, b)| BoundCheck {
            name: name.to_string(),
            bound: b,
            holds: passage.time.map(|t| t >= b * (1.0 - HOLD_SLACK)),
            saturated: passage.time.map(|t| (t - b).abs() < SATURATION_TOL * b),
        })
        .collect();
    let all_hold = checks.iter().all(|c| c.holds != Some(false));
    Ok(VerifyReport { delta, t_max, time: passage.time, bounds, checks, all_hold })
}

/// `alpha(delta) / <H - e0'>` where `e0'` is the smallest eigenvalue the state
/// actually occupies.
pub fn restricted_ml_bound(h: &Hamiltonian, psi: &StateVector, delta: f64) -> Result<f64> {
    let sw = h.spectral_weights(psi)?;
    let e0 = sw.lowest_occupied(1e-12).ok_or(QslError::InvalidState)?;
    let mean: f64 = sw.energies.iter().zip(&sw.weights).map(|(e, w)| e * w).sum();
    let shifted = mean - e0;
    if !(shifted > 0.0) {
        return Err(QslError::StationaryState);
    }
    Ok(alpha::alpha_value(delta)? / shifted)
}
