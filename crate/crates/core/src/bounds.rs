//! Closed-form quantum speed limits evaluated from energy statistics.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::alpha::alpha;
use crate::error::{check_fidelity, QslError, Result};
use crate::quantum::EnergyStats;
use crate::scalar::bisect;

/// Slope `beta` of the line `1 - beta x` tangent to `cos x`, and the tangency
/// point `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaConstant {
    pub beta: f64,
    pub x0: f64,
}

impl BetaConstant {
    /// `cos x0 + x0 sin x0 - 1`.
    pub fn residual(&self) -> f64 {
        self.x0.cos() + self.x0 * self.x0.sin() - 1.0
    }
}

/// Solves `cos x + x sin x = 1` on `(pi/2, pi)` by bisection.
pub fn beta() -> BetaConstant {
    static CACHE: OnceLock<BetaConstant> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let (a, b) = bisect(|x| x.cos() + x * x.sin() - 1.0, PI / 2.0, PI, 1e-14);
        let x0 = 0.5 * (a + b);
        BetaConstant { beta: x0.sin(), x0 }
    })
}

/// Every speed limit for one fidelity and one set of energy statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    pub tau_mt: f64,
    pub tau_ml: f64,
    pub tau_ml_dual: f64,
    pub tau_max: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub variance: f64,
    pub normalized_mean: f64,
    pub dual_mean: f64,
}

impl BoundReport {
    /// `(name, value)` pairs of the individual bounds.
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("tau_mt", self.tau_mt),
            ("tau_ml", self.tau_ml),
            ("tau_ml_dual", self.tau_ml_dual),
            ("tau_max", self.tau_max),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("tau3", self.tau3),
        ]
    }
}

/// Relative size below which an energy moment counts as zero.
const STATIONARY_TOL: f64 = 1e-12;

pub fn bound_report(delta: f64, stats: &EnergyStats, tol: f64) -> Result<BoundReport> {
    check_fidelity(delta)?;
    let spread = stats.normalized_mean + stats.dual_mean;
    let scale = STATIONARY_TOL * spread.abs().max(f64::MIN_POSITIVE);
    if !(stats.variance.sqrt() > scale && stats.normalized_mean > scale && stats.dual_mean > scale) {
        return Err(QslError::StationaryState);
    }
    let a = alpha(delta, tol)?.value;
    let angle = delta.sqrt().acos();
    let b = beta().beta;
    let e = stats.normalized_mean;
    let tau_mt = angle / stats.variance.sqrt();
    let tau_ml = a / e;
    Ok(BoundReport {
        delta,
        tau_mt,
        tau_ml,
        tau_ml_dual: a / stats.dual_mean,
        tau_max: tau_mt.max(tau_ml),
        tau1: (1.0 - delta.sqrt()) / (b * e),
        tau2: 4.0 * angle * angle / (b * PI * PI * e),
        tau3: 2.0 * angle * angle / (PI * e),
        variance: stats.variance,
        normalized_mean: stats.normalized_mean,
        dual_mean: stats.dual_mean,
    })
}

/// Bound reports on a uniform fidelity grid for fixed statistics.
pub fn bounds_table(
    delta_min: f64,
    delta_max: f64,
    points: usize,
    stats: &EnergyStats,
    tol: f64,
) -> Result<Vec<BoundReport>> {
    use rayon::prelude::*;
    if points < 2 || delta_max < delta_min {
        return Err(QslError::InvalidArgument("need points >= 2 and delta_min <= delta_max".into()));
    }
    let deltas: Vec<f64> = crate::scalar::grid(delta_min, delta_max, points).collect();
    deltas.par_iter().map(|&d| bound_report(d, stats, tol)).collect()
}

/// Fidelities where `tau1 - tau3` changes sign on a grid over `(0, 1)`,
/// each refined by bisection.
pub fn tau1_tau3_crossings(points: usize) -> Vec<f64> {
    let b = beta().beta;
    let diff = |d: f64| {
        let angle = d.sqrt().acos();
        (1.0 - d.sqrt()) / b - 2.0 * angle * angle / PI
    };
    let deltas: Vec<f64> = crate::scalar::grid(0.0, 1.0, points).collect();
    let interior = &deltas[1..deltas.len() - 1];
    let mut out = Vec::new();
    for w in interior.windows(2) {
        let (fa, fb) = (diff(w[0]), diff(w[1]));
        if fa == 0.0 {
            out.push(w[0]);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            let (lo, hi) = bisect(diff, w[0], w[1], 1e-15);
            out.push(0.5 * (lo + hi));
        }
    }
    out
}
