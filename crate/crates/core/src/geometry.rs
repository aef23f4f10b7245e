//! Fubini-Study geometry of pure states: metric and symplectic form,
//! distances and geodesics, in-phase lifts, the Berry connection along
//! sampled curves, ruled surfaces spanned by geodesics from a reference state,
//! and the acceleration of effective-qubit trajectories.
//!
//! Tangent vectors are `n x n` Hermitian matrices. The metric is
//! `g(a, b) = tr(ab)/2` and the symplectic form `w(a, b) = -i tr([a, b] rho)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::quantum::{check_dims, trace_product, Hamiltonian, PureState, StateVector, C64};

const TANGENT_TOL: f64 = 1e-10;
/// Consecutive samples of a curve must overlap at least this much.
pub const MIN_CONSECUTIVE_FIDELITY: f64 = 0.99;
/// Fidelity with the reference state below which a state counts as orthogonal.
const OMEGA_TOL: f64 = 1e-12;
/// Allowed spread of the distance to the reference state along a curve that
/// should lie on a geodesic sphere.
pub const SPHERE_TOL: f64 = 1e-8;
/// Default number of `s` nodes for ruled-surface quadrature.
pub const DEFAULT_S_NODES: usize = 256;

/// Fubini-Study distance `arccos(sqrt(tr(ab)))`.
pub fn fs_distance(a: &PureState, b: &PureState) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(vector_distance(a.representative().amplitudes(), b.representative().amplitudes()))
}

/// Distance between the rays of two unit vectors, computed as an angle from
/// its sine and cosine so that nearby states keep full precision.
pub(crate) fn vector_distance(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let c = a.dotc(b);
    let perp = b - a * c;
    perp.norm().atan2(c.norm())
}

/// A tangent vector at a pure state.
#[derive(Debug, Clone)]
pub struct TangentAtState {
    base: PureState,
    direction: DMatrix<C64>,
}

impl TangentAtState {
    pub fn new(base: PureState, direction: DMatrix<C64>) -> Result<Self> {
        check_dims(base.dim(), direction.nrows())?;
        check_dims(base.dim(), direction.ncols())?;
        let herm = (&direction - direction.adjoint()).camax();
        let trace = direction.trace().norm();
        let rho = base.matrix();
        let tangency = (rho * &direction + &direction * rho - &direction).camax();
        let scale = direction.camax().max(1.0);
        let worst = herm.max(trace).max(tangency);
        if worst > TANGENT_TOL * scale {
            return Err(QslError::InvalidArgument(format!(
                "direction is not tangent at the base state (defect {worst:e})"
            )));
        }
        Ok(Self { base, direction })
    }

    /// `|a><psi| + |psi><a|`, the velocity of `|psi><psi|` when `psi` moves
    /// along `a`. The component of `a` that would change the norm is removed.
    pub fn from_vector(psi: &StateVector, a: &DVector<C64>) -> Result<Self> {
        check_dims(psi.dim(), a.len())?;
        let p = psi.amplitudes();
        let a = a - p * C64::new(p.dotc(a).re, 0.0);
        let direction = &a * p.adjoint() + p * a.adjoint();
        Self::new(psi.projector(), direction)
    }

    pub fn base(&self) -> &PureState {
        &self.base
    }

    pub fn direction(&self) -> &DMatrix<C64> {
        &self.direction
    }
}

fn same_base(u: &TangentAtState, v: &TangentAtState) -> Result<()> {
    check_dims(u.base.dim(), v.base.dim())?;
    if (u.base.matrix() - v.base.matrix()).camax() > TANGENT_TOL {
        return Err(QslError::BaseMismatch);
    }
    Ok(())
}

/// `tr(ab)/2`.
pub fn fs_metric(u: &TangentAtState, v: &TangentAtState) -> Result<f64> {
    same_base(u, v)?;
    Ok(0.5 * trace_product(&u.direction, &v.direction).re)
}

/// `-i tr([a, b] rho)`.
pub fn fs_symplectic(u: &TangentAtState, v: &TangentAtState) -> Result<f64> {
    same_base(u, v)?;
    let comm = &u.direction * &v.direction - &v.direction * &u.direction;
    Ok((C64::new(0.0, -1.0) * trace_product(&comm, u.base.matrix())).re)
}

/// The symplectic form evaluated on the velocities of `|psi><psi|` along the
/// vectors `a` and `b`: `2 Im<a|b> + 2 Im(<psi|a> conj<psi|b>)`.
pub fn symplectic_from_vectors(psi: &[C64], a: &[C64], b: &[C64]) -> f64 {
    let mut ab = C64::new(0.0, 0.0);
    let mut pa = C64::new(0.0, 0.0);
    let mut pb = C64::new(0.0, 0.0);
    for k in 0..psi.len() {
        ab += a[k].conj() * b[k];
        pa += psi[k].conj() * a[k];
        pb += psi[k].conj() * b[k];
    }
    2.0 * ab.im + 2.0 * (pa * pb.conj()).im
}

/// Symplectic area of the whole Bloch sphere of a qubit by a midpoint rule on
/// `n_theta x n_phi` cells.
pub fn bloch_sphere_area(n_theta: usize, n_phi: usize) -> f64 {
    let (ht, hp) = (PI / n_theta as f64, 2.0 * PI / n_phi as f64);
    let rows: Vec<f64> = (0..n_theta)
        .into_par_iter()
        .map(|i| {
            let th = (i as f64 + 0.5) * ht;
            let (c, s) = ((th / 2.0).cos(), (th / 2.0).sin());
            let mut row = 0.0;
            for j in 0..n_phi {
                let ph = (j as f64 + 0.5) * hp;
                let e = C64::from_polar(1.0, ph);
                let psi = [C64::new(c, 0.0), e * s];
                let d_th = [C64::new(-s / 2.0, 0.0), e * (c / 2.0)];
                let d_ph = [C64::new(0.0, 0.0), C64::i() * e * s];
                row += symplectic_from_vectors(&psi, &d_th, &d_ph);
            }
            row
        })
        .collect();
    pairwise_sum(&rows) * ht * hp
}

/// Summation in a fixed binary-tree order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// The representative of `v`'s ray that is in phase with `phi`
/// (`<phi|psi> > 0`).
pub fn align_phase(phi: &StateVector, v: &StateVector) -> Result<StateVector> {
    check_dims(phi.dim(), v.dim())?;
    let c = phi.amplitudes().dotc(v.amplitudes());
    if c.norm_sqr() < OMEGA_TOL {
        return Err(QslError::OutsideOmega);
    }
    let phase = c.conj() / c.norm();
    Ok(StateVector::from_unit(v.amplitudes() * phase))
}

/// The unit vector representing `rho` that is in phase with `phi`.
pub fn in_phase_lift(phi: &StateVector, rho: &PureState) -> Result<StateVector> {
    check_dims(phi.dim(), rho.dim())?;
    align_phase(phi, &rho.representative())
}

/// Uniformly sampled curve of states.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedCurve {
    samples: Vec<StateVector>,
    step: f64,
}

impl DiscretizedCurve {
    pub fn new(samples: Vec<StateVector>, step: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(QslError::InvalidArgument("a curve needs at least two samples".into()));
        }
        if !(step >= 0.0) || !step.is_finite() {
            return Err(QslError::InvalidArgument(format!("invalid step {step}")));
        }
        let n = samples[0].dim();
        for s in &samples {
            check_dims(n, s.dim())?;
        }
        for w in samples.windows(2) {
            let f = w[0].overlap(&w[1])?;
            if f <= MIN_CONSECUTIVE_FIDELITY {
                return Err(QslError::CurveTooCoarse(f));
            }
        }
        Ok(Self { samples, step })
    }

    /// `samples` copies of one state.
    pub fn constant(state: &StateVector, samples: usize, step: f64) -> Result<Self> {
        Self::new(vec![state.clone(); samples.max(2)], step)
    }

    pub fn samples(&self) -> &[StateVector] {
        &self.samples
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    /// Parameter length `step * (len - 1)`.
    pub fn duration(&self) -> f64 {
        self.step * (self.len() - 1) as f64
    }

    pub fn first(&self) -> &StateVector {
        &self.samples[0]
    }

    pub fn last(&self) -> &StateVector {
        &self.samples[self.len() - 1]
    }

    /// The same states traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self { samples, step: self.step }
    }

    /// Sum of distances between consecutive samples.
    pub fn fs_length(&self) -> f64 {
        self.samples.windows(2).map(|w| vector_distance(w[0].amplitudes(), w[1].amplitudes())).sum()
    }

    /// Speed estimates `distance / step` on each interval.
    pub fn fs_speeds(&self) -> Vec<f64> {
        self.samples
            .windows(2)
            .map(|w| vector_distance(w[0].amplitudes(), w[1].amplitudes()) / self.step)
            .collect()
    }
}

/// `e^{-itH} psi` sampled at `samples` uniform times on `[0, tau]`.
pub fn hamiltonian_curve(h: &Hamiltonian, psi: &StateVector, tau: f64, samples: usize) -> Result<DiscretizedCurve> {
    if samples < 2 {
        return Err(QslError::InvalidArgument("a curve needs at least two samples".into()));
    }
    let step = tau / (samples - 1) as f64;
    let states = (0..samples)
        .map(|k| h.propagate(psi, if k == samples - 1 { tau } else { step * k as f64 }))
        .collect::<Result<Vec<_>>>()?;
    DiscretizedCurve::new(states, step)
}

/// Shortest geodesic from `sigma` to `rho`, sampled uniformly in arclength.
/// The first sample is `sigma`'s representative and the last is the lift of
/// `rho` in phase with it.
pub fn geodesic(sigma: &PureState, rho: &PureState, samples: usize) -> Result<DiscretizedCurve> {
    check_dims(sigma.dim(), rho.dim())?;
    let phi = sigma.representative();
    geodesic_from(&phi, rho, samples)
}

fn geodesic_from(phi: &StateVector, rho: &PureState, samples: usize) -> Result<DiscretizedCurve> {
    if samples < 2 {
        return Err(QslError::InvalidArgument("a geodesic needs at least two samples".into()));
    }
    let end = rho.representative();
    let d = vector_distance(phi.amplitudes(), end.amplitudes());
    if d < 1e-12 || (PI / 2.0 - d) < 1e-12 {
        return Err(QslError::DegenerateGeodesic(d));
    }
    let psi = align_phase(phi, &end)?;
    let w = unit_direction(phi, &psi, d);
    let step = d / (samples - 1) as f64;
    let mut states: Vec<StateVector> = (0..samples - 1)
        .map(|k| {
            let s = step * k as f64;
            StateVector::from_unit(phi.amplitudes() * C64::new(s.cos(), 0.0) + &w * C64::new(s.sin(), 0.0))
        })
        .collect();
    states.push(psi);
    DiscretizedCurve::new(states, step)
}

/// `(psi - cos d phi) / sin d` for an in-phase lift `psi` at distance `d`.
fn unit_direction(phi: &StateVector, psi: &StateVector, d: f64) -> DVector<C64> {
    let w = psi.amplitudes() - phi.amplitudes() * C64::new(d.cos(), 0.0);
    let n = w.norm();
    w / C64::new(n, 0.0)
}

/// Lifts of every sample in phase with `phi`.
fn lift_curve(phi: &StateVector, curve: &DiscretizedCurve) -> Result<Vec<DVector<C64>>> {
    check_dims(phi.dim(), curve.dim())?;
    curve.samples().iter().map(|s| align_phase(phi, s).map(|v| v.into_vector())).collect()
}

/// First derivative of uniformly sampled vectors: fourth-order central
/// differences inside, fourth-order one-sided stencils at the two samples
/// nearest each end, lower order for very short curves.
fn derivative(v: &[DVector<C64>], h: f64) -> Vec<DVector<C64>> {
    let n = v.len();
    let c = |x: f64| C64::new(x, 0.0);
    if h == 0.0 {
        return vec![DVector::zeros(v[0].len()); n];
    }
    if n < 5 {
        return (0..n)
            .map(|k| {
                if n == 2 {
                    (&v[1] - &v[0]) / c(h)
                } else if k == 0 {
                    (&v[0] * c(-3.0) + &v[1] * c(4.0) - &v[2]) / c(2.0 * h)
                } else if k == n - 1 {
                    (&v[n - 1] * c(3.0) - &v[n - 2] * c(4.0) + &v[n - 3]) / c(2.0 * h)
                } else {
                    (&v[k + 1] - &v[k - 1]) / c(2.0 * h)
                }
            })
            .collect();
    }
    let d12 = c(12.0 * h);
    (0..n)
        .map(|k| {
            if k == 0 {
                (&v[0] * c(-25.0) + &v[1] * c(48.0) - &v[2] * c(36.0) + &v[3] * c(16.0) - &v[4] * c(3.0)) / d12
            } else if k == 1 {
                (&v[0] * c(-3.0) - &v[1] * c(10.0) + &v[2] * c(18.0) - &v[3] * c(6.0) + &v[4]) / d12
            } else if k == n - 2 {
                (&v[n - 1] * c(3.0) + &v[n - 2] * c(10.0) - &v[n - 3] * c(18.0) + &v[n - 4] * c(6.0) - &v[n - 5])
                    / d12
            } else if k == n - 1 {
                (&v[n - 1] * c(25.0) - &v[n - 2] * c(48.0) + &v[n - 3] * c(36.0) - &v[n - 4] * c(16.0)
                    + &v[n - 5] * c(3.0))
                    / d12
            } else {
                (&v[k - 2] - &v[k - 1] * c(8.0) + &v[k + 1] * c(8.0) - &v[k + 2]) / d12
            }
        })
        .collect()
}

/// Berry connection `i<psi|psi'>` at every sample of the in-phase lift.
pub fn connection_samples(curve: &DiscretizedCurve, sigma: &PureState) -> Result<Vec<f64>> {
    let phi = sigma.representative();
    let lifts = lift_curve(&phi, curve)?;
    let d = derivative(&lifts, curve.step());
    Ok(lifts.iter().zip(&d).map(|(p, dp)| -p.dotc(dp).im).collect())
}

/// Dynamical phase of `curve` in the gauge fixed by `sigma`: the integral of
/// the Berry connection along the lift in phase with `sigma`.
pub fn dynamical_phase(curve: &DiscretizedCurve, sigma: &PureState) -> Result<f64> {
    let a = connection_samples(curve, sigma)?;
    let n = a.len();
    let inner: f64 = a[1..n - 1].iter().sum();
    Ok(curve.step() * (0.5 * (a[0] + a[n - 1]) + inner))
}

/// A curve closed up by shortest geodesics to and from a reference state.
#[derive(Debug, Clone)]
pub struct SigmaClosure {
    pub sigma: PureState,
    pub leg_in: DiscretizedCurve,
    pub body: DiscretizedCurve,
    pub leg_out: DiscretizedCurve,
}

impl SigmaClosure {
    /// Total discrete length of the three pieces.
    pub fn fs_length(&self) -> f64 {
        self.leg_in.fs_length() + self.body.fs_length() + self.leg_out.fs_length()
    }

    /// Dynamical phases of the two geodesic legs.
    pub fn leg_contributions(&self) -> Result<(f64, f64)> {
        Ok((dynamical_phase(&self.leg_in, &self.sigma)?, dynamical_phase(&self.leg_out, &self.sigma)?))
    }

    /// The closed loop as one sample sequence, first sample repeated at the end.
    pub fn loop_samples(&self) -> Vec<StateVector> {
        let mut out: Vec<StateVector> = self.leg_in.samples().to_vec();
        out.extend_from_slice(&self.body.samples()[1..]);
        out.extend_from_slice(&self.leg_out.samples()[1..]);
        out
    }
}

/// Leg from `phi` to `rho`, or a stationary leg if `rho` coincides with `phi`.
fn leg(phi: &StateVector, rho: &StateVector, samples: usize) -> Result<DiscretizedCurve> {
    let d = vector_distance(phi.amplitudes(), rho.amplitudes());
    if d < 1e-12 {
        return DiscretizedCurve::constant(phi, samples, 0.0);
    }
    if PI / 2.0 - d < 1e-12 {
        return Err(QslError::OutsideOmega);
    }
    geodesic_from(phi, &rho.projector(), samples)
}

/// The concatenation geodesic(sigma, rho_0), curve, geodesic(rho_tau, sigma).
pub fn sigma_closure(curve: &DiscretizedCurve, sigma: &PureState, leg_samples: usize) -> Result<SigmaClosure> {
    check_dims(sigma.dim(), curve.dim())?;
    let phi = sigma.representative();
    let leg_in = leg(&phi, curve.first(), leg_samples)?;
    let leg_out = leg(&phi, curve.last(), leg_samples)?.reversed();
    Ok(SigmaClosure { sigma: sigma.clone(), leg_in, body: curve.clone(), leg_out })
}

/// The ruled surface `cos s |phi> + sin s |w_t>`, `0 <= s <= r`, swept by the
/// geodesics from `sigma` to a curve on the geodesic sphere of radius `r`.
/// Grid points are produced on demand from `phi` and the directions `w_t`.
#[derive(Debug, Clone)]
pub struct SeifertSurface {
    phi: StateVector,
    directions: Vec<DVector<C64>>,
    radius: f64,
    s_nodes: usize,
    t_step: f64,
}

impl SeifertSurface {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn s_step(&self) -> f64 {
        self.radius / self.s_nodes as f64
    }

    pub fn t_step(&self) -> f64 {
        self.t_step
    }

    /// Grid shape `(s rows, t columns)`, `s` running over `[0, r]`.
    pub fn shape(&self) -> (usize, usize) {
        (self.s_nodes + 1, self.directions.len())
    }

    /// The lift at `s = i * s_step` over curve sample `j`.
    pub fn grid_point(&self, i: usize, j: usize) -> StateVector {
        let s = if i == self.s_nodes { self.radius } else { self.s_step() * i as f64 };
        StateVector::from_unit(
            self.phi.amplitudes() * C64::new(s.cos(), 0.0) + &self.directions[j] * C64::new(s.sin(), 0.0),
        )
    }
}

/// Ruled surface of geodesics from `sigma` to each sample of `curve`.
pub fn ruled_seifert_surface(sigma: &PureState, curve: &DiscretizedCurve, s_nodes: usize) -> Result<SeifertSurface> {
    if s_nodes == 0 {
        return Err(QslError::InvalidArgument("need at least one s node".into()));
    }
    let phi = sigma.representative();
    let lifts = lift_curve(&phi, curve)?;
    let radii: Vec<f64> = lifts.iter().map(|p| vector_distance(phi.amplitudes(), p)).collect();
    let (lo, hi) = radii.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    if hi - lo > SPHERE_TOL {
        return Err(QslError::NotOnGeodesicSphere(hi - lo));
    }
    let radius = 0.5 * (lo + hi);
    let directions = if radius < 1e-12 {
        vec![DVector::zeros(phi.dim()); lifts.len()]
    } else {
        lifts
            .iter()
            .zip(&radii)
            .map(|(p, &r)| unit_direction(&phi, &StateVector::from_unit(p.clone()), r))
            .collect()
    };
    Ok(SeifertSurface { phi, directions, radius, s_nodes, t_step: curve.step() })
}

/// Integral of `w(d_s, d_t)` over the surface by the composite midpoint rule
/// in both parameters. At a `t` midpoint the direction is the normalized mean
/// of its neighbours and its velocity their difference quotient.
pub fn symplectic_area(surface: &SeifertSurface) -> f64 {
    if surface.radius < 1e-12 || surface.t_step == 0.0 {
        return 0.0;
    }
    let n = surface.phi.dim();
    let phi: Vec<C64> = surface.phi.amplitudes().iter().copied().collect();
    let hs = surface.s_step();
    let ht = surface.t_step;
    let mids: Vec<(Vec<C64>, Vec<C64>)> = surface
        .directions
        .windows(2)
        .map(|w| {
            let m = (&w[0] + &w[1]) * C64::new(0.5, 0.0);
            let m = &m / C64::new(m.norm(), 0.0);
            let dm = (&w[1] - &w[0]) / C64::new(ht, 0.0);
            (m.iter().copied().collect(), dm.iter().copied().collect())
        })
        .collect();
    let rows: Vec<f64> = (0..surface.s_nodes)
        .into_par_iter()
        .map(|i| {
            let s = (i as f64 + 0.5) * hs;
            let (cs, ss) = (s.cos(), s.sin());
            let mut psi = vec![C64::new(0.0, 0.0); n];
            let mut ds = vec![C64::new(0.0, 0.0); n];
            let mut dt = vec![C64::new(0.0, 0.0); n];
            let terms: Vec<f64> = mids
                .iter()
                .map(|(w, dw)| {
                    for k in 0..n {
                        psi[k] = phi[k] * cs + w[k] * ss;
                        ds[k] = -phi[k] * ss + w[k] * cs;
                        dt[k] = dw[k] * ss;
                    }
                    symplectic_from_vectors(&psi, &ds, &dt)
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows) * hs * ht
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Aharonov-Anandan phase of a closure, as minus the symplectic area of the
/// ruled surface over its body, reduced to `(-pi, pi]`. The geodesic legs
/// bound degenerate strips of the ruled surface and add no area.
pub fn aa_phase_mod_2pi(closure: &SigmaClosure, s_nodes: usize) -> Result<f64> {
    let surface = ruled_seifert_surface(&closure.sigma, &closure.body, s_nodes)?;
    Ok(wrap_angle(-symplectic_area(&surface)))
}

/// `-arg prod <psi_k|psi_{k+1}>` around the closed loop, reduced to
/// `(-pi, pi]`. Uses the raw samples, so it does not depend on any lift.
pub fn bargmann_phase(closure: &SigmaClosure) -> f64 {
    let pts = closure.loop_samples();
    let mut prod = C64::new(1.0, 0.0);
    for w in pts.windows(2) {
        prod *= w[0].amplitudes().dotc(w[1].amplitudes());
        prod /= C64::new(prod.norm(), 0.0);
    }
    prod *= pts[pts.len() - 1].amplitudes().dotc(pts[0].amplitudes());
    wrap_angle(-prod.arg())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubRiemannianReport {
    /// Mean distance of the curve from the reference state.
    pub radius: f64,
    /// Largest norm of the covariant acceleration.
    pub max_acceleration: f64,
    /// Largest norm of the acceleration component orthogonal to the radial
    /// geodesic velocity.
    pub max_parallel_residual: f64,
    /// Mean coefficient of the acceleration along the radial velocity.
    pub coefficient: f64,
    /// Largest deviation of the per-sample coefficient from its mean.
    pub coefficient_spread: f64,
    /// `-gap^2 sin(4r) / 4`.
    pub predicted_coefficient: f64,
}

/// Covariant acceleration `[[rho'', rho], rho]` of a sampled trajectory
/// around `sigma`, compared with the unit velocity of the geodesic from
/// `sigma` through each point. Derivatives use fourth-order central
/// differences, so the step should be about `1e-2 / gap`.
pub fn sub_riemannian_check(sigma: &PureState, curve: &DiscretizedCurve, gap: f64) -> Result<SubRiemannianReport> {
    if curve.len() < 5 {
        return Err(QslError::InvalidArgument("need at least five samples".into()));
    }
    let phi = sigma.representative();
    let lifts = lift_curve(&phi, curve)?;
    let rhos: Vec<DMatrix<C64>> = lifts.iter().map(|p| p * p.adjoint()).collect();
    let h = curve.step();
    let metric_norm = |m: &DMatrix<C64>| (0.5 * trace_product(m, m).re).max(0.0).sqrt();
    let mut radius_sum = 0.0;
    let mut max_acc: f64 = 0.0;
    let mut max_res: f64 = 0.0;
    let mut coeffs = Vec::new();
    for k in 2..curve.len() - 2 {
        let rho = &rhos[k];
        let dd = (-&rhos[k + 2] + &rhos[k + 1] * C64::new(16.0, 0.0) - rho * C64::new(30.0, 0.0)
            + &rhos[k - 1] * C64::new(16.0, 0.0)
            - &rhos[k - 2])
            / C64::new(12.0 * h * h, 0.0);
        let inner = &dd * rho - rho * &dd;
        let acc = &inner * rho - rho * &inner;
        let psi = &lifts[k];
        let r = vector_distance(phi.amplitudes(), psi);
        radius_sum += r;
        let w = (psi - phi.amplitudes() * C64::new(r.cos(), 0.0)) / C64::new(r.sin(), 0.0);
        let u = phi.amplitudes() * C64::new(-r.sin(), 0.0) + &w * C64::new(r.cos(), 0.0);
        let radial = &u * psi.adjoint() + psi * u.adjoint();
        let c = 0.5 * trace_product(&acc, &radial).re / (0.5 * trace_product(&radial, &radial).re);
        let residual = &acc - &radial * C64::new(c, 0.0);
        max_acc = max_acc.max(metric_norm(&acc));
        max_res = max_res.max(metric_norm(&residual));
        coeffs.push(c);
    }
    let m = coeffs.len() as f64;
    let coefficient = coeffs.iter().sum::<f64>() / m;
    let coefficient_spread = coeffs.iter().fold(0.0_f64, |a, c| a.max((c - coefficient).abs()));
    let radius = radius_sum / m;
    Ok(SubRiemannianReport {
        radius,
        max_acceleration: max_acc,
        max_parallel_residual: max_res,
        coefficient,
        coefficient_spread,
        predicted_coefficient: -0.25 * gap * gap * (4.0 * radius).sin(),
    })
}
