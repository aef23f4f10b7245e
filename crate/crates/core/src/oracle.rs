//! Brute-force check of the speed limit in spectral coordinates.
//!
//! A state evolving for unit time under a Hamiltonian with spectrum in
//! `[0, 2pi]` is described by occupations `p_j` and phases `eps_j`. Reaching
//! fidelity `delta` means `g(p, eps) = |sum p_j e^{i eps_j}|^2 = delta`, and
//! the normalized energy is `f = sum p_j eps_j`. The smallest `f` over that
//! set should be `alpha(delta)` in every dimension, attained by a two-level
//! configuration whose lower level sits at phase 0.
//!
//! The search is multi-start: random and two-level seeds are driven onto the
//! constraint set by an augmented Lagrangian with projected Newton steps on
//! the box, then polished by Newton's method on the KKT system of the face
//! they land on.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::quantum::{Hamiltonian, StateVector};
use crate::sampling::{rng_for, uniform_simplex};

const TWO_PI: f64 = 2.0 * PI;
/// Largest constraint violation accepted for a point of `M`.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Occupations and phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub p: Vec<f64>,
    pub eps: Vec<f64>,
}

impl SpectralPoint {
    pub fn new(p: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if p.len() != eps.len() {
            return Err(QslError::InvalidArgument(format!(
                "{} occupations but {} phases",
                p.len(),
                eps.len()
            )));
        }
        Ok(Self { p, eps })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    fn to_x(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.len(), self.p.iter().chain(&self.eps).copied())
    }

    fn from_x(x: &DVector<f64>) -> Self {
        let n = x.len() / 2;
        Self { p: x.rows(0, n).iter().copied().collect(), eps: x.rows(n, n).iter().copied().collect() }
    }

    /// Pairs sorted by phase, then occupation.
    pub fn canonical(&self) -> Self {
        let mut pairs: Vec<(f64, f64)> = self.eps.iter().copied().zip(self.p.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Self { p: pairs.iter().map(|x| x.1).collect(), eps: pairs.iter().map(|x| x.0).collect() }
    }
}

fn checked(pt: &SpectralPoint) -> Result<()> {
    if pt.p.len() != pt.eps.len() {
        return Err(QslError::InvalidArgument(format!(
            "{} occupations but {} phases",
            pt.p.len(),
            pt.eps.len()
        )));
    }
    Ok(())
}

/// `sum p_j eps_j`.
pub fn objective_f(pt: &SpectralPoint) -> Result<f64> {
    checked(pt)?;
    Ok(pt.p.iter().zip(&pt.eps).map(|(p, e)| p * e).sum())
}

/// `(sum p_j cos eps_j)^2 + (sum p_j sin eps_j)^2`.
pub fn constraint_g(pt: &SpectralPoint) -> Result<f64> {
    Ok(constraint_g1(pt)?.powi(2) + constraint_g2(pt)?.powi(2))
}

/// `sum p_j cos eps_j`.
pub fn constraint_g1(pt: &SpectralPoint) -> Result<f64> {
    checked(pt)?;
    Ok(pt.p.iter().zip(&pt.eps).map(|(p, e)| p * e.cos()).sum())
}

/// `sum p_j sin eps_j`.
pub fn constraint_g2(pt: &SpectralPoint) -> Result<f64> {
    checked(pt)?;
    Ok(pt.p.iter().zip(&pt.eps).map(|(p, e)| p * e.sin()).sum())
}

/// `sum p_j`.
pub fn constraint_h(pt: &SpectralPoint) -> Result<f64> {
    checked(pt)?;
    Ok(pt.p.iter().sum())
}

/// A Hamiltonian with smallest eigenvalue 0 and spectrum in `[0, 2pi)`, and
/// the state it acts on.
#[derive(Debug, Clone)]
pub struct AdmissiblePair {
    pub hamiltonian: Hamiltonian,
    pub state: StateVector,
}

impl AdmissiblePair {
    /// The pair in spectral coordinates.
    pub fn spectral_point(&self) -> Result<SpectralPoint> {
        let sw = self.hamiltonian.spectral_weights(&self.state)?;
        SpectralPoint::new(sw.weights, sw.energies)
    }
}

/// Rescales `tau (H - e0)` to unit time and folds every eigenvalue into
/// `[0, 2pi)`. The fidelity after unit time equals the fidelity of the
/// original system after `tau`, while the mean energy can only drop.
pub fn reduce_triple(h: &Hamiltonian, psi: &StateVector, tau: f64) -> Result<AdmissiblePair> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(QslError::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    crate::quantum::check_dims(h.dim(), psi.dim())?;
    let e0 = h.ground_energy();
    let folded: Vec<f64> = h
        .energies()
        .iter()
        .map(|&e| {
            let x = ((e - e0) * tau).rem_euclid(TWO_PI);
            if x >= TWO_PI {
                0.0
            } else {
                x
            }
        })
        .collect();
    let hamiltonian = Hamiltonian::from_spectrum(&folded, h.eigenvectors().clone())?;
    Ok(AdmissiblePair { hamiltonian, state: psi.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub starts: usize,
    pub seed: u64,
    /// Target for the first-order stationarity residual.
    pub tol: f64,
    /// Occupations at or below this count as zero.
    pub p_threshold: f64,
    /// Phases at or below this count as zero.
    pub eps_threshold: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { starts: 48, seed: 20_240_601, tol: 1e-10, p_threshold: 1e-6, eps_threshold: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimizerStructure {
    /// Some occupied level has phase 0.
    pub ground_occupied: bool,
    /// All occupied levels with nonzero phase share one phase.
    pub nonzero_eps_equal: bool,
    /// Number of distinct nonzero occupied phases.
    pub n_distinct_nonzero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub delta: f64,
    pub n: usize,
    pub min_value: f64,
    pub argmin: SpectralPoint,
    pub structure: MinimizerStructure,
    pub stationarity_residual: f64,
    /// Fitted multipliers of `g` (or `g1`, `g2`) and `h`, in that order.
    pub multipliers: Vec<f64>,
    /// Largest `|(eps - mu)^2 - (4 delta lambda^2 - 1)|` over the occupied
    /// nonzero phases; absent for `delta = 0`.
    pub multiplier_relation_residual: Option<f64>,
    pub starts: usize,
    pub feasible_starts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Constraint {
    G,
    G1,
    G2,
    H,
}

fn constraints_for(delta: f64) -> Vec<Constraint> {
    if delta == 0.0 {
        vec![Constraint::G1, Constraint::G2, Constraint::H]
    } else {
        vec![Constraint::G, Constraint::H]
    }
}

/// Value, gradient and Hessian of `f` and of the constraints in the
/// coordinates `x = (p_1..p_n, eps_1..eps_n)`.
struct Model {
    n: usize,
    delta: f64,
    cons: Vec<Constraint>,
}

impl Model {
    fn new(n: usize, delta: f64) -> Self {
        Self { n, delta, cons: constraints_for(delta) }
    }

    fn f(&self, x: &DVector<f64>) -> f64 {
        (0..self.n).map(|j| x[j] * x[self.n + j]).sum()
    }

    fn f_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(2 * n, |i, _| if i < n { x[n + i] } else { x[i - n] })
    }

    fn f_hess(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(2 * n, 2 * n, |i, j| if i + n == j || j + n == i { 1.0 } else { 0.0 })
    }

    fn sums(&self, x: &DVector<f64>) -> (f64, f64) {
        let n = self.n;
        (0..n).fold((0.0, 0.0), |(c, s), j| (c + x[j] * x[n + j].cos(), s + x[j] * x[n + j].sin()))
    }

    fn c(&self, k: Constraint, x: &DVector<f64>) -> f64 {
        let (c, s) = self.sums(x);
        match k {
            Constraint::G => c * c + s * s - self.delta,
            Constraint::G1 => c,
            Constraint::G2 => s,
            Constraint::H => (0..self.n).map(|j| x[j]).sum::<f64>() - 1.0,
        }
    }

    fn c_grad(&self, k: Constraint, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let (c, s) = self.sums(x);
        DVector::from_fn(2 * n, |i, _| {
            let j = i % n;
            let (p, e) = (x[j], x[n + j]);
            let is_p = i < n;
            match k {
                Constraint::G if is_p => 2.0 * (c * e.cos() + s * e.sin()),
                Constraint::G => 2.0 * p * (s * e.cos() - c * e.sin()),
                Constraint::G1 if is_p => e.cos(),
                Constraint::G1 => -p * e.sin(),
                Constraint::G2 if is_p => e.sin(),
                Constraint::G2 => p * e.cos(),
                Constraint::H if is_p => 1.0,
                Constraint::H => 0.0,
            }
        })
    }

    fn c_hess(&self, k: Constraint, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        let (c, s) = self.sums(x);
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        match k {
            Constraint::H => {}
            Constraint::G1 | Constraint::G2 => {
                for j in 0..n {
                    let (p, e) = (x[j], x[n + j]);
                    let (pe, ee) = if k == Constraint::G1 { (-e.sin(), -p * e.cos()) } else { (e.cos(), -p * e.sin()) };
                    m[(j, n + j)] = pe;
                    m[(n + j, j)] = pe;
                    m[(n + j, n + j)] = ee;
                }
            }
            Constraint::G => {
                for i in 0..n {
                    for j in 0..n {
                        let (ei, ej) = (x[n + i], x[n + j]);
                        let (pi, pj) = (x[i], x[j]);
                        m[(i, j)] = 2.0 * (ei - ej).cos();
                        let mut pe = 2.0 * pj * (ei - ej).sin();
                        let mut ee = 2.0 * pi * pj * (ei - ej).cos();
                        if i == j {
                            pe += 2.0 * (s * ej.cos() - c * ej.sin());
                            ee -= 2.0 * pj * (c * ej.cos() + s * ej.sin());
                        }
                        m[(i, n + j)] = pe;
                        m[(n + j, i)] = pe;
                        m[(n + i, n + j)] = ee;
                    }
                }
            }
        }
        m
    }

    fn infeasibility(&self, x: &DVector<f64>) -> f64 {
        self.cons.iter().map(|&k| self.c(k, x).abs()).fold(0.0, f64::max)
    }

    fn lower(&self, i: usize) -> f64 {
        let _ = i;
        0.0
    }

    fn upper(&self, i: usize) -> f64 {
        if i < self.n {
            1.0
        } else {
            TWO_PI
        }
    }

    fn project(&self, x: &mut DVector<f64>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower(i), self.upper(i));
        }
    }
}

/// Augmented Lagrangian `f - sum lam_k c_k + mu/2 sum c_k^2`.
struct Augmented<'a> {
    model: &'a Model,
    lam: Vec<f64>,
    mu: f64,
}

impl Augmented<'_> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let m = self.model;
        m.f(x)
            + m.cons
                .iter()
                .zip(&self.lam)
                .map(|(&k, &l)| {
                    let c = m.c(k, x);
                    -l * c + 0.5 * self.mu * c * c
                })
                .sum::<f64>()
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.model;
        let mut g = m.f_grad(x);
        for (&k, &l) in m.cons.iter().zip(&self.lam) {
            g += m.c_grad(k, x) * (self.mu * m.c(k, x) - l);
        }
        g
    }

    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = self.model;
        let mut h = m.f_hess();
        for (&k, &l) in m.cons.iter().zip(&self.lam) {
            let gk = m.c_grad(k, x);
            h += m.c_hess(k, x) * (self.mu * m.c(k, x) - l);
            h += &gk * gk.transpose() * self.mu;
        }
        h
    }
}

/// Projected-gradient residual `|x - P(x - grad)|_inf`.
fn projected_residual(model: &Model, x: &DVector<f64>, g: &DVector<f64>) -> f64 {
    let mut y = x - g;
    model.project(&mut y);
    (x - y).amax()
}

/// Projected Newton iterations on the box for the augmented Lagrangian.
fn inner_solve(aug: &Augmented, x: &mut DVector<f64>, tol: f64, max_iter: usize) {
    let model = aug.model;
    let dim = x.len();
    for _ in 0..max_iter {
        let g = aug.grad(x);
        let res = projected_residual(model, x, &g);
        if res < tol {
            return;
        }
        let eps_b = res.min(1e-8);
        let binding: Vec<bool> = (0..dim)
            .map(|i| {
                (x[i] <= model.lower(i) + eps_b && g[i] > 0.0) || (x[i] >= model.upper(i) - eps_b && g[i] < 0.0)
            })
            .collect();
        let free: Vec<usize> = (0..dim).filter(|&i| !binding[i]).collect();
        let mut d = -&g;
        if !free.is_empty() {
            let hess = aug.hess(x);
            let hf = DMatrix::from_fn(free.len(), free.len(), |a, b| hess[(free[a], free[b])]);
            let gf = DVector::from_fn(free.len(), |a, _| g[free[a]]);
            let scale = hf.amax().max(1.0);
            let mut shift = 0.0;
            let step = loop {
                let mut m = hf.clone();
                for a in 0..free.len() {
                    m[(a, a)] += shift;
                }
                if let Some(ch) = m.cholesky() {
                    break Some(ch.solve(&(-&gf)));
                }
                shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
                if shift > 1e10 * scale {
                    break None;
                }
            };
            if let Some(s) = step {
                for (a, &i) in free.iter().enumerate() {
                    d[i] = s[a];
                }
            }
        }
        let f0 = aug.value(x);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut y = &*x + &d * alpha;
            model.project(&mut y);
            let decrease = g.dot(&(&y - &*x));
            if aug.value(&y) <= f0 + 1e-4 * decrease.min(0.0) && decrease < 0.0 {
                *x = y;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // fall back to a plain projected-gradient step
            let mut alpha = 1.0;
            for _ in 0..60 {
                let mut y = &*x - &g * alpha;
                model.project(&mut y);
                if aug.value(&y) < f0 {
                    *x = y;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return;
            }
        }
    }
}

/// Phases at the top of the box describe the same point of the circle as
/// phase 0 at higher cost.
fn wrap_top_phases(model: &Model, x: &mut DVector<f64>) {
    for j in 0..model.n {
        if x[model.n + j] > TWO_PI - 1e-9 {
            x[model.n + j] = 0.0;
        }
    }
}

fn augmented_lagrangian(model: &Model, x0: DVector<f64>) -> DVector<f64> {
    let mut x = x0;
    model.project(&mut x);
    let mut aug = Augmented { model, lam: vec![0.0; model.cons.len()], mu: 10.0 };
    let mut prev = f64::INFINITY;
    for _ in 0..60 {
        inner_solve(&aug, &mut x, 1e-11, 200);
        wrap_top_phases(model, &mut x);
        let viol = model.infeasibility(&x);
        for (l, &k) in aug.lam.iter_mut().zip(&model.cons) {
            *l -= aug.mu * model.c(k, &x);
        }
        if viol < 1e-12 && projected_residual(model, &x, &aug.grad(&x)) < 1e-10 {
            break;
        }
        if viol > 0.25 * prev {
            aug.mu = (aug.mu * 10.0).min(1e10);
        }
        prev = viol;
    }
    x
}

/// Which coordinates are pinned to a bound.
fn pinned(model: &Model, x: &DVector<f64>, p_thr: f64, eps_thr: f64) -> Vec<Option<f64>> {
    let n = model.n;
    let mut fixed = vec![None; 2 * n];
    for j in 0..n {
        if x[j] <= p_thr {
            fixed[j] = Some(0.0);
            fixed[n + j] = Some(x[n + j]);
        } else if x[n + j] <= eps_thr || x[n + j] >= TWO_PI - eps_thr {
            fixed[n + j] = Some(0.0);
        }
    }
    fixed
}

/// Least-squares multipliers for `grad f = sum nu_k grad c_k` on `rows`.
fn fit_multipliers(model: &Model, x: &DVector<f64>, rows: &[usize]) -> (DVector<f64>, f64) {
    let gf = model.f_grad(x);
    let grads: Vec<DVector<f64>> = model.cons.iter().map(|&k| model.c_grad(k, x)).collect();
    let a = DMatrix::from_fn(rows.len(), grads.len(), |r, c| grads[c][rows[r]]);
    let b = DVector::from_fn(rows.len(), |r, _| gf[rows[r]]);
    if rows.is_empty() {
        return (DVector::zeros(grads.len()), 0.0);
    }
    let nu = a.clone().svd(true, true).solve(&b, 1e-14).unwrap_or_else(|_| DVector::zeros(grads.len()));
    let res = (&a * &nu - &b).amax();
    (nu, res)
}

/// Newton's method on the KKT system of the face selected by [`pinned`].
fn kkt_polish(model: &Model, x0: &DVector<f64>, cfg: &OracleConfig) -> DVector<f64> {
    let n = model.n;
    let mut x = x0.clone();
    for _round in 0..8 {
        let fixed = pinned(model, &x, cfg.p_threshold, cfg.eps_threshold);
        for (i, v) in fixed.iter().enumerate() {
            if let Some(v) = v {
                x[i] = *v;
            }
        }
        let free: Vec<usize> = (0..2 * n).filter(|&i| fixed[i].is_none()).collect();
        let m = model.cons.len();
        let (mut nu, _) = fit_multipliers(model, &x, &free);
        let kkt_residual = |x: &DVector<f64>, nu: &DVector<f64>| -> DVector<f64> {
            let gf = model.f_grad(x);
            let mut r = DVector::zeros(free.len() + m);
            let grads: Vec<DVector<f64>> = model.cons.iter().map(|&k| model.c_grad(k, x)).collect();
            for (a, &i) in free.iter().enumerate() {
                r[a] = gf[i] - (0..m).map(|k| nu[k] * grads[k][i]).sum::<f64>();
            }
            for (k, &c) in model.cons.iter().enumerate() {
                r[free.len() + k] = model.c(c, x);
            }
            r
        };
        for _ in 0..50 {
            let r = kkt_residual(&x, &nu);
            let rn = r.amax();
            if rn < 1e-15 {
                break;
            }
            let mut w = model.f_hess();
            for (k, &c) in model.cons.iter().enumerate() {
                w -= model.c_hess(c, &x) * nu[k];
            }
            let grads: Vec<DVector<f64>> = model.cons.iter().map(|&k| model.c_grad(k, &x)).collect();
            let nf = free.len();
            let mut jac = DMatrix::zeros(nf + m, nf + m);
            for a in 0..nf {
                for b in 0..nf {
                    jac[(a, b)] = w[(free[a], free[b])];
                }
                for k in 0..m {
                    jac[(a, nf + k)] = -grads[k][free[a]];
                    jac[(nf + k, a)] = grads[k][free[a]];
                }
            }
            let Ok(step) = jac.svd(true, true).solve(&(-&r), 1e-13) else { break };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let mut y = x.clone();
                for (a, &i) in free.iter().enumerate() {
                    y[i] += t * step[a];
                }
                let nu_y = DVector::from_fn(m, |k, _| nu[k] + t * step[nf + k]);
                if kkt_residual(&y, &nu_y).amax() < rn {
                    x = y;
                    nu = nu_y;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        // leave the face if Newton pushed a coordinate out of the box
        let mut clipped = false;
        for j in 0..n {
            if x[j] < 0.0 {
                x[j] = 0.0;
                clipped = true;
            }
            if x[n + j] < 0.0 || x[n + j] > TWO_PI {
                x[n + j] = x[n + j].rem_euclid(TWO_PI);
                clipped = true;
            }
        }
        if !clipped {
            break;
        }
    }
    x
}

/// Residual of the multiplier fit on the free coordinates of `x`.
fn stationarity_of(model: &Model, x: &DVector<f64>, p_thr: f64, eps_thr: f64) -> (DVector<f64>, f64) {
    let fixed = pinned(model, x, p_thr, eps_thr);
    let rows: Vec<usize> = (0..2 * model.n).filter(|&i| fixed[i].is_none()).collect();
    fit_multipliers(model, x, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityFit {
    pub residual: f64,
    pub multipliers: Vec<f64>,
}

/// Fits Lagrange multipliers to a feasible point and reports the largest
/// violation of `grad f = lambda grad g + mu grad h` (or its `g1, g2` form
/// for `delta = 0`) on the coordinates that are not pinned to a bound.
pub fn stationarity_fit(pt: &SpectralPoint, delta: f64, p_threshold: f64, eps_threshold: f64) -> Result<StationarityFit> {
    checked(pt)?;
    crate::error::check_fidelity(delta)?;
    let model = Model::new(pt.len(), delta);
    let x = pt.to_x();
    let viol = model.infeasibility(&x);
    if !(viol <= FEASIBILITY_TOL) {
        return Err(QslError::NotOnM(viol));
    }
    let (nu, residual) = stationarity_of(&model, &x, p_threshold, eps_threshold);
    Ok(StationarityFit { residual, multipliers: nu.iter().copied().collect() })
}

/// [`stationarity_fit`] with the default thresholds, returning the residual.
pub fn check_stationarity(pt: &SpectralPoint, delta: f64) -> Result<f64> {
    let cfg = OracleConfig::default();
    Ok(stationarity_fit(pt, delta, cfg.p_threshold, cfg.eps_threshold)?.residual)
}

/// Structure flags of a point.
pub fn minimizer_structure(pt: &SpectralPoint, p_threshold: f64, eps_threshold: f64) -> MinimizerStructure {
    let occupied: Vec<(f64, f64)> =
        pt.p.iter().zip(&pt.eps).filter(|(p, _)| **p > p_threshold).map(|(p, e)| (*p, *e)).collect();
    let ground_occupied = occupied.iter().any(|&(_, e)| e < eps_threshold);
    let mut nonzero: Vec<f64> = occupied.iter().map(|&(_, e)| e).filter(|&e| e > eps_threshold).collect();
    nonzero.sort_by(f64::total_cmp);
    let spread = match (nonzero.first(), nonzero.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    let mut distinct = 0;
    let mut last = f64::NEG_INFINITY;
    for &e in &nonzero {
        if e - last >= 1e-3 {
            distinct += 1;
            last = e;
        }
    }
    MinimizerStructure { ground_occupied, nonzero_eps_equal: spread < 1e-3, n_distinct_nonzero: distinct }
}

/// Largest `|(eps_j - mu)^2 - (4 delta lambda^2 - 1)|` over occupied
/// nonzero phases.
fn multiplier_relation(pt: &SpectralPoint, delta: f64, nu: &[f64], cfg: &OracleConfig) -> Option<f64> {
    if delta == 0.0 || nu.len() != 2 {
        return None;
    }
    let (lam, mu) = (nu[0], nu[1]);
    let rhs = 4.0 * delta * lam * lam - 1.0;
    let worst = pt
        .p
        .iter()
        .zip(&pt.eps)
        .filter(|(p, e)| **p > cfg.p_threshold && **e > cfg.eps_threshold)
        .map(|(_, e)| ((e - mu).powi(2) - rhs).abs())
        .fold(0.0, f64::max);
    Some(worst)
}

fn seed_point<R: Rng>(rng: &mut R, n: usize, delta: f64, structured: bool) -> DVector<f64> {
    let mut p = vec![0.0; n];
    let mut eps: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TWO_PI)).collect();
    if structured {
        // two occupied levels, the lower at phase 0, exactly on M
        let s = delta.sqrt();
        let z = rng.random_range(-s..=s);
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        p[i] = 0.5 * (1.0 - z);
        p[j] = 0.5 * (1.0 + z);
        eps[i] = 0.0;
        eps[j] = crate::alpha::sweep_angle(delta, z).unwrap_or(PI);
    } else {
        p = uniform_simplex(rng, n);
    }
    DVector::from_iterator(2 * n, p.into_iter().chain(eps))
}

/// Result of one start: the polished point and its objective.
fn run_start(model: &Model, cfg: &OracleConfig, index: usize) -> Option<(f64, DVector<f64>)> {
    let mut rng = rng_for(cfg.seed, index as u64);
    let structured = index % 4 == 0;
    let x0 = seed_point(&mut rng, model.n, model.delta, structured);
    let x = augmented_lagrangian(model, x0);
    let polished = kkt_polish(model, &x, cfg);
    let pick = if model.infeasibility(&polished) <= 1e-12 && model.f(&polished) <= model.f(&x) + 1e-9 {
        polished
    } else {
        x
    };
    if model.infeasibility(&pick) <= FEASIBILITY_TOL * 1e-2 {
        Some((model.f(&pick), pick))
    } else {
        None
    }
}

/// Smallest `f` over `M` in dimension `n` by multi-start local search.
pub fn minimize_over_m(n: usize, delta: f64, config: &OracleConfig) -> Result<OracleResult> {
    if n < 2 {
        return Err(QslError::DimensionTooSmall(n));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(QslError::InvalidArgument(format!("delta must lie in [0, 1), got {delta}")));
    }
    if config.starts == 0 {
        return Err(QslError::InvalidArgument("need at least one start".into()));
    }
    if !(config.tol > 0.0) {
        return Err(QslError::InvalidTolerance(config.tol));
    }
    let model = Model::new(n, delta);
    let outcomes: Vec<Option<(f64, DVector<f64>)>> =
        (0..config.starts).into_par_iter().map(|k| run_start(&model, config, k)).collect();
    let feasible: Vec<(f64, SpectralPoint)> =
        outcomes.into_iter().flatten().map(|(v, x)| (v, SpectralPoint::from_x(&x))).collect();
    let feasible_starts = feasible.len();
    let (min_value, argmin) = feasible
        .into_iter()
        .min_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                let (ca, cb) = (a.1.canonical(), b.1.canonical());
                ca.eps.iter().chain(&ca.p).zip(cb.eps.iter().chain(&cb.p)).fold(std::cmp::Ordering::Equal, |o, (x, y)| {
                    o.then(x.total_cmp(y))
                })
            })
        })
        .ok_or(QslError::InfeasibleSearch)?;
    let x = argmin.to_x();
    let (nu, residual) = stationarity_of(&model, &x, config.p_threshold, config.eps_threshold);
    let nu: Vec<f64> = nu.iter().copied().collect();
    Ok(OracleResult {
        delta,
        n,
        min_value,
        structure: minimizer_structure(&argmin, config.p_threshold, config.eps_threshold),
        multiplier_relation_residual: multiplier_relation(&argmin, delta, &nu, config),
        multipliers: nu,
        stationarity_residual: residual,
        argmin,
        starts: config.starts,
        feasible_starts,
    })
}

/// The two-level point built from the optimal Bloch height `z*(delta)`:
/// weight `(1 - z)/2` at phase 0 and `(1 + z)/2` at the sweep angle.
pub fn qubit_structure_point(delta: f64) -> Result<SpectralPoint> {
    let z = crate::alpha::alpha(delta, crate::alpha::DEFAULT_TOL)?.z_star;
    let e1 = crate::alpha::sweep_angle(delta, z)?;
    SpectralPoint::new(vec![0.5 * (1.0 - z), 0.5 * (1.0 + z)], vec![0.0, e1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::alpha_value;
    use crate::first_passage::fidelity_at;
    use crate::quantum::energy_stats;

    fn pt(p: &[f64], e: &[f64]) -> SpectralPoint {
        SpectralPoint::new(p.to_vec(), e.to_vec()).unwrap()
    }

    #[test]
    fn function_examples() {
        let a = pt(&[0.5, 0.5], &[PI, 0.0]);
        assert!((objective_f(&a).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(constraint_g(&a).unwrap() < 1e-30);
        assert_eq!(constraint_h(&a).unwrap(), 1.0);
        let b = pt(&[1.0, 0.0, 0.0], &[0.3, 2.0, 5.0]);
        assert!((constraint_g(&b).unwrap() - 1.0).abs() < 1e-15);
        for &x in &[0.4, 1.3, 2.9] {
            let c = pt(&[0.5, 0.5], &[x, 0.0]);
            let h = Hamiltonian::diagonal(&[0.0, x]).unwrap();
            let psi = StateVector::from_real(&[1.0, 1.0]).unwrap();
            let g = constraint_g(&c).unwrap();
            assert!((g - 0.5 * (1.0 + x.cos())).abs() < 1e-15);
            assert!((g - fidelity_at(&h, &psi, 1.0).unwrap()).abs() < 1e-15);
        }
        assert!(matches!(objective_f(&SpectralPoint { p: vec![1.0], eps: vec![] }), Err(QslError::InvalidArgument(_))));
    }

    #[test]
    fn functions_are_permutation_invariant() {
        let a = pt(&[0.2, 0.5, 0.3], &[1.0, 0.2, 4.0]);
        let b = pt(&[0.3, 0.2, 0.5], &[4.0, 1.0, 0.2]);
        assert!((objective_f(&a).unwrap() - objective_f(&b).unwrap()).abs() < 1e-15);
        assert!((constraint_g(&a).unwrap() - constraint_g(&b).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let x = DVector::from_vec(vec![0.2, 0.5, 0.3, 1.0, 0.2, 4.0]);
        for delta in [0.0, 0.4] {
            let m = Model::new(3, delta);
            let h = 1e-6;
            for &k in &m.cons {
                let g = m.c_grad(k, &x);
                let hs = m.c_hess(k, &x);
                for i in 0..6 {
                    let mut a = x.clone();
                    let mut b = x.clone();
                    a[i] -= h;
                    b[i] += h;
                    assert!(((m.c(k, &b) - m.c(k, &a)) / (2.0 * h) - g[i]).abs() < 1e-8);
                    let dg = (m.c_grad(k, &b) - m.c_grad(k, &a)) / (2.0 * h);
                    assert!((dg - hs.column(i)).amax() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn reduction_without_folding() {
        let h = Hamiltonian::diagonal(&[1.0, 3.0]).unwrap();
        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let tau = 1.2;
        let r = reduce_triple(&h, &psi, tau).unwrap();
        assert_eq!(r.hamiltonian.ground_energy(), 0.0);
        let before = energy_stats(&h, &psi).unwrap().normalized_mean * tau;
        let after = energy_stats(&r.hamiltonian, &psi).unwrap().mean;
        assert!((before - after).abs() < 1e-14);
        let (f1, f2) = (fidelity_at(&r.hamiltonian, &psi, 1.0).unwrap(), fidelity_at(&h, &psi, tau).unwrap());
        assert!((f1 - f2).abs() < 1e-10);
    }

    #[test]
    fn reduction_folds_large_eigenvalues() {
        let h = Hamiltonian::diagonal(&[0.0, 3.0 * PI]).unwrap();
        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let r = reduce_triple(&h, &psi, 1.0).unwrap();
        assert!((r.hamiltonian.energies()[1] - PI).abs() < 1e-14);
        let after = energy_stats(&r.hamiltonian, &psi).unwrap().mean;
        assert!(after < energy_stats(&h, &psi).unwrap().mean);
        let (f1, f2) = (fidelity_at(&r.hamiltonian, &psi, 1.0).unwrap(), fidelity_at(&h, &psi, 1.0).unwrap());
        assert!((f1 - f2).abs() < 1e-10);
        assert!(matches!(reduce_triple(&h, &psi, 0.0), Err(QslError::InvalidArgument(_))));
    }

    #[test]
    fn reduction_ignores_shifts() {
        let h = Hamiltonian::diagonal(&[0.5, 1.1, 2.0]).unwrap();
        let a = reduce_triple(&h, &StateVector::from_real(&[1.0, 1.0, 1.0]).unwrap(), 2.0).unwrap();
        let b = reduce_triple(&h.shifted(7.25), &StateVector::from_real(&[1.0, 1.0, 1.0]).unwrap(), 2.0).unwrap();
        for (x, y) in a.hamiltonian.energies().iter().zip(b.hamiltonian.energies()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn qubit_point_is_stationary() {
        for &d in &[0.25, 0.5, 0.8] {
            let p = qubit_structure_point(d).unwrap();
            assert!((objective_f(&p).unwrap() - alpha_value(d).unwrap()).abs() < 1e-12);
            assert!(check_stationarity(&p, d).unwrap() < 1e-6);
        }
        let p0 = pt(&[0.5, 0.5], &[0.0, PI]);
        assert!(check_stationarity(&p0, 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn generic_point_is_not_stationary() {
        // scale phases of a generic point until g = delta
        let p = [0.2, 0.5, 0.3];
        let e = [1.0, 0.2, 2.0];
        let g = |s: f64| constraint_g(&pt(&p, &e.map(|x| x * s))).unwrap() - 0.5;
        let (a, b) = crate::scalar::bisect(g, 0.0, 2.0, 0.0);
        let s = 0.5 * (a + b);
        let q = pt(&p, &e.map(|x| x * s));
        assert!(check_stationarity(&q, 0.5).unwrap() > 1e-2);
    }

    #[test]
    fn infeasible_point_is_rejected() {
        let q = pt(&[0.5, 0.5], &[0.0, 1.0]);
        assert!(matches!(check_stationarity(&q, 0.5), Err(QslError::NotOnM(_))));
    }

    #[test]
    fn qubit_minimum_at_zero() {
        let r = minimize_over_m(2, 0.0, &OracleConfig::default()).unwrap();
        assert!((r.min_value - PI / 2.0).abs() < 1e-9);
        let c = r.argmin.canonical();
        assert!((c.p[0] - 0.5).abs() < 1e-6 && (c.eps[1] - PI).abs() < 1e-6);
        assert!(r.structure.ground_occupied && r.structure.nonzero_eps_equal);
    }

    #[test]
    fn qutrit_minimum_matches_alpha() {
        for &d in &[0.0, 0.5] {
            let r = minimize_over_m(3, d, &OracleConfig::default()).unwrap();
            assert!((r.min_value - alpha_value(d).unwrap()).abs() < 1e-6, "{r:?}");
            assert!(r.stationarity_residual < 1e-6);
            assert!(r.structure.ground_occupied && r.structure.nonzero_eps_equal);
            if d > 0.0 {
                assert!(r.multiplier_relation_residual.unwrap() < 1e-4);
            }
        }
    }

    #[test]
    fn search_is_deterministic() {
        let cfg = OracleConfig { starts: 12, ..OracleConfig::default() };
        let a = minimize_over_m(3, 0.3, &cfg).unwrap();
        let b = minimize_over_m(3, 0.3, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
