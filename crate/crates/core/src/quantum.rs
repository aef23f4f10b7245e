//! Pure states and time-independent Hamiltonians on small Hilbert spaces.
//!
//! States are carried as unit vectors; projectors are built on demand and the
//! global phase is only quotiented out where states are compared. Evolution
//! uses the spectral decomposition of the Hamiltonian, which is exact up to
//! rounding for the dense matrices handled here.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{QslError, Result};

pub type C64 = Complex<f64>;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const RECONSTRUCTION_TOL: f64 = 1e-10;

/// A unit vector in `C^n`, `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

/// Normalizes `amplitudes` into a state vector.
pub fn make_state(amplitudes: &[C64]) -> Result<StateVector> {
    StateVector::from_vector(DVector::from_column_slice(amplitudes))
}

impl StateVector {
    pub fn from_vector(v: DVector<C64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(QslError::DimensionTooSmall(v.len()));
        }
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(QslError::InvalidState);
        }
        Ok(Self { amps: v.unscale(norm) })
    }

    /// Real amplitudes, normalized.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        let v: Vec<C64> = amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect();
        make_state(&v)
    }

    /// The `k`-th standard basis vector of `C^n`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(QslError::InvalidArgument(format!(
                "basis index {k} out of range for dimension {n}"
            )));
        }
        let mut v = DVector::zeros(n);
        v[k] = C64::new(1.0, 0.0);
        Self::from_vector(v)
    }

    /// Wraps a vector that is already normalized up to rounding.
    pub(crate) fn from_unit(v: DVector<C64>) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-8, "norm {}", v.norm());
        Self { amps: v }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// Multiplies by the global phase `e^{i theta}`.
    pub fn with_phase(&self, theta: f64) -> StateVector {
        Self { amps: self.amps.map(|a| a * C64::from_polar(1.0, theta)) }
    }

    pub fn projector(&self) -> PureState {
        PureState { proj: &self.amps * self.amps.adjoint() }
    }
}

/// A rank-one projector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    proj: DMatrix<C64>,
}

impl PureState {
    /// Validates a rank-one projector given as a matrix.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(QslError::DimensionMismatch { expected: n, got: m.ncols() });
        }
        if n < 2 {
            return Err(QslError::DimensionTooSmall(n));
        }
        let herm = (&m - m.adjoint()).norm();
        if herm > HERMITIAN_TOL {
            return Err(QslError::NotHermitian(herm));
        }
        let tr = m.trace();
        let idem = (&m * &m - &m).norm();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 || idem > 1e-10 {
            return Err(QslError::InvalidArgument(format!(
                "matrix is not a rank-one projector (trace {tr}, idempotency defect {idem:e})"
            )));
        }
        Ok(Self { proj: m })
    }

    pub fn dim(&self) -> usize {
        self.proj.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.proj
    }

    /// A unit vector spanning the range of the projector.
    pub fn representative(&self) -> StateVector {
        let n = self.dim();
        let k = (0..n)
            .max_by(|&a, &b| self.proj[(a, a)].re.total_cmp(&self.proj[(b, b)].re))
            .unwrap_or(0);
        let col = self.proj.column(k).into_owned();
        let norm = col.norm();
        StateVector::from_unit(col.unscale(norm))
    }

    /// Frobenius distance between projectors; blind to global phases.
    pub fn distance_to(&self, other: &PureState) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok((&self.proj - &other.proj).norm())
    }

    pub fn expectation(&self, op: &DMatrix<C64>) -> Result<f64> {
        check_dims(self.dim(), op.nrows())?;
        Ok(trace_product(&self.proj, op).re)
    }
}

/// `tr(a b)` for two pure states.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(trace_product(&a.proj, &b.proj).re.clamp(0.0, 1.0))
}

pub(crate) fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(QslError::DimensionMismatch { expected, got })
    }
}

/// A Hermitian matrix together with its spectral decomposition
/// (eigenvalues ascending, eigenvectors as columns).
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: DMatrix<C64>,
    energies: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Hamiltonian {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(QslError::DimensionMismatch { expected: n, got: matrix.ncols() });
        }
        if n < 2 {
            return Err(QslError::DimensionTooSmall(n));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let herm = (&matrix - matrix.adjoint()).camax();
        if !herm.is_finite() || herm > HERMITIAN_TOL * scale {
            return Err(QslError::NotHermitian(herm));
        }
        let sym = (&matrix + matrix.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        let h = Self { matrix: sym, energies, vectors };
        let defect = (h.reconstruct() - &h.matrix).camax();
        if defect > RECONSTRUCTION_TOL * scale {
            return Err(QslError::InvalidArgument(format!(
                "eigendecomposition failed to reconstruct the matrix (defect {defect:e})"
            )));
        }
        Ok(h)
    }

    /// `diag(energies)` in the standard basis.
    pub fn diagonal(energies: &[f64]) -> Result<Self> {
        let n = energies.len();
        Self::from_spectrum(energies, DMatrix::identity(n, n))
    }

    /// `V diag(energies) V^dagger` for a unitary `V`. The supplied eigenbasis is
    /// kept as the cached decomposition.
    pub fn from_spectrum(energies: &[f64], vectors: DMatrix<C64>) -> Result<Self> {
        let n = energies.len();
        if n < 2 {
            return Err(QslError::DimensionTooSmall(n));
        }
        if vectors.nrows() != n || vectors.ncols() != n {
            return Err(QslError::DimensionMismatch { expected: n, got: vectors.nrows() });
        }
        let unitarity = (vectors.adjoint() * &vectors - DMatrix::<C64>::identity(n, n)).camax();
        if unitarity > 1e-10 {
            return Err(QslError::InvalidArgument(format!(
                "eigenvector matrix is not unitary (defect {unitarity:e})"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let sorted: Vec<f64> = order.iter().map(|&k| energies[k]).collect();
        let vecs = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
        let mut h = Self { matrix: DMatrix::zeros(n, n), energies: sorted, vectors: vecs };
        let m = h.reconstruct();
        h.matrix = (&m + m.adjoint()).scale(0.5);
        Ok(h)
    }

    fn reconstruct(&self) -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| C64::new(e, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn max_energy(&self) -> f64 {
        self.energies[self.dim() - 1]
    }

    /// Eigenvector of the `k`-th eigenvalue (ascending order).
    pub fn eigenvector(&self, k: usize) -> Result<StateVector> {
        if k >= self.dim() {
            return Err(QslError::InvalidArgument(format!(
                "level {k} out of range for dimension {}",
                self.dim()
            )));
        }
        Ok(StateVector::from_unit(self.vectors.column(k).into_owned()))
    }

    /// Normalized projection of `psi` onto the eigenspace containing level `k`
    /// (eigenvalues within `tol` of `energies[k]`). Independent of the basis
    /// chosen inside a degenerate eigenspace.
    pub fn eigenspace_component(&self, k: usize, psi: &StateVector, tol: f64) -> Result<StateVector> {
        check_dims(self.dim(), psi.dim())?;
        if k >= self.dim() {
            return Err(QslError::InvalidArgument(format!("level {k} out of range")));
        }
        let target = self.energies[k];
        let coeffs = self.vectors.adjoint() * psi.amplitudes();
        let mut v = DVector::zeros(self.dim());
        for (j, &e) in self.energies.iter().enumerate() {
            if (e - target).abs() <= tol {
                v += self.vectors.column(j) * coeffs[j];
            }
        }
        if v.norm() < 1e-12 {
            return Err(QslError::OutsideOmega);
        }
        StateVector::from_vector(v)
    }

    /// `H + c I`.
    pub fn shifted(&self, c: f64) -> Hamiltonian {
        let energies: Vec<f64> = self.energies.iter().map(|e| e + c).collect();
        let mut h = self.clone();
        h.energies = energies;
        for i in 0..self.dim() {
            h.matrix[(i, i)] += C64::new(c, 0.0);
        }
        h
    }

    /// `s H` for `s > 0`.
    pub fn scaled(&self, s: f64) -> Hamiltonian {
        assert!(s > 0.0, "scale must be positive");
        Hamiltonian {
            matrix: self.matrix.scale(s),
            energies: self.energies.iter().map(|e| e * s).collect(),
            vectors: self.vectors.clone(),
        }
    }

    /// `-H`, which runs the dynamics backwards.
    pub fn negated(&self) -> Hamiltonian {
        let n = self.dim();
        let energies: Vec<f64> = self.energies.iter().rev().map(|e| -e).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| self.vectors[(i, n - 1 - j)]);
        Hamiltonian { matrix: -self.matrix.clone(), energies, vectors }
    }

    /// Occupation probabilities of `psi` over the eigenbasis.
    pub fn spectral_weights(&self, psi: &StateVector) -> Result<SpectralWeights> {
        check_dims(self.dim(), psi.dim())?;
        let coeffs = self.vectors.adjoint() * psi.amplitudes();
        let mut weights: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(SpectralWeights { energies: self.energies.clone(), weights })
    }

    /// `e^{-itH} psi`.
    pub fn propagate(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        check_dims(self.dim(), psi.dim())?;
        let mut coeffs = self.vectors.adjoint() * psi.amplitudes();
        for (c, &e) in coeffs.iter_mut().zip(&self.energies) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        Ok(StateVector::from_unit(&self.vectors * coeffs))
    }
}

/// `e^{-itH} psi`.
pub fn evolve(h: &Hamiltonian, psi: &StateVector, t: f64) -> Result<StateVector> {
    h.propagate(psi, t)
}

/// Occupation of each eigenvalue by a state. Everything the fidelity and the
/// energy moments need.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWeights {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralWeights {
    /// `<psi|e^{-itH}|psi>`.
    pub fn survival_amplitude(&self, t: f64) -> C64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| C64::from_polar(w, -e * t))
            .sum()
    }

    /// `|<psi|e^{-itH}|psi>|^2`.
    pub fn fidelity(&self, t: f64) -> f64 {
        self.survival_amplitude(t).norm_sqr().min(1.0)
    }

    /// Time derivative of [`Self::fidelity`].
    pub fn fidelity_derivative(&self, t: f64) -> f64 {
        let amp = self.survival_amplitude(t);
        let damp: C64 = self
            .energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| C64::new(0.0, -e) * C64::from_polar(w, -e * t))
            .sum();
        2.0 * (amp.conj() * damp).re
    }

    /// Spread between the extreme occupied energies.
    pub fn occupied_spread(&self, threshold: f64) -> f64 {
        let occ: Vec<f64> = self
            .energies
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > threshold)
            .map(|(&e, _)| e)
            .collect();
        match (occ.first(), occ.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Smallest eigenvalue carrying weight above `threshold`.
    pub fn lowest_occupied(&self, threshold: f64) -> Option<f64> {
        self.energies.iter().zip(&self.weights).find(|(_, &w)| w > threshold).map(|(&e, _)| e)
    }

    /// Largest eigenvalue carrying weight above `threshold`.
    pub fn highest_occupied(&self, threshold: f64) -> Option<f64> {
        self.energies.iter().zip(&self.weights).rev().find(|(_, &w)| w > threshold).map(|(&e, _)| e)
    }
}

/// First two moments of the energy, with the ground and top shifts.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyStats {
    pub mean: f64,
    pub variance: f64,
    /// `<H> - eps_0`.
    pub normalized_mean: f64,
    /// `eps_max - <H>`.
    pub dual_mean: f64,
}

impl EnergyStats {
    /// Energy uncertainty `Delta H`.
    pub fn uncertainty(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Stats for unit uncertainty and unit shifted means, as used for the
    /// dimensionless bound curves.
    pub fn unit() -> Self {
        Self { mean: 1.0, variance: 1.0, normalized_mean: 1.0, dual_mean: 1.0 }
    }
}

pub fn energy_stats(h: &Hamiltonian, psi: &StateVector) -> Result<EnergyStats> {
    let sw = h.spectral_weights(psi)?;
    let mean: f64 = sw.energies.iter().zip(&sw.weights).map(|(e, w)| e * w).sum();
    let variance: f64 =
        sw.energies.iter().zip(&sw.weights).map(|(e, w)| w * (e - mean).powi(2)).sum();
    let e0 = h.ground_energy();
    let emax = h.max_energy();
    let normalized_mean: f64 =
        sw.energies.iter().zip(&sw.weights).map(|(e, w)| w * (e - e0)).sum();
    let dual_mean: f64 = sw.energies.iter().zip(&sw.weights).map(|(e, w)| w * (emax - e)).sum();
    Ok(EnergyStats { mean, variance, normalized_mean, dual_mean })
}

/// Returns true when `v` has unit norm within the state tolerance.
pub fn is_normalized(v: &StateVector) -> bool {
    (v.norm() - 1.0).abs() <= NORM_TOL
}
