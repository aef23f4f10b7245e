//! JSON description of a Hamiltonian and a state.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::quantum::{Hamiltonian, StateVector, C64};
use crate::saturators::{SaturatingSystem, SaturatorKind};

/// Complex numbers are `[re, im]` pairs; the Hamiltonian is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub dimension: usize,
    pub hamiltonian: Vec<[f64; 2]>,
    pub state: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<SaturatorKind>,
}

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

impl SystemFile {
    pub fn from_system(h: &Hamiltonian, psi: &StateVector) -> Result<Self> {
        crate::quantum::check_dims(h.dim(), psi.dim())?;
        let m = h.matrix();
        let n = h.dim();
        let hamiltonian = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| pair(&m[(i, j)])).collect();
        Ok(Self {
            dimension: n,
            hamiltonian,
            state: psi.amplitudes().iter().map(pair).collect(),
            delta: None,
            predicted_time: None,
            kind: None,
        })
    }

    pub fn from_saturator(s: &SaturatingSystem) -> Result<Self> {
        let mut f = Self::from_system(&s.hamiltonian, &s.state)?;
        f.delta = Some(s.delta);
        f.predicted_time = Some(s.predicted_time);
        f.kind = Some(s.kind);
        Ok(f)
    }

    /// The Hamiltonian and the normalized state.
    pub fn system(&self) -> Result<(Hamiltonian, StateVector)> {
        let n = self.dimension;
        if self.hamiltonian.len() != n * n {
            return Err(QslError::Parse(format!("hamiltonian has {} entries, expected {}", self.hamiltonian.len(), n * n)));
        }
        if self.state.len() != n {
            return Err(QslError::Parse(format!("state has {} entries, expected {n}", self.state.len())));
        }
        let m = DMatrix::from_row_iterator(n, n, self.hamiltonian.iter().map(|[re, im]| C64::new(*re, *im)));
        let v = DVector::from_iterator(n, self.state.iter().map(|[re, im]| C64::new(*re, *im)));
        Ok((Hamiltonian::new(m)?, StateVector::from_vector(v)?))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QslError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| QslError::Io(format!("{}: {e}", path.display())))?)
    }
}

/// Pretty JSON with a trailing newline. Field order follows the struct.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| QslError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saturators::ml_saturating_system;

    #[test]
    fn round_trip() {
        let s = ml_saturating_system(0.5, 0.0, 1.0).unwrap();
        let f = SystemFile::from_saturator(&s).unwrap();
        let g = SystemFile::from_json(&f.to_json()).unwrap();
        assert_eq!(f, g);
        let (h, psi) = g.system().unwrap();
        assert_eq!(h.energies(), s.hamiltonian.energies());
        assert!((psi.overlap(&s.state).unwrap() - 1.0).abs() < 1e-15);
        assert!(f.to_json().contains("\"kind\": \"ML\""));
    }

    #[test]
    fn plain_system_omits_optional_fields() {
        let h = Hamiltonian::diagonal(&[0.0, 2.0]).unwrap();
        let psi = StateVector::from_real(&[1.0, 1.0]).unwrap();
        let text = SystemFile::from_system(&h, &psi).unwrap().to_json();
        assert!(!text.contains("kind") && !text.contains("predicted_time"));
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(SystemFile::from_json("{"), Err(QslError::Parse(_))));
        let bad = r#"{"dimension": 2, "hamiltonian": [[0,0],[1,0],[1,0]], "state": [[1,0],[0,0]]}"#;
        assert!(matches!(SystemFile::from_json(bad).unwrap().system(), Err(QslError::Parse(_))));
        let nonherm = r#"{"dimension": 2, "hamiltonian": [[0,0],[1,0],[0,0],[0,0]], "state": [[1,0],[0,0]]}"#;
        assert!(matches!(SystemFile::from_json(nonherm).unwrap().system(), Err(QslError::NotHermitian(_))));
        let unnormalized = r#"{"dimension": 2, "hamiltonian": [[0,0],[0,0],[0,0],[1,0]], "state": [[3,0],[4,0]]}"#;
        let (_, psi) = SystemFile::from_json(unnormalized).unwrap().system().unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-15);
    }
}
