//! Quantum speed limits for pure states: the Margolus-Levitin type bound
//! `alpha(delta) / <H - e0>`, its saturating qubit systems, first-passage
//! times, projective geometry checks and the spectral oracle problem.

pub mod acceptance;
pub mod alpha;
pub mod bounds;
pub mod error;
pub mod extremal;
pub mod first_passage;
pub mod geometry;
pub mod io;
pub mod oracle;
pub mod quantum;
pub mod sampling;
pub mod saturators;
pub mod scalar;

pub use error::{QslError, Result};
