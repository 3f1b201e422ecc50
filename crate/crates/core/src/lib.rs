//! Spectral and restricted fractional Laplacians on intervals and
//! rectangles, the indefinite block structure of the Hamiltonian system
//! `A^s u = mu v + |v|^(p-1) v`, `A^s v = lambda u + |u|^(q-1) u`, and a
//! Galerkin-Newton solver for its saddle-type weak solutions.

pub mod basis;
pub mod diagnostics;
pub mod error;
pub mod functional;
pub mod indefinite;
pub mod operators;
mod quadrature;
pub mod solver;

pub use basis::{analyze, build_basis, synthesize, DomainKind, EigenBasis, ModelDomain, SpectralField};
pub use diagnostics::{DiagnosticsReport, ExponentFit};
pub use error::{Error, Result};
pub use functional::{PairField, SystemProblem};
pub use indefinite::{CouplingParams, ModeAnalysis, ModeClass, SpaceSplit};
pub use operators::{FracOrder, OperatorKind};
pub use solver::{AdmissibilityReport, NewtonOptions, SaddleSolution};
