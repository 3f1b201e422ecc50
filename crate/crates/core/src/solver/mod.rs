//! Admissibility gate, Galerkin-Newton saddle solver and parameter
//! continuation.

mod continuation;
mod gate;
mod newton;

pub use continuation::{continuation, ContinuationPoint, ContinuationResult, PathSpec, ResonanceCrossing};
pub use gate::{
    critical_contour, critical_q, gate, gate_exponents, gate_grid, hyperbola_margin,
    AdmissibilityReport, AlphaWindow, GateSample,
};
pub use newton::{
    energy_split, initial_guess, newton_solve, positive_direction, ray_maximum, solve, EnergySplit,
    IterationRecord, NewtonOptions, SaddleSolution,
};
