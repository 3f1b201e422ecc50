//! Benchmark fixtures shared by the criterion targets.

use fracsys_core::{PairField, SystemProblem};

/// Reference problem at truncation `modes` with a smooth nonzero state.
pub fn fixture(modes: usize) -> (SystemProblem, PairField) {
    let prob = SystemProblem::reference().with_modes(modes).expect("valid truncation");
    let basis = prob.basis().expect("basis");
    let x: Vec<f64> = (0..2 * modes)
        .map(|i| 1.0 / (1 + i % modes) as f64)
        .collect();
    let w = PairField::from_stacked(&basis, &x).expect("length matches");
    (prob, w)
}
