use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::EigenBasis;
use crate::error::{Error, Result};
use crate::functional::{PairField, SystemProblem};
use crate::indefinite::build_split;
use crate::operators::{FracOrder, OperatorKind};

use super::newton::{newton_solve, positive_direction, ray_maximum, NewtonOptions, SaddleSolution};

/// Maximum number of step halvings before a path is abandoned.
const MAX_HALVINGS: usize = 8;
/// Bisection tolerance on the path coordinate for resonance crossings.
const CROSSING_TOL: f64 = 1e-10;

/// A straight path in parameter space traversed in `steps` equal steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parameter", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    /// `(lambda, mu)` from `from` to `to`.
    Coupling { from: [f64; 2], to: [f64; 2], steps: usize },
    /// The order `s`; `alpha / s` is held fixed.
    Order { from: f64, to: f64, steps: usize },
}

impl PathSpec {
    pub fn steps(&self) -> usize {
        match *self {
            PathSpec::Coupling { steps, .. } | PathSpec::Order { steps, .. } => steps,
        }
    }

    /// The problem at path coordinate `t` in [0, 1].
    pub fn at(&self, base: &SystemProblem, t: f64) -> Result<SystemProblem> {
        match *self {
            PathSpec::Coupling { from, to, .. } => base.clone().with_coupling(
                from[0] + t * (to[0] - from[0]),
                from[1] + t * (to[1] - from[1]),
            ),
            PathSpec::Order { from, to, .. } => {
                let s = FracOrder::new(from + t * (to - from))?;
                let ratio = base.alpha / base.s.value();
                let mut prob = base.clone();
                prob.s = s;
                prob.alpha = ratio * s.value();
                prob.validate()?;
                Ok(prob)
            }
        }
    }

    fn moves_basis(&self, prob: &SystemProblem) -> bool {
        matches!(self, PathSpec::Order { .. }) && prob.operator == OperatorKind::Restricted
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationPoint {
    pub t: f64,
    pub lambda: f64,
    pub mu: f64,
    pub s: f64,
    pub null_dimension: usize,
    pub solution: SaddleSolution,
}

/// Path coordinate where `lambda mu = lambda_k^2s` for mode `mode` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceCrossing {
    pub mode: usize,
    pub t: f64,
    pub lambda: f64,
    pub mu: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationResult {
    pub points: Vec<ContinuationPoint>,
    pub crossings: Vec<ResonanceCrossing>,
    pub completed: bool,
    pub message: Option<String>,
}

struct Walker<'a> {
    base: &'a SystemProblem,
    path: PathSpec,
    basis: Arc<EigenBasis>,
}

impl Walker<'_> {
    fn basis_at(&self, prob: &SystemProblem) -> Result<Arc<EigenBasis>> {
        if self.path.moves_basis(prob) {
            prob.basis()
        } else {
            Ok(Arc::clone(&self.basis))
        }
    }

    /// `lambda mu - lambda_k^2s` for every mode at coordinate `t`.
    fn gaps(&self, t: f64) -> Result<Vec<f64>> {
        let prob = self.path.at(self.base, t)?;
        let basis = self.basis_at(&prob)?;
        let s = prob.s.value();
        Ok(basis
            .eigenvalues()
            .iter()
            .map(|l| prob.lambda * prob.mu - l.powf(2.0 * s))
            .collect())
    }

    fn crossings(&self, t0: f64, t1: f64, g0: &[f64], g1: &[f64]) -> Result<Vec<ResonanceCrossing>> {
        let mut out = Vec::new();
        for k in 0..g0.len() {
            if g0[k] == 0.0 || g0[k].signum() == g1[k].signum() {
                continue;
            }
            let (mut a, mut b) = (t0, t1);
            let sign_a = g0[k].signum();
            while b - a > CROSSING_TOL {
                let mid = 0.5 * (a + b);
                let gm = self.gaps(mid)?[k];
                if gm == 0.0 {
                    a = mid;
                    b = mid;
                } else if gm.signum() == sign_a {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let t = 0.5 * (a + b);
            let prob = self.path.at(self.base, t)?;
            out.push(ResonanceCrossing {
                mode: k + 1,
                t,
                lambda: prob.lambda,
                mu: prob.mu,
                s: prob.s.value(),
            });
        }
        Ok(out)
    }

    fn point(&self, t: f64, prob: &SystemProblem, solution: SaddleSolution) -> Result<ContinuationPoint> {
        let split = build_split(solution.w.basis(), &prob.coupling()?, prob.modes)?;
        Ok(ContinuationPoint {
            t,
            lambda: prob.lambda,
            mu: prob.mu,
            s: prob.s.value(),
            null_dimension: split.null_dimension(),
            solution,
        })
    }
}

/// Warm-started Newton solves along `path`.
///
/// Each step reuses the previous solution as its seed; a failed step is
/// halved up to 8 times before the walk stops with the points found so far.
/// Without `seed` the first point starts from the maximizer of `J` along
/// the lowest positive direction.
pub fn continuation(
    base: &SystemProblem,
    path: PathSpec,
    seed: Option<&PairField>,
    opts: &NewtonOptions,
) -> Result<ContinuationResult> {
    if path.steps() == 0 {
        return Err(Error::invalid("steps", "a path needs at least one step"));
    }
    let start = path.at(base, 0.0)?;
    let basis = match seed {
        Some(w) => Arc::clone(w.basis()),
        None => start.basis()?,
    };
    let walker = Walker {
        base,
        path,
        basis: Arc::clone(&basis),
    };

    let w0 = match seed {
        Some(w) => w.clone(),
        None => {
            let split = build_split(&basis, &start.coupling()?, start.modes)?;
            let e = positive_direction(&basis, &split)?;
            let (t, _) = ray_maximum(&start, &e)?;
            e.scaled(t)
        }
    };
    let first = newton_solve(&start, &w0, opts)?;
    let mut result = ContinuationResult {
        points: Vec::new(),
        crossings: Vec::new(),
        completed: false,
        message: None,
    };
    if !first.converged {
        result.message = Some("no converged solution at the start of the path".into());
        result.points.push(walker.point(0.0, &start, first)?);
        return Ok(result);
    }
    result.points.push(walker.point(0.0, &start, first)?);

    let h0 = 1.0 / path.steps() as f64;
    let mut t = 0.0;
    let mut gaps = walker.gaps(0.0)?;
    while t < 1.0 - 1e-12 {
        let prev = &result.points.last().expect("nonempty").solution.w;
        let mut h = h0.min(1.0 - t);
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let tn = if h >= 1.0 - t { 1.0 } else { t + h };
            let prob = path.at(base, tn)?;
            let nb = walker.basis_at(&prob)?;
            let warm = PairField::from_stacked(&nb, &prev.stacked())?;
            let sol = newton_solve(&prob, &warm, opts)?;
            if sol.converged {
                accepted = Some((tn, prob, sol));
                break;
            }
            h *= 0.5;
        }
        let Some((tn, prob, sol)) = accepted else {
            result.message = Some(format!(
                "step from t = {t} failed after {MAX_HALVINGS} halvings"
            ));
            return Ok(result);
        };
        let next_gaps = walker.gaps(tn)?;
        result
            .crossings
            .extend(walker.crossings(t, tn, &gaps, &next_gaps)?);
        result.points.push(walker.point(tn, &prob, sol)?);
        gaps = next_gaps;
        t = tn;
    }
    result.completed = true;
    Ok(result)
}
