use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::basis::{synthesize, EigenBasis};
use crate::error::{Error, Result};
use crate::functional::{
    dual_residual, gradient, hamiltonian, jacobian, lagrangian, quadratic_part, PairField,
    SystemProblem,
};
use crate::indefinite::{build_split, SpaceSplit, Subspace};

use super::gate::{gate, AdmissibilityReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    /// Stop when the dual residual is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub backtrack: f64,
    pub min_step: f64,
    /// Shift of the regularized normal equations.
    pub tikhonov: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 100,
            armijo: 1e-4,
            backtrack: 0.5,
            min_step: 1e-6,
            tikhonov: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub step: f64,
    pub regularized: bool,
}

/// `A` on the positive and negative parts, and the L² size of the null part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySplit {
    pub positive: f64,
    pub negative: f64,
    pub null_l2: f64,
    pub hamiltonian: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleSolution {
    #[serde(skip)]
    pub w: PairField,
    pub residual: f64,
    /// `J(w)` as evaluated.
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Converged to the zero field.
    pub trivial: bool,
    /// At least one step used the Tikhonov-regularized system.
    pub regularized: bool,
    pub u_positive: bool,
    pub v_positive: bool,
    pub energy_split: EnergySplit,
    pub trace: Vec<IterationRecord>,
    pub warning: Option<String>,
}

fn solve_lu(jac: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let d = jac.clone().lu().solve(rhs)?;
    let scale = 1.0 + rhs.amax() / jac.amax().max(f64::MIN_POSITIVE);
    if d.iter().all(|x| x.is_finite()) && d.amax() < 1e12 * scale {
        Some(d)
    } else {
        None
    }
}

fn solve_tikhonov(jac: &DMatrix<f64>, rhs: &DVector<f64>, delta: f64) -> Result<DVector<f64>> {
    let n = jac.nrows();
    let normal = jac.tr_mul(jac) + DMatrix::identity(n, n) * delta;
    let b = jac.tr_mul(rhs);
    normal
        .cholesky()
        .map(|c| c.solve(&b))
        .ok_or_else(|| Error::Singular("regularized Newton system is not positive definite".into()))
}

struct Merit<'a> {
    prob: &'a SystemProblem,
    basis: &'a Arc<EigenBasis>,
}

impl Merit<'_> {
    fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let w = PairField::from_stacked(self.basis, x)?;
        let g = gradient(&w, self.prob)?;
        let r = dual_residual(&g, self.basis, self.prob);
        Ok((g, r))
    }
}

/// Damped Newton iteration on `gradient(w) = 0` from `w0`.
///
/// Steps come from the Hessian of `J`; when it is singular the step solves
/// `(H^T H + delta I) d = -H^T G` and the result is flagged. Step lengths
/// are backtracked until the squared dual residual decreases by the Armijo
/// factor.
pub fn newton_solve(prob: &SystemProblem, w0: &PairField, opts: &NewtonOptions) -> Result<SaddleSolution> {
    prob.validate()?;
    let report = gate(prob)?;
    let basis = Arc::clone(w0.basis());
    if basis.len() != prob.modes {
        return Err(Error::invalid(
            "w0",
            format!("initial field has {} modes, problem has {}", basis.len(), prob.modes),
        ));
    }
    let merit = Merit { prob, basis: &basis };
    let mut x = w0.stacked();
    let (mut g, mut r) = merit.eval(&x)?;
    let mut trace = vec![IterationRecord {
        iteration: 0,
        residual: r,
        step: 0.0,
        regularized: false,
    }];
    let mut regularized = false;
    let mut iterations = 0;
    let mut failure = None;

    while r > opts.tol && iterations < opts.max_iter {
        let w = PairField::from_stacked(&basis, &x)?;
        let jac = jacobian(&w, prob)?;
        let rhs = -DVector::from_vec(g.clone());
        let mut accepted = None;
        if let Some(d) = solve_lu(&jac, &rhs) {
            accepted = line_search(&merit, &x, &d, r, opts)?.map(|s| (s, false));
        }
        if accepted.is_none() {
            let d = solve_tikhonov(&jac, &rhs, opts.tikhonov)?;
            accepted = line_search(&merit, &x, &d, r, opts)?.map(|s| (s, true));
        }
        let Some(((x_new, g_new, r_new, step), reg)) = accepted else {
            failure = Some(format!(
                "line search stalled at iteration {} with residual {r:e}",
                iterations + 1
            ));
            break;
        };
        iterations += 1;
        regularized |= reg;
        x = x_new;
        g = g_new;
        r = r_new;
        trace.push(IterationRecord {
            iteration: iterations,
            residual: r,
            step,
            regularized: reg,
        });
    }

    let converged = r <= opts.tol;
    if failure.is_none() && !converged {
        failure = Some(format!("no convergence in {} iterations", opts.max_iter));
    }
    let w = PairField::from_stacked(&basis, &x)?;
    finish(prob, w, r, iterations, converged, regularized, trace, &report, failure)
}

type StepResult = (Vec<f64>, Vec<f64>, f64, f64);

fn line_search(
    merit: &Merit,
    x: &[f64],
    d: &DVector<f64>,
    r0: f64,
    opts: &NewtonOptions,
) -> Result<Option<StepResult>> {
    let phi0 = r0 * r0;
    let mut t = 1.0;
    while t >= opts.min_step {
        let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + t * b).collect();
        let (g, r) = merit.eval(&trial)?;
        if r.is_finite() && r * r <= (1.0 - 2.0 * opts.armijo * t) * phi0 {
            return Ok(Some((trial, g, r, t)));
        }
        t *= opts.backtrack;
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    prob: &SystemProblem,
    w: PairField,
    residual: f64,
    iterations: usize,
    converged: bool,
    regularized: bool,
    trace: Vec<IterationRecord>,
    report: &AdmissibilityReport,
    failure: Option<String>,
) -> Result<SaddleSolution> {
    let energy = lagrangian(&w, prob)?;
    let split = build_split(w.basis(), &prob.coupling()?, prob.modes)?;
    let energy_split = energy_split(&w, &split, prob)?;
    let u_vals = synthesize(&w.u);
    let v_vals = synthesize(&w.v);
    let warning = match (report.warning.clone(), failure) {
        (Some(a), Some(b)) => Some(format!("{a}; {b}")),
        (a, b) => a.or(b),
    };
    Ok(SaddleSolution {
        trivial: converged && w.is_zero(),
        u_positive: u_vals.iter().all(|&z| z > 0.0),
        v_positive: v_vals.iter().all(|&z| z > 0.0),
        w,
        residual,
        energy,
        iterations,
        converged,
        regularized,
        energy_split,
        trace,
        warning,
    })
}

pub fn energy_split(w: &PairField, split: &SpaceSplit, prob: &SystemProblem) -> Result<EnergySplit> {
    let wp = w.component(split, Subspace::Positive)?;
    let wm = w.component(split, Subspace::Negative)?;
    let w0 = w.component(split, Subspace::Null)?;
    Ok(EnergySplit {
        positive: quadratic_part(&wp, prob)?,
        negative: quadratic_part(&wm, prob)?,
        null_l2: (w0.u.l2_norm().powi(2) + w0.v.l2_norm().powi(2)).sqrt(),
        hamiltonian: hamiltonian(w, prob)?,
    })
}

/// `e^+`: the positive eigendirection of the lowest mode that has one,
/// scaled to unit `||.||_*`.
pub fn positive_direction(basis: &Arc<EigenBasis>, split: &SpaceSplit) -> Result<PairField> {
    let dir = *split
        .positive
        .iter()
        .min_by_key(|d| d.mode)
        .ok_or_else(|| Error::Precondition("the truncation has no positive direction".into()))?;
    let nu = split.modes[dir.mode].nu(dir.branch);
    let (u, v) = split.direction_coeffs(dir);
    let scale = 1.0 / nu.sqrt();
    let x: Vec<f64> = u.iter().chain(&v).map(|c| c * scale).collect();
    PairField::from_stacked(basis, &x)
}

/// `t e^+`.
pub fn initial_guess(basis: &Arc<EigenBasis>, split: &SpaceSplit, t: f64) -> Result<PairField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("amplitude must be nonnegative, got {t}")));
    }
    Ok(positive_direction(basis, split)?.scaled(t))
}

/// Maximizer of `t -> J(t e)` over `t > 0` by bracketing and golden
/// section; returns `(t*, J(t* e))`.
pub fn ray_maximum(prob: &SystemProblem, e: &PairField) -> Result<(f64, f64)> {
    let f = |t: f64| lagrangian(&e.scaled(t), prob);
    let mut hi = 1.0;
    let mut f_hi = f(hi)?;
    let mut f_mid = f(0.5 * hi)?;
    let mut expansions = 0;
    while f_hi >= f_mid {
        hi *= 2.0;
        f_mid = f_hi;
        f_hi = f(hi)?;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Precondition(
                "the Lagrangian does not decrease along the ray".into(),
            ));
        }
    }
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-10 * b {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

/// Basis, gate, linking-ray seed and Newton in one call.
pub fn solve(prob: &SystemProblem, opts: &NewtonOptions) -> Result<SaddleSolution> {
    let basis = prob.basis()?;
    let split = build_split(&basis, &prob.coupling()?, prob.modes)?;
    let e = positive_direction(&basis, &split)?;
    let (t, _) = ray_maximum(prob, &e)?;
    newton_solve(prob, &e.scaled(t), opts)
}
