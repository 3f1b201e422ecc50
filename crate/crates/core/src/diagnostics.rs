//! Numerical probes of the operator comparison, the eigenvalue ordering,
//! boundary behavior, boundedness and coefficient decay.

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{synthesize, DomainKind, ModelDomain};
use crate::error::{Error, Result};
use crate::functional::SystemProblem;
use crate::operators::{compare_pointwise, lowest_restricted_eigenpair, FracOrder};
use crate::solver::SaddleSolution;

/// Version tag of the comparison test family.
pub const TEST_FAMILY_VERSION: &str = "v1";

/// Slack allowed in the comparison, in multiples of the grid step.
pub const COMPARISON_TOLERANCE_STEPS: f64 = 5.0;

/// Nonnegative test functions for the operator comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `sqrt(2/l) sin(pi x / l)`.
    FirstMode,
    /// `x (l - x) / l^2`.
    Parabola,
    /// Unit hat peaked at the midpoint.
    Hat,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [TestFunction::FirstMode, TestFunction::Parabola, TestFunction::Hat];

    pub fn eval(self, x: f64, length: f64) -> f64 {
        match self {
            TestFunction::FirstMode => {
                (2.0 / length).sqrt() * (std::f64::consts::PI * x / length).sin()
            }
            TestFunction::Parabola => x * (length - x) / (length * length),
            TestFunction::Hat => 1.0 - (2.0 * x / length - 1.0).abs(),
        }
    }

    /// Whether both operators have finite pointwise values on the function.
    /// The hat's interior kink makes them infinite for `s > 1/2`.
    pub fn pointwise_defined(self, s: f64) -> bool {
        match self {
            TestFunction::Hat => s <= 0.5,
            _ => true,
        }
    }
}

/// Least-squares fit `log f = log C + exponent log d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub samples: usize,
}

/// Fit `y ~ C x^e` over the positive samples.
pub fn power_fit(x: &[f64], y: &[f64]) -> Result<ExponentFit> {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pairs.len();
    if n < 3 {
        return Err(Error::Resolution(format!(
            "a power fit needs at least 3 positive samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Resolution("power fit abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = pairs.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    Ok(ExponentFit {
        exponent: slope,
        prefactor: icpt.exp(),
        residual: (rss / nf).sqrt(),
        samples: n,
    })
}

/// Fit of `u(x) ~ C d^beta` near the left end, for `d` in `[2h, 0.1 l]`.
pub fn boundary_exponent(values: &[f64], domain: &ModelDomain) -> Result<ExponentFit> {
    if domain.kind() != DomainKind::Interval {
        return Err(Error::Unsupported("boundary fits are one-dimensional".into()));
    }
    let h = domain.step(0);
    let l = domain.extents()[0];
    let x = domain.grid().axis(0).to_vec();
    let (d, v): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(values)
        .filter(|(x, _)| **x >= 2.0 * h * (1.0 - 1e-12) && **x <= 0.1 * l * (1.0 + 1e-12))
        .map(|(x, v)| (*x, v.abs()))
        .unzip();
    power_fit(&d, &v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEntry {
    pub s: f64,
    /// `lambda_1^s` of the Dirichlet Laplacian.
    pub spectral: f64,
    pub restricted: f64,
    pub gap: f64,
    pub restricted_refined: f64,
    pub gap_refined: f64,
    /// `|gap_refined - gap| / |gap|`.
    pub relative_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub s: f64,
    pub function: TestFunction,
    pub pointwise_defined: bool,
    pub min: f64,
    pub argmin: f64,
    pub tolerance: f64,
    pub min_refined: f64,
    /// `max(0, -min)` on the grid and on the doubled grid.
    pub slack: f64,
    pub slack_refined: f64,
    /// `min >= -tolerance` and the slack does not grow under refinement.
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryEntry {
    pub s: f64,
    /// First restricted eigenvector.
    pub restricted: ExponentFit,
    pub restricted_refined: ExponentFit,
    /// First Dirichlet eigenfunction.
    pub spectral: ExponentFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorDiagnostics {
    pub grid_size: usize,
    pub family_version: String,
    pub eigenvalue_gaps: Vec<GapEntry>,
    pub comparisons: Vec<ComparisonEntry>,
    pub boundary_exponents: Vec<BoundaryEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionDiagnostics {
    pub sup_u: f64,
    pub sup_v: f64,
    /// Fit of `|u_k| ~ C lambda_k^-sigma`, exponent reported as `sigma`.
    pub decay_u: Option<ExponentFit>,
    pub decay_v: Option<ExponentFit>,
    /// Fit of `u ~ d^beta` near the boundary, intervals only.
    pub boundary_u: Option<ExponentFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub family_version: String,
    pub operator: Option<OperatorDiagnostics>,
    pub solution: Option<SolutionDiagnostics>,
}

impl DiagnosticsReport {
    pub fn all_finite(&self) -> bool {
        let fit_ok = |f: &ExponentFit| f.exponent.is_finite() && f.residual.is_finite();
        let op_ok = self.operator.as_ref().is_none_or(|o| {
            o.eigenvalue_gaps
                .iter()
                .all(|g| g.gap.is_finite() && g.gap_refined.is_finite())
                && o.comparisons
                    .iter()
                    .all(|c| c.min.is_finite() && c.min_refined.is_finite())
                && o.boundary_exponents
                    .iter()
                    .all(|b| fit_ok(&b.restricted) && fit_ok(&b.spectral) && fit_ok(&b.restricted_refined))
        });
        let sol_ok = self.solution.as_ref().is_none_or(|s| {
            s.sup_u.is_finite()
                && s.sup_v.is_finite()
                && [s.decay_u, s.decay_v, s.boundary_u].iter().flatten().all(fit_ok)
        });
        op_ok && sol_ok
    }
}

fn sample(f: TestFunction, domain: &ModelDomain) -> Vec<f64> {
    let l = domain.extents()[0];
    domain.grid().axis(0).iter().map(|&x| f.eval(x, l)).collect()
}

fn comparison(f: TestFunction, s: FracOrder, coarse: &ModelDomain, fine: &ModelDomain) -> Result<ComparisonEntry> {
    let a = compare_pointwise(&sample(f, coarse), s, coarse)?;
    let b = compare_pointwise(&sample(f, fine), s, fine)?;
    let tolerance = COMPARISON_TOLERANCE_STEPS * coarse.step(0);
    let slack = (-a.min).max(0.0);
    let slack_refined = (-b.min).max(0.0);
    Ok(ComparisonEntry {
        s: s.value(),
        function: f,
        pointwise_defined: f.pointwise_defined(s.value()),
        min: a.min,
        argmin: a.argmin,
        tolerance,
        min_refined: b.min,
        slack,
        slack_refined,
        holds: a.min >= -tolerance && slack_refined <= slack,
    })
}

fn per_order(s: FracOrder, coarse: &ModelDomain, fine: &ModelDomain) -> Result<(GapEntry, Vec<ComparisonEntry>, BoundaryEntry)> {
    let l = coarse.extents()[0];
    let lambda1 = (std::f64::consts::PI / l).powi(2);
    let spectral = lambda1.powf(s.value());
    let (mu, psi) = lowest_restricted_eigenpair(coarse, s)?;
    let (mu_f, psi_f) = lowest_restricted_eigenpair(fine, s)?;
    let gap = spectral - mu;
    let gap_refined = spectral - mu_f;
    let gaps = GapEntry {
        s: s.value(),
        spectral,
        restricted: mu,
        gap,
        restricted_refined: mu_f,
        gap_refined,
        relative_change: (gap_refined - gap).abs() / gap.abs(),
    };
    let comparisons = TestFunction::ALL
        .iter()
        .map(|&f| comparison(f, s, coarse, fine))
        .collect::<Result<Vec<_>>>()?;
    let boundary = BoundaryEntry {
        s: s.value(),
        restricted: boundary_exponent(&psi, coarse)?,
        restricted_refined: boundary_exponent(&psi_f, fine)?,
        spectral: boundary_exponent(&sample(TestFunction::FirstMode, coarse), coarse)?,
    };
    Ok((gaps, comparisons, boundary))
}

/// Eigenvalue gaps, comparison minima and boundary exponents on the
/// domain's grid and on the grid with twice as many cells. Orders are
/// processed in parallel.
pub fn run_operator_diagnostics(domain: &ModelDomain, orders: &[FracOrder]) -> Result<OperatorDiagnostics> {
    if domain.kind() != DomainKind::Interval {
        return Err(Error::Unsupported(
            "operator diagnostics compare against the restricted operator on intervals".into(),
        ));
    }
    let fine = domain.with_grid_size(2 * domain.grid_size())?;
    let rows = orders
        .par_iter()
        .map(|&s| per_order(s, domain, &fine))
        .collect::<Result<Vec<_>>>()?;
    let mut out = OperatorDiagnostics {
        grid_size: domain.grid_size(),
        family_version: TEST_FAMILY_VERSION.into(),
        eigenvalue_gaps: Vec::new(),
        comparisons: Vec::new(),
        boundary_exponents: Vec::new(),
    };
    for (g, c, b) in rows {
        out.eigenvalue_gaps.push(g);
        out.comparisons.extend(c);
        out.boundary_exponents.push(b);
    }
    Ok(out)
}

/// Fit of `|xi_k| ~ C lambda_k^-sigma` skipping coefficients below
/// `1e-12` of the largest; the returned exponent is `sigma`.
pub fn decay_fit(coeffs: &[f64], eigenvalues: &[f64]) -> Option<ExponentFit> {
    let peak = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if peak == 0.0 {
        return None;
    }
    let (l, c): (Vec<f64>, Vec<f64>) = coeffs
        .iter()
        .zip(eigenvalues)
        .filter(|(c, _)| c.abs() >= 1e-12 * peak)
        .map(|(c, l)| (*l, c.abs()))
        .unzip();
    power_fit(&l, &c).ok().map(|f| ExponentFit {
        exponent: -f.exponent,
        ..f
    })
}

/// Sup norms on the grid, coefficient decay and boundary behavior.
pub fn run_solution_diagnostics(sol: &SaddleSolution, prob: &SystemProblem) -> Result<SolutionDiagnostics> {
    let u = synthesize(&sol.w.u);
    let v = synthesize(&sol.w.v);
    let sup = |x: &[f64]| x.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let lambdas = sol.w.basis().eigenvalues();
    let boundary_u = if prob.domain.kind() == DomainKind::Interval && sup(&u) > 0.0 {
        boundary_exponent(&u, &prob.domain).ok()
    } else {
        None
    };
    Ok(SolutionDiagnostics {
        sup_u: sup(&u),
        sup_v: sup(&v),
        decay_u: decay_fit(sol.w.u.coeffs(), lambdas),
        decay_v: decay_fit(sol.w.v.coeffs(), lambdas),
        boundary_u,
    })
}
