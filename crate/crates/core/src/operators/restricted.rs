//! Dense discretization of the restricted fractional Laplacian on an
//! interval.
//!
//! At node `x_i` the principal value is split at distance `h`:
//!
//! * `|y - x_i| < h`: symmetric second-difference form,
//!   `-C int_0^h (u(x+z) + u(x-z) - 2u(x)) z^{-1-2s} dz` with the bracket
//!   replaced by `z^2 (u_{i+1} - 2u_i + u_{i-1}) / h^2`;
//! * `|y - x_i| >= h`: `u_i int_{|z|>=h} |z|^{-1-2s} dz` in closed form,
//!   minus the kernel integrated exactly against the piecewise-linear
//!   interpolant of `u`. The zero extension means the exterior only enters
//!   through the first (closed-form) term.
//!
//! The resulting matrix is a symmetric Toeplitz matrix with positive
//! diagonal and summable off-diagonal decay.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{apply_operator, normalizing_constant, FracOrder};
use crate::basis::{
    analyze, build_basis, synthesize, BasisSource, DomainKind, EigenBasis, ModelDomain,
};
use crate::error::{Error, Result};

/// `int_a^b t^{e-1} dt`, stable as `e -> 0`.
fn power_integral(a: f64, b: f64, e: f64) -> f64 {
    let r = (b / a).ln();
    let x = e * r;
    if x.abs() < 1e-8 {
        a.powf(e) * r * (1.0 + 0.5 * x)
    } else {
        a.powf(e) * x.exp_m1() / e
    }
}

/// `int (hat centered at d, unit half-width) * t^{-1-2s} dt` over `t >= 1`,
/// in units of the grid step.
fn hat_weight(d: usize, s: f64) -> f64 {
    let df = d as f64;
    if d == 1 {
        return 2.0 * power_integral(1.0, 2.0, -2.0 * s) - power_integral(1.0, 2.0, 1.0 - 2.0 * s);
    }
    if d >= 8 {
        // binomial expansion of (d + tau)^{-a} against the hat; odd terms vanish
        let a = 1.0 + 2.0 * s;
        let x = 1.0 / (df * df);
        let mut term_coeff = 1.0;
        let mut sum = 0.0;
        let mut xp = 1.0;
        for j in (0..16).step_by(2) {
            let jf = j as f64;
            sum += term_coeff * xp * 2.0 / ((jf + 1.0) * (jf + 2.0));
            // binom(-a, j+2) / binom(-a, j)
            term_coeff *= (a + jf) * (a + jf + 1.0) / ((jf + 1.0) * (jf + 2.0));
            xp *= x;
        }
        return df.powf(-a) * sum;
    }
    power_integral(df - 1.0, df, 1.0 - 2.0 * s) - (df - 1.0) * power_integral(df - 1.0, df, -2.0 * s)
        + (df + 1.0) * power_integral(df, df + 1.0, -2.0 * s)
        - power_integral(df, df + 1.0, 1.0 - 2.0 * s)
}

fn require_interval(domain: &ModelDomain) -> Result<()> {
    if domain.kind() != DomainKind::Interval {
        return Err(Error::Unsupported(
            "the restricted operator is discretized on intervals only".into(),
        ));
    }
    Ok(())
}

/// The `(m-1) x (m-1)` matrix of the restricted operator on the interior
/// nodes.
pub fn restricted_matrix(domain: &ModelDomain, s: FracOrder) -> Result<DMatrix<f64>> {
    require_interval(domain)?;
    let m = domain.grid_size();
    let sv = s.value();
    let h = domain.step(0);
    let scale = normalizing_constant(1, s)? * h.powf(-2.0 * sv);
    let n = m - 1;
    let mut column = vec![0.0; n];
    column[0] = 1.0 / sv + 1.0 / (1.0 - sv);
    if n > 1 {
        column[1] = -1.0 / (2.0 - 2.0 * sv) - hat_weight(1, sv);
    }
    for (d, c) in column.iter_mut().enumerate().skip(2) {
        *c = -hat_weight(d, sv);
    }
    Ok(DMatrix::from_fn(n, n, |i, j| scale * column[i.abs_diff(j)]))
}

/// Apply the restricted operator to interior grid values without an
/// eigensolve.
pub fn apply_restricted(domain: &ModelDomain, s: FracOrder, values: &[f64]) -> Result<Vec<f64>> {
    let a = restricted_matrix(domain, s)?;
    if values.len() != a.nrows() {
        return Err(Error::invalid(
            "values",
            format!("expected {} interior values, got {}", a.nrows(), values.len()),
        ));
    }
    Ok((a * DVector::from_column_slice(values)).iter().copied().collect())
}

/// Matrix, eigenvalues `mu_1 <= mu_2 <= ...` and grid-normalized
/// eigenvectors of the restricted operator.
#[derive(Debug, Clone)]
pub struct RestrictedDiscretization {
    domain: ModelDomain,
    order: FracOrder,
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Assemble the dense matrix and diagonalize it.
pub fn assemble_restricted(domain: &ModelDomain, s: FracOrder) -> Result<RestrictedDiscretization> {
    let matrix = restricted_matrix(domain, s)?;
    let h = domain.step(0);
    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = matrix.nrows();
    let norm = 1.0 / h.sqrt();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let peak = col.amax();
        let lead = col.iter().find(|v| v.abs() > 1e-6 * peak).copied().unwrap_or(1.0);
        let sign = lead.signum();
        eigenvectors.set_column(dst, &(col * (sign * norm / col.norm())));
    }
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    Ok(RestrictedDiscretization {
        domain: domain.clone(),
        order: s,
        matrix,
        eigenvalues,
        eigenvectors,
    })
}

impl RestrictedDiscretization {
    pub fn domain(&self) -> &ModelDomain {
        &self.domain
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    pub fn step(&self) -> f64 {
        self.domain.step(0)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector k (zero-based), normalized so `h sum psi^2 = 1`.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(values))
            .iter()
            .copied()
            .collect()
    }

    /// The first `count` discrete eigenpairs as an [`EigenBasis`] whose
    /// eigenvalues are `mu_k^(1/s)`.
    pub fn to_basis(&self, count: usize) -> Result<EigenBasis> {
        let n = self.eigenvalues.len();
        if count == 0 || count > n {
            return Err(Error::Resolution(format!(
                "requested {count} restricted modes but the grid carries {n}"
            )));
        }
        let s = self.order.value();
        let mu: Vec<f64> = self.eigenvalues[..count].to_vec();
        let base = mu.iter().map(|m| m.powf(1.0 / s)).collect();
        let modes = self.eigenvectors.columns(0, count).into_owned();
        Ok(EigenBasis::from_parts(
            self.domain.clone(),
            base,
            modes,
            BasisSource::Restricted {
                order: s,
                operator_eigenvalues: mu,
            },
        ))
    }
}

/// Smallest eigenvalue `mu_1` and its eigenvector, positive and normalized
/// so that `h sum psi^2 = 1`, by inverse iteration on the Cholesky factor.
/// Avoids the full eigensolve on fine grids.
pub fn lowest_restricted_eigenpair(domain: &ModelDomain, s: FracOrder) -> Result<(f64, Vec<f64>)> {
    let a = restricted_matrix(domain, s)?;
    let n = a.nrows();
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("restricted matrix is not positive definite".into()))?;
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut mu = f64::NAN;
    for _ in 0..1000 {
        let y = chol.solve(&x);
        let next = &y / y.norm();
        let change = (&next - &x).norm();
        x = next;
        mu = x.dot(&(&a * &x));
        if change <= 1e-14 {
            let h = domain.step(0);
            let sign = x.sum().signum();
            let psi = x.iter().map(|v| sign * v / h.sqrt()).collect();
            return Ok((mu, psi));
        }
    }
    Err(Error::Accuracy {
        estimate: mu,
        error_estimate: f64::NAN,
    })
}

/// Pointwise difference between the spectral and restricted operators
/// applied to the same nonnegative grid function.
#[derive(Debug, Clone)]
pub struct ComparisonProfile {
    pub points: Vec<f64>,
    pub difference: Vec<f64>,
    pub min: f64,
    pub argmin: f64,
}

/// `A^s u - (-Delta)^s u` on the interior grid. The spectral side goes
/// through the full sine basis the grid resolves.
pub fn compare_pointwise(values: &[f64], s: FracOrder, domain: &ModelDomain) -> Result<ComparisonProfile> {
    require_interval(domain)?;
    if let Some(bad) = values.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(Error::Precondition(format!(
            "comparison requires a nonnegative function, found value {bad}"
        )));
    }
    let basis = Arc::new(build_basis(domain, domain.grid_size() - 1)?);
    let spectral = synthesize(&apply_operator(&analyze(values, &basis)?, s));
    let restricted = apply_restricted(domain, s, values)?;
    let points: Vec<f64> = basis.grid().axis(0).to_vec();
    let difference: Vec<f64> = spectral.iter().zip(&restricted).map(|(a, b)| a - b).collect();
    let (imin, min) = difference
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    Ok(ComparisonProfile {
        argmin: points.get(imin).copied().unwrap_or(0.0),
        points,
        difference,
        min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn order(s: f64) -> FracOrder {
        FracOrder::new(s).unwrap()
    }

    #[test]
    fn hat_weights_match_direct_formula_at_the_series_switch() {
        // the closed form and the series must agree where they hand over
        for s in [0.1, 0.5, 0.9] {
            let d = 8.0f64;
            let closed = power_integral(d - 1.0, d, 1.0 - 2.0 * s)
                - (d - 1.0) * power_integral(d - 1.0, d, -2.0 * s)
                + (d + 1.0) * power_integral(d, d + 1.0, -2.0 * s)
                - power_integral(d, d + 1.0, 1.0 - 2.0 * s);
            assert!((closed - hat_weight(8, s)).abs() < 1e-12 * closed);
        }
    }

    #[test]
    fn power_integral_is_continuous_through_log_case() {
        let l = power_integral(1.0, 3.0, 0.0);
        assert!((l - 3f64.ln()).abs() < 1e-15);
        assert!((power_integral(1.0, 3.0, 1e-12) - l).abs() < 1e-11);
        assert!((power_integral(2.0, 5.0, 2.0) - (25.0 - 4.0) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn zero_input_maps_to_zero_and_matrix_is_symmetric() {
        let d = ModelDomain::unit_interval(64).unwrap();
        let a = restricted_matrix(&d, order(0.4)).unwrap();
        assert!((&a - a.transpose()).abs().max() < 1e-12);
        let out = apply_restricted(&d, order(0.4), &vec![0.0; 63]).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rows_of_infinite_grid_sum_to_zero() {
        // the Toeplitz symbol at zero frequency vanishes: constants are s-harmonic
        for s in [0.2, 0.5, 0.8] {
            let mut total = 1.0 / s + 1.0 / (1.0 - s) - 2.0 / (2.0 - 2.0 * s);
            let mut d = 1usize;
            while d < 2_000_000 {
                total -= 2.0 * hat_weight(d, s);
                d += 1;
            }
            // remaining tail ~ 2 int_d^inf t^{-1-2s}
            total -= (d as f64).powf(-2.0 * s) / s;
            assert!(total.abs() < 1e-6, "s={s}: {total}");
        }
    }

    #[test]
    fn too_coarse_or_wrong_domain_is_rejected() {
        assert!(ModelDomain::unit_interval(8).is_err());
        let sq = ModelDomain::rectangle(1.0, 1.0, 32).unwrap();
        assert!(matches!(restricted_matrix(&sq, order(0.5)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn eigenpairs_are_orthonormal_and_positive() {
        let d = ModelDomain::unit_interval(64).unwrap();
        let r = assemble_restricted(&d, order(0.5)).unwrap();
        let mu = r.eigenvalues();
        assert!(mu[0] > 0.0 && mu[0] < mu[1]);
        assert!(mu.windows(2).all(|w| w[0] <= w[1]));
        let h = r.step();
        let n = mu.len();
        let v = &r.eigenvectors;
        let gram = v.tr_mul(v) * h;
        assert!((gram - DMatrix::identity(n, n)).abs().max() < 1e-8);
        // first eigenvector has one sign
        assert!(r.eigenvector(0).iter().all(|&x| x > 0.0));
    }

    #[test]
    fn inverse_iteration_matches_full_eigensolve() {
        let d = ModelDomain::unit_interval(96).unwrap();
        for s in [0.25, 0.75] {
            let r = assemble_restricted(&d, order(s)).unwrap();
            let (mu, psi) = lowest_restricted_eigenpair(&d, order(s)).unwrap();
            assert!((mu - r.eigenvalues()[0]).abs() < 1e-12 * mu);
            let full = r.eigenvector(0);
            assert!(psi.iter().zip(&full).all(|(a, b)| (a - b).abs() < 1e-8));
        }
    }

    #[test]
    fn first_eigenvalue_is_below_spectral_one() {
        let d = ModelDomain::unit_interval(128).unwrap();
        let r = assemble_restricted(&d, order(0.5)).unwrap();
        assert!(r.eigenvalues()[0] < PI);
    }

    #[test]
    fn near_one_order_approaches_classical_laplacian() {
        // (-Delta)^{0.99} sin(pi x) -> pi^2 sin(pi x) away from the boundary
        let mut errors = Vec::new();
        for m in [64, 256, 1024] {
            let d = ModelDomain::unit_interval(m).unwrap();
            let x = d.grid().axis(0).to_vec();
            let u: Vec<f64> = x.iter().map(|x| (PI * x).sin()).collect();
            let au = apply_restricted(&d, order(0.99), &u).unwrap();
            let err = x
                .iter()
                .zip(&au)
                .zip(&u)
                .filter(|((x, _), _)| (0.25..=0.75).contains(*x))
                .map(|((_, a), u)| (a - PI * PI * u).abs() / (PI * PI * u))
                .fold(0.0, f64::max);
            errors.push(err);
        }
        assert!(errors[2] < 0.05, "{errors:?}");
        assert!(errors[2] <= errors[0], "{errors:?}");
    }

    #[test]
    fn restricted_basis_reproduces_operator_eigenvalues() {
        let d = ModelDomain::unit_interval(48).unwrap();
        let s = order(0.3);
        let r = assemble_restricted(&d, s).unwrap();
        let b = r.to_basis(10).unwrap();
        for (lam, mu) in b.eigenvalues().iter().zip(r.eigenvalues()) {
            assert!((lam.powf(0.3) - mu).abs() < 1e-12 * mu);
        }
        assert!(r.to_basis(48).is_err());
        // interpolating evaluator hits the grid samples
        let x = b.grid().point(5);
        assert!((b.eval(0, &x) - b.mode_values(0)[5]).abs() < 1e-12);
        assert_eq!(b.eval(0, &[0.0]), 0.0);
    }

    #[test]
    fn comparison_rejects_negative_input() {
        let d = ModelDomain::unit_interval(32).unwrap();
        let mut u = vec![1.0; 31];
        u[3] = -1e-3;
        assert!(matches!(
            compare_pointwise(&u, order(0.5), &d),
            Err(Error::Precondition(_))
        ));
        let z = compare_pointwise(&vec![0.0; 31], order(0.5), &d).unwrap();
        assert!(z.difference.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn comparison_is_nonnegative_for_first_mode_at_half_order() {
        let m = 256;
        let d = ModelDomain::unit_interval(m).unwrap();
        let u: Vec<f64> = d.grid().axis(0).iter().map(|x| 2f64.sqrt() * (PI * x).sin()).collect();
        let prof = compare_pointwise(&u, order(0.5), &d).unwrap();
        assert!(prof.min > -d.step(0), "min {}", prof.min);
    }

    #[test]
    fn parabola_comparison_sign_is_stable_under_refinement() {
        for s in [0.3, 0.7] {
            let mins: Vec<f64> = [128, 256]
                .iter()
                .map(|&m| {
                    let d = ModelDomain::unit_interval(m).unwrap();
                    let u: Vec<f64> = d.grid().axis(0).iter().map(|x| x * (1.0 - x)).collect();
                    compare_pointwise(&u, order(s), &d).unwrap().min
                })
                .collect();
            assert_eq!(mins[0].signum(), mins[1].signum(), "s={s}: {mins:?}");
            assert!(mins[1] > 0.0);
        }
    }
}
