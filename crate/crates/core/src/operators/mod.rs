//! The spectral and restricted fractional Laplacians, their inverses and
//! the norms built on them.
//!
//! Spectral operators act diagonally on [`SpectralField`] coefficients. An
//! eigenbasis produced by [`RestrictedDiscretization::to_basis`] stores
//! `mu_k^(1/s)` as its eigenvalues, so the same diagonal formulas realize
//! the restricted operator in its own discrete eigenbasis.

mod constant;
mod gagliardo;
mod restricted;

use serde::{Deserialize, Serialize};

use crate::basis::SpectralField;
use crate::error::{Error, Result};

pub use constant::normalizing_constant;
pub use gagliardo::gagliardo_seminorm;
pub use restricted::{
    apply_restricted, assemble_restricted, compare_pointwise, lowest_restricted_eigenpair,
    restricted_matrix,
    ComparisonProfile, RestrictedDiscretization,
};

/// Fractional order `s` in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s < 1.0 {
            Ok(FracOrder(s))
        } else {
            Err(Error::invalid("s", format!("0 < s < 1 is required, got {s}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = Error;
    fn try_from(s: f64) -> Result<Self> {
        FracOrder::new(s)
    }
}

impl From<FracOrder> for f64 {
    fn from(s: FracOrder) -> f64 {
        s.0
    }
}

/// Which fractional Laplacian realizes the operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    /// Power of the Dirichlet Laplacian; boundary condition on the boundary.
    Spectral,
    /// Singular integral on zero-extended functions; condition on the
    /// complement. Available on intervals only.
    Restricted,
}

/// Multiply coefficient k by `lambda_k^exponent`.
///
/// `exponent = s` is the operator itself, `s/2` its square root, `-s` its
/// inverse and `alpha/2` the Theta^alpha isometry.
pub fn apply_spectral(field: &SpectralField, exponent: f64) -> SpectralField {
    if exponent == 0.0 {
        return field.clone();
    }
    let lambdas = field.basis().eigenvalues();
    field.map_coeffs(|k, c| c * lambdas[k].powf(exponent))
}

/// The operator of order `s` on the field's basis.
pub fn apply_operator(field: &SpectralField, s: FracOrder) -> SpectralField {
    apply_spectral(field, s.value())
}

/// Inverse operator: division by the operator eigenvalues, which realizes
/// the Green operator without tabulating the kernel.
pub fn apply_inverse(rhs: &SpectralField, s: FracOrder) -> SpectralField {
    apply_spectral(rhs, -s.value())
}

/// The Theta^alpha norm of a truncated field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaNorm {
    pub order: f64,
    pub value: f64,
}

/// `sqrt(sum_k lambda_k^alpha xi_k^2)`; `alpha = 0` is the L² norm.
pub fn theta_norm(field: &SpectralField, alpha: f64) -> Result<ThetaNorm> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::invalid(
            "alpha",
            format!("Theta norm order must be nonnegative, got {alpha}"),
        ));
    }
    let lambdas = field.basis().eigenvalues();
    let sq: f64 = field
        .coeffs()
        .iter()
        .zip(lambdas)
        .map(|(c, l)| l.powf(alpha) * c * c)
        .sum();
    Ok(ThetaNorm {
        order: alpha,
        value: sq.sqrt(),
    })
}

/// Squared dual norm `sum_k c_k^2 / lambda_k^s`.
pub fn dual_norm_sq(field: &SpectralField, s: FracOrder) -> f64 {
    let lambdas = field.basis().eigenvalues();
    field
        .coeffs()
        .iter()
        .zip(lambdas)
        .map(|(c, l)| c * c / l.powf(s.value()))
        .sum()
}
