//! The truncated Lagrangian of the Hamiltonian system
//! `A^s u = mu v + |v|^(p-1) v`, `A^s v = lambda u + |u|^(q-1) u` on K modes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::basis::{build_basis, DomainKind, EigenBasis, ModelDomain, SpectralField, MIN_GRID_SIZE};
use crate::error::{Error, Result};
use crate::indefinite::{CouplingParams, SpaceSplit, Subspace};
use crate::operators::{assemble_restricted, FracOrder, OperatorKind};
use crate::solver::gate;

/// Default truncation on intervals.
pub const DEFAULT_MODES_1D: usize = 32;
/// Default truncation on rectangles.
pub const DEFAULT_MODES_2D: usize = 64;
/// Cells per axis on rectangles unless configured.
pub const DEFAULT_GRID_2D: usize = 64;

/// Cells per axis used for `modes` modes when the grid is not configured.
pub fn default_grid_size(kind: DomainKind, modes: usize) -> usize {
    match kind {
        DomainKind::Interval => (4 * modes).max(MIN_GRID_SIZE),
        DomainKind::Rectangle => DEFAULT_GRID_2D,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemProblem {
    pub domain: ModelDomain,
    pub operator: OperatorKind,
    pub s: FracOrder,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    /// Truncation K.
    pub modes: usize,
}

impl SystemProblem {
    /// Uncoupled problem (`lambda = mu = 0`) with `alpha` at the middle of
    /// the admissible window.
    pub fn new(
        domain: ModelDomain,
        operator: OperatorKind,
        s: FracOrder,
        p: f64,
        q: f64,
        modes: usize,
    ) -> Result<Self> {
        let mut prob = SystemProblem {
            domain,
            operator,
            s,
            p,
            q,
            lambda: 0.0,
            mu: 0.0,
            alpha: s.value(),
            modes,
        };
        prob.alpha = gate(&prob)?.suggested_alpha;
        prob.validate()?;
        Ok(prob)
    }

    /// n = 1, s = 1/2, p = q = 3, lambda = mu = 0, K = 32 on (0, 1).
    pub fn reference() -> Self {
        let domain = ModelDomain::unit_interval(default_grid_size(DomainKind::Interval, 32))
            .expect("valid grid");
        SystemProblem::new(
            domain,
            OperatorKind::Spectral,
            FracOrder::new(0.5).expect("valid order"),
            3.0,
            3.0,
            32,
        )
        .expect("valid reference problem")
    }

    pub fn with_coupling(mut self, lambda: f64, mu: f64) -> Result<Self> {
        self.lambda = lambda;
        self.mu = mu;
        self.validate()?;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn with_order(mut self, s: FracOrder) -> Result<Self> {
        self.s = s;
        self.validate()?;
        Ok(self)
    }

    /// Same problem on K modes with the default grid for K.
    pub fn with_modes(mut self, modes: usize) -> Result<Self> {
        let m = default_grid_size(self.domain.kind(), modes);
        self.domain = self.domain.with_grid_size(m.max(self.domain.grid_size()))?;
        self.modes = modes;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::invalid("p", format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(Error::invalid("q", format!("q must exceed 1, got {}", self.q)));
        }
        if self.modes == 0 {
            return Err(Error::invalid("K", "the number of modes must be at least 1"));
        }
        if self.operator == OperatorKind::Restricted && self.domain.kind() != DomainKind::Interval {
            return Err(Error::Unsupported(
                "the restricted operator is discretized on intervals only".into(),
            ));
        }
        self.coupling()?;
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn coupling(&self) -> Result<CouplingParams> {
        CouplingParams::new(self.lambda, self.mu, self.alpha, self.s)
    }

    /// The K-mode eigenbasis of the configured operator.
    pub fn basis(&self) -> Result<Arc<EigenBasis>> {
        let basis = match self.operator {
            OperatorKind::Spectral => build_basis(&self.domain, self.modes)?,
            OperatorKind::Restricted => {
                assemble_restricted(&self.domain, self.s)?.to_basis(self.modes)?
            }
        };
        Ok(Arc::new(basis))
    }
}

/// An element `(u, v)` of the truncated product space.
#[derive(Debug, Clone)]
pub struct PairField {
    pub u: SpectralField,
    pub v: SpectralField,
}

impl PairField {
    pub fn new(u: SpectralField, v: SpectralField) -> Result<Self> {
        if !Arc::ptr_eq(u.basis(), v.basis()) && u.basis().eigenvalues() != v.basis().eigenvalues() {
            return Err(Error::invalid("pair", "u and v must share one basis"));
        }
        Ok(PairField { u, v })
    }

    pub fn zeros(basis: &Arc<EigenBasis>) -> Self {
        PairField {
            u: SpectralField::zeros(Arc::clone(basis)),
            v: SpectralField::zeros(Arc::clone(basis)),
        }
    }

    /// From stacked coefficients `[u_1..u_K, v_1..v_K]`.
    pub fn from_stacked(basis: &Arc<EigenBasis>, x: &[f64]) -> Result<Self> {
        let k = basis.len();
        if x.len() != 2 * k {
            return Err(Error::invalid(
                "coefficients",
                format!("expected {} stacked coefficients, got {}", 2 * k, x.len()),
            ));
        }
        Ok(PairField {
            u: SpectralField::new(Arc::clone(basis), x[..k].to_vec())?,
            v: SpectralField::new(Arc::clone(basis), x[k..].to_vec())?,
        })
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut x = self.u.coeffs().to_vec();
        x.extend_from_slice(self.v.coeffs());
        x
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        self.u.basis()
    }

    pub fn len(&self) -> usize {
        self.u.coeffs().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scaled(&self, t: f64) -> Self {
        PairField {
            u: self.u.map_coeffs(|_, c| t * c),
            v: self.v.map_coeffs(|_, c| t * c),
        }
    }

    /// `self + t other`.
    pub fn axpy(&self, t: f64, other: &PairField) -> Self {
        let ou = other.u.coeffs();
        let ov = other.v.coeffs();
        PairField {
            u: self.u.map_coeffs(|k, c| c + t * ou[k]),
            v: self.v.map_coeffs(|k, c| c + t * ov[k]),
        }
    }

    /// Component in one subspace of the block splitting.
    pub fn component(&self, split: &SpaceSplit, part: Subspace) -> Result<Self> {
        let (u, v) = split.project(self.u.coeffs(), self.v.coeffs(), part)?;
        Ok(PairField {
            u: self.u.with_coeffs(u),
            v: self.v.with_coeffs(v),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.u.coeffs().iter().chain(self.v.coeffs()).all(|&c| c == 0.0)
    }
}

/// `|z|^(r-1) z`.
pub fn signed_power(z: f64, r: f64) -> f64 {
    z.abs().powf(r - 1.0) * z
}

fn check_basis(w: &PairField, prob: &SystemProblem) -> Result<()> {
    if w.len() != prob.modes {
        return Err(Error::invalid(
            "pair",
            format!("field has {} modes, problem has {}", w.len(), prob.modes),
        ));
    }
    Ok(())
}

fn op_powers(basis: &EigenBasis, exponent: f64) -> Vec<f64> {
    basis.eigenvalues().iter().map(|l| l.powf(exponent)).collect()
}

fn grid_values(f: &SpectralField) -> DVector<f64> {
    f.basis().modes() * DVector::from_column_slice(f.coeffs())
}

/// `(1/(p+1)) int |v|^(p+1) + (1/(q+1)) int |u|^(q+1)` by grid quadrature.
pub fn hamiltonian(w: &PairField, prob: &SystemProblem) -> Result<f64> {
    check_basis(w, prob)?;
    let grid = w.basis().grid();
    let (p, q) = (prob.p, prob.q);
    let hv: f64 = grid_values(&w.v).iter().map(|z| z.abs().powf(p + 1.0)).sum();
    let hu: f64 = grid_values(&w.u).iter().map(|z| z.abs().powf(q + 1.0)).sum();
    Ok(grid.weight() * (hv / (p + 1.0) + hu / (q + 1.0)))
}

/// `B(w1, w2) = sum lambda_k^s (u1 v2 + v1 u2) - lambda u1 u2 - mu v1 v2`.
pub fn bilinear(w1: &PairField, w2: &PairField, prob: &SystemProblem) -> Result<f64> {
    check_basis(w1, prob)?;
    check_basis(w2, prob)?;
    let ls = op_powers(w1.basis(), prob.s.value());
    let (u1, v1, u2, v2) = (w1.u.coeffs(), w1.v.coeffs(), w2.u.coeffs(), w2.v.coeffs());
    Ok((0..ls.len())
        .map(|k| {
            ls[k] * (u1[k] * v2[k] + v1[k] * u2[k]) - prob.lambda * u1[k] * u2[k]
                - prob.mu * v1[k] * v2[k]
        })
        .sum())
}

/// `A(w) = B(w, w) / 2`.
pub fn quadratic_part(w: &PairField, prob: &SystemProblem) -> Result<f64> {
    Ok(0.5 * bilinear(w, w, prob)?)
}

/// `J = A - H`.
pub fn lagrangian(w: &PairField, prob: &SystemProblem) -> Result<f64> {
    Ok(quadratic_part(w, prob)? - hamiltonian(w, prob)?)
}

/// Coefficients of the derivative of `J`, stacked as `[G_u, G_v]`:
/// `G_u = lambda_k^s v - lambda u - <|u|^(q-1) u, phi_k>` and symmetrically.
pub fn gradient(w: &PairField, prob: &SystemProblem) -> Result<Vec<f64>> {
    check_basis(w, prob)?;
    let basis = w.basis();
    let weight = basis.grid().weight();
    let ls = op_powers(basis, prob.s.value());
    let nu = grid_values(&w.u).map(|z| signed_power(z, prob.q));
    let nv = grid_values(&w.v).map(|z| signed_power(z, prob.p));
    let pu = basis.modes().tr_mul(&nu) * weight;
    let pv = basis.modes().tr_mul(&nv) * weight;
    let (u, v) = (w.u.coeffs(), w.v.coeffs());
    let k = ls.len();
    let mut g = vec![0.0; 2 * k];
    for j in 0..k {
        g[j] = ls[j] * v[j] - prob.lambda * u[j] - pu[j];
        g[k + j] = ls[j] * u[j] - prob.mu * v[j] - pv[j];
    }
    Ok(g)
}

/// Symmetric Hessian of `J`:
/// `[[-lambda I - Q_u, D], [D, -mu I - Q_v]]` with `D = diag(lambda_k^s)` and
/// `Q_u[k, l] = q int |u|^(q-1) phi_k phi_l`.
pub fn jacobian(w: &PairField, prob: &SystemProblem) -> Result<DMatrix<f64>> {
    check_basis(w, prob)?;
    let basis = w.basis();
    let weight = basis.grid().weight();
    let modes = basis.modes();
    let ls = op_powers(basis, prob.s.value());
    let k = ls.len();
    let linearized = |f: &SpectralField, r: f64| -> DMatrix<f64> {
        let d = grid_values(f).map(|z| r * z.abs().powf(r - 1.0) * weight);
        let mut scaled = modes.clone();
        for (mut row, di) in scaled.row_iter_mut().zip(d.iter()) {
            row *= *di;
        }
        modes.tr_mul(&scaled)
    };
    let qu = linearized(&w.u, prob.q);
    let qv = linearized(&w.v, prob.p);
    let mut jac = DMatrix::zeros(2 * k, 2 * k);
    jac.view_mut((0, 0), (k, k)).copy_from(&(-qu));
    jac.view_mut((k, k), (k, k)).copy_from(&(-qv));
    for j in 0..k {
        jac[(j, j)] -= prob.lambda;
        jac[(k + j, k + j)] -= prob.mu;
        jac[(j, k + j)] = ls[j];
        jac[(k + j, j)] = ls[j];
    }
    Ok(jac)
}

/// Norm of stacked gradient coefficients in the dual of `E^alpha`:
/// `sqrt(sum lambda_k^-alpha G_u^2 + lambda_k^(alpha - 2s) G_v^2)`.
pub fn dual_residual(g: &[f64], basis: &EigenBasis, prob: &SystemProblem) -> f64 {
    let k = basis.len();
    let s = prob.s.value();
    basis
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(j, l)| {
            l.powf(-prob.alpha) * g[j] * g[j] + l.powf(prob.alpha - 2.0 * s) * g[k + j] * g[k + j]
        })
        .sum::<f64>()
        .sqrt()
}

/// `||w||_{E^alpha}`.
pub fn energy_norm(w: &PairField, prob: &SystemProblem) -> f64 {
    let s = prob.s.value();
    w.basis()
        .eigenvalues()
        .iter()
        .zip(w.u.coeffs().iter().zip(w.v.coeffs()))
        .map(|(l, (u, v))| l.powf(prob.alpha) * u * u + l.powf(2.0 * s - prob.alpha) * v * v)
        .sum::<f64>()
        .sqrt()
}
