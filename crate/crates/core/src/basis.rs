//! Model domains, their Dirichlet Laplacian eigenbases, and the transforms
//! between modal coefficients and values on the collocation grid.
//!
//! Grids are uniform with `grid_size` cells per axis. Only interior nodes
//! are stored: boundary nodes carry the homogeneous Dirichlet value and
//! contribute nothing to the composite trapezoid rule, so quadrature on the
//! grid reduces to a constant weight times a plain sum.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of cells per axis.
pub const MIN_GRID_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

/// An interval `(0, l)` or a rectangle `(0, a) x (0, b)` with a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDomain {
    kind: DomainKind,
    extents: Vec<f64>,
    grid_size: usize,
}

impl ModelDomain {
    pub fn new(kind: DomainKind, extents: Vec<f64>, grid_size: usize) -> Result<Self> {
        let expected = match kind {
            DomainKind::Interval => 1,
            DomainKind::Rectangle => 2,
        };
        if extents.len() != expected {
            return Err(Error::invalid(
                "extents",
                format!("{kind:?} needs {expected} extent(s), got {}", extents.len()),
            ));
        }
        if let Some(bad) = extents.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::invalid(
                "extents",
                format!("extents must be strictly positive, got {bad}"),
            ));
        }
        if grid_size < MIN_GRID_SIZE {
            return Err(Error::Resolution(format!(
                "grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}"
            )));
        }
        Ok(ModelDomain {
            kind,
            extents,
            grid_size,
        })
    }

    pub fn interval(length: f64, grid_size: usize) -> Result<Self> {
        Self::new(DomainKind::Interval, vec![length], grid_size)
    }

    pub fn rectangle(width: f64, height: f64, grid_size: usize) -> Result<Self> {
        Self::new(DomainKind::Rectangle, vec![width, height], grid_size)
    }

    pub fn unit_interval(grid_size: usize) -> Result<Self> {
        Self::interval(1.0, grid_size)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    /// Ambient dimension n.
    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    /// Cells per axis.
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Grid step along `axis`.
    pub fn step(&self, axis: usize) -> f64 {
        self.extents[axis] / self.grid_size as f64
    }

    /// The same domain with a different grid.
    pub fn with_grid_size(&self, grid_size: usize) -> Result<Self> {
        Self::new(self.kind, self.extents.clone(), grid_size)
    }

    pub fn grid(&self) -> Grid {
        let axes = (0..self.dimension())
            .map(|axis| {
                let h = self.step(axis);
                (1..self.grid_size).map(|j| j as f64 * h).collect()
            })
            .collect();
        let weight = (0..self.dimension()).map(|a| self.step(a)).product();
        Grid { axes, weight }
    }

    /// Distance from `x` to the boundary.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.extents
            .iter()
            .zip(x)
            .map(|(&l, &xi)| xi.min(l - xi))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Interior nodes of a uniform grid, row-major with the first axis outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
    weight: f64,
}

impl Grid {
    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interior coordinates along one axis.
    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    /// Trapezoid weight carried by every interior node.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        match self.axes.len() {
            1 => vec![self.axes[0][index]],
            _ => {
                let ny = self.axes[1].len();
                vec![self.axes[0][index / ny], self.axes[1][index % ny]]
            }
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Quadrature of grid values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weight * values.iter().sum::<f64>()
    }

    /// Discrete L² inner product.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weight * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }
}

/// Where the eigenpairs of a basis come from.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisSource {
    /// Analytic Dirichlet Laplacian modes with their mode indices
    /// (`(k, 0)` on an interval, `(k1, k2)` on a rectangle).
    Dirichlet { indices: Vec<[usize; 2]> },
    /// Discrete eigenvectors of the restricted fractional Laplacian of
    /// order `order`. The stored eigenvalues are `mu_k^(1/order)`, so that
    /// raising them to `order` recovers the operator eigenvalues `mu_k`.
    Restricted { order: f64, operator_eigenvalues: Vec<f64> },
}

/// Eigenpairs `(lambda_k, phi_k)` sampled on the collocation grid.
///
/// Every spectral formula in the crate is written in terms of
/// `eigenvalues()`: the operator acts by `lambda_k^s` and the Theta^alpha
/// norm weights by `lambda_k^alpha`.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    domain: ModelDomain,
    grid: Grid,
    eigenvalues: Vec<f64>,
    modes: DMatrix<f64>,
    source: BasisSource,
}

impl EigenBasis {
    pub(crate) fn from_parts(
        domain: ModelDomain,
        eigenvalues: Vec<f64>,
        modes: DMatrix<f64>,
        source: BasisSource,
    ) -> Self {
        let grid = domain.grid();
        debug_assert_eq!(modes.nrows(), grid.len());
        debug_assert_eq!(modes.ncols(), eigenvalues.len());
        EigenBasis {
            domain,
            grid,
            eigenvalues,
            modes,
            source,
        }
    }

    pub fn domain(&self) -> &ModelDomain {
        &self.domain
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of modes K.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn source(&self) -> &BasisSource {
        &self.source
    }

    /// Grid samples of all modes, one column per mode.
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    /// Grid samples of mode `k` (zero-based).
    pub fn mode_values(&self, k: usize) -> Vec<f64> {
        self.modes.column(k).iter().copied().collect()
    }

    /// Evaluate eigenfunction `k` (zero-based) at an arbitrary point.
    ///
    /// Analytic modes are exact; restricted modes are interpolated linearly
    /// between grid nodes and vanish outside the domain.
    pub fn eval(&self, k: usize, x: &[f64]) -> f64 {
        match &self.source {
            BasisSource::Dirichlet { indices } => {
                let ext = self.domain.extents();
                let idx = indices[k];
                ext.iter()
                    .zip(x)
                    .zip(idx.iter())
                    .map(|((&l, &xi), &ki)| {
                        (2.0 / l).sqrt() * (ki as f64 * PI * xi / l).sin()
                    })
                    .product()
            }
            BasisSource::Restricted { .. } => {
                let l = self.domain.extents()[0];
                let xi = x[0];
                if xi <= 0.0 || xi >= l {
                    return 0.0;
                }
                let h = self.domain.step(0);
                let pos = xi / h;
                let j = pos.floor() as usize;
                let frac = pos - j as f64;
                let node = |n: usize| {
                    if n == 0 || n >= self.domain.grid_size() {
                        0.0
                    } else {
                        self.modes[(n - 1, k)]
                    }
                };
                (1.0 - frac) * node(j) + frac * node(j + 1)
            }
        }
    }
}

/// Analytic Dirichlet eigenpairs of the domain, sorted ascending with ties
/// broken by lexicographic mode index.
pub fn build_basis(domain: &ModelDomain, count: usize) -> Result<EigenBasis> {
    if count == 0 {
        return Err(Error::invalid("K", "the number of modes must be at least 1"));
    }
    let m = domain.grid_size();
    let ext = domain.extents();
    let mut table: Vec<(f64, [usize; 2])> = match domain.kind() {
        DomainKind::Interval => (1..=count)
            .map(|k| ((k as f64 * PI / ext[0]).powi(2), [k, 0]))
            .collect(),
        DomainKind::Rectangle => {
            let (a2, b2) = (ext[0] * ext[0], ext[1] * ext[1]);
            let mut all = Vec::with_capacity(count * count);
            for k1 in 1..=count {
                for k2 in 1..=count {
                    let (f1, f2) = (k1 as f64, k2 as f64);
                    all.push((PI * PI * (f1 * f1 / a2 + f2 * f2 / b2), [k1, k2]));
                }
            }
            all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            all.truncate(count);
            all
        }
    };
    if let Some((_, idx)) = table.iter().find(|(_, idx)| idx.iter().any(|&k| k >= m)) {
        return Err(Error::Resolution(format!(
            "mode {idx:?} is not resolved by {m} cells per axis (need index <= {})",
            m - 1
        )));
    }
    table.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let grid = domain.grid();
    let indices: Vec<[usize; 2]> = table.iter().map(|t| t.1).collect();
    let source = BasisSource::Dirichlet { indices };
    let eigenvalues: Vec<f64> = table.iter().map(|t| t.0).collect();

    // evaluate through a provisional basis so the closed form lives in one place
    let provisional = EigenBasis {
        domain: domain.clone(),
        grid: grid.clone(),
        eigenvalues: eigenvalues.clone(),
        modes: DMatrix::zeros(0, 0),
        source: source.clone(),
    };
    let points: Vec<Vec<f64>> = grid.points().collect();
    let modes = DMatrix::from_fn(grid.len(), count, |i, k| provisional.eval(k, &points[i]));
    Ok(EigenBasis::from_parts(domain.clone(), eigenvalues, modes, source))
}

/// A function stored by its coefficients in an eigenbasis.
#[derive(Debug, Clone)]
pub struct SpectralField {
    basis: Arc<EigenBasis>,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(basis: Arc<EigenBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::invalid(
                "coefficients",
                format!("expected {} coefficients, got {}", basis.len(), coeffs.len()),
            ));
        }
        Ok(SpectralField { basis, coeffs })
    }

    pub fn zeros(basis: Arc<EigenBasis>) -> Self {
        let n = basis.len();
        SpectralField {
            basis,
            coeffs: vec![0.0; n],
        }
    }

    /// The k-th (zero-based) basis function.
    pub fn unit(basis: Arc<EigenBasis>, k: usize) -> Self {
        let mut f = Self::zeros(basis);
        f.coeffs[k] = 1.0;
        f
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Same basis, new coefficients.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), self.coeffs.len());
        SpectralField {
            basis: Arc::clone(&self.basis),
            coeffs,
        }
    }

    pub fn map_coeffs(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        self.with_coeffs(self.coeffs.iter().enumerate().map(|(k, &c)| f(k, c)).collect())
    }

    /// Euclidean norm of the coefficients (the L² norm of the field).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Point evaluation through the basis evaluator.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * self.basis.eval(k, x))
            .sum()
    }
}

/// Grid values `sum_k xi_k phi_k(x_j)` on the basis grid.
pub fn synthesize(field: &SpectralField) -> Vec<f64> {
    let c = DVector::from_column_slice(field.coeffs());
    (field.basis().modes() * c).iter().copied().collect()
}

/// Quadrature projections `xi_k = int u phi_k` of grid values.
pub fn analyze(values: &[f64], basis: &Arc<EigenBasis>) -> Result<SpectralField> {
    let grid = basis.grid();
    if values.len() != grid.len() {
        return Err(Error::invalid(
            "values",
            format!("expected {} grid values, got {}", grid.len(), values.len()),
        ));
    }
    let v = DVector::from_column_slice(values);
    let coeffs = basis.modes().tr_mul(&v) * grid.weight();
    SpectralField::new(Arc::clone(basis), coeffs.iter().copied().collect())
}
