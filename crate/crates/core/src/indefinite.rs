//! Per-mode analysis of the quadratic part of the Lagrangian.
//!
//! On the two-dimensional mode space `E_k` the coordinates used here are
//! `x = lambda_k^(alpha/2) u_k` and `y = lambda_k^(s - alpha/2) v_k`. The
//! frame `{(lambda_k^(-alpha/2) phi_k, 0), (0, lambda_k^(alpha/2 - s) phi_k)}`
//! is orthonormal in `E^alpha`, and in it the block operator is the matrix
//! `L^k = [[-a, 1], [1, -b]]` with `a = lambda lambda_k^-alpha` and
//! `b = mu lambda_k^(alpha - 2s)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::EigenBasis;
use crate::error::{Error, Result};
use crate::operators::FracOrder;

/// Relative tolerance of the resonance test `|lambda mu - lambda_k^2s|`.
pub const RESONANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub s: FracOrder,
}

impl CouplingParams {
    pub fn new(lambda: f64, mu: f64, alpha: f64, s: FracOrder) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite()) {
            return Err(Error::invalid("lambda/mu", "coupling constants must be finite"));
        }
        if !(alpha > 0.0 && alpha < 2.0 * s.value()) {
            return Err(Error::invalid(
                "alpha",
                format!("0 < alpha < 2s is required, got alpha = {alpha}, s = {}", s.value()),
            ));
        }
        Ok(CouplingParams { lambda, mu, alpha, s })
    }

    /// `|lambda mu - lambda_k^2s| <= tol (1 + lambda_k^2s)`.
    pub fn is_resonant(&self, lambda_k: f64) -> bool {
        let l2s = lambda_k.powf(2.0 * self.s.value());
        (self.lambda * self.mu - l2s).abs() <= RESONANCE_TOL * (1.0 + l2s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeClass {
    Hyperbolic,
    ResonantPlus,
    ResonantMinus,
    DefinitePos,
    DefiniteNeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeAnalysis {
    pub mode: usize,
    pub lambda_k: f64,
    pub a: f64,
    pub b: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub eigvec_plus: [f64; 2],
    pub eigvec_minus: [f64; 2],
    pub class: ModeClass,
}

impl ModeAnalysis {
    pub fn nu(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.nu_plus,
            Branch::Minus => self.nu_minus,
        }
    }

    pub fn eigvec(&self, branch: Branch) -> [f64; 2] {
        match branch {
            Branch::Plus => self.eigvec_plus,
            Branch::Minus => self.eigvec_minus,
        }
    }

    /// Eigenvalues of `L^k` deviate from `+1` and `-1` by this much.
    pub fn limit_deviation(&self) -> f64 {
        (self.nu_plus - 1.0).abs().max((self.nu_minus + 1.0).abs())
    }
}

/// Analyze mode `k` (0-based) with Dirichlet/operator eigenvalue `lambda_k`.
///
/// The eigenvalues follow the closed form; the root without cancellation is
/// evaluated first and the other recovered from the determinant `ab - 1`.
pub fn analyze_mode(k: usize, lambda_k: f64, params: &CouplingParams) -> Result<ModeAnalysis> {
    if !(lambda_k > 0.0 && lambda_k.is_finite()) {
        return Err(Error::invalid(
            "lambda_k",
            format!("eigenvalue must be positive, got {lambda_k}"),
        ));
    }
    let s = params.s.value();
    let a = params.lambda * lambda_k.powf(-params.alpha);
    let b = params.mu * lambda_k.powf(params.alpha - 2.0 * s);
    let half_sum = 0.5 * (a + b);
    let half_diff = 0.5 * (a - b);
    let root = half_diff.hypot(1.0);
    let det = a * b - 1.0;
    let (nu_plus, nu_minus) = if half_sum >= 0.0 {
        let minus = -half_sum - root;
        (det / minus, minus)
    } else {
        let plus = -half_sum + root;
        (plus, det / plus)
    };

    // y_+ = (a - b)/2 + root > 0 and y_- = -1 / y_+
    let y_plus = if half_diff >= 0.0 {
        half_diff + root
    } else {
        1.0 / (root - half_diff)
    };
    let norm = y_plus.hypot(1.0);
    let eigvec_plus = [1.0 / norm, y_plus / norm];
    let eigvec_minus = [y_plus / norm, -1.0 / norm];

    let class = if params.is_resonant(lambda_k) {
        if params.lambda > 0.0 {
            ModeClass::ResonantPlus
        } else {
            ModeClass::ResonantMinus
        }
    } else if params.lambda * params.mu < lambda_k.powf(2.0 * s) {
        ModeClass::Hyperbolic
    } else if params.lambda > 0.0 {
        ModeClass::DefiniteNeg
    } else {
        ModeClass::DefinitePos
    };

    Ok(ModeAnalysis {
        mode: k,
        lambda_k,
        a,
        b,
        nu_plus,
        nu_minus,
        eigvec_plus,
        eigvec_minus,
        class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// One eigendirection of the block operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Direction {
    pub mode: usize,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subspace {
    Positive,
    Negative,
    Null,
}

/// The splitting `E^+ + E^- + E^0` of a K-mode truncation.
#[derive(Debug, Clone, Serialize)]
pub struct SpaceSplit {
    pub params: CouplingParams,
    pub modes: Vec<ModeAnalysis>,
    pub positive: Vec<Direction>,
    pub negative: Vec<Direction>,
    pub null: Vec<Direction>,
}

fn assign(class: ModeClass, branch: Branch) -> Subspace {
    use ModeClass::*;
    match (class, branch) {
        (Hyperbolic, Branch::Plus) => Subspace::Positive,
        (Hyperbolic, Branch::Minus) => Subspace::Negative,
        (DefinitePos, _) => Subspace::Positive,
        (DefiniteNeg, _) => Subspace::Negative,
        (ResonantPlus, Branch::Plus) => Subspace::Null,
        (ResonantPlus, Branch::Minus) => Subspace::Negative,
        (ResonantMinus, Branch::Plus) => Subspace::Positive,
        (ResonantMinus, Branch::Minus) => Subspace::Null,
    }
}

/// Analyze the first `count` modes of `basis` and sort the 2K directions.
pub fn build_split(basis: &EigenBasis, params: &CouplingParams, count: usize) -> Result<SpaceSplit> {
    if count == 0 || count > basis.len() {
        return Err(Error::invalid(
            "count",
            format!("need 1 <= K <= {}, got {count}", basis.len()),
        ));
    }
    split_from_eigenvalues(&basis.eigenvalues()[..count], params)
}

/// Same as [`build_split`] from a list of eigenvalues.
pub fn split_from_eigenvalues(lambdas: &[f64], params: &CouplingParams) -> Result<SpaceSplit> {
    let modes = lambdas
        .par_iter()
        .enumerate()
        .map(|(k, &l)| analyze_mode(k, l, params))
        .collect::<Result<Vec<_>>>()?;
    let mut split = SpaceSplit {
        params: *params,
        modes,
        positive: Vec::new(),
        negative: Vec::new(),
        null: Vec::new(),
    };
    for m in &split.modes {
        for branch in [Branch::Plus, Branch::Minus] {
            let dir = Direction { mode: m.mode, branch };
            match assign(m.class, branch) {
                Subspace::Positive => split.positive.push(dir),
                Subspace::Negative => split.negative.push(dir),
                Subspace::Null => split.null.push(dir),
            }
        }
    }
    Ok(split)
}

impl SpaceSplit {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn null_dimension(&self) -> usize {
        self.null.len()
    }

    pub fn subspace_of(&self, dir: Direction) -> Subspace {
        assign(self.modes[dir.mode].class, dir.branch)
    }

    /// `max |nu| / min |nu|` over the truncation; infinite at resonance.
    pub fn condition_number(&self) -> f64 {
        let (lo, hi) = self
            .modes
            .iter()
            .flat_map(|m| [m.nu_plus.abs(), m.nu_minus.abs()])
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    fn frame_scales(&self, m: &ModeAnalysis) -> (f64, f64) {
        let s = self.params.s.value();
        let alpha = self.params.alpha;
        (m.lambda_k.powf(0.5 * alpha), m.lambda_k.powf(s - 0.5 * alpha))
    }

    /// Coefficients `(u_k, v_k)` to eigen-coordinates `[c_plus, c_minus]`.
    pub fn to_eigen(&self, u: &[f64], v: &[f64]) -> Result<Vec<[f64; 2]>> {
        self.check_len(u.len(), v.len())?;
        Ok(self
            .modes
            .iter()
            .map(|m| {
                let (sx, sy) = self.frame_scales(m);
                let (x, y) = (sx * u[m.mode], sy * v[m.mode]);
                [
                    m.eigvec_plus[0] * x + m.eigvec_plus[1] * y,
                    m.eigvec_minus[0] * x + m.eigvec_minus[1] * y,
                ]
            })
            .collect())
    }

    /// Inverse of [`SpaceSplit::to_eigen`].
    pub fn from_eigen(&self, coords: &[[f64; 2]]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(coords.len(), coords.len())?;
        let mut u = vec![0.0; self.len()];
        let mut v = vec![0.0; self.len()];
        for (m, c) in self.modes.iter().zip(coords) {
            let (sx, sy) = self.frame_scales(m);
            let x = m.eigvec_plus[0] * c[0] + m.eigvec_minus[0] * c[1];
            let y = m.eigvec_plus[1] * c[0] + m.eigvec_minus[1] * c[1];
            u[m.mode] = x / sx;
            v[m.mode] = y / sy;
        }
        Ok((u, v))
    }

    /// Coefficients of the component of `(u, v)` in one subspace.
    pub fn project(&self, u: &[f64], v: &[f64], part: Subspace) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut coords = self.to_eigen(u, v)?;
        for (m, c) in self.modes.iter().zip(coords.iter_mut()) {
            if assign(m.class, Branch::Plus) != part {
                c[0] = 0.0;
            }
            if assign(m.class, Branch::Minus) != part {
                c[1] = 0.0;
            }
        }
        self.from_eigen(&coords)
    }

    /// Pair of coefficient vectors along one eigendirection, unit in `E^alpha`.
    pub fn direction_coeffs(&self, dir: Direction) -> (Vec<f64>, Vec<f64>) {
        let mut coords = vec![[0.0; 2]; self.len()];
        coords[dir.mode][match dir.branch {
            Branch::Plus => 0,
            Branch::Minus => 1,
        }] = 1.0;
        self.from_eigen(&coords).expect("coordinate length matches")
    }

    fn check_len(&self, nu: usize, nv: usize) -> Result<()> {
        if nu != self.len() || nv != self.len() {
            return Err(Error::invalid(
                "coefficients",
                format!("expected {} per component, got {nu} and {nv}", self.len()),
            ));
        }
        Ok(())
    }
}

/// `||w||_*` from eigen-coordinates: `nu c^2` on `E^+`, `-nu c^2` on `E^-`
/// and the squared L² x L² norm on `E^0`.
pub fn star_norm(coords: &[[f64; 2]], split: &SpaceSplit) -> Result<f64> {
    split.check_len(coords.len(), coords.len())?;
    let s = split.params.s.value();
    let alpha = split.params.alpha;
    let mut sq = 0.0;
    for (m, c) in split.modes.iter().zip(coords) {
        for (i, branch) in [Branch::Plus, Branch::Minus].into_iter().enumerate() {
            let ci = c[i];
            sq += match assign(m.class, branch) {
                Subspace::Positive => m.nu(branch) * ci * ci,
                Subspace::Negative => -m.nu(branch) * ci * ci,
                Subspace::Null => {
                    let e = m.eigvec(branch);
                    ci * ci
                        * (e[0] * e[0] * m.lambda_k.powf(-alpha)
                            + e[1] * e[1] * m.lambda_k.powf(alpha - 2.0 * s))
                }
            };
        }
    }
    Ok(sq.sqrt())
}

/// Decay of `|nu_k^pm -+ 1|` along the truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuLimitReport {
    /// Deviation per mode, index k-1.
    pub deviations: Vec<f64>,
    /// Maximum deviation over `k >= K/2`.
    pub tail_max: f64,
    /// Last resonant or definite mode (1-based), 0 if none.
    pub last_nonhyperbolic: usize,
    /// Deviations strictly decrease beyond `last_nonhyperbolic`.
    pub decreasing: bool,
}

pub fn nu_limit_check(split: &SpaceSplit) -> Result<NuLimitReport> {
    let k = split.len();
    if k < 32 {
        return Err(Error::Precondition(format!(
            "limit check needs at least 32 modes, got {k}"
        )));
    }
    let deviations: Vec<f64> = split.modes.iter().map(|m| m.limit_deviation()).collect();
    let tail_max = deviations[k / 2..].iter().cloned().fold(0.0, f64::max);
    let last_nonhyperbolic = split
        .modes
        .iter()
        .rposition(|m| m.class != ModeClass::Hyperbolic)
        .map_or(0, |i| i + 1);
    let decreasing = deviations[last_nonhyperbolic..]
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
    Ok(NuLimitReport {
        deviations,
        tail_max,
        last_nonhyperbolic,
        decreasing,
    })
}
