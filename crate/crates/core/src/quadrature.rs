//! One-dimensional quadrature rules used by the normalizing-constant
//! integrals: Gauss–Legendre for smooth panels, tanh–sinh for panels with
//! an integrable singularity at the left endpoint.

use std::f64::consts::FRAC_PI_2;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive quadrature: value plus the difference between the
/// last two refinement levels.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Tanh–sinh quadrature on [a, b].
///
/// Abscissae are generated as offsets from the endpoints, so an integrand
/// with an algebraic singularity at `a` is evaluated at points that resolve
/// the singularity down to the smallest representable offsets. Refinement
/// halves the step until two successive levels agree to `rel_tol`.
pub fn tanh_sinh(a: f64, b: f64, rel_tol: f64, mut f: impl FnMut(f64) -> f64) -> Estimate {
    let half = 0.5 * (b - a);
    let mut step = 1.0;
    let mut sum = half * FRAC_PI_2 * f(a + half);
    sum += tail_sum(a, b, half, step, 1, &mut f);
    let mut value = sum * step;
    let mut error = f64::INFINITY;
    for _level in 0..12 {
        step *= 0.5;
        // only odd multiples of the new step are new abscissae
        sum += tail_sum(a, b, half, step, 2, &mut f);
        let refined = sum * step;
        error = (refined - value).abs();
        value = refined;
        if error <= rel_tol * value.abs() {
            break;
        }
    }
    Estimate { value, error }
}

fn tail_sum(
    a: f64,
    b: f64,
    half: f64,
    step: f64,
    stride: usize,
    f: &mut impl FnMut(f64) -> f64,
) -> f64 {
    let mut acc = 0.0;
    let mut j = 1usize;
    loop {
        let t = j as f64 * step;
        let u = FRAC_PI_2 * t.sinh();
        let cosh_u = u.cosh();
        // 1 - tanh(u), computed without cancellation
        let complement = (-u).exp() / cosh_u;
        let weight = FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
        let offset = half * complement;
        if offset <= f64::MIN_POSITIVE * 1e4 || weight < 1e-300 {
            break;
        }
        acc += weight * (f(a + offset) + f(b - offset)) * half;
        j += stride;
    }
    acc
}
