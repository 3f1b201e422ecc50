use std::f64::consts::{FRAC_PI_2, TAU};

use super::FracOrder;
use crate::error::{Error, Result};
use crate::quadrature::{tanh_sinh, GaussLegendre};

/// Number of full periods integrated by Gauss–Legendre before switching to
/// the asymptotic tail.
const PERIODS: usize = 64;
const PANEL_ORDER: usize = 24;
const TARGET: f64 = 1e-7;

/// The constant `C(n, s)` of the singular-integral fractional Laplacian,
/// computed by quadrature of `(int_{R^n} (1 - cos z_1) / |z|^{n+2s} dz)^{-1}`.
///
/// The n-dimensional integral factors into a radial 1-D oscillatory
/// integral `2 int_0^inf (1 - cos t) t^{-1-2s} dt` and, for n = 2, the
/// transverse factor `int_R (1 + e^2)^{-1-s} de`. Both are integrated
/// numerically; the achieved error is estimated by halving the number of
/// oscillation periods.
pub fn normalizing_constant(n: usize, s: FracOrder) -> Result<f64> {
    let s = s.value();
    let transverse = match n {
        1 => 1.0,
        2 => {
            // e = tan(theta) turns the transverse factor into 2 int_0^{pi/2} sin^{2s}
            let est = tanh_sinh(0.0, FRAC_PI_2, 1e-13, |phi| phi.sin().powf(2.0 * s));
            if est.error > TARGET * est.value.abs() {
                return Err(Error::Accuracy {
                    estimate: 2.0 * est.value,
                    error_estimate: 2.0 * est.error,
                });
            }
            2.0 * est.value
        }
        _ => {
            return Err(Error::invalid(
                "n",
                format!("dimension must be 1 or 2, got {n}"),
            ))
        }
    };
    let full = radial_integral(s, PERIODS)?;
    let half = radial_integral(s, PERIODS / 2)?;
    let err = (full - half).abs();
    if !(full.is_finite() && err <= TARGET * full.abs()) {
        return Err(Error::Accuracy {
            estimate: 1.0 / (2.0 * full * transverse),
            error_estimate: err / (2.0 * full * full * transverse),
        });
    }
    Ok(1.0 / (2.0 * full * transverse))
}

/// `int_0^inf (1 - cos t) t^{-1-2s} dt` split into a first period with the
/// `t^2/2` singular part subtracted, `periods - 1` smooth periods, and the
/// asymptotic tail beyond `T = 2 pi periods`.
fn radial_integral(s: f64, periods: usize) -> Result<f64> {
    let a = 1.0 + 2.0 * s;
    let regular = |t: f64| {
        // (1 - cos t) - t^2/2 without cancellation for small t
        if t < 0.1 {
            let t2 = t * t;
            t.powf(4.0 - a) * (-1.0 / 24.0 + t2 * (1.0 / 720.0 - t2 / 40320.0))
        } else {
            (2.0 * (0.5 * t).sin().powi(2) - 0.5 * t * t) * t.powf(-a)
        }
    };
    let first = tanh_sinh(0.0, TAU, 1e-13, regular);
    if first.error > 1e-9 * first.value.abs().max(1.0) {
        return Err(Error::Accuracy {
            estimate: first.value,
            error_estimate: first.error,
        });
    }
    let singular = 0.5 * TAU.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);

    let gl = GaussLegendre::new(PANEL_ORDER);
    let panels: f64 = (1..periods)
        .map(|j| {
            let lo = TAU * j as f64;
            gl.integrate(lo, lo + TAU, |t| 2.0 * (0.5 * t).sin().powi(2) * t.powf(-a))
        })
        .sum();

    // int_T^inf t^{-a} dt minus the cosine tail; sin T = 0, cos T = 1
    let t_end = TAU * periods as f64;
    let power_tail = t_end.powf(-2.0 * s) / (2.0 * s);
    let mut cos_tail = 0.0;
    let mut coeff = a;
    let mut sign = 1.0;
    for j in 0..4 {
        cos_tail += sign * coeff * t_end.powf(-a - 1.0 - 2.0 * j as f64);
        coeff *= (a + 1.0 + 2.0 * j as f64) * (a + 2.0 + 2.0 * j as f64);
        sign = -sign;
    }
    Ok(first.value + singular + panels + power_tail - cos_tail)
}
