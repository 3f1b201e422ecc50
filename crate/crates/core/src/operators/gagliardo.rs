use super::FracOrder;
use crate::basis::{DomainKind, ModelDomain};
use crate::error::{Error, Result};

/// Double integral `int_O int_O |u(x) - u(y)|^2 / |x - y|^{1+2s} dx dy`,
/// i.e. the squared Gagliardo seminorm, from interior grid values of a
/// function vanishing at the endpoints.
///
/// Off-diagonal cell pairs use the trapezoid weights of their nodes.
/// Diagonal cells replace `|u(x) - u(y)|` by `L |x - y|` with the local
/// central-difference slope `L`, which integrates in closed form.
pub fn gagliardo_seminorm(values: &[f64], s: FracOrder, domain: &ModelDomain) -> Result<f64> {
    if domain.kind() != DomainKind::Interval {
        return Err(Error::Unsupported(
            "the Gagliardo seminorm diagnostic is one-dimensional".into(),
        ));
    }
    let m = domain.grid_size();
    if values.len() != m - 1 {
        return Err(Error::invalid(
            "values",
            format!("expected {} interior values, got {}", m - 1, values.len()),
        ));
    }
    let s = s.value();
    let h = domain.step(0);
    let mut u = Vec::with_capacity(m + 1);
    u.push(0.0);
    u.extend_from_slice(values);
    u.push(0.0);
    let weight = |j: usize| if j == 0 || j == m { 0.5 * h } else { h };
    let a = 1.0 + 2.0 * s;

    let mut off = 0.0;
    for i in 0..=m {
        let mut row = 0.0;
        for j in (i + 1)..=m {
            let du = u[i] - u[j];
            row += weight(j) * du * du / (((j - i) as f64) * h).powf(a);
        }
        off += weight(i) * row;
    }

    let cell = 2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s));
    let diag: f64 = (0..=m)
        .map(|j| {
            let slope = if j == 0 {
                (u[1] - u[0]) / h
            } else if j == m {
                (u[m] - u[m - 1]) / h
            } else {
                (u[j + 1] - u[j - 1]) / (2.0 * h)
            };
            slope * slope * cell * weight(j).powf(3.0 - 2.0 * s)
        })
        .sum();
    Ok(2.0 * off + diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(m: usize) -> (ModelDomain, Vec<f64>) {
        let d = ModelDomain::unit_interval(m).unwrap();
        let u = d.grid().axis(0).iter().map(|x| (PI * x).sin()).collect();
        (d, u)
    }

    #[test]
    fn zero_and_homogeneity() {
        let s = FracOrder::new(0.4).unwrap();
        let (d, u) = sine(64);
        assert_eq!(gagliardo_seminorm(&vec![0.0; 63], s, &d).unwrap(), 0.0);
        let one = gagliardo_seminorm(&u, s, &d).unwrap();
        let two: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
        let four = gagliardo_seminorm(&two, s, &d).unwrap();
        assert!((four - 4.0 * one).abs() < 1e-12 * four);
    }

    #[test]
    fn sine_self_converges_monotonically() {
        let s = FracOrder::new(0.5).unwrap();
        let vals: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&m| {
                let (d, u) = sine(m);
                gagliardo_seminorm(&u, s, &d).unwrap()
            })
            .collect();
        let diffs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(diffs.iter().all(|d| d.signum() == diffs[0].signum()), "{vals:?}");
        assert!(diffs.windows(2).all(|w| w[1].abs() < w[0].abs()), "{vals:?}");
        let rel = diffs[2].abs() / vals[3];
        assert!(rel < 0.02, "{vals:?}");
    }

    #[test]
    fn rejects_rectangle() {
        let d = ModelDomain::rectangle(1.0, 1.0, 16).unwrap();
        assert!(gagliardo_seminorm(&[0.0; 225], FracOrder::new(0.5).unwrap(), &d).is_err());
    }
}
