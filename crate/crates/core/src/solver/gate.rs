use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::SystemProblem;

/// Admissible values of `alpha`; empty when `lo >= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaWindow {
    pub lo: f64,
    pub hi: f64,
    pub empty: bool,
}

impl AlphaWindow {
    pub fn contains(&self, alpha: f64) -> bool {
        !self.empty && alpha > self.lo && alpha < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub n: usize,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    /// `1/(p+1) + 1/(q+1) - (n - 2s)/n`.
    pub margin: f64,
    pub hyperbola_ok: bool,
    pub alpha_window: AlphaWindow,
    /// Exponent at which the embedding checks were evaluated.
    pub alpha: f64,
    /// `q + 1 < 2n/(n - 2 alpha)`, vacuous when `n <= 2 alpha`.
    pub embedding_q_ok: bool,
    /// `p + 1 < 2n/(n + 2 alpha - 4s)`, vacuous when `n + 2 alpha <= 4s`.
    pub embedding_p_ok: bool,
    pub suggested_alpha: f64,
    pub warning: Option<String>,
}

/// Gate for a configured problem; embeddings are checked at `prob.alpha`.
pub fn gate(prob: &SystemProblem) -> Result<AdmissibilityReport> {
    gate_exponents(prob.dimension(), prob.s.value(), prob.p, prob.q, Some(prob.alpha))
}

/// Gate from the exponents alone. Without `alpha` the embeddings are
/// checked at the suggested value.
pub fn gate_exponents(
    n: usize,
    s: f64,
    p: f64,
    q: f64,
    alpha: Option<f64>,
) -> Result<AdmissibilityReport> {
    if !(p > 1.0 && q > 1.0) {
        return Err(Error::invalid(
            "p/q",
            format!("p and q must exceed 1, got p = {p}, q = {q}"),
        ));
    }
    if n == 0 || !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid("n/s", format!("need n >= 1 and 0 < s < 1, got n = {n}, s = {s}")));
    }
    let nf = n as f64;
    let margin = hyperbola_margin(n, s, p, q);
    let hyperbola_ok = margin > 0.0;
    let lo = (nf * (0.5 - 1.0 / (q + 1.0))).max(0.0);
    let hi = (2.0 * s - nf * (0.5 - 1.0 / (p + 1.0))).min(2.0 * s);
    let alpha_window = AlphaWindow {
        lo,
        hi,
        empty: hi <= lo || hi.is_nan() || lo.is_nan(),
    };
    let suggested_alpha = if alpha_window.empty { s } else { 0.5 * (lo + hi) };
    let alpha = alpha.unwrap_or(suggested_alpha);

    let dq = nf - 2.0 * alpha;
    let embedding_q_ok = dq <= 0.0 || q + 1.0 < 2.0 * nf / dq;
    let dp = nf + 2.0 * alpha - 4.0 * s;
    let embedding_p_ok = dp <= 0.0 || p + 1.0 < 2.0 * nf / dp;

    let warning = if !hyperbola_ok {
        Some(format!(
            "(p, q) = ({p}, {q}) is not above the critical hyperbola (margin {margin:e}); \
             the existence theorem does not apply"
        ))
    } else if !(embedding_q_ok && embedding_p_ok) {
        Some(format!("alpha = {alpha} lies outside the admissible window"))
    } else {
        None
    };

    Ok(AdmissibilityReport {
        n,
        s,
        p,
        q,
        margin,
        hyperbola_ok,
        alpha_window,
        alpha,
        embedding_q_ok,
        embedding_p_ok,
        suggested_alpha,
        warning,
    })
}

/// `1/(p+1) + 1/(q+1) - (n - 2s)/n`.
pub fn hyperbola_margin(n: usize, s: f64, p: f64, q: f64) -> f64 {
    let nf = n as f64;
    1.0 / (p + 1.0) + 1.0 / (q + 1.0) - (nf - 2.0 * s) / nf
}

/// The `q` on the critical hyperbola for a given `p`, if it exceeds 1.
pub fn critical_q(n: usize, s: f64, p: f64) -> Option<f64> {
    let nf = n as f64;
    let r = (nf - 2.0 * s) / nf - 1.0 / (p + 1.0);
    if r <= 0.0 {
        return None;
    }
    let q = 1.0 / r - 1.0;
    (q > 1.0).then_some(q)
}

/// One point of a sampled `(p, q)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateSample {
    pub p: f64,
    pub q: f64,
    pub margin: f64,
    pub admissible: bool,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

fn linspace(range: [f64; 2], steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![range[0]];
    }
    (0..steps)
        .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (steps - 1) as f64)
        .collect()
}

/// The gate on a `steps x steps` grid over `p_range x q_range`, row-major
/// in `p`. Rows are evaluated in parallel.
pub fn gate_grid(n: usize, s: f64, p_range: [f64; 2], q_range: [f64; 2], steps: usize) -> Result<Vec<GateSample>> {
    if steps == 0 {
        return Err(Error::invalid("steps", "a sweep needs at least one sample per axis"));
    }
    let ps = linspace(p_range, steps);
    let qs = linspace(q_range, steps);
    let rows = ps
        .par_iter()
        .map(|&p| {
            qs.iter()
                .map(|&q| {
                    let r = gate_exponents(n, s, p, q, None)?;
                    Ok(GateSample {
                        p,
                        q,
                        margin: r.margin,
                        admissible: r.hyperbola_ok,
                        alpha_lo: r.alpha_window.lo,
                        alpha_hi: r.alpha_window.hi,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Points `(p, q)` of the critical hyperbola with `p` on the sweep grid and
/// `q` inside `q_range`.
pub fn critical_contour(n: usize, s: f64, p_range: [f64; 2], q_range: [f64; 2], steps: usize) -> Vec<(f64, f64)> {
    linspace(p_range, steps)
        .into_iter()
        .filter_map(|p| critical_q(n, s, p).map(|q| (p, q)))
        .filter(|&(_, q)| q >= q_range[0] && q <= q_range[1])
        .collect()
}
