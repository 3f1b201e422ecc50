//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. INFO lines report quantities that are
//! measured but not gated.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use fracsys_cli::{parse_config, run, ConfigFormat};
use fracsys_core::diagnostics::{boundary_exponent, run_operator_diagnostics, TestFunction};
use fracsys_core::functional::{gradient, lagrangian};
use fracsys_core::indefinite::{analyze_mode, build_split};
use fracsys_core::operators::{apply_inverse, apply_operator, dual_norm_sq};
use fracsys_core::solver::hyperbola_margin;
use fracsys_core::{
    analyze, build_basis, synthesize, CouplingParams, FracOrder, ModelDomain, NewtonOptions, OperatorKind,
    PairField, SpectralField, SystemProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    info: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
            info: Vec::new(),
        }
    }
}

fn order(s: f64) -> FracOrder {
    FracOrder::new(s).unwrap()
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, z| m.max(z.abs()))
}

/// Eigenvalues of a symmetric 2x2 matrix by one Jacobi rotation.
fn jacobi_2x2(a11: f64, a12: f64, a22: f64) -> (f64, f64) {
    if a12 == 0.0 {
        return (a11.max(a22), a11.min(a22));
    }
    let theta = (a22 - a11) / (2.0 * a12);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let e1 = a11 - t * a12;
    let e2 = a22 + t * a12;
    (e1.max(e2), e1.min(e2))
}

fn formula_fidelity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_eig = 0.0f64;
    let mut worst_id = 0.0f64;
    for _ in 0..1000 {
        let s = rng.random_range(0.05..0.95);
        let alpha = rng.random_range(0.01..1.99) * s;
        let lambda = rng.random_range(-20.0..20.0);
        let mu = rng.random_range(-20.0..20.0);
        let lk = 10f64.powf(rng.random_range(-1.0..4.0));
        let m = analyze_mode(0, lk, &CouplingParams::new(lambda, mu, alpha, order(s)).unwrap()).unwrap();
        let a = lambda * lk.powf(-alpha);
        let b = mu * lk.powf(alpha - 2.0 * s);
        let scale = 1f64.max(a.abs() + b.abs());
        let (hi, lo) = jacobi_2x2(-a, 1.0, -b);
        worst_eig = worst_eig.max(((m.nu_plus - hi).abs().max((m.nu_minus - lo).abs())) / scale);
        let trace = (m.nu_plus + m.nu_minus + a + b).abs() / scale;
        let det = (m.nu_plus * m.nu_minus - (a * b - 1.0)).abs() / (scale * scale);
        worst_id = worst_id.max(trace).max(det);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst_eig <= 1e-12 && worst_id <= 1e-12 && secs < 1.0,
        format!("max eig err {worst_eig:.2e}, max trace/det err {worst_id:.2e}, {secs:.3}s"),
    )
}

fn limit_behavior() -> Outcome {
    let start = Instant::now();
    let basis = build_basis(&ModelDomain::unit_interval(256).unwrap(), 64).unwrap();
    let params = CouplingParams::new(1.0, 1.0, 0.25, order(0.5)).unwrap();
    let split = build_split(&basis, &params, 64).unwrap();
    let d8 = split.modes[7].limit_deviation();
    let d64 = split.modes[63].limit_deviation();
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        d64 < d8 && d64 < 0.02 && secs < 1.0,
        format!("deviation k=8 {d8:.4e}, k=64 {d64:.4e} (bound 0.02), {secs:.3}s"),
    )
}

fn resonance() -> Outcome {
    let basis = build_basis(&ModelDomain::unit_interval(128).unwrap(), 32).unwrap();
    let l1s = basis.eigenvalues()[0].sqrt();
    let params = CouplingParams::new(l1s, l1s, 0.5, order(0.5)).unwrap();
    let split = build_split(&basis, &params, 32).unwrap();
    let nu = split.modes[0].nu_plus;
    let dim = split.null_dimension();
    Outcome::new(
        nu.abs() <= 1e-12 && dim == 1,
        format!("nu_1^+ = {nu:.2e}, dim E0 = {dim}"),
    )
}

fn operator_identities() -> Outcome {
    let domain = ModelDomain::unit_interval(256).unwrap();
    let k = 64;
    let basis = Arc::new(build_basis(&domain, k).unwrap());
    let x = basis.grid().axis(0).to_vec();
    let s = order(0.5);
    let mut eig_err = 0.0f64;
    for j in 1..=k {
        let phi: Vec<f64> = x.iter().map(|x| 2f64.sqrt() * (j as f64 * PI * x).sin()).collect();
        let lj = (j as f64 * PI).powf(2.0 * s.value());
        let out = synthesize(&apply_operator(&analyze(&phi, &basis).unwrap(), s));
        let err = out.iter().zip(&phi).map(|(a, p)| (a - lj * p).abs()).fold(0.0, f64::max);
        eig_err = eig_err.max(err / lj);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut inv_err = 0.0f64;
    let mut dual_err = 0.0f64;
    for _ in 0..16 {
        let coeffs: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = SpectralField::new(Arc::clone(&basis), coeffs).unwrap();
        let back = apply_operator(&apply_inverse(&f, s), s);
        let e = back.coeffs().iter().zip(f.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        inv_err = inv_err.max(e);
        let fg = synthesize(&f);
        let ig = synthesize(&apply_inverse(&f, s));
        let quad = basis.grid().inner(&fg, &ig);
        let dual = dual_norm_sq(&f, s);
        dual_err = dual_err.max((quad - dual).abs() / dual);
    }
    Outcome::new(
        eig_err <= 1e-12 && inv_err <= 1e-12 && dual_err <= 1e-10,
        format!("eigen {eig_err:.2e}, inverse {inv_err:.2e}, duality {dual_err:.2e}"),
    )
}

/// Criteria 5-7 share one diagnostics run at m = 512 (refined to 1024).
fn operator_comparison() -> (Outcome, Outcome, Outcome) {
    let start = Instant::now();
    let domain = ModelDomain::unit_interval(512).unwrap();
    let orders = [order(0.25), order(0.5), order(0.75)];
    let diag = run_operator_diagnostics(&domain, &orders).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let gaps_ok = diag
        .eigenvalue_gaps
        .iter()
        .all(|g| g.gap > 0.0 && g.gap_refined > 0.0 && g.relative_change < 0.1);
    let detail = diag
        .eigenvalue_gaps
        .iter()
        .map(|g| format!("s={} gap {:.4e} change {:.2}%", g.s, g.gap, 100.0 * g.relative_change))
        .collect::<Vec<_>>()
        .join("; ");
    let gaps = Outcome::new(gaps_ok && secs < 30.0, format!("{detail}; {secs:.1}s"));

    let mut cmp = Outcome::new(true, String::new());
    let mut parts = Vec::new();
    for c in &diag.comparisons {
        let line = format!(
            "s={} {:?}: min {:.3e} (tol -{:.3e}), slack {:.3e} -> {:.3e}",
            c.s, c.function, c.min, c.tolerance, c.slack, c.slack_refined
        );
        if c.pointwise_defined {
            cmp.pass &= c.holds;
            parts.push(format!("s={} {:?} {}", c.s, c.function, if c.holds { "ok" } else { "violated" }));
        } else {
            cmp.info.push(format!("{line} [not pointwise defined, not gated]"));
        }
    }
    cmp.detail = parts.join("; ");

    let fine = domain.with_grid_size(1024).unwrap();
    let l = fine.extents()[0];
    let phi: Vec<f64> = fine.grid().axis(0).iter().map(|&x| TestFunction::FirstMode.eval(x, l)).collect();
    let phi_fit = boundary_exponent(&phi, &fine).unwrap().exponent;
    let mut bnd = Outcome::new((phi_fit - 1.0).abs() <= 0.05, format!("phi_1 {phi_fit:.4}"));
    for b in &diag.boundary_exponents {
        let e = b.restricted_refined.exponent;
        bnd.pass &= (e - b.s).abs() <= 0.1;
        bnd.detail.push_str(&format!("; psi_1 s={} {e:.4}", b.s));
    }
    (gaps, cmp, bnd)
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s = rng.random_range(0.2..0.9);
        let p = rng.random_range(1.5..4.0);
        let q = rng.random_range(1.5..4.0);
        let k = rng.random_range(4..12);
        let domain = ModelDomain::unit_interval(4 * k.max(16)).unwrap();
        let Ok(prob) = SystemProblem::new(domain, OperatorKind::Spectral, order(s), p, q, k) else {
            continue;
        };
        let prob = prob
            .with_coupling(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))
            .unwrap();
        let basis = prob.basis().unwrap();
        let x: Vec<f64> = (0..2 * k).map(|j| rng.random_range(-1.0..1.0) / (1 + j % k) as f64).collect();
        let w = PairField::from_stacked(&basis, &x).unwrap();
        let g = gradient(&w, &prob).unwrap();
        let mut diff = 0.0f64;
        for i in 0..x.len() {
            let h = 1e-6 * x[i].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let jp = lagrangian(&PairField::from_stacked(&basis, &xp).unwrap(), &prob).unwrap();
            let jm = lagrangian(&PairField::from_stacked(&basis, &xm).unwrap(), &prob).unwrap();
            diff = diff.max(((jp - jm) / (2.0 * h) - g[i]).abs());
        }
        worst = worst.max(diff / sup(&g).max(1e-300));
    }
    Outcome::new(worst <= 1e-5, format!("max relative error {worst:.2e}"))
}

/// Sine-Galerkin fixed point for `A^s u = u^3` with Petviashvili scaling.
fn fixed_point_oracle(s: f64, modes: usize, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / cells as f64;
    let x: Vec<f64> = (1..cells).map(|j| j as f64 * h).collect();
    let sine: Vec<Vec<f64>> = (1..=modes)
        .map(|k| x.iter().map(|x| 2f64.sqrt() * (k as f64 * PI * x).sin()).collect())
        .collect();
    let lam: Vec<f64> = (1..=modes).map(|k| (k as f64 * PI).powf(2.0 * s)).collect();
    let synth = |c: &[f64]| -> Vec<f64> {
        (0..x.len()).map(|j| (0..modes).map(|k| c[k] * sine[k][j]).sum()).collect()
    };
    let mut c = vec![0.0; modes];
    c[0] = 2.0;
    for _ in 0..2000 {
        let u = synth(&c);
        let n: Vec<f64> = (0..modes)
            .map(|k| h * u.iter().zip(&sine[k]).map(|(u, e)| u * u * u * e).sum::<f64>())
            .collect();
        let num: f64 = (0..modes).map(|k| lam[k] * c[k] * c[k]).sum();
        let den: f64 = (0..modes).map(|k| n[k] * c[k]).sum();
        let m = (num / den).powf(1.5);
        let next: Vec<f64> = (0..modes).map(|k| m * n[k] / lam[k]).collect();
        let change = next.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c = next;
        if change < 1e-14 {
            break;
        }
    }
    let u = synth(&c);
    (x, u)
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let prob = SystemProblem::reference();
    let sol = fracsys_core::solver::solve(&prob, &NewtonOptions::default()).unwrap();
    let energy = sol.energy;
    let uv: Vec<f64> = sol.w.u.coeffs().iter().zip(sol.w.v.coeffs()).map(|(a, b)| a - b).collect();
    let uv = uv.iter().map(|d| d * d).sum::<f64>().sqrt();
    let (x, oracle) = fixed_point_oracle(0.5, 64, 256);
    let solved: Vec<f64> = x.iter().map(|&x| sol.w.u.eval(&[x])).collect();
    let err = solved.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / sup(&oracle);
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        sol.converged && sol.residual <= 1e-10 && energy > 0.0 && uv <= 1e-8 && err <= 0.01 && secs < 60.0,
        format!(
            "residual {:.2e}, energy {energy:.6}, |u-v| {uv:.2e}, oracle Linf rel {err:.3e}, {secs:.2}s",
            sol.residual
        ),
    )
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn gate_correctness() -> Outcome {
    let mut out = Outcome::new(true, String::new());
    let mut parts = Vec::new();
    for (domain, n, s) in [("interval", 1usize, 0.4), ("rectangle", 2, 0.5)] {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[problem]\ndomain = \"{domain}\"\ns = {s}\np = 3.0\nq = 3.0\nmodes = 8\n\
             [sweep]\nparameter = \"pq\"\np = [1.05, 6.0]\nq = [1.05, 6.0]\nsteps = 100\n"
        );
        let cfg = parse_config(&text, ConfigFormat::Toml).unwrap();
        run(fracsys_cli::Command::Gate, &cfg, dir.path(), 0).unwrap();
        let grid = read_csv(&dir.path().join("gate_grid.csv"));
        let contour = read_csv(&dir.path().join("gate_contour.csv"));
        let mut mismatched = 0;
        for row in &grid {
            let f: Vec<f64> = [0, 1, 2, 4, 5].iter().map(|&i| row[i].parse().unwrap()).collect();
            let (p, q, margin, lo, hi) = (f[0], f[1], f[2], f[3], f[4]);
            let recomputed = hyperbola_margin(n, s, p, q);
            if (hi > lo) != (margin > 0.0) || (recomputed - margin).abs() > 1e-15 {
                mismatched += 1;
            }
        }
        let contour_err = contour
            .iter()
            .map(|r| hyperbola_margin(n, s, r[0].parse().unwrap(), r[1].parse().unwrap()).abs())
            .fold(0.0, f64::max);
        out.pass &= grid.len() == 100 * 100 && mismatched == 0 && contour_err <= 1e-14;
        parts.push(format!(
            "n={n} s={s}: {} cells, {mismatched} mismatches, {} contour points, max |margin| {contour_err:.1e}",
            grid.len(),
            contour.len()
        ));
    }
    out.detail = parts.join("; ");
    out
}

/// Second-order finite differences for `-u'' = u^p` on (0, 1), Petviashvili iteration.
fn classical_oracle(p: f64, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / cells as f64;
    let n = cells - 1;
    let x: Vec<f64> = (1..cells).map(|j| j as f64 * h).collect();
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let (diag, off) = (2.0 / (h * h), -1.0 / (h * h));
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = off / diag;
        d[0] = rhs[0] / diag;
        for i in 1..n {
            let m = diag - off * c[i - 1];
            c[i] = off / m;
            d[i] = (rhs[i] - off * d[i - 1]) / m;
        }
        let mut u = vec![0.0; n];
        u[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            u[i] = d[i] - c[i] * u[i + 1];
        }
        u
    };
    let gamma = p / (p - 1.0);
    let mut u: Vec<f64> = x.iter().map(|x| (PI * x).sin()).collect();
    for _ in 0..5000 {
        let f: Vec<f64> = u.iter().map(|z| z.abs().powf(p)).collect();
        let lu: Vec<f64> = (0..n)
            .map(|i| {
                let l = if i > 0 { u[i - 1] } else { 0.0 };
                let r = if i + 1 < n { u[i + 1] } else { 0.0 };
                (2.0 * u[i] - l - r) / (h * h)
            })
            .collect();
        let num: f64 = lu.iter().zip(&u).map(|(a, b)| a * b).sum();
        let den: f64 = f.iter().zip(&u).map(|(a, b)| a * b).sum();
        let m = (num / den).powf(gamma);
        let next: Vec<f64> = solve(&f).into_iter().map(|z| m * z).collect();
        let change = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        u = next;
        if change < 1e-13 * sup(&u) {
            break;
        }
    }
    (x, u)
}

fn classical_gap(p: f64) -> (f64, bool) {
    let domain = ModelDomain::unit_interval(256).unwrap();
    let prob = SystemProblem::new(domain, OperatorKind::Spectral, order(0.95), p, p, 64).unwrap();
    let sol = fracsys_core::solver::solve(&prob, &NewtonOptions::default()).unwrap();
    let (x, fd) = classical_oracle(p, 2048);
    let ours: Vec<f64> = x.iter().map(|&x| sol.w.u.eval(&[x])).collect();
    let err = ours.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / sup(&fd);
    (err, sol.converged)
}

fn classical_limit() -> Outcome {
    let (err5, ok5) = classical_gap(5.0);
    let mut out = Outcome::new(
        ok5 && err5 <= 0.05,
        format!("s=0.95 p=q=5: Linf rel {err5:.3e} (bound 5e-2)"),
    );
    let (err3, ok3) = classical_gap(3.0);
    out.info.push(format!(
        "s=0.95 p=q=3: Linf rel {err3:.3e}, converged {ok3} [not gated]"
    ));
    out
}

fn main() {
    let (c5, c6, c7) = operator_comparison();
    let results = [
        ("1 formula fidelity", formula_fidelity()),
        ("2 high-mode limit", limit_behavior()),
        ("3 resonance", resonance()),
        ("4 operator identities", operator_identities()),
        ("5 eigenvalue gap", c5),
        ("6 pointwise comparison", c6),
        ("7 boundary exponents", c7),
        ("8 gradient check", gradient_check()),
        ("9 end-to-end solve", end_to_end()),
        ("10 gate correctness", gate_correctness()),
        ("11 classical limit", classical_limit()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        println!("{} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        for line in &r.info {
            println!("INFO {name}: {line}");
        }
        failed += usize::from(!r.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
