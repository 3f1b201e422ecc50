use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracsys_core::basis::{synthesize, EigenBasis, SpectralField};
use fracsys_core::diagnostics::{run_operator_diagnostics, run_solution_diagnostics, TEST_FAMILY_VERSION};
use fracsys_core::indefinite::{build_split, nu_limit_check, Direction, NuLimitReport};
use fracsys_core::operators::{apply_inverse, apply_operator, dual_norm_sq};
use fracsys_core::solver::{
    continuation, critical_contour, gate, gate_grid, solve, PathSpec, SaddleSolution,
};
use fracsys_core::{DiagnosticsReport, DomainKind, FracOrder, SystemProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{Command, ConfigError, RunConfig, SweepConfig};
use crate::output::{write_csv, write_report, Cell};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] fracsys_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A solve or path did not converge; artifacts were still written.
    NotConverged,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub artifacts: Vec<PathBuf>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    seed: u64,
    command: Command,
    artifacts: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn report<T: Serialize>(&mut self, name: &str, report: &T) -> Result<(), CliError> {
        let path = self.out.join(name);
        write_report(&path, self.command, self.seed, report)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> Result<(), CliError> {
        let path = self.out.join(name);
        write_csv(&path, header, rows)?;
        self.artifacts.push(path);
        Ok(())
    }
}

/// Execute `command` and write its artifacts into `out`.
pub fn run(command: Command, cfg: &RunConfig, out: &Path, seed: u64) -> Result<Outcome, CliError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::Usage(format!(
                "the configuration is for `{c:?}` but `{command:?}` was requested"
            )));
        }
    }
    std::fs::create_dir_all(out)?;
    let mut ctx = Ctx {
        cfg,
        out,
        seed,
        command,
        artifacts: Vec::new(),
    };
    let status = match command {
        Command::Gate => run_gate(&mut ctx)?,
        Command::Spectrum => run_spectrum(&mut ctx)?,
        Command::Solve => run_solve(&mut ctx)?,
        Command::Verify => run_verify(&mut ctx)?,
        Command::Sweep => run_sweep(&mut ctx)?,
    };
    Ok(Outcome {
        status,
        artifacts: ctx.artifacts,
    })
}

#[derive(Serialize)]
struct GateDoc<'a> {
    problem: &'a SystemProblem,
    alpha_defaulted: bool,
    admissibility: fracsys_core::AdmissibilityReport,
}

fn run_gate(ctx: &mut Ctx) -> Result<Status, CliError> {
    let prob = &ctx.cfg.problem;
    let doc = GateDoc {
        problem: prob,
        alpha_defaulted: ctx.cfg.alpha_defaulted,
        admissibility: gate(prob)?,
    };
    ctx.report("gate.json", &doc)?;
    if let Some(SweepConfig::Pq { p, q, steps }) = ctx.cfg.sweep {
        write_pq_sweep(ctx, p, q, steps)?;
    }
    Ok(Status::Ok)
}

fn write_pq_sweep(ctx: &mut Ctx, p: [f64; 2], q: [f64; 2], steps: usize) -> Result<(), CliError> {
    let prob = &ctx.cfg.problem;
    let (n, s) = (prob.dimension(), prob.s.value());
    let grid = gate_grid(n, s, p, q, steps)?;
    let rows = grid
        .iter()
        .map(|g| {
            vec![
                g.p.into(),
                g.q.into(),
                g.margin.into(),
                g.admissible.into(),
                g.alpha_lo.into(),
                g.alpha_hi.into(),
            ]
        })
        .collect();
    ctx.csv("gate_grid.csv", &["p", "q", "margin", "admissible", "alpha_lo", "alpha_hi"], rows)?;
    let contour = critical_contour(n, s, p, q, steps)
        .into_iter()
        .map(|(p, q)| vec![p.into(), q.into()])
        .collect();
    ctx.csv("gate_contour.csv", &["p", "q"], contour)
}

#[derive(Serialize)]
struct SpectrumDoc {
    modes: usize,
    positive_dim: usize,
    negative_dim: usize,
    null_dim: usize,
    null_directions: Vec<Direction>,
    condition_number: f64,
    nu_limit: Option<NuLimitReport>,
}

fn run_spectrum(ctx: &mut Ctx) -> Result<Status, CliError> {
    let prob = &ctx.cfg.problem;
    let basis = prob.basis()?;
    let split = build_split(&basis, &prob.coupling()?, prob.modes)?;
    let rows = split
        .modes
        .iter()
        .map(|m| {
            let class = serde_json::to_value(m.class).ok().and_then(|v| v.as_str().map(String::from));
            vec![
                (m.mode + 1).into(),
                m.lambda_k.into(),
                m.a.into(),
                m.b.into(),
                m.nu_plus.into(),
                m.nu_minus.into(),
                Cell::Text(class.unwrap_or_default()),
            ]
        })
        .collect();
    ctx.csv("spectrum.csv", &["k", "lambda_k", "a", "b", "nu_plus", "nu_minus", "class"], rows)?;
    let doc = SpectrumDoc {
        modes: split.len(),
        positive_dim: split.positive.len(),
        negative_dim: split.negative.len(),
        null_dim: split.null_dimension(),
        null_directions: split.null.clone(),
        condition_number: split.condition_number(),
        nu_limit: nu_limit_check(&split).ok(),
    };
    ctx.report("split.json", &doc)?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct SolutionDoc<'a> {
    problem: &'a SystemProblem,
    admissibility: fracsys_core::AdmissibilityReport,
    solution: &'a SaddleSolution,
    u_coefficients: &'a [f64],
    v_coefficients: &'a [f64],
}

fn field_rows(sol: &SaddleSolution) -> (Vec<&'static str>, Vec<Vec<Cell>>) {
    let grid = sol.w.basis().grid();
    let u = synthesize(&sol.w.u);
    let v = synthesize(&sol.w.v);
    let header = if grid.dimension() == 1 {
        vec!["x", "u", "v"]
    } else {
        vec!["x", "y", "u", "v"]
    };
    let rows = grid
        .points()
        .zip(u.iter().zip(&v))
        .map(|(x, (u, v))| {
            let mut row: Vec<Cell> = x.into_iter().map(Cell::Float).collect();
            row.push((*u).into());
            row.push((*v).into());
            row
        })
        .collect();
    (header, rows)
}

fn solve_and_write(ctx: &mut Ctx) -> Result<SaddleSolution, CliError> {
    let prob = &ctx.cfg.problem;
    let sol = solve(prob, &ctx.cfg.newton)?;
    let (header, rows) = field_rows(&sol);
    ctx.csv("solution.csv", &header, rows)?;
    let doc = SolutionDoc {
        problem: prob,
        admissibility: gate(prob)?,
        solution: &sol,
        u_coefficients: sol.w.u.coeffs(),
        v_coefficients: sol.w.v.coeffs(),
    };
    ctx.report("solution.json", &doc)?;
    Ok(sol)
}

fn run_solve(ctx: &mut Ctx) -> Result<Status, CliError> {
    let sol = solve_and_write(ctx)?;
    Ok(if sol.converged {
        Status::Ok
    } else {
        Status::NotConverged
    })
}

/// Randomized spectral identities on the problem basis.
#[derive(Debug, Clone, Copy, Serialize)]
struct IdentityChecks {
    samples: usize,
    /// `max |L(L^-1 f) - f|` over coefficients.
    inverse: f64,
    /// `max |sum f_k^2 / lambda_k^s - int f L^-1 f|`, relative.
    duality: f64,
    /// `max |A^s phi_k - lambda_k^s phi_k|` on the grid, relative.
    eigenfunctions: f64,
}

fn identity_checks(basis: &Arc<EigenBasis>, s: FracOrder, samples: usize, seed: u64) -> IdentityChecks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inverse = 0.0f64;
    let mut duality = 0.0f64;
    for _ in 0..samples {
        let c: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = SpectralField::new(Arc::clone(basis), c).expect("length matches");
        let back = apply_operator(&apply_inverse(&f, s), s);
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            inverse = inverse.max((a - b).abs());
        }
        let lhs = dual_norm_sq(&f, s);
        let rhs = basis
            .grid()
            .inner(&synthesize(&f), &synthesize(&apply_inverse(&f, s)));
        duality = duality.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    let mut eigenfunctions = 0.0f64;
    for k in 0..basis.len() {
        let phi = SpectralField::unit(Arc::clone(basis), k);
        let lhs = synthesize(&apply_operator(&phi, s));
        let ls = basis.eigenvalues()[k].powf(s.value());
        let scale = ls * basis.modes().column(k).amax();
        for (a, b) in lhs.iter().zip(basis.modes().column(k).iter()) {
            eigenfunctions = eigenfunctions.max((a - ls * b).abs() / scale);
        }
    }
    IdentityChecks {
        samples,
        inverse,
        duality,
        eigenfunctions,
    }
}

#[derive(Serialize)]
struct VerifyDoc<'a> {
    problem: &'a SystemProblem,
    converged: bool,
    identities: IdentityChecks,
    diagnostics: DiagnosticsReport,
}

fn run_verify(ctx: &mut Ctx) -> Result<Status, CliError> {
    let cfg = ctx.cfg;
    let prob = &cfg.problem;
    let operator = if prob.domain.kind() == DomainKind::Interval {
        let grid = cfg.verify.grid.unwrap_or(prob.domain.grid_size());
        let domain = prob.domain.with_grid_size(grid)?;
        let orders = cfg
            .verify
            .orders
            .iter()
            .map(|&s| FracOrder::new(s))
            .collect::<Result<Vec<_>, _>>()?;
        Some(run_operator_diagnostics(&domain, &orders)?)
    } else {
        None
    };
    let sol = solve(prob, &cfg.newton)?;
    let solution = Some(run_solution_diagnostics(&sol, prob)?);
    let identities = identity_checks(sol.w.basis(), prob.s, cfg.verify.samples, ctx.seed);
    let doc = VerifyDoc {
        problem: prob,
        converged: sol.converged,
        identities,
        diagnostics: DiagnosticsReport {
            family_version: TEST_FAMILY_VERSION.into(),
            operator,
            solution,
        },
    };
    ctx.report("diagnostics.json", &doc)?;
    Ok(if sol.converged {
        Status::Ok
    } else {
        Status::NotConverged
    })
}

fn run_sweep(ctx: &mut Ctx) -> Result<Status, CliError> {
    let Some(sweep) = ctx.cfg.sweep.clone() else {
        return Err(CliError::Usage("`sweep` needs a [sweep] block in the configuration".into()));
    };
    let path = match sweep {
        SweepConfig::Pq { p, q, steps } => {
            write_pq_sweep(ctx, p, q, steps)?;
            return Ok(Status::Ok);
        }
        SweepConfig::Coupling { from, to, steps } => PathSpec::Coupling { from, to, steps },
        SweepConfig::Order { from, to, steps } => PathSpec::Order { from, to, steps },
    };
    let res = continuation(&ctx.cfg.problem, path, None, &ctx.cfg.newton)?;
    let rows = res
        .points
        .iter()
        .map(|pt| {
            let u = synthesize(&pt.solution.w.u);
            let v = synthesize(&pt.solution.w.v);
            let sup = |x: &[f64]| x.iter().fold(0.0f64, |m, z| m.max(z.abs()));
            vec![
                pt.t.into(),
                pt.lambda.into(),
                pt.mu.into(),
                pt.s.into(),
                pt.solution.converged.into(),
                pt.solution.iterations.into(),
                pt.solution.residual.into(),
                pt.solution.energy.into(),
                pt.null_dimension.into(),
                sup(&u).into(),
                sup(&v).into(),
            ]
        })
        .collect();
    ctx.csv(
        "sweep.csv",
        &[
            "t", "lambda", "mu", "s", "converged", "iterations", "residual", "energy",
            "null_dimension", "sup_u", "sup_v",
        ],
        rows,
    )?;
    ctx.report("sweep.json", &res)?;
    Ok(if res.completed {
        Status::Ok
    } else {
        Status::NotConverged
    })
}
