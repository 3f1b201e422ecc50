//! Run configuration in TOML or JSON.
//!
//! ```toml
//! command = "solve"            # optional; must match the subcommand
//!
//! [problem]
//! domain = "interval"          # or "rectangle"
//! extents = [1.0]              # default: unit interval / unit square
//! operator = "spectral"        # or "restricted" (intervals only)
//! s = 0.5
//! p = 3.0
//! q = 3.0
//! lambda = 0.0
//! mu = 0.0
//! # alpha = 0.5              # default: middle of the admissible window
//! # modes = 32               # default 32 (interval) / 64 (rectangle)
//! # grid = 128               # cells per axis; default 4 * modes / 64
//!
//! [sweep]
//! parameter = "pq"             # or "coupling" / "order"
//! p = [1.05, 6.0]
//! q = [1.05, 6.0]
//! steps = 100
//!
//! [verify]
//! orders = [0.25, 0.5, 0.75]
//! # grid = 512
//! samples = 16
//!
//! [newton]
//! tol = 1e-10
//! max_iter = 100
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fracsys_core::functional::{default_grid_size, DEFAULT_MODES_1D, DEFAULT_MODES_2D};
use fracsys_core::{DomainKind, FracOrder, ModelDomain, NewtonOptions, OperatorKind, SystemProblem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version of the configuration and report schema.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Gate,
    Spectrum,
    Solve,
    Verify,
    Sweep,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Json,
    Toml,
}

impl ConfigFormat {
    /// `.json` files are JSON, everything else TOML.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parameter", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    /// Gate over a `steps x steps` grid of exponents.
    Pq { p: [f64; 2], q: [f64; 2], steps: usize },
    /// Continuation in `(lambda, mu)`.
    Coupling { from: [f64; 2], to: [f64; 2], steps: usize },
    /// Continuation in `s`.
    Order { from: f64, to: f64, steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_orders")]
    pub orders: Vec<f64>,
    /// Cells for the operator probes; the problem grid when absent.
    pub grid: Option<usize>,
    /// Random fields per identity check.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_orders() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_samples() -> usize {
    16
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            orders: default_orders(),
            grid: None,
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNewton {
    tol: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    #[serde(default = "default_domain")]
    domain: DomainKind,
    extents: Option<Vec<f64>>,
    #[serde(default = "default_operator")]
    operator: OperatorKind,
    s: f64,
    p: f64,
    q: f64,
    #[serde(default)]
    lambda: f64,
    #[serde(default)]
    mu: f64,
    alpha: Option<f64>,
    modes: Option<usize>,
    grid: Option<usize>,
}

fn default_domain() -> DomainKind {
    DomainKind::Interval
}

fn default_operator() -> OperatorKind {
    OperatorKind::Spectral
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    command: Option<Command>,
    problem: RawProblem,
    sweep: Option<SweepConfig>,
    verify: Option<VerifyConfig>,
    newton: Option<RawNewton>,
    output: Option<RawOutput>,
}

/// A validated configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub problem: SystemProblem,
    /// `alpha` was taken from the gate rather than the file.
    pub alpha_defaulted: bool,
    pub sweep: Option<SweepConfig>,
    pub verify: VerifyConfig,
    pub newton: NewtonOptions,
    pub output_dir: Option<PathBuf>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn parse_raw(text: &str, format: ConfigFormat) -> Result<RawConfig, ConfigError> {
    match format {
        ConfigFormat::Json => serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }),
        ConfigFormat::Toml => toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |r| line_col(text, r.start));
            ConfigError::Syntax {
                line,
                column,
                message: e.message().to_string(),
            }
        }),
    }
}

/// Parse and validate a configuration.
pub fn parse_config(text: &str, format: ConfigFormat) -> Result<RunConfig, ConfigError> {
    let raw = parse_raw(text, format)?;
    if let Some(v) = raw.schema_version {
        if v != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("this build reads schema version {SCHEMA_VERSION}, got {v}"),
            ));
        }
    }
    let rp = raw.problem;
    let s = FracOrder::new(rp.s).map_err(|_| {
        invalid("problem.s", format!("the order must satisfy 0 < s < 1, got {}", rp.s))
    })?;
    for (name, v) in [("problem.p", rp.p), ("problem.q", rp.q)] {
        if !(v > 1.0 && v.is_finite()) {
            let short = &name[8..];
            return Err(invalid(name, format!("{short} must exceed 1, got {v}")));
        }
    }
    let modes = rp.modes.unwrap_or(match rp.domain {
        DomainKind::Interval => DEFAULT_MODES_1D,
        DomainKind::Rectangle => DEFAULT_MODES_2D,
    });
    if modes == 0 {
        return Err(invalid("problem.modes", "the truncation needs at least one mode"));
    }
    let extents = rp.extents.unwrap_or(match rp.domain {
        DomainKind::Interval => vec![1.0],
        DomainKind::Rectangle => vec![1.0, 1.0],
    });
    let grid = rp.grid.unwrap_or_else(|| default_grid_size(rp.domain, modes));
    let domain = ModelDomain::new(rp.domain, extents, grid)
        .map_err(|e| invalid("problem.extents/grid", e.to_string()))?;
    let mut problem = SystemProblem::new(domain, rp.operator, s, rp.p, rp.q, modes)
        .map_err(|e| invalid("problem", e.to_string()))?
        .with_coupling(rp.lambda, rp.mu)
        .map_err(|e| invalid("problem.lambda/mu", e.to_string()))?;
    let alpha_defaulted = rp.alpha.is_none();
    if let Some(alpha) = rp.alpha {
        problem = problem.with_alpha(alpha).map_err(|_| {
            invalid(
                "problem.alpha",
                format!("alpha must satisfy 0 < alpha < 2s = {}, got {alpha}", 2.0 * rp.s),
            )
        })?;
    }

    if let Some(sweep) = &raw.sweep {
        validate_sweep(sweep)?;
    }
    let verify = raw.verify.unwrap_or_default();
    for &o in &verify.orders {
        FracOrder::new(o).map_err(|_| {
            invalid("verify.orders", format!("orders must satisfy 0 < s < 1, got {o}"))
        })?;
    }
    let mut newton = NewtonOptions::default();
    if let Some(n) = raw.newton {
        if let Some(tol) = n.tol {
            if tol.is_nan() || tol <= 0.0 {
                return Err(invalid("newton.tol", format!("tolerance must be positive, got {tol}")));
            }
            newton.tol = tol;
        }
        if let Some(it) = n.max_iter {
            newton.max_iter = it;
        }
    }
    Ok(RunConfig {
        command: raw.command,
        problem,
        alpha_defaulted,
        sweep: raw.sweep,
        verify,
        newton,
        output_dir: raw.output.and_then(|o| o.dir),
    })
}

fn validate_sweep(sweep: &SweepConfig) -> Result<(), ConfigError> {
    match sweep {
        SweepConfig::Pq { p, q, steps } => {
            if *steps == 0 {
                return Err(invalid("sweep.steps", "at least one sample per axis"));
            }
            for (name, r) in [("sweep.p", p), ("sweep.q", q)] {
                if !(r[0] > 1.0 && r[1] >= r[0] && r[1].is_finite()) {
                    return Err(invalid(name, format!("need 1 < lo <= hi, got {r:?}")));
                }
            }
        }
        SweepConfig::Coupling { steps, .. } | SweepConfig::Order { steps, .. } if *steps == 0 => {
            return Err(invalid("sweep.steps", "a path needs at least one step"));
        }
        SweepConfig::Order { from, to, .. } => {
            for v in [from, to] {
                if !(*v > 0.0 && *v < 1.0) {
                    return Err(invalid("sweep.from/to", format!("orders must satisfy 0 < s < 1, got {v}")));
                }
            }
        }
        SweepConfig::Coupling { .. } => {}
    }
    Ok(())
}

/// Read and parse a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, ConfigFormat::from_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\ns = 0.5\np = 3.0\nq = 3.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL, ConfigFormat::Toml).unwrap();
        assert_eq!(c.problem.modes, 32);
        assert_eq!(c.problem.domain.grid_size(), 128);
        assert_eq!(c.problem.operator, OperatorKind::Spectral);
        assert_eq!((c.problem.lambda, c.problem.mu), (0.0, 0.0));
        assert!(c.alpha_defaulted);
        // window (1/2 - 1/4, 1 - 1/2 + 1/4)
        assert!((c.problem.alpha - 0.5).abs() < 1e-15);
        assert!(c.command.is_none() && c.sweep.is_none());
    }

    #[test]
    fn json_and_toml_agree() {
        let j = r#"{"problem": {"s": 0.5, "p": 3.0, "q": 3.0, "alpha": 0.4}}"#;
        let c = parse_config(j, ConfigFormat::Json).unwrap();
        assert_eq!(c.problem.alpha, 0.4);
        assert!(!c.alpha_defaulted);
    }

    #[test]
    fn out_of_range_order_names_the_condition() {
        let text = MINIMAL.replace("s = 0.5", "s = 1.2");
        let e = parse_config(&text, ConfigFormat::Toml).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("problem.s") && msg.contains("0 < s < 1"), "{msg}");
        let text = MINIMAL.replace("p = 3.0", "p = 0.5");
        assert!(parse_config(&text, ConfigFormat::Toml)
            .unwrap_err()
            .to_string()
            .contains("p must exceed 1"));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let text = "[problem]\ns = 0.5\np = = 3\n";
        match parse_config(text, ConfigFormat::Toml).unwrap_err() {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        match parse_config("{\n\"problem\": {\n  \"s\": 0.5,,\n}}", ConfigFormat::Json).unwrap_err() {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}nonsense = 1\n");
        match parse_config(&text, ConfigFormat::Toml).unwrap_err() {
            ConfigError::Syntax { line, message, .. } => {
                assert_eq!(line, 5);
                assert!(message.contains("nonsense"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn sweep_blocks_parse() {
        let text = format!("{MINIMAL}[sweep]\nparameter = \"pq\"\np = [1.05, 6.0]\nq = [1.05, 6.0]\nsteps = 100\n");
        let c = parse_config(&text, ConfigFormat::Toml).unwrap();
        assert_eq!(
            c.sweep,
            Some(SweepConfig::Pq {
                p: [1.05, 6.0],
                q: [1.05, 6.0],
                steps: 100
            })
        );
        let bad = format!("{MINIMAL}[sweep]\nparameter = \"order\"\nfrom = 0.5\nto = 1.5\nsteps = 4\n");
        assert!(parse_config(&bad, ConfigFormat::Toml).is_err());
    }

    #[test]
    fn restricted_rectangle_is_rejected() {
        let text = MINIMAL.replace("[problem]\n", "[problem]\ndomain = \"rectangle\"\noperator = \"restricted\"\n");
        assert!(matches!(
            parse_config(&text, ConfigFormat::Toml),
            Err(ConfigError::Validation { .. })
        ));
    }
}
