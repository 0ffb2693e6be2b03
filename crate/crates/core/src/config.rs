//! TOML run configuration for the `solve` subcommand.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::coeff::{CheckerboardSpec, CoefficientField, FieldKind, JumpDiscSpec};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, ExponentPolicy};
use crate::linalg::{Point, SymMat2};
use crate::problems::{builtin, disc_problem, Problem, SharedScalar, Simplification};
use crate::quadrature::QuadSpec;
use crate::strategy::{StrategyConfig, DEFAULT_BUDGET, DEFAULT_EPS_MIN};

/// Largest composite-quadrature depth accepted from a config.
const MAX_INTERFACE_DEPTH: u32 = 18;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    /// `xx = yy = value`, `xy = 0` unless given.
    Constant { value: f64, xy: Option<f64>, yy: Option<f64> },
    /// Sharp disc; simplified by strips of width `ε`.
    DiscJump { center: [f64; 2], radius: f64, k_in: f64, k_out: f64 },
    /// Disc already blended over `width`; used as is.
    DiscJumpSmoothed { center: [f64; 2], radius: f64, k_in: f64, k_out: f64, width: f64 },
    Checkerboard { cells: usize, k_a: f64, k_b: f64 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsSpec {
    Constant { value: f64 },
    /// `2π² sin πx sin πy`
    Sine,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub coefficient: Option<CoefficientSpec>,
    pub rhs: Option<RhsSpec>,
    /// Initial grid is `n × n` squares.
    pub n: Option<usize>,
    pub eps0: Option<f64>,
    pub delta: f64,
    #[serde(default = "default_big_p")]
    pub big_p: f64,
    #[serde(default)]
    pub exponent_policy: ExponentPolicy,
    #[serde(default = "default_c_l")]
    pub c_l: f64,
    #[serde(default = "default_quad_order")]
    pub quad_order: u32,
    #[serde(default = "default_interface_depth")]
    pub interface_depth: u32,
    #[serde(default = "default_flux_iterations")]
    pub flux_iterations: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_eps_min")]
    pub eps_min: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    pub output: Option<PathBuf>,
}

fn default_big_p() -> f64 {
    4.0
}
fn default_c_l() -> f64 {
    1.0
}
fn default_quad_order() -> u32 {
    QuadSpec::default().order
}
fn default_interface_depth() -> u32 {
    QuadSpec::default().interface_depth
}
fn default_flux_iterations() -> usize {
    5
}
fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_eps_min() -> f64 {
    DEFAULT_EPS_MIN
}
fn default_q() -> f64 {
    2.0
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("`{key}`: {msg}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.n {
            if n == 0 || n > 4096 {
                return Err(bad("n", format!("must lie in 1..=4096, got {n}")));
            }
        }
        if let Some(e) = self.eps0 {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(bad("eps0", format!("must be finite and >= 0, got {e}")));
            }
        }
        if !(self.delta >= 0.0) {
            return Err(bad("delta", format!("must be >= 0 (inf allowed), got {}", self.delta)));
        }
        if !(self.big_p > 2.0 && self.big_p.is_finite()) {
            return Err(bad("big_p", format!("must lie in (2, inf), got {}", self.big_p)));
        }
        if !(self.c_l >= 1.0 && self.c_l.is_finite()) {
            return Err(bad("c_l", format!("must be finite and >= 1, got {}", self.c_l)));
        }
        if !(1..=5).contains(&self.quad_order) {
            return Err(bad("quad_order", format!("must lie in 1..=5, got {}", self.quad_order)));
        }
        if self.interface_depth > MAX_INTERFACE_DEPTH {
            return Err(bad("interface_depth", format!("must be <= {MAX_INTERFACE_DEPTH}, got {}", self.interface_depth)));
        }
        if self.flux_iterations > 100 {
            return Err(bad("flux_iterations", format!("must be <= 100, got {}", self.flux_iterations)));
        }
        if self.budget == 0 {
            return Err(bad("budget", "must be >= 1"));
        }
        if !(self.eps_min > 0.0 && self.eps_min.is_finite()) {
            return Err(bad("eps_min", format!("must be finite and > 0, got {}", self.eps_min)));
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(bad("q", format!("must be finite and >= 1, got {}", self.q)));
        }
        Ok(())
    }

    pub fn strategy_config(&self) -> StrategyConfig {
        StrategyConfig {
            delta: self.delta,
            budget: self.budget,
            eps_min: self.eps_min,
            estimator: EstimatorConfig {
                big_p: self.big_p,
                c_l: self.c_l,
                policy: self.exponent_policy,
                quad: QuadSpec::new(self.quad_order, self.interface_depth),
                flux_iterations: self.flux_iterations,
                q: self.q,
            },
            ..StrategyConfig::default()
        }
    }

    /// The builtin problem with any coefficient, data or resolution overrides applied.
    pub fn build_problem(&self) -> Result<Problem> {
        let mut p = builtin(&self.problem).map_err(|e| bad("problem", e))?;
        if let Some(rhs) = &self.rhs {
            p.f = rhs_field(rhs);
            p.exact = None;
        }
        if let Some(spec) = &self.coefficient {
            p = apply_coefficient(p, spec).map_err(|e| bad("coefficient", e))?;
        }
        if let Some(n) = self.n {
            p.n0 = n;
        }
        if let Some(e) = self.eps0 {
            p.eps0 = if p.has_simplification() { e } else { 0.0 };
        }
        if p.eps0 > 0.0 {
            p.simplified(p.eps0).map_err(|e| bad("eps0", e))?;
        }
        Ok(p)
    }
}

fn rhs_field(spec: &RhsSpec) -> SharedScalar {
    match *spec {
        RhsSpec::Constant { value } => Arc::new(move |_: Point| value),
        RhsSpec::Sine => Arc::new(|x: Point| 2.0 * PI * PI * (PI * x.x).sin() * (PI * x.y).sin()),
    }
}

fn apply_coefficient(mut p: Problem, spec: &CoefficientSpec) -> Result<Problem> {
    p.exact = None;
    match *spec {
        CoefficientSpec::Constant { value, xy, yy } => {
            p.a0 = CoefficientField::constant(SymMat2::new(value, xy.unwrap_or(0.0), yy.unwrap_or(value)))?;
            p.simplification = Simplification::None;
            p.eps0 = 0.0;
        }
        CoefficientSpec::DiscJump { center, radius, k_in, k_out } => {
            let disc = JumpDiscSpec { center: Point::new(center[0], center[1]), radius, k_in, k_out, strip_width: 0.0 };
            let eps0 = if p.has_simplification() { p.eps0 } else { 0.125 };
            p = disc_problem(&p.name, disc, p.f.clone(), 0.0, p.n0).map(|q| Problem { eps0, ..q })?;
        }
        CoefficientSpec::DiscJumpSmoothed { center, radius, k_in, k_out, width } => {
            let disc = JumpDiscSpec { center: Point::new(center[0], center[1]), radius, k_in, k_out, strip_width: width };
            p.a0 = CoefficientField::disc_jump_smoothed(disc)?.with_kind(FieldKind::Exact);
            p.simplification = Simplification::None;
            p.eps0 = 0.0;
        }
        CoefficientSpec::Checkerboard { cells, k_a, k_b } => {
            p.a0 = CoefficientField::checkerboard(CheckerboardSpec { cells, k_a, k_b })?;
            p.simplification = Simplification::None;
            p.eps0 = 0.0;
        }
    }
    Ok(p)
}
