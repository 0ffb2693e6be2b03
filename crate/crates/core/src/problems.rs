//! Built-in benchmark problems.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::coeff::{CoefficientField, FieldKind, JumpDiscSpec, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::Point;

pub type SharedScalar = Arc<dyn ScalarField + Send + Sync>;
pub type SharedGradient = Arc<dyn Fn(Point) -> Point + Send + Sync>;

/// Closed-form solution of the original problem.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: SharedScalar,
    pub grad: SharedGradient,
}

/// How simplified coefficients `A_ε` are obtained from `A₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Simplification {
    /// `A_ε = A₀` for every `ε`.
    None,
    /// Affine strip of width `ε` across the disc interface.
    DiscStrip(JumpDiscSpec),
}

/// `−div(A₀∇u) = f` on the unit square with `u = 0` on the boundary.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub a0: CoefficientField,
    pub f: SharedScalar,
    pub exact: Option<ExactSolution>,
    pub simplification: Simplification,
    /// Initial strip width; 0 when there is no simplification.
    pub eps0: f64,
    /// Initial grid resolution.
    pub n0: usize,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("a0", &self.a0)
            .field("simplification", &self.simplification)
            .field("eps0", &self.eps0)
            .field("n0", &self.n0)
            .finish_non_exhaustive()
    }
}

impl Problem {
    /// `A_ε` for strip width `eps`; `eps = 0` gives `A₀`.
    pub fn simplified(&self, eps: f64) -> Result<CoefficientField> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("strip width must be >= 0, got {eps}")));
        }
        match self.simplification {
            Simplification::DiscStrip(spec) if eps > 0.0 => {
                CoefficientField::disc_jump_smoothed(spec.with_strip_width(eps))
            }
            _ => Ok(self.a0.clone().with_kind(FieldKind::Simplified { eps })),
        }
    }

    pub fn has_simplification(&self) -> bool {
        !matches!(self.simplification, Simplification::None)
    }
}

pub const BUILTIN_NAMES: &[&str] = &["poisson_sine", "disc_jump"];

/// `A = I`, `u = sin πx sin πy`, `f = 2π² u`.
pub fn poisson_sine() -> Problem {
    let u = |x: Point| (PI * x.x).sin() * (PI * x.y).sin();
    let f = move |x: Point| 2.0 * PI * PI * u(x);
    let grad = |x: Point| {
        Point::new(PI * (PI * x.x).cos() * (PI * x.y).sin(), PI * (PI * x.x).sin() * (PI * x.y).cos())
    };
    Problem {
        name: "poisson_sine".into(),
        a0: CoefficientField::identity(),
        f: Arc::new(f),
        exact: Some(ExactSolution { u: Arc::new(u), grad: Arc::new(grad) }),
        simplification: Simplification::None,
        eps0: 0.0,
        n0: 8,
    }
}

/// The disc inclusion used by [`disc_jump`].
pub fn disc_jump_spec() -> JumpDiscSpec {
    JumpDiscSpec { center: Point::new(0.5, 0.5), radius: 0.3, k_in: 10.0, k_out: 1.0, strip_width: 0.0 }
}

/// `κ₀ = 10` in the disc of radius 0.3 about the centre, 1 outside; `f = 1`.
pub fn disc_jump() -> Problem {
    disc_problem("disc_jump", disc_jump_spec(), Arc::new(|_: Point| 1.0), 0.125, 16).expect("builtin spec is valid")
}

pub fn disc_problem(name: &str, spec: JumpDiscSpec, f: SharedScalar, eps0: f64, n0: usize) -> Result<Problem> {
    let a0 = CoefficientField::disc_jump(spec)?;
    if eps0 > 0.0 {
        CoefficientField::disc_jump_smoothed(spec.with_strip_width(eps0))?;
    }
    Ok(Problem {
        name: name.into(),
        a0,
        f,
        exact: None,
        simplification: Simplification::DiscStrip(spec),
        eps0,
        n0,
    })
}

pub fn builtin(name: &str) -> Result<Problem> {
    match name {
        "poisson_sine" => Ok(poisson_sine()),
        "disc_jump" => Ok(disc_jump()),
        other => Err(Error::InvalidArgument(format!(
            "unknown problem '{other}'; expected one of {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}
