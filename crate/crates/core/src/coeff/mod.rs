//! Diffusion coefficients `A₀`, their simplifications `A_ε`, and the derived
//! matrix fields entering the modelling-error bound.

mod norm;

pub use norm::{double_dual_exponent, dual_exponent, field_norm, matrix_mixed_norm, MixedNorm};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Point, SymMat2};
use crate::mesh::{BoundingBox, TriangleMesh};
use crate::par;
use crate::quadrature::{Features, Interface, QuadSpec, TriangleRule};

/// A symmetric-matrix-valued function on the domain.
pub trait MatrixField: Sync {
    fn eval(&self, x: Point) -> SymMat2;

    /// Interfaces where the field is non-smooth; used to refine quadrature.
    fn features(&self) -> Features {
        Features::smooth()
    }
}

/// A scalar function on the domain (right-hand sides, exact solutions).
pub trait ScalarField: Sync {
    fn eval(&self, x: Point) -> f64;
}

impl<F: Fn(Point) -> f64 + Sync> ScalarField for F {
    fn eval(&self, x: Point) -> f64 {
        self(x)
    }
}

/// Uniform spectral bounds `α ≤ λ(A(x)) ≤ β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub alpha: f64,
    pub beta: f64,
}

impl SpectralBounds {
    pub fn ratio(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// Where a [`SpectralBounds`] value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsSource {
    Analytic,
    /// Dense sampling, with `α` deflated and `β` inflated by 1%.
    Sampled,
}

impl fmt::Display for BoundsSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundsSource::Analytic => "analytic",
            BoundsSource::Sampled => "sampled",
        })
    }
}

/// Isotropic disc inclusion: `k_in` inside the circle, `k_out` outside, with an
/// optional affine blend over a strip of width `strip_width` centred on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpDiscSpec {
    pub center: Point,
    pub radius: f64,
    pub k_in: f64,
    pub k_out: f64,
    pub strip_width: f64,
}

impl JumpDiscSpec {
    pub fn with_strip_width(self, eps: f64) -> Self {
        JumpDiscSpec { strip_width: eps, ..self }
    }

    pub fn validate(&self, domain: &BoundingBox) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.radius) {
            return Err(Error::InvalidCoefficient(format!("radius must be positive, got {}", self.radius)));
        }
        if !ok(self.k_in) || !ok(self.k_out) {
            return Err(Error::InvalidCoefficient("diffusivities must be positive".into()));
        }
        if !(self.strip_width >= 0.0) || !self.strip_width.is_finite() {
            return Err(Error::InvalidCoefficient(format!("strip width must be >= 0, got {}", self.strip_width)));
        }
        if self.strip_width >= 2.0 * self.radius {
            return Err(Error::InvalidCoefficient("strip wider than the disc diameter".into()));
        }
        let reach = self.radius + 0.5 * self.strip_width;
        let c = self.center;
        if c.x - reach < domain.min.x || c.x + reach > domain.max.x || c.y - reach < domain.min.y || c.y + reach > domain.max.y {
            return Err(Error::InvalidCoefficient("disc plus strip escapes the domain".into()));
        }
        Ok(())
    }

    /// `κ₀`: `k_in` for `r < R`, `k_out` for `r ≥ R`.
    pub fn sharp_value(&self, x: Point) -> f64 {
        if x.dist(self.center) < self.radius {
            self.k_in
        } else {
            self.k_out
        }
    }

    /// `κ_ε`: affine in `r` across `[R − ε/2, R + ε/2]`.
    pub fn smoothed_value(&self, x: Point) -> f64 {
        let r = x.dist(self.center);
        let lo = self.radius - 0.5 * self.strip_width;
        let hi = self.radius + 0.5 * self.strip_width;
        if r <= lo {
            self.k_in
        } else if r >= hi {
            self.k_out
        } else {
            self.k_in + (self.k_out - self.k_in) * (r - lo) / self.strip_width
        }
    }

    fn bounds(&self) -> SpectralBounds {
        SpectralBounds { alpha: self.k_in.min(self.k_out), beta: self.k_in.max(self.k_out) }
    }
}

/// `cells × cells` checkerboard on the unit square alternating `k_a`, `k_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckerboardSpec {
    pub cells: usize,
    pub k_a: f64,
    pub k_b: f64,
}

#[derive(Clone)]
enum Profile {
    Constant(SymMat2),
    Disc(JumpDiscSpec),
    SmoothedDisc(JumpDiscSpec),
    Checkerboard(CheckerboardSpec),
    Custom { eval: Arc<dyn Fn(Point) -> SymMat2 + Send + Sync>, features: Features },
}

/// Whether a field is the original coefficient or a simplification of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    Exact,
    Simplified { eps: f64 },
}

/// Symmetric positive definite coefficient field.
#[derive(Clone)]
pub struct CoefficientField {
    profile: Profile,
    kind: FieldKind,
    bounds: Option<SpectralBounds>,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let profile = match &self.profile {
            Profile::Constant(m) => format!("Constant({m:?})"),
            Profile::Disc(s) => format!("Disc({s:?})"),
            Profile::SmoothedDisc(s) => format!("SmoothedDisc({s:?})"),
            Profile::Checkerboard(s) => format!("Checkerboard({s:?})"),
            Profile::Custom { .. } => "Custom".to_string(),
        };
        f.debug_struct("CoefficientField")
            .field("profile", &profile)
            .field("kind", &self.kind)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl CoefficientField {
    /// Spatially constant SPD matrix.
    pub fn constant(m: SymMat2) -> Result<Self> {
        let (lo, hi) = m.eigenvalues();
        if !m.is_finite() || !(lo > 0.0) {
            return Err(Error::InvalidCoefficient(format!("constant coefficient {m:?} is not positive definite")));
        }
        Ok(CoefficientField { profile: Profile::Constant(m), kind: FieldKind::Exact, bounds: Some(SpectralBounds { alpha: lo, beta: hi }) })
    }

    pub fn identity() -> Self {
        CoefficientField::constant(SymMat2::IDENTITY).expect("identity is SPD")
    }

    /// Sharp disc inclusion (`strip_width` must be 0) in the unit square.
    pub fn disc_jump(spec: JumpDiscSpec) -> Result<Self> {
        Self::disc_jump_in(spec, &BoundingBox::unit_square())
    }

    pub fn disc_jump_in(spec: JumpDiscSpec, domain: &BoundingBox) -> Result<Self> {
        if spec.strip_width != 0.0 {
            return Err(Error::InvalidCoefficient("sharp disc coefficient needs strip width 0".into()));
        }
        spec.validate(domain)?;
        Ok(CoefficientField { profile: Profile::Disc(spec), kind: FieldKind::Exact, bounds: Some(spec.bounds()) })
    }

    /// Disc inclusion with the jump replaced by an affine strip of width `ε > 0`.
    pub fn disc_jump_smoothed(spec: JumpDiscSpec) -> Result<Self> {
        Self::disc_jump_smoothed_in(spec, &BoundingBox::unit_square())
    }

    pub fn disc_jump_smoothed_in(spec: JumpDiscSpec, domain: &BoundingBox) -> Result<Self> {
        if !(spec.strip_width > 0.0) {
            return Err(Error::InvalidCoefficient("smoothed disc coefficient needs strip width > 0".into()));
        }
        spec.validate(domain)?;
        Ok(CoefficientField {
            profile: Profile::SmoothedDisc(spec),
            kind: FieldKind::Simplified { eps: spec.strip_width },
            bounds: Some(spec.bounds()),
        })
    }

    pub fn checkerboard(spec: CheckerboardSpec) -> Result<Self> {
        if spec.cells == 0 || !(spec.k_a > 0.0) || !(spec.k_b > 0.0) {
            return Err(Error::InvalidCoefficient("checkerboard needs cells >= 1 and positive values".into()));
        }
        let bounds = SpectralBounds { alpha: spec.k_a.min(spec.k_b), beta: spec.k_a.max(spec.k_b) };
        Ok(CoefficientField { profile: Profile::Checkerboard(spec), kind: FieldKind::Exact, bounds: Some(bounds) })
    }

    /// Arbitrary evaluator. Without declared bounds they are estimated by sampling.
    pub fn custom(
        eval: impl Fn(Point) -> SymMat2 + Send + Sync + 'static,
        bounds: Option<SpectralBounds>,
        features: Features,
    ) -> Result<Self> {
        if let Some(b) = bounds {
            if !(b.alpha > 0.0 && b.alpha <= b.beta) {
                return Err(Error::InvalidCoefficient(format!("invalid declared bounds {b:?}")));
            }
        }
        Ok(CoefficientField { profile: Profile::Custom { eval: Arc::new(eval), features }, kind: FieldKind::Exact, bounds })
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn analytic_bounds(&self) -> Option<SpectralBounds> {
        self.bounds
    }

    /// The disc description when this is a (sharp or smoothed) disc field.
    pub fn disc_spec(&self) -> Option<JumpDiscSpec> {
        match self.profile {
            Profile::Disc(s) | Profile::SmoothedDisc(s) => Some(s),
            _ => None,
        }
    }

    /// Spectral bounds on `mesh`: analytic when declared, otherwise the
    /// extreme eigenvalues over at least `10⁵` quadrature points with a 1%
    /// safety margin.
    pub fn spectral_bounds(&self, mesh: &TriangleMesh) -> Result<(SpectralBounds, BoundsSource)> {
        if let Some(b) = self.bounds {
            return Ok((b, BoundsSource::Analytic));
        }
        let (lo, hi) = sample_eigen_range(self, mesh, 100_000)?;
        if !(lo > 0.0) {
            return Err(Error::InvalidCoefficient(format!("sampled minimum eigenvalue {lo} is not positive")));
        }
        Ok((SpectralBounds { alpha: 0.99 * lo, beta: 1.01 * hi }, BoundsSource::Sampled))
    }
}

/// Extreme eigenvalues of `field` over a uniformly subdivided quadrature
/// cloud of at least `min_points` points.
pub fn sample_eigen_range(field: &dyn MatrixField, mesh: &TriangleMesh, min_points: usize) -> Result<(f64, f64)> {
    let rule = TriangleRule::new(5)?;
    let mut depth = 0u32;
    while mesh.num_triangles() * rule.len() * 4usize.pow(depth) < min_points {
        depth += 1;
    }
    let pairs = par::map(mesh.num_triangles(), |t| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        uniform_points(&mesh.triangle_vertices(t), &rule, depth, &mut |x| {
            let (a, b) = field.eval(x).eigenvalues();
            lo = if a.is_nan() { f64::NAN } else { lo.min(a) };
            hi = if b.is_nan() { f64::NAN } else { hi.max(b) };
        });
        (lo, hi)
    });
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (a, b) in pairs {
        if a.is_nan() || b.is_nan() {
            return Err(Error::InvalidCoefficient("coefficient produced a non-finite sample".into()));
        }
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok((lo, hi))
}

fn uniform_points(tri: &[Point; 3], rule: &TriangleRule, depth: u32, f: &mut impl FnMut(Point)) {
    if depth == 0 {
        rule.apply(tri, |x, _| f(x));
        return;
    }
    let m01 = tri[0].midpoint(tri[1]);
    let m12 = tri[1].midpoint(tri[2]);
    let m20 = tri[2].midpoint(tri[0]);
    for child in [[tri[0], m01, m20], [m01, tri[1], m12], [m20, m12, tri[2]], [m01, m12, m20]] {
        uniform_points(&child, rule, depth - 1, f);
    }
}

impl MatrixField for CoefficientField {
    fn eval(&self, x: Point) -> SymMat2 {
        match &self.profile {
            Profile::Constant(m) => *m,
            Profile::Disc(s) => SymMat2::scalar(s.sharp_value(x)),
            Profile::SmoothedDisc(s) => SymMat2::scalar(s.smoothed_value(x)),
            Profile::Checkerboard(s) => {
                let n = s.cells as f64;
                let i = ((x.x * n).floor() as i64).clamp(0, s.cells as i64 - 1);
                let j = ((x.y * n).floor() as i64).clamp(0, s.cells as i64 - 1);
                SymMat2::scalar(if (i + j) % 2 == 0 { s.k_a } else { s.k_b })
            }
            Profile::Custom { eval, .. } => eval(x),
        }
    }

    fn features(&self) -> Features {
        match &self.profile {
            Profile::Constant(_) => Features::smooth(),
            Profile::Disc(s) => Features {
                interfaces: vec![Interface::Circle { center: s.center, radius: s.radius }],
                min_width: None,
            },
            Profile::SmoothedDisc(s) => Features {
                interfaces: vec![
                    Interface::Circle { center: s.center, radius: s.radius - 0.5 * s.strip_width },
                    Interface::Circle { center: s.center, radius: s.radius + 0.5 * s.strip_width },
                ],
                min_width: Some(s.strip_width),
            },
            Profile::Checkerboard(s) => {
                let mut interfaces = Vec::with_capacity(2 * s.cells);
                for k in 1..s.cells {
                    let c = k as f64 / s.cells as f64;
                    interfaces.push(Interface::VerticalLine(c));
                    interfaces.push(Interface::HorizontalLine(c));
                }
                Features { interfaces, min_width: None }
            }
            Profile::Custom { features, .. } => features.clone(),
        }
    }
}

/// `B_ε = (A_ε − A₀) A₀⁻¹ (A_ε − A₀)`; symmetric positive semidefinite.
pub struct BField<'a> {
    a0: &'a CoefficientField,
    aeps: &'a CoefficientField,
}

/// `D_ε = A_ε^{-1/2} A₀ A_ε^{-1/2}`; symmetric positive definite.
pub struct DField<'a> {
    a0: &'a CoefficientField,
    aeps: &'a CoefficientField,
}

/// `A₀ − A_ε`.
pub struct DifferenceField<'a> {
    a0: &'a CoefficientField,
    aeps: &'a CoefficientField,
}

fn check_declared(field: &CoefficientField, name: &str) -> Result<()> {
    match field.analytic_bounds() {
        Some(b) if !(b.alpha > 0.0) => Err(Error::InvalidCoefficient(format!("{name} is not positive definite"))),
        _ => Ok(()),
    }
}

/// Pointwise samples that are singular surface as [`Error::InvalidSample`]
/// when the field is integrated.
pub fn make_b_eps<'a>(a0: &'a CoefficientField, aeps: &'a CoefficientField) -> Result<BField<'a>> {
    check_declared(a0, "A0")?;
    check_declared(aeps, "A_eps")?;
    Ok(BField { a0, aeps })
}

pub fn make_d_eps<'a>(a0: &'a CoefficientField, aeps: &'a CoefficientField) -> Result<DField<'a>> {
    check_declared(a0, "A0")?;
    check_declared(aeps, "A_eps")?;
    Ok(DField { a0, aeps })
}

pub fn difference_field<'a>(a0: &'a CoefficientField, aeps: &'a CoefficientField) -> DifferenceField<'a> {
    DifferenceField { a0, aeps }
}

fn positive_definite(m: &SymMat2) -> bool {
    m.xx > 0.0 && m.det() > 0.0
}

impl MatrixField for BField<'_> {
    fn eval(&self, x: Point) -> SymMat2 {
        let a0 = self.a0.eval(x);
        if !positive_definite(&a0) {
            return SymMat2::new(f64::NAN, f64::NAN, f64::NAN);
        }
        let diff = self.aeps.eval(x) - a0;
        a0.inverse().congruence(&diff)
    }

    fn features(&self) -> Features {
        self.a0.features().merge(self.aeps.features())
    }
}

impl MatrixField for DField<'_> {
    fn eval(&self, x: Point) -> SymMat2 {
        let ae = self.aeps.eval(x);
        if !positive_definite(&ae) {
            return SymMat2::new(f64::NAN, f64::NAN, f64::NAN);
        }
        let a0 = self.a0.eval(x);
        if a0 == ae {
            return SymMat2::IDENTITY;
        }
        if let (Some(k0), Some(ke)) = (a0.as_scalar(), ae.as_scalar()) {
            return SymMat2::scalar(k0 / ke);
        }
        a0.congruence(&ae.inv_sqrt())
    }

    fn features(&self) -> Features {
        self.a0.features().merge(self.aeps.features())
    }
}

impl MatrixField for DifferenceField<'_> {
    fn eval(&self, x: Point) -> SymMat2 {
        self.a0.eval(x) - self.aeps.eval(x)
    }

    fn features(&self) -> Features {
        self.a0.features().merge(self.aeps.features())
    }
}

/// `‖A₀ − A_ε‖_{q,Ω}` with the spectral norm pointwise.
pub fn coefficient_difference_norm(
    a0: &CoefficientField,
    aeps: &CoefficientField,
    q: f64,
    mesh: &TriangleMesh,
    quad: QuadSpec,
) -> Result<f64> {
    field_norm(&difference_field(a0, aeps), q, 2.0, mesh, quad)
}
