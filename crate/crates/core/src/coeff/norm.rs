//! Pointwise mixed `ℓ^p → ℓ^{p'}` matrix norms and their Lebesgue norms over a mesh.

use crate::error::{Error, Result};
use crate::linalg::{lp_norm2, Point, SymMat2};
use crate::mesh::TriangleMesh;
use crate::par;
use crate::quadrature::{integrate_element, QuadSpec, TriangleRule};

use super::MatrixField;

const SCAN_SAMPLES: usize = 4096;
const GOLDEN_ITERS: usize = 60;

/// Hölder conjugate `p' = p/(p−1)`.
pub fn dual_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// `p'' = p/(p−2)` with `2/p + 1/p'' = 1`; `∞` at `p = 2`.
pub fn double_dual_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 2.0 {
        f64::INFINITY
    } else {
        p / (p - 2.0)
    }
}

/// Evaluator of `m(M) = sup_ζ ‖Mζ‖_{ℓ^{p'}} / ‖ζ‖_{ℓ^p}` for a fixed `p ≥ 2`.
///
/// The supremum over the unit circle is located by a uniform angular scan of
/// `[0, π)` and polished by golden-section search around the best sample.
/// Matrices of the form `c·I` reuse the scanned value of `I`.
#[derive(Debug, Clone, Copy)]
pub struct MixedNorm {
    p: f64,
    p_dual: f64,
    identity: f64,
}

impl MixedNorm {
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 2.0) {
            return Err(Error::InvalidArgument(format!("mixed matrix norm needs p >= 2, got {p}")));
        }
        let mut n = MixedNorm { p, p_dual: dual_exponent(p), identity: 0.0 };
        n.identity = n.scan(&SymMat2::IDENTITY);
        Ok(n)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Pointwise norm; exact spectral norm at `p = 2`.
    pub fn eval(&self, m: &SymMat2) -> f64 {
        if self.p == 2.0 {
            return if m.is_finite() { m.spectral_norm() } else { f64::NAN };
        }
        match m.as_scalar() {
            Some(c) => c.abs() * self.identity,
            None => self.scan(m),
        }
    }

    fn ratio(&self, m: &SymMat2, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        let v = m.apply(Point::new(c, s));
        lp_norm2(v.x, v.y, self.p_dual) / lp_norm2(c, s, self.p)
    }

    /// Full angular scan without the scalar shortcut.
    pub fn scan(&self, m: &SymMat2) -> f64 {
        if !m.is_finite() {
            return f64::NAN;
        }
        let step = std::f64::consts::PI / SCAN_SAMPLES as f64;
        let (mut best_k, mut best) = (0usize, f64::NEG_INFINITY);
        for k in 0..SCAN_SAMPLES {
            let r = self.ratio(m, k as f64 * step);
            if r > best {
                best = r;
                best_k = k;
            }
        }
        // golden-section polish on the bracket around the best sample
        let center = best_k as f64 * step;
        let (mut a, mut b) = (center - step, center + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let mut f1 = self.ratio(m, x1);
        let mut f2 = self.ratio(m, x2);
        for _ in 0..GOLDEN_ITERS {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = self.ratio(m, x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = self.ratio(m, x1);
            }
        }
        best.max(f1).max(f2)
    }
}

/// `sup_{ζ≠0} ‖Mζ‖_{ℓ^{p'}} / ‖ζ‖_{ℓ^p}` for `p ≥ 2`; the spectral norm at `p = 2`.
pub fn matrix_mixed_norm(m: &SymMat2, p: f64) -> Result<f64> {
    Ok(MixedNorm::new(p)?.scan(m))
}

fn first_invalid(field: &dyn MatrixField, mesh: &TriangleMesh, rule: &TriangleRule, quad: QuadSpec, norm: &MixedNorm) -> Error {
    let features = field.features();
    for t in 0..mesh.num_triangles() {
        let mut bad = None;
        integrate_element(&mesh.triangle_vertices(t), rule, &features, quad.interface_depth, |x, _| {
            if bad.is_none() && !norm.eval(&field.eval(x)).is_finite() {
                bad = Some(x);
            }
        });
        if let Some(x) = bad {
            return Error::InvalidSample { x: x.x, y: x.y };
        }
    }
    Error::InvalidSample { x: f64::NAN, y: f64::NAN }
}

/// `|||M|||_{s,Ω} = ‖m‖_{s,Ω}` with `m` the pointwise mixed norm for exponent `p`.
///
/// `s = ∞` is the maximum over all quadrature points plus one-sided samples
/// along the field's interfaces.
pub fn field_norm(field: &dyn MatrixField, s: f64, p: f64, mesh: &TriangleMesh, quad: QuadSpec) -> Result<f64> {
    if !(s >= 1.0) {
        return Err(Error::InvalidArgument(format!("outer exponent must be >= 1, got {s}")));
    }
    let norm = MixedNorm::new(p)?;
    let rule = TriangleRule::new(quad.order)?;
    let features = field.features();
    let pointwise = |x: Point| norm.eval(&field.eval(x));

    let mut sup = par::max(mesh.num_triangles(), |t| {
        let mut m = f64::NEG_INFINITY;
        integrate_element(&mesh.triangle_vertices(t), &rule, &features, quad.interface_depth, |x, _| {
            let v = pointwise(x);
            m = if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) };
        });
        m
    });
    if !sup.is_finite() {
        return Err(first_invalid(field, mesh, &rule, quad, &norm));
    }
    if s.is_infinite() {
        let bbox = mesh.bounding_box();
        for iface in &features.interfaces {
            for x in iface.one_sided_samples(&bbox) {
                if mesh.contains(x) {
                    let v = pointwise(x);
                    if !v.is_finite() {
                        return Err(Error::InvalidSample { x: x.x, y: x.y });
                    }
                    sup = sup.max(v);
                }
            }
        }
        return Ok(sup);
    }
    if sup == 0.0 {
        return Ok(0.0);
    }
    // scale by the sampled maximum so large s cannot overflow
    let integral = par::sum(mesh.num_triangles(), |t| {
        let mut acc = 0.0;
        integrate_element(&mesh.triangle_vertices(t), &rule, &features, quad.interface_depth, |x, w| {
            acc += w * (pointwise(x) / sup).powf(s);
        });
        acc
    });
    Ok(sup * integral.powf(1.0 / s))
}
