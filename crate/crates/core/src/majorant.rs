//! Functional error majorant
//! `M² = (1+γ)‖A∇u_h − y‖²_{A⁻¹} + (1+1/γ) C_Ω² ‖div y + f‖²`
//! with continuous piecewise-linear fluxes `y`.

use std::sync::Arc;

use crate::coeff::{MatrixField, ScalarField};
use crate::error::{Error, Result};
use crate::fem::{element_coefficient_integrals, FeFunction};
use crate::linalg::{Point, SymMat2};
use crate::mesh::TriangleMesh;
use crate::par;
use crate::quadrature::{integrate_element, QuadSpec, TriangleRule};
use crate::sparse::{pcg, CsrMatrix};

/// Relative tolerance of the inner flux solves.
const FLUX_CG_TOL: f64 = 1e-9;

/// Continuous P1 vector field given by nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    mesh: Arc<TriangleMesh>,
    nodal: Vec<[f64; 2]>,
    divergence: Vec<f64>,
}

impl FluxField {
    pub fn from_nodal(mesh: Arc<TriangleMesh>, nodal: Vec<[f64; 2]>) -> Result<Self> {
        if nodal.len() != mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} nodal fluxes for {} vertices",
                nodal.len(),
                mesh.num_vertices()
            )));
        }
        let divergence = par::map(mesh.num_triangles(), |t| {
            let g = mesh.geometry(t);
            let tri = mesh.triangles()[t];
            (0..3).map(|k| nodal[tri[k]][0] * g.grads[k].x + nodal[tri[k]][1] * g.grads[k].y).sum()
        });
        Ok(FluxField { mesh, nodal, divergence })
    }

    pub fn zero(mesh: Arc<TriangleMesh>) -> Self {
        let n = mesh.num_vertices();
        let nt = mesh.num_triangles();
        FluxField { mesh, nodal: vec![[0.0; 2]; n], divergence: vec![0.0; nt] }
    }

    pub fn mesh(&self) -> &Arc<TriangleMesh> {
        &self.mesh
    }

    pub fn nodal(&self) -> &[[f64; 2]] {
        &self.nodal
    }

    /// Elementwise constant `div y`.
    pub fn divergence(&self) -> &[f64] {
        &self.divergence
    }

    /// `y(x)` for `x` in element `t`.
    pub fn eval_in(&self, t: usize, x: Point) -> Point {
        let lam = self.mesh.geometry(t).barycentric(x);
        let tri = self.mesh.triangles()[t];
        let mut out = Point::default();
        for k in 0..3 {
            out = out + lam[k] * Point::new(self.nodal[tri[k]][0], self.nodal[tri[k]][1]);
        }
        out
    }

    fn from_vector(mesh: Arc<TriangleMesh>, v: &[f64]) -> Self {
        let nodal = v.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        FluxField::from_nodal(mesh, nodal).expect("vector length is 2·vertices")
    }

    fn to_vector(&self) -> Vec<f64> {
        self.nodal.iter().flat_map(|y| *y).collect()
    }
}

/// Choice of the free parameter `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Fixed(f64),
    /// `γ = b/a`, or 1 when either term vanishes.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorantBreakdown {
    /// `a = ‖A∇u_h − y‖_{A⁻¹}`
    pub flux_term: f64,
    /// `b = C_Ω ‖div y + f‖₂`
    pub residual_term: f64,
    pub gamma: f64,
    pub value: f64,
    /// `a + b`, the minimum over `γ`.
    pub optimal_value: f64,
}

pub fn optimal_gamma(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        1.0
    } else {
        b / a
    }
}

impl MajorantBreakdown {
    pub fn from_terms(a: f64, b: f64, gamma: Gamma) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("majorant terms must be finite and nonnegative, got a={a} b={b}")));
        }
        let (gamma, value) = match gamma {
            Gamma::Optimal => (optimal_gamma(a, b), a + b),
            Gamma::Fixed(g) => {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::InvalidArgument(format!("gamma must be positive, got {g}")));
                }
                (g, ((1.0 + g) * a * a + (1.0 + 1.0 / g) * b * b).sqrt())
            }
        };
        Ok(MajorantBreakdown { flux_term: a, residual_term: b, gamma, value, optimal_value: a + b })
    }
}

/// Nodal area-weighted average of the elementwise means of `A∇u`.
pub fn reconstruct_flux_averaging(u: &FeFunction, a: &dyn MatrixField, quad: QuadSpec) -> Result<FluxField> {
    let mesh = u.mesh();
    let a_int = element_coefficient_integrals(mesh, a, quad)?;
    let mut sum = vec![[0.0; 2]; mesh.num_vertices()];
    let mut weight = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        // |T| · mean(A∇u) = (∫_T A) ∇u
        let q = a_int[t].apply(u.gradient(t));
        let area = mesh.geometry(t).area;
        for &v in tri {
            sum[v][0] += q.x;
            sum[v][1] += q.y;
            weight[v] += area;
        }
    }
    let nodal = sum.iter().zip(&weight).map(|(s, w)| [s[0] / w, s[1] / w]).collect();
    FluxField::from_nodal(mesh.clone(), nodal)
}

fn check_same_mesh(u: &FeFunction, y: &FluxField) -> Result<()> {
    if Arc::ptr_eq(u.mesh(), y.mesh()) || u.mesh() == y.mesh() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("solution and flux live on different meshes".into()))
    }
}

fn check_c_omega(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("C_Omega must be finite and nonnegative, got {c}")))
    }
}

/// The two terms `(a, b)` by quadrature.
pub fn majorant_terms(
    u: &FeFunction,
    y: &FluxField,
    f: &dyn ScalarField,
    a: &dyn MatrixField,
    c_omega: f64,
    quad: QuadSpec,
) -> Result<(f64, f64)> {
    check_same_mesh(u, y)?;
    check_c_omega(c_omega)?;
    let mesh = u.mesh();
    let rule = TriangleRule::new(quad.order)?;
    let features = a.features();
    let nt = mesh.num_triangles();
    let flux_sq = par::sum(nt, |t| {
        let g = u.gradient(t);
        let mut acc = 0.0;
        integrate_element(&mesh.triangle_vertices(t), &rule, &features, quad.interface_depth, |x, w| {
            let ax = a.eval(x);
            acc += w * ax.inverse().quad_form(ax.apply(g) - y.eval_in(t, x));
        });
        acc
    });
    let res_sq = par::sum(nt, |t| {
        let d = y.divergence()[t];
        let mut acc = 0.0;
        rule.apply(&mesh.triangle_vertices(t), |x, w| {
            let r = d + f.eval(x);
            acc += w * r * r;
        });
        acc
    });
    if !flux_sq.is_finite() || !res_sq.is_finite() {
        return Err(Error::InvalidArgument("majorant terms are not finite".into()));
    }
    Ok((flux_sq.max(0.0).sqrt(), c_omega * res_sq.max(0.0).sqrt()))
}

pub fn evaluate_majorant(
    u: &FeFunction,
    y: &FluxField,
    f: &dyn ScalarField,
    a: &dyn MatrixField,
    gamma: Gamma,
    c_omega: f64,
    quad: QuadSpec,
) -> Result<MajorantBreakdown> {
    if let Gamma::Fixed(g) = gamma {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {g}")));
        }
    }
    let (ta, tb) = majorant_terms(u, y, f, a, c_omega, quad)?;
    MajorantBreakdown::from_terms(ta, tb, gamma)
}

/// Result of the alternating flux/γ minimization.
#[derive(Debug, Clone)]
pub struct MinimizedMajorant {
    pub flux: FluxField,
    /// Evaluated at the optimal `γ` for `flux`.
    pub breakdown: MajorantBreakdown,
    /// Optimal-γ majorant after 0, 1, ... iterations.
    pub history: Vec<f64>,
}

/// Quadratic pieces of `M²` in the nodal flux vector `Y` (interleaved x/y):
/// `a² = Yᵀ M Y − 2 gᵀY + c_a` and `‖div y + f‖² = Yᵀ D Y + 2 hᵀY + c_b`.
struct FluxSystem {
    mass: CsrMatrix,
    div: CsrMatrix,
    g: Vec<f64>,
    h: Vec<f64>,
}

fn flux_pattern(mesh: &TriangleMesh) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); 2 * mesh.num_vertices()];
    for tri in mesh.triangles() {
        for &v in tri {
            for &w in tri {
                rows[2 * v].extend([2 * w, 2 * w + 1]);
                rows[2 * v + 1].extend([2 * w, 2 * w + 1]);
            }
        }
    }
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
    }
    rows
}

impl FluxSystem {
    fn build(u: &FeFunction, f: &dyn ScalarField, a: &dyn MatrixField, quad: QuadSpec) -> Result<Self> {
        let mesh = u.mesh();
        let rule = TriangleRule::new(quad.order)?;
        let features = a.features();
        // ∫_T λ_k λ_l A⁻¹ for k ≤ l, and ∫_T f
        let local = par::map(mesh.num_triangles(), |t| {
            let geo = mesh.geometry(t);
            let tri = mesh.triangle_vertices(t);
            let mut m = [[SymMat2::ZERO; 3]; 3];
            integrate_element(&tri, &rule, &features, quad.interface_depth, |x, w| {
                let lam = geo.barycentric(x);
                let inv = a.eval(x).inverse();
                for k in 0..3 {
                    for l in k..3 {
                        m[k][l] = m[k][l] + inv.scale(w * lam[k] * lam[l]);
                    }
                }
            });
            let mut fi = 0.0;
            rule.apply(&tri, |x, w| fi += w * f.eval(x));
            (m, fi)
        });
        let pattern = flux_pattern(mesh);
        let mut mass = CsrMatrix::from_pattern(pattern.clone());
        let mut div = CsrMatrix::from_pattern(pattern);
        let n = 2 * mesh.num_vertices();
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let geo = mesh.geometry(t);
            let (m, fi) = &local[t];
            let grad = u.gradient(t);
            for k in 0..3 {
                let vk = tri[k];
                g[2 * vk] += grad.x * geo.area / 3.0;
                g[2 * vk + 1] += grad.y * geo.area / 3.0;
                h[2 * vk] += fi * geo.grads[k].x;
                h[2 * vk + 1] += fi * geo.grads[k].y;
                let gk = [geo.grads[k].x, geo.grads[k].y];
                for l in 0..3 {
                    let vl = tri[l];
                    let ml = if k <= l { m[k][l] } else { m[l][k] };
                    let mm = [[ml.xx, ml.xy], [ml.xy, ml.yy]];
                    let gl = [geo.grads[l].x, geo.grads[l].y];
                    for c in 0..2 {
                        for d in 0..2 {
                            mass.add(2 * vk + c, 2 * vl + d, mm[c][d]);
                            div.add(2 * vk + c, 2 * vl + d, geo.area * gk[c] * gl[d]);
                        }
                    }
                }
            }
        }
        Ok(FluxSystem { mass, div, g, h })
    }

    /// Minimizer over `Y` of `(1+γ)a² + (1+1/γ)C²‖div y + f‖²`, warm-started at `y`.
    fn minimize(&self, gamma: f64, c_omega: f64, y: &mut [f64]) -> Result<()> {
        let wa = 1.0 + gamma;
        let wb = (1.0 + 1.0 / gamma) * c_omega * c_omega;
        let op = self.mass.combine(wa, &self.div, wb)?;
        let rhs: Vec<f64> = self.g.iter().zip(&self.h).map(|(g, h)| wa * g - wb * h).collect();
        pcg(&op, &rhs, y, FLUX_CG_TOL)?;
        Ok(())
    }
}

/// Starts from the averaged flux and alternates between the flux minimizer
/// for fixed `γ` and the update `γ = b/a`. An iterate that would increase the
/// majorant through rounding is discarded, so `history` is nonincreasing.
pub fn minimize_majorant(
    u: &FeFunction,
    f: &dyn ScalarField,
    a: &dyn MatrixField,
    c_omega: f64,
    iters: usize,
    quad: QuadSpec,
) -> Result<MinimizedMajorant> {
    check_c_omega(c_omega)?;
    let mut flux = reconstruct_flux_averaging(u, a, quad)?;
    let mut breakdown = evaluate_majorant(u, &flux, f, a, Gamma::Optimal, c_omega, quad)?;
    let mut history = vec![breakdown.value];
    if iters == 0 {
        return Ok(MinimizedMajorant { flux, breakdown, history });
    }
    let system = FluxSystem::build(u, f, a, quad)?;
    let mut y = flux.to_vector();
    for _ in 0..iters {
        system.minimize(breakdown.gamma, c_omega, &mut y)?;
        let candidate = FluxField::from_vector(u.mesh().clone(), &y);
        let next = evaluate_majorant(u, &candidate, f, a, Gamma::Optimal, c_omega, quad)?;
        if next.value <= breakdown.value {
            flux = candidate;
            breakdown = next;
        } else {
            y = flux.to_vector();
        }
        history.push(breakdown.value);
    }
    Ok(MinimizedMajorant { flux, breakdown, history })
}
