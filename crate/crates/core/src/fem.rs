//! P1 conforming finite elements with homogeneous Dirichlet conditions.

use std::io::Write;
use std::sync::Arc;

use crate::coeff::{MatrixField, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::{Point, SymMat2};
use crate::mesh::TriangleMesh;
use crate::par;
use crate::quadrature::{integrate_element, Features, QuadSpec, TriangleRule};
use crate::sparse::{pcg, CgReport, CsrMatrix};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Continuous piecewise-linear function given by its vertex values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    mesh: Arc<TriangleMesh>,
    values: Vec<f64>,
}

impl FeFunction {
    pub fn new(mesh: Arc<TriangleMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} nodal values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        Ok(FeFunction { mesh, values })
    }

    pub fn zero(mesh: Arc<TriangleMesh>) -> Self {
        let n = mesh.num_vertices();
        FeFunction { mesh, values: vec![0.0; n] }
    }

    /// Nodal interpolant of `g` (boundary values are kept as given).
    pub fn interpolate(mesh: Arc<TriangleMesh>, g: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|&x| g(x)).collect();
        FeFunction { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<TriangleMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Whether all boundary values are exactly zero.
    pub fn satisfies_dirichlet(&self) -> bool {
        self.values.iter().zip(self.mesh.boundary_flags()).all(|(v, &b)| !b || *v == 0.0)
    }

    /// Constant gradient on element `t`.
    pub fn gradient(&self, t: usize) -> Point {
        let g = self.mesh.geometry(t);
        let tri = self.mesh.triangles()[t];
        let mut out = Point::default();
        for k in 0..3 {
            out = out + self.values[tri[k]] * g.grads[k];
        }
        out
    }

    pub fn gradients(&self) -> Vec<Point> {
        par::map(self.mesh.num_triangles(), |t| self.gradient(t))
    }

    /// Value at `x` inside element `t`.
    pub fn eval_in(&self, t: usize, x: Point) -> f64 {
        let lam = self.mesh.geometry(t).barycentric(x);
        let tri = self.mesh.triangles()[t];
        lam[0] * self.values[tri[0]] + lam[1] * self.values[tri[1]] + lam[2] * self.values[tri[2]]
    }

    /// Exact representation on a red refinement of this function's mesh,
    /// `parents` being the bisected edges returned by the refinement.
    pub fn prolongate(&self, fine: Arc<TriangleMesh>, parents: &[[usize; 2]]) -> Result<Self> {
        let nv = self.values.len();
        if fine.num_vertices() != nv + parents.len() {
            return Err(Error::InvalidArgument("refinement does not match this mesh".into()));
        }
        let mut values = self.values.clone();
        values.extend(parents.iter().map(|[a, b]| 0.5 * (self.values[*a] + self.values[*b])));
        Ok(FeFunction { mesh: fine, values })
    }

    /// `x y value` per vertex.
    pub fn write_nodal<W: Write>(&self, mut w: W) -> Result<()> {
        for (x, v) in self.mesh.vertices().iter().zip(&self.values) {
            writeln!(w, "{:.16e} {:.16e} {:.16e}", x.x, x.y, v)?;
        }
        Ok(())
    }
}

/// Numbering of the interior (free) vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
}

impl DofMap {
    pub fn interior(mesh: &TriangleMesh) -> Self {
        let mut dof_of_vertex = vec![None; mesh.num_vertices()];
        let mut vertex_of_dof = Vec::new();
        for (v, &b) in mesh.boundary_flags().iter().enumerate() {
            if !b {
                dof_of_vertex[v] = Some(vertex_of_dof.len());
                vertex_of_dof.push(v);
            }
        }
        DofMap { dof_of_vertex, vertex_of_dof }
    }

    pub fn len(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_of_dof.is_empty()
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.dof_of_vertex[vertex]
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.vertex_of_dof[dof]
    }
}

/// Galerkin system on the interior unknowns.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    mesh: Arc<TriangleMesh>,
}

impl SparseSystem {
    pub fn mesh(&self) -> &Arc<TriangleMesh> {
        &self.mesh
    }

    /// Interior values of `u` in dof order.
    pub fn restrict(&self, u: &FeFunction) -> Vec<f64> {
        (0..self.dofs.len()).map(|d| u.values()[self.dofs.vertex(d)]).collect()
    }

    pub fn extend(&self, x: &[f64]) -> FeFunction {
        let mut values = vec![0.0; self.mesh.num_vertices()];
        for (d, v) in x.iter().enumerate() {
            values[self.dofs.vertex(d)] = *v;
        }
        FeFunction { mesh: self.mesh.clone(), values }
    }
}

/// `∫_T A` for every element, with quadrature refined along the field's interfaces.
pub fn element_coefficient_integrals(mesh: &TriangleMesh, a: &dyn MatrixField, quad: QuadSpec) -> Result<Vec<SymMat2>> {
    let rule = TriangleRule::new(quad.order)?;
    let features = a.features();
    Ok(par::map(mesh.num_triangles(), |t| {
        let mut acc = SymMat2::ZERO;
        integrate_element(&mesh.triangle_vertices(t), &rule, &features, quad.interface_depth, |x, w| {
            acc = acc + a.eval(x).scale(w);
        });
        acc
    }))
}

fn pattern(mesh: &TriangleMesh, dofs: &DofMap) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); dofs.len()];
    for tri in mesh.triangles() {
        for &a in tri {
            if let Some(i) = dofs.dof(a) {
                rows[i].extend(tri.iter().filter_map(|&b| dofs.dof(b)));
            }
        }
    }
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
    }
    rows
}

/// Stiffness `∫⟨A∇φ_j,∇φ_i⟩` and load `∫ f φ_i` on the interior unknowns.
pub fn assemble(mesh: &Arc<TriangleMesh>, a: &dyn MatrixField, f: &dyn ScalarField, quad: QuadSpec) -> Result<SparseSystem> {
    for t in 0..mesh.num_triangles() {
        if !(mesh.geometry(t).area > 0.0) {
            return Err(Error::DegenerateElement(t));
        }
    }
    let a_int = element_coefficient_integrals(mesh, a, quad)?;
    let rule = TriangleRule::new(quad.order)?;
    let local = par::map(mesh.num_triangles(), |t| {
        let g = mesh.geometry(t);
        let mut k = [[0.0; 3]; 3];
        for i in 0..3 {
            let ag = a_int[t].apply(g.grads[i]);
            for j in 0..3 {
                k[i][j] = ag.dot(g.grads[j]);
            }
        }
        let mut load = [0.0; 3];
        rule.apply(&mesh.triangle_vertices(t), |x, w| {
            let fx = f.eval(x);
            let lam = g.barycentric(x);
            for i in 0..3 {
                load[i] += w * fx * lam[i];
            }
        });
        (k, load)
    });

    let dofs = DofMap::interior(mesh);
    let mut matrix = CsrMatrix::from_pattern(pattern(mesh, &dofs));
    let mut rhs = vec![0.0; dofs.len()];
    for (tri, (k, load)) in mesh.triangles().iter().zip(&local) {
        for i in 0..3 {
            let Some(di) = dofs.dof(tri[i]) else { continue };
            rhs[di] += load[i];
            for j in 0..3 {
                if let Some(dj) = dofs.dof(tri[j]) {
                    matrix.add(di, dj, k[i][j]);
                }
            }
        }
    }
    Ok(SparseSystem { matrix, rhs, dofs, mesh: mesh.clone() })
}

pub fn solve_cg_with_report(sys: &SparseSystem, rel_tol: f64) -> Result<(FeFunction, CgReport)> {
    let mut x = vec![0.0; sys.dofs.len()];
    let report = pcg(&sys.matrix, &sys.rhs, &mut x, rel_tol)?;
    Ok((sys.extend(&x), report))
}

/// Solution with boundary zeros reinstated.
pub fn solve_cg(sys: &SparseSystem, rel_tol: f64) -> Result<FeFunction> {
    solve_cg_with_report(sys, rel_tol).map(|(u, _)| u)
}

/// `L^s` norm of an elementwise constant field.
pub fn element_field_norm(mesh: &TriangleMesh, values: &[f64], s: f64) -> Result<f64> {
    if values.len() != mesh.num_triangles() {
        return Err(Error::InvalidArgument(format!("{} values for {} elements", values.len(), mesh.num_triangles())));
    }
    if !(s >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm exponent must be >= 1, got {s}")));
    }
    if s.is_infinite() {
        return Ok(par::max(values.len(), |t| values[t].abs()).max(0.0));
    }
    let sum = par::sum(values.len(), |t| values[t].abs().powf(s) * mesh.geometry(t).area);
    Ok(sum.powf(1.0 / s))
}

/// `‖∇u‖_{p,Ω}` with the `ℓ^p` vector norm inside. With a weight `A` it is
/// `(∫ ⟨A∇u,∇u⟩^{p/2})^{1/p}` by quadrature (the `A`-energy norm at `p = 2`).
pub fn grad_norm(u: &FeFunction, p: f64, weight: Option<(&dyn MatrixField, QuadSpec)>) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm exponent must be >= 1, got {p}")));
    }
    let mesh = u.mesh();
    let nt = mesh.num_triangles();
    match weight {
        None => element_field_norm(mesh, &par::map(nt, |t| u.gradient(t).lp_norm(p)), p),
        Some((a, quad)) => {
            if p == 2.0 {
                let a_int = element_coefficient_integrals(mesh, a, quad)?;
                let s = par::sum(nt, |t| a_int[t].quad_form(u.gradient(t)));
                return Ok(s.max(0.0).sqrt());
            }
            let rule = TriangleRule::new(quad.order)?;
            let features = a.features();
            let pointwise = |t: usize, f: &mut dyn FnMut(f64, f64)| {
                let g = u.gradient(t);
                integrate_element(&mesh.triangle_vertices(t), &rule, &features, quad.interface_depth, |x, w| {
                    f(a.eval(x).quad_form(g).max(0.0).sqrt(), w)
                });
            };
            if p.is_infinite() {
                return Ok(par::max(nt, |t| {
                    let mut m = 0.0f64;
                    pointwise(t, &mut |v, _| m = m.max(v));
                    m
                }));
            }
            let s = par::sum(nt, |t| {
                let mut acc = 0.0;
                pointwise(t, &mut |v, w| acc += w * v.powf(p));
                acc
            });
            Ok(s.powf(1.0 / p))
        }
    }
}

/// `‖∇u‖_A`
pub fn energy_norm(u: &FeFunction, a: &dyn MatrixField, quad: QuadSpec) -> Result<f64> {
    grad_norm(u, 2.0, Some((a, quad)))
}

/// `‖f‖_{t,Ω}` by quadrature; `t = ∞` is the maximum over quadrature points.
pub fn f_norm(f: &dyn ScalarField, t: f64, mesh: &TriangleMesh, quad: QuadSpec) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm exponent must be >= 1, got {t}")));
    }
    let rule = TriangleRule::new(quad.order)?;
    let nt = mesh.num_triangles();
    if t.is_infinite() {
        return Ok(par::max(nt, |e| {
            let mut m = 0.0f64;
            rule.apply(&mesh.triangle_vertices(e), |x, _| m = m.max(f.eval(x).abs()));
            m
        }));
    }
    let s = par::sum(nt, |e| {
        let mut acc = 0.0;
        rule.apply(&mesh.triangle_vertices(e), |x, w| acc += w * f.eval(x).abs().powf(t));
        acc
    });
    Ok(s.powf(1.0 / t))
}

/// `‖∇u − ∇u_h‖_A` for an exact gradient given in closed form.
pub fn energy_error_against(
    u_h: &FeFunction,
    exact_grad: &(dyn Fn(Point) -> Point + Sync),
    a: &dyn MatrixField,
    quad: QuadSpec,
) -> Result<f64> {
    let mesh = u_h.mesh();
    let rule = TriangleRule::new(quad.order)?;
    let features: Features = a.features();
    let s = par::sum(mesh.num_triangles(), |t| {
        let gh = u_h.gradient(t);
        let mut acc = 0.0;
        integrate_element(&mesh.triangle_vertices(t), &rule, &features, quad.interface_depth, |x, w| {
            acc += w * a.eval(x).quad_form(exact_grad(x) - gh);
        });
        acc
    });
    Ok(s.max(0.0).sqrt())
}

/// `‖∇(u − v)‖_A` for two functions on the same mesh.
pub fn energy_distance(u: &FeFunction, v: &FeFunction, a: &dyn MatrixField, quad: QuadSpec) -> Result<f64> {
    if !Arc::ptr_eq(u.mesh(), v.mesh()) && u.mesh() != v.mesh() {
        return Err(Error::InvalidArgument("functions live on different meshes".into()));
    }
    let diff: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a - b).collect();
    energy_norm(&FeFunction { mesh: u.mesh().clone(), values: diff }, a, quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientField;

    fn unit(n: usize) -> Arc<TriangleMesh> {
        Arc::new(TriangleMesh::structured_square(n).unwrap())
    }

    #[test]
    fn zero_load_zero_solution() {
        let mesh = unit(4);
        let sys = assemble(&mesh, &CoefficientField::identity(), &|_: Point| 0.0, QuadSpec::default()).unwrap();
        let u = solve_cg(&sys, 1e-10).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn center_node_stencil() {
        let mesh = unit(2);
        let sys = assemble(&mesh, &CoefficientField::identity(), &|_: Point| 1.0, QuadSpec::default()).unwrap();
        assert_eq!(sys.dofs.len(), 1);
        assert!((sys.matrix.get(0, 0) - 4.0).abs() < 1e-14);
        // load of the hat function = its integral = (1/3)·(patch area 1/2)·... computed directly
        let u = solve_cg(&sys, 1e-12).unwrap();
        assert!((u.values()[4] - sys.rhs[0] / 4.0).abs() < 1e-15);
        assert!(u.satisfies_dirichlet());
    }

    #[test]
    fn stiffness_is_linear_in_coefficient() {
        let mesh = unit(3);
        let f = |_: Point| 1.0;
        let k1 = assemble(&mesh, &CoefficientField::identity(), &f, QuadSpec::default()).unwrap();
        let k3 = assemble(&mesh, &CoefficientField::constant(SymMat2::scalar(3.0)).unwrap(), &f, QuadSpec::default()).unwrap();
        for i in 0..k1.dofs.len() {
            for (j, v) in k1.matrix.row(i) {
                assert!((k3.matrix.get(i, j) - 3.0 * v).abs() < 1e-13);
            }
        }
        assert!(k1.matrix.asymmetry() < 1e-12);
    }

    #[test]
    fn gradient_norms_of_linear_function() {
        let mesh = unit(4);
        let u = FeFunction::interpolate(mesh, |x| x.x);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((grad_norm(&u, p, None).unwrap() - 1.0).abs() < 1e-13, "p={p}");
        }
        let z = FeFunction::zero(unit(2));
        assert_eq!(grad_norm(&z, 3.0, None).unwrap(), 0.0);
    }

    #[test]
    fn load_norms() {
        let mesh = unit(8);
        for t in [1.0, 2.0, 5.0] {
            assert!((f_norm(&|_: Point| 1.0, t, &mesh, QuadSpec::default()).unwrap() - 1.0).abs() < 1e-13);
            assert!((f_norm(&|_: Point| 3.0, t, &mesh, QuadSpec::default()).unwrap() - 3.0).abs() < 1e-13);
        }
        let pi = std::f64::consts::PI;
        let f = |x: Point| 2.0 * pi * pi * (pi * x.x).sin() * (pi * x.y).sin();
        let fine = unit(64);
        assert!((f_norm(&f, 2.0, &fine, QuadSpec::default()).unwrap() - pi * pi).abs() < 1e-6);
    }

    #[test]
    fn prolongation_is_exact() {
        let coarse = unit(3);
        let (fine, parents) = coarse.refine_uniform_with_parents();
        let fine = Arc::new(fine);
        let u = FeFunction::interpolate(coarse.clone(), |x| x.x * x.y);
        let uf = u.prolongate(fine.clone(), &parents).unwrap();
        for t in 0..fine.num_triangles() {
            let c = fine.geometry(t).centroid;
            let tc = (0..coarse.num_triangles())
                .find(|&k| coarse.geometry(k).barycentric(c).iter().all(|&l| l >= -1e-12))
                .unwrap();
            assert!((uf.eval_in(t, c) - u.eval_in(tc, c)).abs() < 1e-14);
        }
    }
}
