//! Conforming triangulations of polygonal domains.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::Point;

/// Immutable conforming triangulation. Triangles are counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    diameter: f64,
}

/// Affine element data: area and the constant gradients of the three
/// barycentric basis functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [Point; 3],
    pub centroid: Point,
}

impl ElementGeometry {
    fn from_vertices(v: [Point; 3]) -> Self {
        let twice = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
        let grad = |j: usize, k: usize| Point::new((v[j].y - v[k].y) / twice, (v[k].x - v[j].x) / twice);
        ElementGeometry {
            area: 0.5 * twice,
            grads: [grad(1, 2), grad(2, 0), grad(0, 1)],
            centroid: Point::new((v[0].x + v[1].x + v[2].x) / 3.0, (v[0].y + v[1].y + v[2].y) / 3.0),
        }
    }

    /// Barycentric coordinates of `x`; exact for affine elements.
    pub fn barycentric(&self, x: Point) -> [f64; 3] {
        let d = x - self.centroid;
        [
            1.0 / 3.0 + self.grads[0].dot(d),
            1.0 / 3.0 + self.grads[1].dot(d),
            1.0 / 3.0 + self.grads[2].dot(d),
        ]
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub const fn unit_square() -> Self {
        BoundingBox { min: Point::new(0.0, 0.0), max: Point::new(1.0, 1.0) }
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b { (a, b) } else { (b, a) }
}

impl TriangleMesh {
    /// `n × n` squares on the unit square, each split along its `(0,0)–(1,1)` diagonal.
    pub fn structured_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("grid size must be at least 1".into()));
        }
        let np = n + 1;
        let h = n as f64;
        let mut vertices = Vec::with_capacity(np * np);
        let mut boundary = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                vertices.push(Point::new(i as f64 / h, j as f64 / h));
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * np + i;
                let v10 = v00 + 1;
                let v01 = v00 + np;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Ok(TriangleMesh { vertices, triangles, boundary, diameter: std::f64::consts::SQRT_2 })
    }

    /// Validated construction from raw parts. The diameter is the largest
    /// distance between boundary vertices.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, boundary: Vec<bool>) -> Result<Self> {
        if boundary.len() != vertices.len() {
            return Err(Error::InvalidMesh("boundary flag count differs from vertex count".into()));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
        }
        let bverts: Vec<Point> = vertices.iter().zip(&boundary).filter(|(_, &b)| b).map(|(p, _)| *p).collect();
        let mut diameter = 0.0f64;
        for (i, a) in bverts.iter().enumerate() {
            for b in &bverts[i + 1..] {
                diameter = diameter.max(a.dist(*b));
            }
        }
        let mesh = TriangleMesh { vertices, triangles, boundary, diameter };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks positive orientation, conformity and boundary flags.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            let g = self.element_geometry(t)?;
            if !(g.area > 0.0) {
                return Err(Error::DegenerateElement(t));
            }
        }
        let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.entry(edge_key(a, b)).or_default().push((a, b));
            }
        }
        let mut on_boundary = vec![false; self.vertices.len()];
        for (key, uses) in &edges {
            match uses.as_slice() {
                [_] => {
                    on_boundary[key.0] = true;
                    on_boundary[key.1] = true;
                }
                [(a0, _), (a1, _)] if a0 != a1 => {}
                [_, _] => return Err(Error::InvalidMesh(format!("edge {key:?} has inconsistent orientation"))),
                _ => return Err(Error::InvalidMesh(format!("edge {key:?} shared by {} triangles", uses.len()))),
            }
        }
        if on_boundary != self.boundary {
            return Err(Error::InvalidMesh("boundary flags do not match boundary edges".into()));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_boundary_vertices(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// `diam Ω`
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn element_geometry(&self, t: usize) -> Result<ElementGeometry> {
        if t >= self.triangles.len() {
            return Err(Error::IndexOutOfRange { index: t, len: self.triangles.len() });
        }
        Ok(ElementGeometry::from_vertices(self.triangle_vertices(t)))
    }

    /// Element data for a valid index; panics otherwise.
    pub(crate) fn geometry(&self, t: usize) -> ElementGeometry {
        ElementGeometry::from_vertices(self.triangle_vertices(t))
    }

    pub fn area(&self) -> f64 {
        crate::par::sum(self.triangles.len(), |t| self.geometry(t).area)
    }

    /// Longest edge over all elements (`h`).
    pub fn max_element_diameter(&self) -> f64 {
        crate::par::max(self.triangles.len(), |t| {
            let [a, b, c] = self.triangle_vertices(t);
            a.dist(b).max(b.dist(c)).max(c.dist(a))
        })
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        BoundingBox { min, max }
    }

    /// Whether `p` lies in the closed triangulated domain.
    pub fn contains(&self, p: Point) -> bool {
        let bb = self.bounding_box();
        if p.x < bb.min.x || p.x > bb.max.x || p.y < bb.min.y || p.y > bb.max.y {
            return false;
        }
        (0..self.triangles.len()).any(|t| self.geometry(t).barycentric(p).iter().all(|&l| l >= -1e-12))
    }

    /// Red refinement: every triangle is split into four by its edge midpoints.
    pub fn refine_uniform(&self) -> TriangleMesh {
        self.refine_uniform_with_parents().0
    }

    /// Red refinement that also returns, for each new vertex
    /// `num_vertices() + k`, the two endpoints of the edge it bisects.
    pub fn refine_uniform_with_parents(&self) -> (TriangleMesh, Vec<[usize; 2]>) {
        let nv = self.vertices.len();
        let mut edge_use: HashMap<(usize, usize), u8> = HashMap::with_capacity(3 * self.triangles.len() / 2 + 8);
        for tri in &self.triangles {
            for k in 0..3 {
                *edge_use.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut vertices = self.vertices.clone();
        let mut boundary = self.boundary.clone();
        let mut parents = Vec::with_capacity(edge_use.len());
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(edge_use.len());
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for tri in &self.triangles {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                m[k] = *midpoint.entry(key).or_insert_with(|| {
                    let idx = vertices.len();
                    vertices.push(self.vertices[key.0].midpoint(self.vertices[key.1]));
                    boundary.push(edge_use[&key] == 1);
                    parents.push([key.0, key.1]);
                    idx
                });
            }
            let [a, b, c] = *tri;
            let [mab, mbc, mca] = m;
            triangles.push([a, mab, mca]);
            triangles.push([mab, b, mbc]);
            triangles.push([mca, mbc, c]);
            triangles.push([mab, mbc, mca]);
        }
        debug_assert_eq!(vertices.len(), nv + parents.len());
        let mesh = TriangleMesh { vertices, triangles, boundary, diameter: self.diameter };
        (mesh, parents)
    }

    /// Text format: `nv nt`, then `x y bflag` per vertex, then `i j k` per triangle.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(48 * (self.vertices.len() + self.triangles.len()));
        let _ = writeln!(s, "{} {}", self.vertices.len(), self.triangles.len());
        for (v, b) in self.vertices.iter().zip(&self.boundary) {
            let _ = writeln!(s, "{:.16e} {:.16e} {}", v.x, v.y, u8::from(*b));
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()));
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Parse(format!("unexpected end of mesh file ({what})")))
        };
        let header = next("header")?;
        let mut it = header.split_whitespace();
        let parse_usize = |s: Option<&str>, what: &str| -> Result<usize> {
            s.ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad {what}")))
        };
        let nv = parse_usize(it.next(), "vertex count")?;
        let nt = parse_usize(it.next(), "triangle count")?;
        let mut vertices = Vec::with_capacity(nv);
        let mut boundary = Vec::with_capacity(nv);
        for i in 0..nv {
            let line = next("vertex")?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("vertex line {i}: expected `x y bflag`")));
            }
            let x: f64 = f[0].parse().map_err(|_| Error::Parse(format!("vertex {i}: bad x")))?;
            let y: f64 = f[1].parse().map_err(|_| Error::Parse(format!("vertex {i}: bad y")))?;
            let b = match f[2] {
                "0" => false,
                "1" => true,
                _ => return Err(Error::Parse(format!("vertex {i}: bad boundary flag"))),
            };
            vertices.push(Point::new(x, y));
            boundary.push(b);
        }
        let mut triangles = Vec::with_capacity(nt);
        for t in 0..nt {
            let line = next("triangle")?;
            let mut f = line.split_whitespace();
            let tri = [
                parse_usize(f.next(), "triangle index")?,
                parse_usize(f.next(), "triangle index")?,
                parse_usize(f.next(), "triangle index")?,
            ];
            if f.next().is_some() {
                return Err(Error::Parse(format!("triangle line {t}: trailing data")));
            }
            triangles.push(tri);
        }
        TriangleMesh::from_parts(vertices, triangles, boundary)
    }
}
