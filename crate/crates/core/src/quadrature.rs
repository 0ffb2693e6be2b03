//! Symmetric triangle quadrature and interface-aware composite integration.

use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::mesh::BoundingBox;

/// Quadrature configuration. `order` is the polynomial degree integrated
/// exactly on each (sub)triangle; elements cut by a coefficient interface are
/// red-subdivided `interface_depth` times, more when the coefficient has a
/// feature thinner than the sub-triangles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub order: u32,
    pub interface_depth: u32,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { order: 5, interface_depth: 6 }
    }
}

impl QuadSpec {
    pub fn new(order: u32, interface_depth: u32) -> Self {
        QuadSpec { order, interface_depth }
    }
}

const MAX_DEPTH: u32 = 18;

type Node = ([f64; 3], f64);

const RULE1: &[Node] = &[([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];

const RULE2: &[Node] = &[
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

const A4: f64 = 0.445_948_490_915_965;
const B4: f64 = 0.091_576_213_509_771;
const W4A: f64 = 0.223_381_589_678_011;
const W4B: f64 = 0.109_951_743_655_322;
const RULE4: &[Node] = &[
    ([A4, A4, 1.0 - 2.0 * A4], W4A),
    ([A4, 1.0 - 2.0 * A4, A4], W4A),
    ([1.0 - 2.0 * A4, A4, A4], W4A),
    ([B4, B4, 1.0 - 2.0 * B4], W4B),
    ([B4, 1.0 - 2.0 * B4, B4], W4B),
    ([1.0 - 2.0 * B4, B4, B4], W4B),
];

const A5: f64 = 0.470_142_064_105_115;
const B5: f64 = 0.101_286_507_323_456;
const W5A: f64 = 0.132_394_152_788_506;
const W5B: f64 = 0.125_939_180_544_827;
const RULE5: &[Node] = &[
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([A5, A5, 1.0 - 2.0 * A5], W5A),
    ([A5, 1.0 - 2.0 * A5, A5], W5A),
    ([1.0 - 2.0 * A5, A5, A5], W5A),
    ([B5, B5, 1.0 - 2.0 * B5], W5B),
    ([B5, 1.0 - 2.0 * B5, B5], W5B),
    ([1.0 - 2.0 * B5, B5, B5], W5B),
];

/// A symmetric rule on the reference triangle; weights sum to 1.
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    degree: u32,
    nodes: &'static [Node],
}

impl TriangleRule {
    /// Smallest available rule exact for polynomials of degree `order` (1..=5).
    pub fn new(order: u32) -> Result<Self> {
        let (degree, nodes) = match order {
            1 => (1, RULE1),
            2 => (2, RULE2),
            3 | 4 => (4, RULE4),
            5 => (5, RULE5),
            _ => return Err(Error::InvalidArgument(format!("unsupported quadrature order {order} (1..=5)"))),
        };
        Ok(TriangleRule { degree, nodes })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Calls `f(point, weight)` for every node mapped onto `tri`.
    pub fn apply(&self, tri: &[Point; 3], mut f: impl FnMut(Point, f64)) {
        let area = signed_area(tri).abs();
        for (l, w) in self.nodes {
            let x = l[0] * tri[0].x + l[1] * tri[1].x + l[2] * tri[2].x;
            let y = l[0] * tri[0].y + l[1] * tri[1].y + l[2] * tri[2].y;
            f(Point::new(x, y), w * area);
        }
    }
}

pub(crate) fn signed_area(t: &[Point; 3]) -> f64 {
    0.5 * ((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y))
}

fn longest_edge(t: &[Point; 3]) -> f64 {
    t[0].dist(t[1]).max(t[1].dist(t[2])).max(t[2].dist(t[0]))
}

fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let s = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    p.dist(a + s * ab)
}

/// Curve across which a coefficient is discontinuous or has a kink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interface {
    Circle { center: Point, radius: f64 },
    VerticalLine(f64),
    HorizontalLine(f64),
}

impl Interface {
    /// Whether the curve passes through the interior of `tri`.
    pub fn cuts(&self, tri: &[Point; 3]) -> bool {
        match *self {
            Interface::Circle { center, radius } => {
                let dmax = tri.iter().map(|v| v.dist(center)).fold(0.0, f64::max);
                if dmax <= radius {
                    return false;
                }
                let inside = {
                    let d = |a: Point, b: Point| (b.x - a.x) * (center.y - a.y) - (b.y - a.y) * (center.x - a.x);
                    let (d0, d1, d2) = (d(tri[0], tri[1]), d(tri[1], tri[2]), d(tri[2], tri[0]));
                    (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
                };
                let dmin = if inside {
                    0.0
                } else {
                    point_segment_dist(center, tri[0], tri[1])
                        .min(point_segment_dist(center, tri[1], tri[2]))
                        .min(point_segment_dist(center, tri[2], tri[0]))
                };
                dmin < radius
            }
            Interface::VerticalLine(x0) => {
                let lo = tri.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
                let hi = tri.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
                lo < x0 && x0 < hi
            }
            Interface::HorizontalLine(y0) => {
                let lo = tri.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
                let hi = tri.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
                lo < y0 && y0 < hi
            }
        }
    }

    /// Points just on either side of the curve, where one-sided limits of a
    /// piecewise-smooth field (and hence its essential supremum) are attained.
    pub fn one_sided_samples(&self, bbox: &BoundingBox) -> Vec<Point> {
        const REL: f64 = 1e-10;
        const COUNT: usize = 64;
        let mut out = Vec::with_capacity(2 * COUNT);
        match *self {
            Interface::Circle { center, radius } => {
                for k in 0..COUNT {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / COUNT as f64;
                    let (s, c) = phi.sin_cos();
                    for r in [radius * (1.0 - REL), radius * (1.0 + REL)] {
                        out.push(Point::new(center.x + r * c, center.y + r * s));
                    }
                }
            }
            Interface::VerticalLine(x0) => {
                let dx = REL * x0.abs().max(1.0);
                for k in 0..COUNT {
                    let y = bbox.min.y + (bbox.max.y - bbox.min.y) * (k as f64 + 0.5) / COUNT as f64;
                    out.push(Point::new(x0 - dx, y));
                    out.push(Point::new(x0 + dx, y));
                }
            }
            Interface::HorizontalLine(y0) => {
                let dy = REL * y0.abs().max(1.0);
                for k in 0..COUNT {
                    let x = bbox.min.x + (bbox.max.x - bbox.min.x) * (k as f64 + 0.5) / COUNT as f64;
                    out.push(Point::new(x, y0 - dy));
                    out.push(Point::new(x, y0 + dy));
                }
            }
        }
        out
    }
}

/// The non-smooth structure of a field: its interfaces and the width of its
/// thinnest feature (e.g. a smoothing strip), if any.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Features {
    pub interfaces: Vec<Interface>,
    pub min_width: Option<f64>,
}

impl Features {
    pub fn smooth() -> Self {
        Features::default()
    }

    pub fn merge(mut self, other: Features) -> Self {
        self.interfaces.extend(other.interfaces);
        self.min_width = match (self.min_width, other.min_width) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }

    fn cuts(&self, tri: &[Point; 3]) -> bool {
        self.interfaces.iter().any(|i| i.cuts(tri))
    }

    /// Subdivision depth for an element of diameter `h`.
    fn depth_for(&self, h: f64, base: u32) -> u32 {
        let need = match self.min_width {
            Some(w) if w > 0.0 => (2.0 * h / w).log2().ceil().max(0.0) as u32,
            _ => 0,
        };
        base.max(need).min(MAX_DEPTH)
    }
}

fn subdivide(t: &[Point; 3]) -> [[Point; 3]; 4] {
    let m01 = t[0].midpoint(t[1]);
    let m12 = t[1].midpoint(t[2]);
    let m20 = t[2].midpoint(t[0]);
    [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]
}

fn recurse(tri: &[Point; 3], rule: &TriangleRule, features: &Features, depth: u32, f: &mut impl FnMut(Point, f64)) {
    if depth > 0 && features.cuts(tri) {
        for child in subdivide(tri) {
            recurse(&child, rule, features, depth - 1, f);
        }
    } else {
        rule.apply(tri, &mut *f);
    }
}

/// Calls `f(point, weight)` over a composite rule on `tri`: sub-triangles cut
/// by an interface are subdivided recursively, the rest use `rule` directly.
pub fn integrate_element(
    tri: &[Point; 3],
    rule: &TriangleRule,
    features: &Features,
    base_depth: u32,
    mut f: impl FnMut(Point, f64),
) {
    if features.interfaces.is_empty() {
        rule.apply(tri, f);
        return;
    }
    let depth = features.depth_for(longest_edge(tri), base_depth);
    recurse(tri, rule, features, depth, &mut f);
}
