//! Small dense 2-D types: points and symmetric 2x2 matrices.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// `‖(x, y)‖_{ℓ^p}`; `p = ∞` gives the max norm.
    pub fn lp_norm(self, p: f64) -> f64 {
        lp_norm2(self.x, self.y, p)
    }
}

pub(crate) fn lp_norm2(a: f64, b: f64, p: f64) -> f64 {
    let (a, b) = (a.abs(), b.abs());
    if p.is_infinite() {
        return a.max(b);
    }
    if p == 2.0 {
        return a.hypot(b);
    }
    if p == 1.0 {
        return a + b;
    }
    let m = a.max(b);
    if m == 0.0 {
        return 0.0;
    }
    // scaled to avoid overflow for large p
    m * ((a / m).powf(p) + (b / m).powf(p)).powf(1.0 / p)
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        Point::new(self * p.x, self * p.y)
    }
}

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2 { xx: 1.0, xy: 0.0, yy: 1.0 };
    pub const ZERO: SymMat2 = SymMat2 { xx: 0.0, xy: 0.0, yy: 0.0 };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub const fn scalar(k: f64) -> Self {
        Self { xx: k, xy: 0.0, yy: k }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self { xx: a, xy: 0.0, yy: b }
    }

    /// Some `c` when the matrix is exactly `c·I`.
    pub fn as_scalar(&self) -> Option<f64> {
        (self.xy == 0.0 && self.xx == self.yy).then_some(self.xx)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(c * self.xx, c * self.xy, c * self.yy)
    }

    pub fn apply(&self, v: Point) -> Point {
        Point::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    /// `vᵀ M v`
    pub fn quad_form(&self, v: Point) -> f64 {
        v.x * (self.xx * v.x + self.xy * v.y) + v.y * (self.xy * v.x + self.yy * v.y)
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (m - r, m + r)
    }

    /// Rotation angle `φ` of the eigenvector of the larger eigenvalue.
    fn eigen_angle(&self) -> f64 {
        0.5 * (2.0 * self.xy).atan2(self.xx - self.yy)
    }

    /// Builds `V diag(g(λ_max), g(λ_min)) Vᵀ`.
    fn spectral_map(&self, g: impl Fn(f64) -> f64) -> SymMat2 {
        let (lo, hi) = self.eigenvalues();
        let phi = self.eigen_angle();
        let (s, c) = phi.sin_cos();
        let (ghi, glo) = (g(hi), g(lo));
        SymMat2::new(
            ghi * c * c + glo * s * s,
            (ghi - glo) * c * s,
            ghi * s * s + glo * c * c,
        )
    }

    /// Inverse; entries are non-finite when the matrix is singular.
    pub fn inverse(&self) -> SymMat2 {
        let d = self.det();
        if d == 0.0 {
            return SymMat2::new(f64::NAN, f64::NAN, f64::NAN);
        }
        SymMat2::new(self.yy / d, -self.xy / d, self.xx / d)
    }

    /// Principal square root of an SPD matrix (NaN entries otherwise).
    pub fn sqrt(&self) -> SymMat2 {
        if let Some(c) = self.as_scalar() {
            let r = if c >= 0.0 { c.sqrt() } else { f64::NAN };
            return SymMat2::scalar(r);
        }
        self.spectral_map(|l| if l >= 0.0 { l.sqrt() } else { f64::NAN })
    }

    /// `M^{-1/2}` of an SPD matrix (NaN entries otherwise).
    pub fn inv_sqrt(&self) -> SymMat2 {
        if let Some(c) = self.as_scalar() {
            let r = if c > 0.0 { 1.0 / c.sqrt() } else { f64::NAN };
            return SymMat2::scalar(r);
        }
        self.spectral_map(|l| if l > 0.0 { 1.0 / l.sqrt() } else { f64::NAN })
    }

    /// `S M S` for symmetric `S`; symmetric by construction.
    pub fn congruence(&self, s: &SymMat2) -> SymMat2 {
        // T = M S
        let t00 = self.xx * s.xx + self.xy * s.xy;
        let t01 = self.xx * s.xy + self.xy * s.yy;
        let t10 = self.xy * s.xx + self.yy * s.xy;
        let t11 = self.xy * s.xy + self.yy * s.yy;
        let xx = s.xx * t00 + s.xy * t10;
        let yy = s.xy * t01 + s.yy * t11;
        let xy = 0.5 * ((s.xx * t01 + s.xy * t11) + (s.xy * t00 + s.yy * t10));
        SymMat2::new(xx, xy, yy)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        lo.abs().max(hi.abs())
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let m = SymMat2::new(3.0, 1.0, 2.0);
        let r = m.sqrt();
        let back = SymMat2::IDENTITY.congruence(&r);
        assert!((back.xx - 3.0).abs() < 1e-13);
        assert!((back.xy - 1.0).abs() < 1e-13);
        assert!((back.yy - 2.0).abs() < 1e-13);
        let w = m.inv_sqrt();
        let id = m.congruence(&w);
        assert!((id.xx - 1.0).abs() < 1e-13 && id.xy.abs() < 1e-13 && (id.yy - 1.0).abs() < 1e-13);
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        assert_eq!(SymMat2::diag(4.0, -1.0).eigenvalues(), (-1.0, 4.0));
        assert_eq!(SymMat2::diag(4.0, -1.0).spectral_norm(), 4.0);
    }

    #[test]
    fn lp_norms() {
        let v = Point::new(3.0, 4.0);
        assert_eq!(v.lp_norm(2.0), 5.0);
        assert_eq!(v.lp_norm(1.0), 7.0);
        assert_eq!(v.lp_norm(f64::INFINITY), 4.0);
        assert!((v.lp_norm(3.0) - 91f64.cbrt()).abs() < 1e-13);
    }
}
