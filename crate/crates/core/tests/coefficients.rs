use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use errctl::coeff::{
    coefficient_difference_norm, double_dual_exponent, dual_exponent, field_norm, make_b_eps, make_d_eps,
    matrix_mixed_norm, CoefficientField, JumpDiscSpec,
};
use errctl::quadrature::QuadSpec;
use errctl::{Point, SymMat2, TriangleMesh};

fn spec(eps: f64) -> JumpDiscSpec {
    JumpDiscSpec { center: Point::new(0.5, 0.5), radius: 0.3, k_in: 10.0, k_out: 1.0, strip_width: eps }
}

fn fields(eps: f64) -> (CoefficientField, CoefficientField) {
    (CoefficientField::disc_jump(spec(0.0)).unwrap(), CoefficientField::disc_jump_smoothed(spec(eps)).unwrap())
}

/// `2π ∫ r g(r) dr` over the strip, composite Simpson split at `R`.
fn radial_integral(eps: f64, g: impl Fn(f64) -> f64) -> f64 {
    let s = spec(eps);
    let simpson = |a: f64, b: f64| {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut acc = g(a) * a + g(b) * b;
        for i in 1..n {
            let r = a + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(r) * r;
        }
        acc * h / 3.0
    };
    2.0 * PI * (simpson(s.radius - eps / 2.0, s.radius) + simpson(s.radius, s.radius + eps / 2.0))
}

fn kappa_eps(eps: f64, r: f64) -> f64 {
    spec(eps).smoothed_value(Point::new(0.5 + r, 0.5))
}

fn kappa0(r: f64) -> f64 {
    if r < 0.3 {
        10.0
    } else {
        1.0
    }
}

#[test]
fn d_inf_matches_radial_supremum() {
    let mesh = TriangleMesh::structured_square(16).unwrap();
    for eps in [0.125, 0.0625] {
        let (a0, ae) = fields(eps);
        let d = field_norm(&make_d_eps(&a0, &ae).unwrap(), f64::INFINITY, 2.0, &mesh, QuadSpec::default()).unwrap();
        // supremum of κ₀/κ_ε is approached from inside the circle
        let oracle = (0..=100_000)
            .map(|i| 0.3 - eps / 2.0 + (eps / 2.0) * i as f64 / 100_000.0 * (1.0 - 1e-12))
            .map(|r| kappa0(r) / kappa_eps(eps, r))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((d - oracle).abs() < 1e-6, "eps={eps}: {d} vs {oracle}");
    }
}

#[test]
fn b_norm_matches_radial_integral() {
    let mesh = TriangleMesh::structured_square(16).unwrap();
    for (eps, p) in [(0.125, 3.0), (0.0625, 4.0), (0.125, 2.5)] {
        let (a0, ae) = fields(eps);
        let s = double_dual_exponent(p);
        let b = field_norm(&make_b_eps(&a0, &ae).unwrap(), s, p, &mesh, QuadSpec::default()).unwrap();
        let factor = 2f64.powf(1.0 / dual_exponent(p) - 1.0 / p);
        let integral = radial_integral(eps, |r| {
            let d = kappa_eps(eps, r) - kappa0(r);
            (d * d / kappa0(r)).powf(s)
        });
        let oracle = factor * integral.powf(1.0 / s);
        assert!((b - oracle).abs() < 0.02 * oracle, "eps={eps} p={p}: {b} vs {oracle}");
    }
}

#[test]
fn strip_difference_norm_matches_radial_integral() {
    let mesh = TriangleMesh::structured_square(16).unwrap();
    for (eps, q) in [(0.125, 2.0), (0.0625, 1.5), (0.125, 4.0)] {
        let (a0, ae) = fields(eps);
        let got = coefficient_difference_norm(&a0, &ae, q, &mesh, QuadSpec::default()).unwrap().powf(q);
        let oracle = radial_integral(eps, |r| (kappa0(r) - kappa_eps(eps, r)).abs().powf(q));
        assert!((got - oracle).abs() < 0.01 * oracle, "eps={eps} q={q}: {got} vs {oracle}");
    }
}

#[test]
fn difference_norm_shrinks_with_eps() {
    let mesh = TriangleMesh::structured_square(16).unwrap();
    let norms: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&e| {
            let (a0, ae) = fields(e);
            coefficient_difference_norm(&a0, &ae, 2.0, &mesh, QuadSpec::default()).unwrap()
        })
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn mixed_norm_is_absolutely_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let m = SymMat2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let c: f64 = rng.random_range(-4.0..4.0);
        let p: f64 = rng.random_range(2.0..8.0);
        let lhs = matrix_mixed_norm(&m.scale(c), p).unwrap();
        let rhs = c.abs() * matrix_mixed_norm(&m, p).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn identical_coefficients_give_trivial_fields() {
    let mesh = TriangleMesh::structured_square(8).unwrap();
    let a0 = CoefficientField::disc_jump(spec(0.0)).unwrap();
    let q = QuadSpec::default();
    assert_eq!(field_norm(&make_b_eps(&a0, &a0).unwrap(), 3.0, 3.0, &mesh, q).unwrap(), 0.0);
    assert_eq!(field_norm(&make_d_eps(&a0, &a0).unwrap(), f64::INFINITY, 2.0, &mesh, q).unwrap(), 1.0);
}
