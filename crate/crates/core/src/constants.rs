//! Explicit regularity constants and exponent functions.
//!
//! Everything here is a closed-form expression in its arguments. Functions
//! validate their domains and return [`Error::InvalidArgument`] outside them.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// The Laplace `W^{1,2}` regularity constant is exactly 1.
pub const LAPLACE_CONSTANT_P2: f64 = 1.0;

fn invalid<T>(msg: String) -> Result<T> {
    Err(Error::InvalidArgument(msg))
}

fn check_dim(d: u32) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        invalid(format!("dimension must be 2 or 3, got {d}"))
    }
}

/// Working exponent `p > 2` with its conjugates `p' = p/(p−1)` and `p'' = p/(p−2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPair {
    p: f64,
}

impl ExponentPair {
    pub fn new(p: f64) -> Result<Self> {
        if p > 2.0 && p.is_finite() {
            Ok(ExponentPair { p })
        } else {
            invalid(format!("exponent must lie in (2, inf), got {p}"))
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_dual(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn p_double_dual(&self) -> f64 {
        self.p / (self.p - 2.0)
    }
}

/// Inputs of the perturbation regularity estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityInputs {
    pub alpha: f64,
    pub beta: f64,
    /// Integrability exponent of the data.
    pub big_p: f64,
    /// Target exponent for `∇u`.
    pub p: f64,
    pub c_l: f64,
    pub d: u32,
}

impl RegularityInputs {
    pub fn validate(&self) -> Result<()> {
        check_dim(self.d)?;
        if !(self.alpha > 0.0 && self.alpha <= self.beta && self.beta.is_finite()) {
            return invalid(format!("need 0 < alpha <= beta, got alpha={} beta={}", self.alpha, self.beta));
        }
        if !(self.big_p > 2.0 && self.big_p.is_finite()) {
            return invalid(format!("P must lie in (2, inf), got {}", self.big_p));
        }
        if !(self.p >= 2.0 && self.p <= self.big_p) {
            return invalid(format!("p must lie in [2, P], got p={} P={}", self.p, self.big_p));
        }
        if !(self.c_l >= 1.0) {
            return invalid(format!("C_L must be >= 1, got {}", self.c_l));
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.alpha / self.beta
    }

    /// `C_P ≤ C_L P^{d+1}`
    pub fn laplace_constant(&self) -> Result<f64> {
        laplace_constant_bound(self.big_p, self.d, self.c_l)
    }
}

/// `η(p,P) = (1/2 − 1/p) / (1/2 − 1/P)` on `2 < P < ∞, 2 ≤ p ≤ P`.
pub fn eta(p: f64, big_p: f64) -> Result<f64> {
    if !(big_p > 2.0 && big_p.is_finite() && p >= 2.0 && p <= big_p) {
        return invalid(format!("eta needs 2 < P < inf and 2 <= p <= P, got p={p} P={big_p}"));
    }
    Ok((0.5 - 1.0 / p) / (0.5 - 1.0 / big_p))
}

/// Upper bound `C_L p^{d+1}` for the Laplace `W^{1,p}` regularity constant,
/// never below 1.
pub fn laplace_constant_bound(p: f64, d: u32, c_l: f64) -> Result<f64> {
    check_dim(d)?;
    if !(p >= 2.0 && p.is_finite()) {
        return invalid(format!("p must lie in [2, inf), got {p}"));
    }
    if !(c_l >= 1.0 && c_l.is_finite()) {
        return invalid(format!("C_L must be >= 1, got {c_l}"));
    }
    Ok((c_l * p.powi(d as i32 + 1)).max(1.0))
}

/// Largest admissible gradient exponent `p*(t,P)` for spectral ratio `t`,
/// data exponent `P` and Laplace constant `C_P`.
pub fn p_star(t: f64, big_p: f64, c_p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return invalid(format!("t must lie in [0, 1], got {t}"));
    }
    if !(big_p > 2.0 && big_p.is_finite()) {
        return invalid(format!("P must lie in (2, inf), got {big_p}"));
    }
    if !(c_p >= 1.0 && c_p.is_finite()) {
        return invalid(format!("C_P must be >= 1, got {c_p}"));
    }
    if c_p == 1.0 || t > 1.0 - 1.0 / c_p {
        return Ok(big_p);
    }
    let lambda = (1.0 / (1.0 - t)).ln() / c_p.ln();
    Ok(1.0 / (0.5 - lambda * (0.5 - 1.0 / big_p)))
}

/// `W^{1,p}` regularity constant of a coefficient with bounds `(α, β)`:
/// `(1/β) C_P^η / (1 − C_P^η (1 − α/β))`, `η = η(p,P)`.
///
/// Fails with [`Error::InadmissibleExponent`] when the denominator is not
/// positive, i.e. when `p ≥ p*(α/β, P)`.
pub fn c_reg(inputs: &RegularityInputs, c_p: f64) -> Result<f64> {
    inputs.validate()?;
    if !(c_p >= 1.0 && c_p.is_finite()) {
        return invalid(format!("C_P must be >= 1, got {c_p}"));
    }
    let scale = c_p.powf(eta(inputs.p, inputs.big_p)?);
    let denom = 1.0 - scale * (1.0 - inputs.ratio());
    if !(denom > 0.0) {
        return Err(Error::InadmissibleExponent(format!(
            "p = {} is not below p*(alpha/beta, P); reduce p",
            inputs.p
        )));
    }
    Ok(scale / (inputs.beta * denom))
}

/// `p_max` of the large-perturbation estimate together with its Taylor lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PMax {
    pub value: f64,
    pub lower_bound: f64,
}

pub fn p_max(ratio: f64, big_p: f64, c_p: f64, c: f64) -> Result<PMax> {
    if !(c > 0.0 && c < 1.0) {
        return invalid(format!("c must lie in (0, 1), got {c}"));
    }
    if !(big_p > 2.0 && big_p.is_finite()) {
        return invalid(format!("P must lie in (2, inf), got {big_p}"));
    }
    if !(c_p > 1.0 && c_p.is_finite()) {
        return invalid(format!("C_P must be > 1, got {c_p}"));
    }
    if !(ratio > 0.0 && ratio <= 1.0 - 1.0 / c_p) {
        return invalid(format!("alpha/beta = {ratio} is outside the large-perturbation regime (0, {}]", 1.0 - 1.0 / c_p));
    }
    let log_cp = c_p.ln();
    let tail = 0.5 - 1.0 / big_p;
    let value = 1.0 / (0.5 - c * (1.0 / (1.0 - ratio)).ln() / log_cp * tail);
    let lower_bound = 2.0 + 4.0 * c * ratio / log_cp * tail;
    Ok(PMax { value, lower_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Small,
    Large,
    Generic,
}

/// Regularity constant selected by the size of the coefficient perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeBound {
    pub regime: Regime,
    pub constant: f64,
    /// Exclusive upper limit on `p` for which `constant` applies.
    pub p_limit: f64,
}

/// Small perturbations (`α/β ≥ 1 − 1/(2 C_L P^{d+1})`) give `2 C_L P^{d+1}/β`
/// for `p < P`; large ones (`α/β ≤ 1 − 1/C_P`) give
/// `(1/β) / ((1−α/β)^c − (1−α/β))` for `p < p_max`; otherwise [`c_reg`].
pub fn perturbation_regime_bound(inputs: &RegularityInputs, c: f64) -> Result<RegimeBound> {
    inputs.validate()?;
    let ratio = inputs.ratio();
    let poly = inputs.c_l * inputs.big_p.powi(inputs.d as i32 + 1);
    let c_p = inputs.laplace_constant()?;
    if ratio >= 1.0 - 1.0 / (2.0 * poly) {
        return Ok(RegimeBound { regime: Regime::Small, constant: 2.0 * poly / inputs.beta, p_limit: inputs.big_p });
    }
    if ratio <= 1.0 - 1.0 / c_p {
        let pm = p_max(ratio, inputs.big_p, c_p, c)?;
        let q = 1.0 - ratio;
        return Ok(RegimeBound { regime: Regime::Large, constant: 1.0 / (inputs.beta * (q.powf(c) - q)), p_limit: pm.value });
    }
    Ok(RegimeBound {
        regime: Regime::Generic,
        constant: c_reg(inputs, c_p)?,
        p_limit: p_star(ratio, inputs.big_p, c_p)?,
    })
}

fn gamma_half(d: u32) -> f64 {
    // Γ(d/2) for d ∈ {2, 3}
    if d == 2 {
        1.0
    } else {
        0.5 * PI.sqrt()
    }
}

/// Weak-(1,1) constant `C(d) = 2^{d+2} + 2^{d+1} d(d+5) + (2π^{d/2}/Γ(d/2)) d^{d/2−1}`.
pub fn czygmund_c(d: u32) -> Result<f64> {
    check_dim(d)?;
    let df = d as f64;
    let sphere = 2.0 * PI.powf(0.5 * df) / gamma_half(d);
    Ok(2f64.powi(d as i32 + 2) + 2f64.powi(d as i32 + 1) * df * (df + 5.0) + sphere * df.powf(0.5 * df - 1.0))
}

/// `C(d,p) = 2 (p/(p−1) + p/(2−p))^{1/p} C(d)^{2/p−1}` for `1 < p < 2`.
pub fn czygmund_cdp(d: u32, p: f64) -> Result<f64> {
    if !(p > 1.0 && p < 2.0) {
        return invalid(format!("C(d,p) needs 1 < p < 2, got {p}"));
    }
    let cd = czygmund_c(d)?;
    Ok(2.0 * (p / (p - 1.0) + p / (2.0 - p)).powf(1.0 / p) * cd.powf(2.0 / p - 1.0))
}

/// Calderón–Zygmund constant `C₁(d,p)` for `1 < p < ∞`; also the Laplace
/// regularity constant of the full-space problem.
pub fn czygmund_c1(d: u32, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return invalid(format!("C1(d,p) needs 1 < p < inf, got {p}"));
    }
    check_dim(d)?;
    let pd = p / (p - 1.0);
    if p <= 1.5 {
        czygmund_cdp(d, p)
    } else if p <= 2.0 {
        Ok(czygmund_cdp(d, 1.5)?.powf(3.0 / p * (2.0 - p)))
    } else if p < 3.0 {
        Ok(czygmund_cdp(d, 1.5)?.powf(3.0 / pd * (2.0 - pd)))
    } else {
        czygmund_cdp(d, pd)
    }
}

/// Interpolation weight `θ(r,t) = 2(t−r) / (r(t−2))`, i.e. `1/r = θ/2 + (1−θ)/t`.
/// Accepts the closure values `θ(2,t) = 1` and `θ(t,t) = 0`.
pub fn theta(r: f64, t: f64) -> Result<f64> {
    if !(t > 2.0 && t.is_finite() && r >= 2.0 && r <= t) {
        return invalid(format!("theta needs 2 <= r <= t < inf with t > 2, got r={r} t={t}"));
    }
    if r == 2.0 {
        return Ok(1.0);
    }
    if r == t {
        return Ok(0.0);
    }
    Ok(2.0 * (t - r) / (r * (t - 2.0)))
}

/// Friedrichs constant bound `C_F = diam Ω / (√2 π)` and `C_Ω = C_F / √α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedrichsBound {
    pub c_f: f64,
    pub c_omega: f64,
}

pub fn friedrichs_from_diameter(diameter: f64, alpha_lower: f64) -> Result<FriedrichsBound> {
    if !(alpha_lower > 0.0) {
        return invalid(format!("lower spectral bound must be positive, got {alpha_lower}"));
    }
    if !(diameter > 0.0) {
        return invalid(format!("diameter must be positive, got {diameter}"));
    }
    let c_f = diameter / (std::f64::consts::SQRT_2 * PI);
    Ok(FriedrichsBound { c_f, c_omega: c_f / alpha_lower.sqrt() })
}

pub fn friedrichs_bound(mesh: &TriangleMesh, alpha_lower: f64) -> Result<FriedrichsBound> {
    friedrichs_from_diameter(mesh.diameter(), alpha_lower)
}
