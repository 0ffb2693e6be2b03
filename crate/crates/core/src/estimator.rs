//! Combined modelling and discretization bounds.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::coeff::{coefficient_difference_norm, field_norm, make_b_eps, make_d_eps, BoundsSource, CoefficientField, ScalarField};
use crate::constants::{c_reg, friedrichs_bound, laplace_constant_bound, p_star, theta, RegularityInputs};
use crate::error::{Error, Result};
use crate::fem::{f_norm, grad_norm, FeFunction};
use crate::majorant::{minimize_majorant, MajorantBreakdown};
use crate::quadrature::QuadSpec;
use crate::mesh::TriangleMesh;

/// Spatial dimension of everything below the constants module.
const DIM: u32 = 2;

/// Smallest usable gap `p* − 2`.
const MIN_EXPONENT_GAP: f64 = 1e-9;

/// First line of every CSV report.
pub const CSV_VERSION_LINE: &str = "# errctl report v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentPolicy {
    #[default]
    Default,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentSelection {
    /// Integrability exponent of `f`.
    pub big_p: f64,
    pub p: f64,
    pub t: f64,
    /// `p/(p−2)`
    pub p_double_dual: f64,
    /// `θ(p,t)`
    pub theta: f64,
    pub p_star: f64,
}

impl ExponentSelection {
    fn new(big_p: f64, p: f64, t: f64, p_star: f64) -> Result<Self> {
        if !(2.0 < p && p < t && t < p_star && p_star <= big_p) {
            return Err(Error::InadmissibleExponent(format!(
                "need 2 < p < t < p* <= P, got p={p} t={t} p*={p_star} P={big_p}"
            )));
        }
        Ok(ExponentSelection { big_p, p, t, p_double_dual: p / (p - 2.0), theta: theta(p, t)?, p_star })
    }
}

fn admissible_p_star(big_p: f64, alpha: f64, beta: f64, c_p: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < alpha <= beta, got alpha={alpha} beta={beta}")));
    }
    let ps = p_star(alpha / beta, big_p, c_p)?;
    if ps <= 2.0 + MIN_EXPONENT_GAP {
        return Err(Error::InadmissibleExponent(format!(
            "p* = {ps} leaves no admissible p; reduce the jump ratio or increase P"
        )));
    }
    Ok(ps)
}

/// `p = 2 + (p*−2)/2`, `t = 2 + 3(p*−2)/4`.
pub fn select_exponents(big_p: f64, alpha: f64, beta: f64, c_p: f64) -> Result<ExponentSelection> {
    let ps = admissible_p_star(big_p, alpha, beta, c_p)?;
    ExponentSelection::new(big_p, 2.0 + 0.5 * (ps - 2.0), 2.0 + 0.75 * (ps - 2.0), ps)
}

/// Nine pairs `p = 2 + a(p*−2)`, `t = p + b(p*−p)` with `a, b ∈ {1/4, 1/2, 3/4}`,
/// ordered by increasing `p`, then `t`.
pub fn scan_exponents(big_p: f64, alpha: f64, beta: f64, c_p: f64) -> Result<Vec<ExponentSelection>> {
    let ps = admissible_p_star(big_p, alpha, beta, c_p)?;
    let fractions = [0.25, 0.5, 0.75];
    let mut out = Vec::with_capacity(9);
    for a in fractions {
        let p = 2.0 + a * (ps - 2.0);
        for b in fractions {
            out.push(ExponentSelection::new(big_p, p, p + b * (ps - p), ps)?);
        }
    }
    Ok(out)
}

pub fn exponent_candidates(
    policy: ExponentPolicy,
    big_p: f64,
    alpha: f64,
    beta: f64,
    c_p: f64,
) -> Result<Vec<ExponentSelection>> {
    match policy {
        ExponentPolicy::Default => Ok(vec![select_exponents(big_p, alpha, beta, c_p)?]),
        ExponentPolicy::Scan => scan_exponents(big_p, alpha, beta, c_p),
    }
}

/// `|||D_ε|||^{1/2}_∞ M_Ω`
pub fn disc_bound(majorant: &MajorantBreakdown, d_inf: f64) -> f64 {
    d_inf.sqrt() * majorant.value
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModellingTerms {
    /// `Υ = (C_reg ‖f‖_t + ‖∇u_h‖_t)^{1−θ} α_ε^{−θ/2}`
    pub upsilon: f64,
    /// `Θ = M^θ Υ + ‖∇u_h‖_p`
    pub theta_big: f64,
    /// `|||B_ε|||^{1/2}_{p''} Θ`
    pub bound: f64,
    pub grad_norm_p: f64,
    pub grad_norm_t: f64,
}

/// `c_reg_t` must be the regularity constant for exponent `sel.t`.
pub fn mod_bound(
    u_h: &FeFunction,
    majorant: &MajorantBreakdown,
    b_ppp: f64,
    sel: &ExponentSelection,
    c_reg_t: f64,
    f_norm_t: f64,
    alpha_eps: f64,
) -> Result<ModellingTerms> {
    if !(sel.theta >= 0.0 && sel.theta <= 1.0) {
        return Err(Error::InadmissibleExponent(format!("theta = {} outside [0, 1]", sel.theta)));
    }
    if !(alpha_eps > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha_eps must be positive, got {alpha_eps}")));
    }
    let grad_norm_t = grad_norm(u_h, sel.t, None)?;
    let grad_norm_p = grad_norm(u_h, sel.p, None)?;
    let th = sel.theta;
    let upsilon = (c_reg_t * f_norm_t + grad_norm_t).powf(1.0 - th) * alpha_eps.powf(-0.5 * th);
    let theta_big = majorant.value.powf(th) * upsilon + grad_norm_p;
    Ok(ModellingTerms { upsilon, theta_big, bound: b_ppp.sqrt() * theta_big, grad_norm_p, grad_norm_t })
}

/// `|||D|||^{1/2} M + |||B|||^{1/2} M^θ Υ + |||B|||^{1/2} ‖∇u_h‖_p`
pub fn total_bound_remark1(
    majorant: &MajorantBreakdown,
    d_inf: f64,
    b_ppp: f64,
    theta: f64,
    upsilon: f64,
    grad_norm_p: f64,
) -> f64 {
    let sb = b_ppp.sqrt();
    d_inf.sqrt() * majorant.value + sb * majorant.value.powf(theta) * upsilon + sb * grad_norm_p
}

/// `|||D|||^{1/2} M + |||B|||^{1/2} C_reg ‖f‖_p` with `C_reg` at exponent `p`.
pub fn total_bound_remark2(majorant: &MajorantBreakdown, d_inf: f64, b_ppp: f64, c_reg_p: f64, f_norm_p: f64) -> f64 {
    d_inf.sqrt() * majorant.value + modelling_term_remark2(b_ppp, c_reg_p, f_norm_p)
}

/// The mesh-independent second term of [`total_bound_remark2`].
pub fn modelling_term_remark2(b_ppp: f64, c_reg_p: f64, f_norm_p: f64) -> f64 {
    b_ppp.sqrt() * c_reg_p * f_norm_p
}

/// Settings shared by every estimate of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub big_p: f64,
    pub c_l: f64,
    pub policy: ExponentPolicy,
    pub quad: QuadSpec,
    pub flux_iterations: usize,
    /// Exponent of the reported `‖A₀ − A_ε‖_q`.
    pub q: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { big_p: 4.0, c_l: 1.0, policy: ExponentPolicy::Default, quad: QuadSpec::default(), flux_iterations: 5, q: 2.0 }
    }
}

impl EstimatorConfig {
    /// `C_P = C_L P^{d+1}`
    pub fn laplace_constant(&self) -> Result<f64> {
        laplace_constant_bound(self.big_p, DIM, self.c_l)
    }
}

/// All bound components for one approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub majorant: MajorantBreakdown,
    pub c_omega: f64,
    pub d_inf: f64,
    pub b_ppp: f64,
    pub upsilon: f64,
    pub theta_big: f64,
    pub disc_bound: f64,
    pub mod_bound: f64,
    pub total_remark1: f64,
    pub total_remark2: f64,
    /// Regularity constant at exponent `t`.
    pub c_reg_value: f64,
    /// Regularity constant at exponent `p`.
    pub c_reg_p: f64,
    pub exponents: ExponentSelection,
    pub grad_norm_p: f64,
    pub grad_norm_t: f64,
    pub f_norm_t: f64,
    pub f_norm_p: f64,
    pub alpha_eps: f64,
    pub beta_eps: f64,
    pub bounds_source: BoundsSource,
    pub c_l: f64,
    pub c_p: f64,
    pub quad: QuadSpec,
    pub q: f64,
    /// `‖A₀ − A_ε‖_q`
    pub coeff_diff_q: f64,
    pub num_vertices: usize,
    pub h_max: f64,
    pub true_error: Option<f64>,
}

const COLUMNS: &[&str] = &[
    "vertices", "h", "majorant", "flux_term", "residual_term", "gamma", "c_omega", "d_inf", "b_ppp", "upsilon",
    "theta_big", "disc_bound", "mod_bound", "total_remark1", "total_remark2", "c_reg_t", "c_reg_p", "P", "p", "t",
    "p_double_dual", "theta", "p_star", "alpha_eps", "beta_eps", "bounds_source", "C_L", "C_P", "quad_order",
    "interface_depth", "q", "coeff_diff_q", "true_error",
];

impl ErrorReport {
    pub fn csv_columns() -> &'static [&'static str] {
        COLUMNS
    }

    /// Comma-separated values in [`csv_columns`](Self::csv_columns) order;
    /// floats use the shortest round-trip representation.
    pub fn csv_fields(&self) -> String {
        let e = &self.exponents;
        let m = &self.majorant;
        let mut s = format!("{},{}", self.num_vertices, self.h_max);
        for v in [
            m.value, m.flux_term, m.residual_term, m.gamma, self.c_omega, self.d_inf, self.b_ppp, self.upsilon,
            self.theta_big, self.disc_bound, self.mod_bound, self.total_remark1, self.total_remark2, self.c_reg_value,
            self.c_reg_p, e.big_p, e.p, e.t, e.p_double_dual, e.theta, e.p_star, self.alpha_eps, self.beta_eps,
        ] {
            write!(s, ",{v}").unwrap();
        }
        write!(s, ",{},{},{},{},{}", self.bounds_source, self.c_l, self.c_p, self.quad.order, self.quad.interface_depth).unwrap();
        write!(s, ",{},{}", self.q, self.coeff_diff_q).unwrap();
        match self.true_error {
            Some(v) => write!(s, ",{v}").unwrap(),
            None => s.push(','),
        }
        s
    }
}

/// Bounds the `A₀`-energy error of `u_h`, the discrete solution of the problem
/// with coefficient `aeps`. With the scan policy the exponent pair giving the
/// smallest `total_remark1` is kept (ties go to smaller `p`).
pub fn estimate(
    u_h: &FeFunction,
    f: &dyn ScalarField,
    a0: &CoefficientField,
    aeps: &CoefficientField,
    cfg: &EstimatorConfig,
) -> Result<ErrorReport> {
    estimate_with_data_mesh(u_h, f, a0, aeps, cfg, u_h.mesh())
}

/// [`estimate`] with coefficient and right-hand-side norms integrated on
/// `data_mesh` instead of the mesh of `u_h`.
pub fn estimate_with_data_mesh(
    u_h: &FeFunction,
    f: &dyn ScalarField,
    a0: &CoefficientField,
    aeps: &CoefficientField,
    cfg: &EstimatorConfig,
    data_mesh: &TriangleMesh,
) -> Result<ErrorReport> {
    let mesh = data_mesh;
    let quad = cfg.quad;
    let (bounds, bounds_source) = aeps.spectral_bounds(mesh)?;
    let c_omega = friedrichs_bound(mesh, bounds.alpha)?.c_omega;
    let majorant = minimize_majorant(u_h, f, aeps, c_omega, cfg.flux_iterations, quad)?.breakdown;

    let d_field = make_d_eps(a0, aeps)?;
    let b_field = make_b_eps(a0, aeps)?;
    let d_inf = field_norm(&d_field, f64::INFINITY, 2.0, mesh, quad)?;
    let disc = disc_bound(&majorant, d_inf);

    let c_p = cfg.laplace_constant()?;
    let candidates = exponent_candidates(cfg.policy, cfg.big_p, bounds.alpha, bounds.beta, c_p)?;
    let regularity = |exp: f64| {
        c_reg(
            &RegularityInputs { alpha: bounds.alpha, beta: bounds.beta, big_p: cfg.big_p, p: exp, c_l: cfg.c_l, d: DIM },
            c_p,
        )
    };

    let mut best: Option<ErrorReport> = None;
    for sel in candidates {
        let b_ppp = field_norm(&b_field, sel.p_double_dual, sel.p, mesh, quad)?;
        let c_reg_t = regularity(sel.t)?;
        let c_reg_p = regularity(sel.p)?;
        let f_norm_t = f_norm(f, sel.t, mesh, quad)?;
        let f_norm_p = f_norm(f, sel.p, mesh, quad)?;
        let m = mod_bound(u_h, &majorant, b_ppp, &sel, c_reg_t, f_norm_t, bounds.alpha)?;
        let report = ErrorReport {
            majorant,
            c_omega,
            d_inf,
            b_ppp,
            upsilon: m.upsilon,
            theta_big: m.theta_big,
            disc_bound: disc,
            mod_bound: m.bound,
            total_remark1: total_bound_remark1(&majorant, d_inf, b_ppp, sel.theta, m.upsilon, m.grad_norm_p),
            total_remark2: total_bound_remark2(&majorant, d_inf, b_ppp, c_reg_p, f_norm_p),
            c_reg_value: c_reg_t,
            c_reg_p,
            exponents: sel,
            grad_norm_p: m.grad_norm_p,
            grad_norm_t: m.grad_norm_t,
            f_norm_t,
            f_norm_p,
            alpha_eps: bounds.alpha,
            beta_eps: bounds.beta,
            bounds_source,
            c_l: cfg.c_l,
            c_p,
            quad,
            q: cfg.q,
            coeff_diff_q: 0.0,
            num_vertices: u_h.mesh().num_vertices(),
            h_max: u_h.mesh().max_element_diameter(),
            true_error: None,
        };
        if best.as_ref().is_none_or(|b| report.total_remark1 < b.total_remark1) {
            best = Some(report);
        }
    }
    let mut report = best.expect("at least one exponent candidate");
    report.coeff_diff_q = coefficient_difference_norm(a0, aeps, cfg.q, mesh, quad)?;
    Ok(report)
}
