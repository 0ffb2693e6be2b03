//! Adaptive balancing of discretization and modelling errors.

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::coeff::{field_norm, make_b_eps, CoefficientField};
use crate::constants::{c_reg, RegularityInputs};
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_with_data_mesh, modelling_term_remark2, select_exponents, EstimatorConfig, ErrorReport, CSV_VERSION_LINE,
};
use crate::fem::{assemble, energy_error_against, f_norm, solve_cg_with_report, FeFunction, DEFAULT_REL_TOL};
use crate::mesh::TriangleMesh;
use crate::problems::Problem;

/// Smallest strip width the loop will use.
pub const DEFAULT_EPS_MIN: f64 = 1.0 / 8192.0;
pub const DEFAULT_BUDGET: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    pub delta: f64,
    pub budget: usize,
    pub eps_min: f64,
    pub cg_tol: f64,
    pub estimator: EstimatorConfig,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            delta: 0.0,
            budget: DEFAULT_BUDGET,
            eps_min: DEFAULT_EPS_MIN,
            cg_tol: DEFAULT_REL_TOL,
            estimator: EstimatorConfig::default(),
        }
    }
}

/// What the loop did after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Converged,
    Refine,
    Sharpen,
    /// Sharpening was selected but `ε/2` is below the floor.
    EpsFloor,
}

impl Action {
    pub fn as_str(&self) -> &'static str {
        match self {
            Action::Converged => "converged",
            Action::Refine => "refine",
            Action::Sharpen => "sharpen",
            Action::EpsFloor => "eps_floor",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub eps: f64,
    pub action: Action,
    pub cg_iterations: usize,
    pub report: ErrorReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Converged,
    BudgetExhausted,
    EpsFloorReached,
}

#[derive(Debug, Clone)]
pub struct AdaptiveState {
    pub problem: Problem,
    pub config: StrategyConfig,
    pub mesh: Arc<TriangleMesh>,
    /// Initial mesh; coefficient and data norms are integrated here at every step.
    pub data_mesh: Arc<TriangleMesh>,
    pub eps: f64,
    pub aeps: CoefficientField,
    pub history: Vec<StepRecord>,
    pub status: Status,
    /// Recorded violations of expected monotonicity; never fatal.
    pub warnings: Vec<String>,
}

impl AdaptiveState {
    pub fn new(problem: Problem, config: StrategyConfig) -> Result<Self> {
        if !(config.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {}", config.delta)));
        }
        if config.budget == 0 {
            return Err(Error::InvalidArgument("budget must be at least 1".into()));
        }
        let mesh = Arc::new(TriangleMesh::structured_square(problem.n0)?);
        let eps = problem.eps0;
        let aeps = problem.simplified(eps)?;
        Ok(AdaptiveState { problem, config, data_mesh: mesh.clone(), mesh, eps, aeps, history: Vec::new(), status: Status::Running, warnings: Vec::new() })
    }

    pub fn is_finished(&self) -> bool {
        self.status != Status::Running
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.history.last()
    }

    /// Solves and estimates on the current `(mesh, A_ε)`, then converges,
    /// refines the mesh (`disc_bound ≥ mod_bound`) or halves `ε`.
    pub fn step(&mut self) -> Result<()> {
        if self.is_finished() {
            return Err(Error::InvalidArgument("the adaptive loop has already finished".into()));
        }
        let f = &*self.problem.f;
        let sys = assemble(&self.mesh, &self.aeps, f, self.config.estimator.quad)?;
        let (u_h, cg) = solve_cg_with_report(&sys, self.config.cg_tol)?;
        let mut report =
            estimate_with_data_mesh(&u_h, f, &self.problem.a0, &self.aeps, &self.config.estimator, &self.data_mesh)?;
        if let Some(ex) = &self.problem.exact {
            report.true_error = Some(energy_error_against(&u_h, &*ex.grad, &self.problem.a0, self.config.estimator.quad)?);
        }
        self.check_refinement_monotone(&report);

        let action = if report.total_remark1 <= self.config.delta {
            Action::Converged
        } else if report.disc_bound >= report.mod_bound {
            Action::Refine
        } else if self.eps / 2.0 >= self.config.eps_min && self.problem.has_simplification() {
            Action::Sharpen
        } else {
            Action::EpsFloor
        };
        self.history.push(StepRecord { step: self.history.len(), eps: self.eps, action, cg_iterations: cg.iterations, report });

        match action {
            Action::Converged => self.status = Status::Converged,
            Action::EpsFloor => self.status = Status::EpsFloorReached,
            Action::Refine => self.mesh = Arc::new(self.mesh.refine_uniform()),
            Action::Sharpen => {
                self.eps /= 2.0;
                self.aeps = self.problem.simplified(self.eps)?;
            }
        }
        if self.status == Status::Running && self.history.len() >= self.config.budget {
            self.status = Status::BudgetExhausted;
        }
        Ok(())
    }

    fn check_refinement_monotone(&mut self, report: &ErrorReport) {
        let Some(prev) = self.history.last() else { return };
        if prev.action == Action::Refine && report.majorant.value > prev.report.majorant.value + 1e-10 {
            self.warnings.push(format!(
                "step {}: majorant rose from {} to {} after refinement",
                self.history.len(),
                prev.report.majorant.value,
                report.majorant.value
            ));
        }
    }

    /// Steps until convergence, exhaustion of the budget or the `ε` floor.
    pub fn run(&mut self) -> Result<Status> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(self.status)
    }

    pub fn csv_header() -> String {
        let mut s = format!("{CSV_VERSION_LINE}\nstep,eps,action,cg_iterations");
        for c in ErrorReport::csv_columns() {
            s.push(',');
            s.push_str(c);
        }
        s
    }

    /// Version line, column header, one row per step and a `#` summary block.
    pub fn to_csv(&self) -> String {
        let mut s = Self::csv_header();
        s.push('\n');
        for r in &self.history {
            writeln!(s, "{},{},{},{},{}", r.step, r.eps, r.action, r.cg_iterations, r.report.csv_fields()).unwrap();
        }
        let status = match self.status {
            Status::Running => "running",
            Status::Converged => "converged",
            Status::BudgetExhausted => "budget_exhausted",
            Status::EpsFloorReached => "eps_floor_reached",
        };
        writeln!(s, "# problem={} delta={} budget={} eps_min={}", self.problem.name, self.config.delta, self.config.budget, self.config.eps_min).unwrap();
        writeln!(s, "# policy: refine when disc_bound >= mod_bound, otherwise halve eps").unwrap();
        writeln!(s, "# status={status} converged={}", self.status == Status::Converged).unwrap();
        if let Some(last) = self.last() {
            writeln!(s, "# final total_remark1={} total_remark2={}", last.report.total_remark1, last.report.total_remark2).unwrap();
        }
        for w in &self.warnings {
            writeln!(s, "# warning: {w}").unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelCheck {
    Sufficient,
    Insufficient,
}

/// Whether the mesh-independent modelling term `|||B_ε|||^{1/2} C_reg ‖f‖_p`
/// is at most `δ/2`; `mesh` only carries the quadrature.
pub fn precheck_model(
    problem: &Problem,
    eps: f64,
    delta: f64,
    mesh: &TriangleMesh,
    cfg: &EstimatorConfig,
) -> Result<(ModelCheck, f64)> {
    let term = model_term(problem, eps, mesh, cfg)?;
    let verdict = if term <= 0.5 * delta { ModelCheck::Sufficient } else { ModelCheck::Insufficient };
    Ok((verdict, term))
}

/// The second term of the two-term bound for `A_ε` with the default exponents.
pub fn model_term(problem: &Problem, eps: f64, mesh: &TriangleMesh, cfg: &EstimatorConfig) -> Result<f64> {
    let aeps = problem.simplified(eps)?;
    let (bounds, _) = aeps.spectral_bounds(mesh)?;
    let c_p = cfg.laplace_constant()?;
    let sel = select_exponents(cfg.big_p, bounds.alpha, bounds.beta, c_p)?;
    let b = make_b_eps(&problem.a0, &aeps)?;
    let b_ppp = field_norm(&b, sel.p_double_dual, sel.p, mesh, cfg.quad)?;
    if b_ppp == 0.0 {
        return Ok(0.0);
    }
    let inputs = RegularityInputs { alpha: bounds.alpha, beta: bounds.beta, big_p: cfg.big_p, p: sel.p, c_l: cfg.c_l, d: 2 };
    let c = c_reg(&inputs, c_p)?;
    Ok(modelling_term_remark2(b_ppp, c, f_norm(&*problem.f, sel.p, mesh, cfg.quad)?))
}

/// Discrete solution for `A_ε` on `mesh`.
pub fn solve_simplified(problem: &Problem, eps: f64, mesh: &Arc<TriangleMesh>, cfg: &StrategyConfig) -> Result<FeFunction> {
    let aeps = problem.simplified(eps)?;
    let sys = assemble(mesh, &aeps, &*problem.f, cfg.estimator.quad)?;
    Ok(solve_cg_with_report(&sys, cfg.cg_tol)?.0)
}
