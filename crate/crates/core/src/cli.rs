//! Command-line front end: `solve`, `constants` and `scaling`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::coeff::{field_norm, make_b_eps, CoefficientField, JumpDiscSpec};
use crate::config::RunConfig;
use crate::constants::{czygmund_c, czygmund_c1, eta, laplace_constant_bound, p_star};
use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::mesh::TriangleMesh;
use crate::quadrature::QuadSpec;
use crate::strategy::{AdaptiveState, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "errctl", version, about = "Combined modelling and discretization error control for jump-coefficient diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the adaptive loop described by a TOML config and print the CSV history.
    Solve {
        config: PathBuf,
        /// Overrides `output` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate C(d), C1(d,p), eta(p,P) and p*(t,P).
    Constants(ConstantsArgs),
    /// Tabulate |||B_eps|||_{p''} over eps = 2^-k for the disc strip family.
    Scaling(ScalingArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    #[arg(long, default_value_t = 1.05)]
    pub p_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub p_max: f64,
    #[arg(long, default_value_t = 60)]
    pub steps: usize,
    /// Spectral ratio for the p* column.
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Sweep t over [0, 1] alongside p instead of holding it fixed.
    #[arg(long)]
    pub t_sweep: bool,
    #[arg(long, default_value_t = 4.0)]
    pub big_p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_l: f64,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ScalingArgs {
    #[arg(long, default_value_t = 3.0)]
    pub p: f64,
    #[arg(long, default_value_t = 10.0)]
    pub k_in: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k_out: f64,
    #[arg(long, default_value_t = 0.3)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.5)]
    pub center_x: f64,
    #[arg(long, default_value_t = 0.5)]
    pub center_y: f64,
    /// Largest strip width is 2^-k_min.
    #[arg(long, default_value_t = 3)]
    pub k_min: i32,
    #[arg(long, default_value_t = 7)]
    pub k_max: i32,
    /// Grid carrying the quadrature.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub quad_order: u32,
    #[arg(long, default_value_t = 6)]
    pub interface_depth: u32,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Solve { config, output } => run_solve_path(&config, output, out),
        Command::Constants(a) => run_constants(&a, out).map(|_| EXIT_OK),
        Command::Scaling(a) => run_scaling(&a, out).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "errctl: {e}");
            EXIT_ERROR
        }
    }
}

fn run_solve_path(path: &std::path::Path, output: Option<PathBuf>, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = RunConfig::from_path(path)?;
    if output.is_some() {
        cfg.output = output;
    }
    let (state, csv) = run_solve(&cfg)?;
    match &cfg.output {
        Some(p) => std::fs::write(p, &csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(if state.status == Status::Converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Runs the adaptive loop and renders its CSV history.
pub fn run_solve(cfg: &RunConfig) -> Result<(AdaptiveState, String)> {
    let problem = cfg.build_problem()?;
    let mut state = AdaptiveState::new(problem, cfg.strategy_config())?;
    state.run()?;
    let mut csv = state.to_csv();
    writeln!(csv, "# note: regularity constants assume a C1 boundary; the unit square only has a Lipschitz one").unwrap();
    Ok((state, csv))
}

fn linspace(lo: f64, hi: f64, steps: usize) -> impl Iterator<Item = f64> {
    let n = steps.max(2) - 1;
    (0..=n).map(move |i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 })
}

fn opt(v: Result<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV columns `p,C_d,C1,eta,t,p_star`; `eta` is empty outside `[2, P]`.
pub fn run_constants(a: &ConstantsArgs, out: &mut dyn Write) -> Result<()> {
    if !(a.p_min > 1.0 && a.p_min < a.p_max && a.p_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 1 < p_min < p_max < inf, got {} and {}", a.p_min, a.p_max)));
    }
    if !(0.0..=1.0).contains(&a.t) {
        return Err(Error::InvalidArgument(format!("t must lie in [0, 1], got {}", a.t)));
    }
    let c_d = czygmund_c(a.d)?;
    let c_p = laplace_constant_bound(a.big_p, a.d, a.c_l)?;
    let mut s = String::from("p,C_d,C1,eta,t,p_star\n");
    let ts: Vec<f64> = if a.t_sweep { linspace(0.0, 1.0, a.steps).collect() } else { vec![a.t; a.steps.max(2)] };
    for (p, t) in linspace(a.p_min, a.p_max, a.steps).zip(ts) {
        let e = if p >= 2.0 && p <= a.big_p { opt(eta(p, a.big_p)) } else { String::new() };
        writeln!(s, "{p},{c_d},{},{e},{t},{}", czygmund_c1(a.d, p)?, p_star(t, a.big_p, c_p)?).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// `(ε, |||B_ε|||_{p''})` for `ε = 2^-k`, `k = k_min..=k_max`.
pub fn scaling_study(
    disc: JumpDiscSpec,
    p: f64,
    k_min: i32,
    k_max: i32,
    mesh: &TriangleMesh,
    quad: QuadSpec,
) -> Result<Vec<(f64, f64)>> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must lie in (2, inf), got {p}")));
    }
    if k_min > k_max {
        return Err(Error::InvalidArgument(format!("empty range {k_min}..={k_max}")));
    }
    let a0 = CoefficientField::disc_jump(JumpDiscSpec { strip_width: 0.0, ..disc })?;
    let ppp = p / (p - 2.0);
    (k_min..=k_max)
        .map(|k| {
            let eps = 2f64.powi(-k);
            let aeps = CoefficientField::disc_jump_smoothed(disc.with_strip_width(eps))?;
            let b = make_b_eps(&a0, &aeps)?;
            Ok((eps, field_norm(&b, ppp, p, mesh, quad)?))
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// CSV columns `eps,log_eps,b_ppp,log_b_ppp` plus a fitted-slope comment.
pub fn run_scaling(a: &ScalingArgs, out: &mut dyn Write) -> Result<()> {
    let disc = JumpDiscSpec {
        center: Point::new(a.center_x, a.center_y),
        radius: a.radius,
        k_in: a.k_in,
        k_out: a.k_out,
        strip_width: 0.0,
    };
    let mesh = TriangleMesh::structured_square(a.n)?;
    let rows = scaling_study(disc, a.p, a.k_min, a.k_max, &mesh, QuadSpec::new(a.quad_order, a.interface_depth))?;
    let mut s = String::from("eps,log_eps,b_ppp,log_b_ppp\n");
    for (e, b) in &rows {
        writeln!(s, "{e},{},{b},{}", e.ln(), b.ln()).unwrap();
    }
    if rows.len() >= 2 {
        writeln!(s, "# slope={} expected={}", log_log_slope(&rows), (a.p - 2.0) / a.p).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}
