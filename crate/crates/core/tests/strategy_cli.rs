use std::sync::Arc;

use errctl::cli::{main_with_args, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK};
use errctl::estimator::{estimate, EstimatorConfig};
use errctl::fem::{assemble, solve_cg};
use errctl::problems::disc_jump;
use errctl::quadrature::QuadSpec;
use errctl::strategy::{model_term, precheck_model, AdaptiveState, ModelCheck, Status, StrategyConfig};
use errctl::TriangleMesh;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with_args(std::iter::once("errctl").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn solve_with(config: &str) -> (i32, String, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, config).unwrap();
    run(&["solve", path.to_str().unwrap()])
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn poisson_converges_and_exits_zero() {
    let (code, csv, _) = solve_with("problem = \"poisson_sine\"\ndelta = 0.1\n");
    assert_eq!(code, EXIT_OK, "{csv}");
    assert!(csv.starts_with("# errctl report v1\n"));
    assert!(csv.contains("# status=converged converged=true"));
    let rows = data_rows(&csv);
    assert!(rows[..rows.len() - 1].iter().all(|r| r[2] == "refine"));
    assert_eq!(rows.last().unwrap()[2], "converged");
}

#[test]
fn malformed_config_names_the_key() {
    let (code, _, err) = solve_with("problem = \"poisson_sine\"\ndelta = 0.1\nflux_iterashuns = 3\n");
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("flux_iterashuns"), "{err}");
    let (code, _, err) = solve_with("problem = \"poisson_sine\"\ndelta = -1.0\n");
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("delta"), "{err}");
    let (code, _, _) = run(&["solve", "/nonexistent/run.toml"]);
    assert_eq!(code, EXIT_ERROR);
}

#[test]
fn infinite_tolerance_gives_one_row() {
    let (code, csv, _) = solve_with("problem = \"disc_jump\"\ndelta = inf\n");
    assert_eq!(code, EXIT_OK);
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "converged");
}

#[test]
fn unreachable_tolerance_exits_two() {
    let (code, csv, _) = solve_with("problem = \"disc_jump\"\ndelta = 1e-3\nbudget = 3\n");
    assert_eq!(code, EXIT_NOT_CONVERGED);
    assert_eq!(data_rows(&csv).len(), 3);
    assert!(csv.contains("status=budget_exhausted"));
}

#[test]
fn identical_configs_give_identical_csv() {
    let cfg = "problem = \"disc_jump\"\ndelta = 0.5\nbudget = 3\nexponent_policy = \"scan\"\n";
    let (_, a, _) = solve_with(cfg);
    let (_, b, _) = solve_with(cfg);
    assert_eq!(a, b);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("out.csv");
    std::fs::write(&cfg, "problem = \"poisson_sine\"\ndelta = inf\n").unwrap();
    let (code, stdout, _) = run(&["solve", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.is_empty());
    assert!(std::fs::read_to_string(out).unwrap().contains("total_remark1"));
}

#[test]
fn constants_table() {
    let (code, csv, _) = run(&["constants", "--p-min", "1.5", "--p-max", "3", "--steps", "7"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("p,C_d,C1,eta,t,p_star"));
    let rows: Vec<Vec<f64>> =
        lines.map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect()).collect();
    assert_eq!(rows.len(), 7);
    let p2 = rows.iter().find(|r| r[0] == 2.0).unwrap();
    assert_eq!(p2[2], 1.0);
    assert!(rows.iter().all(|r| r[1] == rows[0][1] && r[2] >= 1.0 - 1e-12));
    assert!(rows.iter().filter(|r| r[0] < 2.0).all(|r| r[3].is_nan()));

    let (code, _, err) = run(&["constants", "--t", "2"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains('t'));
}

#[test]
fn scaling_table_reports_slope() {
    let (code, csv, _) = run(&["scaling", "--p", "4", "--k-min", "3", "--k-max", "5", "--n", "8"]);
    assert_eq!(code, EXIT_OK);
    assert!(csv.starts_with("eps,log_eps,b_ppp,log_b_ppp\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 4);
    assert!(csv.contains("# slope="));
}

#[test]
fn precheck_agrees_with_bisection() {
    let p = disc_jump();
    let mesh = TriangleMesh::structured_square(16).unwrap();
    let cfg = EstimatorConfig::default();
    let delta = 2.0 * model_term(&p, 1.0 / 32.0, &mesh, &cfg).unwrap();
    // largest ε with model term ≤ δ/2, by bisection on log ε
    let (mut lo, mut hi) = ((1.0f64 / 4096.0).ln(), (0.2f64).ln());
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if model_term(&p, mid.exp(), &mesh, &cfg).unwrap() <= 0.5 * delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps_star = lo.exp();
    assert!((eps_star - 1.0 / 32.0).abs() < 1e-3 / 32.0, "{eps_star}");
    assert_eq!(precheck_model(&p, 0.9 * eps_star, delta, &mesh, &cfg).unwrap().0, ModelCheck::Sufficient);
    assert_eq!(precheck_model(&p, 1.1 * eps_star, delta, &mesh, &cfg).unwrap().0, ModelCheck::Insufficient);
}

#[test]
fn decisions_follow_the_predicate() {
    let cfg = StrategyConfig { delta: 1e-6, budget: 4, ..Default::default() };
    let mut st = AdaptiveState::new(disc_jump(), cfg).unwrap();
    assert_eq!(st.run().unwrap(), Status::BudgetExhausted);
    assert_eq!(st.history.len(), 4);
    for (i, r) in st.history.iter().enumerate() {
        let expect = if r.report.disc_bound >= r.report.mod_bound { "refine" } else { "sharpen" };
        assert_eq!(r.action.as_str(), expect);
        if i > 0 {
            let prev = &st.history[i - 1];
            if prev.action.as_str() == "sharpen" {
                assert_eq!(r.eps, 0.5 * prev.eps);
            }
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = disc_jump();
    let ae = p.simplified(0.125).unwrap();
    let compute = || {
        let mesh = Arc::new(TriangleMesh::structured_square(16).unwrap());
        let u_h = solve_cg(&assemble(&mesh, &ae, &*p.f, QuadSpec::default()).unwrap(), 1e-10).unwrap();
        estimate(&u_h, &*p.f, &p.a0, &ae, &EstimatorConfig::default()).unwrap().csv_fields()
    };
    let rows: Vec<String> = [1, 2, 5]
        .iter()
        .map(|&n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(compute))
        .collect();
    assert!(rows.iter().all(|r| *r == rows[0]));
}
