use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skorohod_core::geometry::Domain;
use skorohod_core::paths::Path as DriverPath;
use skorohod_core::potential::SemiconvexPotential;
use skorohod_core::skorohod::{solve, SkorohodSolution, SolverConfig};

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skorohod")).args(args).output().expect("binary runs")
}

fn problem(name: &str) -> String {
    problems().join(name).display().to_string()
}

fn read_solution(path: &Path) -> SkorohodSolution<f64> {
    SkorohodSolution::read_csv(std::fs::File::open(path).unwrap(), "test").unwrap()
}

#[test]
fn solve_halfline_matches_closed_form_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("h.csv");
    let out = run(&["solve", &problem("halfline.toml"), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = read_solution(&csv);
    for (i, &t) in sol.times().iter().enumerate() {
        let x = sol.x.value(i)[0];
        let k = sol.k.path().value(i)[0];
        assert!((x - (1.0 - 2.0 * t).max(0.0)).abs() < 1e-12, "t = {t}: x = {x}");
        assert!((k + (2.0 * t - 1.0).max(0.0)).abs() < 1e-12, "t = {t}: k = {k}");
    }
    // decimal output re-parses to the in-process values exactly
    let phi = SemiconvexPotential::indicator(Domain::half_space(vec![-1.0], 0.0).unwrap());
    let m = DriverPath::from_fn(skorohod_core::paths::uniform_grid(1.0, 100).unwrap(), 1, |t| vec![-2.0 * t]).unwrap();
    let direct = solve(&phi, &[1.0], &m, &SolverConfig::default()).unwrap();
    assert_eq!(direct.x.values(), sol.x.values());
    assert_eq!(direct.k.path().values(), sol.k.path().values());
    assert_eq!(direct.k.cumvar(), sol.k.cumvar());
}

#[test]
fn solve_then_certify_round_trips_for_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(problems()).unwrap() {
        let path = entry.unwrap().path();
        let csv = dir.path().join("s.csv");
        let p = path.to_str().unwrap();
        let out = run(&["solve", p, "--out", csv.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "solve {p}: {}", String::from_utf8_lossy(&out.stderr));
        let out = run(&["certify", p, csv.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "certify {p}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn tampered_solution_fails_with_the_check_named() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let p = problem("shell_slide.toml");
    assert_eq!(run(&["solve", &p, "--out", csv.to_str().unwrap()]).status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut cells: Vec<String> = lines[40].split(',').map(str::to_owned).collect();
    let x1: f64 = cells[1].parse().unwrap();
    cells[1] = (x1 + 0.05).to_string();
    lines[40] = cells.join(",");
    std::fs::write(&csv, lines.join("\n") + "\n").unwrap();
    let out = run(&["certify", &p, csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("telescoping_identity"), "{err}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["certificate"]["pass"], false);
}

#[test]
fn monte_carlo_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let p = problem("annulus.toml");
    for out in [&a, &b] {
        let o = run(&["mc", &p, "--paths", "100", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ra, rb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ra, rb);
    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["report"]["certified"], 100);
    assert_eq!(report["config"]["driver"]["kind"], "brownian");
}

#[test]
fn simulate_is_reproducible_and_writes_csv_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let p = problem("box_hole_brownian.toml");
    let a = run(&["simulate", &p, "--seed", "11", "--out", csv.to_str().unwrap()]);
    let b = run(&["simulate", &p, "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(read_solution(&csv).times().len(), 401);
}

#[test]
fn converge_and_check_domain_report() {
    let out = run(&["converge", &problem("bowl_shell.toml"), "--steps", "75,150,300,600"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["report"]["reference_steps"], 600);
    let out = run(&["check-domain", &problem("shell_slide.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 3);
}

#[test]
fn parse_errors_exit_two_with_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(problems().join("halfline.toml")).unwrap();
    std::fs::write(&bad, text.replace("steps = 100", "steps = 100\nstep_size = 3")).unwrap();
    let out = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("step_size") && err.contains("line"), "{err}");
    assert_eq!(run(&["solve"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn solver_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("jump.toml");
    let text = std::fs::read_to_string(problems().join("shell_slide.toml")).unwrap();
    let text = text
        .replace("kind = \"sinusoid\"\namplitude = [-1.2, 0.9]\nfrequency = 0.5", "kind = \"constant\"\nvelocity = [-300.0, 0.0]")
        + "\n[solver]\nmax_bisections = 0\n";
    std::fs::write(&bad, text).unwrap();
    let out = run(&["solve", bad.to_str().unwrap(), "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bisections"));
}
