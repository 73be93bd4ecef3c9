use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::certify::{BOUNDARY_SUPPORT, NORMAL_ALIGNMENT};
use super::*;
use crate::geometry::Domain;
use crate::paths::uniform_grid;
use crate::potential::SmoothPart;

fn halfline() -> SemiconvexPotential<f64> {
    SemiconvexPotential::indicator(Domain::half_space(vec![-1.0], 0.0).unwrap())
}

fn shell() -> SemiconvexPotential<f64> {
    SemiconvexPotential::indicator(Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap())
}

fn linear(t_end: f64, n: usize, velocity: &[f64]) -> Path<f64> {
    Path::from_fn(uniform_grid(t_end, n).unwrap(), velocity.len(), |t| velocity.iter().map(|v| v * t).collect())
        .unwrap()
}

/// `x(t) = x0 + m(t) + max(0, max_{s <= t} -(x0 + m(s)))` at the nodes.
fn explicit_map(x0: f64, m: &[f64]) -> Vec<f64> {
    let mut worst: f64 = 0.0;
    m.iter()
        .map(|&v| {
            worst = worst.max(-(x0 + v));
            x0 + v + worst
        })
        .collect()
}

fn coarse_config() -> SolverConfig<f64> {
    SolverConfig { base_step: 10.0, ..SolverConfig::default() }
}

#[test]
fn halfline_closed_form() {
    let m = linear(1.0, 100, &[-2.0]);
    let sol = solve(&halfline(), &[1.0], &m, &SolverConfig::default()).unwrap();
    for (i, &t) in sol.times().iter().enumerate() {
        assert!((sol.x.value(i)[0] - (1.0 - 2.0 * t).max(0.0)).abs() <= 1e-12);
        assert!((sol.k.path().value(i)[0] - (1.0 - 2.0 * t).min(0.0)).abs() <= 1e-12);
    }
    assert_eq!(sol.k.path().value(0), &[0.0]);
}

#[test]
fn one_dimensional_recursion_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(2..60);
        let mut times = vec![0.0];
        let mut vals = vec![0.0];
        for _ in 0..n {
            times.push(times.last().unwrap() + rng.random_range(0.01..0.3));
            vals.push(vals.last().unwrap() + rng.random_range(-1.0..1.0));
        }
        let m = Path::new(times, vals.clone(), 1).unwrap();
        let x0 = rng.random_range(0.0..0.5);
        let sol = solve(&halfline(), &[x0], &m, &coarse_config()).unwrap();
        assert_eq!(sol.x.len(), m.len());
        let mut x = x0;
        let oracle = explicit_map(x0, &vals);
        for i in 0..m.len() {
            assert_eq!(sol.x.value(i)[0], x);
            assert!((x - oracle[i]).abs() <= 1e-12);
            if i + 1 < m.len() {
                x = (x + (vals[i + 1] - vals[i])).max(0.0);
            }
        }
    }
}

#[test]
fn shell_slide_certifies() {
    let phi = shell();
    let m = linear(1.0, 200, &[-2.0, 0.0]);
    let cfg = SolverConfig::default();
    let sol = solve(&phi, &[1.5, 0.0], &m, &cfg).unwrap();
    let end = sol.x.value(sol.x.len() - 1);
    assert!((end[0].hypot(end[1]) - 1.0).abs() < 1e-12);
    let cert = certify(&phi, &sol, &m, &[], &cfg).unwrap();
    assert!(cert.pass, "{cert:#?}");
    assert_eq!(cert.checks.len(), 7);
    // refinement is Cauchy
    let fine = solve(&phi, &[1.5, 0.0], &linear(1.0, 800, &[-2.0, 0.0]), &cfg).unwrap();
    let mid = sol.x.eval(1.0).unwrap();
    let mid_f = fine.x.eval(1.0).unwrap();
    assert!(crate::scalar::vector::dist(&mid, &mid_f) < 0.05);
}

#[test]
fn rotated_increment_fails_alignment() {
    let phi = shell();
    let m = linear(1.0, 100, &[-2.0, 0.0]);
    let cfg = SolverConfig::default();
    let mut sol = solve(&phi, &[1.5, 0.0], &m, &cfg).unwrap();
    let parts = sol.parts.as_mut().unwrap();
    let i = (0..parts.steps()).max_by(|&a, &b| {
        let na = crate::scalar::vector::norm(parts.normal(a));
        let nb = crate::scalar::vector::norm(parts.normal(b));
        na.total_cmp(&nb)
    });
    let i = i.unwrap();
    let nu = parts.normal(i).to_vec();
    parts.normal[2 * i] = -nu[1];
    parts.normal[2 * i + 1] = nu[0];
    let cert = certify(&phi, &sol, &m, &[], &cfg).unwrap();
    let c = cert.check(NORMAL_ALIGNMENT).unwrap();
    assert!(!c.pass && c.residual > 0.0, "{c:?}");
    assert!(!cert.pass);
}

#[test]
fn interior_variation_fails_support() {
    let phi = halfline();
    let m = linear(1.0, 100, &[1.0]);
    let cfg = SolverConfig::default();
    let sol = solve(&phi, &[0.5], &m, &cfg).unwrap();
    let mut csv = Vec::new();
    sol.write_csv(&mut csv).unwrap();
    let mut bad = SkorohodSolution::<f64>::read_csv(csv.as_slice(), "m").unwrap();
    // move 0.01 of the driver from x into k from node 40 on
    let n = bad.x.len();
    let mut xs = bad.x.values().to_vec();
    let mut ks = bad.k.path().values().to_vec();
    let mut cv = bad.k.cumvar().to_vec();
    for i in 40..n {
        xs[i] -= 0.01;
        ks[i] += 0.01;
        cv[i] += 0.01;
    }
    bad.x = Path::new(bad.times().to_vec(), xs, 1).unwrap();
    bad.k = crate::paths::BVPath::new(Path::new(bad.times().to_vec(), ks, 1).unwrap(), cv).unwrap();
    let cert = certify(&phi, &bad, &m, &[], &cfg).unwrap();
    assert!(!cert.check(BOUNDARY_SUPPORT).unwrap().pass, "{cert:#?}");
    assert!(certify(&phi, &sol, &m, &[], &cfg).unwrap().pass);
}

#[test]
fn unconstrained_decay() {
    let bx = Domain::new_box(vec![-1e3], vec![1e3]).unwrap();
    let phi = SemiconvexPotential::indicator(bx);
    let f = DriftField::catalog("decay", 1, None).unwrap();
    let m = Path::constant(vec![0.0], 1.0, 10_000).unwrap();
    let cfg = SolverConfig { base_step: 1e-4, ..SolverConfig::default() };
    let sol = solve_with_drift(&phi, &[1.0], &f, &m, &cfg).unwrap();
    for (i, &t) in sol.times().iter().enumerate() {
        assert!((sol.x.value(i)[0] - f64::exp(-t)).abs() <= 5e-4);
    }
    assert_eq!(sol.k.total(), 0.0);
}

#[test]
fn constant_push_stays_on_boundary() {
    let phi = halfline();
    let f = DriftField::catalog("push", 1, None).unwrap();
    let m = Path::constant(vec![0.0], 1.0, 50).unwrap();
    let cfg = SolverConfig::default();
    let sol = solve_with_drift(&phi, &[0.0], &f, &m, &cfg).unwrap();
    for (i, &t) in sol.times().iter().enumerate() {
        assert_eq!(sol.x.value(i)[0], 0.0);
        assert!((sol.k.path().value(i)[0] + 3.0 * t).abs() < 1e-12);
    }
    let cert = certify(&phi, &sol, &m, &[], &cfg).unwrap();
    assert!(cert.pass, "{cert:#?}");
}

#[test]
fn delayed_drift_is_cauchy() {
    let phi = shell();
    let f = DriftField::catalog("decay", 2, Some(2.0)).unwrap();
    let m = Path::from_fn(uniform_grid(2.0, 400).unwrap(), 2, |t: f64| vec![0.3 * (3.0 * t).sin(), 0.8 * t]).unwrap();
    let run = |n| {
        let cfg = SolverConfig { delay_n: Some(n), ..SolverConfig::default() };
        solve_with_drift(&phi, &[1.5, 0.0], &f, &m, &cfg).unwrap()
    };
    let sols: Vec<_> = [4, 16, 64].into_iter().map(run).collect();
    let gap = |a: &SkorohodSolution<f64>, b: &SkorohodSolution<f64>| a.x.difference(&b.x).unwrap().sup_norm();
    let g1 = gap(&sols[0], &sols[1]);
    let g2 = gap(&sols[1], &sols[2]);
    assert!(g2 < g1, "{g1} {g2}");
    let cfg = SolverConfig { delay_n: Some(64), ..SolverConfig::default() };
    assert!(certify(&phi, &sols[2], &m, &[], &cfg).unwrap().pass);
}

#[test]
fn collapse_and_bad_start() {
    let phi = shell();
    let jump = Path::new(vec![0.0, 1e-3], vec![0.0, 0.0, -1.3, 0.0], 2).unwrap();
    let cfg = SolverConfig { max_bisections: 0, ..SolverConfig::default() };
    match solve(&phi, &[1.5, 0.0], &jump, &cfg) {
        Err(Error::StepCollapse { bisections, .. }) => assert_eq!(bisections, 0),
        other => panic!("{other:?}"),
    }
    let m = linear(1.0, 10, &[0.0, 0.0]);
    assert!(matches!(solve(&phi, &[0.5, 0.0], &m, &cfg), Err(Error::StartOutsideDomain { .. })));
}

#[test]
fn bisection_resolves_large_jumps() {
    let phi = shell();
    let jump = Path::new(vec![0.0, 1e-3], vec![0.0, 0.0, -1.3, 0.0], 2).unwrap();
    let cfg = SolverConfig::default();
    let sol = solve(&phi, &[1.5, 0.0], &jump, &cfg).unwrap();
    assert!(sol.bisections > 0);
    assert!(certify(&phi, &sol, &jump, &[], &cfg).unwrap().pass);
}

#[test]
fn solution_csv_round_trip() {
    let phi = shell();
    let m = linear(1.0, 50, &[-2.0, 0.5]);
    let sol = solve(&phi, &[1.5, 0.0], &m, &SolverConfig::default()).unwrap();
    let mut buf = Vec::new();
    sol.write_csv(&mut buf).unwrap();
    let back = SkorohodSolution::<f64>::read_csv(buf.as_slice(), "m").unwrap();
    assert_eq!(back.x, sol.x);
    assert_eq!(back.k, sol.k);
    assert!(certify(&phi, &back, &m, &[], &SolverConfig::default()).unwrap().pass);
}

#[test]
fn smooth_part_and_reconstructed_drift() {
    let dom = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
    let phi = SemiconvexPotential::new(dom, SmoothPart::catalog("tilt", 2).unwrap()).unwrap();
    let f = DriftField::catalog("swirl", 2, Some(1.0)).unwrap();
    let m = linear(1.0, 200, &[1.5, 0.3]);
    let cfg = SolverConfig { residual_tol: 2e-2, ..SolverConfig::default() };
    let sol = solve_with_drift(&phi, &[0.2, 0.1], &f, &m, &cfg).unwrap();
    assert!(certify(&phi, &sol, &m, &[], &cfg).unwrap().pass);
    let mut buf = Vec::new();
    sol.write_csv(&mut buf).unwrap();
    let back = SkorohodSolution::<f64>::read_csv(buf.as_slice(), "m").unwrap();
    let eff = m.resample(back.times().to_vec()).unwrap().add_scaled(1.0, &reconstruct_drift(&f, &back.x, None).unwrap());
    let cert = certify(&phi, &back, &eff.unwrap(), &[], &cfg).unwrap();
    assert!(cert.pass, "{cert:#?}");
}

#[test]
fn stability_identical_and_perturbed() {
    let phi = shell();
    let m = linear(1.0, 100, &[-2.0, 0.0]);
    let cfg = SolverConfig::default();
    let a = solve(&phi, &[1.5, 0.0], &m, &cfg).unwrap();
    let rep = stability_gap(&phi, &a, &a, &m, &m).unwrap();
    assert!(rep.lhs.iter().all(|&v| v == 0.0));
    assert!(rep.margin >= 0.0);
    assert!(rep.holder_ratio.is_none());
    let m2 = linear(1.0, 100, &[-2.0, 0.3]);
    let b = solve(&phi, &[1.6, 0.0], &m2, &cfg).unwrap();
    let rep = stability_gap(&phi, &a, &b, &m, &m2).unwrap();
    assert!(rep.margin >= 0.0, "{}", rep.margin);
    assert!(monotonicity_residual(&phi, &a, &b).unwrap() >= -1e-12);
    let other_grid = solve(&phi, &[1.5, 0.0], &linear(1.0, 50, &[-2.0, 0.0]), &cfg).unwrap();
    assert!(matches!(stability_gap(&phi, &a, &other_grid, &m, &m), Err(Error::GridMismatch(_))));
}

#[test]
fn convergence_constant_and_smooth() {
    let phi = shell();
    let gen_const = |n: usize| Path::constant(vec![0.0, 0.0], 1.0, n);
    let rep = convergence_study(&phi, &[1.5, 0.0], gen_const, &[10, 20, 40], &coarse_config()).unwrap();
    assert!(rep.error_x.iter().all(|&e| e == 0.0));
    let ball = SemiconvexPotential::indicator(Domain::ball(vec![0.0, 0.0], 1.0).unwrap());
    let gen = |n: usize| {
        Path::from_fn(uniform_grid(1.0, n).unwrap(), 2, |t: f64| vec![1.5 * (2.0 * t).sin(), 1.0 - (3.0 * t).cos()])
    };
    let rep = convergence_study(&ball, &[0.0, 0.0], gen, &[25, 50, 100, 200, 3200], &coarse_config()).unwrap();
    assert!(rep.rate_x.unwrap() >= 0.9, "{rep:?}");
}

#[test]
fn unbounded_drift_on_unbounded_domain_is_flagged() {
    let phi = halfline();
    let m = linear(1.0, 20, &[0.5]);
    let decay = DriftField::catalog("decay", 1, None).unwrap();
    let sol = solve_with_drift(&phi, &[1.0], &decay, &m, &SolverConfig::default()).unwrap();
    assert_eq!(sol.warnings.len(), 1, "{:?}", sol.warnings);
    let push = DriftField::catalog("push", 1, None).unwrap();
    let sol = solve_with_drift(&phi, &[1.0], &push, &m, &SolverConfig::default()).unwrap();
    assert!(sol.warnings.is_empty());
    assert!(solve(&phi, &[1.0], &m, &SolverConfig::default()).unwrap().warnings.is_empty());
}
