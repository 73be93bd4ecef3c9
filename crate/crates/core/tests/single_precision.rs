mod common;

use skorohod_core::catalog;
use skorohod_core::geometry::Domain;
use skorohod_core::paths::{uniform_grid, Path};
use skorohod_core::potential::SemiconvexPotential;
use skorohod_core::skorohod::{certify, solve, solve_with_drift, SolverConfig};

#[test]
fn halfline_in_f32_tracks_the_explicit_map() {
    let phi = SemiconvexPotential::indicator(Domain::<f32>::half_space(vec![-1.0], 0.0).unwrap());
    let m = Path::from_fn(uniform_grid(1.0f32, 200).unwrap(), 1, |t| vec![(6.0 * t).sin() - 1.5 * t]).unwrap();
    let sol = solve(&phi, &[0.2], &m, &SolverConfig::default()).unwrap();
    let values: Vec<f64> = m.values().iter().map(|&v| v as f64).collect();
    let want = common::halfline_map(0.2, &values);
    for (i, w) in want.iter().enumerate() {
        assert!((sol.x.value(i)[0] as f64 - w).abs() < 1e-5);
    }
}

#[test]
fn catalog_problems_certify_in_f32() {
    for name in ["halfline_ramp", "shell_slide", "shell_swirl", "box_corner", "box_minus_ball_orbit"] {
        let p = catalog::problem::<f32>(name).unwrap();
        let sol = solve_with_drift(&p.phi, &p.x0, &p.drift_or_zero(), &p.driver, &p.config).unwrap();
        let cert = certify(&p.phi, &sol, &p.driver, &[], &p.config).unwrap();
        assert!(cert.pass, "{name}: {:#?}", cert.failing().collect::<Vec<_>>());
    }
}
