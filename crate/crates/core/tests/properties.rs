use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skorohod_core::geometry::{Domain, LevelSet, NormalCone};
use skorohod_core::paths::{modulus, mu, mu_inverse, total_variation, uniform_grid, Path};
use skorohod_core::potential::{check_subdiff_inequality, SemiconvexPotential, SmoothPart};
use skorohod_core::scalar::vector::{dist, dot, norm, sub};
use skorohod_core::skorohod::{solve, SolverConfig};

fn domains() -> Vec<Domain<f64>> {
    vec![
        Domain::half_space(vec![0.6, 0.8], 0.5).unwrap(),
        Domain::new_box(vec![-1.0, -0.5], vec![1.0, 1.5]).unwrap(),
        Domain::ball(vec![0.2, -0.1], 1.3).unwrap(),
        Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap(),
        Domain::box_minus_ball(vec![-2.0, -2.0], vec![2.0, 2.0], vec![0.0, 0.0], 0.5).unwrap(),
        Domain::level_set(LevelSet::smoothed_disk(vec![0.0, 0.0], 1.0).unwrap()).unwrap(),
    ]
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 2)
}

fn pl_path(n: usize) -> impl Strategy<Value = Path<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2 * n).prop_map(move |steps| {
        let mut vals = vec![0.0, 0.0];
        for s in steps.chunks(2) {
            let l = vals.len();
            vals.push(vals[l - 2] + s[0]);
            vals.push(vals[l - 1] + s[1]);
        }
        Path::new(uniform_grid(1.0, n).unwrap(), vals, 2).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_realizes_distance(z in point()) {
        for d in domains() {
            let dz = d.distance(&z).unwrap();
            if dz >= d.projection_limit() {
                continue;
            }
            let p = d.project(&z).unwrap();
            prop_assert!(d.distance(&p).unwrap() <= d.boundary_tol(), "{}", d.kind_name());
            prop_assert!((dist(&p, &z) - dz).abs() <= 1e-10, "{}", d.kind_name());
            let pp = d.project(&p).unwrap();
            prop_assert!(dist(&pp, &p) <= 1e-10, "{}", d.kind_name());
        }
    }

    #[test]
    fn distance_is_one_lipschitz(a in point(), b in point()) {
        for d in domains() {
            let gap = (d.distance(&a).unwrap() - d.distance(&b).unwrap()).abs();
            prop_assert!(gap <= dist(&a, &b) + 1e-10, "{}", d.kind_name());
        }
    }

    #[test]
    fn projection_residual_lies_in_normal_cone(z in point(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for d in domains() {
            let dz = d.distance(&z).unwrap();
            if dz <= 1e-6 || dz >= d.projection_limit() {
                continue;
            }
            let p = d.project(&z).unwrap();
            let v = sub(&z, &p);
            let u: Vec<f64> = v.iter().map(|c| c / norm(&v)).collect();
            match d.normal_cone(&p).unwrap() {
                NormalCone::Ray(n) => prop_assert!(dist(&n, &u) <= 1e-8, "{}", d.kind_name()),
                NormalCone::Generators(gs) => {
                    // the residual is a nonnegative combination: no generator-orthogonal
                    // component points against the cone
                    prop_assert!(gs.iter().any(|g| dot(g, &u) > 0.0));
                }
            }
            let gamma = d.semiconvexity_gamma();
            for _ in 0..50 {
                let y = d.sample_point(&mut rng);
                let dy = sub(&y, &p);
                prop_assert!(dot(&u, &dy) <= gamma * dot(&dy, &dy) + 1e-10, "{}", d.kind_name());
            }
        }
    }

    #[test]
    fn modulus_is_refinement_invariant_monotone_and_subadditive(
        y in pl_path(12), a in 0.01..0.5f64, b in 0.01..0.5f64
    ) {
        let fine = y.refine_midpoints();
        prop_assert!((modulus(&y, a).unwrap() - modulus(&fine, a).unwrap()).abs() <= 1e-12);
        let (ma, mb, mab) = (modulus(&y, a).unwrap(), modulus(&y, b).unwrap(), modulus(&y, a + b).unwrap());
        prop_assert!(mab <= ma + mb + 1e-12);
        prop_assert!(mab + 1e-12 >= ma.max(mb));
    }

    #[test]
    fn variation_is_additive_and_refinement_invariant(
        y in pl_path(10), s in 0.0..1.0f64, t in 0.0..1.0f64, u in 0.0..1.0f64
    ) {
        let mut w = [s, t, u];
        w.sort_by(f64::total_cmp);
        let [s, t, u] = w;
        let whole = total_variation(&y, s, u).unwrap();
        let parts = total_variation(&y, s, t).unwrap() + total_variation(&y, t, u).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole));
        let fine = y.refine_midpoints();
        prop_assert!((total_variation(&fine, s, u).unwrap() - whole).abs() <= 1e-12 * (1.0 + whole));
    }

    #[test]
    fn mu_inverse_round_trips(y in pl_path(8), frac in 0.01..1.0f64) {
        let top = mu(&y, 1.0).unwrap();
        let u = frac * top;
        let e = mu_inverse(&y, u).unwrap();
        prop_assert!(mu(&y, e).unwrap() >= u - 1e-12);
        prop_assert!(e <= 1e-12 || mu(&y, e * (1.0 - 1e-9)).unwrap() <= u + 1e-12);
    }

    #[test]
    fn smooth_gradients_match_central_differences(x in point()) {
        for name in ["tilt", "bowl", "saddle"] {
            let g = SmoothPart::<f64>::catalog(name, 2).unwrap();
            let grad = g.gradient(&x);
            let h = 1e-6;
            for i in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (g.value(&xp) - g.value(&xm)) / (2.0 * h);
                prop_assert!((fd - grad[i]).abs() <= 1e-7, "{name}: {fd} vs {}", grad[i]);
            }
        }
    }

    #[test]
    fn shell_solutions_keep_their_invariants(m in pl_path(40), seed in any::<u64>()) {
        let shell = Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap();
        let phi = SemiconvexPotential::indicator(shell.clone());
        let x0 = [1.5, 0.0];
        let sol = solve(&phi, &x0, &m, &SolverConfig::default()).unwrap();
        let cv = sol.k.cumvar();
        prop_assert!(cv.windows(2).all(|w| w[1] >= w[0]));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probes: Vec<Vec<f64>> = (0..30).map(|_| shell.sample_point(&mut rng)).collect();
        for (i, &t) in sol.times().iter().enumerate() {
            let mt = m.eval(t).unwrap();
            let x = sol.x.value(i);
            let k = sol.k.path().value(i);
            for c in 0..2 {
                prop_assert!((x[c] + k[c] - x0[c] - mt[c]).abs() <= 1e-12 * (1.0 + cv[i]));
            }
            prop_assert!(shell.distance(x).unwrap() <= shell.boundary_tol());
            if i == 0 {
                continue;
            }
            let dk = sub(k, sol.k.path().value(i - 1));
            let len = norm(&dk);
            for y in &probes {
                let dy = sub(y, x);
                prop_assert!(dot(&dk, &dy) <= 0.5 * len * dot(&dy, &dy) + 1e-12);
            }
        }
    }
}

#[test]
fn default_constants_satisfy_the_subdifferential_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases = [
        ("ball", "tilt"),
        ("shell", "bowl"),
        ("box", "saddle"),
        ("box_minus_ball", "zero"),
        ("shell", "zero"),
    ];
    for (dom, smooth) in cases {
        let domain = match dom {
            "ball" => Domain::ball(vec![0.0, 0.0], 1.0),
            "shell" => Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0),
            "box" => Domain::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]),
            _ => Domain::box_minus_ball(vec![-2.0, -2.0], vec![2.0, 2.0], vec![0.0, 0.0], 0.5),
        }
        .unwrap();
        let phi = SemiconvexPotential::new(domain.clone(), SmoothPart::catalog(smooth, 2).unwrap()).unwrap();
        let pairs = phi.sample_subgradients(120, 5.0, &mut rng);
        let probes: Vec<Vec<f64>> = (0..120).map(|_| domain.sample_point(&mut rng)).collect();
        let rep = check_subdiff_inequality(&phi, &pairs, &probes, phi.rho(), phi.gamma()).unwrap();
        assert!(rep.samples >= 10_000, "{dom}/{smooth}: {} samples", rep.samples);
        assert!(rep.max_violation <= 1e-10, "{dom}/{smooth}: {rep:?}");
    }
}
