//! Built-in problems used by the acceptance suite and the command line.

use crate::error::{Error, Result};
use crate::geometry::{Domain, LevelSet};
use crate::paths::{uniform_grid, Path};
use crate::potential::{SemiconvexPotential, SmoothPart};
use crate::scalar::Real;
use crate::skorohod::{DriftField, SolverConfig};

#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    pub name: &'static str,
    pub phi: SemiconvexPotential<T>,
    pub x0: Vec<T>,
    pub driver: Path<T>,
    pub drift: Option<DriftField<T>>,
    pub config: SolverConfig<T>,
}

impl<T: Real> Problem<T> {
    pub fn is_convex(&self) -> bool {
        self.phi.domain().shape().is_convex()
    }

    /// The drift, or the zero field.
    pub fn drift_or_zero(&self) -> DriftField<T> {
        self.drift.clone().unwrap_or_else(|| DriftField::catalog("zero", self.phi.dim(), None).expect("zero drift"))
    }
}

pub const NAMES: [&str; 12] = [
    "halfline_ramp",
    "halfline_push",
    "shell_slide",
    "shell_swirl",
    "shell_bowl",
    "annulus_level_set",
    "disk_level_set_decay",
    "box_corner",
    "ball_tilt",
    "box_minus_ball_orbit",
    "box_saddle",
    "halfspace_3d",
];

fn v<T: Real>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::of(x)).collect()
}

fn driver<T: Real>(t_end: f64, n: usize, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Path<T>> {
    Path::from_fn(uniform_grid(T::of(t_end), n)?, dim, |t| v(&f(t.as_f64())))
}

/// Problem by name; see [`NAMES`].
pub fn problem<T: Real>(name: &str) -> Result<Problem<T>> {
    let cfg = SolverConfig::<T>::default();
    let loose = SolverConfig { residual_tol: T::of(2e-2), ..cfg.clone() };
    let shell = || Domain::spherical_shell(v(&[0.0, 0.0]), T::one(), T::of(2.0));
    let p = match name {
        "halfline_ramp" => Problem {
            name: "halfline_ramp",
            phi: SemiconvexPotential::indicator(Domain::half_space(v(&[-1.0]), T::zero())?),
            x0: v(&[1.0]),
            driver: driver(1.0, 100, 1, |t| vec![-2.0 * t])?,
            drift: None,
            config: cfg,
        },
        "halfline_push" => Problem {
            name: "halfline_push",
            phi: SemiconvexPotential::indicator(Domain::half_space(v(&[-1.0]), T::zero())?),
            x0: v(&[0.0]),
            driver: driver(1.0, 100, 1, |t| vec![0.2 * (6.0 * t).sin()])?,
            drift: Some(DriftField::catalog("push", 1, None)?),
            config: cfg,
        },
        "shell_slide" => Problem {
            name: "shell_slide",
            phi: SemiconvexPotential::indicator(shell()?),
            x0: v(&[1.5, 0.0]),
            driver: driver(1.0, 200, 2, |t| vec![-2.0 * t, 0.0])?,
            drift: None,
            config: cfg,
        },
        "shell_swirl" => Problem {
            name: "shell_swirl",
            phi: SemiconvexPotential::indicator(shell()?),
            x0: v(&[1.5, 0.0]),
            driver: driver(2.0, 400, 2, |t| vec![0.6 * (4.0 * t).sin(), -0.9 * t])?,
            drift: Some(DriftField::catalog("swirl", 2, Some(T::of(2.0)))?),
            config: cfg,
        },
        "shell_bowl" => Problem {
            name: "shell_bowl",
            phi: SemiconvexPotential::new(shell()?, SmoothPart::catalog("bowl", 2)?)?,
            x0: v(&[1.8, 0.0]),
            driver: driver(1.5, 300, 2, |t| vec![0.0, 1.2 * t])?,
            drift: None,
            config: loose.clone(),
        },
        "annulus_level_set" => Problem {
            name: "annulus_level_set",
            phi: SemiconvexPotential::indicator(Domain::level_set(LevelSet::smoothed_annulus(
                v(&[0.0, 0.0]),
                T::one(),
                T::of(2.0),
            )?)?),
            x0: v(&[1.5, 0.0]),
            driver: driver(1.0, 200, 2, |t| vec![-1.2 * t, 0.8 * (2.0 * t).sin()])?,
            drift: None,
            config: cfg,
        },
        "disk_level_set_decay" => Problem {
            name: "disk_level_set_decay",
            phi: SemiconvexPotential::indicator(Domain::level_set(LevelSet::smoothed_disk(v(&[0.0, 0.0]), T::one())?)?),
            x0: v(&[0.0, 0.0]),
            driver: driver(1.0, 200, 2, |t| vec![2.0 * t, 1.5 * (3.0 * t).sin()])?,
            drift: Some(DriftField::catalog("decay", 2, Some(T::one()))?),
            config: cfg,
        },
        "box_corner" => Problem {
            name: "box_corner",
            phi: SemiconvexPotential::indicator(Domain::new_box(v(&[0.0, 0.0]), v(&[1.0, 1.0]))?),
            x0: v(&[0.5, 0.5]),
            driver: driver(1.0, 100, 2, |t| vec![2.0 * t, 1.5 * t])?,
            drift: None,
            config: cfg,
        },
        "ball_tilt" => Problem {
            name: "ball_tilt",
            phi: SemiconvexPotential::new(Domain::ball(v(&[0.0, 0.0]), T::one())?, SmoothPart::catalog("tilt", 2)?)?,
            x0: v(&[0.0, 0.0]),
            driver: driver(1.0, 200, 2, |t| vec![1.5 * t, 0.5 * (3.0 * t).sin()])?,
            drift: None,
            config: loose.clone(),
        },
        "box_minus_ball_orbit" => Problem {
            name: "box_minus_ball_orbit",
            phi: SemiconvexPotential::indicator(Domain::box_minus_ball(
                v(&[-2.0, -2.0]),
                v(&[2.0, 2.0]),
                v(&[0.0, 0.0]),
                T::of(0.5),
            )?),
            x0: v(&[1.0, 0.1]),
            driver: driver(1.0, 200, 2, |t| vec![-2.5 * t, 0.4 * t])?,
            drift: None,
            config: cfg,
        },
        "box_saddle" => Problem {
            name: "box_saddle",
            phi: SemiconvexPotential::new(
                Domain::new_box(v(&[-1.0, -1.0]), v(&[1.0, 1.0]))?,
                SmoothPart::catalog("saddle", 2)?,
            )?,
            x0: v(&[0.3, 0.2]),
            driver: driver(1.5, 300, 2, |t| vec![0.5 * (2.0 * t).sin(), 0.3 * t])?,
            drift: None,
            config: loose,
        },
        "halfspace_3d" => Problem {
            name: "halfspace_3d",
            phi: SemiconvexPotential::indicator(Domain::half_space(v(&[1.0, 1.0, 1.0]), T::one())?),
            x0: v(&[0.0, 0.0, 0.0]),
            driver: driver(1.0, 100, 3, |t| vec![t, 2.0 * t * t, (5.0 * t).sin()])?,
            drift: Some(DriftField::catalog("decay", 3, None)?),
            config: cfg,
        },
        other => return Err(Error::InvalidArgument(format!("unknown catalog problem {other:?}"))),
    };
    Ok(p)
}

pub fn all<T: Real>() -> Result<Vec<Problem<T>>> {
    NAMES.iter().map(|n| problem(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skorohod::{certify, solve_with_drift};

    #[test]
    fn every_problem_solves_and_certifies() {
        for p in all::<f64>().unwrap() {
            let f = p.drift_or_zero();
            let sol = solve_with_drift(&p.phi, &p.x0, &f, &p.driver, &p.config).unwrap();
            let cert = certify(&p.phi, &sol, &p.driver, &[], &p.config).unwrap();
            assert!(cert.pass, "{}: {cert:#?}", p.name);
            assert!(sol.k.total() > 0.0, "{} never touches the boundary", p.name);
        }
    }
}
