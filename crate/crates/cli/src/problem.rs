//! Problem files: TOML with a strict schema, unknown keys rejected.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use skorohod_core::geometry::{Domain, LevelSet};
use skorohod_core::paths::{read_path_csv, uniform_grid, Path};
use skorohod_core::potential::{SemiconvexPotential, SmoothPart};
use skorohod_core::sde::{brownian, BrownianDriver, DiffusionField};
use skorohod_core::skorohod::{DriftField, SolverConfig};

use crate::Failure;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: Option<String>,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub steps: usize,
    pub domain: DomainSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub driver: DriverSpec,
    #[serde(default)]
    pub drift: Option<DriftSpec>,
    #[serde(default)]
    pub diffusion: Option<DiffusionSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub checks: ChecksSpec,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    SphericalShell { center: Vec<f64>, inner: f64, outer: f64 },
    BoxMinusBall { lo: Vec<f64>, hi: Vec<f64>, hole_center: Vec<f64>, hole_radius: f64 },
    LevelSetDisk { center: Vec<f64>, radius: f64 },
    LevelSetAnnulus { center: Vec<f64>, inner: f64, outer: f64 },
    LevelSetBox { lo: Vec<f64>, hi: Vec<f64>, corner_radius: f64 },
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// Catalog entry: `zero`, `tilt`, `bowl` or `saddle`.
    #[serde(default)]
    pub smooth: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriverSpec {
    /// `m(t) = velocity * t`
    Constant { velocity: Vec<f64> },
    /// `m(t) = amplitude * sin(2 pi frequency t)`
    Sinusoid { amplitude: Vec<f64>, frequency: f64 },
    /// `m = scale * B` for a seeded Brownian motion `B`.
    Brownian {
        seed: u64,
        #[serde(default)]
        scale: Option<f64>,
    },
    /// Path CSV (`t, m1..md`), relative to the problem file.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    /// Catalog entry: `zero`, `decay`, `push` or `swirl`.
    pub name: String,
    /// Bound on `|x|` over the domain; defaults to the domain's own.
    #[serde(default)]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionSpec {
    Zero,
    ScaledIdentity { scale: f64 },
    Damped { scale: f64 },
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub base_step: Option<f64>,
    pub safety_fraction: Option<f64>,
    pub max_bisections: Option<u32>,
    pub delay_n: Option<u32>,
    pub boundary_tol: Option<f64>,
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Drop condition parameters; the drop check is skipped without them.
    #[serde(default)]
    pub drop_h0: Option<f64>,
    #[serde(default)]
    pub drop_radius: Option<f64>,
}

fn default_samples() -> usize {
    400
}

impl Default for ChecksSpec {
    fn default() -> Self {
        ChecksSpec { samples: default_samples(), seed: 0, drop_h0: None, drop_radius: None }
    }
}

/// A parsed file together with its location, for resolving relative paths.
#[derive(Debug, Clone)]
pub struct Problem {
    pub file: ProblemFile,
    pub dir: PathBuf,
    pub stem: String,
}

pub fn load(path: &FsPath) -> Result<Problem, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let file: ProblemFile = toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if file.steps == 0 {
        return Err(Failure::usage(format!("{}: steps must be at least 1", path.display())));
    }
    if !(file.t_end > 0.0 && file.t_end.is_finite()) {
        return Err(Failure::usage(format!("{}: t_end must be positive and finite", path.display())));
    }
    let dir = path.parent().map(FsPath::to_path_buf).unwrap_or_default();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "problem".into());
    Ok(Problem { file, dir, stem })
}

impl Problem {
    pub fn name(&self) -> &str {
        self.file.name.as_deref().unwrap_or(&self.stem)
    }

    pub fn domain(&self) -> Result<Domain<f64>, Failure> {
        let d = match &self.file.domain {
            DomainSpec::HalfSpace { normal, offset } => Domain::half_space(normal.clone(), *offset),
            DomainSpec::Box { lo, hi } => Domain::new_box(lo.clone(), hi.clone()),
            DomainSpec::Ball { center, radius } => Domain::ball(center.clone(), *radius),
            DomainSpec::SphericalShell { center, inner, outer } => {
                Domain::spherical_shell(center.clone(), *inner, *outer)
            }
            DomainSpec::BoxMinusBall { lo, hi, hole_center, hole_radius } => {
                Domain::box_minus_ball(lo.clone(), hi.clone(), hole_center.clone(), *hole_radius)
            }
            DomainSpec::LevelSetDisk { center, radius } => {
                LevelSet::smoothed_disk(center.clone(), *radius).and_then(Domain::level_set)
            }
            DomainSpec::LevelSetAnnulus { center, inner, outer } => {
                LevelSet::smoothed_annulus(center.clone(), *inner, *outer).and_then(Domain::level_set)
            }
            DomainSpec::LevelSetBox { lo, hi, corner_radius } => {
                LevelSet::smoothed_box(lo.clone(), hi.clone(), *corner_radius).and_then(Domain::level_set)
            }
        };
        let d = d.map_err(|e| Failure::usage(format!("domain: {e}")))?;
        if d.dim() != self.file.x0.len() {
            return Err(Failure::usage(format!("x0 has dimension {}, domain has {}", self.file.x0.len(), d.dim())));
        }
        Ok(d)
    }

    pub fn potential(&self) -> Result<SemiconvexPotential<f64>, Failure> {
        let domain = self.domain()?;
        let name = self.file.potential.smooth.as_deref().unwrap_or("zero");
        let smooth = SmoothPart::catalog(name, domain.dim()).map_err(|e| Failure::usage(format!("potential: {e}")))?;
        SemiconvexPotential::new(domain, smooth).map_err(|e| Failure::usage(format!("potential: {e}")))
    }

    pub fn drift(&self, domain: &Domain<f64>) -> Result<DriftField<f64>, Failure> {
        let (name, radius) = match &self.file.drift {
            Some(s) => (s.name.as_str(), s.radius.or(domain.bounding_radius())),
            None => ("zero", None),
        };
        DriftField::catalog(name, domain.dim(), radius).map_err(|e| Failure::usage(format!("drift: {e}")))
    }

    pub fn diffusion(&self, dim: usize) -> Result<DiffusionField<f64>, Failure> {
        match &self.file.diffusion {
            None => Err(Failure::usage("this command needs a [diffusion] section")),
            Some(DiffusionSpec::Zero) => Ok(DiffusionField::zero(dim)),
            Some(DiffusionSpec::ScaledIdentity { scale }) => Ok(DiffusionField::scaled_identity(dim, *scale)),
            Some(DiffusionSpec::Damped { scale }) => Ok(DiffusionField::damped(dim, *scale)),
        }
    }

    /// Solver settings; `tol` overrides the residual tolerance.
    pub fn config(&self, tol: Option<f64>) -> Result<SolverConfig<f64>, Failure> {
        let s = &self.file.solver;
        let d = SolverConfig::<f64>::default();
        let cfg = SolverConfig {
            base_step: s.base_step.unwrap_or(d.base_step),
            safety_fraction: s.safety_fraction.unwrap_or(d.safety_fraction),
            max_bisections: s.max_bisections.unwrap_or(d.max_bisections),
            delay_n: s.delay_n.or(d.delay_n),
            boundary_tol: s.boundary_tol.or(d.boundary_tol),
            residual_tol: tol.or(s.residual_tol).unwrap_or(d.residual_tol),
        };
        cfg.validate().map_err(|e| Failure::usage(format!("solver: {e}")))?;
        Ok(cfg)
    }

    /// Driver on a uniform grid of `steps` steps; CSV drivers keep their own
    /// grid. Brownian drivers are drawn afresh for each step count, see
    /// [`Problem::nested_driver`] for refinements of one path.
    pub fn driver(&self, steps: usize) -> Result<Path<f64>, Failure> {
        let dim = self.file.x0.len();
        let t_end = self.file.t_end;
        let grid = || uniform_grid(t_end, steps).map_err(|e| Failure::usage(format!("driver: {e}")));
        let check_len = |v: &[f64], what: &str| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(Failure::usage(format!("driver {what} has dimension {}, expected {dim}", v.len())))
            }
        };
        let p = match &self.file.driver {
            DriverSpec::Constant { velocity } => {
                check_len(velocity, "velocity")?;
                Path::from_fn(grid()?, dim, |t| velocity.iter().map(|v| v * t).collect())
            }
            DriverSpec::Sinusoid { amplitude, frequency } => {
                check_len(amplitude, "amplitude")?;
                let w = std::f64::consts::TAU * frequency;
                Path::from_fn(grid()?, dim, |t| amplitude.iter().map(|a| a * (w * t).sin()).collect())
            }
            DriverSpec::Brownian { seed, scale } => {
                let bm = brownian::<f64>(*seed, t_end, steps, dim).map_err(|e| Failure::usage(format!("driver: {e}")))?;
                scaled(bm.path(), scale.unwrap_or(1.0))
            }
            DriverSpec::Csv { path } => {
                let full = self.dir.join(path);
                let file = std::fs::File::open(&full).map_err(|e| Failure::usage(format!("{}: {e}", full.display())))?;
                let p = read_path_csv::<f64, _>(file).map_err(|e| Failure::usage(format!("{}: {e}", full.display())))?;
                if p.dim() != dim {
                    return Err(Failure::usage(format!("{}: driver has dimension {}, expected {dim}", full.display(), p.dim())));
                }
                return Ok(p);
            }
        };
        p.map_err(|e| Failure::usage(format!("driver: {e}")))
    }

    /// Driver at `steps` steps as the subsample of one path at `finest`
    /// steps, so that refinements see the same Brownian path.
    pub fn nested_driver(&self, steps: usize, finest: usize) -> Result<Path<f64>, Failure> {
        match &self.file.driver {
            DriverSpec::Brownian { seed, scale } => {
                if !finest.is_multiple_of(steps) {
                    return Err(Failure::usage(format!("step count {steps} does not divide {finest}")));
                }
                let dim = self.file.x0.len();
                let fine = brownian::<f64>(*seed, self.file.t_end, finest, dim)
                    .and_then(|b| b.path())
                    .map_err(|e| Failure::usage(format!("driver: {e}")))?;
                let stride = finest / steps;
                let times: Vec<f64> = (0..=steps).map(|i| fine.times()[i * stride]).collect();
                let values: Vec<f64> = (0..=steps).flat_map(|i| fine.value(i * stride).to_vec()).collect();
                scaled(Path::new(times, values, dim), scale.unwrap_or(1.0)).map_err(|e| Failure::usage(format!("driver: {e}")))
            }
            DriverSpec::Csv { .. } => {
                let p = self.driver(steps)?;
                let grid = uniform_grid(p.t_end(), steps).map_err(|e| Failure::usage(format!("driver: {e}")))?;
                p.resample(grid).map_err(|e| Failure::usage(format!("driver: {e}")))
            }
            _ => self.driver(steps),
        }
    }

    /// Brownian increments for `simulate` and `mc`.
    pub fn brownian(&self, seed: u64, steps: usize) -> Result<BrownianDriver<f64>, Failure> {
        brownian(seed, self.file.t_end, steps, self.file.x0.len()).map_err(|e| Failure::usage(format!("brownian: {e}")))
    }

    /// The seed named by a Brownian driver, if any.
    pub fn driver_seed(&self) -> Option<u64> {
        match &self.file.driver {
            DriverSpec::Brownian { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

fn scaled(p: skorohod_core::Result<Path<f64>>, c: f64) -> skorohod_core::Result<Path<f64>> {
    let p = p?;
    if c == 1.0 {
        return Ok(p);
    }
    let values = p.values().iter().map(|v| v * c).collect();
    Path::new(p.times().to_vec(), values, p.dim())
}
