//! Pathwise simulation of reflected SDEs
//! `X + K = x0 + int f(s, X) ds + int G(s, X) dB`.
//!
//! A step is the deterministic catching-up step with driver increment
//! `G(t_i, X_i) dB_i`. Halved steps draw the Brownian midpoint from the
//! bridge `N(dB / 2, dt / 4)`, so refined drivers stay Brownian.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Domain, ViolationReport};
use crate::paths::{uniform_grid, Path};
use crate::potential::SemiconvexPotential;
use crate::scalar::vector::{self, dist, norm};
use crate::scalar::Real;
use crate::skorohod::{
    certify_with, CertifyOptions, DriftField, Forcing, SkorohodSolution, SolverConfig, Stepper, TimeBound,
};

/// `(t, x, out)`; writes the row-major `d x k` matrix `G(t, x)` into `out`.
pub type MatrixField<T> = Arc<dyn Fn(T, &[T], &mut [T]) + Send + Sync>;

/// Diffusion coefficient with its Lipschitz constant `ell` and the bound
/// `g_sharp(t) >= sup_E |G(t, .)|` (Frobenius norm).
#[derive(Clone)]
pub struct DiffusionField<T: Real> {
    name: String,
    dim: usize,
    noise_dim: usize,
    g: MatrixField<T>,
    lipschitz_ell: T,
    g_sharp: TimeBound<T>,
}

impl<T: Real> fmt::Debug for DiffusionField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .field("lipschitz_ell", &self.lipschitz_ell)
            .finish_non_exhaustive()
    }
}

impl<T: Real> DiffusionField<T> {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        noise_dim: usize,
        g: MatrixField<T>,
        lipschitz_ell: T,
        g_sharp: TimeBound<T>,
    ) -> Self {
        DiffusionField { name: name.into(), dim, noise_dim, g, lipschitz_ell, g_sharp }
    }

    /// `G = 0` with `k = d`.
    pub fn zero(dim: usize) -> Self {
        Self::new("zero", dim, dim, Arc::new(|_, _, out: &mut [T]| out.fill(T::zero())), T::zero(), Arc::new(|_| T::zero()))
    }

    /// `G = c I` with `k = d`.
    pub fn scaled_identity(dim: usize, c: T) -> Self {
        let g = move |_: T, _: &[T], out: &mut [T]| {
            out.fill(T::zero());
            for i in 0..dim {
                out[i * dim + i] = c;
            }
        };
        let sharp = c.abs() * T::of_usize(dim).sqrt();
        Self::new(format!("identity*{c}"), dim, dim, Arc::new(g), T::zero(), Arc::new(move |_| sharp))
    }

    /// `G(x) = c I / (1 + |x|^2)`; `ell = c * 3 sqrt(3 d) / 8`.
    pub fn damped(dim: usize, c: T) -> Self {
        let g = move |_: T, x: &[T], out: &mut [T]| {
            let s = c / (T::one() + vector::norm_sq(x));
            out.fill(T::zero());
            for i in 0..dim {
                out[i * dim + i] = s;
            }
        };
        let root_d = T::of_usize(dim).sqrt();
        let ell = c.abs() * T::of(3.0 * 3f64.sqrt() / 8.0) * root_d;
        let sharp = c.abs() * root_d;
        Self::new(format!("damped*{c}"), dim, dim, Arc::new(g), ell, Arc::new(move |_| sharp))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn lipschitz_ell(&self) -> T {
        self.lipschitz_ell
    }

    pub fn g_sharp_bound(&self, t: T) -> T {
        (self.g_sharp)(t)
    }

    pub fn eval_into(&self, t: T, x: &[T], out: &mut [T]) {
        (self.g)(t, x, out)
    }

    pub fn eval(&self, t: T, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim * self.noise_dim];
        self.eval_into(t, x, &mut out);
        out
    }
}

/// Sampled Lipschitz violations `|G(t,x) - G(t,y)| - ell |x - y|` and bound
/// violations `|G(t,x)| - g_sharp(t)`.
pub fn check_diffusion<T: Real>(
    g: &DiffusionField<T>,
    domain: &Domain<T>,
    t_end: T,
    n_samples: usize,
    rng_seed: u64,
) -> (ViolationReport, ViolationReport) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut lip = ViolationReport { samples: 0, max_violation: f64::NEG_INFINITY, worst: None, skipped: 0 };
    let mut sharp = lip.clone();
    for _ in 0..n_samples {
        let t = t_end * T::of(rng.random::<f64>());
        let x = domain.sample_point(&mut rng);
        let y = domain.sample_point(&mut rng);
        let (gx, gy) = (g.eval(t, &x), g.eval(t, &y));
        lip.record(dist(&gx, &gy) - g.lipschitz_ell() * dist(&x, &y), &x);
        sharp.record(norm(&gx) - g.g_sharp_bound(t), &x);
    }
    (lip, sharp)
}

/// Seeded Brownian increments on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianDriver<T: Real> {
    pub seed: u64,
    pub dim: usize,
    pub times: Vec<T>,
    /// Flat `steps x dim`.
    pub increments: Vec<T>,
}

/// Increments on `[0, t_end]` with `n_steps` equal steps; `t_end = 0`
/// gives a single node and no increments.
pub fn brownian<T: Real>(seed: u64, t_end: T, n_steps: usize, dim: usize) -> Result<BrownianDriver<T>> {
    if n_steps == 0 || dim == 0 {
        return Err(Error::InvalidArgument("n_steps and dim must be at least 1".into()));
    }
    if !(t_end >= T::zero() && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be finite and nonnegative, got {t_end}")));
    }
    if t_end == T::zero() {
        return Ok(BrownianDriver { seed, dim, times: vec![T::zero()], increments: Vec::new() });
    }
    let times = uniform_grid(t_end, n_steps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut increments = Vec::with_capacity(n_steps * dim);
    for w in times.windows(2) {
        let sd = (w[1] - w[0]).sqrt();
        for _ in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            increments.push(sd * T::of(z));
        }
    }
    Ok(BrownianDriver { seed, dim, times, increments })
}

impl<T: Real> BrownianDriver<T> {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn increment(&self, i: usize) -> &[T] {
        &self.increments[i * self.dim..(i + 1) * self.dim]
    }

    /// `B(t_i)` as a path, `B(0) = 0`.
    pub fn path(&self) -> Result<Path<T>> {
        let mut values = vec![T::zero(); self.times.len() * self.dim];
        for i in 0..self.steps() {
            for c in 0..self.dim {
                values[(i + 1) * self.dim + c] = values[i * self.dim + c] + self.increments[i * self.dim + c];
            }
        }
        Path::new(self.times.clone(), values, self.dim)
    }

    fn bridge_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        rng
    }
}

/// Splits `db` over a step of length `dt` by a Brownian-bridge midpoint;
/// the halves sum to `db` bit for bit.
pub fn bridge_split<T: Real, R: rand::Rng + ?Sized>(dt: T, db: &[T], rng: &mut R, left: &mut [T], right: &mut [T]) {
    let sd = (dt / T::of(4.0)).sqrt();
    let half = T::of(0.5);
    for ((l, r), &b) in left.iter_mut().zip(right.iter_mut()).zip(db) {
        let z: f64 = StandardNormal.sample(rng);
        let mut a = b * half + sd * T::of(z);
        let mut c = b - a;
        if a + c != b {
            a = b - c;
            c = b - a;
        }
        if a + c != b {
            a = b * half;
            c = b - a;
        }
        *l = a;
        *r = c;
    }
}

struct Noise<'a, T: Real> {
    g: &'a DiffusionField<T>,
    rng: ChaCha8Rng,
    matrix: Vec<T>,
}

impl<T: Real> Forcing<T> for Noise<'_, T> {
    fn driver_dim(&self) -> usize {
        self.g.noise_dim()
    }

    fn apply(&mut self, t: T, x: &[T], db: &[T], w: &mut [T]) {
        let k = self.g.noise_dim();
        self.g.eval_into(t, x, &mut self.matrix);
        for (i, wi) in w.iter_mut().enumerate() {
            let row = &self.matrix[i * k..(i + 1) * k];
            *wi = row.iter().zip(db).fold(T::zero(), |s, (&a, &b)| s + a * b);
        }
    }

    fn split(&mut self, t0: T, t1: T, db: &[T], left: &mut [T], right: &mut [T]) {
        bridge_split(t1 - t0, db, &mut self.rng, left, right);
    }
}

/// One reflected path driven by `bm`. Each Brownian step must not exceed
/// `config.base_step`.
pub fn simulate<T: Real>(
    phi: &SemiconvexPotential<T>,
    x0: &[T],
    f: &DriftField<T>,
    g: &DiffusionField<T>,
    bm: &BrownianDriver<T>,
    config: &SolverConfig<T>,
) -> Result<SkorohodSolution<T>> {
    let d = phi.dim();
    if g.dim() != d || g.noise_dim() != bm.dim {
        return Err(Error::InvalidArgument(format!(
            "diffusion is {}x{}, domain has d = {d}, driver has k = {}",
            g.dim(),
            g.noise_dim(),
            bm.dim
        )));
    }
    let slack = config.max_step();
    if bm.times.windows(2).any(|w| w[1] - w[0] > slack) {
        return Err(Error::InvalidArgument("Brownian grid is coarser than base_step".into()));
    }
    let noise = Noise { g, rng: bm.bridge_rng(), matrix: vec![T::zero(); d * bm.dim] };
    let mut st = Stepper::new(phi, x0, Some(f), config, noise)?;
    for i in 0..bm.steps() {
        st.step(bm.times[i], bm.times[i + 1], bm.increment(i), 0)?;
    }
    st.finish(format!("brownian:seed={}", bm.seed))
}

pub type PathStatistic<T> = Arc<dyn Fn(&SkorohodSolution<T>) -> f64 + Send + Sync>;

/// Scalar statistic of a simulated path.
#[derive(Clone)]
pub enum Functional<T: Real> {
    /// `X_T` coordinate.
    Terminal(usize),
    /// `|X_T|`
    TerminalNorm,
    /// `sup_t |X_t|`
    SupNorm,
    /// `V(K)_T`
    Variation,
    Custom(String, PathStatistic<T>),
}

impl<T: Real> fmt::Debug for Functional<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl<T: Real> Functional<T> {
    pub fn name(&self) -> String {
        match self {
            Functional::Terminal(i) => format!("X_T[{}]", i + 1),
            Functional::TerminalNorm => "|X_T|".into(),
            Functional::SupNorm => "sup|X|".into(),
            Functional::Variation => "V(K)_T".into(),
            Functional::Custom(name, _) => name.clone(),
        }
    }

    pub fn eval(&self, sol: &SkorohodSolution<T>) -> f64 {
        let last = sol.x.len() - 1;
        match self {
            Functional::Terminal(i) => sol.x.value(last)[*i].as_f64(),
            Functional::TerminalNorm => norm(sol.x.value(last)).as_f64(),
            Functional::SupNorm => sol.x.sup_norm().as_f64(),
            Functional::Variation => sol.k.total().as_f64(),
            Functional::Custom(_, h) => h(sol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalStats {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
    /// `sqrt(variance / n)`
    pub std_error: f64,
    pub n: usize,
}

impl FunctionalStats {
    pub fn from_samples(name: String, xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 { xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        FunctionalStats { name, mean, variance, std_error: (variance / n as f64).sqrt(), n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathFailure {
    pub path: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub n_paths: usize,
    pub base_seed: u64,
    pub t_end: f64,
    pub n_steps: usize,
    pub functionals: Vec<FunctionalStats>,
    pub failures: Vec<PathFailure>,
    /// Paths certified with membership, start, identity, support and
    /// alignment checks; zero when certification was not requested.
    pub certified: usize,
    pub certificate_failures: usize,
    pub total_bisections: usize,
}

/// Monte Carlo over `n_paths` paths; path `j` uses seed `base_seed + j`.
/// Failed paths are listed and excluded from the statistics.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo<T: Real>(
    phi: &SemiconvexPotential<T>,
    x0: &[T],
    f: &DriftField<T>,
    g: &DiffusionField<T>,
    t_end: T,
    n_steps: usize,
    n_paths: usize,
    base_seed: u64,
    functionals: &[Functional<T>],
    config: &SolverConfig<T>,
    certify_paths: bool,
) -> Result<MonteCarloReport> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    let opts = CertifyOptions { variational: false, windowed: false, alignment_samples: 20, local_alignment_samples: 2, ..CertifyOptions::default() };
    type Outcome = std::result::Result<(Vec<f64>, Option<bool>, usize), String>;
    let outcomes: Vec<Outcome> = (0..n_paths)
        .into_par_iter()
        .map(|j| {
            let seed = base_seed.wrapping_add(j as u64);
            let run = || -> Result<(Vec<f64>, Option<bool>, usize)> {
                let bm = brownian(seed, t_end, n_steps, g.noise_dim())?;
                let sol = simulate(phi, x0, f, g, &bm, config)?;
                let values = functionals.iter().map(|h| h.eval(&sol)).collect();
                let cert = if certify_paths {
                    let m = sol.forcing_path().expect("simulated paths carry step parts");
                    Some(certify_with(phi, &sol, &m, &[], config, &opts)?.pass)
                } else {
                    None
                };
                Ok((values, cert, sol.bisections))
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let mut samples = vec![Vec::with_capacity(n_paths); functionals.len()];
    let mut report = MonteCarloReport {
        n_paths,
        base_seed,
        t_end: t_end.as_f64(),
        n_steps,
        functionals: Vec::new(),
        failures: Vec::new(),
        certified: 0,
        certificate_failures: 0,
        total_bisections: 0,
    };
    for (j, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok((values, cert, bis)) => {
                for (s, v) in samples.iter_mut().zip(values) {
                    s.push(v);
                }
                match cert {
                    Some(true) => report.certified += 1,
                    Some(false) => report.certificate_failures += 1,
                    None => {}
                }
                report.total_bisections += bis;
            }
            Err(error) => report.failures.push(PathFailure { path: j, seed: base_seed.wrapping_add(j as u64), error }),
        }
    }
    if report.failures.len() == n_paths {
        return Err(Error::InvalidArgument(format!("all {n_paths} paths failed: {}", report.failures[0].error)));
    }
    report.functionals =
        functionals.iter().zip(&samples).map(|(h, xs)| FunctionalStats::from_samples(h.name(), xs)).collect();
    Ok(report)
}

/// Gap between two paths sharing one Brownian driver, damped by
/// `exp(-V_t)` with `V_t = 2 rho t + gamma (V(K)_t + V(K^)_t) + mu+ t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DampedGapReport {
    pub initial_gap: f64,
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
    pub damped_gaps: Vec<f64>,
    pub damped_sup_gap: f64,
    /// `damped_sup_gap / initial_gap`; `None` for equal starts.
    pub ratio: Option<f64>,
}

fn node_index<T: Real>(times: &[T], t: T) -> usize {
    times.partition_point(|&s| s < t)
}

/// Runs both starts on `bm` and compares them at the Brownian nodes.
pub fn pathwise_stability<T: Real>(
    phi: &SemiconvexPotential<T>,
    f: &DriftField<T>,
    g: &DiffusionField<T>,
    xa: &[T],
    xb: &[T],
    bm: &BrownianDriver<T>,
    config: &SolverConfig<T>,
) -> Result<DampedGapReport> {
    let a = simulate(phi, xa, f, g, bm, config)?;
    let b = simulate(phi, xb, f, g, bm, config)?;
    let (rho, gamma) = (phi.rho().as_f64(), phi.gamma().as_f64());
    let mu_plus = f.mu_onesided().as_f64().max(0.0);
    let initial_gap = dist(xa, xb).as_f64();
    let mut rep = DampedGapReport {
        initial_gap,
        times: Vec::new(),
        gaps: Vec::new(),
        damped_gaps: Vec::new(),
        damped_sup_gap: 0.0,
        ratio: None,
    };
    for &t in &bm.times {
        let (i, j) = (node_index(a.times(), t), node_index(b.times(), t));
        let gap = dist(a.x.value(i), b.x.value(j)).as_f64();
        let tf = t.as_f64();
        let v = 2.0 * rho * tf + gamma * (a.k.cumvar()[i].as_f64() + b.k.cumvar()[j].as_f64()) + mu_plus * tf;
        let damped = gap * (-v).exp();
        rep.damped_sup_gap = rep.damped_sup_gap.max(damped);
        rep.times.push(tf);
        rep.gaps.push(gap);
        rep.damped_gaps.push(damped);
    }
    if initial_gap > 0.0 {
        rep.ratio = Some(rep.damped_sup_gap / initial_gap);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skorohod::{certify, solve_with_drift};

    fn halfline() -> SemiconvexPotential<f64> {
        SemiconvexPotential::indicator(Domain::half_space(vec![-1.0], 0.0).unwrap())
    }

    #[test]
    fn brownian_is_deterministic_and_calibrated() {
        let a = brownian::<f64>(11, 1.0, 1000, 2).unwrap();
        assert_eq!(a, brownian(11, 1.0, 1000, 2).unwrap());
        assert_ne!(a, brownian(12, 1.0, 1000, 2).unwrap());
        let big = brownian::<f64>(5, 1.0, 100_000, 1).unwrap();
        let dt = 1e-5;
        let n = big.increments.len() as f64;
        let mean = big.increments.iter().sum::<f64>() / n;
        let var = big.increments.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 5.0 * (dt / n).sqrt());
        // Var of the sample variance of Gaussians is 2 dt^2 / (n - 1)
        assert!((var - dt).abs() <= 5.0 * dt * (2.0 / (n - 1.0)).sqrt());
        let empty = brownian::<f64>(1, 0.0, 10, 1).unwrap();
        assert!(empty.increments.is_empty());
        assert_eq!(empty.path().unwrap().values(), &[0.0]);
    }

    #[test]
    fn bridge_halves_sum_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        use rand::Rng;
        for _ in 0..10_000 {
            let db = [rng.random_range(-1.0..1.0), rng.random_range(-1e-8..1e-8)];
            let (mut l, mut r) = ([0.0; 2], [0.0; 2]);
            bridge_split(rng.random_range(1e-6..1.0), &db, &mut rng, &mut l, &mut r);
            assert_eq!(l[0] + r[0], db[0]);
            assert_eq!(l[1] + r[1], db[1]);
        }
    }

    #[test]
    fn reflected_bm_matches_explicit_map() {
        let phi = halfline();
        let f = DriftField::catalog("zero", 1, None).unwrap();
        let g = DiffusionField::scaled_identity(1, 1.0);
        let bm = brownian(4, 1.0, 2000, 1).unwrap();
        let cfg = SolverConfig::default();
        let sol = simulate(&phi, &[0.0], &f, &g, &bm, &cfg).unwrap();
        let b = bm.path().unwrap();
        let mut worst: f64 = 0.0;
        for (i, &t) in bm.times.iter().enumerate() {
            worst = worst.max(-b.value(i)[0]);
            let j = node_index(sol.times(), t);
            assert!((sol.x.value(j)[0] - (b.value(i)[0] + worst)).abs() <= 1e-10);
        }
    }

    #[test]
    fn zero_noise_equals_deterministic_drift() {
        let phi = SemiconvexPotential::indicator(Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap());
        let f = DriftField::catalog("swirl", 2, Some(2.0)).unwrap();
        let bm = brownian(9, 1.0, 100, 2).unwrap();
        let cfg = SolverConfig::default();
        let s = simulate(&phi, &[1.1, 0.0], &f, &DiffusionField::zero(2), &bm, &cfg).unwrap();
        let m = Path::constant(vec![0.0, 0.0], 1.0, 100).unwrap();
        let d = solve_with_drift(&phi, &[1.1, 0.0], &f, &m, &cfg).unwrap();
        assert_eq!(s.times(), d.times());
        for i in 0..s.x.len() {
            assert_eq!(s.x.value(i), d.x.value(i), "node {i}");
        }
        assert_eq!(s.k, d.k);
    }

    #[test]
    fn shell_paths_certify() {
        let phi = SemiconvexPotential::indicator(Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap());
        let f = DriftField::catalog("zero", 2, None).unwrap();
        let g = DiffusionField::scaled_identity(2, 0.3);
        let cfg = SolverConfig::default();
        for seed in 0..5 {
            let bm = brownian(seed, 1.0, 100, 2).unwrap();
            let sol = simulate(&phi, &[1.5, 0.0], &f, &g, &bm, &cfg).unwrap();
            let cert = certify(&phi, &sol, &sol.forcing_path().unwrap(), &[], &cfg).unwrap();
            assert!(cert.pass, "{cert:#?}");
        }
    }

    #[test]
    fn monte_carlo_determinism_and_single_path() {
        let phi = halfline();
        let f = DriftField::catalog("zero", 1, None).unwrap();
        let g = DiffusionField::scaled_identity(1, 1.0);
        let cfg = SolverConfig::default();
        let fs = [Functional::Terminal(0), Functional::Variation];
        let a = monte_carlo(&phi, &[0.0], &f, &g, 1.0, 100, 50, 7, &fs, &cfg, true).unwrap();
        let b = monte_carlo(&phi, &[0.0], &f, &g, 1.0, 100, 50, 7, &fs, &cfg, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.certified, 50);
        let one = monte_carlo(&phi, &[0.0], &f, &g, 1.0, 100, 1, 7, &fs, &cfg, false).unwrap();
        let sol = simulate(&phi, &[0.0], &f, &g, &brownian(7, 1.0, 100, 1).unwrap(), &cfg).unwrap();
        assert_eq!(one.functionals[0].mean, sol.x.value(sol.x.len() - 1)[0]);
        assert_eq!(one.functionals[0].std_error, 0.0);
    }

    #[test]
    fn pathwise_gap_scales_with_initial_gap() {
        let phi = halfline();
        let f = DriftField::catalog("zero", 1, None).unwrap();
        let g = DiffusionField::scaled_identity(1, 1.0);
        let cfg = SolverConfig::default();
        let bm = brownian(3, 1.0, 500, 1).unwrap();
        let same = pathwise_stability(&phi, &f, &g, &[0.3], &[0.3], &bm, &cfg).unwrap();
        assert_eq!(same.damped_sup_gap, 0.0);
        let r1 = pathwise_stability(&phi, &f, &g, &[0.3], &[0.4], &bm, &cfg).unwrap().ratio.unwrap();
        let r2 = pathwise_stability(&phi, &f, &g, &[0.3], &[0.31], &bm, &cfg).unwrap().ratio.unwrap();
        assert!(r1 <= 1.0 + 1e-12 && r2 <= 1.0 + 1e-12);
        assert!(r1 / r2 <= 3.0 && r2 / r1 <= 3.0, "{r1} {r2}");
    }

    #[test]
    fn diffusion_constants() {
        let shell = Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap();
        for g in [DiffusionField::zero(2), DiffusionField::scaled_identity(2, 0.3), DiffusionField::damped(2, 0.5)] {
            let (a, b) = check_diffusion(&g, &shell, 1.0, 500, 1);
            assert!(a.passes(1e-12) && b.passes(1e-12), "{}: {a:?} {b:?}", g.name());
        }
    }
}
