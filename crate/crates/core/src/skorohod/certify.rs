//! Falsification checks for a discrete solution.
//!
//! Every check is a necessary condition; passing them does not prove that
//! the pair solves the continuous problem. Integrals in `dr` use the
//! trapezoid rule, integrals in `dk` use right-endpoint node sums (the normal
//! part of step `i` lives in the normal cone at `x_{i+1}`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::paths::Path;
use crate::potential::SemiconvexPotential;
use crate::scalar::vector::{self, dist, dist_sq, dot, norm};
use crate::scalar::Real;

use super::{SkorohodSolution, SolverConfig};

/// Tolerance of the normal-alignment check, per unit of length scale;
/// floored at a multiple of the scalar's epsilon for single precision.
fn alignment_tol<T: Real>() -> f64 {
    1e-9f64.max(1e4 * T::epsilon().as_f64())
}

/// Tolerance of the algebraic checks, per unit of magnitude.
fn identity_tol<T: Real>() -> f64 {
    1e-10f64.max(1e3 * T::epsilon().as_f64())
}

/// Probe counts and switches for [`certify_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub seed: u64,
    /// Constant probes at sampled points of `E` (half interior, half boundary).
    pub constant_probes: usize,
    /// Constant probes at nodes where the solution touches the boundary.
    pub contact_probes: usize,
    /// Projected translates `pi_E(x + v)`.
    pub translate_probes: usize,
    /// Global samples `y` for the normal-alignment check.
    pub alignment_samples: usize,
    /// Extra samples near each base point.
    pub local_alignment_samples: usize,
    pub variational: bool,
    pub windowed: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            seed: 0x5eed,
            constant_probes: 32,
            contact_probes: 16,
            translate_probes: 8,
            alignment_samples: 100,
            local_alignment_samples: 8,
            variational: true,
            windowed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witness_time: Option<f64>,
    /// `false` when the check does not apply; such checks pass.
    pub applicable: bool,
    pub detail: Option<String>,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tolerance: f64, witness_time: Option<f64>) -> Self {
        CheckResult {
            name: name.to_owned(),
            residual,
            tolerance,
            pass: residual <= tolerance,
            witness_time,
            applicable: true,
            detail: None,
        }
    }

    fn skipped(name: &str, why: &str) -> Self {
        CheckResult {
            name: name.to_owned(),
            residual: 0.0,
            tolerance: 0.0,
            pass: true,
            witness_time: None,
            applicable: false,
            detail: Some(why.to_owned()),
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

impl Certificate {
    fn from_checks(checks: Vec<CheckResult>) -> Self {
        Certificate { pass: checks.iter().all(|c| c.pass), checks }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub const DOMAIN_MEMBERSHIP: &str = "domain_membership";
pub const K_START_AND_VARIATION: &str = "k_start_and_variation";
pub const TELESCOPING_IDENTITY: &str = "telescoping_identity";
pub const VARIATIONAL_INEQUALITY: &str = "variational_inequality";
pub const BOUNDARY_SUPPORT: &str = "boundary_support";
pub const NORMAL_ALIGNMENT: &str = "normal_alignment";
pub const WINDOWED_VARIATION: &str = "windowed_variation";

/// [`certify_with`] with default options.
pub fn certify<T: Real>(
    phi: &SemiconvexPotential<T>,
    sol: &SkorohodSolution<T>,
    m: &Path<T>,
    probes: &[Path<T>],
    config: &SolverConfig<T>,
) -> Result<Certificate> {
    certify_with(phi, sol, m, probes, config, &CertifyOptions::default())
}

/// Precomputed per-node and per-step data.
struct Data<'a, T: Real> {
    phi: &'a SemiconvexPotential<T>,
    d: usize,
    n: usize,
    times: &'a [T],
    xs: &'a [T],
    ks: &'a [T],
    cumvar: &'a [T],
    dk: Vec<T>,
    dk_norm: Vec<T>,
    normal: Vec<T>,
    g_x: Vec<T>,
    bd: Vec<T>,
}

impl<T: Real> Data<'_, T> {
    fn x(&self, i: usize) -> &[T] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    fn k(&self, i: usize) -> &[T] {
        &self.ks[i * self.d..(i + 1) * self.d]
    }

    fn dk(&self, i: usize) -> &[T] {
        &self.dk[i * self.d..(i + 1) * self.d]
    }

    fn normal(&self, i: usize) -> &[T] {
        &self.normal[i * self.d..(i + 1) * self.d]
    }

    fn t(&self, i: usize) -> f64 {
        self.times[i].as_f64()
    }
}

/// Runs the seven checks. `m` is the driver without the drift; the drift
/// is taken from `sol.parts` when present, so solutions read back from CSV
/// must be given `m + int f` instead.
pub fn certify_with<T: Real>(
    phi: &SemiconvexPotential<T>,
    sol: &SkorohodSolution<T>,
    m: &Path<T>,
    probes: &[Path<T>],
    config: &SolverConfig<T>,
    opts: &CertifyOptions,
) -> Result<Certificate> {
    config.validate()?;
    let d = phi.dim();
    if sol.dim() != d || m.dim() != d {
        return Err(Error::GridMismatch(format!(
            "dimensions differ: domain {d}, solution {}, driver {}",
            sol.dim(),
            m.dim()
        )));
    }
    let times = sol.times();
    if m.t_end() != sol.x.t_end() || !m.grid_contained_in(&sol.x) {
        return Err(Error::GridMismatch("driver nodes are not a subset of the solution nodes".into()));
    }
    if sol.k.path().times() != times {
        return Err(Error::GridMismatch("x and k live on different grids".into()));
    }
    if let Some(p) = &sol.parts {
        if p.steps() + 1 != times.len() || p.dim != d {
            return Err(Error::GridMismatch("step parts do not match the solution grid".into()));
        }
    }
    let data = precompute(phi, sol)?;
    let drive = m.resample(times.to_vec())?;
    let drift = sol.drift_path();
    let tol_b = config.boundary_tol_for(phi);

    let mut checks = vec![
        check_membership(&data, tol_b)?,
        check_start(&data),
        check_identity(&data, sol, &drive, drift.as_ref()),
    ];
    if opts.variational {
        checks.push(check_variational(&data, probes, config, opts, tol_b)?);
    } else {
        checks.push(CheckResult::skipped(VARIATIONAL_INEQUALITY, "disabled"));
    }
    checks.push(check_support(&data, config, tol_b));
    checks.push(check_alignment(&data, opts)?);
    if !opts.windowed {
        checks.push(CheckResult::skipped(WINDOWED_VARIATION, "disabled"));
    } else {
        checks.push(check_windowed(&data));
    }
    Ok(Certificate::from_checks(checks))
}

fn precompute<'a, T: Real>(phi: &'a SemiconvexPotential<T>, sol: &'a SkorohodSolution<T>) -> Result<Data<'a, T>> {
    let d = phi.dim();
    let times = sol.times();
    let n = times.len();
    let xs = sol.x.values();
    let ks = sol.k.path().values();
    let mut dk = Vec::with_capacity((n - 1) * d);
    let mut dk_norm = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let a = &ks[i * d..(i + 1) * d];
        let b = &ks[(i + 1) * d..(i + 2) * d];
        let s: Vec<T> = b.iter().zip(a).map(|(&p, &q)| p - q).collect();
        dk_norm.push(norm(&s));
        dk.extend(s);
    }
    let normal = match &sol.parts {
        Some(p) => p.normal.clone(),
        None => {
            let smooth = phi.smooth_part();
            let mut out = dk.clone();
            if !smooth.is_zero() {
                let mut g = vec![T::zero(); d];
                for i in 0..n - 1 {
                    smooth.gradient_into(&xs[i * d..(i + 1) * d], &mut g);
                    let dt = times[i + 1] - times[i];
                    for c in 0..d {
                        out[i * d + c] -= g[c] * dt;
                    }
                }
            }
            out
        }
    };
    let g_x = (0..n).map(|i| phi.smooth_part().value(&xs[i * d..(i + 1) * d])).collect();
    let bd = (0..n)
        .map(|i| phi.domain().boundary_distance(&xs[i * d..(i + 1) * d]))
        .collect::<Result<_>>()?;
    Ok(Data { phi, d, n, times, xs, ks, cumvar: sol.k.cumvar(), dk, dk_norm, normal, g_x, bd })
}

fn check_membership<T: Real>(data: &Data<T>, tol_b: T) -> Result<CheckResult> {
    let mut worst = (T::zero(), 0);
    for i in 0..data.n {
        let dd = data.phi.domain().distance(data.x(i))?;
        if !(dd <= worst.0) {
            worst = (dd, i);
        }
    }
    Ok(CheckResult::new(DOMAIN_MEMBERSHIP, worst.0.as_f64(), tol_b.as_f64(), Some(data.t(worst.1))))
}

fn check_start<T: Real>(data: &Data<T>) -> CheckResult {
    let mut residual = norm(data.k(0));
    let mut at = 0;
    for i in 0..data.n - 1 {
        let excess = data.dk_norm[i] - (data.cumvar[i + 1] - data.cumvar[i]);
        if !(excess <= residual) {
            residual = excess;
            at = i + 1;
        }
    }
    let total = data.cumvar[data.n - 1];
    if !total.is_finite() {
        residual = T::infinity();
    }
    let tol = identity_tol::<T>() * (1.0 + total.as_f64());
    CheckResult::new(K_START_AND_VARIATION, residual.as_f64(), tol, Some(data.t(at)))
        .with_detail(format!("total variation {}", total.as_f64()))
}

fn check_identity<T: Real>(
    data: &Data<T>,
    sol: &SkorohodSolution<T>,
    drive: &Path<T>,
    drift: Option<&Path<T>>,
) -> CheckResult {
    let d = data.d;
    let x0 = data.x(0);
    let mut residual = T::zero();
    let mut scale = T::zero();
    let mut at = 0;
    let mut rhs = vec![T::zero(); d];
    for i in 0..data.n {
        for c in 0..d {
            rhs[c] = x0[c] + drive.value(i)[c] + drift.map_or(T::zero(), |p| p.value(i)[c]);
        }
        scale = scale.max(norm(&rhs));
        let lhs: Vec<T> = data.x(i).iter().zip(data.k(i)).map(|(&a, &b)| a + b).collect();
        let r = dist(&lhs, &rhs);
        if !(r <= residual) {
            residual = r;
            at = i;
        }
    }
    if let Some(p) = &sol.parts {
        for i in 0..data.n - 1 {
            let parts: Vec<T> = p.normal(i).iter().zip(p.smooth(i)).map(|(&a, &b)| a + b).collect();
            let r = dist(&parts, data.dk(i));
            if !(r <= residual) {
                residual = r;
                at = i + 1;
            }
        }
    }
    let total = data.cumvar[data.n - 1];
    let tol = identity_tol::<T>() * (1.0 + scale.as_f64() + total.as_f64());
    CheckResult::new(TELESCOPING_IDENTITY, residual.as_f64(), tol, Some(data.t(at)))
}

/// Kadane maximum over contiguous windows; returns `(sum, last step)`.
fn max_window<T: Real>(e: impl Iterator<Item = T>) -> (T, usize) {
    let mut best = (T::neg_infinity(), 0);
    let mut run = T::neg_infinity();
    for (i, v) in e.enumerate() {
        run = if run > T::zero() { run + v } else { v };
        if run > best.0 {
            best = (run, i);
        }
    }
    best
}

enum Probe<T> {
    Constant(Vec<T>),
    Moving(Vec<T>),
}

fn probe_family<T: Real>(data: &Data<T>, user: &[Path<T>], opts: &CertifyOptions, tol_b: T) -> Result<Vec<Probe<T>>> {
    let domain = data.phi.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::new();
    for j in 0..opts.constant_probes {
        let p = if j % 2 == 0 { domain.sample_point(&mut rng) } else { domain.sample_boundary(&mut rng) };
        out.push(Probe::Constant(p));
    }
    out.extend(domain.corner_points().into_iter().map(Probe::Constant));
    let contact: Vec<usize> = (0..data.n).filter(|&i| data.bd[i] <= tol_b).collect();
    if !contact.is_empty() {
        let take = opts.contact_probes.min(contact.len());
        for j in 0..take {
            out.push(Probe::Constant(data.x(contact[j * contact.len() / take]).to_vec()));
        }
    }
    let reach = (domain.length_scale() * T::of(0.1)).min(domain.projection_limit() * T::of(0.5));
    for j in 0..opts.translate_probes {
        let len = reach * if j % 2 == 0 { T::of(0.25) } else { T::one() };
        let v = vector::scale(&crate::geometry::random_unit(data.d, &mut rng), len);
        let mut ys = Vec::with_capacity(data.xs.len());
        let mut ok = true;
        for i in 0..data.n {
            match domain.project(&vector::add(data.x(i), &v)) {
                Ok(y) => ys.extend(y),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            out.push(Probe::Moving(ys));
        }
    }
    for p in user {
        if p.dim() != data.d || p.t_end() != data.times[data.n - 1] {
            return Err(Error::GridMismatch("probe path does not cover the solution interval".into()));
        }
        out.push(Probe::Moving(p.resample(data.times.to_vec())?.values().to_vec()));
    }
    Ok(out)
}

fn check_variational<T: Real>(
    data: &Data<T>,
    user: &[Path<T>],
    config: &SolverConfig<T>,
    opts: &CertifyOptions,
    tol_b: T,
) -> Result<CheckResult> {
    let probes = probe_family(data, user, opts, tol_b)?;
    let phi = data.phi;
    let (rho, gamma) = (phi.rho(), phi.gamma());
    let half = T::of(0.5);
    let d = data.d;
    let worst = probes
        .par_iter()
        .map(|probe| {
            let y = |i: usize| -> &[T] {
                match probe {
                    Probe::Constant(c) => c,
                    Probe::Moving(ys) => &ys[i * d..(i + 1) * d],
                }
            };
            let phi_y: Vec<T> = (0..data.n)
                .map(|i| {
                    let yi = y(i);
                    match phi.domain().distance(yi) {
                        Ok(dd) if dd <= tol_b => phi.smooth_part().value(yi),
                        _ => T::infinity(),
                    }
                })
                .collect();
            let sq: Vec<T> = (0..data.n).map(|i| dist_sq(y(i), data.x(i))).collect();
            let e = (0..data.n - 1).map(|i| {
                if !phi_y[i].is_finite() || !phi_y[i + 1].is_finite() {
                    return T::neg_infinity();
                }
                let dt = data.times[i + 1] - data.times[i];
                let diff = vector::sub(y(i + 1), data.x(i + 1));
                dot(&diff, data.dk(i)) + dt * half * (data.g_x[i] + data.g_x[i + 1])
                    - dt * half * (phi_y[i] + phi_y[i + 1])
                    - rho * dt * half * (sq[i] + sq[i + 1])
                    - gamma * data.dk_norm[i] * sq[i + 1]
            });
            max_window(e)
        })
        .reduce(|| (T::neg_infinity(), 0), |a, b| if b.0 > a.0 { b } else { a });
    let scale = (0..data.n).map(|i| norm(data.x(i))).fold(T::zero(), T::max);
    let tol = config.residual_tol * (T::one() + scale);
    let residual = worst.0.max(T::zero());
    Ok(CheckResult::new(VARIATIONAL_INEQUALITY, residual.as_f64(), tol.as_f64(), Some(data.t(worst.1 + 1)))
        .with_detail(format!("{} probes", probes.len())))
}

fn check_support<T: Real>(data: &Data<T>, config: &SolverConfig<T>, tol_b: T) -> CheckResult {
    let mut interior = T::zero();
    let mut worst = (T::zero(), 0);
    for i in 0..data.n - 1 {
        if data.bd[i + 1] > tol_b {
            let v = norm(data.normal(i));
            interior += v;
            if v > worst.0 {
                worst = (v, i + 1);
            }
        }
    }
    let total = data.cumvar[data.n - 1];
    let tol = config.residual_tol * total;
    CheckResult::new(BOUNDARY_SUPPORT, interior.as_f64(), tol.as_f64(), Some(data.t(worst.1)))
}

fn check_alignment<T: Real>(data: &Data<T>, opts: &CertifyOptions) -> Result<CheckResult> {
    let domain = data.phi.domain();
    let gamma = data.phi.gamma();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xa11);
    let mut global: Vec<Vec<T>> = (0..opts.alignment_samples)
        .map(|j| if j % 2 == 0 { domain.sample_point(&mut rng) } else { domain.sample_boundary(&mut rng) })
        .collect();
    global.extend(domain.corner_points());
    let reach = domain.length_scale().min(domain.projection_limit() * T::of(0.5));
    let mut worst = (T::neg_infinity(), 0);
    let mut active = 0usize;
    for i in 0..data.n - 1 {
        let nu = data.normal(i);
        let nn = norm(nu);
        if nn == T::zero() {
            continue;
        }
        active += 1;
        let base = data.x(i + 1);
        let mut test = |y: &[T]| {
            let diff = vector::sub(y, base);
            let v = dot(nu, &diff) - gamma * nn * dot(&diff, &diff);
            if v > worst.0 {
                worst = (v, i + 1);
            }
        };
        for y in &global {
            test(y);
        }
        for j in 0..opts.local_alignment_samples {
            let len = reach * T::of(0.5f64.powi(j as i32 % 4 + 1));
            let u: Vec<T> = crate::geometry::random_unit(data.d, &mut rng);
            if let Ok(y) = domain.project(&vector::axpy(base, len, &u)) {
                test(&y);
            }
        }
    }
    if active == 0 {
        return Ok(CheckResult::new(NORMAL_ALIGNMENT, 0.0, alignment_tol::<T>(), None).with_detail("no normal increments".into()));
    }
    let tol = alignment_tol::<T>() * domain.length_scale().as_f64().max(1.0);
    Ok(CheckResult::new(NORMAL_ALIGNMENT, worst.0.max(T::zero()).as_f64(), tol, Some(data.t(worst.1)))
        .with_detail(format!("{active} normal increments")))
}

fn check_windowed<T: Real>(data: &Data<T>) -> CheckResult {
    let Some(s) = data.phi.domain().suibc() else {
        return CheckResult::skipped(WINDOWED_VARIATION, "no interior-ball construction registered");
    };
    let (delta, sigma) = (s.delta, s.sigma);
    let c = (T::of(3.0) * data.phi.lipschitz_l() + T::of(4.0) * data.phi.rho()) / sigma;
    let mut worst = (T::neg_infinity(), 0);
    let mut windows = 0usize;
    for a in 0..data.n - 1 {
        let xa = data.x(a);
        for b in a + 1..data.n {
            if dist(data.x(b), xa) > delta {
                break;
            }
            windows += 1;
            let dk = dist(data.k(b), data.k(a));
            let bound = dk / sigma + c * (data.times[b] - data.times[a]);
            let excess = (data.cumvar[b] - data.cumvar[a]) - bound;
            if excess > worst.0 {
                worst = (excess, b);
            }
        }
    }
    let total = data.cumvar[data.n - 1];
    let tol = identity_tol::<T>() * (1.0 + total.as_f64());
    CheckResult::new(WINDOWED_VARIATION, worst.0.as_f64().max(f64::MIN), tol, Some(data.t(worst.1))).with_detail(
        format!("{windows} windows, delta {}, sigma {}, min slack {}", delta, sigma, -worst.0.as_f64()),
    )
}
