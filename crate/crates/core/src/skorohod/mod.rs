//! Catching-up projection solver for `x + k = x0 + m + int f`, `dk` in the
//! subdifferential of `phi`, and the certificate that checks its output.
//!
//! One step from `x` with driver increment `w`:
//! `pre = x + w + f dt`, `z = pre - grad g(x) dt`, `x' = pi_E(z)`,
//! `dk = pre - x'`. The step is halved while `d_E(z) >= safety * r0`.

mod certify;
mod convergence;
mod drift;
mod stability;

pub use certify::{certify, certify_with, Certificate, CertifyOptions, CheckResult};
pub use convergence::{convergence_study, convergence_study_with_drift, RateReport};
pub use drift::{check_drift, DriftField, TimeBound, VectorField};
pub use stability::{monotonicity_residual, stability_gap, StabilityReport};

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::paths::csv_io::{expect_headers, header_row, read_table, write_rows};
use crate::paths::{BVPath, Path};
use crate::potential::SemiconvexPotential;
use crate::scalar::Real;

/// Discretization knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Longest step taken before any bisection.
    pub base_step: T,
    /// Largest accepted pre-projection excursion, as a fraction of `r0`.
    pub safety_fraction: T,
    pub max_bisections: u32,
    /// Lag `1/n` for the delayed drift `f(t, x(t - 1/n))`.
    pub delay_n: Option<u32>,
    /// Defaults to the domain's own tolerance.
    pub boundary_tol: Option<T>,
    pub residual_tol: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            base_step: T::of(1e-2),
            safety_fraction: T::of(0.5),
            max_bisections: 40,
            delay_n: None,
            boundary_tol: None,
            residual_tol: T::of(1e-6),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_step > T::zero() && self.base_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("base_step must be positive, got {}", self.base_step)));
        }
        if !(self.safety_fraction > T::zero() && self.safety_fraction < T::one()) {
            return Err(Error::InvalidArgument(format!("safety_fraction must lie in (0, 1), got {}", self.safety_fraction)));
        }
        if self.delay_n == Some(0) {
            return Err(Error::InvalidArgument("delay_n must be at least 1".into()));
        }
        if let Some(b) = self.boundary_tol {
            if !(b >= T::zero() && b.is_finite()) {
                return Err(Error::InvalidArgument(format!("boundary_tol must be nonnegative, got {b}")));
            }
        }
        if !(self.residual_tol >= T::zero() && self.residual_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("residual_tol must be nonnegative, got {}", self.residual_tol)));
        }
        Ok(())
    }

    /// `base_step` widened by a relative `1e-9` so that grids built as
    /// `i * T / n` are not split by rounding.
    pub fn max_step(&self) -> T {
        self.base_step * (T::one() + T::of(1e-9))
    }

    pub fn boundary_tol_for(&self, phi: &SemiconvexPotential<T>) -> T {
        self.boundary_tol.unwrap_or_else(|| phi.domain().boundary_tol())
    }
}

/// Per-step decomposition, flat `steps x d`. Step `i` spans nodes `i, i+1`.
/// `dk_i = normal_i + smooth_i`, `normal_i` lies in the normal cone at
/// `x_{i+1}` and `smooth_i = grad g(x_i) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepParts<T> {
    pub dim: usize,
    pub normal: Vec<T>,
    pub smooth: Vec<T>,
    pub drift: Vec<T>,
    pub forcing: Vec<T>,
}

impl<T: Real> StepParts<T> {
    pub fn steps(&self) -> usize {
        self.normal.len() / self.dim.max(1)
    }

    pub fn normal(&self, i: usize) -> &[T] {
        &self.normal[i * self.dim..(i + 1) * self.dim]
    }

    pub fn smooth(&self, i: usize) -> &[T] {
        &self.smooth[i * self.dim..(i + 1) * self.dim]
    }

    pub fn drift(&self, i: usize) -> &[T] {
        &self.drift[i * self.dim..(i + 1) * self.dim]
    }

    pub fn forcing(&self, i: usize) -> &[T] {
        &self.forcing[i * self.dim..(i + 1) * self.dim]
    }
}

/// Discrete solution `(x, k)`. `parts` is absent for solutions read back
/// from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SkorohodSolution<T: Real> {
    pub x: Path<T>,
    pub k: BVPath<T>,
    pub parts: Option<StepParts<T>>,
    pub driver_ref: String,
    pub bisections: usize,
    /// Conditions under which the a priori bounds do not apply.
    pub warnings: Vec<String>,
}

fn cumulative<T: Real>(times: &[T], flat: &[T], d: usize) -> Result<Path<T>> {
    let mut values = vec![T::zero(); times.len() * d];
    for i in 0..times.len() - 1 {
        for c in 0..d {
            values[(i + 1) * d + c] = values[i * d + c] + flat[i * d + c];
        }
    }
    Path::new(times.to_vec(), values, d)
}

impl<T: Real> SkorohodSolution<T> {
    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn x0(&self) -> &[T] {
        self.x.value(0)
    }

    pub fn times(&self) -> &[T] {
        self.x.times()
    }

    /// `sum_{j < i} f dt` at every node, when the step parts are known.
    pub fn drift_path(&self) -> Option<Path<T>> {
        let p = self.parts.as_ref()?;
        cumulative(self.times(), &p.drift, self.dim()).ok()
    }

    /// Accumulated driver increments (`m` on the solution grid, or the
    /// stochastic integral for simulated paths).
    pub fn forcing_path(&self) -> Option<Path<T>> {
        let p = self.parts.as_ref()?;
        cumulative(self.times(), &p.forcing, self.dim()).ok()
    }

    /// `t, x1..xd, k1..kd, cumvar`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let d = self.dim();
        let headers = header_row(&["x", "k"], d, &["cumvar"]);
        let rows = (0..self.x.len()).map(|i| {
            let mut r = Vec::with_capacity(2 * d + 2);
            r.push(self.times()[i]);
            r.extend_from_slice(self.x.value(i));
            r.extend_from_slice(self.k.path().value(i));
            r.push(self.k.cumvar()[i]);
            r
        });
        write_rows(writer, &headers, rows)
    }

    pub fn read_csv<R: Read>(reader: R, driver_ref: impl Into<String>) -> Result<Self> {
        let table = read_table::<T, _>(reader)?;
        let d = expect_headers(&table.headers, &["x", "k"], &["cumvar"])?;
        let times: Vec<T> = table.rows.iter().map(|r| r[0]).collect();
        let xs: Vec<T> = table.rows.iter().flat_map(|r| r[1..=d].iter().copied()).collect();
        let ks: Vec<T> = table.rows.iter().flat_map(|r| r[d + 1..=2 * d].iter().copied()).collect();
        let cumvar: Vec<T> = table.rows.iter().map(|r| r[2 * d + 1]).collect();
        Ok(SkorohodSolution {
            x: Path::new(times.clone(), xs, d)?,
            k: BVPath::new(Path::new(times, ks, d)?, cumvar)?,
            parts: None,
            driver_ref: driver_ref.into(),
            bisections: 0,
            warnings: Vec::new(),
        })
    }
}

/// How a step's driver increment becomes a state increment and how it is
/// split when the step is halved.
pub(crate) trait Forcing<T: Real> {
    fn driver_dim(&self) -> usize;
    fn apply(&mut self, t: T, x: &[T], db: &[T], w: &mut [T]);
    /// Children must sum to `db` exactly.
    fn split(&mut self, t0: T, t1: T, db: &[T], left: &mut [T], right: &mut [T]);
}

/// `w = db`, halved linearly.
pub(crate) struct Additive {
    pub dim: usize,
}

impl<T: Real> Forcing<T> for Additive {
    fn driver_dim(&self) -> usize {
        self.dim
    }

    fn apply(&mut self, _t: T, _x: &[T], db: &[T], w: &mut [T]) {
        w.copy_from_slice(db);
    }

    fn split(&mut self, _t0: T, _t1: T, db: &[T], left: &mut [T], right: &mut [T]) {
        let half = T::of(0.5);
        for ((l, r), &b) in left.iter_mut().zip(right.iter_mut()).zip(db) {
            *l = b * half;
            *r = b - *l;
        }
    }
}

/// Shared stepping engine for deterministic and stochastic drivers.
pub(crate) struct Stepper<'a, T: Real, F: Forcing<T>> {
    phi: &'a SemiconvexPotential<T>,
    drift: Option<&'a DriftField<T>>,
    lag: Option<T>,
    limit: T,
    max_bisections: u32,
    pub(crate) forcing: F,
    x0: Vec<T>,
    x: Vec<T>,
    k: Vec<T>,
    var: T,
    times: Vec<T>,
    xs: Vec<T>,
    ks: Vec<T>,
    cumvar: Vec<T>,
    parts: StepParts<T>,
    bisections: usize,
    scratch: Scratch<T>,
}

/// Per-step buffers, reused across steps.
#[derive(Default)]
struct Scratch<T> {
    w: Vec<T>,
    pre: Vec<T>,
    fdt: Vec<T>,
    at: Vec<T>,
    grad: Vec<T>,
    z: Vec<T>,
    xn: Vec<T>,
}

impl<T: Real> Scratch<T> {
    fn new(d: usize) -> Self {
        let v = || vec![T::zero(); d];
        Scratch { w: v(), pre: v(), fdt: v(), at: v(), grad: v(), z: v(), xn: v() }
    }
}

impl<'a, T: Real, F: Forcing<T>> Stepper<'a, T, F> {
    pub(crate) fn new(
        phi: &'a SemiconvexPotential<T>,
        x0: &[T],
        drift: Option<&'a DriftField<T>>,
        config: &SolverConfig<T>,
        forcing: F,
    ) -> Result<Self> {
        config.validate()?;
        let domain = phi.domain();
        let d = domain.dim();
        if x0.len() != d {
            return Err(Error::InvalidArgument(format!("x0 has dimension {}, domain has {d}", x0.len())));
        }
        let dist = domain.distance(x0)?;
        if !(dist <= config.boundary_tol_for(phi)) {
            return Err(Error::StartOutsideDomain { distance: dist.as_f64() });
        }
        if let Some(f) = drift {
            if f.dim() != d {
                return Err(Error::InvalidArgument(format!("drift has dimension {}, domain has {d}", f.dim())));
            }
        }
        let limit = config.safety_fraction * domain.uebc_radius();
        if !(limit > T::zero()) {
            return Err(Error::InvalidArgument("safety_fraction * r0 must be positive".into()));
        }
        Ok(Stepper {
            phi,
            drift,
            lag: config.delay_n.map(|n| T::one() / T::of(n as f64)),
            limit,
            max_bisections: config.max_bisections,
            forcing,
            x0: x0.to_vec(),
            x: x0.to_vec(),
            k: vec![T::zero(); d],
            var: T::zero(),
            times: vec![T::zero()],
            xs: x0.to_vec(),
            ks: vec![T::zero(); d],
            cumvar: vec![T::zero()],
            parts: StepParts { dim: d, normal: Vec::new(), smooth: Vec::new(), drift: Vec::new(), forcing: Vec::new() },
            bisections: 0,
            scratch: Scratch::new(d),
        })
    }

    /// `x(s)`, with `x(s) = x0` for `s <= 0`, interpolated on the nodes
    /// produced so far.
    fn history(&self, s: T, out: &mut [T]) {
        let d = self.x.len();
        if s <= T::zero() {
            out.copy_from_slice(&self.x0);
            return;
        }
        let j = self.times.partition_point(|&t| t <= s);
        if j >= self.times.len() {
            out.copy_from_slice(&self.x);
            return;
        }
        let (ta, tb) = (self.times[j - 1], self.times[j]);
        let w = (s - ta) / (tb - ta);
        let (xa, xb) = (&self.xs[(j - 1) * d..j * d], &self.xs[j * d..(j + 1) * d]);
        for ((o, &a), &b) in out.iter_mut().zip(xa).zip(xb) {
            *o = a + w * (b - a);
        }
    }

    pub(crate) fn step(&mut self, t0: T, t1: T, db: &[T], depth: u32) -> Result<()> {
        let d = self.x.len();
        let dt = t1 - t0;
        let mut s = std::mem::take(&mut self.scratch);
        self.forcing.apply(t0, &self.x, db, &mut s.w);
        for c in 0..d {
            s.pre[c] = self.x[c] + s.w[c];
        }
        s.fdt.fill(T::zero());
        if let Some(f) = self.drift {
            match self.lag {
                Some(lag) => self.history(t0 - lag, &mut s.at),
                None => s.at.copy_from_slice(&self.x),
            }
            f.eval_into(t0, &s.at, &mut s.fdt);
            for (p, v) in s.pre.iter_mut().zip(s.fdt.iter_mut()) {
                *v *= dt;
                *p += *v;
            }
        }
        s.grad.fill(T::zero());
        s.z.copy_from_slice(&s.pre);
        if !self.phi.smooth_part().is_zero() {
            self.phi.smooth_part().gradient_into(&self.x, &mut s.grad);
            for (zi, g) in s.z.iter_mut().zip(s.grad.iter_mut()) {
                *g *= dt;
                *zi -= *g;
            }
        }
        let domain = self.phi.domain();
        let excursion = match domain.distance(&s.z) {
            Ok(e) => e,
            Err(e) => {
                self.scratch = s;
                return Err(e);
            }
        };
        if !(excursion < self.limit) {
            self.scratch = s;
            if depth >= self.max_bisections {
                return Err(Error::StepCollapse {
                    time: t0.as_f64(),
                    excursion: excursion.as_f64(),
                    bisections: depth as usize,
                });
            }
            self.bisections += 1;
            let k = self.forcing.driver_dim();
            let (mut left, mut right) = (vec![T::zero(); k], vec![T::zero(); k]);
            self.forcing.split(t0, t1, db, &mut left, &mut right);
            let tm = t0 + dt * T::of(0.5);
            self.step(t0, tm, &left, depth + 1)?;
            return self.step(tm, t1, &right, depth + 1);
        }
        if excursion > T::zero() {
            if let Err(e) = domain.project_into(&s.z, &mut s.xn) {
                self.scratch = s;
                return Err(e);
            }
        } else {
            s.xn.copy_from_slice(&s.z);
        }
        let mut step_var = T::zero();
        for c in 0..d {
            let dk = s.pre[c] - s.xn[c];
            self.k[c] += dk;
            step_var += dk * dk;
            self.parts.normal.push(s.z[c] - s.xn[c]);
        }
        self.var += step_var.sqrt();
        self.parts.smooth.extend_from_slice(&s.grad);
        self.parts.drift.extend_from_slice(&s.fdt);
        self.parts.forcing.extend_from_slice(&s.w);
        std::mem::swap(&mut self.x, &mut s.xn);
        self.times.push(t1);
        self.xs.extend_from_slice(&self.x);
        self.ks.extend_from_slice(&self.k);
        self.cumvar.push(self.var);
        self.scratch = s;
        Ok(())
    }

    pub(crate) fn finish(self, driver_ref: String) -> Result<SkorohodSolution<T>> {
        let d = self.x.len();
        let mut warnings = Vec::new();
        if let Some(f) = self.drift {
            let t_end = self.times.last().copied().unwrap_or(T::zero());
            if self.phi.domain().bounding_radius().is_none() && !f.f_sharp_bound(t_end).is_finite() {
                warnings.push(format!(
                    "drift '{}' is unbounded on an unbounded domain; its integrability bound fails",
                    f.name()
                ));
            }
        }
        Ok(SkorohodSolution {
            x: Path::new(self.times.clone(), self.xs, d)?,
            k: BVPath::new(Path::new(self.times, self.ks, d)?, self.cumvar)?,
            parts: Some(self.parts),
            driver_ref,
            bisections: self.bisections,
            warnings,
        })
    }
}

fn run_driver<T: Real>(
    phi: &SemiconvexPotential<T>,
    x0: &[T],
    drift: Option<&DriftField<T>>,
    m: &Path<T>,
    config: &SolverConfig<T>,
    driver_ref: String,
) -> Result<SkorohodSolution<T>> {
    let d = phi.dim();
    if m.dim() != d {
        return Err(Error::InvalidArgument(format!("driver has dimension {}, domain has {d}", m.dim())));
    }
    if m.value(0).iter().any(|&v| v != T::zero()) {
        return Err(Error::InvalidArgument("driver must start at 0".into()));
    }
    let mut st = Stepper::new(phi, x0, drift, config, Additive { dim: d })?;
    let mut db = vec![T::zero(); d];
    let times = m.times();
    let step = config.max_step();
    for j in 0..times.len() - 1 {
        let (ta, tb) = (times[j], times[j + 1]);
        let (ma, mb) = (m.value(j), m.value(j + 1));
        let n = ((tb - ta) / step).ceil().to_usize().unwrap_or(1).max(1);
        if n == 1 {
            for c in 0..d {
                db[c] = mb[c] - ma[c];
            }
            st.step(ta, tb, &db, 0)?;
            continue;
        }
        let nn = T::of_usize(n);
        let mut prev = ma.to_vec();
        let mut t_prev = ta;
        for q in 1..=n {
            let (t_next, next): (T, Vec<T>) = if q == n {
                (tb, mb.to_vec())
            } else {
                let w = T::of_usize(q) / nn;
                (ta + (tb - ta) * w, ma.iter().zip(mb).map(|(&a, &b)| a + (b - a) * w).collect())
            };
            for c in 0..d {
                db[c] = next[c] - prev[c];
            }
            st.step(t_prev, t_next, &db, 0)?;
            prev = next;
            t_prev = t_next;
        }
    }
    st.finish(driver_ref)
}

/// Solves `x + k = x0 + m` with `dk` in the subdifferential of `phi`.
pub fn solve<T: Real>(
    phi: &SemiconvexPotential<T>,
    x0: &[T],
    m: &Path<T>,
    config: &SolverConfig<T>,
) -> Result<SkorohodSolution<T>> {
    run_driver(phi, x0, None, m, config, "m".into())
}

/// Solves `x + k = x0 + int f(s, x(s)) ds + m`; with `delay_n = n` the drift
/// is evaluated at `x(t - 1/n)`.
pub fn solve_with_drift<T: Real>(
    phi: &SemiconvexPotential<T>,
    x0: &[T],
    f: &DriftField<T>,
    m: &Path<T>,
    config: &SolverConfig<T>,
) -> Result<SkorohodSolution<T>> {
    run_driver(phi, x0, Some(f), m, config, format!("m+drift:{}", f.name()))
}

/// Drift contribution `sum f(t_i, x_i) dt_i` recomputed from a stored
/// state path, for solutions read back without their step parts.
pub fn reconstruct_drift<T: Real>(f: &DriftField<T>, x: &Path<T>, delay_n: Option<u32>) -> Result<Path<T>> {
    let d = x.dim();
    let times = x.times();
    let mut flat = Vec::with_capacity(times.len() * d);
    let mut at = vec![T::zero(); d];
    let mut fv = vec![T::zero(); d];
    for i in 0..times.len() - 1 {
        match delay_n {
            Some(n) => {
                let s = times[i] - T::one() / T::of(n as f64);
                if s <= T::zero() {
                    at.copy_from_slice(x.value(0));
                } else {
                    x.eval_into(s, &mut at)?;
                }
            }
            None => at.copy_from_slice(x.value(i)),
        }
        f.eval_into(times[i], &at, &mut fv);
        let dt = times[i + 1] - times[i];
        flat.extend(fv.iter().map(|&v| v * dt));
    }
    cumulative(times, &flat, d)
}

#[cfg(test)]
mod tests;
