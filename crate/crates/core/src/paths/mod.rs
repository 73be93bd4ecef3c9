//! Piecewise-linear paths on finite grids and their functionals.
//!
//! Every functional here is exact for the piecewise-linear interpolant: the
//! extrema of `|y(t) - y(s)|` over a window sit at grid nodes or at window
//! endpoints, and the variation of a linear segment is its length.

pub(crate) mod csv_io;

pub use csv_io::{read_bv_csv, read_path_csv, read_table, write_bv_csv, write_path_csv, Table};

use crate::error::{Error, Result};
use crate::scalar::vector::{self, dist, norm};
use crate::scalar::Real;

/// Continuous path `[0, T] -> R^d`, linear between grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Path<T: Real> {
    times: Vec<T>,
    /// `dim` entries per node
    values: Vec<T>,
    dim: usize,
}

impl<T: Real> Path<T> {
    /// Grid must start at 0, be strictly increasing, and carry finite values.
    pub fn new(times: Vec<T>, values: Vec<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPath("dimension must be at least 1".into()));
        }
        if times.is_empty() {
            return Err(Error::InvalidPath("path needs at least one node".into()));
        }
        if values.len() != times.len() * dim {
            return Err(Error::InvalidPath(format!(
                "{} values for {} nodes of dimension {dim}",
                values.len(),
                times.len()
            )));
        }
        if times[0] != T::zero() {
            return Err(Error::InvalidPath(format!("grid starts at {} instead of 0", times[0])));
        }
        if !vector::all_finite(&times) || !vector::all_finite(&values) {
            return Err(Error::InvalidPath("non-finite entry".into()));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPath(format!("grid not strictly increasing at node {}", i + 1)));
        }
        Ok(Path { times, values, dim })
    }

    pub fn from_points(times: Vec<T>, points: &[Vec<T>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidPath("points differ in dimension".into()));
        }
        Self::new(times, points.concat(), dim)
    }

    /// Samples `f` at every grid time.
    pub fn from_fn(times: Vec<T>, dim: usize, mut f: impl FnMut(T) -> Vec<T>) -> Result<Self> {
        let mut values = Vec::with_capacity(times.len() * dim);
        for &t in &times {
            let v = f(t);
            if v.len() != dim {
                return Err(Error::InvalidPath("generator returned wrong dimension".into()));
            }
            values.extend(v);
        }
        Self::new(times, values, dim)
    }

    /// Constant path on `[0, t_end]` with `n` equal steps.
    pub fn constant(value: Vec<T>, t_end: T, n: usize) -> Result<Self> {
        let dim = value.len();
        Self::from_fn(uniform_grid(t_end, n)?, dim, |_| value.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid nodes.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &[T] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn t_end(&self) -> T {
        *self.times.last().unwrap()
    }

    /// Index `i` with `times[i] <= t < times[i + 1]` (last segment for `t = T`).
    fn segment(&self, t: T) -> usize {
        let n = self.times.len();
        if n == 1 {
            return 0;
        }
        match self.times.binary_search_by(|a| a.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Linear interpolation, writing into `out`; exact at grid nodes.
    pub fn eval_into(&self, t: T, out: &mut [T]) -> Result<()> {
        if !(t >= T::zero() && t <= self.t_end()) {
            return Err(Error::InvalidArgument(format!("time {t} outside [0, {}]", self.t_end())));
        }
        let i = self.segment(t);
        if self.times.len() == 1 || t == self.times[i] {
            out.copy_from_slice(self.value(i));
            return Ok(());
        }
        if t == self.times[i + 1] {
            out.copy_from_slice(self.value(i + 1));
            return Ok(());
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        let a = self.value(i);
        let b = self.value(i + 1);
        for ((o, &ai), &bi) in out.iter_mut().zip(a).zip(b) {
            *o = ai + w * (bi - ai);
        }
        Ok(())
    }

    pub fn eval(&self, t: T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// `sup_t |y(t)|`, attained at a node.
    pub fn sup_norm(&self) -> T {
        self.values.chunks_exact(self.dim).map(norm).fold(T::zero(), T::max)
    }

    /// `sup_{s <= t} |y(s)|` for every node.
    pub fn running_sup_norm(&self) -> Vec<T> {
        let mut acc = T::zero();
        self.values
            .chunks_exact(self.dim)
            .map(|v| {
                acc = acc.max(norm(v));
                acc
            })
            .collect()
    }

    /// `y - other` on a shared grid.
    pub fn difference(&self, other: &Path<T>) -> Result<Path<T>> {
        if self.times != other.times || self.dim != other.dim {
            return Err(Error::GridMismatch("paths live on different grids".into()));
        }
        let v = self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect();
        Path::new(self.times.clone(), v, self.dim)
    }

    /// `y + c * other` on a shared grid.
    pub fn add_scaled(&self, c: T, other: &Path<T>) -> Result<Path<T>> {
        if self.times != other.times || self.dim != other.dim {
            return Err(Error::GridMismatch("paths live on different grids".into()));
        }
        let v = self.values.iter().zip(&other.values).map(|(&a, &b)| a + c * b).collect();
        Path::new(self.times.clone(), v, self.dim)
    }

    /// The same function sampled on `times` (which must lie in `[0, T]`).
    pub fn resample(&self, times: Vec<T>) -> Result<Path<T>> {
        let mut values = vec![T::zero(); times.len() * self.dim];
        for (t, out) in times.iter().zip(values.chunks_exact_mut(self.dim)) {
            self.eval_into(*t, out)?;
        }
        Path::new(times, values, self.dim)
    }

    /// Adds every segment midpoint; the function is unchanged.
    pub fn refine_midpoints(&self) -> Path<T> {
        let two = T::of(2.0);
        let mut times = Vec::with_capacity(2 * self.len());
        for w in self.times.windows(2) {
            times.push(w[0]);
            times.push((w[0] + w[1]) / two);
        }
        times.push(self.t_end());
        self.resample(times).expect("midpoints lie inside the grid")
    }

    /// The path on `[0, t]`, with a node inserted at `t` when needed.
    pub fn restrict(&self, t: T) -> Result<Path<T>> {
        if !(t > T::zero() && t <= self.t_end()) {
            return Err(Error::InvalidArgument(format!("restriction time {t} outside (0, {}]", self.t_end())));
        }
        let mut times: Vec<T> = self.times.iter().copied().take_while(|&s| s < t).collect();
        times.push(t);
        self.resample(times)
    }

    /// Whether every node of `self` is also a node of `finer`.
    pub fn grid_contained_in(&self, finer: &Path<T>) -> bool {
        let mut j = 0;
        for &t in &self.times {
            while j < finer.times.len() && finer.times[j] < t {
                j += 1;
            }
            if j == finer.times.len() || finer.times[j] != t {
                return false;
            }
        }
        true
    }
}

/// `n + 1` equally spaced times on `[0, t_end]`; the last node is `t_end` exactly.
pub fn uniform_grid<T: Real>(t_end: T, n: usize) -> Result<Vec<T>> {
    if n == 0 {
        if t_end == T::zero() {
            return Ok(vec![T::zero()]);
        }
        return Err(Error::InvalidArgument("a positive horizon needs at least one step".into()));
    }
    if !(t_end > T::zero() && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon {t_end} must be positive")));
    }
    let nn = T::of_usize(n);
    let mut g: Vec<T> = (0..=n).map(|i| t_end * T::of_usize(i) / nn).collect();
    g[n] = t_end;
    Ok(g)
}

/// Path of bounded variation with its running variation stored per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BVPath<T: Real> {
    path: Path<T>,
    cumvar: Vec<T>,
}

impl<T: Real> BVPath<T> {
    /// Checks `cumvar[0] = 0`, monotonicity, and that every step covers the
    /// segment length.
    pub fn new(path: Path<T>, cumvar: Vec<T>) -> Result<Self> {
        if cumvar.len() != path.len() {
            return Err(Error::InvalidPath("cumulative variation length differs from grid".into()));
        }
        if cumvar[0] != T::zero() {
            return Err(Error::InvalidPath(format!("cumulative variation starts at {}", cumvar[0])));
        }
        if !vector::all_finite(&cumvar) {
            return Err(Error::InvalidPath("cumulative variation not finite".into()));
        }
        for i in 0..cumvar.len() - 1 {
            let step = cumvar[i + 1] - cumvar[i];
            let seg = dist(path.value(i), path.value(i + 1));
            let slack = T::of(1e-12) + T::of(4.0) * T::epsilon() * cumvar[i + 1].abs();
            if step < T::zero() || step < seg - slack {
                return Err(Error::InvalidPath(format!(
                    "cumulative variation step {step} at node {} below segment length {seg}",
                    i + 1
                )));
            }
        }
        Ok(BVPath { path, cumvar })
    }

    /// Running variation computed from the node increments.
    pub fn from_path(path: Path<T>) -> Self {
        let mut cumvar = Vec::with_capacity(path.len());
        let mut acc = T::zero();
        cumvar.push(acc);
        for i in 0..path.len() - 1 {
            acc += dist(path.value(i), path.value(i + 1));
            cumvar.push(acc);
        }
        BVPath { path, cumvar }
    }

    pub fn path(&self) -> &Path<T> {
        &self.path
    }

    pub fn into_path(self) -> Path<T> {
        self.path
    }

    pub fn cumvar(&self) -> &[T] {
        &self.cumvar
    }

    /// `⇕k⇕_T` as stored.
    pub fn total(&self) -> T {
        *self.cumvar.last().unwrap()
    }
}

/// Modulus of continuity `sup { |y(t) - y(s)| : |t - s| <= eps }`.
/// `eps` beyond `T` is clamped to `T`.
pub fn modulus<T: Real>(y: &Path<T>, eps: T) -> Result<T> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument(format!("modulus needs eps > 0, got {eps}")));
    }
    let n = y.len();
    if n == 1 {
        return Ok(T::zero());
    }
    let eps = eps.min(y.t_end());
    let t = y.times();
    let mut best = T::zero();
    let mut buf = vec![T::zero(); y.dim()];
    for i in 0..n {
        let mut j = i + 1;
        while j < n && t[j] - t[i] <= eps {
            best = best.max(dist(y.value(i), y.value(j)));
            j += 1;
        }
        let right = t[i] + eps;
        if right <= y.t_end() {
            y.eval_into(right, &mut buf)?;
            best = best.max(dist(y.value(i), &buf));
        }
        let left = t[i] - eps;
        if left >= T::zero() {
            y.eval_into(left, &mut buf)?;
            best = best.max(dist(y.value(i), &buf));
        }
    }
    Ok(best)
}

/// `mu_y(eps) = eps + modulus(y, eps)`, with `mu_y(0) = 0`.
pub fn mu<T: Real>(y: &Path<T>, eps: T) -> Result<T> {
    if eps == T::zero() {
        return Ok(T::zero());
    }
    Ok(eps + modulus(y, eps)?)
}

/// Inverse of [`mu`] by bisection on `[0, T]`, run to full precision.
pub fn mu_inverse<T: Real>(y: &Path<T>, u: T) -> Result<T> {
    let upper = mu(y, y.t_end())?;
    if !(u > T::zero() && u <= upper) {
        return Err(Error::OutOfRange { value: u.as_f64(), upper: upper.as_f64() });
    }
    let (mut lo, mut hi) = (T::zero(), y.t_end());
    for _ in 0..200 {
        let mid = (lo + hi) / T::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if mu(y, mid)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Variation of the interpolant over `[s, t]`, partial end segments included.
pub fn total_variation<T: Real>(k: &Path<T>, s: T, t: T) -> Result<T> {
    if !(T::zero() <= s && s <= t && t <= k.t_end()) {
        return Err(Error::InvalidArgument(format!("need 0 <= s <= t <= T, got s={s}, t={t}")));
    }
    let times = k.times();
    let mut total = T::zero();
    for i in 0..k.len().saturating_sub(1) {
        let (a, b) = (times[i], times[i + 1]);
        let lo = a.max(s);
        let hi = b.min(t);
        if hi <= lo {
            continue;
        }
        let seg = dist(k.value(i), k.value(i + 1));
        total += if lo == a && hi == b { seg } else { seg * (hi - lo) / (b - a) };
    }
    Ok(total)
}

/// Constants of the a-priori estimates for driver `m` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriConstants {
    /// `1 / mu_m^{-1}(delta^2 exp[-C (1 + T + |m|_T)])`
    pub delta_m: f64,
    /// `exp[C (1 + T + |m|_T + delta_m)]`; may overflow to infinity.
    pub c_tm: f64,
    /// Logarithm of `c_tm`, always finite.
    pub ln_c_tm: f64,
}

pub fn a_priori_constants<T: Real>(m: &Path<T>, t_end: T, c: T, delta: T) -> Result<AprioriConstants> {
    if !(c > T::zero() && delta > T::zero()) {
        return Err(Error::InvalidArgument("C and delta must be positive".into()));
    }
    let m = if t_end == m.t_end() { m.clone() } else { m.restrict(t_end)? };
    let sup = m.sup_norm().as_f64();
    let (c, delta, tf) = (c.as_f64(), delta.as_f64(), t_end.as_f64());
    let arg = delta * delta * (-c * (1.0 + tf + sup)).exp();
    let upper = mu(&m, m.t_end())?.as_f64();
    if !(arg > 0.0 && arg <= upper) {
        return Err(Error::ArgumentOutOfMuRange { argument: arg, upper });
    }
    // bisection in f64 regardless of T: the constants are reported in f64
    let m64 = Path::new(
        m.times().iter().map(|v| v.as_f64()).collect(),
        m.values().iter().map(|v| v.as_f64()).collect(),
        m.dim(),
    )?;
    let delta_m = 1.0 / mu_inverse(&m64, arg)?;
    let ln_c_tm = c * (1.0 + tf + sup + delta_m);
    Ok(AprioriConstants { delta_m, c_tm: ln_c_tm.exp(), ln_c_tm })
}
