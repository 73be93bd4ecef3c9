use serde::Serialize;

use crate::error::{Error, Result};
use crate::paths::Path;
use crate::potential::SemiconvexPotential;
use crate::scalar::vector::{dist, dist_sq, dot};
use crate::scalar::Real;

use super::SkorohodSolution;

/// Both sides of the stability inequality at every node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    /// `sup_{s <= t} |x - x^|^2`
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `min_t (rhs - lhs)`
    pub margin: f64,
    pub margin_time: f64,
    /// `sup |x - x^| / sqrt(sup |m - m^|)`; `None` when the drivers agree.
    pub holder_ratio: Option<f64>,
}

fn same_grid<T: Real>(a: &SkorohodSolution<T>, b: &SkorohodSolution<T>) -> Result<()> {
    if a.times() != b.times() || a.dim() != b.dim() {
        return Err(Error::GridMismatch("solutions live on different grids".into()));
    }
    Ok(())
}

fn on_grid<T: Real>(m: &Path<T>, sol: &SkorohodSolution<T>) -> Result<Path<T>> {
    if m.t_end() != sol.x.t_end() || !m.grid_contained_in(&sol.x) {
        return Err(Error::GridMismatch("driver nodes are not a subset of the solution nodes".into()));
    }
    m.resample(sol.times().to_vec())
}

/// Evaluates
/// `|x - x^|_t^2 <= 2 (|x0 - x0^|^2 + |m - m^|_t^2 + 2 |m - m^|_t V(k - k^)_t)
///  * exp(8 rho t + 4 gamma (V(k)_t + V(k^)_t))`
/// with running sup norms `|.|_t` and node-sum variations `V`.
pub fn stability_gap<T: Real>(
    phi: &SemiconvexPotential<T>,
    sol1: &SkorohodSolution<T>,
    sol2: &SkorohodSolution<T>,
    m1: &Path<T>,
    m2: &Path<T>,
) -> Result<StabilityReport> {
    same_grid(sol1, sol2)?;
    let (a, b) = (on_grid(m1, sol1)?, on_grid(m2, sol2)?);
    let n = sol1.times().len();
    let (rho, gamma) = (phi.rho().as_f64(), phi.gamma().as_f64());
    let x0_gap = dist_sq(sol1.x0(), sol2.x0()).as_f64();
    let (k1, k2) = (sol1.k.path(), sol2.k.path());
    let mut out = StabilityReport {
        times: Vec::with_capacity(n),
        lhs: Vec::with_capacity(n),
        rhs: Vec::with_capacity(n),
        margin: f64::INFINITY,
        margin_time: 0.0,
        holder_ratio: None,
    };
    let (mut sup_x, mut sup_m, mut var_diff) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        let t = sol1.times()[i].as_f64();
        sup_x = sup_x.max(dist(sol1.x.value(i), sol2.x.value(i)).as_f64());
        sup_m = sup_m.max(dist(a.value(i), b.value(i)).as_f64());
        if i > 0 {
            let step: Vec<T> = (0..sol1.dim())
                .map(|c| (k1.value(i)[c] - k1.value(i - 1)[c]) - (k2.value(i)[c] - k2.value(i - 1)[c]))
                .collect();
            var_diff += dot(&step, &step).sqrt().as_f64();
        }
        let v = sol1.k.cumvar()[i].as_f64() + sol2.k.cumvar()[i].as_f64();
        let lhs = sup_x * sup_x;
        let rhs = 2.0 * (x0_gap + sup_m * sup_m + 2.0 * sup_m * var_diff) * (8.0 * rho * t + 4.0 * gamma * v).exp();
        if rhs - lhs < out.margin {
            out.margin = rhs - lhs;
            out.margin_time = t;
        }
        out.times.push(t);
        out.lhs.push(lhs);
        out.rhs.push(rhs);
    }
    if sup_m > 0.0 {
        out.holder_ratio = Some(sup_x / sup_m.sqrt());
    }
    Ok(out)
}

/// Most negative window sum of the discretized monotonicity integrand
/// `<x - x^, dk - dk^> + (rho dr + gamma dV(k) + gamma dV(k^)) |x - x^|^2`.
/// The continuous integral is nonnegative on every window.
pub fn monotonicity_residual<T: Real>(
    phi: &SemiconvexPotential<T>,
    sol1: &SkorohodSolution<T>,
    sol2: &SkorohodSolution<T>,
) -> Result<f64> {
    same_grid(sol1, sol2)?;
    let (rho, gamma) = (phi.rho(), phi.gamma());
    let (x1, x2) = (&sol1.x, &sol2.x);
    let (k1, k2) = (sol1.k.path(), sol2.k.path());
    let times = sol1.times();
    let half = T::of(0.5);
    let mut best = T::zero();
    let mut run = T::zero();
    for i in 0..times.len() - 1 {
        let dt = times[i + 1] - times[i];
        let dx: Vec<T> = x1.value(i + 1).iter().zip(x2.value(i + 1)).map(|(&a, &b)| a - b).collect();
        let dk: Vec<T> = (0..sol1.dim())
            .map(|c| (k1.value(i + 1)[c] - k1.value(i)[c]) - (k2.value(i + 1)[c] - k2.value(i)[c]))
            .collect();
        let sq_prev = dist_sq(x1.value(i), x2.value(i));
        let sq = dot(&dx, &dx);
        let dv1 = sol1.k.cumvar()[i + 1] - sol1.k.cumvar()[i];
        let dv2 = sol2.k.cumvar()[i + 1] - sol2.k.cumvar()[i];
        let e = dot(&dx, &dk) + rho * dt * half * (sq_prev + sq) + gamma * (dv1 + dv2) * sq;
        run = if run < T::zero() { run + e } else { e };
        best = best.min(run);
    }
    Ok(best.as_f64())
}
