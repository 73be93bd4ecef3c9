use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::paths::Path;
use crate::potential::SemiconvexPotential;
use crate::scalar::vector::dist;
use crate::scalar::Real;

use super::{solve, solve_with_drift, DriftField, SkorohodSolution, SolverConfig};

/// Self-convergence against the finest resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// Resolutions compared with the reference (all but the finest).
    pub steps: Vec<usize>,
    pub reference_steps: usize,
    pub dt: Vec<f64>,
    /// Sup over the coarse driver nodes of `|x_n - x_ref|`.
    pub error_x: Vec<f64>,
    pub error_k: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln dt`; `None` with fewer
    /// than two positive errors.
    pub rate_x: Option<f64>,
    pub rate_k: Option<f64>,
}

fn sup_error<T: Real>(coarse: &Path<T>, nodes: &[T], fine: &Path<T>) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut a = vec![T::zero(); coarse.dim()];
    let mut b = vec![T::zero(); coarse.dim()];
    for &t in nodes {
        coarse.eval_into(t, &mut a)?;
        fine.eval_into(t, &mut b)?;
        worst = worst.max(dist(&a, &b).as_f64());
    }
    Ok(worst)
}

pub(crate) fn fitted_rate(dt: &[f64], err: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = dt.iter().zip(err).filter(|(_, &e)| e > 0.0).map(|(&h, &e)| (h.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solves with the drivers `m_generator(n)` for every `n` in `steps`
/// (strictly increasing) and measures sup-norm errors against the finest.
pub fn convergence_study<T: Real, G>(
    phi: &SemiconvexPotential<T>,
    x0: &[T],
    m_generator: G,
    steps: &[usize],
    config: &SolverConfig<T>,
) -> Result<RateReport>
where
    G: Fn(usize) -> Result<Path<T>> + Sync,
{
    convergence_study_with_drift(phi, x0, None, m_generator, steps, config)
}

/// [`convergence_study`] for `x + k = x0 + m + int f(s, x(s)) ds`.
pub fn convergence_study_with_drift<T: Real, G>(
    phi: &SemiconvexPotential<T>,
    x0: &[T],
    drift: Option<&DriftField<T>>,
    m_generator: G,
    steps: &[usize],
    config: &SolverConfig<T>,
) -> Result<RateReport>
where
    G: Fn(usize) -> Result<Path<T>> + Sync,
{
    if steps.len() < 2 || steps.windows(2).any(|w| w[0] >= w[1]) || steps[0] == 0 {
        return Err(Error::InvalidArgument("steps must be positive, strictly increasing, at least two".into()));
    }
    let runs: Vec<(Path<T>, SkorohodSolution<T>)> = steps
        .par_iter()
        .map(|&n| {
            let m = m_generator(n)?;
            let sol = match drift {
                Some(f) => solve_with_drift(phi, x0, f, &m, config)?,
                None => solve(phi, x0, &m, config)?,
            };
            Ok((m, sol))
        })
        .collect::<Result<_>>()?;
    let (_, reference) = runs.last().expect("at least two runs");
    let mut report = RateReport {
        steps: steps[..steps.len() - 1].to_vec(),
        reference_steps: *steps.last().expect("nonempty"),
        dt: Vec::new(),
        error_x: Vec::new(),
        error_k: Vec::new(),
        rate_x: None,
        rate_k: None,
    };
    for ((m, sol), &n) in runs.iter().zip(steps).take(steps.len() - 1) {
        report.dt.push(m.t_end().as_f64() / n as f64);
        report.error_x.push(sup_error(&sol.x, m.times(), &reference.x)?);
        report.error_k.push(sup_error(sol.k.path(), m.times(), reference.k.path())?);
    }
    report.rate_x = fitted_rate(&report.dt, &report.error_x);
    report.rate_k = fitted_rate(&report.dt, &report.error_k);
    Ok(report)
}
