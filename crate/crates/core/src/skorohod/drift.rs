use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Domain, ViolationReport};
use crate::scalar::vector::{self, dot};
use crate::scalar::Real;

/// `(t, x, out)`; writes `f(t, x)` into `out`.
pub type VectorField<T> = Arc<dyn Fn(T, &[T], &mut [T]) + Send + Sync>;
/// `t -> bound`.
pub type TimeBound<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Drift `f(t, x)` with its one-sided Lipschitz constant and the bound
/// `f_sharp(t) >= sup_E |f(t, .)|`.
#[derive(Clone)]
pub struct DriftField<T: Real> {
    name: String,
    dim: usize,
    f: VectorField<T>,
    mu_onesided: T,
    f_sharp: TimeBound<T>,
}

impl<T: Real> fmt::Debug for DriftField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("mu_onesided", &self.mu_onesided)
            .finish_non_exhaustive()
    }
}

impl<T: Real> DriftField<T> {
    pub fn new(name: impl Into<String>, dim: usize, f: VectorField<T>, mu_onesided: T, f_sharp: TimeBound<T>) -> Self {
        DriftField { name: name.into(), dim, f, mu_onesided, f_sharp }
    }

    /// Built-in fields:
    /// `zero`; `decay` (`f = -x`); `push` (`f = -3 e1`); `swirl`
    /// (`f = (-x2, x1, 0, ...)`, `d >= 2`). `radius` bounds `|x|` on `E`
    /// and is needed for the state-dependent entries' `f_sharp`.
    pub fn catalog(name: &str, dim: usize, radius: Option<T>) -> Result<Self> {
        let r = radius.unwrap_or(T::infinity());
        let field: (VectorField<T>, T, T) = match name {
            "zero" => (Arc::new(|_, _, out: &mut [T]| out.fill(T::zero())), T::zero(), T::zero()),
            "decay" => (
                Arc::new(|_, x: &[T], out: &mut [T]| {
                    for (o, &xi) in out.iter_mut().zip(x) {
                        *o = -xi;
                    }
                }),
                -T::one(),
                r,
            ),
            "push" => (
                Arc::new(|_, _, out: &mut [T]| {
                    out.fill(T::zero());
                    out[0] = T::of(-3.0);
                }),
                T::zero(),
                T::of(3.0),
            ),
            "swirl" if dim >= 2 => (
                Arc::new(|_, x: &[T], out: &mut [T]| {
                    out.fill(T::zero());
                    out[0] = -x[1];
                    out[1] = x[0];
                }),
                T::zero(),
                r,
            ),
            other => return Err(Error::InvalidArgument(format!("unknown drift catalog entry {other:?} for d = {dim}"))),
        };
        let (f, mu, sharp) = field;
        Ok(DriftField::new(name, dim, f, mu, Arc::new(move |_| sharp)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu_onesided(&self) -> T {
        self.mu_onesided
    }

    pub fn f_sharp_bound(&self, t: T) -> T {
        (self.f_sharp)(t)
    }

    pub fn eval_into(&self, t: T, x: &[T], out: &mut [T]) {
        (self.f)(t, x, out)
    }

    pub fn eval(&self, t: T, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(t, x, &mut out);
        out
    }
}

/// Sampled one-sided Lipschitz violations
/// `<x - y, f(t,x) - f(t,y)> - mu |x - y|^2` and bound violations
/// `|f(t,x)| - f_sharp(t)` over `x, y` in `E` and `t` in `[0, t_end]`.
pub fn check_drift<T: Real>(
    f: &DriftField<T>,
    domain: &Domain<T>,
    t_end: T,
    n_samples: usize,
    rng_seed: u64,
) -> (ViolationReport, ViolationReport) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut onesided = ViolationReport { samples: 0, max_violation: f64::NEG_INFINITY, worst: None, skipped: 0 };
    let mut sharp = onesided.clone();
    for _ in 0..n_samples {
        let t = t_end * T::of(rng.random::<f64>());
        let x = domain.sample_point(&mut rng);
        let y = domain.sample_point(&mut rng);
        let fx = f.eval(t, &x);
        let fy = f.eval(t, &y);
        let dx = vector::sub(&x, &y);
        let v = dot(&dx, &vector::sub(&fx, &fy)) - f.mu_onesided() * dot(&dx, &dx);
        onesided.record(v, &x);
        sharp.record(vector::norm(&fx) - f.f_sharp_bound(t), &x);
    }
    (onesided, sharp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_fields_satisfy_their_constants() {
        let shell = Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap();
        for name in ["zero", "decay", "push", "swirl"] {
            let f = DriftField::catalog(name, 2, shell.bounding_radius()).unwrap();
            let (a, b) = check_drift(&f, &shell, 1.0, 500, 9);
            assert!(a.passes(1e-12), "{name}: {a:?}");
            assert!(b.passes(1e-12), "{name}: {b:?}");
        }
        assert!(DriftField::<f64>::catalog("swirl", 1, None).is_err());
    }

    #[test]
    fn understated_constant_is_detected() {
        let ball = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let f = DriftField::new(
            "expand",
            2,
            Arc::new(|_, x: &[f64], out: &mut [f64]| out.copy_from_slice(x)),
            0.5,
            Arc::new(|_| 1.0),
        );
        let (a, _) = check_drift(&f, &ball, 1.0, 200, 1);
        assert!(a.max_violation > 0.0);
    }
}
