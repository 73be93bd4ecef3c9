//! Sampling verifiers for the exterior-ball, semiconvexity and drop conditions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scalar::vector::{self, dot};
use crate::scalar::Real;

use super::{random_unit, Domain};

/// Largest violation found by a sampling verifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub samples: usize,
    pub max_violation: f64,
    pub worst: Option<Vec<f64>>,
    /// Samples skipped because a query failed (level-set non-convergence).
    pub skipped: usize,
}

impl ViolationReport {
    fn new() -> Self {
        ViolationReport { samples: 0, max_violation: f64::NEG_INFINITY, worst: None, skipped: 0 }
    }

    pub(crate) fn record<T: Real>(&mut self, violation: T, at: &[T]) {
        self.samples += 1;
        let v = violation.as_f64();
        if v > self.max_violation || self.worst.is_none() {
            self.max_violation = v;
            self.worst = Some(vector::to_f64(at));
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.skipped == 0 && self.max_violation <= tol
    }

    /// Combines two reports, keeping the worse witness.
    pub fn merge(mut self, other: ViolationReport) -> Self {
        self.samples += other.samples;
        self.skipped += other.skipped;
        if other.max_violation > self.max_violation {
            self.max_violation = other.max_violation;
            self.worst = other.worst;
        }
        self
    }
}

fn boundary_samples<T: Real>(domain: &Domain<T>, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let mut pts = domain.corner_points();
    pts.extend((0..n).map(|_| domain.sample_boundary(rng)));
    pts
}

/// `|d_E(x + r0 u) - r0|` over sampled boundary `x` and every direction `u`
/// of the normal cone, with the domain's own `r0`.
pub fn check_uebc<T: Real>(domain: &Domain<T>, n_boundary_samples: usize, rng_seed: u64) -> ViolationReport {
    check_uebc_at(domain, domain.uebc_radius(), n_boundary_samples, rng_seed)
}

/// As [`check_uebc`] with an explicit radius.
pub fn check_uebc_at<T: Real>(domain: &Domain<T>, r0: T, n_boundary_samples: usize, rng_seed: u64) -> ViolationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rep = ViolationReport::new();
    for x in boundary_samples(domain, n_boundary_samples, &mut rng) {
        let Ok(cone) = domain.normal_cone(&x) else {
            rep.skipped += 1;
            continue;
        };
        for u in cone.probe_directions() {
            let probe = vector::axpy(&x, r0, &u);
            match domain.distance(&probe) {
                Ok(d) => rep.record((d - r0).abs(), &x),
                Err(_) => rep.skipped += 1,
            }
        }
    }
    rep
}

/// `<u, y - x> - gamma |u| |y - x|^2` over sampled boundary `x`, normal
/// directions `u` at `x`, and sampled `y` in `E` (interior and boundary).
pub fn check_semiconvex_set<T: Real>(domain: &Domain<T>, gamma: T, n_samples: usize, rng_seed: u64) -> ViolationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rep = ViolationReport::new();
    let xs = boundary_samples(domain, n_samples, &mut rng);
    let mut ys: Vec<Vec<T>> = (0..n_samples).map(|_| domain.sample_point(&mut rng)).collect();
    ys.extend((0..n_samples).map(|_| domain.sample_boundary(&mut rng)));
    ys.extend(domain.corner_points());
    for x in &xs {
        let Ok(cone) = domain.normal_cone(x) else {
            rep.skipped += 1;
            continue;
        };
        for u in cone.probe_directions() {
            for y in &ys {
                let d = vector::sub(y, x);
                let v = dot(&u, &d) - gamma * vector::norm(&u) * dot(&d, &d);
                rep.record(v, x);
            }
        }
    }
    rep
}

const DROP_RAYS: usize = 24;
const DROP_STEPS: usize = 10;
const DROP_OFFSETS: usize = 60;

/// Drop violation for apex `x` and ball centre `c`: how far the ball or the
/// convex hull of `{x}` and the ball sticks out of `E`.
fn drop_violation<T: Real>(domain: &Domain<T>, x: &[T], c: &[T], r: T, rays: &[Vec<T>]) -> Option<T> {
    let bd = domain.boundary_distance(c).ok()?;
    let inside = domain.distance(c).ok()? <= T::zero();
    let mut worst = if inside { (r - bd).max(T::zero()) } else { r + bd };
    if worst > T::zero() {
        return Some(worst);
    }
    for w in rays {
        let tip = vector::axpy(c, r, w);
        for j in 1..=DROP_STEPS {
            let t = T::of_usize(j) / T::of_usize(DROP_STEPS);
            let p: Vec<T> = x.iter().zip(&tip).map(|(&a, &b)| a + t * (b - a)).collect();
            worst = worst.max(domain.distance(&p).ok()?);
        }
    }
    Some(worst)
}

/// For sampled `x` in `E`, searches the registered drop direction for a
/// shift `|v| <= h0` whose drop `conv({x} U B(x + v, r0))` lies in `E`, and
/// reports the smallest violation found per point.
pub fn check_drop<T: Real>(domain: &Domain<T>, h0: T, r0: T, n_samples: usize, rng_seed: u64) -> ViolationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rep = ViolationReport::new();
    let rays: Vec<Vec<T>> = (0..DROP_RAYS).map(|_| random_unit(domain.dim(), &mut rng)).collect();
    let mut xs = boundary_samples(domain, n_samples / 2, &mut rng);
    xs.extend((0..n_samples - n_samples / 2).map(|_| domain.sample_point(&mut rng)));
    for x in &xs {
        let Ok((u, preferred)) = domain.drop_direction(x, r0) else {
            rep.skipped += 1;
            continue;
        };
        let mut offsets = vec![preferred.min(h0)];
        offsets.extend((0..=DROP_OFFSETS).map(|i| h0 * T::of_usize(i) / T::of_usize(DROP_OFFSETS)));
        let mut best = T::infinity();
        for s in offsets {
            let c = vector::axpy(x, s, &u);
            match drop_violation(domain, x, &c, r0, &rays) {
                Some(v) => best = best.min(v),
                None => continue,
            }
            if best <= T::zero() {
                break;
            }
        }
        if best.is_finite() {
            rep.record(best, x);
        } else {
            rep.skipped += 1;
        }
    }
    rep
}
