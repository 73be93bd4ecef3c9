//! Uniform interior ball constructions.
//!
//! For every `y` in `E` a shift `v(y)` is produced such that
//! `B(x + v(y), lambda)` lies in `E` for all `x` in `E` with `|x - y| <= delta`,
//! and `lambda - (|v| + lambda)^2 gamma >= sigma > 0`.
//!
//! Convex kinds push `y` toward the set of points whose `r_int`-ball fits in
//! `E`; the other kinds push along the inward normals of nearby constraints.

use crate::error::{Error, Result};
use crate::scalar::vector::{self, dist, dot, norm};
use crate::scalar::Real;

use super::{hole_margin, Domain, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuibcConstruction {
    /// Parameters follow from the geometry by a containment argument.
    Constructive,
    /// Parameters were checked by sampling only.
    Empirical,
}

/// Registered interior-ball parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Suibc<T: Real> {
    pub gamma: T,
    pub delta: T,
    pub sigma: T,
    pub lambda: T,
    /// `sup |v(y)|`
    pub max_shift: T,
    pub construction: SuibcConstruction,
}

/// Fraction of the working length used for the shift, ball radius and
/// neighbourhood of the constraint-based recipe.
const SHIFT: f64 = 0.6;
const RADIUS: f64 = 0.25;
const NEIGHBOURHOOD: f64 = 0.05;
/// Keeps `(SHIFT + RADIUS)^2 * gamma * s` well below `RADIUS * s`.
const CURVATURE_CAP: f64 = 0.17;

fn convex_radius<T: Real>(shape: &Shape<T>) -> Option<(T, T)> {
    let two = T::of(2.0);
    match shape {
        Shape::HalfSpace { .. } => Some((T::one(), T::one())),
        Shape::Ball { radius, .. } => Some((*radius / two, *radius / two)),
        Shape::Box { lo, hi } => {
            let half = lo.iter().zip(hi).map(|(&a, &b)| (b - a) / two).fold(T::infinity(), T::min);
            let r = half / two;
            Some((r, r * T::of_usize(lo.len()).sqrt()))
        }
        _ => None,
    }
}

fn working_length<T: Real>(d: &Domain<T>) -> Option<T> {
    let cap = T::of(CURVATURE_CAP) / d.gamma;
    let two = T::of(2.0);
    let s = match &d.shape {
        Shape::SphericalShell { inner, outer, .. } => (*outer - *inner) / two,
        Shape::BoxMinusBall { lo, hi, hole_center, hole_radius } => {
            let half = lo.iter().zip(hi).map(|(&a, &b)| (b - a) / two).fold(T::infinity(), T::min);
            (hole_margin(lo, hi, hole_center, *hole_radius) / two).min(T::of(0.9) * half)
        }
        Shape::LevelSet(ls) => ls.half_thickness() / (T::of(SHIFT + RADIUS + NEIGHBOURHOOD) + T::of(0.1)),
        _ => return None,
    };
    Some(s.min(cap).min(T::one()))
}

pub(super) fn register<T: Real>(d: &Domain<T>) -> Option<Suibc<T>> {
    if let Some((r_int, h0)) = convex_radius(&d.shape) {
        let delta = (r_int / (T::of(2.0) * (T::one() + h0))).min(T::one());
        return Some(Suibc {
            gamma: T::zero(),
            delta,
            sigma: delta,
            lambda: delta,
            max_shift: h0 / (T::one() + h0),
            construction: SuibcConstruction::Constructive,
        });
    }
    let s = working_length(d)?;
    let a = T::of(SHIFT) * s;
    let lambda = T::of(RADIUS) * s;
    let sigma = lambda - (a + lambda) * (a + lambda) * d.gamma;
    let construction = match &d.shape {
        Shape::BoxMinusBall { .. } if d.dim > 3 => SuibcConstruction::Empirical,
        Shape::LevelSet(_) => SuibcConstruction::Empirical,
        _ => SuibcConstruction::Constructive,
    };
    Some(Suibc {
        gamma: d.gamma,
        delta: T::of(NEIGHBOURHOOD) * s,
        sigma,
        lambda,
        max_shift: a,
        construction,
    })
}

/// Normalized sum of the inward normals of box-minus-ball constraints whose
/// slack at `x` is below `s`. The flag is false when none is that close.
pub(super) fn active_inward<T: Real>(d: &Domain<T>, x: &[T], s: T) -> Result<(Vec<T>, bool)> {
    let Shape::BoxMinusBall { lo, hi, hole_center, hole_radius } = &d.shape else {
        unreachable!("active constraints only exist for box-minus-ball")
    };
    let mut acc = vec![T::zero(); d.dim];
    let mut any = false;
    for i in 0..d.dim {
        if x[i] - lo[i] < s {
            acc[i] += T::one();
            any = true;
        }
        if hi[i] - x[i] < s {
            acc[i] -= T::one();
            any = true;
        }
    }
    let r = dist(x, hole_center);
    if r - *hole_radius < s {
        if let Some(u) = vector::normalized(&vector::sub(x, hole_center)) {
            for (a, ui) in acc.iter_mut().zip(u) {
                *a += ui;
            }
            any = true;
        }
    }
    match vector::normalized(&acc) {
        Some(u) if any => Ok((u, true)),
        _ => Ok((acc, false)),
    }
}

/// Shift and radius returned for one base point.
#[derive(Debug, Clone, PartialEq)]
pub struct SuibcShift<T: Real> {
    pub v: Vec<T>,
    pub lambda: T,
}

impl<T: Real> Domain<T> {
    /// Interior-ball shift `v(y)` and radius `lambda_y` for the registered
    /// parameters. Points deep inside get `v = 0` and the largest radius that
    /// keeps the margin at least `sigma`.
    pub fn suibc_direction(&self, y: &[T]) -> Result<SuibcShift<T>> {
        self.check_dim(y)?;
        let p = self.suibc.as_ref().ok_or(Error::NoDirection("no interior-ball construction registered"))?;
        let v = self.suibc_shift(y)?;
        let mut lambda = p.lambda;
        if v.iter().all(|&c| c == T::zero()) {
            let bd = self.boundary_distance(y)?;
            let cap = if p.gamma > T::zero() { T::one() / (T::of(2.0) * p.gamma) } else { T::infinity() };
            let deep = (bd - p.delta).min(T::one()).min(cap);
            if deep > lambda {
                lambda = deep;
            }
        }
        Ok(SuibcShift { v, lambda })
    }

    fn suibc_shift(&self, y: &[T]) -> Result<Vec<T>> {
        let two = T::of(2.0);
        if let Some((r_int, h0)) = convex_radius(&self.shape) {
            let t = T::one() / (T::one() + h0);
            let target: Vec<T> = match &self.shape {
                Shape::HalfSpace { normal, offset } => {
                    let slack = *offset - dot(normal, y);
                    vector::axpy(y, -(r_int - slack).max(T::zero()), normal)
                }
                Shape::Ball { center, radius } => {
                    let inner = *radius - r_int;
                    let r = dist(y, center);
                    if r > inner {
                        let mut out = vec![T::zero(); self.dim];
                        super::radial_into(center, y, r, inner, &mut out);
                        out
                    } else {
                        y.to_vec()
                    }
                }
                Shape::Box { lo, hi } => y
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(&yi, (&a, &b))| yi.max(a + r_int).min(b - r_int))
                    .collect(),
                _ => unreachable!(),
            };
            return Ok(vector::scale(&vector::sub(&target, y), t));
        }
        let Some(p) = &self.suibc else {
            return Err(Error::NoDirection("no interior-ball construction registered"));
        };
        let a = p.max_shift;
        let s = a / T::of(SHIFT);
        Ok(match &self.shape {
            Shape::SphericalShell { center, inner, outer } => {
                let mid = (*inner + *outer) / two;
                let r = dist(y, center);
                let step = (mid - r).max(-a).min(a);
                vector::scale(&super::radial_unit(center, y), step)
            }
            Shape::BoxMinusBall { .. } => {
                let (u, active) = active_inward(self, y, s)?;
                if active {
                    vector::scale(&u, a)
                } else {
                    vec![T::zero(); self.dim]
                }
            }
            Shape::LevelSet(ls) => {
                let depth = self.boundary_distance(y)?;
                let step = (a - depth).max(T::zero()).min(a);
                if step == T::zero() {
                    vec![T::zero(); self.dim]
                } else {
                    let (b, _) = ls.nearest_boundary(y)?;
                    let n = ls.unit_normal(&b)?;
                    vector::scale(&n, -step)
                }
            }
            _ => unreachable!(),
        })
    }

    /// `lambda_y - (|v| + lambda_y)^2 gamma` at `y`.
    pub fn suibc_margin(&self, y: &[T]) -> Result<T> {
        let p = self.suibc.as_ref().ok_or(Error::NoDirection("no interior-ball construction registered"))?;
        let sh = self.suibc_direction(y)?;
        let nv = norm(&sh.v);
        Ok(sh.lambda - (nv + sh.lambda) * (nv + sh.lambda) * p.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive sampled check of the interior-ball property.
    fn verify(d: &Domain<f64>, n: usize) {
        let p = d.suibc().unwrap().clone();
        assert!(p.sigma > 0.0);
        assert!(p.lambda - (p.max_shift + p.lambda).powi(2) * p.gamma >= p.sigma - 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for i in 0..n {
            let y = if i % 2 == 0 { d.sample_boundary(&mut rng) } else { d.sample_point(&mut rng) };
            let sh = d.suibc_direction(&y).unwrap();
            let v = sh.v.clone();
            assert!(norm(&v) <= p.max_shift + 1e-12);
            assert!(d.suibc_margin(&y).unwrap() >= p.sigma - 1e-12);
            for _ in 0..8 {
                let dir = super::super::random_unit::<f64, _>(d.dim(), &mut rng);
                let x = vector::axpy(&y, p.delta, &dir);
                let x = if d.distance(&x).unwrap() > 0.0 { d.project(&x).unwrap() } else { x };
                let c = vector::axpy(&x, 1.0, &v);
                assert_eq!(d.distance(&c).unwrap(), 0.0, "center {c:?} left the domain");
                let bd = d.boundary_distance(&c).unwrap();
                assert!(bd >= sh.lambda - 1e-9, "ball radius {bd} < {} at y={y:?}", sh.lambda);
            }
        }
    }

    #[test]
    fn ball_example_uses_equal_constants() {
        let d = Domain::ball(vec![0.0, 0.0], 2.0).unwrap();
        let p = d.suibc().unwrap();
        assert_eq!(p.lambda, p.delta);
        assert_eq!(p.sigma, p.delta);
        let sh = d.suibc_direction(&[2.0, 0.0]).unwrap();
        assert!(sh.v[0] < 0.0 && sh.v[1] == 0.0);
        assert_eq!(sh.lambda, p.delta);
    }

    #[test]
    fn deep_points_get_zero_shift() {
        let d = Domain::ball(vec![0.0, 0.0], 5.0).unwrap();
        let sh = d.suibc_direction(&[0.5, 0.0]).unwrap();
        assert_eq!(sh.v, vec![0.0, 0.0]);
        assert_eq!(sh.lambda, 1.0);
    }

    #[test]
    fn shell_inner_point_moves_outward() {
        let d = Domain::<f64>::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap();
        let sh = d.suibc_direction(&[1.0, 0.0]).unwrap();
        assert!(sh.v[0] > 0.0 && sh.v[1].abs() < 1e-15);
        assert!(sh.v[0] <= 1.0);
    }

    #[test]
    fn convex_kinds() {
        verify(&Domain::ball(vec![0.0, 0.0], 1.0).unwrap(), 400);
        verify(&Domain::new_box(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 1.0]).unwrap(), 400);
        verify(&Domain::half_space(vec![1.0, 1.0], 0.5).unwrap(), 400);
    }

    #[test]
    fn shell_and_box_minus_ball() {
        verify(&Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap(), 400);
        verify(&Domain::spherical_shell(vec![0.0, 0.0, 0.0], 0.5, 0.8).unwrap(), 400);
        verify(&Domain::box_minus_ball(vec![-2.0, -2.0], vec![2.0, 2.0], vec![0.0, 0.0], 1.0).unwrap(), 400);
        verify(
            &Domain::box_minus_ball(vec![-2.0, -2.0, -2.0], vec![2.0, 2.0, 2.0], vec![0.3, 0.0, 0.0], 1.0).unwrap(),
            400,
        );
    }

    #[test]
    fn level_set_annulus() {
        let ls = super::super::LevelSet::smoothed_annulus(vec![0.0, 0.0], 1.0, 2.0).unwrap();
        let d = Domain::level_set(ls).unwrap();
        assert_eq!(d.suibc().unwrap().construction, SuibcConstruction::Empirical);
        verify(&d, 100);
    }
}
