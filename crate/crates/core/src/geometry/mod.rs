//! Closed domains satisfying a uniform exterior ball condition.
//!
//! A [`Domain`] answers distance, projection, boundary-distance and
//! normal-cone queries. Every analytic kind uses closed forms; level-set
//! domains go through [`LevelSet`]'s constrained nearest-point search.
//!
//! The exterior-ball radius `r0` and the semiconvexity slope `gamma` are tied
//! together: `gamma == 1 / (2 r0)` always holds for a constructed domain.

mod checks;
mod level_set;
mod suibc;

pub use checks::{
    check_drop, check_semiconvex_set, check_uebc, check_uebc_at, ViolationReport,
};
pub use level_set::LevelSet;
pub use suibc::{Suibc, SuibcConstruction, SuibcShift};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::vector::{self, dist, dot, norm};
use crate::scalar::Real;

/// Exterior-ball radius assigned to convex kinds when none is given.
/// Convex sets satisfy the condition for every radius.
pub const CONVEX_DEFAULT_UEBC: f64 = 1e6;

/// Default fraction of `r0` beyond which [`Domain::project`] refuses to work.
pub const DEFAULT_PROJECTION_SAFETY: f64 = 0.9;

/// Boundary tolerance relative to the domain length scale, floored at
/// `64 eps` of the scalar type.
pub const BOUNDARY_TOL_REL: f64 = 1e-9;

/// Geometric description of the set.
#[derive(Clone)]
pub enum Shape<T: Real> {
    /// `{ x : <normal, x> <= offset }` with `normal` the outward unit normal.
    HalfSpace { normal: Vec<T>, offset: T },
    Box { lo: Vec<T>, hi: Vec<T> },
    Ball { center: Vec<T>, radius: T },
    /// `{ x : inner <= |x - center| <= outer }`
    SphericalShell { center: Vec<T>, inner: T, outer: T },
    /// Box with an open ball removed; the ball lies strictly inside the box.
    BoxMinusBall { lo: Vec<T>, hi: Vec<T>, hole_center: Vec<T>, hole_radius: T },
    LevelSet(LevelSet<T>),
}

impl<T: Real> Shape<T> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Shape::HalfSpace { .. } => "half-space",
            Shape::Box { .. } => "box",
            Shape::Ball { .. } => "ball",
            Shape::SphericalShell { .. } => "spherical-shell",
            Shape::BoxMinusBall { .. } => "box-minus-ball",
            Shape::LevelSet(_) => "level-set",
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            Shape::HalfSpace { .. } | Shape::Box { .. } | Shape::Ball { .. } => true,
            Shape::LevelSet(ls) => ls.is_convex(),
            _ => false,
        }
    }
}

/// Outward unit normal at a boundary point.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalVector<T: Real> {
    pub direction: Vec<T>,
    pub base: Vec<T>,
}

/// External normal cone at a boundary point.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalCone<T: Real> {
    /// One-dimensional cone spanned by a unit vector.
    Ray(Vec<T>),
    /// Cone generated by several unit vectors (box corners and edges).
    Generators(Vec<Vec<T>>),
}

impl<T: Real> NormalCone<T> {
    /// Unit vector in the cone: the ray itself, or the normalized sum of
    /// the generators.
    pub fn representative(&self) -> Vec<T> {
        match self {
            NormalCone::Ray(u) => u.clone(),
            NormalCone::Generators(g) => {
                let mut s = vec![T::zero(); g[0].len()];
                for v in g {
                    for (a, &b) in s.iter_mut().zip(v) {
                        *a += b;
                    }
                }
                vector::normalized(&s).unwrap_or_else(|| g[0].clone())
            }
        }
    }

    /// Unit vectors worth probing: the ray, or every generator plus the
    /// representative.
    pub fn probe_directions(&self) -> Vec<Vec<T>> {
        match self {
            NormalCone::Ray(u) => vec![u.clone()],
            NormalCone::Generators(g) => {
                let mut out = g.clone();
                out.push(self.representative());
                out
            }
        }
    }
}

/// A closed domain `E` with its regularity parameters.
#[derive(Clone)]
pub struct Domain<T: Real> {
    shape: Shape<T>,
    dim: usize,
    uebc_radius: T,
    gamma: T,
    scale: T,
    projection_safety: T,
    suibc: Option<Suibc<T>>,
}

impl<T: Real> std::fmt::Debug for Domain<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Domain")
            .field("kind", &self.shape.kind_name())
            .field("dim", &self.dim)
            .field("uebc_radius", &self.uebc_radius)
            .field("gamma", &self.gamma)
            .finish()
    }
}

fn check_vec<T: Real>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidDomain(format!("{what} is empty")));
    }
    if !vector::all_finite(v) {
        return Err(Error::InvalidDomain(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn check_positive<T: Real>(v: T, what: &str) -> Result<()> {
    if !(v > T::zero() && v.is_finite()) {
        return Err(Error::InvalidDomain(format!("{what} must be positive and finite, got {v}")));
    }
    Ok(())
}

impl<T: Real> Domain<T> {
    fn build(shape: Shape<T>, dim: usize, uebc_radius: T, scale: T) -> Result<Self> {
        let mut d = Domain {
            shape,
            dim,
            uebc_radius,
            gamma: T::one() / (T::of(2.0) * uebc_radius),
            scale,
            projection_safety: T::of(DEFAULT_PROJECTION_SAFETY),
            suibc: None,
        };
        d.suibc = suibc::register(&d);
        Ok(d)
    }

    pub fn half_space(normal: Vec<T>, offset: T) -> Result<Self> {
        check_vec(&normal, "half-space normal")?;
        if !offset.is_finite() {
            return Err(Error::InvalidDomain("half-space offset is not finite".into()));
        }
        let n = vector::normalized(&normal)
            .ok_or_else(|| Error::InvalidDomain("half-space normal is zero".into()))?;
        // keep the same plane after normalizing the normal
        let offset = offset / norm(&normal);
        let dim = n.len();
        Self::build(Shape::HalfSpace { normal: n, offset }, dim, T::of(CONVEX_DEFAULT_UEBC), T::one())
    }

    pub fn new_box(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        check_vec(&lo, "box lo")?;
        check_vec(&hi, "box hi")?;
        if lo.len() != hi.len() {
            return Err(Error::InvalidDomain("box corners differ in dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidDomain("box needs lo < hi in every coordinate".into()));
        }
        let scale = lo.iter().zip(&hi).map(|(&a, &b)| b - a).fold(T::zero(), T::max);
        let dim = lo.len();
        Self::build(Shape::Box { lo, hi }, dim, T::of(CONVEX_DEFAULT_UEBC), scale)
    }

    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        check_vec(&center, "ball center")?;
        check_positive(radius, "ball radius")?;
        let dim = center.len();
        Self::build(Shape::Ball { center, radius }, dim, T::of(CONVEX_DEFAULT_UEBC), radius)
    }

    /// Shell between two concentric spheres. `r0` defaults to the inner radius.
    pub fn spherical_shell(center: Vec<T>, inner: T, outer: T) -> Result<Self> {
        check_vec(&center, "shell center")?;
        check_positive(inner, "shell inner radius")?;
        check_positive(outer, "shell outer radius")?;
        if !(inner < outer) {
            return Err(Error::InvalidDomain("shell needs inner < outer".into()));
        }
        let dim = center.len();
        Self::build(Shape::SphericalShell { center, inner, outer }, dim, inner, outer)
    }

    /// Box with a ball removed. `r0` defaults to the hole radius.
    pub fn box_minus_ball(lo: Vec<T>, hi: Vec<T>, hole_center: Vec<T>, hole_radius: T) -> Result<Self> {
        let bx = Self::new_box(lo, hi)?;
        check_vec(&hole_center, "hole center")?;
        check_positive(hole_radius, "hole radius")?;
        let Shape::Box { lo, hi } = bx.shape else { unreachable!() };
        if hole_center.len() != lo.len() {
            return Err(Error::InvalidDomain("hole center dimension differs from box".into()));
        }
        let margin = hole_margin(&lo, &hi, &hole_center, hole_radius);
        if !(margin > T::zero()) {
            return Err(Error::InvalidDomain("hole must lie strictly inside the box".into()));
        }
        let dim = lo.len();
        Self::build(
            Shape::BoxMinusBall { lo, hi, hole_center, hole_radius },
            dim,
            hole_radius,
            bx.scale,
        )
    }

    /// Sublevel set `{ phi <= 0 }`; `r0 = 1 / (2 M)` with `M` the Hessian bound.
    pub fn level_set(ls: LevelSet<T>) -> Result<Self> {
        let r0 = T::one() / (T::of(2.0) * ls.hessian_bound());
        let dim = ls.dim();
        let scale = ls.scale();
        Self::build(Shape::LevelSet(ls), dim, r0, scale)
    }

    /// Replaces `r0` (and with it `gamma`). Rejected when the radius exceeds
    /// what the geometry allows.
    pub fn with_uebc_radius(mut self, r0: T) -> Result<Self> {
        check_positive(r0, "uebc radius")?;
        let limit = match &self.shape {
            Shape::SphericalShell { inner, .. } => Some(*inner),
            Shape::BoxMinusBall { hole_radius, .. } => Some(*hole_radius),
            Shape::LevelSet(ls) => Some(T::one() / (T::of(2.0) * ls.hessian_bound())),
            _ => None,
        };
        if let Some(limit) = limit {
            if r0 > limit {
                return Err(Error::InvalidDomain(format!(
                    "uebc radius {r0} exceeds the admissible bound {limit} for {}",
                    self.shape.kind_name()
                )));
            }
        }
        self.uebc_radius = r0;
        self.gamma = T::one() / (T::of(2.0) * r0);
        self.suibc = suibc::register(&self);
        Ok(self)
    }

    pub fn with_projection_safety(mut self, fraction: T) -> Result<Self> {
        if !(fraction > T::zero() && fraction <= T::one()) {
            return Err(Error::InvalidArgument(format!("projection safety {fraction} not in (0, 1]")));
        }
        self.projection_safety = fraction;
        Ok(self)
    }

    pub fn shape(&self) -> &Shape<T> {
        &self.shape
    }

    pub fn kind_name(&self) -> &'static str {
        self.shape.kind_name()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn uebc_radius(&self) -> T {
        self.uebc_radius
    }

    pub fn semiconvexity_gamma(&self) -> T {
        self.gamma
    }

    pub fn suibc(&self) -> Option<&Suibc<T>> {
        self.suibc.as_ref()
    }

    /// Characteristic length used to scale tolerances.
    pub fn length_scale(&self) -> T {
        self.scale
    }

    pub fn boundary_tol(&self) -> T {
        T::of(BOUNDARY_TOL_REL).max(T::of(64.0) * T::epsilon()) * self.scale
    }

    pub fn projection_safety(&self) -> T {
        self.projection_safety
    }

    /// `sup { |x| : x in E }`, `None` when `E` is unbounded.
    pub fn bounding_radius(&self) -> Option<T> {
        match &self.shape {
            Shape::HalfSpace { .. } => None,
            Shape::Box { lo, hi } | Shape::BoxMinusBall { lo, hi, .. } => Some(corner_radius(lo, hi)),
            Shape::Ball { center, radius } => Some(norm(center) + *radius),
            Shape::SphericalShell { center, outer, .. } => Some(norm(center) + *outer),
            Shape::LevelSet(ls) => Some(corner_radius(ls.bbox_lo(), ls.bbox_hi())),
        }
    }

    fn check_dim(&self, z: &[T]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, domain has {}",
                z.len(),
                self.dim
            )));
        }
        if !vector::all_finite(z) {
            return Err(Error::InvalidArgument("point has non-finite coordinates".into()));
        }
        Ok(())
    }

    /// `d_E(z)`.
    pub fn distance(&self, z: &[T]) -> Result<T> {
        self.check_dim(z)?;
        self.distance_unchecked(z)
    }

    pub(crate) fn distance_unchecked(&self, z: &[T]) -> Result<T> {
        Ok(match &self.shape {
            Shape::HalfSpace { normal, offset } => (dot(normal, z) - *offset).max(T::zero()),
            Shape::Box { lo, hi } => box_distance(lo, hi, z),
            Shape::Ball { center, radius } => (dist(z, center) - *radius).max(T::zero()),
            Shape::SphericalShell { center, inner, outer } => {
                let r = dist(z, center);
                if r < *inner {
                    *inner - r
                } else if r > *outer {
                    r - *outer
                } else {
                    T::zero()
                }
            }
            Shape::BoxMinusBall { lo, hi, hole_center, hole_radius } => {
                let out = box_distance(lo, hi, z);
                if out > T::zero() {
                    out
                } else {
                    (*hole_radius - dist(z, hole_center)).max(T::zero())
                }
            }
            Shape::LevelSet(ls) => ls.distance(z)?,
        })
    }

    /// Membership up to the boundary tolerance.
    pub fn contains(&self, z: &[T]) -> Result<bool> {
        Ok(self.distance(z)? <= self.boundary_tol())
    }

    /// Largest distance `project` accepts.
    pub fn projection_limit(&self) -> T {
        self.projection_safety * self.uebc_radius
    }

    /// Unique nearest point `pi_E(z)`; refused when `d_E(z)` reaches the
    /// projection safety fraction of `r0`.
    pub fn project(&self, z: &[T]) -> Result<Vec<T>> {
        self.check_dim(z)?;
        let d = self.distance_unchecked(z)?;
        let limit = self.projection_limit();
        if d >= limit {
            return Err(Error::OutsideUniquenessRegion { distance: d.as_f64(), limit: limit.as_f64() });
        }
        let mut out = vec![T::zero(); self.dim];
        self.project_into(z, &mut out)?;
        Ok(out)
    }

    /// Nearest point written into `out`, without the uniqueness guard.
    /// Callers are expected to have checked `d_E(z)` already.
    pub(crate) fn project_into(&self, z: &[T], out: &mut [T]) -> Result<()> {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                let s = dot(normal, z) - *offset;
                if s > T::zero() {
                    for ((o, &zi), &ni) in out.iter_mut().zip(z).zip(normal) {
                        *o = zi - s * ni;
                    }
                } else {
                    out.copy_from_slice(z);
                }
            }
            Shape::Box { lo, hi } => clamp_into(lo, hi, z, out),
            Shape::Ball { center, radius } => {
                let r = dist(z, center);
                if r > *radius {
                    radial_into(center, z, r, *radius, out);
                } else {
                    out.copy_from_slice(z);
                }
            }
            Shape::SphericalShell { center, inner, outer } => {
                let r = dist(z, center);
                if r < *inner {
                    radial_into(center, z, r, *inner, out);
                } else if r > *outer {
                    radial_into(center, z, r, *outer, out);
                } else {
                    out.copy_from_slice(z);
                }
            }
            Shape::BoxMinusBall { lo, hi, hole_center, hole_radius } => {
                if box_distance(lo, hi, z) > T::zero() {
                    clamp_into(lo, hi, z, out);
                } else {
                    let r = dist(z, hole_center);
                    if r < *hole_radius {
                        radial_into(hole_center, z, r, *hole_radius, out);
                    } else {
                        out.copy_from_slice(z);
                    }
                }
            }
            Shape::LevelSet(ls) => {
                let p = ls.project(z)?;
                out.copy_from_slice(&p);
            }
        }
        Ok(())
    }

    /// Distance from `x` to `Bd(E)`. Equals `d_E(x)` outside `E`.
    pub fn boundary_distance(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        let d = self.distance_unchecked(x)?;
        if d > T::zero() {
            return Ok(d);
        }
        Ok(match &self.shape {
            Shape::HalfSpace { normal, offset } => *offset - dot(normal, x),
            Shape::Box { lo, hi } => box_slack(lo, hi, x),
            Shape::Ball { center, radius } => *radius - dist(x, center),
            Shape::SphericalShell { center, inner, outer } => {
                let r = dist(x, center);
                (r - *inner).min(*outer - r)
            }
            Shape::BoxMinusBall { lo, hi, hole_center, hole_radius } => {
                box_slack(lo, hi, x).min(dist(x, hole_center) - *hole_radius)
            }
            Shape::LevelSet(ls) => ls.interior_boundary_distance(x)?,
        })
    }

    /// External normal cone at a boundary point.
    pub fn normal_cone(&self, x: &[T]) -> Result<NormalCone<T>> {
        self.check_dim(x)?;
        let tol = self.boundary_tol();
        let d = self.distance_unchecked(x)?;
        if d > tol {
            return Err(Error::NotOnBoundary { distance: d.as_f64() });
        }
        let bd = self.boundary_distance(x)?;
        if bd > tol {
            return Err(Error::InteriorPoint { distance: bd.as_f64() });
        }
        Ok(match &self.shape {
            Shape::HalfSpace { normal, .. } => NormalCone::Ray(normal.clone()),
            Shape::Box { lo, hi } => box_cone(lo, hi, x, tol),
            Shape::Ball { center, .. } => NormalCone::Ray(radial_unit(center, x)),
            Shape::SphericalShell { center, inner, outer } => {
                let r = dist(x, center);
                let u = radial_unit(center, x);
                if (r - *inner).abs() <= (r - *outer).abs() {
                    NormalCone::Ray(vector::scale(&u, -T::one()))
                } else {
                    NormalCone::Ray(u)
                }
            }
            Shape::BoxMinusBall { lo, hi, hole_center, hole_radius } => {
                if (dist(x, hole_center) - *hole_radius).abs() <= tol {
                    NormalCone::Ray(vector::scale(&radial_unit(hole_center, x), -T::one()))
                } else {
                    box_cone(lo, hi, x, tol)
                }
            }
            Shape::LevelSet(ls) => NormalCone::Ray(ls.unit_normal(x)?),
        })
    }

    /// Unit outward normal; corners with a multi-dimensional cone are reported
    /// through [`Error::AmbiguousNormal`] carrying the generators.
    pub fn normal_unit(&self, x: &[T]) -> Result<NormalVector<T>> {
        match self.normal_cone(x)? {
            NormalCone::Ray(direction) => Ok(NormalVector { direction, base: x.to_vec() }),
            NormalCone::Generators(g) => Err(Error::AmbiguousNormal {
                generators: g.iter().map(|v| vector::to_f64(v)).collect(),
            }),
        }
    }

    /// Axis-aligned box used for rejection sampling. Half-spaces get a window
    /// of half-width `2 * scale` around the point of the plane nearest the origin.
    pub fn sampling_box(&self) -> (Vec<T>, Vec<T>) {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                let w = T::of(2.0) * self.scale;
                let anchor = vector::scale(normal, *offset);
                (
                    anchor.iter().map(|&a| a - w).collect(),
                    anchor.iter().map(|&a| a + w).collect(),
                )
            }
            Shape::Box { lo, hi } | Shape::BoxMinusBall { lo, hi, .. } => (lo.clone(), hi.clone()),
            Shape::Ball { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
            Shape::SphericalShell { center, outer, .. } => (
                center.iter().map(|&c| c - *outer).collect(),
                center.iter().map(|&c| c + *outer).collect(),
            ),
            Shape::LevelSet(ls) => (ls.bbox_lo().to_vec(), ls.bbox_hi().to_vec()),
        }
    }

    /// Uniform sample from `E` (restricted to the sampling window).
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let (lo, hi) = self.sampling_box();
        loop {
            let p: Vec<T> = lo
                .iter()
                .zip(&hi)
                .map(|(&a, &b)| a + (b - a) * T::of(rng.random::<f64>()))
                .collect();
            if let Ok(d) = self.distance_unchecked(&p) {
                if d <= T::zero() {
                    return p;
                }
            }
        }
    }

    /// Sample from `Bd(E)`; roughly uniform by surface measure for analytic kinds.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                let p = self.sample_point(rng);
                let s = dot(normal, &p) - *offset;
                vector::axpy(&p, -s, normal)
            }
            Shape::Box { lo, hi } => sample_box_face(lo, hi, rng),
            Shape::Ball { center, radius } => {
                vector::axpy(center, *radius, &random_unit(self.dim, rng))
            }
            Shape::SphericalShell { center, inner, outer } => {
                let d1 = T::of_usize(self.dim - 1);
                let wi = inner.powf(d1);
                let wo = outer.powf(d1);
                let r = if T::of(rng.random::<f64>()) * (wi + wo) < wi { *inner } else { *outer };
                vector::axpy(center, r, &random_unit(self.dim, rng))
            }
            Shape::BoxMinusBall { lo, hi, hole_center, hole_radius } => {
                let d1 = T::of_usize(self.dim - 1);
                let face_area = box_surface(lo, hi);
                let sphere = T::of(2.0) * T::PI() * hole_radius.powf(d1);
                if T::of(rng.random::<f64>()) * (face_area + sphere) < sphere {
                    vector::axpy(hole_center, *hole_radius, &random_unit(self.dim, rng))
                } else {
                    sample_box_face(lo, hi, rng)
                }
            }
            Shape::LevelSet(ls) => ls.sample_boundary(rng),
        }
    }

    /// Corners of box-type kinds; used by the verifiers so the multi-generator
    /// cones get exercised.
    pub fn corner_points(&self) -> Vec<Vec<T>> {
        match &self.shape {
            Shape::Box { lo, hi } | Shape::BoxMinusBall { lo, hi, .. } if self.dim <= 10 => {
                (0..1usize << self.dim)
                    .map(|mask| {
                        (0..self.dim)
                            .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                            .collect()
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Direction in which a drop of radius `radius` should run from `x`, and
    /// the preferred running length. The direction is zero when `x` already
    /// sits deep enough.
    pub fn drop_direction(&self, x: &[T], radius: T) -> Result<(Vec<T>, T)> {
        self.check_dim(x)?;
        let zero = vec![T::zero(); self.dim];
        Ok(match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                let slack = *offset - dot(normal, x);
                (vector::scale(normal, -T::one()), (radius - slack).max(T::zero()))
            }
            Shape::Box { lo, hi } => {
                let c: Vec<T> = lo.iter().zip(hi).map(|(&a, &b)| (a + b) / T::of(2.0)).collect();
                let to = vector::sub(&c, x);
                match vector::normalized(&to) {
                    Some(u) => (u, norm(&to)),
                    None => (zero, T::zero()),
                }
            }
            Shape::Ball { center, .. } => {
                let to = vector::sub(center, x);
                match vector::normalized(&to) {
                    Some(u) => (u, norm(&to)),
                    None => (zero, T::zero()),
                }
            }
            Shape::SphericalShell { center, inner, outer } => {
                let mid = (*inner + *outer) / T::of(2.0);
                let r = dist(x, center);
                let u = radial_unit(center, x);
                if r < mid {
                    (u, mid - r)
                } else {
                    (vector::scale(&u, -T::one()), r - mid)
                }
            }
            Shape::BoxMinusBall { .. } => {
                let (u, active) = suibc::active_inward(self, x, radius)?;
                if active {
                    (u, radius)
                } else {
                    (zero, T::zero())
                }
            }
            Shape::LevelSet(ls) => {
                let bd = self.boundary_distance(x)?;
                let (b, _) = ls.nearest_boundary(x)?;
                let n = ls.unit_normal(&b)?;
                (vector::scale(&n, -T::one()), (radius - bd).max(T::zero()))
            }
        })
    }
}

pub(crate) fn hole_margin<T: Real>(lo: &[T], hi: &[T], c: &[T], h: T) -> T {
    lo.iter()
        .zip(hi)
        .zip(c)
        .map(|((&a, &b), &ci)| (ci - h - a).min(b - ci - h))
        .fold(T::infinity(), T::min)
}

fn corner_radius<T: Real>(lo: &[T], hi: &[T]) -> T {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| {
            let m = a.abs().max(b.abs());
            m * m
        })
        .sum::<T>()
        .sqrt()
}

fn box_distance<T: Real>(lo: &[T], hi: &[T], z: &[T]) -> T {
    let mut s = T::zero();
    for ((&a, &b), &zi) in lo.iter().zip(hi).zip(z) {
        let e = if zi < a {
            a - zi
        } else if zi > b {
            zi - b
        } else {
            T::zero()
        };
        s += e * e;
    }
    s.sqrt()
}

/// Smallest distance from an interior point to a face.
fn box_slack<T: Real>(lo: &[T], hi: &[T], x: &[T]) -> T {
    lo.iter()
        .zip(hi)
        .zip(x)
        .map(|((&a, &b), &xi)| (xi - a).min(b - xi))
        .fold(T::infinity(), T::min)
}

fn box_surface<T: Real>(lo: &[T], hi: &[T]) -> T {
    let d = lo.len();
    let mut total = T::zero();
    for skip in 0..d {
        let mut a = T::one();
        for i in (0..d).filter(|&i| i != skip) {
            a *= hi[i] - lo[i];
        }
        total += T::of(2.0) * a;
    }
    total
}

fn clamp_into<T: Real>(lo: &[T], hi: &[T], z: &[T], out: &mut [T]) {
    for (((o, &a), &b), &zi) in out.iter_mut().zip(lo).zip(hi).zip(z) {
        *o = zi.max(a).min(b);
    }
}

/// `out = c + target * (z - c) / r`
fn radial_into<T: Real>(c: &[T], z: &[T], r: T, target: T, out: &mut [T]) {
    if r > T::zero() {
        let f = target / r;
        for ((o, &ci), &zi) in out.iter_mut().zip(c).zip(z) {
            *o = ci + (zi - ci) * f;
        }
    } else {
        // the center is equidistant from the whole sphere; any point will do
        out.copy_from_slice(c);
        out[0] += target;
    }
}

fn radial_unit<T: Real>(c: &[T], x: &[T]) -> Vec<T> {
    vector::normalized(&vector::sub(x, c)).unwrap_or_else(|| {
        let mut e = vec![T::zero(); x.len()];
        e[0] = T::one();
        e
    })
}

fn box_cone<T: Real>(lo: &[T], hi: &[T], x: &[T], tol: T) -> NormalCone<T> {
    let d = x.len();
    let mut gens = Vec::new();
    for i in 0..d {
        if (x[i] - lo[i]).abs() <= tol {
            let mut e = vec![T::zero(); d];
            e[i] = -T::one();
            gens.push(e);
        } else if (x[i] - hi[i]).abs() <= tol {
            let mut e = vec![T::zero(); d];
            e[i] = T::one();
            gens.push(e);
        }
    }
    match gens.len() {
        0 => {
            // within tolerance of the boundary but no face selected: take the nearest face
            let (i, up) = (0..d)
                .map(|i| ((x[i] - lo[i]).abs(), i, false))
                .chain((0..d).map(|i| ((hi[i] - x[i]).abs(), i, true)))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                .map(|(_, i, up)| (i, up))
                .unwrap();
            let mut e = vec![T::zero(); d];
            e[i] = if up { T::one() } else { -T::one() };
            NormalCone::Ray(e)
        }
        1 => NormalCone::Ray(gens.pop().unwrap()),
        _ => NormalCone::Generators(gens),
    }
}

pub(crate) fn random_unit<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<T> {
    loop {
        let g: Vec<T> = (0..dim).map(|_| T::of(rng.sample::<f64, _>(StandardNormal))).collect();
        if let Some(u) = vector::normalized(&g) {
            return u;
        }
    }
}

fn sample_box_face<T: Real, R: Rng + ?Sized>(lo: &[T], hi: &[T], rng: &mut R) -> Vec<T> {
    let d = lo.len();
    let mut p: Vec<T> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| a + (b - a) * T::of(rng.random::<f64>()))
        .collect();
    // face chosen proportionally to its (d-1)-volume
    let areas: Vec<T> = (0..d)
        .map(|skip| {
            (0..d).filter(|&i| i != skip).fold(T::one(), |acc, i| acc * (hi[i] - lo[i]))
        })
        .collect();
    let total: T = areas.iter().copied().sum();
    let mut u = T::of(rng.random::<f64>()) * total;
    let mut axis = d - 1;
    for (i, &a) in areas.iter().enumerate() {
        if u < a {
            axis = i;
            break;
        }
        u -= a;
    }
    p[axis] = if rng.random::<bool>() { hi[axis] } else { lo[axis] };
    p
}
