//! Sublevel sets `{ phi <= 0 }` of a C^{1,1} function with unit gradient on
//! the zero level.
//!
//! Nearest points are found by tangential descent on the zero level set,
//! started from the closest point of a precomputed boundary cloud. Each
//! iterate is retracted onto `phi = 0` with Newton steps along the gradient.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::vector::{self, dist_sq, dot, norm};
use crate::scalar::Real;

type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

const CLOUD_SIZE: usize = 4096;
const MAX_DESCENT: usize = 400;
const MAX_NEWTON: usize = 60;

#[derive(Clone)]
pub struct LevelSet<T: Real> {
    name: String,
    dim: usize,
    phi: ScalarFn<T>,
    grad: GradFn<T>,
    hessian_bound: T,
    bbox_lo: Vec<T>,
    bbox_hi: Vec<T>,
    convex: bool,
    half_thickness: T,
    /// flat, `dim` entries per boundary point
    cloud: Vec<T>,
}

impl<T: Real> LevelSet<T> {
    /// `bbox` must contain `E` with some room; `hessian_bound` bounds the
    /// Hessian of `phi` near the zero level. `half_thickness` is the depth of
    /// the deepest interior points (half the narrowest width of `E`).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        phi: ScalarFn<T>,
        grad: GradFn<T>,
        hessian_bound: T,
        bbox_lo: Vec<T>,
        bbox_hi: Vec<T>,
        convex: bool,
        half_thickness: T,
    ) -> Result<Self> {
        let dim = bbox_lo.len();
        if dim == 0 || bbox_hi.len() != dim {
            return Err(Error::InvalidDomain("level-set bounding box is malformed".into()));
        }
        if !(hessian_bound > T::zero() && hessian_bound.is_finite()) {
            return Err(Error::InvalidDomain("level-set Hessian bound must be positive".into()));
        }
        let mut ls = LevelSet {
            name: name.into(),
            dim,
            phi,
            grad,
            hessian_bound,
            bbox_lo,
            bbox_hi,
            convex,
            half_thickness,
            cloud: Vec::new(),
        };
        ls.build_cloud()?;
        Ok(ls)
    }

    /// `phi(x) = (|x - c|^2 - R^2) / (2R)`
    pub fn smoothed_disk(center: Vec<T>, radius: T) -> Result<Self> {
        let c1 = center.clone();
        let c2 = center.clone();
        let two = T::of(2.0);
        let phi: ScalarFn<T> = Arc::new(move |x| (dist_sq(x, &c1) - radius * radius) / (two * radius));
        let grad: GradFn<T> = Arc::new(move |x, g| {
            for ((gi, &xi), &ci) in g.iter_mut().zip(x).zip(&c2) {
                *gi = (xi - ci) / radius;
            }
        });
        let pad = radius * T::of(1.5);
        let lo = center.iter().map(|&c| c - pad).collect();
        let hi = center.iter().map(|&c| c + pad).collect();
        Self::new("smoothed-disk", phi, grad, T::one() / radius, lo, hi, true, radius)
    }

    /// `phi(x) = ((|x - c| - m)^2 - w^2) / (2w)` with `m`, `w` the mid radius
    /// and half-width of `[inner, outer]`.
    pub fn smoothed_annulus(center: Vec<T>, inner: T, outer: T) -> Result<Self> {
        if !(inner > T::zero() && inner < outer) {
            return Err(Error::InvalidDomain("annulus needs 0 < inner < outer".into()));
        }
        let two = T::of(2.0);
        let m = (inner + outer) / two;
        let w = (outer - inner) / two;
        let c1 = center.clone();
        let c2 = center.clone();
        let phi: ScalarFn<T> = Arc::new(move |x| {
            let r = vector::dist(x, &c1);
            ((r - m) * (r - m) - w * w) / (two * w)
        });
        let grad: GradFn<T> = Arc::new(move |x, g| {
            let r = vector::dist(x, &c2);
            let f = (r - m) / (w * r);
            for ((gi, &xi), &ci) in g.iter_mut().zip(x).zip(&c2) {
                *gi = (xi - ci) * f;
            }
        });
        let bound = (T::one() / w).max(T::one() / inner);
        let pad = outer * T::of(1.25);
        let lo = center.iter().map(|&c| c - pad).collect();
        let hi = center.iter().map(|&c| c + pad).collect();
        Self::new("smoothed-annulus", phi, grad, bound, lo, hi, false, w)
    }

    /// Box `[lo, hi]` with corners rounded to radius `rc`:
    /// `phi(x) = dist(x, [lo + rc, hi - rc]) - rc`.
    pub fn smoothed_box(lo: Vec<T>, hi: Vec<T>, rc: T) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(&a, &b)| !(b - a > T::of(2.0) * rc)) {
            return Err(Error::InvalidDomain("smoothed box needs hi - lo > 2 rc".into()));
        }
        if !(rc > T::zero()) {
            return Err(Error::InvalidDomain("corner radius must be positive".into()));
        }
        let ilo: Vec<T> = lo.iter().map(|&a| a + rc).collect();
        let ihi: Vec<T> = hi.iter().map(|&b| b - rc).collect();
        let (l1, h1, l2, h2) = (ilo.clone(), ihi.clone(), ilo, ihi);
        let phi: ScalarFn<T> = Arc::new(move |x| {
            let mut s = T::zero();
            for ((&a, &b), &xi) in l1.iter().zip(&h1).zip(x) {
                let e = (a - xi).max(xi - b).max(T::zero());
                s += e * e;
            }
            s.sqrt() - rc
        });
        let grad: GradFn<T> = Arc::new(move |x, g| {
            let mut s = T::zero();
            for (((gi, &a), &b), &xi) in g.iter_mut().zip(&l2).zip(&h2).zip(x) {
                *gi = if xi < a {
                    xi - a
                } else if xi > b {
                    xi - b
                } else {
                    T::zero()
                };
                s += *gi * *gi;
            }
            let s = s.sqrt();
            if s > T::zero() {
                for gi in g.iter_mut() {
                    *gi /= s;
                }
            }
        });
        let half = lo.iter().zip(&hi).map(|(&a, &b)| (b - a) / T::of(2.0)).fold(T::infinity(), T::min);
        let pad = rc;
        let blo = lo.iter().map(|&a| a - pad).collect();
        let bhi = hi.iter().map(|&b| b + pad).collect();
        Self::new("smoothed-box", phi, grad, T::one() / rc, blo, bhi, true, half)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hessian_bound(&self) -> T {
        self.hessian_bound
    }

    pub fn bbox_lo(&self) -> &[T] {
        &self.bbox_lo
    }

    pub fn bbox_hi(&self) -> &[T] {
        &self.bbox_hi
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn half_thickness(&self) -> T {
        self.half_thickness
    }

    pub fn scale(&self) -> T {
        self.bbox_lo
            .iter()
            .zip(&self.bbox_hi)
            .map(|(&a, &b)| b - a)
            .fold(T::zero(), T::max)
            / T::of(2.0)
    }

    pub fn phi(&self, x: &[T]) -> T {
        (self.phi)(x)
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.dim];
        (self.grad)(x, &mut g);
        g
    }

    fn tol(&self) -> T {
        T::epsilon() * T::of(64.0) * self.scale().max(T::one())
    }

    /// Newton retraction onto `phi = 0` along the gradient.
    fn retract(&self, x: &mut [T], g: &mut [T]) -> bool {
        let tol = self.tol();
        for _ in 0..MAX_NEWTON {
            let f = (self.phi)(x);
            if !f.is_finite() {
                return false;
            }
            (self.grad)(x, g);
            let gg = dot(g, g);
            if !(gg > T::epsilon()) || !gg.is_finite() {
                return false;
            }
            if f.abs() <= tol {
                return true;
            }
            let s = f / gg;
            for (xi, &gi) in x.iter_mut().zip(g.iter()) {
                *xi -= s * gi;
            }
        }
        (self.phi)(x).abs() <= tol * T::of(16.0)
    }

    fn build_cloud(&mut self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut g = vec![T::zero(); self.dim];
        let mut cloud = Vec::with_capacity(CLOUD_SIZE * self.dim);
        let mut tries = 0;
        while cloud.len() < CLOUD_SIZE * self.dim && tries < CLOUD_SIZE * 20 {
            tries += 1;
            let mut p: Vec<T> = self
                .bbox_lo
                .iter()
                .zip(&self.bbox_hi)
                .map(|(&a, &b)| a + (b - a) * T::of(rng.random::<f64>()))
                .collect();
            if self.retract(&mut p, &mut g) {
                (self.grad)(&p, &mut g);
                if (norm(&g) - T::one()).abs() > T::of(1e-6).max(T::epsilon() * T::of(1e3)) {
                    return Err(Error::InvalidDomain(format!(
                        "{}: gradient norm {} differs from 1 on the zero level",
                        self.name,
                        norm(&g)
                    )));
                }
                cloud.extend_from_slice(&p);
            }
        }
        if cloud.is_empty() {
            return Err(Error::InvalidDomain(format!("{}: zero level set not found in the box", self.name)));
        }
        self.cloud = cloud;
        Ok(())
    }

    fn nearest_cloud(&self, z: &[T]) -> Vec<T> {
        let mut best = T::infinity();
        let mut at = 0;
        for (i, p) in self.cloud.chunks_exact(self.dim).enumerate() {
            let d = dist_sq(p, z);
            if d < best {
                best = d;
                at = i;
            }
        }
        self.cloud[at * self.dim..(at + 1) * self.dim].to_vec()
    }

    fn tangential_residual(&self, b: &[T], z: &[T]) -> T {
        let n = match vector::normalized(&self.gradient(b)) {
            Some(n) => n,
            None => return T::infinity(),
        };
        let r = vector::sub(b, z);
        let rn = dot(&r, &n);
        r.iter().zip(&n).map(|(&ri, &ni)| (ri - rn * ni) * (ri - rn * ni)).sum::<T>().sqrt()
    }

    /// Nearest point of `{ phi = 0 }` to `z` and its distance.
    ///
    /// Step lengths follow Barzilai-Borwein, which recovers the curvature
    /// corrected Newton step on spheres; unit steps alone crawl when `z` sits
    /// near a centre of curvature.
    pub fn nearest_boundary(&self, z: &[T]) -> Result<(Vec<T>, T)> {
        let mut b = self.nearest_cloud(z);
        let mut g = vec![T::zero(); self.dim];
        let mut cand = vec![T::zero(); self.dim];
        let mut prev: Option<(Vec<T>, Vec<T>)> = None;
        let tol = self.tol();
        let armijo = T::of(1e-4);
        for _ in 0..MAX_DESCENT {
            (self.grad)(&b, &mut g);
            let n = vector::normalized(&g).ok_or(Error::NonConvergence { iterations: 0 })?;
            let r = vector::sub(&b, z);
            let rn = dot(&r, &n);
            let gt: Vec<T> = r.iter().zip(&n).map(|(&ri, &ni)| ri - rn * ni).collect();
            let gt2 = dot(&gt, &gt);
            if gt2.sqrt() <= tol {
                let d = norm(&r);
                return Ok((b, d));
            }
            let mut alpha = T::one();
            if let Some((pb, pg)) = &prev {
                let s = vector::sub(&b, pb);
                let y = vector::sub(&gt, pg);
                let sy = dot(&s, &y);
                if sy > T::zero() {
                    alpha = (dot(&s, &s) / sy).max(T::of(1e-3)).min(T::of(1e8));
                }
            }
            let f0 = dot(&r, &r);
            let mut moved = false;
            while alpha > T::of(1e-12) {
                for ((c, &bi), &gi) in cand.iter_mut().zip(&b).zip(&gt) {
                    *c = bi - alpha * gi;
                }
                if self.retract(&mut cand, &mut g) {
                    let f = dist_sq(&cand, z);
                    // near the optimum f stalls at rounding level; the tangential
                    // residual still contracts and decides acceptance
                    let noise = T::of(8.0) * T::epsilon() * f0;
                    if f <= f0 - armijo * alpha * gt2
                        || (f <= f0 + noise && self.tangential_residual(&cand, z) < gt2.sqrt())
                    {
                        prev = Some((b.clone(), gt));
                        b.copy_from_slice(&cand);
                        moved = true;
                        break;
                    }
                }
                alpha /= T::of(2.0);
            }
            if !moved {
                // stuck at rounding level: accept when the residual is already tiny
                if gt2.sqrt() <= tol * T::of(1e4) {
                    let d = norm(&r);
                    return Ok((b, d));
                }
                return Err(Error::NonConvergence { iterations: MAX_DESCENT });
            }
        }
        Err(Error::NonConvergence { iterations: MAX_DESCENT })
    }

    pub fn distance(&self, z: &[T]) -> Result<T> {
        if (self.phi)(z) <= T::zero() {
            return Ok(T::zero());
        }
        Ok(self.nearest_boundary(z)?.1)
    }

    pub fn project(&self, z: &[T]) -> Result<Vec<T>> {
        if (self.phi)(z) <= T::zero() {
            return Ok(z.to_vec());
        }
        Ok(self.nearest_boundary(z)?.0)
    }

    pub fn interior_boundary_distance(&self, x: &[T]) -> Result<T> {
        Ok(self.nearest_boundary(x)?.1)
    }

    pub fn unit_normal(&self, x: &[T]) -> Result<Vec<T>> {
        vector::normalized(&self.gradient(x)).ok_or(Error::NoDirection("level-set gradient vanishes"))
    }

    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let n = self.cloud.len() / self.dim;
        let i = rng.random_range(0..n);
        self.cloud[i * self.dim..(i + 1) * self.dim].to_vec()
    }
}
