//! Potentials `phi = I_E + g` with `g` smooth on a neighbourhood of `E`.
//!
//! Such a `phi` is `(rho, gamma)`-semiconvex with `gamma = 1 / (2 r0)` and
//! `rho = L / (2 r0) + rho_g`, where `L` bounds `|grad g|` on `E` and `rho_g`
//! is the semiconvexity defect of `g` itself (half the negative part of the
//! smallest Hessian eigenvalue).

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Domain, ViolationReport};
use crate::scalar::vector::{self, dot, norm};
use crate::scalar::Real;

/// Bilinear interpolant of values on a rectangular 2-D grid; clamped outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2<T: Real> {
    xs: Vec<T>,
    ys: Vec<T>,
    /// `values[i * ys.len() + j] = g(xs[i], ys[j])`
    values: Vec<T>,
}

impl<T: Real> Grid2<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>, values: Vec<T>) -> Result<Self> {
        let inc = |v: &[T]| v.len() >= 2 && v.windows(2).all(|w| w[0] < w[1]);
        if !inc(&xs) || !inc(&ys) {
            return Err(Error::InvalidArgument("grid axes need two or more increasing nodes".into()));
        }
        if values.len() != xs.len() * ys.len() || !vector::all_finite(&values) {
            return Err(Error::InvalidArgument("grid values malformed".into()));
        }
        Ok(Grid2 { xs, ys, values })
    }

    fn cell(axis: &[T], v: T) -> (usize, T, bool) {
        let n = axis.len();
        if v <= axis[0] {
            return (0, T::zero(), true);
        }
        if v >= axis[n - 1] {
            return (n - 2, T::one(), true);
        }
        let i = axis.partition_point(|&a| a <= v) - 1;
        let i = i.min(n - 2);
        (i, (v - axis[i]) / (axis[i + 1] - axis[i]), false)
    }

    fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.ys.len() + j]
    }

    fn value(&self, x: &[T]) -> T {
        let (i, u, _) = Self::cell(&self.xs, x[0]);
        let (j, w, _) = Self::cell(&self.ys, x[1]);
        let one = T::one();
        (one - u) * (one - w) * self.at(i, j)
            + u * (one - w) * self.at(i + 1, j)
            + (one - u) * w * self.at(i, j + 1)
            + u * w * self.at(i + 1, j + 1)
    }

    fn gradient(&self, x: &[T], out: &mut [T]) {
        let (i, u, cx) = Self::cell(&self.xs, x[0]);
        let (j, w, cy) = Self::cell(&self.ys, x[1]);
        let one = T::one();
        let hx = self.xs[i + 1] - self.xs[i];
        let hy = self.ys[j + 1] - self.ys[j];
        let dx = ((one - w) * (self.at(i + 1, j) - self.at(i, j)) + w * (self.at(i + 1, j + 1) - self.at(i, j + 1))) / hx;
        let dy = ((one - u) * (self.at(i, j + 1) - self.at(i, j)) + u * (self.at(i + 1, j + 1) - self.at(i + 1, j))) / hy;
        out[0] = if cx { T::zero() } else { dx };
        out[1] = if cy { T::zero() } else { dy };
    }

    /// Bound on `|grad g|`: per cell the partials are affine, so their
    /// extremes sit at the cell corners.
    fn gradient_bound(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.xs.len() - 1 {
            for j in 0..self.ys.len() - 1 {
                let hx = self.xs[i + 1] - self.xs[i];
                let hy = self.ys[j + 1] - self.ys[j];
                let gx0 = ((self.at(i + 1, j) - self.at(i, j)) / hx).abs();
                let gx1 = ((self.at(i + 1, j + 1) - self.at(i, j + 1)) / hx).abs();
                let gy0 = ((self.at(i, j + 1) - self.at(i, j)) / hy).abs();
                let gy1 = ((self.at(i + 1, j + 1) - self.at(i + 1, j)) / hy).abs();
                let gx = gx0.max(gx1);
                let gy = gy0.max(gy1);
                best = best.max((gx * gx + gy * gy).sqrt());
            }
        }
        best
    }
}

/// The smooth part `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothPart<T: Real> {
    Zero,
    /// `g(x) = <a, x>`
    Linear { a: Vec<T> },
    /// `g(x) = x^T Q x / 2 + <b, x>`, `Q` row-major; its symmetric part is used.
    Quadratic { q: Vec<T>, b: Vec<T> },
    /// Bilinear interpolation on a 2-D grid.
    Tabulated(Grid2<T>),
}

impl<T: Real> SmoothPart<T> {
    /// Built-in entries: `zero`, `tilt` (`g = x1 / 2`), `bowl` (`g = |x|^2 / 2`),
    /// `saddle` (`g = (x1^2 - x2^2) / 4`, `d >= 2`).
    pub fn catalog(name: &str, dim: usize) -> Result<Self> {
        let eye = |c: f64| {
            let mut q = vec![T::zero(); dim * dim];
            for i in 0..dim {
                q[i * dim + i] = T::of(c);
            }
            q
        };
        Ok(match name {
            "zero" => SmoothPart::Zero,
            "tilt" => {
                let mut a = vec![T::zero(); dim];
                a[0] = T::of(0.5);
                SmoothPart::Linear { a }
            }
            "bowl" => SmoothPart::Quadratic { q: eye(1.0), b: vec![T::zero(); dim] },
            "saddle" if dim >= 2 => {
                let mut q = vec![T::zero(); dim * dim];
                q[0] = T::of(0.5);
                q[dim + 1] = T::of(-0.5);
                SmoothPart::Quadratic { q, b: vec![T::zero(); dim] }
            }
            other => return Err(Error::InvalidArgument(format!("unknown smooth-part catalog entry {other:?}"))),
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SmoothPart::Zero)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        let ok = match self {
            SmoothPart::Zero => true,
            SmoothPart::Linear { a } => a.len() == dim,
            SmoothPart::Quadratic { q, b } => q.len() == dim * dim && b.len() == dim,
            SmoothPart::Tabulated(_) => dim == 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("smooth part does not match dimension {dim}")))
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            SmoothPart::Zero => T::zero(),
            SmoothPart::Linear { a } => dot(a, x),
            SmoothPart::Quadratic { q, b } => {
                let d = x.len();
                let mut s = T::zero();
                for i in 0..d {
                    for j in 0..d {
                        s += x[i] * q[i * d + j] * x[j];
                    }
                }
                s / T::of(2.0) + dot(b, x)
            }
            SmoothPart::Tabulated(g) => g.value(x),
        }
    }

    pub fn gradient_into(&self, x: &[T], out: &mut [T]) {
        match self {
            SmoothPart::Zero => out.iter_mut().for_each(|o| *o = T::zero()),
            SmoothPart::Linear { a } => out.copy_from_slice(a),
            SmoothPart::Quadratic { q, b } => {
                let d = x.len();
                let half = T::of(0.5);
                for i in 0..d {
                    let mut s = b[i];
                    for j in 0..d {
                        s += half * (q[i * d + j] + q[j * d + i]) * x[j];
                    }
                    out[i] = s;
                }
            }
            SmoothPart::Tabulated(g) => g.gradient(x, out),
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.gradient_into(x, &mut out);
        out
    }

    /// `sup_E |grad g|`, given `sup_E |x|`.
    fn lipschitz_bound(&self, radius: Option<T>) -> Result<T> {
        Ok(match self {
            SmoothPart::Zero => T::zero(),
            SmoothPart::Linear { a } => norm(a),
            SmoothPart::Quadratic { q, b } => {
                let frob = q.iter().map(|&v| v * v).sum::<T>().sqrt();
                if frob == T::zero() {
                    norm(b)
                } else {
                    let r = radius.ok_or_else(|| {
                        Error::InvalidArgument("quadratic g on an unbounded domain needs an explicit L".into())
                    })?;
                    frob * r + norm(b)
                }
            }
            SmoothPart::Tabulated(g) => g.gradient_bound(),
        })
    }

    /// Half the negative part of a Gershgorin lower bound on the Hessian's
    /// smallest eigenvalue; zero for affine `g`.
    fn hessian_defect(&self) -> T {
        match self {
            SmoothPart::Quadratic { q, .. } => {
                let d = (q.len() as f64).sqrt() as usize;
                let half = T::of(0.5);
                let mut lmin = T::infinity();
                for i in 0..d {
                    let mut off = T::zero();
                    for j in (0..d).filter(|&j| j != i) {
                        off += (half * (q[i * d + j] + q[j * d + i])).abs();
                    }
                    lmin = lmin.min(q[i * d + i] - off);
                }
                (-lmin).max(T::zero()) / T::of(2.0)
            }
            _ => T::zero(),
        }
    }
}

/// Value of `phi`: finite on `E`, `+inf` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialValue<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> PotentialValue<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            PotentialValue::Finite(v) => Some(v),
            PotentialValue::Infinite => None,
        }
    }
}

/// Element `(base, value)` of the graph of the Fréchet subdifferential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subgradient<T: Real> {
    pub base: Vec<T>,
    pub value: Vec<T>,
    pub normal_part: Vec<T>,
    pub smooth_part_grad: Vec<T>,
}

/// `phi = I_E + g` with its semiconvexity constants.
#[derive(Debug, Clone)]
pub struct SemiconvexPotential<T: Real> {
    domain: Domain<T>,
    smooth: SmoothPart<T>,
    lipschitz_l: T,
    rho: T,
    gamma: T,
}

impl<T: Real> SemiconvexPotential<T> {
    /// `phi = I_E`.
    pub fn indicator(domain: Domain<T>) -> Self {
        let gamma = domain.semiconvexity_gamma();
        SemiconvexPotential { domain, smooth: SmoothPart::Zero, lipschitz_l: T::zero(), rho: T::zero(), gamma }
    }

    /// Defaulted `L`, `rho = L / (2 r0) + rho_g`, `gamma = 1 / (2 r0)`.
    pub fn new(domain: Domain<T>, smooth: SmoothPart<T>) -> Result<Self> {
        Self::with_overrides(domain, smooth, None, None, None)
    }

    pub fn with_overrides(
        domain: Domain<T>,
        smooth: SmoothPart<T>,
        lipschitz_l: Option<T>,
        rho: Option<T>,
        gamma: Option<T>,
    ) -> Result<Self> {
        smooth.check_dim(domain.dim())?;
        let l = match lipschitz_l {
            Some(l) => l,
            None => smooth.lipschitz_bound(domain.bounding_radius())?,
        };
        let r0 = domain.uebc_radius();
        let two = T::of(2.0);
        let rho = rho.unwrap_or(l / (two * r0) + smooth.hessian_defect());
        let gamma = gamma.unwrap_or(T::one() / (two * r0));
        for (v, what) in [(l, "L"), (rho, "rho"), (gamma, "gamma")] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(SemiconvexPotential { domain, smooth, lipschitz_l: l, rho, gamma })
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn smooth_part(&self) -> &SmoothPart<T> {
        &self.smooth
    }

    pub fn lipschitz_l(&self) -> T {
        self.lipschitz_l
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn eval(&self, x: &[T]) -> Result<PotentialValue<T>> {
        if self.domain.distance(x)? <= self.domain.boundary_tol() {
            Ok(PotentialValue::Finite(self.smooth.value(x)))
        } else {
            Ok(PotentialValue::Infinite)
        }
    }

    /// `grad g(x) + magnitude * n(x)` on the boundary, `grad g(x)` inside.
    /// At box corners `n(x)` is the normalized sum of the cone generators.
    pub fn subgradient(&self, x: &[T], normal_magnitude: T) -> Result<Subgradient<T>> {
        let tol = self.domain.boundary_tol();
        let d = self.domain.distance(x)?;
        if d > tol {
            return Err(Error::OutsideDomain { distance: d.as_f64() });
        }
        if !(normal_magnitude >= T::zero()) {
            return Err(Error::InvalidArgument("normal magnitude must be nonnegative".into()));
        }
        let grad = self.smooth.gradient(x);
        let normal_part = if self.domain.boundary_distance(x)? <= tol {
            vector::scale(&self.domain.normal_cone(x)?.representative(), normal_magnitude)
        } else {
            vec![T::zero(); x.len()]
        };
        let value = vector::axpy(&grad, T::one(), &normal_part);
        Ok(Subgradient { base: x.to_vec(), value, normal_part, smooth_part_grad: grad })
    }

    /// Random subgradients: half at boundary points with magnitudes in
    /// `[0, max_magnitude]`, half at interior points.
    pub fn sample_subgradients<R: Rng + ?Sized>(&self, n: usize, max_magnitude: T, rng: &mut R) -> Vec<Subgradient<T>> {
        let mut out = Vec::with_capacity(n);
        let mut pts = self.domain.corner_points();
        pts.truncate(n / 4);
        while pts.len() < n {
            if pts.len().is_multiple_of(2) {
                pts.push(self.domain.sample_boundary(rng));
            } else {
                pts.push(self.domain.sample_point(rng));
            }
        }
        for x in pts {
            let m = max_magnitude * T::of(rng.random::<f64>());
            if let Ok(s) = self.subgradient(&x, m) {
                out.push(s);
            }
        }
        out
    }
}

/// Largest `<v, y - x> + phi(x) - phi(y) - (rho + gamma |v|) |y - x|^2` over
/// pairs `(x, v)` and probes `y`. Probes outside `E` make the inequality
/// vacuous and are skipped.
pub fn check_subdiff_inequality<T: Real>(
    phi: &SemiconvexPotential<T>,
    pairs: &[Subgradient<T>],
    probes: &[Vec<T>],
    rho: T,
    gamma: T,
) -> Result<ViolationReport> {
    let values: Vec<Option<T>> = probes
        .iter()
        .map(|y| phi.eval(y).map(PotentialValue::finite))
        .collect::<Result<_>>()?;
    let mut rep = ViolationReport { samples: 0, max_violation: f64::NEG_INFINITY, worst: None, skipped: 0 };
    for p in pairs {
        let Some(fx) = phi.eval(&p.base)?.finite() else {
            return Err(Error::OutsideDomain { distance: phi.domain().distance(&p.base)?.as_f64() });
        };
        let nv = norm(&p.value);
        for (y, fy) in probes.iter().zip(&values) {
            let Some(fy) = fy else { continue };
            let d = vector::sub(y, &p.base);
            let v = dot(&p.value, &d) + fx - *fy - (rho + gamma * nv) * dot(&d, &d);
            rep.record(v, &p.base);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shell() -> Domain<f64> {
        Domain::spherical_shell(vec![0.0, 0.0], 1.0, 2.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let ball = SemiconvexPotential::indicator(Domain::ball(vec![0.0, 0.0], 1.0).unwrap());
        assert_eq!(ball.eval(&[0.0, 0.0]).unwrap(), PotentialValue::Finite(0.0));
        assert_eq!(ball.eval(&[2.0, 0.0]).unwrap(), PotentialValue::Infinite);
        let lin = SemiconvexPotential::new(shell(), SmoothPart::Linear { a: vec![1.0, 0.0] }).unwrap();
        assert_eq!(lin.eval(&[1.5, 0.0]).unwrap(), PotentialValue::Finite(1.5));
    }

    #[test]
    fn subgradient_examples() {
        let ball = SemiconvexPotential::indicator(Domain::ball(vec![0.0, 0.0], 1.0).unwrap());
        assert_eq!(ball.subgradient(&[1.0, 0.0], 2.0).unwrap().value, vec![2.0, 0.0]);
        let bowl = SemiconvexPotential::new(Domain::ball(vec![0.0, 0.0], 1.0).unwrap(), SmoothPart::catalog("bowl", 2).unwrap())
            .unwrap();
        assert_eq!(bowl.subgradient(&[0.5, 0.0], 7.0).unwrap().value, vec![0.5, 0.0]);
        let sh = SemiconvexPotential::indicator(shell());
        assert_eq!(sh.subgradient(&[1.0, 0.0], 1.0).unwrap().value, vec![-1.0, 0.0]);
        assert!(matches!(sh.subgradient(&[0.5, 0.0], 1.0), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn defaults_follow_r0() {
        let p = SemiconvexPotential::new(shell(), SmoothPart::Linear { a: vec![0.0, 3.0] }).unwrap();
        assert_eq!(p.lipschitz_l(), 3.0);
        assert_eq!(p.rho(), 1.5);
        assert_eq!(p.gamma(), 0.5);
        assert!(SemiconvexPotential::new(
            Domain::half_space(vec![1.0], 0.0).unwrap(),
            SmoothPart::Quadratic { q: vec![1.0], b: vec![0.0] }
        )
        .is_err());
    }

    #[test]
    fn shell_inequality_tight_and_failing() {
        let sh = SemiconvexPotential::indicator(shell());
        let pair = sh.subgradient(&[1.0, 0.0], 1.0).unwrap();
        let probes: Vec<Vec<f64>> = (0..200).map(|i| {
            let th = i as f64 * 0.031;
            vec![th.cos(), th.sin()]
        }).collect();
        let ok = check_subdiff_inequality(&sh, std::slice::from_ref(&pair), &probes, 0.0, 0.5).unwrap();
        assert!(ok.max_violation <= 1e-12, "{ok:?}");
        let bad = check_subdiff_inequality(&sh, &[pair], &probes, 0.0, 0.3).unwrap();
        assert!(bad.max_violation > 0.0);
    }

    #[test]
    fn convex_inequality_holds_without_defect() {
        let ball = SemiconvexPotential::indicator(Domain::ball(vec![0.0, 0.0], 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pairs = ball.sample_subgradients(100, 3.0, &mut rng);
        let probes: Vec<Vec<f64>> = (0..100).map(|_| ball.domain().sample_point(&mut rng)).collect();
        let rep = check_subdiff_inequality(&ball, &pairs, &probes, 0.0, 0.0).unwrap();
        assert!(rep.max_violation <= 1e-12);
    }

    #[test]
    fn tabulated_gradient_matches_cell_slopes() {
        let g = Grid2::<f64>::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0], vec![0.0, 1.0, 1.0, 3.0, 4.0, 2.0]).unwrap();
        let s = SmoothPart::Tabulated(g);
        // g(x, y) on the first cell: (1-u)(1-w)*0 + u(1-w)*1 + (1-u)w*1 + uw*3
        let x = [0.25, 0.5];
        let want = 0.25 * 0.5 * 1.0 + 0.75 * 0.5 * 1.0 + 0.25 * 0.5 * 3.0;
        assert!((s.value(&x) - want).abs() < 1e-15);
        let h = 1e-6;
        let gx = (s.value(&[x[0] + h, x[1]]) - s.value(&[x[0] - h, x[1]])) / (2.0 * h);
        assert!((s.gradient(&x)[0] - gx).abs() < 1e-8);
    }
}
