//! Dirichlet Green function `G`, its regular part `K` and the Robin function
//! `R(x) = K(x, x)` on the disk and on the annulus `a < |x| < 1`.
//!
//! Both kernels are written as sums of terms `Re F(x, w)` with `F`
//! holomorphic in the complex coordinate of `x` and in `w = y` or `w = ȳ`,
//! which gives exact first and second derivatives in both arguments.
//!
//! Annulus regular part (separation of variables, `ψ` the angle between
//! `x` and `y`):
//!
//! ```text
//! 2π K = log|x| log|y| / log a
//!      + Re log(1 - xȳ) + Re log(1 - a²/(xȳ)) - Re log(1 - a²x/y) - Re log(1 - a²y/x)
//!      + Σₙ a²ⁿ/(n(1 - a²ⁿ)) Re[(a²x/y)ⁿ + (a²y/x)ⁿ - (xȳ)ⁿ - (a²/(xȳ))ⁿ]
//! ```
//!
//! The logarithms resum the first reflections in both circles exactly, so
//! the remaining Fourier series converges at least like `a²ⁿ`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

pub type Point<T> = [T; 2];

/// Default Fourier truncation for the annulus kernel.
pub const DEFAULT_SERIES_TRUNCATION: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec<T> {
    Disk {
        disk_radius: T,
    },
    /// Outer radius is fixed to one.
    Annulus {
        inner_radius: T,
        series_truncation: usize,
    },
}

impl<T: Scalar> DomainSpec<T> {
    pub fn disk(radius: T) -> Result<Self> {
        let d = DomainSpec::Disk { disk_radius: radius };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_disk() -> Self {
        DomainSpec::Disk { disk_radius: T::one() }
    }

    pub fn annulus(inner_radius: T) -> Result<Self> {
        Self::annulus_with_truncation(inner_radius, DEFAULT_SERIES_TRUNCATION)
    }

    pub fn annulus_with_truncation(inner_radius: T, series_truncation: usize) -> Result<Self> {
        let d = DomainSpec::Annulus { inner_radius, series_truncation };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DomainSpec::Disk { disk_radius } => {
                if !(disk_radius > T::zero()) || !disk_radius.is_finite() {
                    return Err(Error::InvalidDomain(format!("disk radius {disk_radius} must be positive")));
                }
            }
            DomainSpec::Annulus { inner_radius, series_truncation } => {
                if !(inner_radius > T::zero() && inner_radius < T::one()) {
                    return Err(Error::InvalidDomain(format!(
                        "inner radius {inner_radius} must lie in (0, 1)"
                    )));
                }
                if series_truncation < 8 {
                    return Err(Error::InvalidDomain(format!(
                        "series truncation {series_truncation} must be at least 8"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_disk(&self) -> bool {
        matches!(self, DomainSpec::Disk { .. })
    }

    /// `(inner, outer)` radii; the disk has inner radius zero.
    pub fn radii(&self) -> (T, T) {
        match *self {
            DomainSpec::Disk { disk_radius } => (T::zero(), disk_radius),
            DomainSpec::Annulus { inner_radius, .. } => (inner_radius, T::one()),
        }
    }

    pub fn diameter(&self) -> T {
        T::lit(2.0) * self.radii().1
    }

    pub fn contains(&self, x: Point<T>) -> bool {
        let r = x[0].hypot(x[1]);
        let (inner, outer) = self.radii();
        r < outer && (self.is_disk() || r > inner)
    }

    /// Euclidean distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: Point<T>) -> T {
        let r = x[0].hypot(x[1]);
        let (inner, outer) = self.radii();
        if self.is_disk() {
            outer - r
        } else {
            (outer - r).min(r - inner)
        }
    }

    fn check(&self, x: Point<T>) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::PointOutsideDomain { x: x[0].as_f64(), y: x[1].as_f64() })
        }
    }

    /// Geometric bound on the truncated part of the annulus series at `(x, y)`.
    /// Zero for the disk, whose kernel is closed form.
    pub fn series_tail_bound(&self, x: Point<T>, y: Point<T>) -> T {
        match *self {
            DomainSpec::Disk { .. } => T::zero(),
            DomainSpec::Annulus { inner_radius: a, series_truncation: n } => {
                let r = x[0].hypot(x[1]);
                let rho = y[0].hypot(y[1]);
                let a2 = a * a;
                let q = (r * rho).max(a2 / (r * rho)).max(a2 * r / rho).max(a2 * rho / r);
                let ratio = a2 * q;
                let n1 = T::from_usize_lossy(n + 1);
                T::lit(4.0) * ratio.powi(n as i32 + 1)
                    / (n1 * (T::one() - a2) * (T::one() - ratio))
                    / T::two_pi()
            }
        }
    }
}

/// Value, gradient and (optionally) Hessian with respect to the first argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEval<T> {
    pub value: T,
    pub grad_x: [T; 2],
    pub hess_x: Option<[[T; 2]; 2]>,
}

/// Robin function with its gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinEval<T> {
    pub value: T,
    pub grad: [T; 2],
    pub hess: [[T; 2]; 2],
}

/// Full second-order jet of a two-point kernel `f(x, y)`.
///
/// `hess_xy[a][b] = ∂²f / ∂x_a ∂y_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairJet<T> {
    pub value: T,
    pub grad_x: [T; 2],
    pub grad_y: [T; 2],
    pub hess_xx: [[T; 2]; 2],
    pub hess_xy: [[T; 2]; 2],
    pub hess_yy: [[T; 2]; 2],
}

impl<T: Scalar> PairJet<T> {
    fn zero() -> Self {
        let z = T::zero();
        PairJet {
            value: z,
            grad_x: [z; 2],
            grad_y: [z; 2],
            hess_xx: [[z; 2]; 2],
            hess_xy: [[z; 2]; 2],
            hess_yy: [[z; 2]; 2],
        }
    }

    fn scale(&mut self, s: T) {
        self.value *= s;
        for a in 0..2 {
            self.grad_x[a] *= s;
            self.grad_y[a] *= s;
            for b in 0..2 {
                self.hess_xx[a][b] *= s;
                self.hess_xy[a][b] *= s;
                self.hess_yy[a][b] *= s;
            }
        }
    }

    fn add(&mut self, o: &PairJet<T>) {
        self.value += o.value;
        for a in 0..2 {
            self.grad_x[a] += o.grad_x[a];
            self.grad_y[a] += o.grad_y[a];
            for b in 0..2 {
                self.hess_xx[a][b] += o.hess_xx[a][b];
                self.hess_xy[a][b] += o.hess_xy[a][b];
                self.hess_yy[a][b] += o.hess_yy[a][b];
            }
        }
    }

    /// Adds `coef · Re F` given the holomorphic derivatives of `F(ξ, w)`.
    /// `conj_w` selects `w = ȳ` instead of `w = y`.
    fn add_holomorphic(&mut self, coef: T, f: &HoloJet<T>, conj_w: bool) {
        let one = Complex::new(T::one(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        let dx = [one, i];
        let dy = if conj_w { [one, -i] } else { [one, i] };
        self.value += coef * f.f.re;
        for a in 0..2 {
            self.grad_x[a] += coef * (dx[a] * f.fx).re;
            self.grad_y[a] += coef * (dy[a] * f.fw).re;
            for b in 0..2 {
                self.hess_xx[a][b] += coef * (dx[a] * dx[b] * f.fxx).re;
                self.hess_xy[a][b] += coef * (dx[a] * dy[b] * f.fxw).re;
                self.hess_yy[a][b] += coef * (dy[a] * dy[b] * f.fww).re;
            }
        }
    }
}

/// Holomorphic function of two complex variables with derivatives to order two.
struct HoloJet<T> {
    f: Complex<T>,
    fx: Complex<T>,
    fw: Complex<T>,
    fxx: Complex<T>,
    fxw: Complex<T>,
    fww: Complex<T>,
}

/// Monomial `c ξ^p w^q`.
#[derive(Clone, Copy)]
struct Monomial<T> {
    c: T,
    p: i32,
    q: i32,
}

impl<T: Scalar> Monomial<T> {
    fn jet(&self, xi: Complex<T>, w: Complex<T>) -> HoloJet<T> {
        let term = |k: i32, dp: i32, dq: i32| {
            if k == 0 {
                Complex::new(T::zero(), T::zero())
            } else {
                xi.powi(self.p - dp) * w.powi(self.q - dq) * (self.c * T::lit(k as f64))
            }
        };
        let (p, q) = (self.p, self.q);
        HoloJet {
            f: term(1, 0, 0),
            fx: term(p, 1, 0),
            fw: term(q, 0, 1),
            fxx: term(p * (p - 1), 2, 0),
            fxw: term(p * q, 1, 1),
            fww: term(q * (q - 1), 0, 2),
        }
    }

    /// `log(1 - g)` composed with the monomial.
    fn log_one_minus(&self, xi: Complex<T>, w: Complex<T>) -> HoloJet<T> {
        let g = self.jet(xi, w);
        let one = Complex::new(T::one(), T::zero());
        let s = one - g.f;
        let inv = one / s;
        let inv2 = inv * inv;
        HoloJet {
            f: s.ln(),
            fx: -g.fx * inv,
            fw: -g.fw * inv,
            fxx: -g.fxx * inv - g.fx * g.fx * inv2,
            fxw: -g.fxw * inv - g.fx * g.fw * inv2,
            fww: -g.fww * inv - g.fw * g.fw * inv2,
        }
    }

    fn power(&self, n: i32) -> Monomial<T> {
        Monomial { c: self.c.powi(n), p: self.p * n, q: self.q * n }
    }
}

fn complex<T: Scalar>(x: Point<T>) -> Complex<T> {
    Complex::new(x[0], x[1])
}

/// Jet of `-(1/2π) log|x - y|`.
fn free_space_jet<T: Scalar>(x: Point<T>, y: Point<T>) -> PairJet<T> {
    let d = complex(x) - complex(y);
    let inv = Complex::new(T::one(), T::zero()) / d;
    let inv2 = inv * inv;
    let f = HoloJet { f: d.ln(), fx: inv, fw: -inv, fxx: -inv2, fxw: inv2, fww: -inv2 };
    let mut jet = PairJet::zero();
    jet.add_holomorphic(-T::one() / T::two_pi(), &f, false);
    jet
}

/// Jet of `log|x|` as a function of one point.
fn log_modulus<T: Scalar>(x: Point<T>) -> (T, [T; 2], [[T; 2]; 2]) {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let r4 = r2 * r2;
    let two = T::lit(2.0);
    (
        T::lit(0.5) * r2.ln(),
        [x[0] / r2, x[1] / r2],
        [
            [(r2 - two * x[0] * x[0]) / r4, -two * x[0] * x[1] / r4],
            [-two * x[0] * x[1] / r4, (r2 - two * x[1] * x[1]) / r4],
        ],
    )
}

/// Full jet of the regular part `K(x, y)`; no coincidence check.
pub fn regular_part_jet<T: Scalar>(domain: &DomainSpec<T>, x: Point<T>, y: Point<T>) -> PairJet<T> {
    let xi = complex(x);
    let yc = complex(y);
    let ybar = yc.conj();
    let mut jet = PairJet::zero();
    match *domain {
        DomainSpec::Disk { disk_radius } => {
            let m = Monomial { c: T::one() / (disk_radius * disk_radius), p: 1, q: 1 };
            jet.add_holomorphic(T::one(), &m.log_one_minus(xi, ybar), true);
            jet.value += disk_radius.ln();
            jet.scale(T::one() / T::two_pi());
        }
        DomainSpec::Annulus { inner_radius: a, series_truncation } => {
            let a2 = a * a;
            let (lx, gx, hx) = log_modulus(x);
            let (ly, gy, hy) = log_modulus(y);
            let inv_log_a = T::one() / a.ln();
            jet.value += lx * ly * inv_log_a;
            for i in 0..2 {
                jet.grad_x[i] += gx[i] * ly * inv_log_a;
                jet.grad_y[i] += lx * gy[i] * inv_log_a;
                for j in 0..2 {
                    jet.hess_xx[i][j] += hx[i][j] * ly * inv_log_a;
                    jet.hess_xy[i][j] += gx[i] * gy[j] * inv_log_a;
                    jet.hess_yy[i][j] += lx * hy[i][j] * inv_log_a;
                }
            }
            // (monomial, sign, w = ȳ?)
            let terms = [
                (Monomial { c: T::one(), p: 1, q: 1 }, T::one(), true),
                (Monomial { c: a2, p: -1, q: -1 }, T::one(), true),
                (Monomial { c: a2, p: 1, q: -1 }, -T::one(), false),
                (Monomial { c: a2, p: -1, q: 1 }, -T::one(), false),
            ];
            for (m, sign, conj) in terms {
                let w = if conj { ybar } else { yc };
                jet.add_holomorphic(sign, &m.log_one_minus(xi, w), conj);
            }
            // series is summed from the smallest terms up
            for n in (1..=series_truncation).rev() {
                let a2n = a2.powi(n as i32);
                let coef = a2n / (T::from_usize_lossy(n) * (T::one() - a2n));
                for (m, sign, conj) in terms {
                    let w = if conj { ybar } else { yc };
                    jet.add_holomorphic(-sign * coef, &m.power(n as i32).jet(xi, w), conj);
                }
            }
            jet.scale(T::one() / T::two_pi());
        }
    }
    jet
}

/// Full jet of `G(x, y)`; `x ≠ y` required.
pub fn green_jet<T: Scalar>(domain: &DomainSpec<T>, x: Point<T>, y: Point<T>) -> Result<PairJet<T>> {
    domain.check(x)?;
    domain.check(y)?;
    let sep = (x[0] - y[0]).hypot(x[1] - y[1]);
    if sep <= T::lit(1e-14) * domain.diameter() {
        return Err(Error::CoincidentPoints { separation: sep.as_f64() });
    }
    let mut jet = regular_part_jet(domain, x, y);
    jet.add(&free_space_jet(x, y));
    Ok(jet)
}

/// `G(x, y)` with gradient in `x`; Hessian in `x` when `with_hessian`.
pub fn green<T: Scalar>(
    domain: &DomainSpec<T>,
    x: Point<T>,
    y: Point<T>,
    with_hessian: bool,
) -> Result<GreenEval<T>> {
    let jet = green_jet(domain, x, y)?;
    Ok(GreenEval { value: jet.value, grad_x: jet.grad_x, hess_x: with_hessian.then_some(jet.hess_xx) })
}

/// `K(x, y) = G(x, y) - (1/2π) log|x - y|⁻¹`, smooth up to the diagonal.
pub fn regular_part<T: Scalar>(
    domain: &DomainSpec<T>,
    x: Point<T>,
    y: Point<T>,
    with_hessian: bool,
) -> Result<GreenEval<T>> {
    domain.check(x)?;
    domain.check(y)?;
    let jet = regular_part_jet(domain, x, y);
    Ok(GreenEval { value: jet.value, grad_x: jet.grad_x, hess_x: with_hessian.then_some(jet.hess_xx) })
}

/// Robin function `R(x) = K(x, x)` with gradient and Hessian.
pub fn robin<T: Scalar>(domain: &DomainSpec<T>, x: Point<T>) -> Result<RobinEval<T>> {
    domain.check(x)?;
    let jet = regular_part_jet(domain, x, x);
    let mut hess = [[T::zero(); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            hess[a][b] = jet.hess_xx[a][b] + jet.hess_yy[a][b] + jet.hess_xy[a][b] + jet.hess_xy[b][a];
        }
    }
    Ok(RobinEval {
        value: jet.value,
        grad: [jet.grad_x[0] + jet.grad_y[0], jet.grad_x[1] + jet.grad_y[1]],
        hess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn annulus() -> DomainSpec<f64> {
        DomainSpec::annulus(0.5).unwrap()
    }

    #[test]
    fn disk_closed_form_values() {
        let d = DomainSpec::unit_disk();
        let g = green(&d, [0.5, 0.0], [-0.5, 0.0], false).unwrap();
        assert!((g.value - 1.25f64.ln() / (2.0 * PI)).abs() < 1e-15);
        assert!((g.value - 0.035514).abs() < 1e-6);
        let k0 = regular_part(&d, [0.0, 0.0], [0.0, 0.0], false).unwrap();
        assert_eq!(k0.value, 0.0);
        let r = robin(&d, [0.6, 0.0]).unwrap();
        assert!((r.value - 0.64f64.ln() / (2.0 * PI)).abs() < 1e-15);
        assert!((r.value + 0.0710288).abs() < 1e-7);
        let r0 = robin(&d, [0.0, 0.0]).unwrap();
        assert_eq!(r0.value, 0.0);
        assert_eq!(r0.grad, [0.0, 0.0]);
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { -1.0 / PI } else { 0.0 };
                assert!((r0.hess[a][b] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn scaled_disk_matches_rescaled_unit_disk() {
        let d = DomainSpec::<f64>::disk(2.0).unwrap();
        let unit = DomainSpec::unit_disk();
        let g = green(&d, [0.6, 0.4], [-1.0, 0.2], false).unwrap().value;
        let g1 = green(&unit, [0.3, 0.2], [-0.5, 0.1], false).unwrap().value;
        assert!((g - g1).abs() < 1e-14);
    }

    #[test]
    fn green_vanishes_on_both_annulus_circles() {
        let d = annulus();
        let y = [0.7 * 0.3f64.cos(), 0.7 * 0.3f64.sin()];
        for t in 0..12 {
            let th = t as f64 * 0.5;
            for r in [0.5 + 1e-9, 1.0 - 1e-9] {
                let g = green(&d, [r * th.cos(), r * th.sin()], y, false).unwrap();
                assert!(g.value.abs() < 1e-8, "G = {} at r = {r}", g.value);
            }
        }
    }

    #[test]
    fn annulus_robin_is_radial() {
        let d = annulus();
        let base = robin(&d, [0.73, 0.0]).unwrap().value;
        for k in 1..8 {
            let th = k as f64 * 0.77;
            let r = robin(&d, [0.73 * th.cos(), 0.73 * th.sin()]).unwrap().value;
            assert!((r - base).abs() < 1e-12);
        }
    }

    #[test]
    fn errors_for_bad_points() {
        let d = annulus();
        assert!(matches!(green(&d, [0.2, 0.0], [0.7, 0.0], false), Err(Error::PointOutsideDomain { .. })));
        assert!(matches!(green(&d, [0.7, 0.0], [0.7, 0.0], false), Err(Error::CoincidentPoints { .. })));
        assert!(matches!(robin(&DomainSpec::unit_disk(), [1.0, 0.0]), Err(Error::PointOutsideDomain { .. })));
        assert!(regular_part(&d, [0.7, 0.0], [0.7, 0.0], false).is_ok());
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(DomainSpec::<f64>::disk(0.0).is_err());
        assert!(DomainSpec::<f64>::annulus(1.0).is_err());
        assert!(DomainSpec::<f64>::annulus_with_truncation(0.5, 7).is_err());
    }

    #[test]
    fn single_precision_kernel() {
        let d = DomainSpec::<f32>::unit_disk();
        let g = green(&d, [0.5, 0.0], [-0.5, 0.0], false).unwrap();
        assert!((g.value - 0.035514).abs() < 1e-5);
        let a = DomainSpec::<f32>::annulus(0.5).unwrap();
        let g32 = green(&a, [0.75, 0.0], [-0.3, 0.5], false).unwrap().value as f64;
        let g64 = green(&annulus(), [0.75, 0.0], [-0.3, 0.5], false).unwrap().value;
        assert!((g32 - g64).abs() < 1e-5);
    }

    #[test]
    fn truncation_doubling_within_reported_tail() {
        let x = [0.95, 0.05];
        let y = [0.9, -0.2];
        for n in [8, 12, 16] {
            let d = DomainSpec::<f64>::annulus_with_truncation(0.5, n).unwrap();
            let d2 = DomainSpec::annulus_with_truncation(0.5, 2 * n).unwrap();
            let diff = (green(&d, x, y, false).unwrap().value - green(&d2, x, y, false).unwrap().value).abs();
            assert!(diff <= d.series_tail_bound(x, y) + 1e-16, "n={n}: {diff} > {}", d.series_tail_bound(x, y));
        }
    }
}
