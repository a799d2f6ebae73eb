//! Blow-up data read off computed solutions and eigenfunctions.

use serde::{Deserialize, Serialize};

use crate::eigen::EigenPair;
use crate::green::Point;
use crate::pde::Discretization;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak<T> {
    pub x: Point<T>,
    pub height: T,
    /// Grid node the fit was centred on (computational region).
    pub node: usize,
    /// Rotated copy the peak belongs to.
    pub copy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakData<T> {
    pub lambda: T,
    pub peaks: Vec<Peak<T>>,
    /// `δ_j` with `λ e^{u(x_j)} δ_j² = 1`.
    pub delta: Vec<T>,
    /// Local masses; empty until [`local_mass`] has been applied.
    pub sigma: Vec<T>,
    pub ball_radius: T,
}

impl<T: Scalar> PeakData<T> {
    pub fn with_ball_radius(mut self, r: T) -> Self {
        self.ball_radius = r;
        self
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}

/// `U(x̃) = −2 log(1 + |x̃|²/8)`.
pub fn bubble<T: Scalar>(r: T) -> T {
    -T::lit(2.0) * (r * r / T::lit(8.0)).ln_1p()
}

/// Stationary point and value of the least-squares quadratic through
/// `(x, y, f)` samples given relative to the centre sample.
fn quadratic_peak<T: Scalar>(samples: &[(T, T, T)]) -> Option<(T, T, T)> {
    // basis 1, x, y, x², xy, y²
    let mut ata = [[0.0f64; 6]; 6];
    let mut atb = [0.0f64; 6];
    for &(x, y, f) in samples {
        let (x, y, f) = (x.as_f64(), y.as_f64(), f.as_f64());
        let row = [1.0, x, y, x * x, x * y, y * y];
        for i in 0..6 {
            atb[i] += row[i] * f;
            for j in 0..6 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let c = solve6(ata, atb)?;
    // ∇q = 0: [2c3, c4; c4, 2c5] [x; y] = −[c1; c2]
    let (a, b, d) = (2.0 * c[3], c[4], 2.0 * c[5]);
    let det = a * d - b * b;
    if !(det > 0.0 && a < 0.0) {
        return None;
    }
    let x = (-c[1] * d + c[2] * b) / det;
    let y = (-c[2] * a + c[1] * b) / det;
    let v = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
    Some((T::lit(x), T::lit(y), T::lit(v)))
}

fn solve6(mut a: [[f64; 6]; 6], mut b: [f64; 6]) -> Option<[f64; 6]> {
    for k in 0..6 {
        let p = (k..6).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())?;
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..6 {
            let l = a[i][k] / a[k][k];
            for j in k..6 {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    let mut x = [0.0; 6];
    for i in (0..6).rev() {
        let s: f64 = (i + 1..6).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn rotate<T: Scalar>(x: Point<T>, angle: T) -> Point<T> {
    let (s, c) = angle.sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1]]
}

/// Local maxima of `u` above half its maximum, refined by a quadratic fit on
/// the 3×3 polar stencil, replicated over the rotated copies.
pub fn locate_peaks<T: Scalar>(disc: &Discretization<T>, u: &[T], lambda: T, m: usize) -> Result<PeakData<T>> {
    if u.len() != disc.len() {
        return Err(Error::InvalidArgument(format!("u has {} entries, grid has {}", u.len(), disc.len())));
    }
    let umax = u.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let mut peaks = Vec::new();
    if disc.is_radial() {
        // radial profiles peak at the centre or on a ring
        if u[0] >= u[1] {
            peaks.push(Peak { x: [T::zero(), T::zero()], height: u[0], node: 0, copy: 0 });
        }
        let ring = (1..u.len() - 1).any(|i| u[i] > u[i - 1] && u[i] >= u[i + 1] && u[i] > umax * T::lit(0.5));
        if ring || peaks.len() != m {
            return Err(Error::WrongPeakCount { expected: m, found: if ring { usize::MAX } else { peaks.len() } });
        }
    } else {
        let nt = disc.n_theta();
        let nr = disc.spec.n_r;
        let value = |i: usize, j: usize| if i == 0 || i >= nr { T::zero() } else { u[disc.index(i, j)] };
        let mut local = Vec::new();
        for i in 1..nr {
            for j in 0..nt {
                let v = value(i, j);
                if v <= umax * T::lit(0.5) {
                    continue;
                }
                let mut is_max = true;
                'nb: for di in [-1i64, 0, 1] {
                    for dj in [-1i64, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let ii = (i as i64 + di) as usize;
                        let jj = ((j as i64 + dj).rem_euclid(nt as i64)) as usize;
                        let w = value(ii, jj);
                        // ties are broken towards the lower index
                        if w > v || (w == v && (ii, jj) < (i, j)) {
                            is_max = false;
                            break 'nb;
                        }
                    }
                }
                if is_max {
                    local.push((i, j));
                }
            }
        }
        let found = local.len() * disc.copies();
        if found != m {
            return Err(Error::WrongPeakCount { expected: m, found });
        }
        let period = disc.period();
        for &(i, j) in &local {
            let (r0, t0) = (disc.r[i], disc.theta[j]);
            let mut samples = Vec::with_capacity(9);
            for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    let ii = (i as i64 + di) as usize;
                    let jr = j as i64 + dj;
                    let jj = jr.rem_euclid(nt as i64) as usize;
                    let mut t = disc.theta[jj];
                    if jr < 0 {
                        t = t - period;
                    } else if jr >= nt as i64 {
                        t = t + period;
                    }
                    samples.push((disc.r[ii] - r0, (t - t0) * r0, value(ii, jj)));
                }
            }
            let (dr, ds, h) = match quadratic_peak(&samples) {
                Some((dr, ds, h)) if dr.abs() <= disc.r[i + 1] - disc.r[i - 1] && h >= value(i, j) => (dr, ds, h),
                _ => (T::zero(), T::zero(), value(i, j)),
            };
            let r = r0 + dr;
            let t = t0 + ds / r0;
            for s in 0..disc.copies() {
                let x = rotate([r * t.cos(), r * t.sin()], period * T::from_usize_lossy(s));
                peaks.push(Peak { x, height: h, node: disc.index(i, j), copy: s });
            }
        }
    }
    let delta = peaks.iter().map(|p| (lambda * p.height.exp()).sqrt().recip()).collect();
    let mut radius = disc.domain.diameter();
    for (a, p) in peaks.iter().enumerate() {
        radius = radius.min(disc.domain.boundary_distance(p.x));
        for q in &peaks[a + 1..] {
            radius = radius.min((p.x[0] - q.x[0]).hypot(p.x[1] - q.x[1]) * T::lit(0.5));
        }
    }
    Ok(PeakData { lambda, peaks, delta, sigma: Vec::new(), ball_radius: radius })
}

/// Number of sub-samples per direction in cells cut by a ball boundary.
const CLIP_SAMPLES: usize = 16;

/// `σ_j = λ ∫_{B_R(x_j)} e^u` with the cell quadrature of the grid; cells
/// cut by the ball boundary contribute the covered fraction of their area,
/// exactly for centred balls on radial grids and by sub-sampling otherwise.
pub fn local_mass<T: Scalar>(disc: &Discretization<T>, u: &[T], lambda: T, peaks: &PeakData<T>) -> Vec<T> {
    let big_r = peaks.ball_radius;
    let w = disc.weights();
    if disc.is_radial() {
        return peaks
            .peaks
            .iter()
            .map(|p| {
                debug_assert!(p.x[0] == T::zero() && p.x[1] == T::zero());
                let mut s = T::zero();
                for k in 0..disc.len() {
                    let (lo, hi) = radial_faces(disc, k);
                    if lo >= big_r {
                        break;
                    }
                    let frac = if hi <= big_r { T::one() } else { (big_r * big_r - lo * lo) / (hi * hi - lo * lo) };
                    s += frac * w[k] * u[k].exp();
                }
                lambda * s
            })
            .collect();
    }
    let nt = disc.n_theta();
    let period = disc.period();
    peaks
        .peaks
        .iter()
        .map(|p| {
            // work in the frame of the first copy
            let c = rotate(p.x, -period * T::from_usize_lossy(p.copy));
            let mut s = T::zero();
            for k in 0..disc.len() {
                let (_, j) = disc.node(k);
                let (lo, hi) = radial_faces(disc, k);
                let next = if j + 1 < nt { disc.theta[j + 1] } else { disc.theta[0] + period };
                let prev = if j > 0 { disc.theta[j - 1] } else { disc.theta[nt - 1] - period };
                let (t0, t1) = ((prev + disc.theta[j]) * T::lit(0.5), (disc.theta[j] + next) * T::lit(0.5));
                let x = disc.point(k);
                let centre = (x[0] - c[0]).hypot(x[1] - c[1]);
                let reach = (hi - lo).hypot(hi * (t1 - t0));
                if centre - reach >= big_r {
                    continue;
                }
                let frac = if centre + reach <= big_r {
                    T::one()
                } else {
                    covered_fraction(c, big_r, lo, hi, t0, t1)
                };
                s += frac * w[k] * u[k].exp();
            }
            lambda * s
        })
        .collect()
}

fn radial_faces<T: Scalar>(disc: &Discretization<T>, k: usize) -> (T, T) {
    let (i, _) = disc.node(k);
    let lo = if i == 0 { T::zero() } else { (disc.r[i - 1] + disc.r[i]) * T::lit(0.5) };
    let hi = (disc.r[i] + disc.r[i + 1]) * T::lit(0.5);
    (lo, hi)
}

/// Area fraction of the polar cell `[lo, hi] × [t0, t1]` inside `B_R(c)`,
/// sampled at area-weighted sub-cell midpoints.
fn covered_fraction<T: Scalar>(c: Point<T>, big_r: T, lo: T, hi: T, t0: T, t1: T) -> T {
    let n = CLIP_SAMPLES;
    let (mut inside, mut total) = (T::zero(), T::zero());
    for a in 0..n {
        let fa = (T::from_usize_lossy(a) + T::lit(0.5)) / T::from_usize_lossy(n);
        let r = lo + (hi - lo) * fa;
        for b in 0..n {
            let fb = (T::from_usize_lossy(b) + T::lit(0.5)) / T::from_usize_lossy(n);
            let t = t0 + (t1 - t0) * fb;
            total += r;
            if (r * t.cos() - c[0]).hypot(r * t.sin() - c[1]) < big_r {
                inside += r;
            }
        }
    }
    inside / total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVector<T> {
    /// `v(x_j)` for every peak.
    pub raw: Vec<T>,
    /// `raw / |raw|`.
    pub normalized: Vec<T>,
}

/// Eigenfunction values at the peaks.
pub fn extract_c<T: Scalar>(disc: &Discretization<T>, pair: &EigenPair<T>, peaks: &PeakData<T>) -> CVector<T> {
    let raw: Vec<T> = peaks.peaks.iter().map(|p| pair.value_at(disc, p.x)).collect();
    let n = raw.iter().map(|&x| x * x).sum::<T>().sqrt();
    let normalized = if n > T::zero() { raw.iter().map(|&x| x / n).collect() } else { raw.clone() };
    CVector { raw, normalized }
}

/// `|⟨a, b⟩| / (|a||b|)`.
pub fn alignment<T: Scalar>(a: &[T], b: &[T]) -> T {
    let dot: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let nb = b.iter().map(|&x| x * x).sum::<T>().sqrt();
    (dot / (na * nb)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileError<T> {
    /// `sup |ṽ − v(x_j) − μ c_j U| / μ`.
    pub second_order: T,
    /// The same without the `μ c_j U` term.
    pub first_order: T,
}

const PROFILE_RADII: usize = 400;
const PROFILE_ANGLES: usize = 32;

/// Sup-distance of the rescaled eigenfunction `ṽ(x̃) = v(x_j + δ_j x̃)` on
/// `|x̃| ≤ window` from `v(x_j) + μ c_j U(x̃)`, divided by `μ`.
pub fn rescaled_profile_error<T: Scalar>(
    disc: &Discretization<T>,
    pair: &EigenPair<T>,
    peaks: &PeakData<T>,
    j: usize,
    c_j: T,
    window: T,
) -> Result<ProfileError<T>> {
    let p = peaks.peaks.get(j).ok_or_else(|| Error::InvalidArgument(format!("no peak {j}")))?;
    let delta = peaks.delta[j];
    if !(window > T::zero()) || delta * window >= disc.domain.boundary_distance(p.x) {
        return Err(Error::WindowExceedsGrid(window.as_f64()));
    }
    let mu = pair.mu;
    let centre = pair.value_at(disc, p.x);
    let angles = if disc.is_radial() && pair.wave_number == 0 { 1 } else { PROFILE_ANGLES };
    let (mut second, mut first) = (T::zero(), T::zero());
    for a in 0..=PROFILE_RADII {
        let rho = window * T::from_usize_lossy(a) / T::from_usize_lossy(PROFILE_RADII);
        let u = bubble(rho);
        for b in 0..angles {
            let t = T::two_pi() * T::from_usize_lossy(b) / T::from_usize_lossy(angles);
            let x = [p.x[0] + delta * rho * t.cos(), p.x[1] + delta * rho * t.sin()];
            let dv = pair.value_at(disc, x) - centre;
            second = second.max((dv - mu * c_j * u).abs());
            first = first.max(dv.abs());
        }
    }
    Ok(ProfileError { second_order: second / mu, first_order: first / mu })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleConstants {
    /// `∫ e^U`.
    pub mass: f64,
    /// `∫ e^U U`.
    pub moment: f64,
    /// `(1/2π) ∫ log|ỹ|⁻¹ e^U dỹ`.
    pub log_moment: f64,
}

/// Radial quadrature of the three bubble integrals; beyond `|x̃| = 64` the
/// integrands are integrated in closed form in `w = 1 + |x̃|²/8`.
pub fn bubble_constants() -> Result<BubbleConstants> {
    bubble_constants_with(&QuadratureOptions::default())
}

pub fn bubble_constants_with(opts: &QuadratureOptions) -> Result<BubbleConstants> {
    use std::f64::consts::PI;
    let cut = 64.0f64;
    let wl = 1.0 + cut * cut / 8.0;
    let e = |r: f64| (1.0 + r * r / 8.0).powi(-2);
    let mass = 2.0 * PI * integrate(|r: f64| r * e(r), 0.0, cut, opts)?.value + 8.0 * PI / wl;
    let moment = 2.0 * PI * integrate(|r: f64| r * e(r) * bubble(r), 0.0, cut, opts)?.value
        - 16.0 * PI * (wl.ln() + 1.0) / wl;
    let tail_primitive = -(wl - 1.0).ln() / wl + ((wl - 1.0) / wl).ln();
    let log_moment = -integrate(|r: f64| if r > 0.0 { r * r.ln() * e(r) } else { 0.0 }, 0.0, cut, opts)?.value
        - 2.0 * (8f64.ln() / wl - tail_primitive);
    Ok(BubbleConstants { mass, moment, log_moment })
}
