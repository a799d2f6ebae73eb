//! Graded polar grids and the finite-volume Laplacian on them.
//!
//! Every unknown owns a dual cell bounded by mid-points between neighbouring
//! nodes. Integrating `−Δu` over a cell gives a symmetric stiffness matrix
//! `A`; the cell areas `W` form the (diagonal) mass matrix, so the discrete
//! problem reads `A u = λ W e^u`.

use serde::{Deserialize, Serialize};

use crate::green::{DomainSpec, Point};
use crate::linalg::{BandedMatrix, SymTridiagonal};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridKind {
    /// Radially symmetric functions on the disk.
    Radial,
    /// One `2π/m` sector of the annulus, periodic in the angle.
    Sector { m: usize },
}

/// Parameters that fully determine a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub kind: GridKind,
    /// Number of radial intervals.
    pub n_r: usize,
    /// Angular nodes per sector; unused for the radial grid.
    pub n_theta: usize,
    /// Width of the refined core of the sinh stretching.
    pub core_width: T,
    /// Radius the radial nodes cluster at (sector grids).
    pub center_radius: T,
}

impl<T: Scalar> GridSpec<T> {
    pub fn radial(n_r: usize, core_width: T) -> Self {
        GridSpec { kind: GridKind::Radial, n_r, n_theta: 1, core_width, center_radius: T::zero() }
    }

    pub fn sector(m: usize, n_r: usize, n_theta: usize, center_radius: T, core_width: T) -> Self {
        GridSpec { kind: GridKind::Sector { m }, n_r, n_theta, core_width, center_radius }
    }
}

#[derive(Debug, Clone)]
pub struct Discretization<T> {
    pub domain: DomainSpec<T>,
    pub spec: GridSpec<T>,
    /// Radial nodes including the boundary node(s).
    pub r: Vec<T>,
    /// Angular nodes of the sector in `[−π/m, π/m)`; `[0]` for radial grids.
    pub theta: Vec<T>,
    /// Radial dual faces: `rf[i]` separates `r[i]` and `r[i+1]`.
    rf: Vec<T>,
    /// Angular cell widths.
    dtheta: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Discretization<T> {
    pub fn new(domain: DomainSpec<T>, spec: GridSpec<T>) -> Result<Self> {
        domain.validate()?;
        if spec.n_r < 64 {
            return Err(Error::InvalidArgument(format!("n_r = {} must be at least 64", spec.n_r)));
        }
        if !(spec.core_width > T::zero()) {
            return Err(Error::InvalidArgument("core width must be positive".into()));
        }
        let half = T::lit(0.5);
        let n = spec.n_r;
        let s = |i: usize| T::from_usize_lossy(i) / T::from_usize_lossy(n);
        let c = spec.core_width;
        match (spec.kind, domain) {
            (GridKind::Radial, DomainSpec::Disk { disk_radius }) => {
                let beta = (disk_radius / c).asinh();
                let mut r: Vec<T> = (0..=n).map(|i| c * (beta * s(i)).sinh()).collect();
                r[n] = disk_radius;
                let rf: Vec<T> = r.windows(2).map(|w| (w[0] + w[1]) * half).collect();
                let mut weights = Vec::with_capacity(n);
                for i in 0..n {
                    let lo = if i == 0 { T::zero() } else { rf[i - 1] };
                    weights.push(T::PI() * (rf[i] * rf[i] - lo * lo));
                }
                Ok(Discretization { domain, spec, r, theta: vec![T::zero()], rf, dtheta: vec![T::two_pi()], weights })
            }
            (GridKind::Sector { m }, DomainSpec::Annulus { inner_radius: a, .. }) => {
                let r0 = spec.center_radius;
                if !(r0 > a && r0 < T::one()) {
                    return Err(Error::InvalidArgument(format!("center radius {r0} outside ({a}, 1)")));
                }
                if m == 0 || spec.n_theta < 8 || spec.n_theta % 2 != 0 {
                    return Err(Error::InvalidArgument("sector needs m ≥ 1 and an even n_theta ≥ 8".into()));
                }
                let b1 = ((r0 - a) / c).asinh();
                let b = b1 + ((T::one() - r0) / c).asinh();
                let mut r: Vec<T> = (0..=n).map(|i| r0 + c * (b * s(i) - b1).sinh()).collect();
                r[0] = a;
                r[n] = T::one();
                let rf: Vec<T> = r.windows(2).map(|w| (w[0] + w[1]) * half).collect();
                let nt = spec.n_theta;
                let period = T::two_pi() / T::from_usize_lossy(m);
                let ct = c / r0;
                let bt = (period * half / ct).asinh();
                let mut theta: Vec<T> = (0..nt)
                    .map(|j| {
                        let t = T::from_usize_lossy(2 * j) / T::from_usize_lossy(nt) - T::one();
                        ct * (bt * t).sinh()
                    })
                    .collect();
                theta[0] = -period * half;
                theta[nt / 2] = T::zero();
                let dtheta: Vec<T> = (0..nt)
                    .map(|j| {
                        let next = if j + 1 < nt { theta[j + 1] } else { theta[0] + period };
                        let prev = if j > 0 { theta[j - 1] } else { theta[nt - 1] - period };
                        (next - prev) * half
                    })
                    .collect();
                let mut weights = Vec::with_capacity((n - 1) * nt);
                for i in 1..n {
                    let ring = (rf[i] * rf[i] - rf[i - 1] * rf[i - 1]) * half;
                    for &dt in &dtheta {
                        weights.push(ring * dt);
                    }
                }
                Ok(Discretization { domain, spec, r, theta, rf, dtheta, weights })
            }
            _ => Err(Error::InvalidArgument("grid kind does not match the domain".into())),
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.spec.kind, GridKind::Radial)
    }

    /// Number of copies of the computational region that tile the domain.
    pub fn copies(&self) -> usize {
        match self.spec.kind {
            GridKind::Radial => 1,
            GridKind::Sector { m } => m,
        }
    }

    pub fn period(&self) -> T {
        T::two_pi() / T::from_usize_lossy(self.copies())
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    /// Number of unknowns.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Dual cell areas.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `(radial node index, angular node index)` of unknown `k`.
    pub fn node(&self, k: usize) -> (usize, usize) {
        if self.is_radial() {
            (k, 0)
        } else {
            (k / self.n_theta() + 1, k % self.n_theta())
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        if self.is_radial() {
            i
        } else {
            (i - 1) * self.n_theta() + j
        }
    }

    /// Cartesian position of unknown `k` in the first copy.
    pub fn point(&self, k: usize) -> Point<T> {
        let (i, j) = self.node(k);
        let r = self.r[i];
        let t = self.theta[j];
        [r * t.cos(), r * t.sin()]
    }

    /// Smallest distance from unknown `k` to a neighbouring node.
    pub fn local_spacing(&self, k: usize) -> T {
        let (i, j) = self.node(k);
        let mut h = self.r[i + 1] - self.r[i];
        if i > 0 {
            h = h.min(self.r[i] - self.r[i - 1]);
        }
        if !self.is_radial() {
            let nt = self.n_theta();
            let next = if j + 1 < nt { self.theta[j + 1] } else { self.theta[0] + self.period() };
            h = h.min(self.r[i] * (next - self.theta[j]));
        }
        h
    }

    fn radial_flux(&self, i: usize) -> T {
        self.rf[i] / (self.r[i + 1] - self.r[i])
    }

    /// Stiffness matrix of angular Fourier mode `n` on the radial grid.
    ///
    /// Mode zero includes the centre node; for `n ≥ 1` the centre value
    /// vanishes and the first unknown is `r[1]`.
    pub fn radial_mode(&self, n: usize) -> SymTridiagonal<T> {
        assert!(self.is_radial(), "radial modes need a radial grid");
        let nr = self.spec.n_r;
        let tau = T::two_pi();
        let first = if n == 0 { 0 } else { 1 };
        let mut diag = Vec::with_capacity(nr - first);
        let mut off = Vec::with_capacity(nr - first);
        let nn = T::from_usize_lossy(n * n);
        for i in first..nr {
            let mut d = tau * self.radial_flux(i);
            if i > 0 {
                d += tau * self.radial_flux(i - 1);
                if n > 0 {
                    d += tau * nn * (self.rf[i] / self.rf[i - 1]).ln();
                }
            }
            diag.push(d);
            if i + 1 < nr {
                off.push(-tau * self.radial_flux(i));
            }
        }
        SymTridiagonal::new(diag, off)
    }

    /// Cell areas matching [`Discretization::radial_mode`].
    pub fn radial_mode_weights(&self, n: usize) -> &[T] {
        if n == 0 {
            &self.weights
        } else {
            &self.weights[1..]
        }
    }

    /// Symmetric stiffness matrix of the invariant problem.
    pub fn stiffness(&self) -> BandedMatrix<T> {
        if self.is_radial() {
            let t = self.radial_mode(0);
            let n = t.dim();
            let mut a = BandedMatrix::zeros(n, 1, 1);
            for i in 0..n {
                a.set(i, i, t.diag[i]);
                if i + 1 < n {
                    a.set(i, i + 1, t.off[i]);
                    a.set(i + 1, i, t.off[i]);
                }
            }
            a
        } else {
            let (s, _) = self.sector_parts(T::zero());
            s
        }
    }

    /// `S + iT` for the Bloch condition `v(θ + 2π/m) = e^{iφ} v(θ)`: returns
    /// the real symmetric part `S` and the antisymmetric wrap couplings of `T`
    /// as `(row, col, value)` with `T[row][col] = value = −T[col][row]`.
    fn sector_parts(&self, phase: T) -> (BandedMatrix<T>, Vec<(usize, usize, T)>) {
        let nt = self.n_theta();
        let nr = self.spec.n_r;
        let n = self.len();
        let mut s = BandedMatrix::zeros(n, nt, nt);
        let mut t = Vec::new();
        let period = self.period();
        for i in 1..nr {
            let log_ratio = (self.rf[i] / self.rf[i - 1]).ln();
            for j in 0..nt {
                let k = self.index(i, j);
                let fo = self.radial_flux(i) * self.dtheta[j];
                let fi = self.radial_flux(i - 1) * self.dtheta[j];
                s.add(k, k, fo + fi);
                if i + 1 < nr {
                    s.add(k, self.index(i + 1, j), -fo);
                    s.add(self.index(i + 1, j), k, -fo);
                }
                let (jn, gap) = if j + 1 < nt {
                    (j + 1, self.theta[j + 1] - self.theta[j])
                } else {
                    (0, self.theta[0] + period - self.theta[j])
                };
                let fa = log_ratio / gap;
                let kn = self.index(i, jn);
                s.add(k, k, fa);
                s.add(kn, kn, fa);
                if jn == 0 {
                    s.add(k, kn, -fa * phase.cos());
                    s.add(kn, k, -fa * phase.cos());
                    t.push((k, kn, -fa * phase.sin()));
                } else {
                    s.add(k, kn, -fa);
                    s.add(kn, k, -fa);
                }
            }
        }
        (s, t)
    }

    /// Real form `[[S, −T], [T, S]]` of the Bloch operator with the real and
    /// imaginary parts of each node interleaved.
    pub fn bloch_stiffness_doubled(&self, phase: T) -> BandedMatrix<T> {
        assert!(!self.is_radial(), "Bloch operators need a sector grid");
        let (s, t) = self.sector_parts(phase);
        let n = self.len();
        let nt = self.n_theta();
        let mut d = BandedMatrix::zeros(2 * n, 2 * nt + 1, 2 * nt + 1);
        for i in 0..n {
            let lo = i.saturating_sub(nt);
            let hi = (i + nt).min(n - 1);
            for j in lo..=hi {
                let v = s.get(i, j);
                if v != T::zero() {
                    d.add(2 * i, 2 * j, v);
                    d.add(2 * i + 1, 2 * j + 1, v);
                }
            }
        }
        for (r, c, v) in t {
            // T[r][c] = v, T[c][r] = −v
            d.add(2 * r, 2 * c + 1, -v);
            d.add(2 * c, 2 * r + 1, v);
            d.add(2 * r + 1, 2 * c, v);
            d.add(2 * c + 1, 2 * r, -v);
        }
        d
    }

    /// Polar coordinates of `x` reduced to the first copy, plus the copy index.
    pub fn reduce(&self, x: Point<T>) -> (T, T, usize) {
        let r = x[0].hypot(x[1]);
        let mut t = x[1].atan2(x[0]);
        if self.is_radial() {
            return (r, t, 0);
        }
        let p = self.period();
        let mut s = ((t + p * T::lit(0.5)) / p).floor();
        t = t - s * p;
        if t >= p * T::lit(0.5) {
            t = t - p;
            s = s + T::one();
        }
        let m = T::from_usize_lossy(self.copies());
        let s = ((s % m) + m) % m;
        (r, t, s.to_usize().unwrap_or(0) % self.copies())
    }

    fn radial_cell(&self, r: T) -> (usize, T) {
        let n = self.r.len();
        let r = r.max(self.r[0]).min(self.r[n - 1]);
        let i = match self.r.binary_search_by(|p| p.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.max(1) - 1,
        };
        let w = (r - self.r[i]) / (self.r[i + 1] - self.r[i]);
        (i, w)
    }

    /// Value of grid function `values` at radius `r` and sector angle `t`
    /// (linear in `r`, and in `θ` on sector grids); boundary nodes are zero.
    pub fn interpolate(&self, values: &[T], r: T, t: T) -> T {
        let nr = self.spec.n_r;
        let (i, w) = self.radial_cell(r);
        if self.is_radial() {
            let at = |i: usize| if i < nr { values[i] } else { T::zero() };
            return at(i) * (T::one() - w) + at(i + 1) * w;
        }
        let nt = self.n_theta();
        let p = self.period();
        let (j, jn, wt) = {
            let idx = self.theta.partition_point(|&x| x <= t);
            if idx == 0 || idx == nt {
                let j = nt - 1;
                let base = self.theta[j];
                let tt = if t < self.theta[0] { t + p } else { t };
                (j, 0, (tt - base) / (self.theta[0] + p - base))
            } else {
                let j = idx - 1;
                (j, idx, (t - self.theta[j]) / (self.theta[idx] - self.theta[j]))
            }
        };
        let at = |i: usize, j: usize| {
            if i == 0 || i >= nr {
                T::zero()
            } else {
                values[self.index(i, j)]
            }
        };
        let lo = at(i, j) * (T::one() - wt) + at(i, jn) * wt;
        let hi = at(i + 1, j) * (T::one() - wt) + at(i + 1, jn) * wt;
        lo * (T::one() - w) + hi * w
    }
}
