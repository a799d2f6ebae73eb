//! Lowest eigenpairs of the linearized problem `−Δv = μ λ e^u v`.
//!
//! On the disk the operator separates into angular Fourier modes, each a
//! tridiagonal pencil. On the annulus sector the `2π/m`-invariance splits
//! the full problem into Bloch blocks `v(θ + 2π/m) = e^{2πiq/m} v(θ)`,
//! `q = 0..=⌊m/2⌋`; blocks with `0 < 2q < m` are Hermitian and solved in
//! real doubled form, and each of their eigenvalues is a double eigenvalue
//! of the full problem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::green::Point;
use crate::linalg::{
    generalized_symmetric_eigen, shift_invert_subspace, tridiagonal_pencil_eigen, BandedMatrix, Matrix,
    SubspaceOptions, SymTridiagonal, TridiagonalPair,
};
use crate::pde::Discretization;
use crate::{Error, Result, Scalar};

/// Relative gap below which eigenvalues are flagged degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

/// Blocks of at most this many unknowns are solved densely.
pub const DENSE_LIMIT: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    /// Real block: radial mode zero, or Bloch phase 0 or π.
    Real,
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair<T> {
    /// 1-based position in the ascending spectrum.
    pub index: usize,
    pub mu: T,
    /// Angular Fourier mode (disk) or Bloch index `q` (annulus).
    pub wave_number: usize,
    pub component: Component,
    /// Grid values on the computational region: radial profile on the
    /// disk (centre included), real part of the Bloch function on the sector.
    pub v: Vec<T>,
    /// Imaginary part of the Bloch function; empty for real blocks.
    pub v_imag: Vec<T>,
    /// Normwise backward error `‖Av − μMv‖∞ / ((‖A‖∞ + |μ|‖M‖∞)‖v‖∞)`.
    pub residual: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub subspace: SubspaceOptions,
    pub dense_limit: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { subspace: SubspaceOptions::default(), dense_limit: DENSE_LIMIT }
    }
}

impl<T: Scalar> EigenPair<T> {
    fn phase(&self, disc: &Discretization<T>) -> T {
        T::two_pi() * T::from_usize_lossy(self.wave_number) / T::from_usize_lossy(disc.copies())
    }

    fn combine(&self, disc: &Discretization<T>, re: T, im: T, copy: usize) -> T {
        let a = self.phase(disc) * T::from_usize_lossy(copy);
        match self.component {
            Component::Real => re * a.cos(),
            Component::Cos => re * a.cos() - im * a.sin(),
            Component::Sin => re * a.sin() + im * a.cos(),
        }
    }

    /// Value at unknown `k` of copy `copy` (the domain rotated by
    /// `copy · 2π/m`); on the disk `copy` is ignored and the angle is that of
    /// the node, i.e. zero.
    pub fn node_value(&self, disc: &Discretization<T>, k: usize, copy: usize) -> T {
        if disc.is_radial() {
            return self.v[k];
        }
        let im = if self.v_imag.is_empty() { T::zero() } else { self.v_imag[k] };
        self.combine(disc, self.v[k], im, copy)
    }

    /// Value at an arbitrary point of the domain.
    pub fn value_at(&self, disc: &Discretization<T>, x: Point<T>) -> T {
        if disc.is_radial() {
            let (r, t, _) = disc.reduce(x);
            let f = disc.interpolate(&self.v, r, T::zero());
            let nt = T::from_usize_lossy(self.wave_number) * t;
            return match self.component {
                Component::Real => f,
                Component::Cos => f * nt.cos(),
                Component::Sin => f * nt.sin(),
            };
        }
        let (r, t, s) = disc.reduce(x);
        let re = disc.interpolate(&self.v, r, t);
        let im = if self.v_imag.is_empty() { T::zero() } else { disc.interpolate(&self.v_imag, r, t) };
        self.combine(disc, re, im, s)
    }

    /// Scales so that the full-domain value of largest magnitude is `+1`.
    fn sup_normalize(&mut self, disc: &Discretization<T>) {
        let mut best = T::zero();
        if disc.is_radial() {
            for &x in &self.v {
                if x.abs() > best.abs() {
                    best = x;
                }
            }
        } else {
            for s in 0..disc.copies() {
                for k in 0..self.v.len() {
                    let x = self.node_value(disc, k, s);
                    if x.abs() > best.abs() {
                        best = x;
                    }
                }
            }
        }
        if best != T::zero() {
            let inv = best.recip();
            self.v.iter_mut().chain(self.v_imag.iter_mut()).for_each(|x| *x *= inv);
        }
    }
}

struct Raw<T> {
    mu: T,
    wave_number: usize,
    component: Component,
    v: Vec<T>,
    v_imag: Vec<T>,
    residual: f64,
}

fn mass_diagonal<T: Scalar>(disc: &Discretization<T>, u: &[T], lambda: T) -> Result<Vec<T>> {
    if u.len() != disc.len() {
        return Err(Error::InvalidArgument(format!("u has {} entries, grid has {}", u.len(), disc.len())));
    }
    let m: Vec<T> = u.iter().zip(disc.weights()).map(|(&x, &w)| lambda * w * x.exp()).collect();
    if let Some(i) = m.iter().position(|&w| !(w > T::zero()) || !w.is_finite()) {
        return Err(Error::WeightNotPositive(i));
    }
    Ok(m)
}

fn backward_error<T: Scalar>(av: &[T], v: &[T], mass: &[T], mu: T, a_norm: T) -> f64 {
    let mut r = T::zero();
    for ((&a, &x), &m) in av.iter().zip(v).zip(mass) {
        r = r.max((a - mu * m * x).abs());
    }
    let vn = v.iter().fold(T::zero(), |s, &x| s.max(x.abs()));
    let mn = mass.iter().fold(T::zero(), |s, &x| s.max(x));
    (r / ((a_norm + mu.abs() * mn) * vn)).as_f64()
}

fn banded_norm<T: Scalar>(a: &BandedMatrix<T>) -> T {
    let n = a.dim();
    let (kl, ku) = (a.lower_bandwidth(), a.upper_bandwidth());
    (0..n)
        .map(|i| (i.saturating_sub(kl)..(i + ku + 1).min(n)).map(|j| a.get(i, j).abs()).sum::<T>())
        .fold(T::zero(), |m, x| m.max(x))
}

/// Lowest `count` eigenpairs of the weighted problem, ascending, with
/// full-domain multiplicity (a rotational pair contributes two entries).
pub fn weighted_spectrum<T: Scalar>(
    disc: &Discretization<T>,
    u: &[T],
    lambda: T,
    count: usize,
) -> Result<Vec<EigenPair<T>>> {
    weighted_spectrum_with(disc, u, lambda, count, &SpectrumOptions::default())
}

pub fn weighted_spectrum_with<T: Scalar>(
    disc: &Discretization<T>,
    u: &[T],
    lambda: T,
    count: usize,
    opts: &SpectrumOptions,
) -> Result<Vec<EigenPair<T>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if !(lambda > T::zero()) {
        return Err(Error::WeightNotPositive(0));
    }
    let mass = mass_diagonal(disc, u, lambda)?;
    let mut raw = if disc.is_radial() { disk_modes(disc, &mass, count)? } else { bloch_blocks(disc, &mass, count, opts)? };
    raw.sort_by(|a, b| {
        a.mu.partial_cmp(&b.mu)
            .unwrap()
            .then(a.wave_number.cmp(&b.wave_number))
            .then((a.component as u8).cmp(&(b.component as u8)))
    });
    raw.truncate(count);
    let mut pairs: Vec<EigenPair<T>> = raw
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut p = EigenPair {
                index: i + 1,
                mu: r.mu,
                wave_number: r.wave_number,
                component: r.component,
                v: r.v,
                v_imag: r.v_imag,
                residual: r.residual,
                degenerate: false,
            };
            p.sup_normalize(disc);
            p
        })
        .collect();
    flag_degenerate(&mut pairs);
    Ok(pairs)
}

fn flag_degenerate<T: Scalar>(pairs: &mut [EigenPair<T>]) {
    let tol = T::lit(DEGENERACY_TOLERANCE);
    for i in 0..pairs.len() {
        let mu = pairs[i].mu;
        let close = |j: usize| (pairs[j].mu - mu).abs() <= tol * mu.abs().max(T::one());
        pairs[i].degenerate = (i > 0 && close(i - 1)) || (i + 1 < pairs.len() && close(i + 1));
    }
}

fn disk_modes<T: Scalar>(disc: &Discretization<T>, mass: &[T], count: usize) -> Result<Vec<Raw<T>>> {
    let mut out: Vec<Raw<T>> = Vec::new();
    for n in 0..=count {
        let stiffness = disc.radial_mode(n);
        let m = if n == 0 { mass.to_vec() } else { mass[1..].to_vec() };
        let pair = TridiagonalPair { stiffness, mass: m };
        let a_norm = tridiagonal_norm(&pair.stiffness);
        let lowest = pair.eigenvalue(0);
        if out.len() >= count {
            let mut mus: Vec<T> = out.iter().map(|r| r.mu).collect();
            mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if lowest > mus[count - 1] {
                break;
            }
        }
        let per_mode = if n == 0 { count } else { count.div_ceil(2) };
        for (mu, f) in tridiagonal_pencil_eigen(&pair, per_mode)? {
            let av = tridiagonal_apply(&pair.stiffness, &f);
            let residual = backward_error(&av, &f, &pair.mass, mu, a_norm);
            let mut v = f;
            if n > 0 {
                v.insert(0, T::zero());
            }
            let comps: &[Component] = if n == 0 { &[Component::Real] } else { &[Component::Cos, Component::Sin] };
            for &component in comps {
                out.push(Raw { mu, wave_number: n, component, v: v.clone(), v_imag: Vec::new(), residual });
            }
        }
    }
    Ok(out)
}

fn tridiagonal_norm<T: Scalar>(a: &SymTridiagonal<T>) -> T {
    let n = a.dim();
    (0..n)
        .map(|i| {
            let mut s = a.diag[i].abs();
            if i > 0 {
                s += a.off[i - 1].abs();
            }
            if i + 1 < n {
                s += a.off[i].abs();
            }
            s
        })
        .fold(T::zero(), |m, x| m.max(x))
}

/// `A v` from row sums and neighbour differences.
fn tridiagonal_apply<T: Scalar>(a: &SymTridiagonal<T>, v: &[T]) -> Vec<T> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut s = a.diag[i] * v[i];
            if i > 0 {
                s += a.off[i - 1] * v[i];
            }
            if i + 1 < n {
                s += a.off[i] * v[i];
            }
            if i > 0 {
                s += a.off[i - 1] * (v[i - 1] - v[i]);
            }
            if i + 1 < n {
                s += a.off[i] * (v[i + 1] - v[i]);
            }
            s
        })
        .collect()
}

fn dense_pencil<T: Scalar>(a: &BandedMatrix<T>, mass: &[T], count: usize) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let n = a.dim();
    let dense = Matrix::from_fn(n, n, |i, j| if a.in_band(i, j) { a.get(i, j) } else { T::zero() });
    let eig = generalized_symmetric_eigen(&dense, &Matrix::diagonal(mass))
        .ok_or_else(|| Error::ConvergenceFailure("mass matrix is not positive definite".into()))?;
    let k = count.min(n);
    Ok((eig.values[..k].to_vec(), (0..k).map(|i| eig.vector(i)).collect()))
}

fn solve_block<T: Scalar>(
    a: &BandedMatrix<T>,
    mass: &[T],
    count: usize,
    opts: &SpectrumOptions,
) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    if a.dim() <= opts.dense_limit {
        return dense_pencil(a, mass, count);
    }
    let res = shift_invert_subspace(a, mass, T::zero(), count, &opts.subspace)?;
    if let Some(r) = res.residuals.iter().find(|&&r| r > opts.subspace.tolerance) {
        return Err(Error::ConvergenceFailure(format!("residual {r:e} after {} iterations", res.iterations)));
    }
    Ok((res.values, res.vectors))
}

fn bloch_blocks<T: Scalar>(
    disc: &Discretization<T>,
    mass: &[T],
    count: usize,
    opts: &SpectrumOptions,
) -> Result<Vec<Raw<T>>> {
    let m = disc.copies();
    let blocks: Vec<usize> = (0..=m / 2).collect();
    let results: Vec<Result<Vec<Raw<T>>>> = blocks
        .par_iter()
        .map(|&q| {
            let real = 2 * q % m == 0;
            let phase = T::two_pi() * T::from_usize_lossy(q) / T::from_usize_lossy(m);
            if real {
                let a = if q == 0 { disc.stiffness() } else { real_block(disc, phase) };
                let (values, vectors) = solve_block(&a, mass, count, opts)?;
                let a_norm = banded_norm(&a);
                Ok(values
                    .into_iter()
                    .zip(vectors)
                    .map(|(mu, v)| {
                        let residual = backward_error(&a.matvec(&v), &v, mass, mu, a_norm);
                        Raw { mu, wave_number: q, component: Component::Real, v, v_imag: Vec::new(), residual }
                    })
                    .collect())
            } else {
                let a = disc.bloch_stiffness_doubled(phase);
                let mass2: Vec<T> = mass.iter().flat_map(|&w| [w, w]).collect();
                let want = 2 * count.div_ceil(2);
                let (values, vectors) = solve_block(&a, &mass2, want, opts)?;
                let a_norm = banded_norm(&a);
                let mut out = Vec::new();
                // each eigenvalue appears twice (w and iw); keep one of each pair
                let mut k = 0;
                while k < values.len() {
                    let v = &vectors[k];
                    let mu = values[k];
                    let residual = backward_error(&a.matvec(v), v, &mass2, mu, a_norm);
                    let re: Vec<T> = v.iter().step_by(2).copied().collect();
                    let im: Vec<T> = v.iter().skip(1).step_by(2).copied().collect();
                    for component in [Component::Cos, Component::Sin] {
                        out.push(Raw { mu, wave_number: q, component, v: re.clone(), v_imag: im.clone(), residual });
                    }
                    k += 2;
                }
                Ok(out)
            }
        })
        .collect();
    let mut all = Vec::new();
    for r in results {
        all.extend(r?);
    }
    Ok(all)
}

fn real_block<T: Scalar>(disc: &Discretization<T>, phase: T) -> BandedMatrix<T> {
    let d = disc.bloch_stiffness_doubled(phase);
    let n = disc.len();
    let nt = disc.n_theta();
    let mut a = BandedMatrix::zeros(n, nt, nt);
    for i in 0..n {
        for j in i.saturating_sub(nt)..(i + nt + 1).min(n) {
            let v = d.get(2 * i, 2 * j);
            if v != T::zero() {
                a.set(i, j, v);
            }
        }
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandGapReport<T> {
    pub m: usize,
    /// False when fewer than `3m + 1` pairs were supplied.
    pub complete: bool,
    /// `μ¹..μ^m` all lie in `(0, 1/2)`.
    pub first_band_below_half: bool,
    /// `max_k |μ^k − 1| / λ` over `k = m+1..3m`.
    pub second_band_slope: Option<T>,
    /// `μ^{3m+1}`.
    pub gap_value: Option<T>,
    pub gap_above_one: Option<bool>,
}

/// Checks the band structure of the first `3m + 1` eigenvalues.
pub fn check_band_gap<T: Scalar>(pairs: &[EigenPair<T>], m: usize, lambda: T) -> BandGapReport<T> {
    let mu: Vec<T> = pairs.iter().map(|p| p.mu).collect();
    let half = T::lit(0.5);
    let first_band_below_half = mu.len() >= m && mu[..m].iter().all(|&x| x > T::zero() && x < half);
    let second = (mu.len() >= 3 * m).then(|| {
        mu[m..3 * m].iter().fold(T::zero(), |s, &x| s.max((x - T::one()).abs() / lambda))
    });
    let gap_value = mu.get(3 * m).copied();
    BandGapReport {
        m,
        complete: mu.len() > 3 * m,
        first_band_below_half,
        second_band_slope: second,
        gap_value,
        gap_above_one: gap_value.map(|g| g > T::one()),
    }
}
