use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::banded::BandedMatrix;
use super::dense::Matrix;
use super::symeig::symmetric_eigen;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceOptions {
    /// Extra basis vectors beyond the requested count.
    pub guard: usize,
    pub max_iterations: usize,
    /// Bound on the normwise backward error `‖Ax − μMx‖ / ((‖A‖ + |μ|‖M‖)‖x‖)`
    /// and on the relative change of each Ritz value between iterations.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        SubspaceOptions { guard: 6, max_iterations: 400, tolerance: 1e-12, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceResult<T> {
    /// Ascending eigenvalues closest to the shift.
    pub values: Vec<T>,
    /// `M`-orthonormal eigenvectors, one per value.
    pub vectors: Vec<Vec<T>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn m_dot<T: Scalar>(x: &[T], y: &[T], m: &[T]) -> T {
    x.iter().zip(y).zip(m).map(|((&a, &b), &w)| a * b * w).sum()
}

fn norm2<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// `M`-orthonormalizes the block in place (two passes of modified
/// Gram-Schmidt); returns false if the block lost rank.
fn m_orthonormalize<T: Scalar>(block: &mut [Vec<T>], m: &[T]) -> bool {
    for pass in 0..2 {
        for k in 0..block.len() {
            let (done, rest) = block.split_at_mut(k);
            let v = &mut rest[0];
            for q in done.iter() {
                let c = m_dot(q, v, m);
                for (vi, &qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
            let nrm = m_dot(v, v, m).sqrt();
            if !(nrm > T::zero()) || (pass == 1 && nrm < T::lit(1e-8)) {
                return false;
            }
            for vi in v.iter_mut() {
                *vi /= nrm;
            }
        }
    }
    true
}

/// Shift-invert subspace iteration with Rayleigh-Ritz for the symmetric
/// pencil `A x = μ M x` with banded `A` and positive diagonal `M`.
///
/// Returns the `count` eigenpairs closest to `sigma`, sorted ascending.
pub fn shift_invert_subspace<T: Scalar>(
    a: &BandedMatrix<T>,
    mass: &[T],
    sigma: T,
    count: usize,
    opts: &SubspaceOptions,
) -> Result<SubspaceResult<T>> {
    let n = a.dim();
    if let Some(i) = mass.iter().position(|&w| !(w > T::zero())) {
        return Err(Error::WeightNotPositive(i));
    }
    let p = (count + opts.guard).min(n);
    let count = count.min(p);
    let mut shifted = a.clone();
    shifted.add_diagonal(mass, -sigma);
    let lu = shifted.factorize()?;

    let a_norm = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(a.lower_bandwidth());
            let hi = (i + a.upper_bandwidth() + 1).min(n);
            (lo..hi).map(|j| a.get(i, j).abs()).sum::<T>()
        })
        .fold(T::zero(), |m, x| m.max(x));
    let m_norm = mass.iter().fold(T::zero(), |m, &x| m.max(x));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<T>> = (0..p)
        .map(|_| (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect())
        .collect();
    m_orthonormalize(&mut block, mass);

    let mut values = vec![T::zero(); count];
    let mut residuals = vec![f64::INFINITY; count];
    for iter in 1..=opts.max_iterations {
        block.par_iter_mut().for_each(|v| {
            for (vi, &w) in v.iter_mut().zip(mass) {
                *vi *= w;
            }
            lu.solve_in_place(v);
        });
        if !m_orthonormalize(&mut block, mass) {
            return Err(Error::ConvergenceFailure("subspace lost rank".into()));
        }
        let av: Vec<Vec<T>> = block.par_iter().map(|v| a.matvec(v)).collect();
        let mut proj = Matrix::from_fn(p, p, |i, j| {
            block[i].iter().zip(&av[j]).map(|(&x, &y)| x * y).sum()
        });
        proj.symmetrize();
        let eig: super::SymmetricEigen<T> = symmetric_eigen(&proj);
        // order Ritz pairs by distance from the shift
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| {
            let di: T = (eig.values[i] - sigma).abs();
            let dj: T = (eig.values[j] - sigma).abs();
            di.partial_cmp(&dj)
                .expect("finite Ritz values")
        });
        let ritz: Vec<Vec<T>> = order
            .par_iter()
            .map(|&c| {
                let mut x = vec![T::zero(); n];
                for (k, v) in block.iter().enumerate() {
                    let coef = eig.vectors[(k, c)];
                    for (xi, &vi) in x.iter_mut().zip(v) {
                        *xi += coef * vi;
                    }
                }
                x
            })
            .collect();
        let new_values: Vec<T> = order.iter().map(|&c| eig.values[c]).collect();
        let res: Vec<f64> = ritz[..count]
            .par_iter()
            .zip(&new_values[..count])
            .map(|(x, &mu)| {
                let ax = a.matvec(x);
                let r: Vec<T> = ax.iter().zip(x).zip(mass).map(|((&p, &q), &w)| p - mu * w * q).collect();
                (norm2(&r) / ((a_norm + mu.abs() * m_norm) * norm2(x))).as_f64()
            })
            .collect();
        let settled = new_values[..count]
            .iter()
            .zip(&values)
            .all(|(&new, &old)| ((new - old).abs() / new.abs().max(T::one())).as_f64() <= opts.tolerance);
        block = ritz;
        values.copy_from_slice(&new_values[..count]);
        residuals = res;
        if iter > 1 && settled && residuals.iter().all(|&r| r <= opts.tolerance) {
            let mut idx: Vec<usize> = (0..count).collect();
            idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite"));
            return Ok(SubspaceResult {
                values: idx.iter().map(|&i| values[i]).collect(),
                vectors: idx.iter().map(|&i| block[i].clone()).collect(),
                residuals: idx.iter().map(|&i| residuals[i]).collect(),
                iterations: iter,
            });
        }
    }
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    Err(Error::ConvergenceFailure(format!(
        "subspace iteration stopped at residual {worst:e} after {} iterations",
        opts.max_iterations
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 2D Dirichlet Laplacian on the unit square, n×n interior grid.
    fn square_laplacian(n: usize) -> (BandedMatrix<f64>, Vec<f64>) {
        let h = 1.0 / (n as f64 + 1.0);
        let mut a = BandedMatrix::zeros(n * n, n, n);
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                a.add(k, k, 4.0);
                if i > 0 {
                    a.add(k, k - n, -1.0);
                }
                if i + 1 < n {
                    a.add(k, k + n, -1.0);
                }
                if j > 0 {
                    a.add(k, k - 1, -1.0);
                }
                if j + 1 < n {
                    a.add(k, k + 1, -1.0);
                }
            }
        }
        (a, vec![h * h; n * n])
    }

    #[test]
    fn finds_degenerate_pairs_on_the_square() {
        let n = 24;
        let (a, m) = square_laplacian(n);
        let h = 1.0 / (n as f64 + 1.0);
        let lam = |p: f64, q: f64| {
            let s = |k: f64| (k * std::f64::consts::PI * h / 2.0).sin().powi(2);
            4.0 / (h * h) * (s(p) + s(q))
        };
        let exact = [lam(1.0, 1.0), lam(1.0, 2.0), lam(2.0, 1.0), lam(2.0, 2.0)];
        let res = shift_invert_subspace(&a, &m, 0.0, 4, &SubspaceOptions::default()).unwrap();
        for k in 0..4 {
            assert!((res.values[k] - exact[k]).abs() < 1e-9 * exact[k], "k={k}");
        }
        // shift into the interior of the spectrum
        let res = shift_invert_subspace(&a, &m, exact[1] + 1.0, 2, &SubspaceOptions::default()).unwrap();
        assert!((res.values[0] - exact[1]).abs() < 1e-9 * exact[1]);
        assert!((res.values[1] - exact[2]).abs() < 1e-9 * exact[1]);
    }
}
