use crate::{Error, Result, Scalar};

/// Symmetric tridiagonal matrix: `diag[i]` and `off[i] = a[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Scalar> SymTridiagonal<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length");
        SymTridiagonal { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

/// Pencil `A v = μ M v` with symmetric tridiagonal `A` and positive
/// diagonal `M`.
#[derive(Debug, Clone)]
pub struct TridiagonalPair<T> {
    pub stiffness: SymTridiagonal<T>,
    pub mass: Vec<T>,
}

impl<T: Scalar> TridiagonalPair<T> {
    /// Number of eigenvalues strictly below `sigma`, from the inertia of
    /// `A - σM` (Sylvester's law; `M` is positive definite).
    pub fn count_below(&self, sigma: T) -> usize {
        let a = &self.stiffness;
        let n = a.dim();
        let floor = T::min_positive_value().sqrt();
        let mut count = 0;
        let mut d = T::one();
        for i in 0..n {
            let mut di = a.diag[i] - sigma * self.mass[i];
            if i > 0 {
                di -= a.off[i - 1] * a.off[i - 1] / d;
            }
            if di == T::zero() {
                di = -floor;
            }
            if di < T::zero() {
                count += 1;
            }
            d = di;
        }
        count
    }

    fn spectral_bound(&self) -> T {
        let a = &self.stiffness;
        let n = a.dim();
        (0..n)
            .map(|i| {
                let mut r = a.diag[i].abs();
                if i > 0 {
                    r += a.off[i - 1].abs();
                }
                if i + 1 < n {
                    r += a.off[i].abs();
                }
                r / self.mass[i]
            })
            .fold(T::zero(), |m, x| m.max(x))
    }

    /// The `k`-th smallest eigenvalue (0-based) by Sturm bisection.
    pub fn eigenvalue(&self, k: usize) -> T {
        let bound = self.spectral_bound() * T::lit(1.01) + T::one();
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..400 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo + hi) * T::lit(0.5)
    }

    /// Eigenvector for an (accurate) eigenvalue `mu` by inverse iteration,
    /// normalized so that `vᵀ M v = 1`.
    pub fn eigenvector(&self, mu: T) -> Result<Vec<T>> {
        let n = self.stiffness.dim();
        let a = &self.stiffness;
        let diag: Vec<T> = (0..n).map(|i| a.diag[i] - mu * self.mass[i]).collect();
        let lu = TridiagonalLu::factorize(&a.off, &diag, &a.off);
        let mut x: Vec<T> = (0..n)
            .map(|i| T::one() + T::lit(0.01) * T::from_usize_lossy(i % 7))
            .collect();
        for _ in 0..4 {
            let mut rhs: Vec<T> = x.iter().zip(&self.mass).map(|(&v, &m)| v * m).collect();
            lu.solve_in_place(&mut rhs);
            let norm = m_norm(&rhs, &self.mass);
            if !norm.is_finite() || norm == T::zero() {
                return Err(Error::ConvergenceFailure("inverse iteration breakdown".into()));
            }
            x = rhs.into_iter().map(|v| v / norm).collect();
        }
        Ok(x)
    }
}

fn m_norm<T: Scalar>(x: &[T], m: &[T]) -> T {
    x.iter().zip(m).map(|(&v, &w)| v * v * w).sum::<T>().sqrt()
}

/// Tridiagonal LU with partial pivoting; zero pivots are replaced by a tiny
/// value so the factorization can drive inverse iteration at an exact shift.
struct TridiagonalLu<T> {
    dl: Vec<T>,
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Scalar> TridiagonalLu<T> {
    fn factorize(lower: &[T], diag: &[T], upper: &[T]) -> Self {
        let n = diag.len();
        let mut dl = lower.to_vec();
        let mut d = diag.to_vec();
        let mut du = upper.to_vec();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != T::zero() {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] = d[i + 1] - fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        let scale = d.iter().fold(T::zero(), |m, &x| m.max(x.abs())).max(T::min_positive_value());
        for di in d.iter_mut() {
            if di.abs() < scale * T::epsilon() * T::epsilon() {
                *di = scale * T::epsilon() * T::epsilon();
            }
        }
        TridiagonalLu { dl, d, du, du2, swapped }
    }

    fn solve_in_place(&self, b: &mut [T]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * b[i + 2];
            }
            b[i] = s / self.d[i];
        }
    }
}

/// Lowest `count` eigenpairs of a tridiagonal pencil, ascending, with
/// `M`-orthonormal eigenvectors.
pub fn tridiagonal_pencil_eigen<T: Scalar>(
    pair: &TridiagonalPair<T>,
    count: usize,
) -> Result<Vec<(T, Vec<T>)>> {
    let n = pair.stiffness.dim();
    if let Some(i) = pair.mass.iter().position(|&m| !(m > T::zero())) {
        return Err(Error::WeightNotPositive(i));
    }
    (0..count.min(n))
        .map(|k| {
            let mu = pair.eigenvalue(k);
            pair.eigenvector(mu).map(|v| (mu, v))
        })
        .collect()
}
