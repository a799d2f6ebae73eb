use serde::{Deserialize, Serialize};

use super::grid::Discretization;
use crate::green::{regular_part, Point};
use crate::linalg::{BandedLu, BandedMatrix};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Bound on the scaled residual.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tolerance: 1e-10, max_iterations: 30 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport<T> {
    pub u: Vec<T>,
    pub iterations: usize,
    pub residual: f64,
    /// Scaled residual before every iteration and after the last.
    pub history: Vec<f64>,
}

/// Discretization plus its assembled stiffness matrix.
#[derive(Debug, Clone)]
pub struct Solver<T> {
    pub disc: Discretization<T>,
    stiffness: BandedMatrix<T>,
    edges: Vec<(usize, usize, T)>,
    row_sums: Vec<T>,
}

impl<T: Scalar> Solver<T> {
    pub fn new(disc: Discretization<T>) -> Self {
        let stiffness = disc.stiffness();
        let n = stiffness.dim();
        let band = stiffness.upper_bandwidth();
        let mut edges = Vec::new();
        let mut row_sums = vec![T::zero(); n];
        for i in 0..n {
            for j in i.saturating_sub(band)..(i + band + 1).min(n) {
                let a = stiffness.get(i, j);
                row_sums[i] += a;
                if j > i && a != T::zero() {
                    edges.push((i, j, a));
                }
            }
        }
        Solver { disc, stiffness, edges, row_sums }
    }

    /// `A u` accumulated from differences along edges, which keeps the
    /// rounding error proportional to the local variation of `u`.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        let mut f: Vec<T> = u.iter().zip(&self.row_sums).map(|(&x, &s)| s * x).collect();
        for &(i, j, a) in &self.edges {
            let d = a * (u[j] - u[i]);
            f[i] += d;
            f[j] -= d;
        }
        f
    }

    pub fn len(&self) -> usize {
        self.disc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disc.is_empty()
    }

    pub fn stiffness(&self) -> &BandedMatrix<T> {
        &self.stiffness
    }

    /// `F(u) = A u − λ W e^u`.
    pub fn residual(&self, u: &[T], lambda: T) -> Vec<T> {
        let mut f = self.apply(u);
        for ((fk, &w), &uk) in f.iter_mut().zip(self.disc.weights()).zip(u) {
            *fk -= lambda * w * uk.exp();
        }
        f
    }

    /// `max |F/W| / max(1, λ max e^u)`.
    pub fn residual_norm(&self, u: &[T], lambda: T) -> f64 {
        let f = self.residual(u, lambda);
        scaled_norm(&f, self.disc.weights(), u, lambda)
    }

    /// Scaled residual that perturbing `u` by its rounding error alone can
    /// produce; convergence is declared below `max(tolerance, floor)`.
    pub fn roundoff_floor(&self, u: &[T], lambda: T) -> f64 {
        let w = self.disc.weights();
        let mut size: Vec<T> = u.iter().zip(w).map(|(&x, &wk)| lambda * wk * x.exp()).collect();
        for (i, s) in size.iter_mut().enumerate() {
            *s += self.stiffness.get(i, i).abs() * u[i].abs();
        }
        for &(i, j, a) in &self.edges {
            size[i] += a.abs() * u[j].abs();
            size[j] += a.abs() * u[i].abs();
        }
        let worst = size.iter().zip(w).fold(T::zero(), |m, (&x, &wk)| m.max(x / wk));
        let emax = u.iter().fold(T::neg_infinity(), |m, &x| m.max(x)).exp();
        (T::lit(4.0) * T::epsilon() * worst / T::one().max(lambda * emax)).as_f64()
    }

    pub(crate) fn converged(&self, res: f64, u: &[T], lambda: T, tol: f64) -> bool {
        res <= tol || res <= self.roundoff_floor(u, lambda)
    }

    pub fn jacobian(&self, u: &[T], lambda: T) -> BandedMatrix<T> {
        let mut j = self.stiffness.clone();
        let diag: Vec<T> = u.iter().zip(self.disc.weights()).map(|(&x, &w)| w * x.exp()).collect();
        j.add_diagonal(&diag, -lambda);
        j
    }

    /// Factorizes `J(u, λ)` and returns a solver with one step of iterative
    /// refinement.
    pub fn factor(&self, u: &[T], lambda: T) -> Result<RefinedLu<T>> {
        let j = self.jacobian(u, lambda);
        let lu = j.clone().factorize()?;
        Ok(RefinedLu { matrix: j, lu })
    }

    /// `λ ∫ e^u` over the whole domain.
    pub fn mass(&self, u: &[T], lambda: T) -> T {
        let s: T = u.iter().zip(self.disc.weights()).map(|(&x, &w)| w * x.exp()).sum();
        lambda * s * T::from_usize_lossy(self.disc.copies())
    }

    pub fn newton_solve(&self, lambda: T, initial_guess: &[T], opts: &NewtonOptions) -> Result<NewtonReport<T>> {
        if lambda < T::zero() || !lambda.is_finite() {
            return Err(Error::LambdaOutOfRange(lambda.as_f64()));
        }
        if initial_guess.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "guess has {} entries, grid has {}",
                initial_guess.len(),
                self.len()
            )));
        }
        if lambda == T::zero() {
            return Ok(NewtonReport { u: vec![T::zero(); self.len()], iterations: 0, residual: 0.0, history: vec![0.0] });
        }
        let mut u = initial_guess.to_vec();
        let mut history = Vec::new();
        for it in 0..=opts.max_iterations {
            let f = self.residual(&u, lambda);
            let res = scaled_norm(&f, self.disc.weights(), &u, lambda);
            history.push(res);
            if !res.is_finite() {
                return Err(Error::NewtonDiverged { iterations: it, residual: res });
            }
            if self.converged(res, &u, lambda, opts.tolerance) {
                log::debug!("newton converged at λ={lambda}: {history:?}");
                return Ok(NewtonReport { u, iterations: it, residual: res, history });
            }
            if it == opts.max_iterations {
                break;
            }
            let lu = self.factor(&u, lambda)?;
            let du = lu.solve(&f);
            for (x, d) in u.iter_mut().zip(du) {
                *x -= d;
            }
        }
        let residual = *history.last().unwrap();
        Err(Error::NewtonDiverged { iterations: opts.max_iterations, residual })
    }
}

pub(crate) fn scaled_norm<T: Scalar>(f: &[T], w: &[T], u: &[T], lambda: T) -> f64 {
    let num = f.iter().zip(w).fold(T::zero(), |m, (&x, &w)| m.max((x / w).abs()));
    let emax = u.iter().fold(T::neg_infinity(), |m, &x| m.max(x)).exp();
    (num / T::one().max(lambda * emax)).as_f64()
}

#[derive(Debug, Clone)]
pub struct RefinedLu<T> {
    matrix: BandedMatrix<T>,
    lu: BandedLu<T>,
}

impl<T: Scalar> RefinedLu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = self.lu.solve(b);
        let ax = self.matrix.matvec(&x);
        let r: Vec<T> = b.iter().zip(ax).map(|(&b, a)| b - a).collect();
        for (x, d) in x.iter_mut().zip(self.lu.solve(&r)) {
            *x += d;
        }
        x
    }
}

/// Scaled residual of `u` on the discretization.
pub fn residual_norm<T: Scalar>(disc: &Discretization<T>, u: &[T], lambda: T) -> f64 {
    Solver::new(disc.clone()).residual_norm(u, lambda)
}

/// Newton's method for `A u = λ W e^u` from `initial_guess`.
pub fn newton_solve<T: Scalar>(disc: &Discretization<T>, lambda: T, initial_guess: &[T]) -> Result<Vec<T>> {
    Ok(Solver::new(disc.clone()).newton_solve(lambda, initial_guess, &NewtonOptions::default())?.u)
}

/// Singular-limit profile `Σ_j 8πK(x, κ_j) − 2 log(8δ_j² + |x − κ_j|²)` with
/// `δ_j = d_j λ^{1/2}`, a starting guess for blow-up solutions.
pub fn ansatz_seed<T: Scalar>(disc: &Discretization<T>, points: &[Point<T>], d: &[T], lambda: T) -> Result<Vec<T>> {
    let eight_pi = T::lit(8.0) * T::PI();
    (0..disc.len())
        .map(|k| {
            let x = disc.point(k);
            let mut u = T::zero();
            for (p, &dj) in points.iter().zip(d) {
                let delta2 = dj * dj * lambda;
                let dist2 = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
                u += eight_pi * regular_part(&disc.domain, x, *p, false)?.value;
                u -= T::lit(2.0) * (T::lit(8.0) * delta2 + dist2).ln();
            }
            Ok(u)
        })
        .collect()
}
