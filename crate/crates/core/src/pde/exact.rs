//! Radial solutions of `−Δu = λe^u` on a disk of radius `ρ`:
//! `u(r) = log(8ε²ρ² / (λ(ε²ρ² + r²)²))` with `8ε² = λρ²(1 + ε²)²`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiskBranch {
    /// Bounded solutions, `ε > 1`.
    Lower,
    /// Blow-up solutions, `ε < 1`.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSolution<T> {
    pub radius: T,
    pub lambda: T,
    /// `ε²`, the squared scale relative to the radius.
    pub eps2: T,
}

impl<T: Scalar> DiskSolution<T> {
    /// Turning point of the family, `λ* = 2/ρ²`.
    pub fn fold_lambda(radius: T) -> T {
        T::lit(2.0) / (radius * radius)
    }

    pub fn from_lambda(radius: T, lambda: T, branch: DiskBranch) -> Result<Self> {
        let l = lambda * radius * radius;
        if !(lambda > T::zero()) || l > T::lit(2.0) {
            return Err(Error::LambdaOutOfRange(lambda.as_f64()));
        }
        // l·t² + (2l − 8)·t + l = 0, roots multiply to one
        let b = T::lit(8.0) - T::lit(2.0) * l;
        let disc = (b * b - T::lit(4.0) * l * l).max(T::zero()).sqrt();
        let large = (b + disc) / (T::lit(2.0) * l);
        let eps2 = match branch {
            DiskBranch::Lower => large,
            DiskBranch::Upper => T::one() / large,
        };
        Ok(DiskSolution { radius, lambda, eps2 })
    }

    /// The member with `u(0) = u_max`.
    pub fn from_peak(radius: T, u_max: T) -> Result<Self> {
        if !(u_max > T::zero()) {
            return Err(Error::InvalidArgument(format!("peak value {u_max} must be positive")));
        }
        let eps2 = T::one() / (u_max * T::lit(0.5)).exp_m1();
        let lambda = T::lit(8.0) * eps2 / (radius * radius * (T::one() + eps2).powi(2));
        Ok(DiskSolution { radius, lambda, eps2 })
    }

    fn scale2(&self) -> T {
        self.eps2 * self.radius * self.radius
    }

    pub fn u(&self, r: T) -> T {
        let s = self.scale2();
        (T::lit(8.0) * s / (self.lambda * (s + r * r).powi(2))).ln()
    }

    pub fn u_max(&self) -> T {
        self.u(T::zero())
    }

    /// `λ ∫_Ω e^u = 8π/(1 + ε²)`.
    pub fn mass(&self) -> T {
        T::lit(8.0) * T::PI() / (T::one() + self.eps2)
    }

    /// `λ ∫_{B_R(0)} e^u`.
    pub fn mass_in_ball(&self, r: T) -> T {
        let s = self.scale2();
        T::lit(8.0) * T::PI() * r * r / (s + r * r)
    }

    /// Scaling parameter `δ` with `λe^{u(0)}δ² = 1`.
    pub fn delta(&self) -> T {
        (self.scale2() / T::lit(8.0)).sqrt()
    }
}
