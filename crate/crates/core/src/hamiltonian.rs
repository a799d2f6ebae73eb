//! The m-point Hamiltonian `H(x₁,…,x_m) = ½ Σ R(x_j) + Σ_{j<h} G(x_j, x_h)`
//! and the search for its critical points.

use serde::{Deserialize, Serialize};

use crate::green::{green_jet, robin, DomainSpec, Point};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Symmetry<T> {
    None,
    Polygonal { m: usize, r0: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration<T> {
    pub points: Vec<Point<T>>,
    pub symmetry: Symmetry<T>,
}

impl<T: Scalar> Configuration<T> {
    pub fn new(points: Vec<Point<T>>) -> Self {
        Configuration { points, symmetry: Symmetry::None }
    }

    /// Vertices `r0·e^{2πi(j-1)/m}` of a regular polygon.
    pub fn polygonal(m: usize, r0: T) -> Self {
        let points = (0..m)
            .map(|j| {
                let t = T::two_pi() * T::from_usize_lossy(j) / T::from_usize_lossy(m);
                [r0 * t.cos(), r0 * t.sin()]
            })
            .collect();
        Configuration { points, symmetry: Symmetry::Polygonal { m, r0 } }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self, domain: &DomainSpec<T>) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::DegenerateConfiguration("no points".into()));
        }
        for p in &self.points {
            if !domain.contains(*p) {
                return Err(Error::PointOutsideDomain { x: p[0].as_f64(), y: p[1].as_f64() });
            }
        }
        let tol = T::lit(1e-14) * domain.diameter();
        for (j, p) in self.points.iter().enumerate() {
            for (h, q) in self.points.iter().enumerate().skip(j + 1) {
                if (p[0] - q[0]).hypot(p[1] - q[1]) <= tol {
                    return Err(Error::DegenerateConfiguration(format!("points {j} and {h} coincide")));
                }
            }
        }
        Ok(())
    }

    fn flat(&self) -> Vec<T> {
        self.points.iter().flat_map(|p| [p[0], p[1]]).collect()
    }

    fn from_flat(v: &[T]) -> Self {
        Configuration::new(v.chunks(2).map(|c| [c[0], c[1]]).collect())
    }
}

fn green_pair<T: Scalar>(
    domain: &DomainSpec<T>,
    x: Point<T>,
    y: Point<T>,
) -> Result<crate::green::PairJet<T>> {
    green_jet(domain, x, y).map_err(|e| match e {
        Error::CoincidentPoints { .. } => Error::DegenerateConfiguration(e.to_string()),
        other => other,
    })
}

pub fn hamiltonian_value<T: Scalar>(domain: &DomainSpec<T>, config: &Configuration<T>) -> Result<T> {
    config.validate(domain)?;
    let half = T::lit(0.5);
    let mut h = T::zero();
    for (j, &p) in config.points.iter().enumerate() {
        h += half * robin(domain, p)?.value;
        for &q in &config.points[j + 1..] {
            h += green_pair(domain, p, q)?.value;
        }
    }
    Ok(h)
}

pub fn hamiltonian_grad<T: Scalar>(domain: &DomainSpec<T>, config: &Configuration<T>) -> Result<Vec<T>> {
    config.validate(domain)?;
    let m = config.len();
    let half = T::lit(0.5);
    let mut g = vec![T::zero(); 2 * m];
    for (j, &p) in config.points.iter().enumerate() {
        let r = robin(domain, p)?;
        g[2 * j] += half * r.grad[0];
        g[2 * j + 1] += half * r.grad[1];
        for h in j + 1..m {
            let jet = green_pair(domain, p, config.points[h])?;
            for a in 0..2 {
                g[2 * j + a] += jet.grad_x[a];
                g[2 * h + a] += jet.grad_y[a];
            }
        }
    }
    Ok(g)
}

pub fn hamiltonian_hess<T: Scalar>(domain: &DomainSpec<T>, config: &Configuration<T>) -> Result<Matrix<T>> {
    config.validate(domain)?;
    let m = config.len();
    let half = T::lit(0.5);
    let mut hs = Matrix::zeros(2 * m, 2 * m);
    for (j, &p) in config.points.iter().enumerate() {
        let r = robin(domain, p)?;
        for a in 0..2 {
            for b in 0..2 {
                hs[(2 * j + a, 2 * j + b)] += half * r.hess[a][b];
            }
        }
        for h in j + 1..m {
            let jet = green_pair(domain, p, config.points[h])?;
            for a in 0..2 {
                for b in 0..2 {
                    hs[(2 * j + a, 2 * j + b)] += jet.hess_xx[a][b];
                    hs[(2 * h + a, 2 * h + b)] += jet.hess_yy[a][b];
                    hs[(2 * j + a, 2 * h + b)] += jet.hess_xy[a][b];
                    hs[(2 * h + b, 2 * j + a)] += jet.hess_xy[a][b];
                }
            }
        }
    }
    Ok(hs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ansatz {
    /// Newton on the full gradient.
    Free,
    /// Regular polygon centred at the origin; only the radius is unknown.
    Polygonal,
}

#[derive(Debug, Clone, Copy)]
pub struct CriticalPointOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub damping_floor: f64,
}

impl Default for CriticalPointOptions {
    fn default() -> Self {
        CriticalPointOptions { tolerance: 1e-12, max_iterations: 100, damping_floor: 2f64.powi(-20) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointReport<T> {
    pub config: Configuration<T>,
    pub grad_norm: T,
    pub hess_eigenvalues: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
    /// `dH/dr0` at the reported radius for the polygonal ansatz.
    pub reduced_derivative: Option<T>,
    pub initial: Configuration<T>,
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn report<T: Scalar>(
    domain: &DomainSpec<T>,
    config: Configuration<T>,
    initial: &Configuration<T>,
    iterations: usize,
    reduced_derivative: Option<T>,
    tol: T,
) -> Result<CriticalPointReport<T>> {
    let grad_norm = norm(&hamiltonian_grad(domain, &config)?);
    let mut hess = hamiltonian_hess(domain, &config)?;
    hess.symmetrize();
    let hess_eigenvalues = symmetric_eigen(&hess).values;
    let converged = match reduced_derivative {
        Some(d) => d.abs() <= tol,
        None => grad_norm <= tol,
    };
    Ok(CriticalPointReport {
        config,
        grad_norm,
        hess_eigenvalues,
        converged,
        iterations,
        reduced_derivative,
        initial: initial.clone(),
    })
}

pub fn find_critical_point<T: Scalar>(
    domain: &DomainSpec<T>,
    initial: &Configuration<T>,
    ansatz: Ansatz,
) -> Result<CriticalPointReport<T>> {
    find_critical_point_with(domain, initial, ansatz, &CriticalPointOptions::default())
}

pub fn find_critical_point_with<T: Scalar>(
    domain: &DomainSpec<T>,
    initial: &Configuration<T>,
    ansatz: Ansatz,
    opts: &CriticalPointOptions,
) -> Result<CriticalPointReport<T>> {
    initial.validate(domain)?;
    match ansatz {
        Ansatz::Free => free_newton(domain, initial, opts),
        Ansatz::Polygonal => polygonal_search(domain, initial, opts),
    }
}

/// Minimum-norm Newton step; directions with negligible curvature (the
/// rotational orbit on the annulus) are left out.
fn newton_step<T: Scalar>(hess: &Matrix<T>, grad: &[T]) -> Vec<T> {
    let eig = symmetric_eigen(hess);
    let scale = eig.values.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    let cut = T::lit(1e-10) * scale;
    let n = grad.len();
    let mut step = vec![T::zero(); n];
    for k in 0..n {
        if eig.values[k].abs() <= cut {
            continue;
        }
        let v = eig.vector(k);
        let c = v.iter().zip(grad).map(|(&a, &b)| a * b).sum::<T>() / eig.values[k];
        for i in 0..n {
            step[i] -= c * v[i];
        }
    }
    step
}

fn free_newton<T: Scalar>(
    domain: &DomainSpec<T>,
    initial: &Configuration<T>,
    opts: &CriticalPointOptions,
) -> Result<CriticalPointReport<T>> {
    let tol = T::lit(opts.tolerance);
    let floor = T::lit(opts.damping_floor);
    let mut x = initial.flat();
    let mut config = initial.clone();
    let mut grad = hamiltonian_grad(domain, &config)?;
    let mut gnorm = norm(&grad);
    for it in 0..opts.max_iterations {
        if gnorm <= tol {
            return report(domain, config, initial, it, None, tol);
        }
        let mut hess = hamiltonian_hess(domain, &config)?;
        hess.symmetrize();
        let step = newton_step(&hess, &grad);
        let mut t = T::one();
        loop {
            let trial: Vec<T> = x.iter().zip(&step).map(|(&a, &s)| a + t * s).collect();
            let cand = Configuration::from_flat(&trial);
            let outside = cand.validate(domain).is_err();
            if !outside {
                let g = hamiltonian_grad(domain, &cand)?;
                let n = norm(&g);
                // near round-off the gradient norm stops decreasing monotonically
                if n < gnorm || n <= tol * T::lit(10.0) {
                    x = trial;
                    config = cand;
                    grad = g;
                    gnorm = n;
                    break;
                }
            }
            t = t * T::lit(0.5);
            if t < floor {
                if outside {
                    return Err(Error::EscapedDomain);
                }
                return Err(Error::NewtonDiverged { iterations: it, residual: gnorm.as_f64() });
            }
        }
        log::debug!("critical point newton {it}: |grad H| = {}", gnorm);
    }
    if gnorm <= tol {
        return report(domain, config, initial, opts.max_iterations, None, tol);
    }
    Err(Error::NewtonDiverged { iterations: opts.max_iterations, residual: gnorm.as_f64() })
}

/// `dH/dr0` and `d²H/dr0²` for the regular polygon of radius `r0`.
pub fn polygonal_derivatives<T: Scalar>(domain: &DomainSpec<T>, m: usize, r0: T) -> Result<(T, T)> {
    let config = Configuration::polygonal(m, r0);
    let grad = hamiltonian_grad(domain, &config)?;
    let hess = hamiltonian_hess(domain, &config)?;
    let dir: Vec<T> = config.points.iter().flat_map(|p| [p[0] / r0, p[1] / r0]).collect();
    let d1 = dir.iter().zip(&grad).map(|(&a, &b)| a * b).sum();
    let hd = hess.matvec(&dir);
    let d2 = dir.iter().zip(&hd).map(|(&a, &b)| a * b).sum();
    Ok((d1, d2))
}

fn polygonal_search<T: Scalar>(
    domain: &DomainSpec<T>,
    initial: &Configuration<T>,
    opts: &CriticalPointOptions,
) -> Result<CriticalPointReport<T>> {
    let m = initial.len();
    let r_init = match initial.symmetry {
        Symmetry::Polygonal { r0, .. } => r0,
        Symmetry::None => initial.points[0][0].hypot(initial.points[0][1]),
    };
    let (inner, outer) = domain.radii();
    let lo = if domain.is_disk() { outer * T::lit(0.05) } else { inner + T::lit(0.05) };
    let hi = outer * T::lit(0.95);
    let samples = 64;
    let rs: Vec<T> = (0..=samples)
        .map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(samples))
        .collect();
    let ds = rs
        .iter()
        .map(|&r| polygonal_derivatives(domain, m, r).map(|d| d.0))
        .collect::<Result<Vec<T>>>()?;
    let bracket = (0..samples)
        .filter(|&i| ds[i].signum() != ds[i + 1].signum())
        .min_by(|&i, &j| {
            let ci = (rs[i] + rs[i + 1]) * T::lit(0.5) - r_init;
            let cj = (rs[j] + rs[j + 1]) * T::lit(0.5) - r_init;
            ci.abs().partial_cmp(&cj.abs()).unwrap()
        })
        .ok_or_else(|| Error::ConvergenceFailure("no sign change of dH/dr0 on the scan interval".into()))?;
    let (mut a, mut b) = (rs[bracket], rs[bracket + 1]);
    let mut fa = ds[bracket];
    let tol = T::lit(opts.tolerance);
    let mut r = if r_init > a && r_init < b { r_init } else { (a + b) * T::lit(0.5) };
    for it in 0..opts.max_iterations {
        let (d1, d2) = polygonal_derivatives(domain, m, r)?;
        if d1.abs() <= tol || b - a <= T::epsilon() * T::lit(4.0) * r {
            let config = Configuration::polygonal(m, r);
            return report(domain, config, initial, it, Some(d1), tol);
        }
        if d1.signum() == fa.signum() {
            a = r;
            fa = d1;
        } else {
            b = r;
        }
        let newton = r - d1 / d2;
        r = if d2 != T::zero() && newton > a && newton < b { newton } else { (a + b) * T::lit(0.5) };
    }
    Err(Error::NewtonDiverged { iterations: opts.max_iterations, residual: f64::NAN })
}
