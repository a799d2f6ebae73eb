//! The matrix `h`, its spectrum and the asymptotic predictions built from it.

use serde::{Deserialize, Serialize};

use crate::green::{green, robin, DomainSpec};
use crate::hamiltonian::{hamiltonian_grad, hamiltonian_hess, Configuration};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::{Error, Result, Scalar};

/// Eigenvalues closer than this are one multiplicity group.
pub const GROUP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HMatrix<T> {
    pub entries: Matrix<T>,
    pub source_config: Configuration<T>,
}

impl<T: Scalar> HMatrix<T> {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// `h_ii = R(κ_i) + 2 Σ_{h≠i} G(κ_h, κ_i)`, `h_ij = −G(κ_i, κ_j)`.
pub fn assemble_h<T: Scalar>(domain: &DomainSpec<T>, config: &Configuration<T>) -> Result<HMatrix<T>> {
    config.validate(domain)?;
    let grad = hamiltonian_grad(domain, config)?;
    let gnorm = grad.iter().map(|&g| g * g).sum::<T>().sqrt();
    if gnorm > T::lit(1e-8) {
        log::debug!("assembling h away from a critical point: |grad H| = {gnorm}");
    }
    let m = config.len();
    let mut h = Matrix::zeros(m, m);
    for i in 0..m {
        h[(i, i)] = robin(domain, config.points[i])?.value;
    }
    for i in 0..m {
        for j in i + 1..m {
            let g = green(domain, config.points[i], config.points[j], false)
                .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?
                .value;
            h[(i, j)] = -g;
            h[(j, i)] = -g;
            h[(i, i)] += T::lit(2.0) * g;
            h[(j, j)] += T::lit(2.0) * g;
        }
    }
    Ok(HMatrix { entries: h, source_config: config.clone() })
}

/// Eigenpairs of `h`: ascending values, unit columns with the largest
/// magnitude entry positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> HEigen<T> {
    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k)
    }

    /// Whether eigenvalue `k` (0-based) coincides with a neighbour.
    pub fn is_degenerate(&self, k: usize) -> bool {
        let tol = T::lit(GROUP_TOLERANCE);
        let v = &self.values;
        (k > 0 && (v[k] - v[k - 1]).abs() <= tol) || (k + 1 < v.len() && (v[k + 1] - v[k]).abs() <= tol)
    }
}

pub fn fix_sign<T: Scalar>(v: &mut [T]) {
    let mut best = T::zero();
    for &x in v.iter() {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn eigen_h<T: Scalar>(h: &HMatrix<T>) -> HEigen<T> {
    let mut a = h.entries.clone();
    a.symmetrize();
    let eig = symmetric_eigen(&a);
    let m = a.nrows();
    let mut vectors = eig.vectors;
    for k in 0..m {
        let mut v = vectors.column(k);
        fix_sign(&mut v);
        for i in 0..m {
            vectors[(i, k)] = v[i];
        }
    }
    HEigen { values: eig.values, vectors }
}

/// `d_j = (1/8) exp(4π R(κ_j) + 4π Σ_{i≠j} G(κ_j, κ_i))`.
pub fn compute_d<T: Scalar>(domain: &DomainSpec<T>, config: &Configuration<T>) -> Result<Vec<T>> {
    config.validate(domain)?;
    let four_pi = T::lit(2.0) * T::two_pi();
    let m = config.len();
    let mut d = Vec::with_capacity(m);
    for j in 0..m {
        let mut s = robin(domain, config.points[j])?.value;
        for i in 0..m {
            if i != j {
                s += green(domain, config.points[j], config.points[i], false)?.value;
            }
        }
        d.push((four_pi * s).exp() / T::lit(8.0));
    }
    Ok(d)
}

/// Ascending eigenvalues of `D (Hess H) D`, `D = diag(d₁, d₁, …, d_m, d_m)`.
pub fn second_band_eta<T: Scalar>(hess: &Matrix<T>, d: &[T]) -> Vec<T> {
    let n = hess.nrows();
    assert_eq!(n, 2 * d.len(), "Hessian must be 2m × 2m");
    let mut dhd = Matrix::from_fn(n, n, |i, j| d[i / 2] * hess[(i, j)] * d[j / 2]);
    dhd.symmetrize();
    symmetric_eigen(&dhd).values
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPrediction<T> {
    #[serde(rename = "Lambda")]
    pub lambda_values: Vec<T>,
    #[serde(rename = "C")]
    pub vectors: Matrix<T>,
    pub d: Vec<T>,
    pub eta: Vec<T>,
    pub config: Configuration<T>,
}

impl<T: Scalar> SpectralPrediction<T> {
    pub fn m(&self) -> usize {
        self.lambda_values.len()
    }

    /// `c^k` for 1-based `k`.
    pub fn c(&self, k: usize) -> Vec<T> {
        self.vectors.column(k - 1)
    }

    fn heigen(&self) -> HEigen<T> {
        HEigen { values: self.lambda_values.clone(), vectors: self.vectors.clone() }
    }
}

/// All predictions for a configuration, normally a critical point of `H`.
pub fn predict<T: Scalar>(domain: &DomainSpec<T>, config: &Configuration<T>) -> Result<SpectralPrediction<T>> {
    let h = assemble_h(domain, config)?;
    let eig = eigen_h(&h);
    let d = compute_d(domain, config)?;
    let hess = hamiltonian_hess(domain, config)?;
    let eta = second_band_eta(&hess, &d);
    Ok(SpectralPrediction { lambda_values: eig.values, vectors: eig.vectors, d, eta, config: config.clone() })
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(Error::LambdaOutOfRange(lambda.as_f64()));
    }
    Ok(())
}

fn check_index(k: usize, lo: usize, hi: usize) -> Result<()> {
    if k < lo || k > hi {
        return Err(Error::IndexOutOfBand { index: k, lo, hi });
    }
    Ok(())
}

/// Two-term expansion of the k-th eigenvalue from its `h` eigenvalue.
pub fn mu_expansion<T: Scalar>(lambda_k: T, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    let l = lambda.ln();
    let c = T::two_pi() * lambda_k - (T::lit(3.0) * T::LN_2() - T::one()) / T::lit(2.0);
    Ok(-T::lit(0.5) / l + c / (l * l))
}

/// `μ^k(λ) ≈ −1/(2 log λ) + (2πΛ^k − (3 log 2 − 1)/2)/(log λ)²`, `1 ≤ k ≤ m`.
pub fn predict_mu<T: Scalar>(pred: &SpectralPrediction<T>, k: usize, lambda: T) -> Result<T> {
    check_index(k, 1, pred.m())?;
    mu_expansion(pred.lambda_values[k - 1], lambda)
}

pub fn predict_d<T: Scalar>(pred: &SpectralPrediction<T>) -> &[T] {
    &pred.d
}

/// Peak height `−2 log λ − 2 log d_j` for 1-based `j`.
pub fn predict_peak_height<T: Scalar>(pred: &SpectralPrediction<T>, j: usize, lambda: T) -> Result<T> {
    check_index(j, 1, pred.m())?;
    if !(lambda > T::zero()) {
        return Err(Error::LambdaOutOfRange(lambda.as_f64()));
    }
    Ok(-T::lit(2.0) * lambda.ln() - T::lit(2.0) * pred.d[j - 1].ln())
}

/// `μ^k = 1 − 48π η^{2m−(k−m)+1} λ` for `m+1 ≤ k ≤ 3m`.
pub fn predict_mu_second_band<T: Scalar>(pred: &SpectralPrediction<T>, k: usize, lambda: T) -> Result<T> {
    let m = pred.m();
    check_index(k, m + 1, 3 * m)?;
    if !(lambda >= T::zero() && lambda < T::one()) {
        return Err(Error::LambdaOutOfRange(lambda.as_f64()));
    }
    let eta = pred.eta[2 * m - (k - m)];
    Ok(T::one() - T::lit(24.0) * T::two_pi() * eta * lambda)
}

/// `{ j : |c_j| > tol · max |c_i| }`, 0-based.
pub fn concentration_indices<T: Scalar>(c: &[T], tol: T) -> Vec<usize> {
    let max = c.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    (0..c.len()).filter(|&j| c[j].abs() > tol * max).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSet<T> {
    /// `None` when `Λ^k` is degenerate: the eigenvector is then only one
    /// element of a basis and its support carries no meaning.
    pub indices: Option<Vec<usize>>,
    /// Distance of the closest component to the threshold, relative to the max.
    pub margin: T,
}

pub fn concentration_set<T: Scalar>(pred: &SpectralPrediction<T>, k: usize, tol: T) -> Result<ConcentrationSet<T>> {
    check_index(k, 1, pred.m())?;
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("concentration tolerance must be positive".into()));
    }
    let c = pred.c(k);
    let max = c.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    let margin = c.iter().fold(T::infinity(), |a, &x| a.min((x.abs() / max - tol).abs()));
    let indices = (!pred.heigen().is_degenerate(k - 1)).then(|| concentration_indices(&c, tol));
    Ok(ConcentrationSet { indices, margin })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityGroup<T> {
    pub value: T,
    /// 1-based eigenvalue indices in the group.
    pub indices: Vec<usize>,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirculantReport<T> {
    pub m: usize,
    pub eigenvalues: Vec<T>,
    /// `Λ_q = Σ_j h_{1,j} cos(2πjq/m)` for `q = 0..m`.
    pub symbol: Vec<T>,
    pub symbol_mismatch: T,
    pub groups: Vec<MultiplicityGroup<T>>,
    /// 1-based index of the simple eigenvalue with eigenvector ∝ (−1, 1, −1, …), m even.
    pub alternating_index: Option<usize>,
    pub simple_beyond_first: Vec<usize>,
}

pub fn group_eigenvalues<T: Scalar>(values: &[T], tol: T) -> Vec<MultiplicityGroup<T>> {
    let mut groups: Vec<MultiplicityGroup<T>> = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (v - values[*g.indices.last().unwrap() - 1]).abs() <= tol => {
                g.indices.push(k + 1);
                g.multiplicity += 1;
            }
            _ => groups.push(MultiplicityGroup { value: v, indices: vec![k + 1], multiplicity: 1 }),
        }
    }
    groups
}

pub fn circulant_report<T: Scalar>(h: &HMatrix<T>, m: usize) -> Result<CirculantReport<T>> {
    if h.dim() != m {
        return Err(Error::InvalidArgument(format!("h is {}×{} but m = {m}", h.dim(), h.dim())));
    }
    let a = &h.entries;
    let mut dev = T::zero();
    for i in 0..m {
        for j in 0..m {
            dev = dev.max((a[(i, j)] - a[(0, (j + m - i) % m)]).abs());
        }
    }
    if dev > T::lit(1e-10) {
        return Err(Error::NotCirculant(dev.as_f64()));
    }
    let symbol: Vec<T> = (0..m)
        .map(|q| {
            (0..m)
                .map(|j| {
                    let t = T::two_pi() * T::from_usize_lossy(j * q % m) / T::from_usize_lossy(m);
                    a[(0, j)] * t.cos()
                })
                .sum()
        })
        .collect();
    let eig = eigen_h(h);
    let mut sorted = symbol.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let symbol_mismatch = sorted.iter().zip(&eig.values).fold(T::zero(), |acc, (&s, &e)| acc.max((s - e).abs()));
    let groups = group_eigenvalues(&eig.values, T::lit(GROUP_TOLERANCE));
    let simple_beyond_first: Vec<usize> = groups
        .iter()
        .filter(|g| g.multiplicity == 1 && g.indices[0] >= 2)
        .map(|g| g.indices[0])
        .collect();
    let alternating_index = if m % 2 == 0 && m >= 2 {
        let norm = T::from_usize_lossy(m).sqrt();
        simple_beyond_first.iter().copied().find(|&k| {
            let v = eig.vector(k - 1);
            let dot: T = v
                .iter()
                .enumerate()
                .map(|(i, &x)| if i % 2 == 0 { -x } else { x })
                .sum::<T>()
                / norm;
            (dot.abs() - T::one()).abs() <= T::lit(1e-9)
        })
    } else {
        None
    };
    Ok(CirculantReport {
        m,
        eigenvalues: eig.values,
        symbol,
        symbol_mismatch,
        groups,
        alternating_index,
        simple_beyond_first,
    })
}

/// One row of the prediction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord<T> {
    pub m: usize,
    pub lambda: T,
    pub k: usize,
    #[serde(rename = "Lambda_k")]
    pub lambda_k: T,
    pub mu_pred: T,
    pub c_k: Vec<T>,
    pub d: Vec<T>,
    pub multiplicities: Vec<usize>,
}

pub fn prediction_records<T: Scalar>(pred: &SpectralPrediction<T>, lambdas: &[T]) -> Result<Vec<PredictionRecord<T>>> {
    let groups = group_eigenvalues(&pred.lambda_values, T::lit(GROUP_TOLERANCE));
    let multiplicities: Vec<usize> = groups.iter().map(|g| g.multiplicity).collect();
    let mut rows = Vec::new();
    for &lambda in lambdas {
        for k in 1..=pred.m() {
            rows.push(PredictionRecord {
                m: pred.m(),
                lambda,
                k,
                lambda_k: pred.lambda_values[k - 1],
                mu_pred: predict_mu(pred, k, lambda)?,
                c_k: pred.c(k),
                d: pred.d.clone(),
                multiplicities: multiplicities.clone(),
            });
        }
    }
    Ok(rows)
}
