use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::green::{green, DomainSpec, Point};
use crate::hamiltonian::Configuration;
use crate::pde::{newton_solve, DiskBranch, DiskSolution, Discretization, GridSpec};
use crate::peaks::bubble_constants;
use crate::spectral::{assemble_h, eigen_h};
use crate::Result;

const SAMPLES: usize = 200;
const SEED: u64 = 0x5e1f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl SelftestCheck {
    fn new(name: &str, value: f64, relation: Relation, bound: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= bound,
            Relation::AtLeast => value >= bound,
        };
        SelftestCheck { name: name.to_string(), value, bound, relation, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<SelftestCheck>,
    pub passed: bool,
}

impl SelftestReport {
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point<f64> {
    let r = rng.gen_range(lo..hi);
    let t = rng.gen_range(0.0..2.0 * PI);
    [r * t.cos(), r * t.sin()]
}

fn green_asymmetry(domain: &DomainSpec<f64>, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, b) = domain.radii();
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < SAMPLES {
        let x = random_point(rng, a + 0.02, b - 0.02);
        let y = random_point(rng, a + 0.02, b - 0.02);
        if (x[0] - y[0]).hypot(x[1] - y[1]) < 1e-3 {
            continue;
        }
        let gxy = green(domain, x, y, false)?.value;
        let gyx = green(domain, y, x, false)?.value;
        worst = worst.max((gxy - gyx).abs() / gxy.abs().max(1.0));
        n += 1;
    }
    Ok(worst)
}

/// Smallest Perron component and smallest support size of a simple
/// eigenvector over random disk configurations.
fn matrix_properties(rng: &mut ChaCha8Rng, support_tol: f64) -> Result<(f64, usize)> {
    let domain = DomainSpec::unit_disk();
    let mut perron = f64::INFINITY;
    let mut support = usize::MAX;
    let mut n = 0;
    while n < SAMPLES {
        let m = rng.gen_range(2..=8);
        let points: Vec<Point<f64>> = (0..m).map(|_| random_point(rng, 0.05, 0.95)).collect();
        let close = points.iter().enumerate().any(|(j, p)| {
            points[j + 1..].iter().any(|q| (p[0] - q[0]).hypot(p[1] - q[1]) <= 1e-2)
        });
        if close {
            continue;
        }
        let e = eigen_h(&assemble_h(&domain, &Configuration::new(points))?);
        perron = perron.min(e.vector(0).iter().fold(f64::INFINITY, |a, &x| a.min(x)));
        for k in (0..m).filter(|&k| !e.is_degenerate(k)) {
            support = support.min(e.vector(k).iter().filter(|x| x.abs() > support_tol).count());
        }
        n += 1;
    }
    Ok((perron, support))
}

/// Lower-branch disk solution at `λ = 1/2` against the closed form.
fn disk_oracle_error() -> Result<f64> {
    let disc = Discretization::new(DomainSpec::unit_disk(), GridSpec::radial(1024, 1.0))?;
    let lambda = 0.5;
    let u: Vec<f64> = newton_solve(&disc, lambda, &vec![0.0; disc.len()])?;
    let exact = DiskSolution::from_lambda(1.0, lambda, DiskBranch::Lower)?;
    Ok((0..disc.len()).fold(0.0f64, |m, k| m.max((u[k] - exact.u(disc.r[k])).abs())))
}

pub fn run_selftest(cfg: &ExperimentConfig) -> Result<SelftestReport> {
    use Relation::*;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checks = Vec::new();

    let b = bubble_constants()?;
    let tol = cfg.tolerance("selftest_bubble");
    let rel = |x: f64, y: f64| (x / y - 1.0).abs();
    checks.push(SelftestCheck::new("bubble_mass", rel(b.mass, 8.0 * PI), AtMost, tol));
    checks.push(SelftestCheck::new("bubble_moment", rel(b.moment, -16.0 * PI), AtMost, tol));
    checks.push(SelftestCheck::new("bubble_log_moment", rel(b.log_moment, -6.0 * 2f64.ln()), AtMost, tol));

    let tol = cfg.tolerance("selftest_green_symmetry");
    let disk = green_asymmetry(&DomainSpec::unit_disk(), &mut rng)?;
    checks.push(SelftestCheck::new("green_symmetry_disk", disk, AtMost, tol));
    let annulus = green_asymmetry(&DomainSpec::annulus(0.5)?, &mut rng)?;
    checks.push(SelftestCheck::new("green_symmetry_annulus", annulus, AtMost, tol));

    let (perron, support) = matrix_properties(&mut rng, cfg.tolerance("selftest_two_support"))?;
    checks.push(SelftestCheck::new("perron_component", perron, AtLeast, cfg.tolerance("selftest_perron")));
    checks.push(SelftestCheck::new("two_support", support as f64, AtLeast, 2.0));

    let err = disk_oracle_error()?;
    checks.push(SelftestCheck::new("disk_closed_form", err, AtMost, cfg.tolerance("selftest_disk_oracle")));

    let passed = checks.iter().all(|c| c.passed);
    Ok(SelftestReport { checks, passed })
}
