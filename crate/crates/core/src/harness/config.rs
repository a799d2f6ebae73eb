use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::green::{DomainSpec, DEFAULT_SERIES_TRUNCATION};
use crate::linalg::SubspaceOptions;
use crate::pde::{ContinuationOptions, GridSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Disk,
    Annulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub kind: DomainKind,
    pub radius: f64,
    pub inner_radius: f64,
    pub series_truncation: usize,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection { kind: DomainKind::Disk, radius: 1.0, inner_radius: 0.5, series_truncation: DEFAULT_SERIES_TRUNCATION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Radial cells; 2048 on the disk and 128 on the annulus when unset.
    pub n_r: Option<usize>,
    /// Angular cells per sector.
    pub n_theta: usize,
    /// Core width of the graded grid in units of the smallest predicted `δ`.
    pub core_factor: f64,
    pub fold_n_r: usize,
    pub fold_core_width: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n_r: None, n_theta: 96, core_factor: 1.0, fold_n_r: 2048, fold_core_width: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSection {
    /// Eigenpairs per state; `3m + 1` when unset.
    pub count: Option<usize>,
    pub dense_limit: usize,
    pub guard: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for EigenSection {
    fn default() -> Self {
        let s = SubspaceOptions::default();
        EigenSection { count: None, dense_limit: crate::eigen::DENSE_LIMIT, guard: s.guard, max_iterations: s.max_iterations, seed: s.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Radius of the balls for the local mass; automatic when unset.
    pub ball_radius: Option<f64>,
    /// Radius of the rescaled profile window in units of `δ`.
    pub profile_window: f64,
    pub export_eigenfunctions: bool,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection { ball_radius: None, profile_window: 10.0, export_eigenfunctions: false }
    }
}

/// Named tolerances with their defaults.
pub const DEFAULT_TOLERANCES: [(&str, f64); 12] = [
    ("newton", 1e-10),
    ("eigen", 1e-12),
    ("fold", 1e-7),
    ("critical_point", 1e-12),
    ("degeneracy", 1e-8),
    ("second_band_slope", 0.05),
    ("alignment", 0.95),
    ("selftest_bubble", 1e-6),
    ("selftest_green_symmetry", 1e-12),
    ("selftest_perron", 1e-6),
    ("selftest_two_support", 1e-9),
    ("selftest_disk_oracle", 1e-7),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    pub lambda_list: Vec<f64>,
    pub output_dir: PathBuf,
    pub domain: DomainSection,
    pub grid: GridSection,
    pub continuation: ContinuationOptions,
    pub eigen: EigenSection,
    pub analysis: AnalysisSection,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m: 1,
            lambda_list: vec![1e-3, 1e-4, 1e-5],
            output_dir: PathBuf::from("results"),
            domain: DomainSection::default(),
            grid: GridSection::default(),
            continuation: ContinuationOptions { keep_profiles: 3, ..Default::default() },
            eigen: EigenSection::default(),
            analysis: AnalysisSection::default(),
            tolerances: default_tolerances(),
        }
    }
}

pub fn default_tolerances() -> BTreeMap<String, f64> {
    DEFAULT_TOLERANCES.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let given = std::mem::take(&mut cfg.tolerances);
        cfg.tolerances = default_tolerances();
        for (k, v) in given {
            if !cfg.tolerances.contains_key(&k) {
                return Err(Error::Config(format!("unknown tolerance `{k}`")));
            }
            cfg.tolerances.insert(k, v);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| DEFAULT_TOLERANCES.iter().find(|t| t.0 == name).map(|t| t.1))
            .unwrap_or_else(|| panic!("no tolerance named {name}"))
    }

    pub fn domain_spec(&self) -> Result<DomainSpec<f64>> {
        match self.domain.kind {
            DomainKind::Disk => DomainSpec::disk(self.domain.radius),
            DomainKind::Annulus => DomainSpec::annulus_with_truncation(self.domain.inner_radius, self.domain.series_truncation),
        }
        .map_err(|e| Error::Config(e.to_string()))
    }

    /// Lower bound for the fold: `2/ρ²` on the disk, the unit disk value on
    /// the annulus.
    pub fn fold_estimate(&self) -> f64 {
        match self.domain.kind {
            DomainKind::Disk => 2.0 / (self.domain.radius * self.domain.radius),
            DomainKind::Annulus => 2.0,
        }
    }

    pub fn n_r(&self) -> usize {
        self.grid.n_r.unwrap_or(match self.domain.kind {
            DomainKind::Disk => 2048,
            DomainKind::Annulus => 128,
        })
    }

    pub fn eigen_count(&self) -> usize {
        self.eigen.count.unwrap_or(3 * self.m + 1)
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_list.last().copied().unwrap_or(f64::NAN)
    }

    /// Grid for the sweep, graded around the peaks with the core width
    /// `core_factor · δ_min`.
    pub fn grid_spec(&self, center_radius: f64, delta_min: f64) -> GridSpec<f64> {
        let c = self.grid.core_factor * delta_min;
        match self.domain.kind {
            DomainKind::Disk => GridSpec::radial(self.n_r(), c),
            DomainKind::Annulus => GridSpec::sector(self.m, self.n_r(), self.grid.n_theta, center_radius, c),
        }
    }

    pub fn subspace(&self) -> SubspaceOptions {
        SubspaceOptions {
            guard: self.eigen.guard,
            max_iterations: self.eigen.max_iterations,
            tolerance: self.tolerance("eigen"),
            seed: self.eigen.seed,
        }
    }

    /// File-name tag of the branch checkpoint.
    pub fn tag(&self) -> String {
        match self.domain.kind {
            DomainKind::Disk => format!("disk_r{}_m{}", self.domain.radius, self.m),
            DomainKind::Annulus => format!("annulus_a{}_m{}", self.domain.inner_radius, self.m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain_spec()?;
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.domain.kind == DomainKind::Disk && self.m != 1 {
            return Err(Error::Config(format!("the disk carries one peak, got m = {}", self.m)));
        }
        if self.lambda_list.is_empty() {
            return Err(Error::Config("lambda_list is empty".into()));
        }
        let bound = self.fold_estimate().min(1.0);
        for &l in &self.lambda_list {
            if !(l > 0.0 && l < bound) {
                return Err(Error::LambdaOutOfRange(l));
            }
        }
        if self.lambda_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("lambda_list must be strictly decreasing".into()));
        }
        if self.n_r() < 8 || (self.domain.kind == DomainKind::Annulus && self.grid.n_theta < 4) {
            return Err(Error::Config("grid too coarse".into()));
        }
        if !(self.grid.core_factor > 0.0 && self.grid.fold_core_width > 0.0) {
            return Err(Error::Config("core widths must be positive".into()));
        }
        if self.eigen_count() == 0 {
            return Err(Error::Config("eigen.count must be positive".into()));
        }
        if !(self.analysis.profile_window > 0.0) || self.analysis.ball_radius.is_some_and(|r| !(r > 0.0)) {
            return Err(Error::Config("analysis radii must be positive".into()));
        }
        for (k, &v) in &self.tolerances {
            if !(v > 0.0) {
                return Err(Error::Config(format!("tolerance `{k}` must be positive")));
            }
        }
        Ok(())
    }
}
