use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::selftest::SelftestReport;
use crate::eigen::{BandGapReport, Component};
use crate::hamiltonian::CriticalPointReport;
use crate::linalg::Matrix;
use crate::pde::{Fold, GridSpec};
use crate::spectral::{CirculantReport, PredictionRecord, SpectralPrediction};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Predict,
    Solve,
    Spectrum,
    Verify,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Predict => "predict",
            Command::Solve => "solve",
            Command::Spectrum => "spectrum",
            Command::Verify => "verify",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Warn,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    /// The tested sequence, ordered by decreasing `λ` where applicable.
    pub values: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub lambda: f64,
    pub k: usize,
    pub mu_numeric: f64,
    pub mu_predicted: f64,
    pub residual: f64,
    pub residual_times_log2: f64,
}

impl ComparisonRow {
    pub fn new(lambda: f64, k: usize, mu_numeric: f64, mu_predicted: f64) -> Self {
        let residual = mu_numeric - mu_predicted;
        let l = lambda.ln();
        ComparisonRow { lambda, k, mu_numeric, mu_predicted, residual, residual_times_log2: residual * l.powi(2) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub critical_point: CriticalPointReport<f64>,
    pub h: Matrix<f64>,
    pub prediction: SpectralPrediction<f64>,
    pub circulant: Option<CirculantReport<f64>>,
    pub records: Vec<PredictionRecord<f64>>,
    /// Second-band predictions `(λ, k, μ^k)` for `k = m+1..3m`.
    pub second_band: Vec<(f64, usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u_max: f64,
    pub mass: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub grid: GridSpec<f64>,
    pub unknowns: usize,
    /// Fold located on the dedicated fold grid (disk only).
    pub fold: Option<Fold<f64>>,
    pub steps: usize,
    pub points: Vec<BranchPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub k: usize,
    pub mu: f64,
    pub wave_number: usize,
    pub component: Component,
    pub degenerate: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub height: f64,
    pub height_predicted: f64,
    pub delta: f64,
    pub delta_over_sqrt_lambda: f64,
    pub d_predicted: f64,
    pub sigma: f64,
    /// `(σ_j − 8π) λ^{-1/2}`.
    pub sigma_excess_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CRecord {
    pub k: usize,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    /// `|cos|` of the angle to `c^k`, or to the span of its multiplicity
    /// group when `Λ^k` is degenerate.
    pub alignment: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub k: usize,
    pub peak: usize,
    pub window: f64,
    /// `None` when the window leaves the domain.
    pub second_order: Option<f64>,
    pub first_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub lambda: f64,
    pub u_max: f64,
    pub mass: f64,
    pub newton_residual: f64,
    pub eigen: Vec<EigenRecord>,
    pub band_gap: BandGapReport<f64>,
    pub ball_radius: Option<f64>,
    pub peaks: Vec<PeakRecord>,
    pub c_vectors: Vec<CRecord>,
    pub profile: Vec<ProfileRecord>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub warn: usize,
    pub fail: usize,
    pub skip: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Command,
    pub config: ExperimentConfig,
    pub prediction: Option<PredictionReport>,
    pub branch: Option<BranchReport>,
    pub states: Vec<StateReport>,
    pub comparison: Vec<ComparisonRow>,
    pub verdicts: Vec<Verdict>,
    pub selftest: Option<SelftestReport>,
    pub summary: Summary,
    pub error: Option<ErrorReport>,
}

impl RunReport {
    pub fn new(command: Command, config: &ExperimentConfig) -> Self {
        RunReport {
            command,
            config: config.clone(),
            prediction: None,
            branch: None,
            states: Vec::new(),
            comparison: Vec::new(),
            verdicts: Vec::new(),
            selftest: None,
            summary: Summary::default(),
            error: None,
        }
    }

    pub fn tally(&mut self) {
        let mut s = Summary::default();
        for v in &self.verdicts {
            match v.status {
                Status::Pass => s.pass += 1,
                Status::Warn => s.warn += 1,
                Status::Fail => s.fail += 1,
                Status::Skip => s.skip += 1,
            }
        }
        self.summary = s;
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)? + "\n")?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Writes every table the report has data for.
    pub fn write_tables(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        if let Some(p) = &self.prediction {
            let mut w = csv::Writer::from_path(dir.join("prediction.csv"))?;
            w.write_record(["m", "lambda", "k", "Lambda_k", "mu_pred", "c_k", "d", "multiplicities"])?;
            for r in &p.records {
                w.write_record([
                    r.m.to_string(),
                    r.lambda.to_string(),
                    r.k.to_string(),
                    r.lambda_k.to_string(),
                    r.mu_pred.to_string(),
                    join(&r.c_k),
                    join(&r.d),
                    join(&r.multiplicities),
                ])?;
            }
            w.flush()?;
            if let Some(c) = &p.circulant {
                let mut w = csv::Writer::from_path(dir.join("multiplicity.csv"))?;
                w.write_record(["value", "multiplicity", "indices", "alternating"])?;
                for g in &c.groups {
                    let alt = g.multiplicity == 1 && c.alternating_index == Some(g.indices[0]);
                    w.write_record([g.value.to_string(), g.multiplicity.to_string(), join(&g.indices), alt.to_string()])?;
                }
                w.flush()?;
            }
        }
        if let Some(b) = &self.branch {
            let mut w = csv::Writer::from_path(dir.join("branch.csv"))?;
            w.write_record(["lambda", "u_max", "mass", "s"])?;
            for p in &b.points {
                w.write_record([p.lambda.to_string(), p.u_max.to_string(), p.mass.to_string(), p.s.to_string()])?;
            }
            w.flush()?;
        }
        if !self.states.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("eigenpairs.csv"))?;
            w.write_record(["lambda", "k", "mu", "wave_number", "component", "degenerate", "residual"])?;
            for s in &self.states {
                for e in &s.eigen {
                    w.write_record([
                        s.lambda.to_string(),
                        e.k.to_string(),
                        e.mu.to_string(),
                        e.wave_number.to_string(),
                        format!("{:?}", e.component).to_lowercase(),
                        e.degenerate.to_string(),
                        e.residual.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }
        if self.states.iter().any(|s| !s.peaks.is_empty()) {
            let mut w = csv::Writer::from_path(dir.join("peaks.csv"))?;
            w.write_record(["lambda", "j", "x", "y", "height", "height_predicted", "delta", "delta_over_sqrt_lambda", "sigma"])?;
            for s in &self.states {
                for p in &s.peaks {
                    w.write_record([
                        s.lambda.to_string(),
                        p.j.to_string(),
                        p.x.to_string(),
                        p.y.to_string(),
                        p.height.to_string(),
                        p.height_predicted.to_string(),
                        p.delta.to_string(),
                        p.delta_over_sqrt_lambda.to_string(),
                        p.sigma.to_string(),
                    ])?;
                }
            }
            w.flush()?;
            let mut w = csv::Writer::from_path(dir.join("c_vectors.csv"))?;
            w.write_record(["lambda", "k", "normalized", "alignment", "degenerate"])?;
            for s in &self.states {
                for c in &s.c_vectors {
                    w.write_record([
                        s.lambda.to_string(),
                        c.k.to_string(),
                        join(&c.normalized),
                        c.alignment.to_string(),
                        c.degenerate.to_string(),
                    ])?;
                }
            }
            w.flush()?;
            let mut w = csv::Writer::from_path(dir.join("profile.csv"))?;
            w.write_record(["lambda", "k", "peak", "window", "second_order", "first_order"])?;
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            for s in &self.states {
                for p in &s.profile {
                    w.write_record([
                        s.lambda.to_string(),
                        p.k.to_string(),
                        p.peak.to_string(),
                        p.window.to_string(),
                        opt(p.second_order),
                        opt(p.first_order),
                    ])?;
                }
            }
            w.flush()?;
        }
        if !self.comparison.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("comparison.csv"))?;
            for r in &self.comparison {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        if !self.verdicts.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("verdicts.csv"))?;
            w.write_record(["name", "status", "values", "detail"])?;
            for v in &self.verdicts {
                w.write_record([v.name.clone(), format!("{:?}", v.status).to_uppercase(), join(&v.values), v.detail.clone()])?;
            }
            w.flush()?;
        }
        if let Some(t) = &self.selftest {
            let mut w = csv::Writer::from_path(dir.join("selftest.csv"))?;
            w.write_record(["name", "value", "bound", "relation", "passed"])?;
            for c in &t.checks {
                w.write_record([c.name.clone(), c.value.to_string(), c.bound.to_string(), c.relation.symbol().to_string(), c.passed.to_string()])?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}
