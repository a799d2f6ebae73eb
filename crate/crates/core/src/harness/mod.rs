//! Experiment driver: configuration, branch sweeps, spectra, analysis,
//! verdicts and persisted reports.

mod config;
mod report;
mod selftest;

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::*;
pub use report::*;
pub use selftest::{run_selftest, Relation, SelftestCheck, SelftestReport};

use crate::eigen::{check_band_gap, weighted_spectrum_with, EigenPair, SpectrumOptions};
use crate::green::DomainSpec;
use crate::hamiltonian::{find_critical_point_with, Ansatz, Configuration, CriticalPointOptions};
use crate::pde::{ansatz_seed, BranchState, BranchTarget, Checkpoint, Continuation, Discretization, Fold, SolutionBranch};
use crate::peaks::{extract_c, local_mass, locate_peaks, rescaled_profile_error};
use crate::spectral::{
    assemble_h, circulant_report, group_eigenvalues, predict, predict_mu, predict_mu_second_band, predict_peak_height,
    prediction_records, SpectralPrediction, GROUP_TOLERANCE,
};
use crate::{Error, Result};

/// Process exit status for an error: 2 for usage and configuration
/// problems, 3 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::LambdaOutOfRange(_)
        | Error::InvalidDomain(_)
        | Error::IndexOutOfBand { .. }
        | Error::PointOutsideDomain { .. }
        | Error::Io(_) => 2,
        _ => 3,
    }
}

/// Error text with a remedy where one is known.
pub fn describe(e: &Error) -> String {
    match e {
        Error::MeshUnderResolved { .. } => format!("{e}; increase grid.n_r or lower grid.core_factor"),
        Error::WrongPeakCount { .. } => format!("{e}; the branch left the m-peak family, check m and lambda_list"),
        _ => e.to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub exit_code: i32,
}

/// Runs `command` inside a pool of `jobs` worker threads.
pub fn run_with_jobs(command: Command, cfg: &ExperimentConfig, jobs: Option<usize>) -> Outcome {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    match builder.build() {
        Ok(pool) => pool.install(|| run(command, cfg)),
        Err(e) => {
            let mut report = RunReport::new(command, cfg);
            report.error = Some(ErrorReport { message: e.to_string(), exit_code: 2 });
            Outcome { report, exit_code: 2 }
        }
    }
}

/// Runs `command`; the report is written to `cfg.output_dir` whatever the
/// outcome.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Outcome {
    let mut report = RunReport::new(command, cfg);
    let mut log = RunLog::new(&cfg.output_dir);
    log.line(&format!("{} started", command.name()));
    let result = execute(command, cfg, &mut report, &mut log);
    report.tally();
    let mut code = match &result {
        Ok(()) if report.summary.fail > 0 || report.selftest.as_ref().is_some_and(|t| !t.passed) => 1,
        Ok(()) => 0,
        Err(e) => {
            report.error = Some(ErrorReport { message: describe(e), exit_code: exit_code(e) });
            exit_code(e)
        }
    };
    if let Err(e) = persist(&report, &cfg.output_dir) {
        log::error!("could not write the report: {e}");
        if code == 0 {
            code = 2;
        }
    }
    log.line(&format!("{} finished with status {code}", command.name()));
    Outcome { report, exit_code: code }
}

fn persist(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    report.write_tables(&dir.join("tables"))?;
    report.write_json(&dir.join("results.json"))
}

/// Elapsed-time sidecar; the only place wall-clock data is written.
struct RunLog {
    path: PathBuf,
    start: Instant,
}

impl RunLog {
    fn new(dir: &Path) -> Self {
        RunLog { path: dir.join("run.log"), start: Instant::now() }
    }

    fn line(&mut self, msg: &str) {
        log::info!("{msg}");
        if std::fs::create_dir_all(self.path.parent().unwrap_or(Path::new("."))).is_err() {
            return;
        }
        if let Ok(mut f) = std::fs::OpenOptions::new().create(true).append(true).open(&self.path) {
            let _ = writeln!(f, "[{:9.3}s] {msg}", self.start.elapsed().as_secs_f64());
        }
    }
}

fn execute(command: Command, cfg: &ExperimentConfig, report: &mut RunReport, log: &mut RunLog) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    if command == Command::Selftest {
        let t = run_selftest(cfg)?;
        for name in t.failures() {
            log.line(&format!("self-test {name} failed"));
        }
        report.selftest = Some(t);
        return Ok(());
    }
    let domain = cfg.domain_spec()?;
    let pred = stage_predict(cfg, &domain)?;
    let prediction = pred.prediction.clone();
    report.prediction = Some(pred);
    persist(report, &cfg.output_dir)?;
    log.line("prediction written");
    if command == Command::Predict {
        return Ok(());
    }

    let (disc, solved, branch) = stage_solve(cfg, &domain, &prediction, log)?;
    report.branch = Some(branch);
    persist(report, &cfg.output_dir)?;
    log.line(&format!("branch written, {} states solved", solved.len()));
    if command == Command::Solve {
        return Ok(());
    }

    let full = command == Command::Verify;
    let results: Vec<Result<StateReport>> = solved
        .par_iter()
        .enumerate()
        .map(|(i, st)| analyze_state(cfg, &disc, &prediction, st, i, full))
        .collect();
    for r in results {
        match r {
            Ok(s) => {
                log.line(&format!("state λ = {} analysed", s.lambda));
                report.states.push(s);
            }
            Err(e) => {
                persist(report, &cfg.output_dir)?;
                return Err(e);
            }
        }
    }
    if full {
        report.comparison = comparison_rows(cfg, &prediction, &report.states)?;
        report.verdicts = verdicts(cfg, &prediction, &report.states, &report.comparison)?;
    }
    Ok(())
}

fn stage_predict(cfg: &ExperimentConfig, domain: &DomainSpec<f64>) -> Result<PredictionReport> {
    let opts = CriticalPointOptions { tolerance: cfg.tolerance("critical_point"), ..Default::default() };
    let critical_point = match domain {
        DomainSpec::Disk { .. } => find_critical_point_with(domain, &Configuration::new(vec![[0.0, 0.0]]), Ansatz::Free, &opts)?,
        DomainSpec::Annulus { inner_radius, .. } => {
            let guess = Configuration::polygonal(cfg.m, 0.5 * (1.0 + inner_radius));
            find_critical_point_with(domain, &guess, Ansatz::Polygonal, &opts)?
        }
    };
    if !critical_point.converged {
        return Err(Error::ConvergenceFailure(format!(
            "critical point search stopped at |grad H| = {:e}",
            critical_point.grad_norm
        )));
    }
    let h = assemble_h(domain, &critical_point.config)?;
    let prediction = predict(domain, &critical_point.config)?;
    let circulant = match circulant_report(&h, cfg.m) {
        Ok(c) => Some(c),
        Err(Error::NotCirculant(_)) => None,
        Err(e) => return Err(e),
    };
    let records = prediction_records(&prediction, &cfg.lambda_list)?;
    let mut second_band = Vec::new();
    for &l in &cfg.lambda_list {
        for k in cfg.m + 1..=3 * cfg.m {
            second_band.push((l, k, predict_mu_second_band(&prediction, k, l)?));
        }
    }
    Ok(PredictionReport { critical_point, h: h.entries, prediction, circulant, records, second_band })
}

/// Branch checkpoint together with the states already solved at the
/// requested `λ` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCheckpoint {
    pub continuation: Checkpoint<f64>,
    pub solved: Vec<BranchState<f64>>,
    pub fold: Option<Fold<f64>>,
}

pub fn checkpoint_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join(format!("branch_{}.json", cfg.tag()))
}

fn save_checkpoint(path: &Path, cp: &SweepCheckpoint) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_string(cp)?)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

fn load_checkpoint(path: &Path) -> Option<SweepCheckpoint> {
    serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()
}

/// Fold of the disk branch on the coarse uniform-core grid.
fn locate_fold(cfg: &ExperimentConfig, domain: &DomainSpec<f64>) -> Result<Fold<f64>> {
    let disc = Discretization::new(*domain, crate::pde::GridSpec::radial(cfg.grid.fold_n_r, cfg.grid.fold_core_width))?;
    let opts = crate::pde::ContinuationOptions { fold_tolerance: cfg.tolerance("fold"), keep_profiles: 3, ..cfg.continuation };
    let lambda0 = 0.25 * cfg.fold_estimate();
    let mut c = Continuation::new(disc.clone(), lambda0, &vec![0.0; disc.len()], opts)?;
    while c.branch().fold.is_none() {
        if c.checkpoint().steps_taken >= opts.max_steps {
            return Err(Error::ConvergenceFailure("no fold found".into()));
        }
        c.step()?;
    }
    Ok(c.branch().fold.expect("fold located"))
}

type Solved = (Discretization<f64>, Vec<BranchState<f64>>, BranchReport);

fn stage_solve(cfg: &ExperimentConfig, domain: &DomainSpec<f64>, pred: &SpectralPrediction<f64>, log: &mut RunLog) -> Result<Solved> {
    let lambda_min = cfg.lambda_min();
    let d_min = pred.d.iter().cloned().fold(f64::INFINITY, f64::min);
    let kappa = pred.config.points[0];
    let spec = cfg.grid_spec(kappa[0].hypot(kappa[1]), d_min * lambda_min.sqrt());
    let disc = Discretization::new(*domain, spec)?;
    let opts = crate::pde::ContinuationOptions { tolerance: cfg.tolerance("newton"), keep_profiles: 3, ..cfg.continuation };
    let path = checkpoint_path(cfg);

    let resumed = load_checkpoint(&path).filter(|cp| {
        let same_path = crate::pde::ContinuationOptions { max_steps: opts.max_steps, ..cp.continuation.options };
        cp.continuation.domain == *domain && cp.continuation.grid == spec && same_path == opts
    });
    let (mut cont, mut solved, fold) = match resumed {
        Some(mut cp) => {
            log.line(&format!("resuming from {} after {} steps", path.display(), cp.continuation.steps_taken));
            cp.continuation.options.max_steps = opts.max_steps;
            (Continuation::from_checkpoint(cp.continuation)?, cp.solved, cp.fold)
        }
        None => {
            let fold = if domain.is_disk() {
                let f = locate_fold(cfg, domain)?;
                log.line(&format!("fold at λ* = {}", f.lambda));
                Some(f)
            } else {
                None
            };
            let (cont, solved) = if domain.is_disk() {
                let lambda0 = 0.25 * cfg.fold_estimate();
                (Continuation::new(disc.clone(), lambda0, &vec![0.0; disc.len()], opts)?, Vec::new())
            } else {
                let lambda0 = cfg.lambda_list[0];
                let seed = ansatz_seed(&disc, &pred.config.points, &pred.d, lambda0)?;
                let cont = Continuation::new(disc.clone(), lambda0, &seed, opts)?;
                let first = cont.branch().states[0].clone();
                (cont, vec![first])
            };
            (cont, solved, fold)
        }
    };
    let save = |c: &Continuation<f64>, solved: &[BranchState<f64>]| {
        let cp = SweepCheckpoint { continuation: c.checkpoint(), solved: solved.to_vec(), fold };
        save_checkpoint(&path, &cp)
    };
    save(&cont, &solved)?;

    let targets = cfg.lambda_list.clone();
    cont.run_with(BranchTarget::LambdaMin(lambda_min), |c| {
        let st = &c.branch().states;
        let (a, b) = (&st[st.len() - 2], &st[st.len() - 1]);
        while let Some(&t) = targets.get(solved.len()) {
            if !(b.lambda < a.lambda && b.lambda <= t && t < a.lambda) {
                break;
            }
            solved.push(c.solve_at_lambda(t)?);
        }
        save(c, &solved)
    })?;
    if solved.len() != targets.len() {
        return Err(Error::ConvergenceFailure(format!(
            "branch reached λ = {} with {} of {} targets solved",
            cont.branch().last().map_or(f64::NAN, |s| s.lambda),
            solved.len(),
            targets.len()
        )));
    }
    let steps = cont.checkpoint().steps_taken;
    let branch: &SolutionBranch<f64> = cont.branch();
    let points = branch
        .states
        .iter()
        .map(|s| BranchPoint { lambda: s.lambda, u_max: s.u_max, mass: s.mass, s: s.s })
        .collect();
    let report = BranchReport { grid: spec, unknowns: disc.len(), fold, steps, points };
    Ok((disc, solved, report))
}

/// `|cos|` of the angle between `c` and the span of the predicted
/// eigenvectors with indices `group` (1-based).
fn subspace_alignment(pred: &SpectralPrediction<f64>, group: &[usize], c: &[f64]) -> f64 {
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let proj: f64 = group
        .iter()
        .map(|&k| pred.c(k).iter().zip(c).map(|(a, b)| a * b).sum::<f64>().powi(2))
        .sum();
    proj.sqrt() / norm
}

fn analyze_state(
    cfg: &ExperimentConfig,
    disc: &Discretization<f64>,
    pred: &SpectralPrediction<f64>,
    st: &BranchState<f64>,
    index: usize,
    full: bool,
) -> Result<StateReport> {
    let lambda = st.lambda;
    let m = cfg.m;
    let opts = SpectrumOptions { subspace: cfg.subspace(), dense_limit: cfg.eigen.dense_limit };
    let pairs = weighted_spectrum_with(disc, &st.u, lambda, cfg.eigen_count(), &opts)?;
    let eigen = pairs
        .iter()
        .map(|p| EigenRecord {
            k: p.index,
            mu: p.mu,
            wave_number: p.wave_number,
            component: p.component,
            degenerate: p.degenerate,
            residual: p.residual,
        })
        .collect();
    let solver = crate::pde::Solver::new(disc.clone());
    let mut report = StateReport {
        lambda,
        u_max: st.u_max,
        mass: st.mass,
        newton_residual: solver.residual_norm(&st.u, lambda),
        eigen,
        band_gap: check_band_gap(&pairs, m, lambda),
        ball_radius: None,
        peaks: Vec::new(),
        c_vectors: Vec::new(),
        profile: Vec::new(),
    };
    if cfg.analysis.export_eigenfunctions {
        export_eigenfunctions(&cfg.output_dir.join("tables"), disc, &pairs, index)?;
    }
    if !full {
        return Ok(report);
    }

    let mut peaks = locate_peaks(disc, &st.u, lambda, m)?;
    if let Some(r) = cfg.analysis.ball_radius {
        peaks = peaks.with_ball_radius(r);
    }
    let sigma = local_mass(disc, &st.u, lambda, &peaks);
    report.ball_radius = Some(peaks.ball_radius);
    for (j, p) in peaks.peaks.iter().enumerate() {
        report.peaks.push(PeakRecord {
            j: j + 1,
            x: p.x[0],
            y: p.x[1],
            height: p.height,
            height_predicted: predict_peak_height(pred, j + 1, lambda)?,
            delta: peaks.delta[j],
            delta_over_sqrt_lambda: peaks.delta[j] / lambda.sqrt(),
            d_predicted: pred.d[j],
            sigma: sigma[j],
            sigma_excess_scaled: (sigma[j] - 8.0 * PI) / lambda.sqrt(),
        });
    }

    let groups = group_eigenvalues(&pred.lambda_values, GROUP_TOLERANCE);
    for pair in pairs.iter().take(m) {
        let k = pair.index;
        let c = extract_c(disc, pair, &peaks);
        let group = groups.iter().find(|g| g.indices.contains(&k)).expect("every index is grouped");
        report.c_vectors.push(CRecord {
            k,
            alignment: subspace_alignment(pred, &group.indices, &c.raw),
            degenerate: group.multiplicity > 1,
            raw: c.raw.clone(),
            normalized: c.normalized,
        });
        let j = (0..c.raw.len()).fold(0, |b, i| if c.raw[i].abs() > c.raw[b].abs() { i } else { b });
        let window = cfg.analysis.profile_window;
        let (second_order, first_order) = match rescaled_profile_error(disc, pair, &peaks, j, c.raw[j], window) {
            Ok(e) => (Some(e.second_order), Some(e.first_order)),
            Err(Error::WindowExceedsGrid(_)) => (None, None),
            Err(e) => return Err(e),
        };
        report.profile.push(ProfileRecord { k, peak: j + 1, window, second_order, first_order });
    }
    Ok(report)
}

fn export_eigenfunctions(dir: &Path, disc: &Discretization<f64>, pairs: &[EigenPair<f64>], index: usize) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(format!("eigenfunctions_{index}.csv")))?;
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend(pairs.iter().map(|p| format!("v{}", p.index)));
    w.write_record(&header)?;
    for s in 0..disc.copies() {
        let rot = disc.period() * s as f64;
        for k in 0..disc.len() {
            let [x, y] = disc.point(k);
            let (c, sn) = (rot.cos(), rot.sin());
            let mut row = vec![(c * x - sn * y).to_string(), (sn * x + c * y).to_string()];
            row.extend(pairs.iter().map(|p| p.node_value(disc, k, s).to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn comparison_rows(cfg: &ExperimentConfig, pred: &SpectralPrediction<f64>, states: &[StateReport]) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    for s in states {
        for e in s.eigen.iter().filter(|e| e.k <= 3 * cfg.m) {
            let predicted = if e.k <= cfg.m {
                predict_mu(pred, e.k, s.lambda)?
            } else {
                predict_mu_second_band(pred, e.k, s.lambda)?
            };
            rows.push(ComparisonRow::new(s.lambda, e.k, e.mu, predicted));
        }
    }
    Ok(rows)
}

/// WARN on any non-improvement, FAIL on two in a row.
pub fn trend_status(values: &[f64], improved: impl Fn(f64, f64) -> bool) -> (Status, String) {
    if values.len() < 2 {
        return (Status::Skip, "fewer than two values".into());
    }
    let (mut run, mut worst, mut misses) = (0, 0, 0);
    for w in values.windows(2) {
        if improved(w[0], w[1]) {
            run = 0;
        } else {
            run += 1;
            misses += 1;
            worst = worst.max(run);
        }
    }
    match (misses, worst) {
        (0, _) => (Status::Pass, "improves at every step".into()),
        (_, 1) => (Status::Warn, format!("{misses} isolated non-improvement(s)")),
        _ => (Status::Fail, format!("{worst} consecutive non-improvements")),
    }
}

/// Value at zero of the polynomial through `(x_i, y_i)` (Neville).
pub fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for level in 1..n {
        for i in 0..n - level {
            let (a, b) = (x[i], x[i + level]);
            p[i] = (a * p[i + 1] - b * p[i]) / (a - b);
        }
    }
    p[0]
}

/// Derivative at zero of the polynomial through `(x_i, y_i)`.
pub fn derivative_at_zero(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    (0..n)
        .map(|i| {
            let others = (0..n).filter(|&j| j != i);
            let basis: f64 = others.clone().map(|j| -x[j] / (x[i] - x[j])).product();
            let log_derivative: f64 = others.map(|j| -1.0 / x[j]).sum();
            y[i] * basis * log_derivative
        })
        .sum()
}

fn verdicts(
    cfg: &ExperimentConfig,
    pred: &SpectralPrediction<f64>,
    states: &[StateReport],
    rows: &[ComparisonRow],
) -> Result<Vec<Verdict>> {
    let m = cfg.m;
    let mut out = Vec::new();
    let decreasing = |a: f64, b: f64| b < a;

    for k in 1..=m {
        let values: Vec<f64> = rows.iter().filter(|r| r.k == k).map(|r| r.residual_times_log2.abs()).collect();
        let (status, detail) = trend_status(&values, decreasing);
        out.push(Verdict { name: format!("first_band_residual_k{k}"), status, values, detail });
    }

    let below: Vec<f64> = states.iter().map(|s| s.eigen.iter().take(m).fold(0.0, |a: f64, e| a.max(e.mu))).collect();
    let ok = states.iter().all(|s| s.band_gap.first_band_below_half);
    out.push(Verdict {
        name: "first_band_below_half".into(),
        status: if ok { Status::Pass } else { Status::Fail },
        values: below,
        detail: "max μ^k, k ≤ m".into(),
    });

    let gaps: Vec<f64> = states.iter().filter_map(|s| s.band_gap.gap_value).collect();
    let (status, detail) = if gaps.len() < states.len() {
        (Status::Skip, format!("needs {} eigenpairs per state", 3 * m + 1))
    } else if gaps.iter().all(|&g| g > 1.0) {
        (Status::Pass, "μ^{3m+1} > 1".into())
    } else {
        (Status::Fail, "μ^{3m+1} ≤ 1".into())
    };
    out.push(Verdict { name: "band_gap_above_one".into(), status, values: gaps, detail });

    let tol = cfg.tolerance("second_band_slope");
    let l0 = cfg.lambda_list[0];
    let slopes: Vec<f64> = (m + 1..=3 * m)
        .map(|k| predict_mu_second_band(pred, k, l0).map(|mu| (mu - 1.0) / l0))
        .collect::<Result<_>>()?;
    let band_scale = slopes.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
    for (k, &target) in (m + 1..=3 * m).zip(&slopes) {
        let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.k == k).map(|r| (r.lambda, r.mu_numeric)).collect();
        let name = format!("second_band_slope_k{k}");
        if pts.len() < 2 || pts.len() < states.len() {
            out.push(Verdict { name, status: Status::Skip, values: Vec::new(), detail: "needs two λ values".into() });
            continue;
        }
        let (x, mu): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
        let quotients: Vec<f64> = x.iter().zip(&mu).map(|(&l, &v)| (v - 1.0) / l).collect();
        let limit = extrapolate_to_zero(&x, &quotients);
        let offset = extrapolate_to_zero(&x, &mu) - 1.0;
        let free = derivative_at_zero(&x, &mu);
        let scale = if target != 0.0 { target.abs() } else { band_scale };
        let rel = (limit - target).abs() / scale;
        let rel_free = (free - target).abs() / band_scale;
        let status = if rel <= tol {
            Status::Pass
        } else if rel_free <= tol {
            Status::Warn
        } else {
            Status::Fail
        };
        let detail = format!(
            "extrapolated (μ−1)/λ = {limit} vs {target} (relative {rel:.3e}); offset-free slope {free} (relative to band {rel_free:.3e}); grid offset μ(0)−1 = {offset:.3e}"
        );
        let mut values = quotients;
        values.extend([limit, free]);
        out.push(Verdict { name, status, values, detail });
    }

    let min_cos = cfg.tolerance("alignment");
    for k in 1..=m {
        let values: Vec<f64> = states.iter().filter_map(|s| s.c_vectors.iter().find(|c| c.k == k)).map(|c| c.alignment).collect();
        let (mut status, mut detail) = trend_status(&values, |a, b| b >= a - 1e-12);
        if values.last().is_some_and(|&c| c < min_cos) {
            status = Status::Fail;
            detail = format!("|cos| below {min_cos} at the smallest λ");
        }
        out.push(Verdict { name: format!("c_alignment_k{k}"), status, values, detail });
    }

    for j in 1..=m {
        let values: Vec<f64> =
            states.iter().filter_map(|s| s.peaks.iter().find(|p| p.j == j)).map(|p| p.sigma_excess_scaled.abs()).collect();
        let (status, detail) = trend_status(&values, decreasing);
        out.push(Verdict { name: format!("local_mass_j{j}"), status, values, detail });
    }

    let values: Vec<f64> = states
        .iter()
        .filter_map(|s| s.profile.iter().find(|p| p.k == 1).and_then(|p| p.second_order))
        .collect();
    let (status, detail) = trend_status(&values, decreasing);
    out.push(Verdict { name: "profile_error_k1".into(), status, values, detail });
    Ok(out)
}
