//! One PASS/FAIL line per acceptance criterion.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use gelfand::green::DomainSpec;
use gelfand::hamiltonian::{find_critical_point, Ansatz, Configuration};
use gelfand::harness::{run, Command, DomainKind, ExperimentConfig, RunReport, StateReport};
use gelfand::pde::{BranchTarget, Continuation, ContinuationOptions, Discretization, DiskBranch, DiskSolution, GridSpec};
use gelfand::peaks::bubble_constants;
use gelfand::spectral::{assemble_h, circulant_report, eigen_h, predict};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(t: Duration, secs: u64) -> bool {
    t <= Duration::from_secs(secs)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn verify(cfg: ExperimentConfig) -> (RunReport, Duration, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { output_dir: dir.path().to_path_buf(), ..cfg };
    let start = Instant::now();
    let out = run(Command::Verify, &cfg);
    (out.report, start.elapsed(), dir)
}

fn mu(s: &StateReport, k: usize) -> f64 {
    s.eigen.iter().find(|e| e.k == k).unwrap().mu
}

fn bubble() -> Outcome {
    let start = Instant::now();
    let b = bubble_constants().unwrap();
    let t = start.elapsed();
    let errs = [
        (b.mass / (8.0 * PI) - 1.0).abs(),
        (b.moment / (-16.0 * PI) - 1.0).abs(),
        (b.log_moment / (-6.0 * 2f64.ln()) - 1.0).abs(),
    ];
    let pass = errs.iter().all(|&e| e <= 1e-6) && within(t, 1);
    outcome(pass, format!("relative errors {:.2e} {:.2e} {:.2e}; {:.3} s", errs[0], errs[1], errs[2], t.as_secs_f64()))
}

fn disk_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut at_lambda = 0.0f64;
    let mut fold = f64::NAN;
    for (i, &peak) in [10.0, 16.0, 22.0].iter().enumerate() {
        let eps2 = 1.0 / (0.5f64 * peak).exp_m1();
        let disc = Discretization::new(DomainSpec::unit_disk(), GridSpec::radial(4096, 0.3 * eps2.sqrt())).unwrap();
        let mut c = Continuation::new(disc.clone(), 0.5, &vec![0.0; disc.len()], ContinuationOptions::default()).unwrap();
        c.run(BranchTarget::UMax(peak)).unwrap();
        let state = c.solve_at_amplitude(peak).unwrap();
        let sup = |exact: DiskSolution<f64>| {
            state.u.iter().zip(&disc.r).map(|(&u, &r)| (u - exact.u(r)).abs()).fold(0.0, f64::max)
        };
        // closed-form member with u(0) = peak, written out independently
        let lambda = 8.0 * eps2 / (1.0 + eps2).powi(2);
        worst = worst.max(sup(DiskSolution { radius: 1.0, lambda, eps2 }));
        at_lambda = at_lambda.max(sup(DiskSolution::from_lambda(1.0, state.lambda, DiskBranch::Upper).unwrap()));
        if i == 0 {
            fold = c.branch().fold.unwrap().lambda;
        }
    }
    let t = start.elapsed();
    let pass = worst <= 1e-6 && (fold - 2.0).abs() <= 1e-5 && within(t, 30);
    outcome(pass, format!("sup error {worst:.2e} (at the solver's λ {at_lambda:.2e}); fold λ* = {fold:.9}; {:.1} s", t.as_secs_f64()))
}

fn disk_default() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.analysis.ball_radius = Some(0.5);
    cfg
}

fn first_band(r: &RunReport, t: Duration) -> Outcome {
    let v: Vec<f64> = r.comparison.iter().filter(|c| c.k == 1).map(|c| c.residual_times_log2.abs()).collect();
    let pass = v.len() == 3 && strictly_decreasing(&v) && v[2] <= 0.15 && within(t, 120);
    outcome(pass, format!("|residual|·log²λ = {v:.4?}; {:.1} s", t.as_secs_f64()))
}

fn second_band() -> Outcome {
    let cfg = ExperimentConfig { lambda_list: vec![1e-2, 3e-3, 1e-3], ..ExperimentConfig::default() };
    let (r, t, _dir) = verify(cfg);
    if let Some(e) = r.error {
        return outcome(false, e.message);
    }
    let l: Vec<f64> = r.states.iter().map(|s| s.lambda).collect();
    let q: Vec<f64> = r.states.iter().map(|s| (mu(s, 2) - 1.0) / s.lambda).collect();
    // quadratic through three points, evaluated at zero
    let limit = (0..3)
        .map(|i| {
            let w: f64 = (0..3).filter(|&j| j != i).map(|j| l[j] / (l[j] - l[i])).product();
            w * q[i]
        })
        .sum::<f64>();
    let rel = (limit / 0.375 - 1.0).abs();
    let split = r.states.iter().map(|s| (mu(s, 2) - mu(s, 3)).abs()).fold(0.0, f64::max);
    let fourth = r.states.iter().all(|s| mu(s, 4) > 1.0);
    let pass = rel <= 0.05 && split <= 1e-8 && fourth && within(t, 120);
    outcome(
        pass,
        format!("limit {limit:.5} (relative {rel:.2e}); |μ²−μ³| ≤ {split:.1e}; μ⁴ > 1: {fourth}; {:.1} s", t.as_secs_f64()),
    )
}

fn peak_height(r: &RunReport) -> Outcome {
    let s = r.states.last().unwrap();
    let err = (s.u_max + 2.0 * s.lambda.ln() - 6.0 * 2f64.ln()).abs();
    outcome(err <= 1e-3, format!("|u_max + 2 log λ − 6 log 2| = {err:.2e} at λ = {:e}", s.lambda))
}

fn local_mass(r: &RunReport) -> Outcome {
    let sigma: Vec<f64> = r.states.iter().map(|s| s.peaks[0].sigma).collect();
    let scaled: Vec<f64> =
        r.states.iter().zip(&sigma).map(|(s, &x)| (x - 8.0 * PI).abs() / s.lambda.sqrt()).collect();
    let last = *sigma.last().unwrap();
    let pass = (last / (8.0 * PI) - 1.0).abs() <= 1e-3 && strictly_decreasing(&scaled);
    outcome(pass, format!("σ = {last:.6} at λ = 1e-5; |σ − 8π|/√λ = {scaled:.4?}"))
}

fn fft_symbol(h: &gelfand::HMatrix) -> Vec<f64> {
    let m = h.dim();
    let mut row: Vec<Complex<f64>> = (0..m).map(|j| Complex::new(h.entries[(0, j)], 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    let mut s: Vec<f64> = row.iter().map(|z| z.re).collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

fn circulant() -> Outcome {
    let start = Instant::now();
    let domain = DomainSpec::annulus(0.5).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for m in [3, 4] {
        let guess = Configuration::polygonal(m, 0.75);
        let r0 = find_critical_point(&domain, &guess, Ansatz::Polygonal).unwrap().config;
        let pred = predict(&domain, &r0).unwrap();
        let h = assemble_h(&domain, &r0).unwrap();
        let e = eigen_h(&h);
        let rep = circulant_report(&h, m).unwrap();
        let fft = fft_symbol(&h);
        let mismatch = fft.iter().zip(&e.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pass &= mismatch <= 1e-10 && rep.symbol_mismatch <= 1e-10;
        let v1 = e.vector(0);
        pass &= !e.is_degenerate(0) && (v1.iter().all(|&x| x > 0.0) || v1.iter().all(|&x| x < 0.0));
        if m == 3 {
            let gap = (pred.lambda_values[1] - pred.lambda_values[2]).abs();
            pass &= gap <= 1e-9;
            notes.push(format!("m=3 |Λ²−Λ³| = {gap:.1e}"));
        } else {
            let simple: Vec<usize> = (1..m).filter(|&k| !e.is_degenerate(k)).collect();
            let alt = simple.len() == 1 && {
                let v = e.vector(simple[0]);
                let dot: f64 = v.iter().enumerate().map(|(i, &x)| if i % 2 == 0 { -x } else { x }).sum::<f64>() / 2.0;
                (dot.abs() - 1.0).abs() <= 1e-9
            };
            pass &= alt;
            notes.push(format!("m=4 simple beyond first: {simple:?}, alternating: {alt}"));
        }
        notes.push(format!("symbol mismatch {mismatch:.1e}"));
    }
    let t = start.elapsed();
    pass &= within(t, 10);
    outcome(pass, format!("{}; {:.2} s", notes.join("; "), t.as_secs_f64()))
}

fn random_matrices() -> Outcome {
    let start = Instant::now();
    let domain = DomainSpec::unit_disk();
    let mut rng = StdRng::seed_from_u64(20_240_607);
    let (mut perron, mut support, mut n) = (f64::INFINITY, usize::MAX, 0);
    while n < 200 {
        let m = rng.gen_range(2..=8);
        let points: Vec<[f64; 2]> = (0..m)
            .map(|_| {
                let r = 0.95 * rng.gen::<f64>().sqrt();
                let t = rng.gen_range(0.0..2.0 * PI);
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let apart = (0..m).all(|i| (i + 1..m).all(|j| {
            (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]) > 1e-2
        }));
        if !apart {
            continue;
        }
        let e = eigen_h(&assemble_h(&domain, &Configuration::new(points)).unwrap());
        let v = e.vector(0);
        let sign = v.iter().map(|x| x.signum()).sum::<f64>().signum();
        perron = perron.min(v.iter().map(|x| x * sign).fold(f64::INFINITY, f64::min));
        for k in (0..m).filter(|&k| !e.is_degenerate(k)) {
            support = support.min(e.vector(k).iter().filter(|x| x.abs() > 1e-9).count());
        }
        n += 1;
    }
    let t = start.elapsed();
    let pass = perron > 1e-6 && support >= 2 && within(t, 10);
    outcome(pass, format!("min Perron component {perron:.3e}; min support {support}; {:.2} s", t.as_secs_f64()))
}

fn annulus() -> Outcome {
    let mut cfg = ExperimentConfig { m: 3, lambda_list: vec![1e-3, 3e-4], ..ExperimentConfig::default() };
    cfg.domain.kind = DomainKind::Annulus;
    cfg.eigen.count = Some(3);
    let (r, t, _dir) = verify(cfg);
    if let Some(e) = r.error {
        return outcome(false, e.message);
    }
    let mut pass = within(t, 1800);
    let mut notes = Vec::new();
    for k in 1..=3 {
        let res: Vec<f64> =
            r.comparison.iter().filter(|c| c.k == k).map(|c| c.residual_times_log2.abs()).collect();
        let align: Vec<f64> = r
            .states
            .iter()
            .map(|s| s.c_vectors.iter().find(|c| c.k == k).map_or(f64::NAN, |c| c.alignment))
            .collect();
        pass &= res.len() == 2 && strictly_decreasing(&res);
        pass &= align.iter().all(|&a| a >= 0.95) && align[1] >= align[0] - 1e-12;
        notes.push(format!("k={k} residual {res:.4?} alignment {align:.6?}"));
    }
    outcome(pass, format!("{}; {:.0} s", notes.join("; "), t.as_secs_f64()))
}

fn profile(r: &RunReport) -> Outcome {
    let rec: Vec<_> = r.states.iter().map(|s| s.profile.iter().find(|p| p.k == 1).copied()).collect();
    let second: Vec<f64> = rec.iter().map(|p| p.and_then(|p| p.second_order).unwrap_or(f64::NAN)).collect();
    let first = rec.last().copied().flatten().and_then(|p| p.first_order).unwrap_or(f64::NAN);
    let last = *second.last().unwrap();
    let pass = strictly_decreasing(&second) && first > last;
    outcome(pass, format!("error/μ = {second:.4?}; first-order model {first:.4} at λ = 1e-5"))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 bubble constants", bubble()));
    results.push(("2 disk closed form and fold", disk_oracle()));
    let (disk, t, _dir) = verify(disk_default());
    if let Some(e) = &disk.error {
        eprintln!("disk sweep failed: {}", e.message);
    }
    results.push(("3 first band on the disk", first_band(&disk, t)));
    results.push(("4 second band slope on the disk", second_band()));
    results.push(("5 peak height", peak_height(&disk)));
    results.push(("6 local mass", local_mass(&disk)));
    results.push(("7 annulus circulant structure", circulant()));
    results.push(("8 random h matrices", random_matrices()));
    results.push(("9 annulus m=3 in two dimensions", annulus()));
    results.push(("10 second-order profile", profile(&disk)));
    let mut failed = 0;
    for (name, o) in &results {
        let mark = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{mark} {name}: {}", o.detail);
    }
    println!("{} passed, {} failed", results.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
