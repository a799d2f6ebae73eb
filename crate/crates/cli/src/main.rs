use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gelfand::harness::{run_with_jobs, Command, DomainKind, ExperimentConfig, Status};

#[derive(Parser)]
#[command(name = "gelfand", version, about = "Blow-up solutions of −Δu = λe^u: predictions, branches, spectra and checks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Critical point, h matrix and eigenvalue predictions
    Predict(Opts),
    /// Follow the solution branch and solve at every λ
    Solve(Opts),
    /// Eigenpairs of the linearized problem at every λ
    Spectrum(Opts),
    /// Full comparison of numerics against predictions, with verdicts
    Verify(Opts),
    /// Built-in consistency checks
    Selftest(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Disk,
    Annulus,
}

#[derive(Args)]
struct Opts {
    /// TOML experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// Comma-separated λ values, largest first
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Number of peaks
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,
    /// Inner radius of the annulus
    #[arg(long)]
    inner_radius: Option<f64>,
}

impl Opts {
    fn config(&self) -> gelfand::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = self.domain {
            cfg.domain.kind = match d {
                DomainArg::Disk => DomainKind::Disk,
                DomainArg::Annulus => DomainKind::Annulus,
            };
        }
        if let Some(a) = self.inner_radius {
            cfg.domain.inner_radius = a;
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(l) = &self.lambda {
            cfg.lambda_list = l.clone();
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Sub::Predict(o) => (Command::Predict, o),
        Sub::Solve(o) => (Command::Solve, o),
        Sub::Spectrum(o) => (Command::Spectrum, o),
        Sub::Verify(o) => (Command::Verify, o),
        Sub::Selftest(o) => (Command::Selftest, o),
    };
    let cfg = match opts.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = run_with_jobs(command, &cfg, opts.jobs);
    let report = &outcome.report;
    if let Some(t) = &report.selftest {
        for c in &t.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            println!("{mark} {:<24} {:e} {} {:e}", c.name, c.value, c.relation.symbol(), c.bound);
        }
    }
    for v in &report.verdicts {
        println!("{:?} {:<28} {}", v.status, v.name, v.detail);
    }
    if !report.verdicts.is_empty() {
        let s = report.summary;
        println!("{} pass, {} warn, {} fail, {} skipped", s.pass, s.warn, s.fail, s.skip);
    }
    if let Some(e) = &report.error {
        eprintln!("error: {}", e.message);
    }
    if report.verdicts.iter().any(|v| v.status == Status::Fail) {
        eprintln!("verdicts failed");
    }
    println!("report: {}", cfg.output_dir.join("results.json").display());
    ExitCode::from(outcome.exit_code as u8)
}
