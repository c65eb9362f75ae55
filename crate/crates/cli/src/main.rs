use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lcl_cli::checks::Group;
use lcl_cli::config::SuiteConfig;
use lcl_cli::emit::{emit_report, Format};
use lcl_cli::error::{CliError, CliResult};
use lcl_cli::record::Status;
use lcl_cli::suite::run_suite;

/// Numerical checks of spectral, isoperimetric and localization
/// inequalities for log-concave measures.
#[derive(Parser)]
#[command(name = "lcl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral gap, Bochner, Lichnerowicz and dual-norm checks.
    Spectral(Opts),
    /// Cheeger-Buser, Lipschitz and half-space profile checks.
    Isoperimetry(Opts),
    /// Stochastic localization checks.
    Localize(Opts),
    /// Section, half-space and convex-body checks.
    Slice(Opts),
    /// Every check, including the density sanity checks.
    VerifyAll(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML suite configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    format: Format,
    /// Worker threads.
    #[arg(long, env = "LCL_WORKERS")]
    workers: Option<usize>,
}

impl Command {
    fn split(&self) -> (&Opts, Vec<Group>) {
        match self {
            Command::Spectral(o) => (o, vec![Group::Spectral]),
            Command::Isoperimetry(o) => (o, vec![Group::Isoperimetry]),
            Command::Localize(o) => (o, vec![Group::Localize]),
            Command::Slice(o) => (o, vec![Group::Slice]),
            Command::VerifyAll(o) => (
                o,
                vec![Group::Density, Group::Spectral, Group::Isoperimetry, Group::Localize, Group::Slice],
            ),
        }
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    let (opts, groups) = cli.command.split();
    let mut cfg = match &opts.config {
        Some(p) => SuiteConfig::load(p)?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(o) = &opts.out {
        cfg.out = Some(o.clone());
    }
    if let Some(n) = opts.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("lcl-out"));
    let run = run_suite(&cfg, &groups)?;
    emit_report(&run, &out, opts.format)?;

    let (mut pass, mut fail, mut observe) = (0, 0, 0);
    for r in &run.report.records {
        match r.status {
            Status::Pass => pass += 1,
            Status::Observe => observe += 1,
            Status::Fail => {
                fail += 1;
                eprintln!("FAIL {} [{}]", r.id, r.anchor);
                if let Some(e) = &r.error {
                    eprintln!("  error: {e}");
                }
                for i in r.failures() {
                    eprintln!(
                        "  {}: value {} vs bound {} (slack {}, tolerance {})",
                        i.label, i.value, i.bound, i.slack, i.tolerance
                    );
                }
            }
        }
    }
    println!(
        "seed {}: {pass} passed, {fail} failed, {observe} observed; reports in {}",
        cfg.seed,
        out.display()
    );
    Ok(fail == 0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status() as u8)
        }
    }
}
