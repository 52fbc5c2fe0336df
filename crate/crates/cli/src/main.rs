use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dbundle::harness::{self, RunConfig};
use dbundle::{zoo, Error};

/// Run the dbundle check suites and write a JSON report.
#[derive(Parser)]
#[command(name = "dbundle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run check suites.
    Run(RunArgs),
    /// Print a fixture's charts, cocycle and expected verdicts.
    Describe { fixture: String },
    /// List suites and fixtures.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Suite to run (repeatable or comma separated): a module name, `all` or `acceptance`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    suite: Vec<String>,
    /// Keep only checks that use this fixture.
    #[arg(long, value_delimiter = ',')]
    fixture: Vec<String>,
    /// Base-space grid resolution for the fixtures.
    #[arg(long, default_value_t = zoo::DEFAULT_GRID)]
    grid: usize,
    /// Override one tolerance, KEY=VAL.
    #[arg(long = "tol-override", value_name = "KEY=VAL")]
    tol_override: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the flattened CSV view.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    jobs: Option<usize>,
    /// Record wall-clock runtimes; the report is then no longer reproducible byte for byte.
    #[arg(long)]
    timing: bool,
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("dbundle: {e}");
    ExitCode::from(2)
}

fn run(args: RunArgs) -> ExitCode {
    let mut cfg = RunConfig {
        suites: args.suite,
        fixtures: args.fixture,
        grid: args.grid,
        seed: args.seed,
        jobs: args.jobs,
        timing: args.timing,
        ..RunConfig::default()
    };
    for o in &args.tol_override {
        if let Err(e) = cfg.apply_override(o) {
            return usage(e);
        }
    }
    let report = match harness::run(&cfg) {
        Ok(r) => r,
        Err(e @ (Error::Unknown(_) | Error::Format(_))) => return usage(e),
        Err(e) => {
            eprintln!("dbundle: {e}");
            return ExitCode::from(1);
        }
    };
    let json = match report.to_json() {
        Ok(j) => j,
        Err(e) => return usage(e),
    };
    match &args.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &json) {
                return usage(format!("{}: {e}", p.display()));
            }
        }
        None => print!("{json}"),
    }
    if let Some(p) = &args.csv {
        let written = report.to_csv().map_err(|e| e.to_string()).and_then(|c| std::fs::write(p, c).map_err(|e| e.to_string()));
        if let Err(e) = written {
            return usage(format!("{}: {e}", p.display()));
        }
    }
    let mut failed = 0;
    for (suite, c) in report.checks() {
        if !c.passed() {
            failed += 1;
            eprintln!("FAIL {suite}/{}: {:e} > {:e} {}", c.name, c.max_violation, c.tolerance, c.detail);
        }
    }
    let total = report.checks().count();
    eprintln!("{} of {total} checks passed", total - failed);
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => run(args),
        Command::Describe { fixture } => match zoo::fixture(&fixture, zoo::DEFAULT_GRID) {
            Ok(fx) => {
                println!("{}", fx.describe());
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
        Command::List => {
            println!("suites: all acceptance {}", harness::SUITES.join(" "));
            println!("fixtures: {}", zoo::NAMES.join(" "));
            ExitCode::SUCCESS
        }
    }
}
