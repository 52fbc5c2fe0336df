// Runs the twelve acceptance criteria and prints one line per criterion.
// The first eleven run in process; determinism goes through the binary.

use std::process::{Command, ExitCode};
use std::time::Instant;

use dbundle::harness::{criteria, Context};
use dbundle::Tolerances;

const SEED: u64 = 42;

// wall-clock limits, seconds
fn limit(name: &str) -> Option<f64> {
    match name {
        "01-zero-detector" => Some(5.0),
        "07-bg-structure" => Some(30.0),
        "09-classification" => Some(120.0),
        _ => None,
    }
}

fn report_bytes(suite: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dbundle"))
        .args(["run", "--suite", suite, "--seed", &SEED.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn main() -> ExitCode {
    let ctx = Context {
        tol: Tolerances::default(),
        grid: dbundle::zoo::DEFAULT_GRID,
    };
    let mut failed = 0;
    for spec in criteria() {
        let start = Instant::now();
        let check = spec.execute(&ctx, SEED, false);
        let secs = start.elapsed().as_secs_f64();
        let slow = limit(spec.name).is_some_and(|l| secs >= l);
        let ok = check.passed() && !slow;
        failed += usize::from(!ok);
        let budget = limit(spec.name).map(|l| format!(" (limit {l}s)")).unwrap_or_default();
        println!(
            "{} {}: violation {:e} <= {:e}; {:.2}s{budget}; {}",
            if ok { "PASS" } else { "FAIL" },
            spec.name,
            check.max_violation,
            check.tolerance,
            secs,
            check.detail
        );
    }

    let twice = report_bytes("all").and_then(|a| report_bytes("all").map(|b| (a, b)));
    let (ok, detail) = match twice {
        Ok((a, b)) => (a == b && !a.is_empty(), format!("two runs, {} and {} bytes", a.len(), b.len())),
        Err(e) => (false, e),
    };
    failed += usize::from(!ok);
    println!(
        "{} 12-determinism: run --suite all --seed {SEED} twice gives identical reports; {detail}",
        if ok { "PASS" } else { "FAIL" }
    );

    println!("{} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
