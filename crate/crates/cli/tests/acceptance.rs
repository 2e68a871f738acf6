//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use qlab_cli::examples::{run_example, Example};
use qlab_cli::sweep::{run_sweep, SweepConfig, SweepKind, SweepReport};
use qlab_core::equality::BatteryConfig;
use qlab_core::functions::make_function;
use qlab_core::quadrature::QuadConfig;
use serde_json::Value;

const SEED: u64 = 20240611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn sweep(kind: SweepKind, n: usize, dim: usize) -> Result<SweepReport, String> {
    run_sweep(&SweepConfig::new(kind, n, dim, SEED)).map_err(|e| e.to_string())
}

fn first_failures(r: &SweepReport) -> String {
    let notes: Vec<&str> =
        r.rows.iter().filter(|row| row.violations > 0).take(3).map(|row| row.note.as_str()).collect();
    if notes.is_empty() {
        String::new()
    } else {
        format!(" first: {}", notes.join(" | "))
    }
}

fn sweep_summary(r: &SweepReport) -> String {
    format!("n={} checks={} violations={}{}", r.rows.len(), r.checks, r.violations, first_failures(r))
}

fn dpi() -> Result<Outcome, String> {
    let r = sweep(SweepKind::Dpi, 200, 3)?;
    Ok(outcome(r.violations == 0 && r.checks == 200 * 8, sweep_summary(&r)))
}

fn superop() -> Result<Outcome, String> {
    let r = sweep(SweepKind::Superop, 100, 3)?;
    let x2 = r.counter("x2_inverse_violations");
    Ok(outcome(r.violations == 0 && x2 >= 1, format!("{} x^2 inverse-form violations={x2}", sweep_summary(&r))))
}

fn oracle_report() -> Result<SweepReport, String> {
    sweep(SweepKind::Oracle, 100, 4)
}

fn oracle(r: &SweepReport) -> Outcome {
    let bad = r.counter("oracle_violations");
    let (fin, inf) = (r.counter("finite"), r.counter("infinite"));
    outcome(
        bad == 0 && fin > 0 && inf > 0 && r.rows.len() == 100,
        format!("n={} finite={fin} infinite={inf} mismatches={bad}", r.rows.len()),
    )
}

fn decomposition(r: &SweepReport) -> Outcome {
    let bad = r.counter("decomposition_violations");
    outcome(bad == 0 && r.rows.len() == 100, format!("n={} mismatches={bad}", r.rows.len()))
}

fn battery() -> Result<Outcome, String> {
    // Regimes cycle over three constructions, so 200 gives at least 50 each.
    let r = sweep(SweepKind::Battery, 200, 4)?;
    Ok(outcome(r.violations == 0, sweep_summary(&r)))
}

fn example(which: Example) -> Result<Outcome, String> {
    let v = run_example(which, SEED, &BatteryConfig::default()).map_err(|e| e.to_string())?;
    let asserts = v["assertions"].as_array().cloned().unwrap_or_default();
    let failed: Vec<String> = asserts
        .iter()
        .filter(|a| a["holds"] != Value::Bool(true))
        .map(|a| a["name"].as_str().unwrap_or("?").to_string())
        .collect();
    Ok(outcome(
        !asserts.is_empty() && failed.is_empty(),
        format!("{} assertions, failed: [{}]", asserts.len(), failed.join(", ")),
    ))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn qlab(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qlab")).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn qubit() -> Result<Outcome, String> {
    let base = example(Example::Qubit)?;
    let path = fixtures().join("qubit.json");
    let (code, stdout) = qlab(&["battery", "--input", path.to_str().unwrap()])?;
    let v: Value = serde_json::from_slice(&stdout).map_err(|e| format!("exit {code}: {e}"))?;
    let cond = |id: &str| v["conditions"].as_array().and_then(|cs| cs.iter().find(|c| c["tag"] == id)).cloned();
    let vii = cond("vii").ok_or("no (vii) in fixture report")?;
    let xi = cond("xi").ok_or("no (xi) in fixture report")?;
    let gap = vii["gap"].as_f64().unwrap_or(f64::NAN);
    let err = (gap - (5f64.sqrt() / 2.0 - 1.0)).abs();
    let fixture_ok = code == 0 && err <= 1e-10 && vii["verdict"] == "fail" && xi["verdict"] == "pass";
    Ok(outcome(base.pass && fixture_ok, format!("{}; fixture (vii) gap error={err:.1e} (xi)={}", base.detail, xi["verdict"])))
}

fn metric() -> Result<Outcome, String> {
    let r = sweep(SweepKind::Metric, 100, 3)?;
    Ok(outcome(r.violations == 0, sweep_summary(&r)))
}

fn quadrature() -> Result<Outcome, String> {
    let h = make_function("power", &[0.5]).map_err(|e| e.to_string())?;
    let mu = h.measure().ok_or("x^0.5 has no representing measure")?;
    let quad = QuadConfig { rel_tol: 1e-10, ..QuadConfig::default() };
    let mut worst: f64 = 0.0;
    for i in 0..=60 {
        let x = 0.1 * 100f64.powf(i as f64 / 60.0);
        let v = mu.reconstruct(x, &quad).map_err(|e| e.to_string())?;
        worst = worst.max((v - x.sqrt()).abs());
    }
    let mass = mu.total_mass(&quad).map_err(|e| e.to_string())?;
    let mass_err = (mass - 1.0).abs();
    Ok(outcome(worst <= 1e-6 && mass_err <= 1e-6, format!("max reconstruction error={worst:.1e} mass error={mass_err:.1e}")))
}

fn structure() -> Result<Outcome, String> {
    let r = sweep(SweepKind::Structure, 50, 3)?;
    Ok(outcome(r.violations == 0, sweep_summary(&r)))
}

fn determinism() -> Result<Outcome, String> {
    let kinds = [
        (SweepKind::Dpi, 20, 3),
        (SweepKind::Superop, 10, 2),
        (SweepKind::Convexity, 10, 3),
        (SweepKind::Battery, 12, 4),
        (SweepKind::Oracle, 10, 4),
        (SweepKind::Metric, 10, 3),
        (SweepKind::Structure, 6, 3),
    ];
    let mut differing = vec![];
    for (kind, n, dim) in kinds {
        let a = sweep(kind, n, dim)?;
        let b = sweep(kind, n, dim)?;
        if a.to_csv() != b.to_csv() || a.to_json() != b.to_json() {
            differing.push(kind.name().to_string());
        }
    }
    // The binary under different thread counts must produce the same bytes.
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_qlab"))
            .env("QLAB_THREADS", threads)
            .args(["--seed", "11", "--format", "csv", "sweep", "--kind", "dpi", "--n", "24", "--dim", "3"])
            .output()
            .map_err(|e| e.to_string())?;
        Ok(out.stdout)
    };
    let (one, four) = (run("1")?, run("4")?);
    if one != four || one.is_empty() {
        differing.push("cli dpi (1 vs 4 threads)".into());
    }
    Ok(outcome(differing.is_empty(), format!("7 sweep kinds + cli rerun, differing: [{}]", differing.join(", "))))
}

type Check<'a> = Box<dyn Fn() -> Result<Outcome, String> + 'a>;

fn main() -> ExitCode {
    let oracle_sweep = oracle_report();
    let criteria: Vec<(&str, Check)> = vec![
        ("dpi sweep over TPCP channels", Box::new(dpi)),
        ("superoperator inequalities", Box::new(superop)),
        ("boundary-convention oracle", Box::new(|| oracle_sweep.as_ref().map(oracle).map_err(Clone::clone))),
        ("decomposition identity", Box::new(|| oracle_sweep.as_ref().map(decomposition).map_err(Clone::clone))),
        ("equality-battery coherence", Box::new(battery)),
        ("pinched qubit example", Box::new(qubit)),
        ("entangled partial trace example", Box::new(|| example(Example::Entangled))),
        ("composite counterexample bundle", Box::new(|| example(Example::Composite))),
        ("pinched pure state example", Box::new(|| example(Example::PureState))),
        ("metric duality and Hessian", Box::new(metric)),
        ("measure quadrature", Box::new(quadrature)),
        ("structure round trip", Box::new(structure)),
        ("determinism", Box::new(determinism)),
    ];

    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        let secs = start.elapsed().as_secs_f64();
        println!("{} {:>2} {name}: {detail} ({secs:.2}s)", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
