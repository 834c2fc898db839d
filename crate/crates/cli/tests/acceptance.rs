//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Set `GTCL_BLESS=1` to rewrite the benchmark baseline.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gaussian_tcl_cli::benchmark::{benchmark, run_benchmark, BenchmarkReport};
use gaussian_tcl_cli::check::{run_suite, CheckRecord, CheckReport};
use gaussian_tcl_cli::config::{ModelSpec, ScenarioConfig, Tolerances};
use gaussian_tcl_cli::output::trajectory_csv;
use gaussian_tcl_cli::simulate::{peak_number, trajectory};
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&root().join("configs").join(name)).expect("shipped config loads")
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn records<'a>(report: &'a CheckReport, names: &[&str]) -> Vec<&'a CheckRecord> {
    names.iter().map(|n| report.checks.iter().find(|c| c.name == *n).expect("check exists")).collect()
}

fn summarize(recs: &[&CheckRecord], limit_s: f64) -> Outcome {
    let wall: f64 = recs.iter().map(|r| r.wall_time_s).sum();
    let parts: Vec<String> =
        recs.iter().map(|r| format!("{} {:.2e}/{:.0e}", r.name, r.measured, r.tolerance)).collect();
    outcome(recs.iter().all(|r| r.passed) && wall < limit_s, format!("{} ({wall:.1} s)", parts.join(", ")))
}

fn undriven_decay() -> Outcome {
    let start = Instant::now();
    let cfg = load("decay_thermal.json");
    let closure = match trajectory(&cfg) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("closure failed: {e}")),
    };
    let nbar = 6.0;
    let gamma = cfg.model.kerr_params().unwrap().gamma;
    let exact = |t: f64| nbar * (-0.5 * gamma * t).exp();
    let closure_err = closure.samples.iter().map(|s| (s.number(0).re - exact(s.t)).abs()).fold(0.0, f64::max);
    let run = match benchmark(&load("decay_fock6.json")) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("oracle failed: {e}")),
    };
    let oracle_err = run.oracle.samples.iter().map(|s| (s.moments.n - exact(s.t)).norm()).fold(0.0, f64::max);
    let wall = start.elapsed().as_secs_f64();
    outcome(
        closure_err <= 1e-6 && oracle_err <= 1e-6 && wall < 10.0,
        format!("closure {closure_err:.2e}, oracle {oracle_err:.2e} against 6 e^(-t/2) ({wall:.2} s)"),
    )
}

fn lambda_scaling() -> Outcome {
    let start = Instant::now();
    let base = load("weak_field.json");
    let ModelSpec::Kerr(k) = base.model else { unreachable!("weak_field uses Kerr parameters") };
    let lams = [1e-3, 2e-3, 4e-3];
    let mut diffs = Vec::new();
    for lam in lams {
        let mut cfg = base.clone();
        cfg.model = ModelSpec::Kerr(gaussian_tcl_cli::config::KerrSpec { lambda: lam, ..k });
        cfg.tolerances = Tolerances { rtol: 1e-11, atol: 1e-14, ..cfg.tolerances };
        let mut first = cfg.clone();
        first.order = 1;
        cfg.order = 2;
        match (trajectory(&first), trajectory(&cfg)) {
            (Ok(a), Ok(b)) => diffs.push(a.max_difference(&b).unwrap()),
            (Err(e), _) | (_, Err(e)) => return outcome(false, format!("λ = {lam}: {e}")),
        }
    }
    // least-squares slope through the three points
    let xs: Vec<f64> = lams.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = diffs.iter().map(|d| d.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let wall = start.elapsed().as_secs_f64();
    outcome(
        (slope - 2.0).abs() <= 0.15 && wall < 300.0,
        format!(
            "slope {slope:.4}, differences {} ({wall:.2} s)",
            diffs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn strong_field() -> Outcome {
    let start = Instant::now();
    let cfg = load("strong_field.json");
    let traj = match trajectory(&cfg) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("integration failed: {e}")),
    };
    let (peak, at) = peak_number(&traj);
    let wall = start.elapsed().as_secs_f64();
    outcome(
        (1e8..=1e10).contains(&peak) && wall < 120.0,
        format!("peak <N> = {peak:.4e} at t = {at:.2}, required [1e8, 1e10] ({wall:.2} s)"),
    )
}

fn baseline_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/baselines/decay_fock6.json")
}

fn fock_benchmark() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load("decay_fock6.json");
    let report: BenchmarkReport = match run_benchmark(&cfg, dir.path()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("benchmark failed: {e}")),
    };
    let files_ok =
        dir.path().join("decay_fock6.benchmark.csv").exists() && dir.path().join("decay_fock6.benchmark.json").exists();
    let n_err = report.errors.iter().find(|e| e.observable == "n").map_or(f64::INFINITY, |e| e.max_abs);
    let measured: serde_json::Map<String, Value> =
        report.errors.iter().map(|e| (e.observable.clone(), Value::from(e.max_abs))).collect();
    if std::env::var_os("GTCL_BLESS").is_some() {
        let text = serde_json::to_string_pretty(&Value::Object(measured.clone())).unwrap() + "\n";
        std::fs::create_dir_all(baseline_path().parent().unwrap()).unwrap();
        std::fs::write(baseline_path(), text).unwrap();
    }
    let baseline: serde_json::Map<String, Value> = match std::fs::read_to_string(baseline_path()) {
        Ok(t) => serde_json::from_str(&t).unwrap(),
        Err(e) => return outcome(false, format!("no baseline at {}: {e}", baseline_path().display())),
    };
    // a regression is growth beyond integration noise
    let regressions: Vec<String> = measured
        .iter()
        .filter_map(|(k, v)| {
            let now = v.as_f64().unwrap();
            let then = baseline.get(k).and_then(Value::as_f64).unwrap_or(0.0);
            (now > 2.0 * then + 1e-9).then(|| format!("{k} {now:.2e} > baseline {then:.2e}"))
        })
        .collect();
    let worst = report.errors.iter().map(|e| e.max_abs).fold(0.0, f64::max);
    outcome(
        files_ok && n_err <= 1e-6 && regressions.is_empty() && baseline.len() == measured.len(),
        format!(
            "report written, <N> error {n_err:.2e}, largest closure error {worst:.2e}, cutoff {}{}",
            report.cutoff,
            if regressions.is_empty() { String::new() } else { format!("; {}", regressions.join("; ")) }
        ),
    )
}

fn round_trips(report: &CheckReport) -> Outcome {
    let mut failures = Vec::new();
    for entry in std::fs::read_dir(root().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let Ok(cfg) = ScenarioConfig::load(&path) else { continue };
        match ScenarioConfig::from_json(&cfg.to_json()) {
            Ok(again) if again == cfg && again.to_json() == cfg.to_json() => {}
            _ => failures.push(path.display().to_string()),
        }
    }
    let cfg = load("driven_full.json");
    let deterministic = match (trajectory(&cfg), trajectory(&cfg)) {
        (Ok(a), Ok(b)) => trajectory_csv(&a) == trajectory_csv(&b),
        _ => false,
    };
    let recs = records(report, &["exponential_form_round_trip", "param_bridge_round_trip"]);
    let s = summarize(&recs, f64::INFINITY);
    outcome(
        failures.is_empty() && deterministic && s.passed,
        format!(
            "config round trips {}, repeated CSV identical {deterministic}, {}",
            if failures.is_empty() { "exact".to_string() } else { format!("failed for {failures:?}") },
            s.detail
        ),
    )
}

fn main() {
    let suite = run_suite(None);
    let results = [
        ("F=0 exact decay", undriven_decay()),
        (
            "Gaussian algebra identities",
            summarize(
                &records(
                    &suite,
                    &[
                        "exponential_form_trace",
                        "derivative_finite_difference",
                        "pass_through_residual",
                        "square_residual",
                        "square_weight_thermal_1",
                    ],
                ),
                60.0,
            ),
        ),
        ("Wick vs Fock oracle", summarize(&records(&suite, &["wick_vs_fock_words_le_6"]), 30.0)),
        (
            "adjoint duality and coefficient tables",
            summarize(
                &records(&suite, &["adjoint_duality", "undriven_table", "weak_field_table", "strong_field_table"]),
                f64::INFINITY,
            ),
        ),
        ("second-order lambda^2 scaling", lambda_scaling()),
        ("strong-field magnitude", strong_field()),
        ("number-state benchmark", fock_benchmark()),
        ("determinism and round trips", round_trips(&suite)),
    ];
    let mut all = true;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {} {}  {name}: {}", i + 1, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        all &= o.passed;
    }
    if !all {
        std::process::exit(1);
    }
}
