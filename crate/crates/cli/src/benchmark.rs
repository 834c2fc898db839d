//! Gaussian closure against the truncated Fock-basis master equation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gaussian_tcl::fock::{
    cutoff_for_occupation, cutoff_for_poisson_tail, cutoff_for_thermal_tail, evolve_exact, FockOperator,
    FockTrajectory, MAX_CUTOFF,
};
use gaussian_tcl::gaussian::materialize_fock;
use gaussian_tcl::moments::{MomentSample, MomentTrajectory};
use gaussian_tcl::C64;
use serde::Serialize;

use crate::config::{InitialSpec, KerrSpec, PictureSpec, RegimeSpec, ScenarioConfig, OBSERVABLES};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, write_atomic, write_json, REPORT_SCHEMA_VERSION};
use crate::simulate::trajectory;

pub const BENCHMARK_HEADER_VERSION: &str = "# gtcl-benchmark v1";

#[derive(Clone, Debug, Serialize)]
pub struct ObservableError {
    pub observable: String,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// `max_abs / max_t |exact|`; absent when the exact value vanishes.
    pub max_rel: Option<f64>,
    /// `mean_abs / mean_t |exact|`.
    pub mean_rel: Option<f64>,
    pub threshold: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub scenario: String,
    pub params: KerrSpec,
    pub order: u8,
    pub picture: PictureSpec,
    pub cutoff: usize,
    pub cutoff_rule: &'static str,
    pub oracle_initial: &'static str,
    pub closure_initial: &'static str,
    pub max_top_population: f64,
    pub max_trace_error: f64,
    pub wall_time_closure_s: f64,
    pub wall_time_oracle_s: f64,
    pub errors: Vec<ObservableError>,
    pub passed: bool,
    pub csv: Option<PathBuf>,
    pub config: ScenarioConfig,
}

pub struct BenchmarkRun {
    pub report: BenchmarkReport,
    pub closure: MomentTrajectory,
    pub oracle: FockTrajectory,
}

/// The eight compared values of a closure sample, in [`OBSERVABLES`] order.
pub fn closure_values(s: &MomentSample) -> [C64; 8] {
    [s.m[0], s.m[1], s.number(0), s.a_squared(0), s.m[1] * s.m[1] + s.c[(1, 1)], s.c[(0, 0)], s.c[(0, 1)], s.c[(1, 1)]]
}

/// Same values from oracle moments; the covariance follows from
/// `C = ⟨𝔞𝔞ᵀ⟩ − mmᵀ + J/2`.
pub fn oracle_values(s: &gaussian_tcl::fock::FockSample) -> [C64; 8] {
    let f = &s.moments;
    let half = C64::new(0.5, 0.0);
    [f.a, f.ad, f.n, f.a2, f.ad2, f.a2 - f.a * f.a, f.n + half - f.a * f.ad, f.ad2 - f.ad * f.ad]
}

fn choose_cutoff(cfg: &ScenarioConfig, closure: &MomentTrajectory) -> CliResult<(usize, &'static str)> {
    if let Some(n) = cfg.oracle.cutoff {
        if !(10..=MAX_CUTOFF).contains(&n) {
            return Err(CliError::Config(format!("oracle cutoff {n} outside [10, {MAX_CUTOFF}]")));
        }
        return Ok((n, "fixed"));
    }
    let mut peak = 0.0f64;
    let mut coherent = 0.0f64;
    let mut incoherent = 0.0f64;
    for s in &closure.samples {
        let n = s.number(0).re;
        let coh = (s.m[0] * s.m[1]).re.max(0.0);
        peak = peak.max(n);
        coherent = coherent.max(coh);
        incoherent = incoherent.max(n - coh);
    }
    if !peak.is_finite() {
        return Err(CliError::Numerical(gaussian_tcl::Error::NonFinite("closure occupation".into())));
    }
    let cutoff = match cfg.initial {
        InitialSpec::Fock { .. } => cutoff_for_occupation(peak),
        _ => cutoff_for_occupation(peak).max(cutoff_for_poisson_tail(coherent) + cutoff_for_thermal_tail(incoherent)),
    }
    .max(10);
    if cutoff > MAX_CUTOFF {
        return Err(CliError::Config(format!(
            "oracle infeasible: peak ⟨N⟩ ≈ {peak:.3e} needs cutoff {cutoff} > {MAX_CUTOFF}"
        )));
    }
    Ok((cutoff, "auto"))
}

fn errors_for(name: &str, closure: &[C64], exact: &[C64], threshold: Option<f64>) -> ObservableError {
    let diffs: Vec<f64> = closure.iter().zip(exact).map(|(g, f)| (g - f).norm()).collect();
    let n = diffs.len() as f64;
    let max_abs = diffs.iter().copied().fold(0.0, f64::max);
    let mean_abs = diffs.iter().sum::<f64>() / n;
    let scale_max = exact.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale_mean = exact.iter().map(|z| z.norm()).sum::<f64>() / n;
    let tiny = 1e-300;
    ObservableError {
        observable: name.to_string(),
        max_abs,
        mean_abs,
        max_rel: (scale_max > tiny).then(|| max_abs / scale_max),
        mean_rel: (scale_mean > tiny).then(|| mean_abs / scale_mean),
        threshold,
        passed: threshold.is_none_or(|t| max_abs <= t),
    }
}

/// Runs both solvers on the configured grid, in the Schrödinger picture.
pub fn benchmark(cfg: &ScenarioConfig) -> CliResult<BenchmarkRun> {
    if !cfg.oracle.enabled {
        return Err(CliError::Config("oracle disabled in config".into()));
    }
    if cfg.regime != RegimeSpec::Full {
        return Err(CliError::Config("the oracle solves the full model; set regime to \"full\"".into()));
    }
    let mut gcfg = cfg.clone();
    gcfg.picture = PictureSpec::Schrodinger;
    if let InitialSpec::Fock { n } = cfg.initial {
        gcfg.initial = InitialSpec::Thermal { nbar: n as f64 };
    }
    let t_closure = Instant::now();
    let closure = trajectory(&gcfg)?;
    let wall_closure = t_closure.elapsed().as_secs_f64();

    let (cutoff, rule) = choose_cutoff(cfg, &closure)?;
    let p = cfg.model.kerr_params()?;
    let (rho0, oracle_initial) = match cfg.initial {
        InitialSpec::Fock { n } => {
            if n >= cutoff {
                return Err(CliError::Config(format!("number state {n} does not fit cutoff {cutoff}")));
            }
            (FockOperator::fock_state(n, cutoff)?, "number state")
        }
        _ => (materialize_fock(&cfg.initial.gaussian()?, cutoff)?, "materialized closure initial state"),
    };
    let grid = cfg.time.grid()?;
    let t_oracle = Instant::now();
    let oracle = evolve_exact(&rho0, &p, &grid, &cfg.tolerances.ode())?;
    let wall_oracle = t_oracle.elapsed().as_secs_f64();

    let cl: Vec<[C64; 8]> = closure.samples.iter().map(closure_values).collect();
    let ex: Vec<[C64; 8]> = oracle.samples.iter().map(oracle_values).collect();
    let errors: Vec<ObservableError> = OBSERVABLES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let g: Vec<C64> = cl.iter().map(|row| row[k]).collect();
            let f: Vec<C64> = ex.iter().map(|row| row[k]).collect();
            errors_for(name, &g, &f, cfg.oracle.thresholds.get(*name).copied())
        })
        .collect();
    let max_trace_error = oracle.samples.iter().map(|s| (s.trace - C64::new(1.0, 0.0)).norm()).fold(0.0, f64::max);
    let passed = errors.iter().all(|e| e.passed);
    let report = BenchmarkReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "benchmark",
        scenario: cfg.name.clone(),
        params: p.into(),
        order: cfg.order,
        picture: PictureSpec::Schrodinger,
        cutoff,
        cutoff_rule: rule,
        oracle_initial,
        closure_initial: if matches!(cfg.initial, InitialSpec::Fock { .. }) {
            "thermal state with the same moments"
        } else {
            "configured Gaussian state"
        },
        max_top_population: oracle.max_top_population,
        max_trace_error,
        wall_time_closure_s: wall_closure,
        wall_time_oracle_s: wall_oracle,
        errors,
        passed,
        csv: None,
        config: cfg.clone(),
    };
    Ok(BenchmarkRun { report, closure, oracle })
}

/// Side-by-side columns `t, <obs>_re_closure, <obs>_im_closure,
/// <obs>_re_exact, <obs>_im_exact, …`.
pub fn benchmark_csv(run: &BenchmarkRun) -> String {
    let mut out = String::new();
    out.push_str(BENCHMARK_HEADER_VERSION);
    out.push('\n');
    let mut cols = vec!["t".to_string()];
    for name in OBSERVABLES {
        for part in ["re_closure", "im_closure", "re_exact", "im_exact"] {
            cols.push(format!("{name}_{part}"));
        }
    }
    out.push_str(&cols.join(","));
    out.push('\n');
    for (g, f) in run.closure.samples.iter().zip(&run.oracle.samples) {
        let (cv, ev) = (closure_values(g), oracle_values(f));
        let mut cells = vec![fmt_f64(g.t)];
        for k in 0..OBSERVABLES.len() {
            for x in [cv[k].re, cv[k].im, ev[k].re, ev[k].im] {
                cells.push(fmt_f64(x));
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes the comparison CSV and report; threshold failures surface as a
/// validation error after both files exist.
pub fn run_benchmark(cfg: &ScenarioConfig, out: &Path) -> CliResult<BenchmarkReport> {
    let mut run = benchmark(cfg)?;
    let csv = out.join(format!("{}.benchmark.csv", cfg.name));
    write_atomic(&csv, benchmark_csv(&run).as_bytes())?;
    run.report.csv = Some(csv);
    write_json(&out.join(format!("{}.benchmark.json", cfg.name)), &run.report)?;
    if !run.report.passed {
        let failed: Vec<String> = run
            .report
            .errors
            .iter()
            .filter(|e| !e.passed)
            .map(|e| format!("{} max error {:.3e} > {:.3e}", e.observable, e.max_abs, e.threshold.unwrap_or(0.0)))
            .collect();
        return Err(CliError::Validation(format!("{}: {}", cfg.name, failed.join("; "))));
    }
    Ok(run.report)
}
