use std::path::{Path, PathBuf};
use std::time::Instant;

use gaussian_tcl::kerr::{KerrModel, KerrParams};
use gaussian_tcl::moments::{simulate, MomentTrajectory};
use serde::Serialize;

use crate::config::{InitialSpec, KerrSpec, PictureSpec, ScenarioConfig, Tolerances};
use crate::error::{CliError, CliResult};
use crate::output::{trajectory_csv, write_atomic, write_json, REPORT_SCHEMA_VERSION, TRAJECTORY_HEADER_VERSION};

#[derive(Clone, Debug, Serialize)]
pub struct OdeSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftSummary {
    /// Largest Hermiticity defect of (m, C) over the samples.
    pub max_herm_drift: f64,
    /// Smallest eigenvalue of the uncertainty matrix over the samples.
    pub min_uncertainty_eig: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub scenario: String,
    pub csv_format: &'static str,
    pub params: KerrSpec,
    pub order: u8,
    pub picture: PictureSpec,
    pub tolerances: Tolerances,
    pub wall_time_s: f64,
    pub samples: usize,
    pub ode: OdeSummary,
    pub drift: DriftSummary,
    pub peak_n: f64,
    pub peak_n_time: f64,
    pub csv: PathBuf,
    pub config: ScenarioConfig,
}

pub fn model_for(cfg: &ScenarioConfig) -> CliResult<(KerrParams, KerrModel)> {
    let p = cfg.model.kerr_params()?;
    let model = KerrModel::new(p, cfg.regime.into())?;
    Ok((p, model))
}

/// The closure trajectory in the configured picture.
pub fn trajectory(cfg: &ScenarioConfig) -> CliResult<MomentTrajectory> {
    if let InitialSpec::Fock { .. } = cfg.initial {
        return Err(CliError::Config("number-state initial conditions are for `benchmark` only".into()));
    }
    let (_, model) = model_for(cfg)?;
    let initial = cfg.initial.gaussian()?;
    let grid = cfg.time.grid()?;
    let traj = simulate(&model, &initial, &grid, cfg.order(), cfg.picture.into(), &cfg.integration_options())?;
    if traj.samples.iter().any(|s| !s.c.is_finite() || s.m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(CliError::Numerical(gaussian_tcl::Error::NonFinite("trajectory".into())));
    }
    Ok(traj)
}

pub fn peak_number(traj: &MomentTrajectory) -> (f64, f64) {
    traj.samples
        .iter()
        .map(|s| (s.number(0).re, s.t))
        .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a })
}

pub fn run_simulate(cfg: &ScenarioConfig, out: &Path) -> CliResult<SimulateReport> {
    let start = Instant::now();
    let traj = trajectory(cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let csv = out.join(format!("{}.csv", cfg.name));
    write_atomic(&csv, trajectory_csv(&traj).as_bytes())?;
    let (peak_n, peak_n_time) = peak_number(&traj);
    let report = SimulateReport {
        schema_version: REPORT_SCHEMA_VERSION,
        command: "simulate",
        scenario: cfg.name.clone(),
        csv_format: TRAJECTORY_HEADER_VERSION,
        params: cfg.model.kerr_params()?.into(),
        order: cfg.order,
        picture: cfg.picture,
        tolerances: cfg.tolerances,
        wall_time_s: wall,
        samples: traj.samples.len(),
        ode: OdeSummary {
            accepted: traj.stats.accepted,
            rejected: traj.stats.rejected,
            rhs_evals: traj.stats.rhs_evals,
        },
        drift: DriftSummary { max_herm_drift: traj.max_herm_drift(), min_uncertainty_eig: traj.min_uncertainty_eig() },
        peak_n,
        peak_n_time,
        csv,
        config: cfg.clone(),
    };
    write_json(&out.join(format!("{}.report.json", cfg.name)), &report)?;
    Ok(report)
}
