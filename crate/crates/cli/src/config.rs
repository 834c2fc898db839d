//! Scenario configuration (JSON).

use std::collections::BTreeMap;
use std::path::Path;

use gaussian_tcl::bridge::{self, Anchors, ExperimentalParams};
use gaussian_tcl::gaussian::GaussianState;
use gaussian_tcl::kerr::KerrParams;
use gaussian_tcl::liouville::FieldRegime;
use gaussian_tcl::matfun::c;
use gaussian_tcl::moments::{uniform_grid, IntegrationOptions, Order, Picture, SubtractionForm};
use gaussian_tcl::ode::OdeOptions;
use gaussian_tcl::quad::QuadOptions;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Observables compared by `benchmark`; also the accepted threshold keys.
pub const OBSERVABLES: [&str; 8] = ["a", "ad", "n", "a2", "ad2", "c00", "c01", "c11"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub regime: RegimeSpec,
    pub initial: InitialSpec,
    pub time: TimeSpec,
    #[serde(default = "default_order")]
    pub order: u8,
    #[serde(default)]
    pub picture: PictureSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub subtraction: SubtractionSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
}

fn default_order() -> u8 {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrSpec {
    pub delta: f64,
    pub gamma: f64,
    pub chi: f64,
    pub lambda: f64,
    pub drive: f64,
    /// Needed only to convert back to experimental parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<AnchorSpec>,
}

impl From<KerrSpec> for KerrParams {
    fn from(k: KerrSpec) -> Self {
        KerrParams { delta: k.delta, gamma: k.gamma, chi: k.chi, lambda: k.lambda, drive: k.drive }
    }
}

impl From<KerrParams> for KerrSpec {
    fn from(p: KerrParams) -> Self {
        KerrSpec { delta: p.delta, gamma: p.gamma, chi: p.chi, lambda: p.lambda, drive: p.drive, anchors: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentalSpec {
    pub beta2: f64,
    pub gamma_nl: f64,
    pub alpha: f64,
    pub v: f64,
    pub delta_nl: f64,
    pub pulse_energy: f64,
    pub pulse_duration: f64,
    pub k: f64,
}

impl From<ExperimentalSpec> for ExperimentalParams {
    fn from(x: ExperimentalSpec) -> Self {
        ExperimentalParams {
            beta2: x.beta2,
            gamma_nl: x.gamma_nl,
            alpha: x.alpha,
            v: x.v,
            delta_nl: x.delta_nl,
            pulse_energy: x.pulse_energy,
            pulse_duration: x.pulse_duration,
            k: x.k,
        }
    }
}

impl From<ExperimentalParams> for ExperimentalSpec {
    fn from(x: ExperimentalParams) -> Self {
        ExperimentalSpec {
            beta2: x.beta2,
            gamma_nl: x.gamma_nl,
            alpha: x.alpha,
            v: x.v,
            delta_nl: x.delta_nl,
            pulse_energy: x.pulse_energy,
            pulse_duration: x.pulse_duration,
            k: x.k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub v: f64,
    pub delta_nl: f64,
    pub k: f64,
    pub pulse_duration: f64,
}

impl From<AnchorSpec> for Anchors {
    fn from(a: AnchorSpec) -> Self {
        Anchors { v: a.v, delta_nl: a.delta_nl, k: a.k, pulse_duration: a.pulse_duration }
    }
}

/// Exactly one parameter set, enforced by the enum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Kerr(KerrSpec),
    Experimental { params: ExperimentalSpec, lambda: f64 },
}

impl ModelSpec {
    pub fn kerr_params(&self) -> CliResult<KerrParams> {
        let p = match *self {
            ModelSpec::Kerr(k) => k.into(),
            ModelSpec::Experimental { params, lambda } => bridge::to_theoretical(&params.into(), lambda)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeSpec {
    #[default]
    Full,
    Weak,
    Strong,
}

impl From<RegimeSpec> for FieldRegime {
    fn from(r: RegimeSpec) -> Self {
        match r {
            RegimeSpec::Full => FieldRegime::Full,
            RegimeSpec::Weak => FieldRegime::Weak,
            RegimeSpec::Strong => FieldRegime::Strong,
        }
    }
}

fn default_floor() -> f64 {
    1e-6
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Vacuum with a small thermal floor so the state stays regular.
    Vacuum {
        #[serde(default = "default_floor")]
        floor: f64,
    },
    Thermal {
        nbar: f64,
    },
    Coherent {
        re: f64,
        im: f64,
        #[serde(default = "default_floor")]
        floor: f64,
    },
    /// Displaced squeezed thermal state with `⟨a⟩ = re + i·im`,
    /// `⟨δa†δa⟩ = nbar` and `⟨δa δa⟩ = xi_re + i·xi_im`.
    Gaussian {
        re: f64,
        im: f64,
        nbar: f64,
        xi_re: f64,
        xi_im: f64,
    },
    /// Number state; the closure starts from the thermal state with the same
    /// moments.
    Fock {
        n: usize,
    },
}

impl InitialSpec {
    /// Gaussian initial state for the closure.
    pub fn gaussian(&self) -> CliResult<GaussianState> {
        let floor_ok = |f: f64| f.is_finite() && f >= 0.0;
        match *self {
            InitialSpec::Vacuum { floor } if floor_ok(floor) => Ok(GaussianState::coherent(c(0.0, 0.0), floor)?),
            InitialSpec::Thermal { nbar } if floor_ok(nbar) => Ok(GaussianState::thermal(nbar)),
            InitialSpec::Coherent { re, im, floor } if floor_ok(floor) => {
                Ok(GaussianState::coherent(c(re, im), floor)?)
            }
            InitialSpec::Gaussian { re, im, nbar, xi_re, xi_im } => {
                Ok(GaussianState::single_mode(c(re, im), nbar, c(xi_re, xi_im))?)
            }
            InitialSpec::Fock { n } => Ok(GaussianState::thermal(n as f64)),
            _ => Err(CliError::Config("initial occupation/floor must be finite and non-negative".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TimeSpec {
    Uniform { t0: f64, t1: f64, points: usize },
    Explicit { grid: Vec<f64> },
}

impl TimeSpec {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        match self {
            TimeSpec::Uniform { t0, t1, points } => Ok(uniform_grid(*t0, *t1, *points)?),
            TimeSpec::Explicit { grid } => {
                if grid.len() < 2 {
                    return Err(CliError::Config("time grid needs at least two points".into()));
                }
                if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(CliError::Config("time grid must be finite and strictly increasing".into()));
                }
                Ok(grid.clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PictureSpec {
    Interaction,
    #[default]
    Schrodinger,
    Rotating,
}

impl From<PictureSpec> for Picture {
    fn from(p: PictureSpec) -> Self {
        match p {
            PictureSpec::Interaction => Picture::Interaction,
            PictureSpec::Schrodinger => Picture::Schrodinger,
            PictureSpec::Rotating => Picture::Rotating,
        }
    }
}

impl From<Picture> for PictureSpec {
    fn from(p: Picture) -> Self {
        match p {
            Picture::Interaction => PictureSpec::Interaction,
            Picture::Schrodinger => PictureSpec::Schrodinger,
            Picture::Rotating => PictureSpec::Rotating,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub quad_rtol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let o = OdeOptions::default();
        Tolerances { rtol: o.rtol, atol: o.atol, quad_rtol: QuadOptions::default().rtol, max_steps: o.max_steps }
    }
}

impl Tolerances {
    pub fn ode(&self) -> OdeOptions {
        OdeOptions { rtol: self.rtol, atol: self.atol, max_steps: self.max_steps, ..OdeOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtractionSpec {
    #[default]
    Tcl,
    OperatorProduct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    pub enabled: bool,
    /// Fixed Fock cutoff; `None` picks one from the closure's peak occupation.
    pub cutoff: Option<usize>,
    /// Maximum absolute error per observable (keys from [`OBSERVABLES`]).
    pub thresholds: BTreeMap<String, f64>,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec { enabled: true, cutoff: None, thresholds: BTreeMap::new() }
    }
}

/// Command-line overrides.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub order: Option<u8>,
    pub picture: Option<PictureSpec>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn with_overrides(mut self, o: Overrides) -> CliResult<Self> {
        if let Some(k) = o.order {
            self.order = k;
        }
        if let Some(p) = o.picture {
            self.picture = p;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> CliResult<()> {
        let name_ok = !self.name.is_empty()
            && self.name.chars().all(|ch| ch.is_ascii_alphanumeric() || matches!(ch, '_' | '-' | '.'))
            && !self.name.starts_with('.');
        if !name_ok {
            return Err(CliError::Config(format!("scenario name {:?} must be [A-Za-z0-9_.-]+", self.name)));
        }
        Order::from_int(self.order)
            .map_err(|_| CliError::Config(format!("order must be 1 or 2, got {}", self.order)))?;
        self.model.kerr_params()?;
        self.time.grid()?;
        self.initial.gaussian()?;
        let t = &self.tolerances;
        if !(t.rtol > 0.0 && t.atol >= 0.0 && t.quad_rtol > 0.0 && t.max_steps > 0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        for (k, v) in &self.oracle.thresholds {
            if !OBSERVABLES.contains(&k.as_str()) {
                return Err(CliError::Config(format!("unknown observable {k:?} in oracle thresholds")));
            }
            if !(*v >= 0.0) {
                return Err(CliError::Config(format!("threshold for {k} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> Order {
        Order::from_int(self.order).expect("validated")
    }

    pub fn integration_options(&self) -> IntegrationOptions {
        IntegrationOptions {
            ode: self.tolerances.ode(),
            quad: QuadOptions { rtol: self.tolerances.quad_rtol, ..QuadOptions::default() },
            subtraction: match self.subtraction {
                SubtractionSpec::Tcl => SubtractionForm::Tcl,
                SubtractionSpec::OperatorProduct => SubtractionForm::OperatorProduct,
            },
        }
    }
}

/// Input of `convert-params`: any file with a `model` key, scenario configs
/// included.
#[derive(Clone, Debug, Deserialize)]
pub struct ModelFile {
    pub model: ModelSpec,
}
