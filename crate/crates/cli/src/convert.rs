use std::path::Path;

use gaussian_tcl::bridge::{from_theoretical, to_theoretical};
use serde::Serialize;

use crate::config::{ExperimentalSpec, KerrSpec, ModelFile, ModelSpec};
use crate::error::{CliError, CliResult};
use crate::output::REPORT_SCHEMA_VERSION;

#[derive(Clone, Debug, Serialize)]
pub struct ConvertReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub direction: &'static str,
    pub kerr: KerrSpec,
    pub experimental: ExperimentalSpec,
    /// Set when `Δ = 0` with zero detuning leaves `β₂` free; 0 is reported.
    pub beta2_unconstrained: bool,
}

pub fn convert(model: &ModelSpec) -> CliResult<ConvertReport> {
    match *model {
        ModelSpec::Experimental { params, lambda } => {
            let p = to_theoretical(&params.into(), lambda)?;
            Ok(ConvertReport {
                schema_version: REPORT_SCHEMA_VERSION,
                command: "convert-params",
                direction: "experimental_to_kerr",
                kerr: p.into(),
                experimental: params,
                beta2_unconstrained: false,
            })
        }
        ModelSpec::Kerr(k) => {
            let anchors =
                k.anchors.ok_or_else(|| CliError::Config("kerr → experimental conversion needs \"anchors\"".into()))?;
            let inv = from_theoretical(&k.into(), &anchors.into())?;
            Ok(ConvertReport {
                schema_version: REPORT_SCHEMA_VERSION,
                command: "convert-params",
                direction: "kerr_to_experimental",
                kerr: k,
                experimental: inv.params.into(),
                beta2_unconstrained: inv.beta2_unconstrained,
            })
        }
    }
}

pub fn load_model(path: &Path) -> CliResult<ModelSpec> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(file.model)
}
