//! Fiber-cavity parameters and their mapping onto the Kerr model.
//!
//! Matching the lossy nonlinear propagation equation term by term gives
//! `vα/2 = γ/4`, `β₂vΔ_nl²/2 = −Δ`, `γ_nl P₀ v = −χ` and `F = k√(P₀/2)` with
//! peak power `P₀ = E₀/t_p`.

use crate::error::{Error, Result};
use crate::kerr::KerrParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentalParams {
    /// second-order dispersion, time²/length
    pub beta2: f64,
    /// nonlinear coefficient, 1/(power·length)
    pub gamma_nl: f64,
    /// linear loss, 1/length
    pub alpha: f64,
    /// group velocity, length/time
    pub v: f64,
    /// detuning `ω − ω₀`, 1/time
    pub delta_nl: f64,
    pub pulse_energy: f64,
    pub pulse_duration: f64,
    /// dimensionless coupling
    pub k: f64,
}

impl ExperimentalParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.beta2,
            self.gamma_nl,
            self.alpha,
            self.v,
            self.delta_nl,
            self.pulse_energy,
            self.pulse_duration,
            self.k,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("experimental parameters must be finite".into()));
        }
        if self.pulse_duration == 0.0 {
            return Err(Error::InvalidParams("pulse duration t_p = 0 leaves the peak power undefined".into()));
        }
        if self.pulse_duration < 0.0 {
            return Err(Error::InvalidParams("pulse duration must be positive".into()));
        }
        if !(self.v > 0.0) {
            return Err(Error::InvalidParams("velocity factor must be positive".into()));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidParams("loss α must be non-negative".into()));
        }
        if self.pulse_energy < 0.0 {
            return Err(Error::InvalidParams("pulse energy must be non-negative".into()));
        }
        Ok(())
    }

    /// `P₀ = E₀/t_p`.
    pub fn peak_power(&self) -> f64 {
        self.pulse_energy / self.pulse_duration
    }

    /// Field amplitude `A₀` with `E₀ = 2A₀²t_p`.
    pub fn amplitude(&self) -> f64 {
        (self.pulse_energy / (2.0 * self.pulse_duration)).sqrt()
    }
}

/// Values that [`from_theoretical`] cannot recover and takes as given.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchors {
    pub v: f64,
    pub delta_nl: f64,
    pub k: f64,
    pub pulse_duration: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inversion {
    pub params: ExperimentalParams,
    /// `Δ = 0` and `Δ_nl = 0`: any `β₂` fits and 0 is returned.
    pub beta2_unconstrained: bool,
}

/// Model parameters; `χ` carries the full nonlinearity and `λ` is set to the
/// caller's value.
pub fn to_theoretical(x: &ExperimentalParams, lambda: f64) -> Result<KerrParams> {
    x.validate()?;
    let p0 = x.peak_power();
    let p = KerrParams {
        gamma: 2.0 * x.v * x.alpha,
        delta: -x.beta2 * x.v * x.delta_nl * x.delta_nl / 2.0,
        chi: -x.gamma_nl * p0 * x.v,
        lambda,
        drive: x.k * (p0 / 2.0).sqrt(),
    };
    p.validate()?;
    Ok(p)
}

pub fn from_theoretical(p: &KerrParams, a: &Anchors) -> Result<Inversion> {
    p.validate()?;
    if !(a.v > 0.0) || !(a.pulse_duration > 0.0) || !a.delta_nl.is_finite() || !a.k.is_finite() {
        return Err(Error::InvalidParams("anchors need v > 0, t_p > 0 and finite Δ_nl, k".into()));
    }
    let (beta2, beta2_unconstrained) = if a.delta_nl == 0.0 {
        if p.delta != 0.0 {
            return Err(Error::Unsatisfiable(format!("Δ = {} cannot come from zero detuning Δ_nl", p.delta)));
        }
        (0.0, true)
    } else {
        (-2.0 * p.delta / (a.v * a.delta_nl * a.delta_nl), false)
    };
    if a.k == 0.0 && p.drive != 0.0 {
        return Err(Error::Unsatisfiable(format!("drive F = {} with coupling k = 0", p.drive)));
    }
    if p.drive * a.k < 0.0 {
        return Err(Error::Unsatisfiable("drive and coupling k have opposite signs".into()));
    }
    let p0 = if a.k == 0.0 { 0.0 } else { 2.0 * (p.drive / a.k).powi(2) };
    let gamma_nl = if p0 == 0.0 {
        if p.chi != 0.0 {
            return Err(Error::Unsatisfiable(format!("χ = {} needs a nonzero peak power", p.chi)));
        }
        0.0
    } else {
        -p.chi / (p0 * a.v)
    };
    let params = ExperimentalParams {
        beta2,
        gamma_nl,
        alpha: p.gamma / (2.0 * a.v),
        v: a.v,
        delta_nl: a.delta_nl,
        pulse_energy: p0 * a.pulse_duration,
        pulse_duration: a.pulse_duration,
        k: a.k,
    };
    Ok(Inversion { params, beta2_unconstrained })
}
