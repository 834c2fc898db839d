//! Dormand–Prince 5(4) with the Hairer continuous extension.
//!
//! States are flat complex vectors. Outputs are produced on a caller grid by
//! dense interpolation, so the step sequence is independent of the grid.

use crate::error::{Error, Result};
use crate::matfun::C64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, h_init: None, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Hook called after each accepted step with `(t, y)`; an error aborts.
pub type StepHook<'a> = dyn FnMut(f64, &[C64]) -> Result<()> + 'a;

fn axpy(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for &(w, k) in terms {
            if w != 0.0 {
                acc += k[i] * w;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `y' = f(t, y)` from `grid[0]` and returns the state at every
/// grid point (the first entry is `y0`). The grid must be strictly
/// increasing.
pub fn integrate_grid<F>(
    f: F,
    y0: &[C64],
    grid: &[f64],
    opts: &OdeOptions,
    hook: Option<&mut StepHook<'_>>,
) -> Result<(Vec<Vec<C64>>, OdeStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]) -> Result<()>,
{
    integrate_grid_scaled(f, y0, grid, opts, hook, |_, r| r.fill(0.0))
}

/// As [`integrate_grid`], with a per-component reference magnitude folded
/// into the error scale: component `i` is held to
/// `atol + rtol·max(|yᵢ|, |y₁ᵢ|, refᵢ)`. Useful when a component is computed
/// as a small difference of much larger quantities and cannot be resolved
/// below `ε·refᵢ` anyway.
pub fn integrate_grid_scaled<F, R>(
    mut f: F,
    y0: &[C64],
    grid: &[f64],
    opts: &OdeOptions,
    mut hook: Option<&mut StepHook<'_>>,
    mut reference: R,
) -> Result<(Vec<Vec<C64>>, OdeStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]) -> Result<()>,
    R: FnMut(&[C64], &mut [f64]),
{
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty output grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("output grid must be strictly increasing".into()));
    }
    let n = y0.len();
    let zero = C64::new(0.0, 0.0);
    let mut stats = OdeStats::default();
    let mut out = vec![y0.to_vec()];
    let t_end = *grid.last().unwrap();
    let mut t = grid[0];
    let mut y = y0.to_vec();
    let mut next_out = 1;

    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut y1 = vec![zero; n];
    let mut refs = vec![0.0f64; n];

    f(t, &y, &mut k1)?;
    stats.rhs_evals += 1;

    let span = t_end - t;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            let scale = |v: &[C64], i: usize| opts.atol + opts.rtol * v[i].norm();
            let d0 = (y.iter().enumerate().map(|(i, z)| (z.norm() / scale(&y, i)).powi(2)).sum::<f64>()
                / n.max(1) as f64)
                .sqrt();
            let d1 = (k1.iter().enumerate().map(|(i, z)| (z.norm() / scale(&y, i)).powi(2)).sum::<f64>()
                / n.max(1) as f64)
                .sqrt();
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6 * span.max(1e-300)
            } else {
                0.01 * d0 / d1
            }
        }
    }
    .min(opts.h_max)
    .min(span);

    let mut last_err = 1e-4f64;
    let mut steps = 0usize;
    while next_out < grid.len() {
        if steps >= opts.max_steps {
            return Err(Error::StepLimit { t, steps, last_state: y });
        }
        steps += 1;
        let remaining = t_end - t;
        if h >= remaining || t + h == t + remaining {
            h = remaining;
        }
        if h < opts.h_min * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h, last_state: y });
        }
        axpy(&mut tmp, &y, h, &[(A21, &k1)]);
        f(t + C2 * h, &tmp, &mut k2)?;
        axpy(&mut tmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * h, &tmp, &mut k3)?;
        axpy(&mut tmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * h, &tmp, &mut k4)?;
        axpy(&mut tmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + C5 * h, &tmp, &mut k5)?;
        axpy(&mut tmp, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f(t + h, &tmp, &mut k6)?;
        axpy(&mut y1, &y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        f(t + h, &y1, &mut k7)?;
        stats.rhs_evals += 6;

        reference(&y, &mut refs);
        let mut err2 = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = opts.atol + opts.rtol * y[i].norm().max(y1[i].norm()).max(refs[i]);
            err2 += (e.norm() / sc).powi(2);
        }
        let err = (err2 / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            let t_new = if h == remaining { t_end } else { t + h };
            while next_out < grid.len() && grid[next_out] <= t_new {
                let theta = ((grid[next_out] - t) / h).clamp(0.0, 1.0);
                let th1 = 1.0 - theta;
                let mut yo = vec![zero; n];
                for i in 0..n {
                    let r2 = y1[i] - y[i];
                    let r3 = k1[i] * h - r2;
                    let r4 = r2 - k7[i] * h - r3;
                    let r5 = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                    yo[i] = y[i] + (r2 + (r3 + (r4 + r5 * th1) * theta) * th1) * theta;
                }
                if grid[next_out] == t_new {
                    yo.copy_from_slice(&y1);
                }
                out.push(yo);
                next_out += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            stats.accepted += 1;
            if let Some(hk) = hook.as_mut() {
                hk(t, &y)?;
            }
            // PI controller (Hairer's β = 0.04)
            let fac = (0.9 * err.max(1e-10).powf(-0.2) * last_err.powf(0.04)).clamp(0.2, 10.0);
            last_err = err.max(1e-4);
            h = (h * fac).min(opts.h_max);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::{c, cr};

    #[test]
    fn exponential_on_a_grid() {
        let w = c(-0.5, 3.0);
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let (ys, stats) = integrate_grid(
            |_, y, dy| {
                dy[0] = w * y[0];
                Ok(())
            },
            &[cr(1.0)],
            &grid,
            &OdeOptions::default(),
            None,
        )
        .unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            assert!((y[0] - (w * *t).exp()).norm() < 1e-7, "t = {t}");
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn dense_output_between_steps() {
        // few large steps, many output points
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.01).collect();
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let (ys, _) = integrate_grid(
            |t, _, dy| {
                dy[0] = cr(t.cos());
                Ok(())
            },
            &[cr(0.0)],
            &grid,
            &opts,
            None,
        )
        .unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            assert!((y[0].re - t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_grid() {
        let r = integrate_grid(|_, _, _| Ok(()), &[cr(0.0)], &[0.0, 0.0], &OdeOptions::default(), None);
        assert!(r.is_err());
    }

    #[test]
    fn blow_up_reports_underflow_at_the_singularity() {
        let r = integrate_grid(
            |_, y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            &[cr(1.0)],
            &[0.0, 2.0],
            &OdeOptions::default(),
            None,
        );
        match r {
            Err(Error::StepUnderflow { t, .. }) => assert!((t - 1.0).abs() < 1e-6, "t = {t}"),
            other => panic!("expected underflow, got {other:?}"),
        }
    }

    #[test]
    fn step_budget_is_enforced() {
        let opts = OdeOptions { max_steps: 5, ..Default::default() };
        let r = integrate_grid(
            |t, _, dy| {
                dy[0] = cr((20.0 * t).cos());
                Ok(())
            },
            &[cr(0.0)],
            &[0.0, 10.0],
            &opts,
            None,
        );
        assert!(matches!(r, Err(Error::StepLimit { steps: 5, .. })), "{r:?}");
    }
}
