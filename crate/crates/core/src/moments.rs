//! Wick-closed moment equations in the interaction picture, first and second
//! order in `λ`, and conversions of their solutions to other pictures.
//!
//! States are `(m, C)`; `ℒ*(t)` comes from a [`KerrModel`] without the
//! factor `λ`, which is applied here.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::gaussian::{
    centered_pair, commute_through, derivative_prefix_dir, square_state, GaussianState, ModeLayout, OperatorPolynomial,
    QuadExpPrefix, StateDiagnostics, WickEvaluator, Word,
};
use crate::kerr::KerrModel;
use crate::liouville::{split_word, AffinePropagator, QuadraticGenerator, SuperPolynomial};
use crate::matfun::{c, cr, CMatrix, CVector, C64};
use crate::ode::{integrate_grid_scaled, OdeOptions, OdeStats};
use crate::quad::{integrate as quad_integrate, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_int(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::InvalidParams(format!("order must be 1 or 2, got {k}"))),
        }
    }

    pub fn as_int(&self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Picture {
    Interaction,
    Schrodinger,
    Rotating,
}

impl Picture {
    pub fn name(&self) -> &'static str {
        match self {
            Picture::Interaction => "interaction",
            Picture::Schrodinger => "schrodinger",
            Picture::Rotating => "rotating",
        }
    }
}

impl std::str::FromStr for Picture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interaction" => Ok(Picture::Interaction),
            "schrodinger" => Ok(Picture::Schrodinger),
            "rotating" => Ok(Picture::Rotating),
            _ => Err(Error::InvalidParams(format!("unknown picture '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSample {
    pub t: f64,
    pub m: CVector,
    pub c: CMatrix,
    pub diagnostics: StateDiagnostics,
}

impl MomentSample {
    pub fn new(layout: ModeLayout, t: f64, m: CVector, c: CMatrix) -> Result<Self> {
        let state = GaussianState::new(layout, m, c)?;
        let diagnostics = state.diagnostics();
        Ok(Self { t, m: state.mean().clone(), c: state.cov().clone(), diagnostics })
    }

    /// `⟨a_k⟩`.
    pub fn mean_a(&self, k: usize) -> C64 {
        self.m[k]
    }

    /// `⟨a_k†a_k⟩ = m_{k†}m_k + C_{k†,k} − ½`.
    pub fn number(&self, k: usize) -> C64 {
        let d = self.m.len() / 2;
        self.m[d + k] * self.m[k] + self.c[(d + k, k)] - cr(0.5)
    }

    /// `⟨a_k²⟩`.
    pub fn a_squared(&self, k: usize) -> C64 {
        self.m[k] * self.m[k] + self.c[(k, k)]
    }
}

#[derive(Clone, Debug)]
pub struct MomentTrajectory {
    pub layout: ModeLayout,
    pub order: Order,
    pub picture: Picture,
    pub samples: Vec<MomentSample>,
    pub stats: OdeStats,
}

impl MomentTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn max_herm_drift(&self) -> f64 {
        self.samples.iter().fold(0.0, |a, s| a.max(s.diagnostics.herm_drift))
    }

    pub fn min_uncertainty_eig(&self) -> f64 {
        self.samples.iter().fold(f64::INFINITY, |a, s| a.min(s.diagnostics.min_uncertainty_eig))
    }

    /// Largest entry-wise difference of `(m, C)` against another trajectory
    /// on the same grid.
    pub fn max_difference(&self, other: &Self) -> Result<f64> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::Dimension("trajectories on different grids".into()));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            if a.t != b.t {
                return Err(Error::Dimension("trajectories on different grids".into()));
            }
            worst = worst.max((&a.m - &b.m).iter().fold(0.0, |x, z| x.max(z.norm())));
            worst = worst.max((&a.c - &b.c).max_abs());
        }
        Ok(worst)
    }
}

/// How the projected part of the second-order term is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SubtractionForm {
    /// `Tr(X ℒ(t) ∫R_{t₁}) = ⟨(ℒ*(t)X) Q̄⟩`: the state perturbation left after
    /// projection, pushed once more through `ℒ(t)`. Exact to second order.
    #[default]
    Tcl,
    /// `Tr(X R_t ∫R_{t₁})` read as an operator product of the two ansatz
    /// derivatives, evaluated by pass-through and squaring. Kept for
    /// comparison; its error against the exact dynamics is `O(λ²)`.
    OperatorProduct,
}

/// Tolerances for [`integrate`].
#[derive(Clone, Copy, Debug, Default)]
pub struct IntegrationOptions {
    pub ode: OdeOptions,
    pub quad: QuadOptions,
    pub subtraction: SubtractionForm,
}

/// `(⟨𝒮𝔞⟩, ⟨𝒮𝔄(m)⟩)` for a super-polynomial `𝒮`, i.e. the `(δm, δC)` of an
/// infinitesimal step along `𝒮`.
pub fn moment_scalars(state: &GaussianState, sp: &SuperPolynomial) -> Result<(CVector, CMatrix)> {
    if sp.layout() != state.layout() {
        return Err(Error::Dimension("super-polynomial and state layouts differ".into()));
    }
    Ok(scalars_with(state, sp, &mut WickEvaluator::new(state)))
}

fn scalars_with(state: &GaussianState, sp: &SuperPolynomial, wick: &mut WickEvaluator) -> (CVector, CMatrix) {
    let n = state.layout().dim();
    let splits = split_all(sp);
    let mut dm = CVector::zeros(n);
    for k in 0..n {
        dm[k] = apply_expect(&splits, wick, &[k as u8]);
    }
    let mut ds = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = apply_expect(&splits, wick, &[i as u8, j as u8]);
            ds[(i, j)] = v;
            ds[(j, i)] = v;
        }
    }
    let dc = centered_update(state.mean(), &dm, &ds);
    (dm, dc)
}

/// `δC = δS − m δmᵀ − δm mᵀ`, symmetric.
fn centered_update(m: &CVector, dm: &CVector, ds: &CMatrix) -> CMatrix {
    let n = m.len();
    CMatrix::from_fn(n, n, |i, j| ds[(i, j)] - m[i] * dm[j] - dm[i] * m[j]).symmetrized()
}

type Split = (Word, Word, C64);

fn split_all(sp: &SuperPolynomial) -> Vec<Split> {
    let l = sp.layout();
    sp.terms()
        .map(|(w, &v)| {
            let (pre, post) = split_word(l, w);
            (pre, post, v)
        })
        .collect()
}

fn apply_expect(splits: &[Split], wick: &mut WickEvaluator, word: &[u8]) -> C64 {
    let mut acc = cr(0.0);
    for (pre, post, v) in splits {
        acc += *v * wick.moment_concat(pre, word, post);
    }
    acc
}

fn apply_expect_poly(splits: &[Split], wick: &mut WickEvaluator, poly: &OperatorPolynomial) -> C64 {
    let mut acc = cr(0.0);
    for (w, &x) in poly.terms() {
        if x != cr(0.0) {
            acc += x * apply_expect(splits, wick, w);
        }
    }
    acc
}

/// First-order right-hand side `(λ⟨ℒ*(t)𝔞⟩, λ⟨ℒ*(t)𝔄(m)⟩)`.
pub fn rhs_order1(t: f64, state: &GaussianState, model: &KerrModel) -> Result<(CVector, CMatrix)> {
    let lambda = model.params.lambda;
    let (dm, dc) = moment_scalars(state, &model.adjoint_at(t)?)?;
    Ok((dm.map(|z| z * lambda), dc.scale_re(lambda)))
}

/// The projected generator `R_t = P_t ρ_ans`, returned as its prefix `P_t`:
/// the derivative of the ansatz along `(⟨ℒ*(t)𝔞⟩, ⟨ℒ*(t)𝔄(m)⟩)`.
pub fn assemble_rt(t: f64, state: &GaussianState, model: &KerrModel) -> Result<QuadExpPrefix> {
    projected_prefix(state, &model.adjoint_at(t)?)
}

/// Derivative prefix along the moment scalars of an arbitrary `𝒮`.
pub fn projected_prefix(state: &GaussianState, sp: &SuperPolynomial) -> Result<QuadExpPrefix> {
    let (dm, dc) = moment_scalars(state, sp)?;
    derivative_prefix_dir(state, &dm, &dc)
}

/// `∫_{t₀}^t ℒ*(t₁) dt₁` as a coefficient vector aligned with the model keys.
pub fn integrated_coefficients(model: &KerrModel, t0: f64, t: f64, opts: QuadOptions) -> Result<Vec<C64>> {
    let dim = model.adjoint_keys().len();
    quad_integrate(|s| model.adjoint_coefficients(s), t0, t, dim, opts)
}

/// Second-order correction `λ²(memory − subtraction)` at `t` with the
/// integration window `[t₀, t]`.
pub fn rhs_order2(
    t: f64,
    t0: f64,
    state: &GaussianState,
    model: &KerrModel,
    opts: QuadOptions,
    form: SubtractionForm,
) -> Result<(CVector, CMatrix)> {
    if t < t0 {
        return Err(Error::InvalidParams(format!("t = {t} precedes t₀ = {t0}")));
    }
    let integral = integrated_coefficients(model, t0, t, opts)?;
    order2_with_integral(t, state, model, &integral, form)
}

fn order2_with_integral(
    t: f64,
    state: &GaussianState,
    model: &KerrModel,
    integral: &[C64],
    form: SubtractionForm,
) -> Result<(CVector, CMatrix)> {
    let l = state.layout();
    let n = l.dim();
    if integral.iter().all(|z| *z == cr(0.0)) {
        return Ok((CVector::zeros(n), CMatrix::zeros(n, n)));
    }
    let lam2 = model.params.lambda * model.params.lambda;
    let lt = model.adjoint_at(t)?;
    let lbar = model.assemble_adjoint(integral);
    let bar_splits = split_all(&lbar);
    let mut wick = WickEvaluator::new(state);

    // memory bracket ⟨L̄ ℒ*(t) X⟩ for X = 𝔞_k and 𝔞_i𝔞_j
    let image = |word: &[u8]| lt.apply(&OperatorPolynomial::monomial(l, word, cr(1.0))).normal_ordered();
    let mut mem_m = CVector::zeros(n);
    for k in 0..n {
        mem_m[k] = apply_expect_poly(&bar_splits, &mut wick, &image(&[k as u8]));
    }
    let mut mem_s = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = apply_expect_poly(&bar_splits, &mut wick, &image(&[i as u8, j as u8]));
            mem_s[(i, j)] = v;
            mem_s[(j, i)] = v;
        }
    }
    let mem_c = centered_update(state.mean(), &mem_m, &mem_s);

    let q_bar = derivative_prefix_from_scalars(state, &lbar, &mut wick)?;
    let (sub_m, sub_c) = match form {
        SubtractionForm::Tcl => {
            let q = q_bar.to_polynomial(l);
            let mut sub_m = CVector::zeros(n);
            for k in 0..n {
                sub_m[k] = wick.expect(&(&image(&[k as u8]) * &q));
            }
            let mut sub_c = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let x = lt.apply(&centered_pair(l, state.mean(), i, j)).normal_ordered();
                    let v = wick.expect(&(&x * &q));
                    sub_c[(i, j)] = v;
                    sub_c[(j, i)] = v;
                }
            }
            (sub_m, sub_c)
        }
        SubtractionForm::OperatorProduct => {
            // Tr(X P_t ρ Q̄ ρ) = w ⟨X P_t Q̄′⟩ under ρ(m, C′)
            let p_t = derivative_prefix_from_scalars(state, &lt, &mut wick)?;
            let q_moved = commute_through(state, &q_bar)?;
            let (w, squared) = square_state(state)?;
            let pq = &p_t.to_polynomial(l) * &q_moved.to_polynomial(l);
            let mut wick2 = WickEvaluator::new(&squared);
            let mut sub_m = CVector::zeros(n);
            for k in 0..n {
                sub_m[k] = w * wick2.expect(&(&OperatorPolynomial::letter(l, k) * &pq));
            }
            let mut sub_c = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = w * wick2.expect(&(&centered_pair(l, state.mean(), i, j) * &pq));
                    sub_c[(i, j)] = v;
                    sub_c[(j, i)] = v;
                }
            }
            (sub_m, sub_c)
        }
    };
    let dm = (&mem_m - &sub_m).map(|z| z * lam2);
    let dc = (&mem_c - &sub_c).scale_re(lam2);
    Ok((dm, dc))
}

fn derivative_prefix_from_scalars(
    state: &GaussianState,
    sp: &SuperPolynomial,
    wick: &mut WickEvaluator,
) -> Result<QuadExpPrefix> {
    let (dm, dc) = scalars_with(state, sp, wick);
    derivative_prefix_dir(state, &dm, &dc)
}

/// Running `∫_{t₀}^t` of the model coefficients. Queries integrate from the
/// nearest knot below, so the cost per right-hand-side call stays bounded.
struct CumulativeIntegral<'a> {
    model: &'a KerrModel,
    opts: QuadOptions,
    knots: Vec<(f64, Vec<C64>)>,
}

impl<'a> CumulativeIntegral<'a> {
    fn new(model: &'a KerrModel, t0: f64, opts: QuadOptions) -> Self {
        let zero = vec![cr(0.0); model.adjoint_keys().len()];
        Self { model, opts, knots: vec![(t0, zero)] }
    }

    fn at(&mut self, t: f64) -> Result<Vec<C64>> {
        let pos = self.knots.partition_point(|(s, _)| *s <= t);
        if pos == 0 {
            return Err(Error::InvalidParams(format!("t = {t} precedes the integration start")));
        }
        let (s, base) = &self.knots[pos - 1];
        if *s == t {
            return Ok(base.clone());
        }
        let piece = integrated_coefficients(self.model, *s, t, self.opts)?;
        let value: Vec<C64> = base.iter().zip(piece).map(|(a, b)| a + b).collect();
        self.knots.insert(pos, (t, value.clone()));
        Ok(value)
    }
}

/// Integrates the moment equations on `grid` (starting at `grid[0]`) from a
/// Schrödinger-picture initial state. The result is in the interaction
/// picture.
pub fn integrate(
    model: &KerrModel,
    initial: &GaussianState,
    grid: &[f64],
    order: Order,
    opts: &IntegrationOptions,
) -> Result<MomentTrajectory> {
    let l = model.layout();
    if initial.layout() != l {
        return Err(Error::Dimension("initial state layout differs from the model".into()));
    }
    let t0 = *grid.first().ok_or_else(|| Error::InvalidParams("empty output grid".into()))?;
    if grid.len() < 2 {
        return Err(Error::InvalidParams("output grid needs at least two points".into()));
    }
    if order == Order::Second {
        initial.check_regular()?;
    }
    let flow = MomentFlow::new(&model.free)?;
    let start = flow.to_interaction(t0, initial)?;
    let n = l.dim();
    let cache = RefCell::new(CumulativeIntegral::new(model, t0, opts.quad));
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| -> Result<()> {
        let state = GaussianState::from_vec(l, y)?;
        let (mut dm, mut dc) = rhs_order1(t, &state, model)?;
        if order == Order::Second {
            let integral = cache.borrow_mut().at(t)?;
            let (dm2, dc2) = order2_with_integral(t, &state, model, &integral, opts.subtraction)?;
            dm = &dm + &dm2;
            dc = &dc + &dc2;
        }
        dy[..n].copy_from_slice(dm.as_slice());
        dy[n..].copy_from_slice(&dc.symmetrized().row_major());
        Ok(())
    };
    // C is obtained as S − mmᵀ, so it cannot be resolved below ε·|mᵢmⱼ|.
    let reference = |y: &[C64], r: &mut [f64]| {
        r[..n].fill(0.0);
        for i in 0..n {
            for j in 0..n {
                r[n + i * n + j] = y[i].norm() * y[j].norm();
            }
        }
    };
    let (ys, stats) = integrate_grid_scaled(rhs, &start.to_vec(), grid, &opts.ode, None, reference)?;
    let mut samples = Vec::with_capacity(ys.len());
    for (&t, y) in grid.iter().zip(&ys) {
        let st = GaussianState::from_vec(l, y)?;
        samples.push(MomentSample::new(l, t, st.mean().clone(), st.cov().clone())?);
    }
    Ok(MomentTrajectory { layout: l, order, picture: Picture::Interaction, samples, stats })
}

pub fn uniform_grid(t0: f64, t1: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(t1 > t0) {
        return Err(Error::InvalidParams("grid needs t₁ > t₀ and at least two points".into()));
    }
    let h = (t1 - t0) / (points - 1) as f64;
    Ok((0..points).map(|k| if k + 1 == points { t1 } else { t0 + h * k as f64 }).collect())
}

/// Exact first- and second-moment flow of a quadratic generator, on the basis
/// of normal-ordered words of length one and two.
#[derive(Clone, Debug)]
pub struct MomentFlow {
    layout: ModeLayout,
    basis: Vec<Word>,
    /// normal-ordered expansion of every ordered pair `𝔞_i𝔞_j`
    pairs: Vec<Vec<(Option<usize>, C64)>>,
    propagator: AffinePropagator,
}

impl MomentFlow {
    pub fn new(gen: &QuadraticGenerator) -> Result<Self> {
        let l = gen.layout;
        let n = l.dim();
        let mut basis: Vec<Word> = (0..n).map(|i| Word::from_slice(&[i as u8])).collect();
        let mut pairs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let no = OperatorPolynomial::monomial(l, &[i as u8, j as u8], cr(1.0)).normal_ordered();
                let mut row = Vec::new();
                for (w, &v) in no.terms() {
                    if w.is_empty() {
                        row.push((None, v));
                        continue;
                    }
                    let idx = match basis.iter().position(|b| b == w) {
                        Some(k) => k,
                        None => {
                            basis.push(w.clone());
                            basis.len() - 1
                        }
                    };
                    row.push((Some(idx), v));
                }
                pairs.push(row);
            }
        }
        let adj = gen.to_superpoly().adjoint();
        let size = basis.len();
        let mut lam = CMatrix::zeros(size, size);
        let mut phi = CVector::zeros(size);
        for (k, w) in basis.iter().enumerate() {
            let image = adj.apply(&OperatorPolynomial::monomial(l, w, cr(1.0))).normal_ordered();
            for (iw, &v) in image.terms() {
                if iw.is_empty() {
                    phi[k] += v;
                } else if let Some(idx) = basis.iter().position(|b| b == iw) {
                    lam[(k, idx)] += v;
                } else if v.norm() > 1e-12 {
                    return Err(Error::Numerical("moment flow left the quadratic span".into()));
                }
            }
        }
        Ok(Self { layout: l, basis, pairs, propagator: AffinePropagator::from_system(lam, phi) })
    }

    fn moments_of(&self, m: &CVector, c: &CMatrix) -> CVector {
        let d = c - &self.layout.j().scale_re(0.5);
        CVector::from_iterator(
            self.basis.len(),
            self.basis.iter().map(|w| match w.len() {
                1 => m[w[0] as usize],
                _ => {
                    let (i, j) = (w[0] as usize, w[1] as usize);
                    m[i] * m[j] + d[(i, j)]
                }
            }),
        )
    }

    fn unpack_moments(&self, v: &CVector) -> (CVector, CMatrix) {
        let n = self.layout.dim();
        let m = CVector::from_iterator(n, v.iter().take(n).copied());
        let half_j = self.layout.j().scale_re(0.5);
        let c = CMatrix::from_fn(n, n, |i, j| {
            let s: C64 = self.pairs[i * n + j]
                .iter()
                .map(|(idx, coef)| match idx {
                    Some(k) => v[*k] * coef,
                    None => *coef,
                })
                .sum();
            s - m[i] * m[j] + half_j[(i, j)]
        });
        (m, c.symmetrized())
    }

    /// Moments after the free flow for time `t` (negative `t` runs it back).
    pub fn flow(&self, t: f64, m: &CVector, c: &CMatrix) -> Result<(CVector, CMatrix)> {
        let (a, b) = self.propagator.at(t)?;
        let v = &a.mul_vec(&self.moments_of(m, c)) + &b;
        Ok(self.unpack_moments(&v))
    }

    pub fn to_interaction(&self, t: f64, state: &GaussianState) -> Result<GaussianState> {
        if t == 0.0 {
            return Ok(state.clone());
        }
        let (m, c) = self.flow(-t, state.mean(), state.cov())?;
        GaussianState::new(self.layout, m, c)
    }
}

/// Converts an interaction-picture trajectory to the Schrödinger picture.
pub fn to_schrodinger(traj: &MomentTrajectory, gen: &QuadraticGenerator) -> Result<MomentTrajectory> {
    if traj.picture != Picture::Interaction {
        return Err(Error::InvalidParams(format!(
            "expected an interaction-picture trajectory, got {}",
            traj.picture.name()
        )));
    }
    let flow = MomentFlow::new(gen)?;
    let mut samples = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let (m, c) = flow.flow(s.t, &s.m, &s.c)?;
        samples.push(MomentSample::new(traj.layout, s.t, m, c)?);
    }
    Ok(MomentTrajectory { samples, picture: Picture::Schrodinger, ..traj.clone() })
}

/// Removes the free rotation: annihilation-side entries pick up `e^{−iΔt}`,
/// creation-side entries `e^{iΔt}`.
pub fn to_rotating_frame(traj: &MomentTrajectory, delta: f64) -> Result<MomentTrajectory> {
    if traj.picture != Picture::Schrodinger {
        return Err(Error::InvalidParams(format!(
            "expected a Schrödinger-picture trajectory, got {}",
            traj.picture.name()
        )));
    }
    let d = traj.layout.modes();
    let n = traj.layout.dim();
    let mut samples = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        if delta == 0.0 {
            samples.push(s.clone());
            continue;
        }
        let ph = c(0.0, -delta * s.t).exp();
        let factor: Vec<C64> = (0..n).map(|i| if i < d { ph } else { ph.conj() }).collect();
        let m = CVector::from_iterator(n, (0..n).map(|i| s.m[i] * factor[i]));
        let cm = CMatrix::from_fn(n, n, |i, j| s.c[(i, j)] * factor[i] * factor[j]);
        samples.push(MomentSample { t: s.t, m, c: cm, diagnostics: s.diagnostics });
    }
    Ok(MomentTrajectory { samples, picture: Picture::Rotating, ..traj.clone() })
}

/// Integrates and converts to the requested picture.
pub fn simulate(
    model: &KerrModel,
    initial: &GaussianState,
    grid: &[f64],
    order: Order,
    picture: Picture,
    opts: &IntegrationOptions,
) -> Result<MomentTrajectory> {
    let traj = integrate(model, initial, grid, order, opts)?;
    match picture {
        Picture::Interaction => Ok(traj),
        Picture::Schrodinger => to_schrodinger(&traj, &model.free),
        Picture::Rotating => to_rotating_frame(&to_schrodinger(&traj, &model.free)?, model.params.delta),
    }
}
