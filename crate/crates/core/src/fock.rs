//! Truncated Fock-basis reference solver for the single-mode Kerr model.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{ModeLayout, OperatorPolynomial};
use crate::kerr::KerrParams;
use crate::liouville::{decode, SuperPolynomial};
use crate::matfun::{c, cr, CMatrix, C64};
use crate::ode::{integrate_grid, OdeOptions, OdeStats};

/// Top-level population above which an evolution is declared leaky.
pub const LEAK_LIMIT: f64 = 1e-8;
/// Tail mass tolerated when picking a cutoff for an initial state.
pub const TAIL_MASS: f64 = 1e-12;
/// Hard ceiling for automatically chosen cutoffs.
pub const MAX_CUTOFF: usize = 400;

/// Dense operator on `span{|0⟩…|N⟩}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    matrix: CMatrix,
}

impl FockOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() < 2 {
            return Err(Error::Dimension("Fock operator must be square with cutoff ≥ 1".into()));
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite("Fock operator".into()));
        }
        Ok(Self { matrix })
    }

    pub fn zeros(cutoff: usize) -> Self {
        Self { matrix: CMatrix::zeros(cutoff + 1, cutoff + 1) }
    }

    pub fn identity(cutoff: usize) -> Self {
        Self { matrix: CMatrix::identity(cutoff + 1) }
    }

    pub fn cutoff(&self) -> usize {
        self.matrix.rows() - 1
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { matrix: &self.matrix * &other.matrix }
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - &self.matrix.adjoint()).max_abs()
    }

    /// Population of `|N⟩`.
    pub fn top_population(&self) -> f64 {
        let n = self.cutoff();
        self.matrix[(n, n)].re
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + &self.matrix.adjoint()).scale_re(0.5);
        nalgebra::SymmetricEigen::new(h.into_dmatrix()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.matrix.rows();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.matrix[(i, k)] * other.matrix[(k, i)];
            }
        }
        acc
    }

    /// `|n⟩⟨n|`.
    pub fn fock_state(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::InvalidParams(format!("Fock level {n} above cutoff {cutoff}")));
        }
        let mut rho = Self::zeros(cutoff);
        rho.matrix[(n, n)] = cr(1.0);
        Ok(rho)
    }

    /// Diagonal state from populations; renormalized to unit trace.
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        let total: f64 = p.iter().sum();
        if p.len() < 2 || !(total > 0.0) {
            return Err(Error::InvalidParams("populations must be non-empty with positive mass".into()));
        }
        let diag: Vec<C64> = p.iter().map(|x| cr(x / total)).collect();
        Self::new(CMatrix::from_diagonal(&diag))
    }

    pub fn thermal(nbar: f64, cutoff: usize) -> Result<Self> {
        Self::from_populations(&thermal_populations(nbar, cutoff))
    }

    /// `|α⟩⟨α|` from Poisson amplitudes, renormalized.
    pub fn coherent(alpha: C64, cutoff: usize) -> Result<Self> {
        let mut amp = vec![cr(0.0); cutoff + 1];
        amp[0] = cr((-0.5 * alpha.norm_sqr()).exp());
        for k in 1..=cutoff {
            amp[k] = amp[k - 1] * alpha / (k as f64).sqrt();
        }
        let norm: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
        let m = CMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| amp[i] * amp[j].conj() / norm);
        Self::new(m)
    }
}

pub fn thermal_populations(nbar: f64, cutoff: usize) -> Vec<f64> {
    if nbar == 0.0 {
        let mut p = vec![0.0; cutoff + 1];
        p[0] = 1.0;
        return p;
    }
    let q = nbar / (nbar + 1.0);
    (0..=cutoff).map(|n| q.powi(n as i32) / (nbar + 1.0)).collect()
}

/// `(a, a†)` truncated at `cutoff`.
pub fn ladder_matrices(cutoff: usize) -> (FockOperator, FockOperator) {
    assert!(cutoff >= 1, "cutoff must be at least 1");
    let a = CMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| if j == i + 1 { cr((j as f64).sqrt()) } else { cr(0.0) });
    let ad = a.adjoint();
    (FockOperator { matrix: a }, FockOperator { matrix: ad })
}

/// Number-operator cutoff rule `⌈N + 8√(N + 1)⌉`.
pub fn cutoff_for_occupation(nmax: f64) -> usize {
    (nmax + 8.0 * (nmax + 1.0).sqrt()).ceil() as usize
}

/// Smallest cutoff whose thermal tail mass `q^{N+1}` is below `TAIL_MASS`.
pub fn cutoff_for_thermal_tail(nbar: f64) -> usize {
    if nbar <= 0.0 {
        return 1;
    }
    let q = nbar / (nbar + 1.0);
    (TAIL_MASS.ln() / q.ln()).ceil() as usize
}

/// Smallest cutoff whose Poisson tail mass is below `TAIL_MASS`.
pub fn cutoff_for_poisson_tail(mean: f64) -> usize {
    let mut p = (-mean).exp();
    let mut cum = p;
    let mut k = 0usize;
    while 1.0 - cum > TAIL_MASS && k < 10 * MAX_CUTOFF {
        k += 1;
        p *= mean / k as f64;
        cum += p;
    }
    k.max(1)
}

/// Banded Kerr Liouvillian on a dense density matrix.
#[derive(Clone, Debug)]
pub struct KerrLiouvillian {
    cutoff: usize,
    gamma: f64,
    diag: Vec<C64>,
    off: Vec<C64>,
}

impl KerrLiouvillian {
    /// `H_eff = H − i(γ/4)a†a`, tridiagonal: `diag[n]` and `off[n] = ⟨n|H|n+1⟩`.
    pub fn new(p: &KerrParams, cutoff: usize) -> Result<Self> {
        p.validate()?;
        let diag = (0..=cutoff)
            .map(|n| {
                let nf = n as f64;
                c(-p.delta * nf + 0.5 * p.lambda * p.chi * nf * (nf - 1.0), -0.25 * p.gamma * nf)
            })
            .collect();
        let off = (0..cutoff).map(|n| c(0.0, -p.drive * ((n + 1) as f64).sqrt())).collect();
        Ok(Self { cutoff, gamma: p.gamma, diag, off })
    }

    /// `ℒρ = −i(H_eff ρ − ρ H_eff†) + (γ/2) aρa†` on row-major storage.
    pub fn apply_flat(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.cutoff + 1;
        let minus_i = c(0.0, -1.0);
        for i in 0..d {
            for j in 0..d {
                // (H_eff ρ)_ij
                let mut hr = self.diag[i] * rho[i * d + j];
                if i + 1 < d {
                    hr += self.off[i] * rho[(i + 1) * d + j];
                }
                if i > 0 {
                    hr += self.off[i - 1].conj() * rho[(i - 1) * d + j];
                }
                // (ρ H_eff†)_ij = Σ_k ρ_ik conj(H_eff)_jk
                let mut rh = rho[i * d + j] * self.diag[j].conj();
                if j + 1 < d {
                    rh += rho[i * d + j + 1] * self.off[j].conj();
                }
                if j > 0 {
                    rh += rho[i * d + j - 1] * self.off[j - 1];
                }
                let mut v = minus_i * (hr - rh);
                if i + 1 < d && j + 1 < d {
                    v += rho[(i + 1) * d + j + 1] * (0.5 * self.gamma * (((i + 1) * (j + 1)) as f64).sqrt());
                }
                out[i * d + j] = v;
            }
        }
    }
}

/// `ℒρ` for the Kerr generator in the truncated basis.
pub fn liouvillian_apply(rho: &FockOperator, p: &KerrParams) -> Result<FockOperator> {
    let lv = KerrLiouvillian::new(p, rho.cutoff())?;
    let flat = rho.matrix.row_major();
    let mut out = vec![cr(0.0); flat.len()];
    lv.apply_flat(&flat, &mut out);
    FockOperator::new(CMatrix::new(rho.cutoff() + 1, rho.cutoff() + 1, out)?)
}

/// `ℒ*X = i[H, X] + (γ/2)(a†Xa − ½{a†a, X})` built from dense products.
pub fn liouvillian_adjoint_apply(x: &FockOperator, p: &KerrParams) -> Result<FockOperator> {
    p.validate()?;
    let n = x.cutoff();
    let (a, ad) = ladder_matrices(n);
    let num = ad.mul(&a);
    let h = hamiltonian(p, n);
    let i = c(0.0, 1.0);
    let comm = &(&h.matrix * &x.matrix) - &(&x.matrix * &h.matrix);
    let jump = &(&ad.matrix * &x.matrix) * &a.matrix;
    let anti = &(&num.matrix * &x.matrix) + &(&x.matrix * &num.matrix);
    let out = &comm.scale(i) + &(&jump - &anti.scale_re(0.5)).scale_re(0.5 * p.gamma);
    FockOperator::new(out)
}

/// `H_λ` in the truncated basis.
pub fn hamiltonian(p: &KerrParams, cutoff: usize) -> FockOperator {
    let m = CMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        let nf = i as f64;
        if i == j {
            cr(-p.delta * nf + 0.5 * p.lambda * p.chi * nf * (nf - 1.0))
        } else if j == i + 1 {
            c(0.0, -p.drive * (j as f64).sqrt())
        } else if i == j + 1 {
            c(0.0, p.drive * (i as f64).sqrt())
        } else {
            cr(0.0)
        }
    });
    FockOperator { matrix: m }
}

/// Applies a super-polynomial to a Fock matrix with truncated ladder letters.
pub fn apply_superpoly(sp: &SuperPolynomial, x: &FockOperator) -> Result<FockOperator> {
    let l = sp.layout();
    if l != ModeLayout::new(1) {
        return Err(Error::Dimension("the Fock oracle is single-mode".into()));
    }
    let (a, ad) = ladder_matrices(x.cutoff());
    let letter = |k: usize| if k == 0 { &a.matrix } else { &ad.matrix };
    let mut total = CMatrix::zeros(x.cutoff() + 1, x.cutoff() + 1);
    for (w, &v) in sp.terms() {
        let mut cur = x.matrix.clone();
        for &s in w.iter().rev() {
            let (is_left, k) = decode(l, s);
            cur = if is_left { letter(k) * &cur } else { &cur * letter(k) };
        }
        total = &total + &cur.scale(v);
    }
    FockOperator::new(total)
}

/// A single-mode operator polynomial as a truncated Fock matrix.
pub fn polynomial_matrix(poly: &OperatorPolynomial, cutoff: usize) -> Result<FockOperator> {
    if poly.layout() != ModeLayout::new(1) {
        return Err(Error::Dimension("the Fock oracle is single-mode".into()));
    }
    let (a, ad) = ladder_matrices(cutoff);
    let n = cutoff + 1;
    let mut total = CMatrix::zeros(n, n);
    for (w, &v) in poly.terms() {
        let mut cur = CMatrix::identity(n);
        for &l in w.iter() {
            cur = &cur * if l == 0 { &a.matrix } else { &ad.matrix };
        }
        total = &total + &cur.scale(v);
    }
    FockOperator::new(total)
}

/// `Tr(ρ · 𝔞_{i₁}⋯𝔞_{i_k})` with truncated ladder matrices.
pub fn moment_from_density(rho: &FockOperator, word: &[u8]) -> Result<C64> {
    if let Some(&l) = word.iter().find(|&&l| l > 1) {
        return Err(Error::LetterRange { letter: l as usize, size: 2 });
    }
    let (a, ad) = ladder_matrices(rho.cutoff());
    let mut cur = rho.matrix.as_dmatrix().clone();
    for &l in word.iter().rev() {
        let op: &DMatrix<C64> = if l == 0 { a.matrix.as_dmatrix() } else { ad.matrix.as_dmatrix() };
        cur = op * cur;
    }
    Ok(cur.trace())
}

/// Tracked single-mode moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockMoments {
    pub a: C64,
    pub ad: C64,
    pub n: C64,
    pub a2: C64,
    pub ad2: C64,
}

impl FockMoments {
    pub fn of(rho: &FockOperator) -> Self {
        let d = rho.cutoff() + 1;
        let m = &rho.matrix;
        let mut out = FockMoments { a: cr(0.0), ad: cr(0.0), n: cr(0.0), a2: cr(0.0), ad2: cr(0.0) };
        for k in 0..d {
            out.n += m[(k, k)] * k as f64;
            if k + 1 < d {
                // Tr(aρ) = Σ √(k+1) ρ_{k+1,k}
                let s = ((k + 1) as f64).sqrt();
                out.a += m[(k + 1, k)] * s;
                out.ad += m[(k, k + 1)] * s;
            }
            if k + 2 < d {
                let s = (((k + 1) * (k + 2)) as f64).sqrt();
                out.a2 += m[(k + 2, k)] * s;
                out.ad2 += m[(k, k + 2)] * s;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct FockSample {
    pub t: f64,
    pub moments: FockMoments,
    pub trace: C64,
    pub hermiticity_error: f64,
    pub top_population: f64,
}

#[derive(Clone, Debug)]
pub struct FockTrajectory {
    pub cutoff: usize,
    pub samples: Vec<FockSample>,
    pub final_state: FockOperator,
    pub stats: OdeStats,
    pub max_top_population: f64,
}

/// Integrates the truncated Kerr master equation and samples the tracked
/// moments on `times`. Aborts with `TruncationLeak` as soon as an accepted
/// step puts more than `LEAK_LIMIT` into the top level.
pub fn evolve_exact(rho0: &FockOperator, p: &KerrParams, times: &[f64], opts: &OdeOptions) -> Result<FockTrajectory> {
    let cutoff = rho0.cutoff();
    let lv = KerrLiouvillian::new(p, cutoff)?;
    let d = cutoff + 1;
    let y0 = rho0.matrix.row_major();
    let mut max_top = 0.0f64;
    let mut hook = |t: f64, y: &[C64]| -> Result<()> {
        let top = y[d * d - 1].re;
        max_top = max_top.max(top);
        if top > LEAK_LIMIT {
            return Err(Error::TruncationLeak { t, population: top, limit: LEAK_LIMIT });
        }
        Ok(())
    };
    let (ys, stats) = integrate_grid(
        |_, y, dy| {
            lv.apply_flat(y, dy);
            Ok(())
        },
        &y0,
        times,
        opts,
        Some(&mut hook),
    )?;
    let mut samples = Vec::with_capacity(ys.len());
    let mut last = None;
    for (&t, y) in times.iter().zip(ys) {
        let rho = FockOperator::new(CMatrix::new(d, d, y)?)?;
        samples.push(FockSample {
            t,
            moments: FockMoments::of(&rho),
            trace: rho.trace(),
            hermiticity_error: rho.hermiticity_error(),
            top_population: rho.top_population(),
        });
        last = Some(rho);
    }
    let final_state = last.expect("non-empty grid");
    Ok(FockTrajectory { cutoff, samples, final_state, stats, max_top_population: max_top })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_density(cutoff: usize, seed: u64) -> FockOperator {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let g = CMatrix::from_fn(cutoff + 1, cutoff + 1, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let rho = &g * &g.adjoint();
        let tr = rho.trace();
        FockOperator::new(rho.scale(cr(1.0) / tr)).unwrap()
    }

    fn random_operator(cutoff: usize, seed: u64) -> FockOperator {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        FockOperator::new(CMatrix::from_fn(cutoff + 1, cutoff + 1, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }))
        .unwrap()
    }

    fn params() -> KerrParams {
        KerrParams { delta: 0.6, gamma: 1.1, chi: 0.8, lambda: 0.3, drive: 0.4 }
    }

    #[test]
    fn ladder_basics() {
        let (a, ad) = ladder_matrices(1);
        assert_eq!(a.matrix().row_major(), vec![cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        let (a, ad2) = ladder_matrices(8);
        let num = ad2.mul(&a);
        for k in 0..=8 {
            assert!((num.matrix()[(k, k)] - cr(k as f64)).norm() < 1e-14);
        }
        let six = FockOperator::fock_state(6, 8).unwrap();
        assert!((num.mul(&six).matrix()[(6, 6)] - cr(6.0)).norm() < 1e-14);
        assert_eq!(ad.cutoff(), 1);
    }

    #[test]
    fn vacuum_is_stationary_without_drive() {
        let p = KerrParams { drive: 0.0, ..params() };
        let out = liouvillian_apply(&FockOperator::fock_state(0, 10).unwrap(), &p).unwrap();
        assert_eq!(out.matrix().max_abs(), 0.0);
    }

    #[test]
    fn trace_preservation_and_duality() {
        let p = params();
        let rho = random_density(20, 1);
        let lrho = liouvillian_apply(&rho, &p).unwrap();
        assert!(lrho.trace().norm() < 1e-12);
        let x = random_operator(20, 2);
        let lhs = x.trace_product(&lrho);
        let rhs = liouvillian_adjoint_apply(&x, &p).unwrap().trace_product(&rho);
        assert!((lhs - rhs).norm() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn moments_of_simple_states() {
        let vac = FockOperator::fock_state(0, 5).unwrap();
        assert_eq!(moment_from_density(&vac, &[0, 1]).unwrap(), cr(1.0));
        let th = FockOperator::thermal(1.0, 60).unwrap();
        assert!((moment_from_density(&th, &[1, 0]).unwrap() - cr(1.0)).norm() < 1e-12);
        let m = FockMoments::of(&th);
        assert!((m.n - cr(1.0)).norm() < 1e-12);
    }

    #[test]
    fn fock_six_decays_exactly() {
        let p = KerrParams { delta: 0.0, gamma: 1.0, chi: 1.0, lambda: 0.05, drive: 0.0 };
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let rho0 = FockOperator::fock_state(6, 12).unwrap();
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let traj = evolve_exact(&rho0, &p, &times, &opts).unwrap();
        for s in &traj.samples {
            assert!((s.moments.n.re - 6.0 * (-s.t / 2.0).exp()).abs() < 1e-8);
            assert!(s.moments.a.norm() < 1e-14);
            assert!((s.trace - cr(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn leak_is_reported() {
        let p = KerrParams { delta: 0.0, gamma: 0.1, chi: 0.0, lambda: 0.0, drive: 3.0 };
        let rho0 = FockOperator::fock_state(0, 6).unwrap();
        let r = evolve_exact(&rho0, &p, &[0.0, 5.0], &OdeOptions::default());
        assert!(matches!(r, Err(Error::TruncationLeak { .. })));
    }

    #[test]
    fn cutoff_rules() {
        assert_eq!(cutoff_for_occupation(6.0), 28);
        let n = cutoff_for_thermal_tail(1.0);
        assert!(0.5f64.powi(n as i32) < 1e-12 && 0.5f64.powi(n as i32 - 1) >= 1e-12);
        assert!(cutoff_for_poisson_tail(4.0) > 20);
    }
}
