//! Gaussian states in the `(m, C)` parameterization.
//!
//! Letters are ordered `𝔞 = (a₁…a_d, a₁†…a_d†)`. A state is fixed by
//! `Tr 𝔞 ρ = m` and `Tr (𝔞−m)(𝔞−m)ᵀ ρ = C − J/2`; the matrix `D = C − J/2`
//! is the pair contraction used everywhere below.

pub mod materialize;
pub mod poly;
pub mod wick;

pub use materialize::{exponential_matrix, materialize_fock, padded_cutoff};
pub use poly::{OperatorPolynomial, Word};
pub use wick::{wick_moment, WickEvaluator};

use crate::error::{Error, Result};
use crate::matfun::{cr, mat_arccoth, mat_coth, CMatrix, CVector, C64, EPS_BRANCH};

/// Default thermal floor used to regularize pure states.
pub const NBAR_FLOOR: f64 = 1e-6;
/// Tolerance of the hermiticity diagnostics.
pub const TOL_HERM: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeLayout {
    d: usize,
}

impl ModeLayout {
    pub fn new(d: usize) -> Self {
        assert!(d >= 1, "mode count must be at least 1");
        Self { d }
    }

    pub fn modes(&self) -> usize {
        self.d
    }

    /// Alphabet size `2d`.
    pub fn dim(&self) -> usize {
        2 * self.d
    }

    /// Symplectic form `[[0, −I],[I, 0]]`.
    pub fn j(&self) -> CMatrix {
        let d = self.d;
        CMatrix::from_fn(2 * d, 2 * d, |r, col| {
            if r < d && col == r + d {
                cr(-1.0)
            } else if r >= d && col + d == r {
                cr(1.0)
            } else {
                cr(0.0)
            }
        })
    }

    /// Block swap `[[0, I],[I, 0]]`.
    pub fn e(&self) -> CMatrix {
        let d = self.d;
        CMatrix::from_fn(2 * d, 2 * d, |r, col| if col == self.swap(r) { cr(1.0) } else { cr(0.0) })
    }

    /// Index of the hermitian-conjugate letter.
    pub fn swap(&self, i: usize) -> usize {
        if i < self.d {
            i + self.d
        } else {
            i - self.d
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    layout: ModeLayout,
    m: CVector,
    c: CMatrix,
}

/// Hermiticity and positivity diagnostics; never enforced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDiagnostics {
    /// `max(‖E m − m̄‖∞, ‖E C E − C̄‖∞)`.
    pub herm_drift: f64,
    /// Smallest eigenvalue of the Hermitian part of `(C − J/2) E`.
    pub min_uncertainty_eig: f64,
}

impl StateDiagnostics {
    pub fn hermitian(&self) -> bool {
        self.herm_drift <= TOL_HERM
    }
}

impl GaussianState {
    /// Builds a state; `C` is stored symmetrized.
    pub fn new(layout: ModeLayout, m: CVector, c: CMatrix) -> Result<Self> {
        let n = layout.dim();
        if m.len() != n || c.rows() != n || c.cols() != n {
            return Err(Error::Dimension(format!(
                "state of {} modes needs m of length {n} and C of size {n}×{n}",
                layout.modes()
            )));
        }
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || !c.is_finite() {
            return Err(Error::NonFinite("Gaussian state".into()));
        }
        Ok(Self { layout, m, c: c.symmetrized() })
    }

    /// Single-mode state with mean `α`, thermal occupation `n̄` and
    /// anomalous covariance `ξ = ⟨(a−α)²⟩`.
    pub fn single_mode(alpha: C64, nbar: f64, xi: C64) -> Result<Self> {
        let h = cr(nbar + 0.5);
        let cov = CMatrix::from_rows(&[&[xi, h], &[h, xi.conj()]]);
        Self::new(ModeLayout::new(1), CVector::from_vec(vec![alpha, alpha.conj()]), cov)
    }

    pub fn thermal(nbar: f64) -> Self {
        Self::single_mode(cr(0.0), nbar, cr(0.0)).expect("finite thermal state")
    }

    /// Multimode vacuum; pure, so it has no exponential form.
    pub fn vacuum(d: usize) -> Self {
        let layout = ModeLayout::new(d);
        let c = layout.e().scale_re(0.5);
        Self { layout, m: CVector::zeros(layout.dim()), c }
    }

    /// Coherent state regularized by the thermal floor.
    pub fn coherent(alpha: C64, nbar_floor: f64) -> Result<Self> {
        Self::single_mode(alpha, nbar_floor, cr(0.0))
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    pub fn mean(&self) -> &CVector {
        &self.m
    }

    pub fn cov(&self) -> &CMatrix {
        &self.c
    }

    /// `D = C − J/2`, the ordered pair contraction.
    pub fn contraction(&self) -> CMatrix {
        &self.c - &self.layout.j().scale_re(0.5)
    }

    /// `S = m mᵀ + C − J/2`, the raw second moments.
    pub fn second_moments(&self) -> CMatrix {
        let n = self.layout.dim();
        let d = self.contraction();
        CMatrix::from_fn(n, n, |i, j| self.m[i] * self.m[j] + d[(i, j)])
    }

    pub fn with_params(&self, m: CVector, c: CMatrix) -> Result<Self> {
        Self::new(self.layout, m, c)
    }

    /// Packs `(m, C)` row-major into one vector.
    pub fn to_vec(&self) -> Vec<C64> {
        let mut v: Vec<C64> = self.m.iter().copied().collect();
        v.extend(self.c.row_major());
        v
    }

    pub fn from_vec(layout: ModeLayout, v: &[C64]) -> Result<Self> {
        let n = layout.dim();
        if v.len() != n + n * n {
            return Err(Error::Dimension(format!("packed state of length {} for alphabet {n}", v.len())));
        }
        let c = CMatrix::new(n, n, v[n..].to_vec())?;
        Self::new(layout, CVector::from_column_slice(&v[..n]), c)
    }

    /// Errors with `SingularBranch` when an eigenvalue of `−2J⁻¹C` lies
    /// within `EPS_BRANCH` of ±1.
    pub fn check_regular(&self) -> Result<()> {
        let y = self.branch_matrix();
        for lam in y.eigenvalues()? {
            if (lam - cr(1.0)).norm() < EPS_BRANCH || (lam + cr(1.0)).norm() < EPS_BRANCH {
                return Err(Error::SingularBranch(format!("eigenvalue {lam} of −2J⁻¹C is on the pure-state boundary")));
            }
        }
        Ok(())
    }

    /// `−2J⁻¹C = 2JC`.
    fn branch_matrix(&self) -> CMatrix {
        (&self.layout.j() * &self.c).scale_re(2.0)
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        let e = self.layout.e();
        let em = e.mul_vec(&self.m);
        let mut drift = em.iter().zip(self.m.iter()).fold(0.0f64, |a, (x, y)| a.max((x - y.conj()).norm()));
        let ece = &(&e * &self.c) * &e;
        drift = drift.max((&ece - &self.c.conj()).max_abs());
        let de = &self.contraction() * &e;
        let herm = (&de + &de.adjoint()).scale_re(0.5);
        let eig = nalgebra::SymmetricEigen::new(herm.as_dmatrix().clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        StateDiagnostics { herm_drift: drift, min_uncertainty_eig: min }
    }

    /// `Tr ρ²` for physical states, `1/√|det 2C|`.
    pub fn purity(&self) -> Result<f64> {
        let det = self.c.scale_re(2.0).det()?;
        if det.norm() == 0.0 {
            return Err(Error::Singular("covariance".into()));
        }
        Ok(1.0 / det.norm().sqrt())
    }
}

/// `ρ = exp(½𝔞ᵀK𝔞 + gᵀ𝔞 + s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialForm {
    pub layout: ModeLayout,
    pub k: CMatrix,
    pub g: CVector,
    pub s: C64,
}

/// `K = 2 arccoth(−2J⁻¹C) J⁻¹`, `g = −K m`, and `s` fixed by unit trace:
/// `s = −½ ln|det(C − J/2)| + ½ mᵀK m`.
pub fn to_exponential_form(state: &GaussianState) -> Result<ExponentialForm> {
    let layout = state.layout;
    let j_inv = -&layout.j();
    let y = state.branch_matrix();
    let k = (&mat_arccoth(&y)?.scale_re(2.0) * &j_inv).symmetrized();
    let km = k.mul_vec(&state.m);
    let g = -km.clone();
    let det_d = state.contraction().det()?;
    if det_d.norm() == 0.0 {
        return Err(Error::SingularBranch("C − J/2 is singular".into()));
    }
    let quad: C64 = state.m.iter().zip(km.iter()).map(|(a, b)| a * b).sum();
    let s = cr(-0.5 * det_d.norm().ln()) + quad * 0.5;
    Ok(ExponentialForm { layout, k, g, s })
}

/// `C = −(J/2) coth(KJ/2)`, `m = −K⁻¹g`.
pub fn from_exponential_form(ef: &ExponentialForm) -> Result<GaussianState> {
    let j = ef.layout.j();
    let half_kj = (&ef.k * &j).scale_re(0.5);
    let coth = mat_coth(&half_kj)?;
    let cov = (&j * &coth).scale_re(-0.5);
    let k_inv = ef.k.inverse().map_err(|_| Error::Singular("exponent matrix K".into()))?;
    let m = -k_inv.mul_vec(&ef.g);
    GaussianState::new(ef.layout, m, cov)
}

/// Quadratic operator `½𝔞ᵀM𝔞 + 𝔞ᵀG + c` acting on the ansatz from the left.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadExpPrefix {
    pub m: CMatrix,
    pub g: CVector,
    pub c: C64,
}

impl QuadExpPrefix {
    pub fn zero(layout: ModeLayout) -> Self {
        let n = layout.dim();
        Self { m: CMatrix::zeros(n, n), g: CVector::zeros(n), c: cr(0.0) }
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { m: self.m.scale(s), g: self.g.map(|z| z * s), c: self.c * s }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { m: &self.m + &other.m, g: &self.g + &other.g, c: self.c + other.c }
    }

    /// Word expansion; the quadratic part keeps every ordered pair.
    pub fn to_polynomial(&self, layout: ModeLayout) -> OperatorPolynomial {
        let n = layout.dim();
        let mut p = OperatorPolynomial::scalar(layout, self.c);
        for i in 0..n {
            p.add_term(Word::from_slice(&[i as u8]), self.g[i]);
            for j in 0..n {
                p.add_term(Word::from_slice(&[i as u8, j as u8]), self.m[(i, j)] * 0.5);
            }
        }
        p
    }
}

/// Parameter a derivative is taken against. `Cov(i, j)` moves `C_ij` and
/// `C_ji` together, keeping `C` symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamSelector {
    Mean(usize),
    Cov(usize, usize),
}

impl ParamSelector {
    /// `(∂m, ∂C)` for this selector.
    pub fn direction(&self, layout: ModeLayout) -> (CVector, CMatrix) {
        let n = layout.dim();
        let mut dm = CVector::zeros(n);
        let mut dc = CMatrix::zeros(n, n);
        match *self {
            ParamSelector::Mean(j) => dm[j] = cr(1.0),
            ParamSelector::Cov(i, j) => {
                dc[(i, j)] = cr(1.0);
                dc[(j, i)] = cr(1.0);
            }
        }
        (dm, dc)
    }
}

/// Prefix `P` with `∂ρ = P ρ` along the direction `(∂m, ∂C)`; `∂C` must be
/// symmetric. With `D = C − J/2`:
/// `M = D⁻¹ ∂C D⁻ᵀ`, `G = D⁻¹∂m − M m`, and `c` makes `Tr ∂ρ = 0`.
pub fn derivative_prefix_dir(state: &GaussianState, dm: &CVector, dc: &CMatrix) -> Result<QuadExpPrefix> {
    state.check_regular()?;
    let d = state.contraction();
    let d_inv = d.inverse().map_err(|_| Error::SingularBranch("C − J/2 is singular".into()))?;
    let m_mat = (&(&d_inv * dc) * &d_inv.transpose()).symmetrized();
    let mm = m_mat.mul_vec(&state.m);
    let g = &d_inv.mul_vec(dm) - &mm;
    let n = state.layout.dim();
    let mut c0 = cr(0.0);
    for i in 0..n {
        for j in 0..n {
            c0 += m_mat[(i, j)] * d[(i, j)];
        }
    }
    let half_mmm: C64 = state.m.iter().zip(mm.iter()).map(|(a, b)| a * b).sum::<C64>() * 0.5;
    let mg: C64 = state.m.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
    Ok(QuadExpPrefix { m: m_mat, g, c: -c0 * 0.5 - half_mmm - mg })
}

pub fn derivative_prefix(state: &GaussianState, x: ParamSelector) -> Result<QuadExpPrefix> {
    let (dm, dc) = x.direction(state.layout);
    derivative_prefix_dir(state, &dm, &dc)
}

/// Moves a right factor `Q = ½𝔞ᵀM𝔞 + fᵀ𝔞 + c` through the ansatz:
/// returns `Q'` (same ½ convention) with `ρ Q = Q' ρ`. Conjugation acts as
/// `ρ(𝔞 − m)ρ⁻¹ = T(𝔞 − m)` with `T = D D⁻ᵀ`.
pub fn commute_through(state: &GaussianState, right: &QuadExpPrefix) -> Result<QuadExpPrefix> {
    state.check_regular()?;
    let d = state.contraction();
    let dt_inv = d.transpose().inverse().map_err(|_| Error::SingularBranch("C + J/2 is singular".into()))?;
    let t = &d * &dt_inv;
    let n = state.layout.dim();
    let u = &state.m - &t.mul_vec(&state.m);
    let tt = t.transpose();
    let m_new = (&(&tt * &right.m) * &t).symmetrized();
    let mu = right.m.mul_vec(&u);
    let g_new = &tt.mul_vec(&mu) + &tt.mul_vec(&right.g);
    let mut c_new = right.c;
    for i in 0..n {
        c_new += u[i] * mu[i] * 0.5 + right.g[i] * u[i];
    }
    Ok(QuadExpPrefix { m: m_new, g: g_new, c: c_new })
}

/// `ρ² = w ρ(m, C′)` with `w = 1/√|det 2C|` and
/// `C′ = −(J/4)((2JC)⁻¹ + 2JC)`.
pub fn square_state(state: &GaussianState) -> Result<(C64, GaussianState)> {
    let j = state.layout.j();
    let y = state.branch_matrix();
    let y_inv = y.inverse().map_err(|_| Error::Singular("covariance".into()))?;
    let c_new = (&j * &(&y_inv + &y)).scale_re(-0.25);
    let weight = cr(state.purity()?);
    Ok((weight, GaussianState::new(state.layout, state.m.clone(), c_new)?))
}

/// Vector `𝔄(m)` entries as a polynomial: `𝔞_i𝔞_j − m_i𝔞_j − 𝔞_i m_j`.
pub fn centered_pair(layout: ModeLayout, m: &CVector, i: usize, j: usize) -> OperatorPolynomial {
    let mut p = OperatorPolynomial::monomial(layout, &[i as u8, j as u8], cr(1.0));
    p.add_term(Word::from_slice(&[j as u8]), -m[i]);
    p.add_term(Word::from_slice(&[i as u8]), -m[j]);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::c;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn layout_identities() {
        let l = ModeLayout::new(3);
        let n = l.dim();
        let id = CMatrix::identity(n);
        assert!(close(&(&l.j() * &l.j()), &-&id, 0.0));
        assert!(close(&(&l.e() * &l.e()), &id, 0.0));
    }

    #[test]
    fn thermal_exponential_form() {
        let ef = to_exponential_form(&GaussianState::thermal(1.0)).unwrap();
        let ln2 = 2f64.ln();
        let want = CMatrix::from_real_rows(&[&[0.0, -ln2], &[-ln2, 0.0]]);
        assert!(close(&ef.k, &want, 1e-12), "{:?}", ef.k);
        assert!(ef.g.iter().all(|z| z.norm() == 0.0));
        // Tr e^{-ln2 (N+½)} = √2 ⇒ s = −½ ln 2
        assert!((ef.s - cr(-0.5 * ln2)).norm() < 1e-12);
    }

    #[test]
    fn vacuum_has_no_exponential_form() {
        let err = to_exponential_form(&GaussianState::vacuum(1)).unwrap_err();
        assert!(matches!(err, Error::SingularBranch(_)));
    }

    #[test]
    fn from_exponential_form_thermal() {
        let ln2 = 2f64.ln();
        let ef = ExponentialForm {
            layout: ModeLayout::new(1),
            k: CMatrix::from_real_rows(&[&[0.0, -ln2], &[-ln2, 0.0]]),
            g: CVector::zeros(2),
            s: cr(0.0),
        };
        let st = from_exponential_form(&ef).unwrap();
        assert!(close(st.cov(), &CMatrix::from_real_rows(&[&[0.0, 1.5], &[1.5, 0.0]]), 1e-12));
    }

    #[test]
    fn from_exponential_form_recovers_mean() {
        let st = GaussianState::single_mode(c(0.4, -1.1), 0.8, c(0.1, 0.05)).unwrap();
        let mut ef = to_exponential_form(&st).unwrap();
        let m0 = CVector::from_vec(vec![c(2.0, 1.0), c(2.0, -1.0)]);
        ef.g = -ef.k.mul_vec(&m0);
        let back = from_exponential_form(&ef).unwrap();
        assert!((back.mean() - &m0).camax() < 1e-12);
    }

    #[test]
    fn singular_sinh_is_rejected() {
        let ef =
            ExponentialForm { layout: ModeLayout::new(1), k: CMatrix::zeros(2, 2), g: CVector::zeros(2), s: cr(0.0) };
        assert!(from_exponential_form(&ef).is_err());
    }

    #[test]
    fn square_of_vacuum_and_thermal() {
        let (w, sq) = square_state(&GaussianState::vacuum(1)).unwrap();
        assert!((w - cr(1.0)).norm() < 1e-15);
        assert!(close(sq.cov(), GaussianState::vacuum(1).cov(), 1e-15));

        let (w, sq) = square_state(&GaussianState::thermal(1.0)).unwrap();
        assert!((w - cr(1.0 / 3.0)).norm() < 1e-15);
        let five_sixths = 5.0 / 6.0;
        assert!(close(sq.cov(), &CMatrix::from_real_rows(&[&[0.0, five_sixths], &[five_sixths, 0.0]]), 1e-14));
    }

    #[test]
    fn constant_direction_gives_zero_prefix() {
        let st = GaussianState::thermal(0.7);
        let p = derivative_prefix_dir(&st, &CVector::zeros(2), &CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(p, QuadExpPrefix::zero(st.layout()));
    }

    #[test]
    fn mean_selector_has_no_quadratic_block() {
        let p = derivative_prefix(&GaussianState::thermal(1.0), ParamSelector::Mean(0)).unwrap();
        assert_eq!(p.m.max_abs(), 0.0);
        assert!(p.g.camax() > 0.0);
    }

    #[test]
    fn scalar_commutes() {
        let st = GaussianState::single_mode(c(0.3, 0.2), 1.0, cr(0.0)).unwrap();
        let mut q = QuadExpPrefix::zero(st.layout());
        q.c = c(1.5, -0.5);
        let out = commute_through(&st, &q).unwrap();
        assert_eq!(out.m.max_abs(), 0.0);
        assert_eq!(out.g.camax(), 0.0);
        assert_eq!(out.c, q.c);
    }

    #[test]
    fn commute_zero_mean_keeps_constant() {
        let st = GaussianState::single_mode(cr(0.0), 1.3, c(0.2, 0.1)).unwrap();
        let mut q = QuadExpPrefix::zero(st.layout());
        q.m = CMatrix::from_rows(&[&[c(0.3, 0.1), c(1.0, 0.0)], &[c(1.0, 0.0), c(-0.2, 0.4)]]);
        q.c = c(0.7, 0.0);
        assert!((commute_through(&st, &q).unwrap().c - q.c).norm() < 1e-15);
    }

    #[test]
    fn diagnostics_on_physical_state() {
        let st = GaussianState::single_mode(c(1.0, 2.0), 0.5, c(0.3, -0.1)).unwrap();
        let diag = st.diagnostics();
        assert!(diag.hermitian());
        assert!(diag.min_uncertainty_eig > 0.0);
        assert!(GaussianState::thermal(2.0).check_regular().is_ok());
    }
}
