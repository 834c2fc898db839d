//! Dense complex matrices and the matrix functions used by the Gaussian-state
//! algebra: exponential, principal logarithm, inverse, determinant, coth and
//! arccoth.
//!
//! Storage and LU factorisation come from `nalgebra`; the exponential is
//! nalgebra's scaling-and-squaring Padé. The logarithm uses inverse scaling
//! and squaring (product-form Denman–Beavers square roots followed by a
//! Gauss–Legendre evaluation of `log(I + X)`).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Distance from ±1 below which an eigenvalue is treated as sitting on the
/// arccoth branch points.
pub const EPS_BRANCH: f64 = 1e-9;

/// Relative pivot threshold used when deciding that a matrix is singular.
const SINGULAR_PIVOT: f64 = 1e-13;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense complex matrix, row-major in its constructors, always finite.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

/// Complex column vector.
pub type CVector = DVector<C64>;

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix{}x{}[", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                let z = self[(i, j)];
                write!(f, "{}{:+}i", z.re, z.im)?;
            }
        }
        write!(f, "]")
    }
}

impl CMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {}x{} matrix", entries.len(), rows, cols)));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cols = rows[0].len();
        Self(DMatrix::from_fn(r, cols, |i, j| cr(rows[i][j])))
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let cols = rows[0].len();
        Self(DMatrix::from_fn(r, cols, |i, j| rows[i][j]))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self(&self.0 * cr(s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// One-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        (0..self.cols()).map(|j| (0..self.rows()).map(|i| self[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        Self((&self.0 + self.0.transpose()) * cr(0.5))
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        &self.0 * v
    }

    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    fn require_square(&self, what: &str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{what} needs a square matrix, got {}x{}", self.rows(), self.cols())))
        }
    }

    /// Determinant through LU with partial pivoting.
    pub fn det(&self) -> Result<C64> {
        self.require_square("det")?;
        Ok(self.0.clone().lu().determinant())
    }

    /// Inverse, failing when a pivot falls below the relative threshold.
    pub fn inverse(&self) -> Result<Self> {
        self.require_square("inverse")?;
        let lu = self.0.clone().lu();
        let u = lu.u();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let min_pivot = (0..u.nrows()).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if min_pivot <= SINGULAR_PIVOT * scale {
            return Err(Error::Singular("matrix inverse".into()));
        }
        lu.try_inverse().map(Self).ok_or_else(|| Error::Singular("matrix inverse".into()))
    }

    /// Solves `self · X = rhs`.
    pub fn solve(&self, rhs: &CMatrix) -> Result<Self> {
        Ok(&self.inverse()? * rhs)
    }

    /// Eigenvalues via complex Schur decomposition.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        self.require_square("eigenvalues")?;
        let schur = nalgebra::linalg::Schur::try_new(self.0.clone(), 1e-15, 10_000)
            .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
        let (_, t) = schur.unpack();
        Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-&self.0)
    }
}

/// Matrix exponential.
pub fn mat_exp(a: &CMatrix) -> Result<CMatrix> {
    a.require_square("mat_exp")?;
    if !a.is_finite() {
        return Err(Error::NonFinite("mat_exp input".into()));
    }
    Ok(CMatrix(a.0.exp()))
}

/// Principal square root by the product form of the Denman–Beavers iteration.
fn sqrtm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows();
    let id = CMatrix::identity(n);
    let mut m = a.clone();
    let mut y = a.clone();
    for _ in 0..100 {
        let m_inv = m.inverse()?;
        y = (&y * &(&id + &m_inv)).scale_re(0.5);
        let next_m = (&id + &(&m + &m_inv).scale_re(0.5)).scale_re(0.5);
        let delta = (&next_m - &id).norm1();
        m = next_m;
        if delta < 1e-15 * n as f64 {
            return Ok(y);
        }
    }
    Err(Error::Numerical("square-root iteration did not converge".into()))
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub(crate) fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

/// Principal matrix logarithm. Fails if an eigenvalue lies on the closed
/// negative real axis (within rounding).
pub fn mat_log(a: &CMatrix) -> Result<CMatrix> {
    a.require_square("mat_log")?;
    for lam in a.eigenvalues()? {
        if lam.im.abs() <= 1e-14 * lam.norm().max(1.0) && lam.re <= 0.0 {
            return Err(Error::SingularBranch(format!("eigenvalue {lam} on the principal-log branch cut")));
        }
    }
    let n = a.rows();
    let id = CMatrix::identity(n);
    let mut x = a.clone();
    let mut squarings = 0u32;
    while (&x - &id).norm1() > 0.25 {
        x = sqrtm(&x)?;
        squarings += 1;
        if squarings > 64 {
            return Err(Error::Numerical("mat_log: too many square roots".into()));
        }
    }
    // log(I + X) = ∫₀¹ X (I + sX)⁻¹ ds
    let delta = &x - &id;
    let mut acc = CMatrix::zeros(n, n);
    for (s, w) in gauss_legendre_unit(12) {
        let shifted = &id + &delta.scale_re(s);
        let term = &delta * &shifted.inverse()?;
        acc = &acc + &term.scale_re(w);
    }
    Ok(acc.scale_re(2f64.powi(squarings as i32)))
}

/// `½ log((A + I)(A − I)⁻¹)`, rejecting eigenvalues within [`EPS_BRANCH`] of ±1.
pub fn mat_arccoth(a: &CMatrix) -> Result<CMatrix> {
    a.require_square("mat_arccoth")?;
    for lam in a.eigenvalues()? {
        if (lam - 1.0).norm() < EPS_BRANCH || (lam + 1.0).norm() < EPS_BRANCH {
            return Err(Error::SingularBranch(format!("eigenvalue {lam} within {EPS_BRANCH:e} of ±1")));
        }
    }
    let id = CMatrix::identity(a.rows());
    let ratio = &(a + &id) * &(a - &id).inverse()?;
    Ok(mat_log(&ratio)?.scale_re(0.5))
}

/// `cosh(A) sinh(A)⁻¹` from `e^{±A}`.
pub fn mat_coth(a: &CMatrix) -> Result<CMatrix> {
    a.require_square("mat_coth")?;
    let ep = mat_exp(a)?;
    let em = mat_exp(&-a)?;
    let sinh2 = &ep - &em;
    let inv = sinh2.inverse().map_err(|_| Error::Pole("coth: sinh(A) is singular".into()))?;
    Ok(&(&ep + &em) * &inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).frobenius_norm() <= tol * (1.0 + b.frobenius_norm())
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = mat_exp(&CMatrix::zeros(3, 3)).unwrap();
        assert!(close(&e, &CMatrix::identity(3), 1e-15));
    }

    #[test]
    fn exp_of_nilpotent() {
        let a = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let e = mat_exp(&a).unwrap();
        let want = CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(close(&e, &want, 1e-14));
    }

    #[test]
    fn exp_of_diagonal() {
        let a = CMatrix::from_diagonal(&[cr(1.0), cr(-1.0)]);
        let e = mat_exp(&a).unwrap();
        let want = CMatrix::from_diagonal(&[cr(std::f64::consts::E), cr(1.0 / std::f64::consts::E)]);
        assert!(close(&e, &want, 1e-14));
    }

    #[test]
    fn exp_rejects_rectangular() {
        assert!(matches!(mat_exp(&CMatrix::zeros(2, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn arccoth_of_scaled_identity() {
        let a = CMatrix::identity(2).scale_re(2.0);
        let r = mat_arccoth(&a).unwrap();
        let want = CMatrix::identity(2).scale_re(0.5 * 3f64.ln());
        assert!(close(&r, &want, 1e-13));
        assert!((r[(0, 0)].re - 0.549_306_144_334_054_8).abs() < 1e-12);
    }

    #[test]
    fn arccoth_diag_matches_scalar() {
        let a = CMatrix::from_diagonal(&[cr(-3.0), cr(3.0)]);
        let r = mat_arccoth(&a).unwrap();
        let want = CMatrix::from_diagonal(&[cr(-0.5 * 2f64.ln()), cr(0.5 * 2f64.ln())]);
        assert!(close(&r, &want, 1e-13));
        let back = mat_coth(&r).unwrap();
        assert!(close(&back, &a, 1e-12));
    }

    #[test]
    fn arccoth_rejects_branch_point() {
        let a = CMatrix::from_diagonal(&[cr(1.0 + 1e-15), cr(3.0)]);
        assert!(matches!(mat_arccoth(&a), Err(Error::SingularBranch(_))));
    }

    #[test]
    fn coth_of_half_log_two() {
        let a = CMatrix::identity(2).scale_re(0.5 * 2f64.ln());
        let r = mat_coth(&a).unwrap();
        assert!(close(&r, &CMatrix::identity(2).scale_re(3.0), 1e-13));
    }

    #[test]
    fn coth_round_trip_five() {
        let a = CMatrix::from_diagonal(&[cr(5.0), cr(-5.0)]);
        let back = mat_coth(&mat_arccoth(&a).unwrap()).unwrap();
        assert!(close(&back, &a, 1e-10));
    }

    #[test]
    fn coth_pole_at_zero() {
        assert!(matches!(mat_coth(&CMatrix::zeros(2, 2)), Err(Error::Pole(_))));
    }

    #[test]
    fn log_of_rotation_like_matrix() {
        // exp of a non-normal matrix with complex spectrum
        let a = CMatrix::from_rows(&[&[c(0.3, 1.0), c(0.7, -0.2)], &[c(0.0, 0.4), c(-0.5, 0.2)]]);
        let back = mat_log(&mat_exp(&a).unwrap()).unwrap();
        assert!(close(&back, &a, 1e-11));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre_unit(6);
        let s: f64 = rule.iter().map(|(x, w)| w * x.powi(11)).sum();
        assert!((s - 1.0 / 12.0).abs() < 1e-15);
    }

    fn random_matrix(n: usize, seed: &[f64]) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            let k = 2 * (i * n + j);
            c(seed[k % seed.len()], seed[(k + 1) % seed.len()])
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exp_inverse_property(vals in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let a = random_matrix(4, &vals).scale_re(1.2);
            prop_assume!(a.norm1() <= 5.0);
            let prod = &mat_exp(&a).unwrap() * &mat_exp(&-&a).unwrap();
            prop_assert!((&prod - &CMatrix::identity(4)).frobenius_norm() < 1e-11);
        }

        #[test]
        fn log_inverts_exp_in_principal_strip(vals in proptest::collection::vec(-1.0f64..1.0, 18)) {
            let a = random_matrix(3, &vals);
            let spectrum_ok = a.eigenvalues().unwrap().iter().all(|z| z.im.abs() < 3.0);
            prop_assume!(spectrum_ok);
            let back = mat_log(&mat_exp(&a).unwrap()).unwrap();
            prop_assert!((&back - &a).frobenius_norm() < 1e-9 * (1.0 + a.frobenius_norm()));
        }

        #[test]
        fn coth_arccoth_round_trip(
            mags in proptest::collection::vec(1.1f64..10.0, 3),
            signs in proptest::collection::vec(proptest::bool::ANY, 3),
            phases in proptest::collection::vec(-0.3f64..0.3, 3),
            mix in proptest::collection::vec(-0.5f64..0.5, 9),
        ) {
            let diag: Vec<C64> = (0..3)
                .map(|k| {
                    let s = if signs[k] { 1.0 } else { -1.0 };
                    C64::from_polar(s * mags[k], phases[k])
                })
                .collect();
            let v = CMatrix::from_fn(3, 3, |i, j| cr(if i == j { 1.0 } else { 0.0 } + mix[3 * i + j]));
            prop_assume!(v.det().unwrap().norm() > 0.2);
            let a = &(&v * &CMatrix::from_diagonal(&diag)) * &v.inverse().unwrap();
            let back = mat_coth(&mat_arccoth(&a).unwrap()).unwrap();
            prop_assert!((&back - &a).frobenius_norm() <= 1e-9 * a.frobenius_norm());
        }
    }
}
