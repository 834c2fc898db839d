//! Fock-basis materialization of single-mode Gaussian states.

use super::{to_exponential_form, GaussianState};
use crate::error::{Error, Result};
use crate::fock::{ladder_matrices, FockOperator};
use crate::matfun::{mat_exp, CMatrix, C64};

/// Basis size padding used by [`materialize_fock`].
pub fn padded_cutoff(cutoff: usize) -> usize {
    cutoff + cutoff.max(20)
}

/// `exp(½𝔞ᵀK𝔞 + gᵀ𝔞 + s)` on the basis `0..=cutoff`, not renormalized. Only
/// entries well below the top level are faithful; see [`materialize_fock`].
pub fn exponential_matrix(state: &GaussianState, cutoff: usize) -> Result<FockOperator> {
    if state.layout().modes() != 1 {
        return Err(Error::Dimension("materialization is single-mode".into()));
    }
    let ef = to_exponential_form(state)?;
    let (a, ad) = ladder_matrices(cutoff);
    let letters = [a.matrix(), ad.matrix()];
    let n = cutoff + 1;
    let mut x = CMatrix::zeros(n, n);
    for i in 0..2 {
        x = &x + &letters[i].scale(ef.g[i]);
        for j in 0..2 {
            x = &x + &(letters[i] * letters[j]).scale(ef.k[(i, j)] * 0.5);
        }
    }
    let herm_err = (&x - &x.adjoint()).max_abs();
    let (shifted, shift) = if herm_err <= 1e-12 * x.max_abs().max(1.0) {
        hermitian_exp(&x)
    } else {
        let shift = x.eigenvalues()?.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re));
        (mat_exp(&(&x - &CMatrix::identity(n).scale_re(shift)))?, shift)
    };
    let factor = (ef.s + shift).exp();
    if !factor.re.is_finite() || !factor.im.is_finite() {
        return Err(Error::NonFinite("exponential-form normalization".into()));
    }
    FockOperator::new(shifted.scale(factor))
}

/// Builds the exponential form on a padded basis, keeps the leading
/// `(cutoff+1)` block and renormalizes to unit trace. The padding keeps the
/// truncation defect of `a a†` at the top level away from the kept block.
pub fn materialize_fock(state: &GaussianState, cutoff: usize) -> Result<FockOperator> {
    if cutoff < 10 {
        return Err(Error::InvalidParams(format!("materialization cutoff {cutoff} is below 10")));
    }
    let full = exponential_matrix(state, padded_cutoff(cutoff))?;
    let block = CMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| full.matrix()[(i, j)]);
    let tr = block.trace();
    if tr.norm() == 0.0 || !tr.re.is_finite() {
        return Err(Error::Numerical("materialized state has zero trace".into()));
    }
    FockOperator::new(block.scale(C64::new(1.0, 0.0) / tr))
}

/// `exp(X − top)` for Hermitian `X` by eigendecomposition, with `top` its
/// largest eigenvalue so nothing overflows.
fn hermitian_exp(x: &CMatrix) -> (CMatrix, f64) {
    let h = (x + &x.adjoint()).scale_re(0.5);
    let eig = nalgebra::SymmetricEigen::new(h.into_dmatrix());
    let top = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let u = &eig.eigenvectors;
    let n = u.nrows();
    let w: Vec<f64> = eig.eigenvalues.iter().map(|l| (l - top).exp()).collect();
    let m = CMatrix::from_fn(n, n, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            if w[k] != 0.0 {
                acc += u[(i, k)] * u[(j, k)].conj() * w[k];
            }
        }
        acc
    });
    (m, top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::moment_from_density;
    use crate::gaussian::wick_moment;
    use crate::matfun::{c, cr};

    #[test]
    fn thermal_is_geometric() {
        let rho = materialize_fock(&GaussianState::thermal(1.0), 60).unwrap();
        for k in 0..=60 {
            let want = 0.5f64.powi(k as i32 + 1);
            assert!((rho.matrix()[(k, k)] - cr(want)).norm() < 1e-15, "level {k}");
        }
        assert_eq!(rho.trace(), cr(1.0));
    }

    #[test]
    fn number_matches_wick() {
        let st = GaussianState::single_mode(c(0.8, -0.4), 0.6, c(0.2, 0.1)).unwrap();
        let rho = materialize_fock(&st, 60).unwrap();
        let fock = moment_from_density(&rho, &[1, 0]).unwrap();
        let wick = wick_moment(&st, &[1, 0]).unwrap();
        assert!((fock - wick).norm() < 1e-8, "{fock} vs {wick}");
    }

    #[test]
    fn unnormalized_trace_is_one() {
        let st = GaussianState::single_mode(c(0.5, 0.2), 0.9, c(-0.1, 0.3)).unwrap();
        let tr = exponential_matrix(&st, 80).unwrap().trace();
        assert!((tr - cr(1.0)).norm() < 1e-10, "{tr}");
    }

    #[test]
    fn small_cutoff_and_pure_states_rejected() {
        assert!(materialize_fock(&GaussianState::thermal(1.0), 5).is_err());
        assert!(materialize_fock(&GaussianState::vacuum(1), 20).is_err());
    }
}
