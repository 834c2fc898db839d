#![allow(dead_code)]

use gaussian_tcl::gaussian::GaussianState;
use gaussian_tcl::kerr::KerrParams;
use gaussian_tcl::matfun::c;
use gaussian_tcl::{CMatrix, CVector, C64};
use proptest::prelude::*;

/// Displaced squeezed thermal states with moderate occupation, so that a
/// 40-level block carries all but a negligible tail.
pub fn regular_state() -> impl Strategy<Value = GaussianState> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU, 0.2..1.5f64, 0.0..0.6f64, 0.0..std::f64::consts::TAU).prop_map(
        |(r, phi, nbar, frac, xphi)| {
            let xi = C64::from_polar(frac * (nbar * (nbar + 1.0)).sqrt(), xphi);
            GaussianState::single_mode(C64::from_polar(r, phi), nbar, xi).unwrap()
        },
    )
}

pub fn kerr_params() -> impl Strategy<Value = KerrParams> {
    (-2.0..2.0f64, 0.1..2.0f64, -2.0..2.0f64, 0.0..0.5f64, -1.0..1.0f64)
        .prop_map(|(delta, gamma, chi, lambda, drive)| KerrParams { delta, gamma, chi, lambda, drive })
}

/// `(∂m, ∂C)` pairs that keep the state Hermitian; together they span the
/// five single-mode parameters over ℂ.
pub fn hermitian_directions() -> Vec<(CVector, CMatrix)> {
    let z = c(0.0, 0.0);
    let i = c(0.0, 1.0);
    let one = c(1.0, 0.0);
    let m = |a: C64, b: C64| (CVector::from_vec(vec![a, b]), CMatrix::zeros(2, 2));
    let cv = |r: [[C64; 2]; 2]| (CVector::zeros(2), CMatrix::from_rows(&[&r[0], &r[1]]));
    vec![m(one, one), m(i, -i), cv([[one, z], [z, one]]), cv([[i, z], [z, -i]]), cv([[z, one], [one, z]])]
}

pub fn leading_block(m: &CMatrix, n: usize) -> CMatrix {
    CMatrix::from_fn(n + 1, n + 1, |i, j| m[(i, j)])
}
