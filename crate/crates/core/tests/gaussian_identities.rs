mod common;

use common::{hermitian_directions, leading_block, regular_state};
use gaussian_tcl::fock::polynomial_matrix;
use gaussian_tcl::gaussian::{
    commute_through, derivative_prefix_dir, exponential_matrix, from_exponential_form, padded_cutoff, square_state,
    to_exponential_form, GaussianState, ModeLayout, QuadExpPrefix,
};
use gaussian_tcl::matfun::{c, cr};
use gaussian_tcl::{CMatrix, CVector};
use proptest::prelude::*;

const CUTOFF: usize = 40;

fn padded(st: &GaussianState) -> CMatrix {
    exponential_matrix(st, padded_cutoff(CUTOFF)).unwrap().into_matrix()
}

fn prefix() -> impl Strategy<Value = QuadExpPrefix> {
    proptest::collection::vec(-1.0..1.0f64, 12).prop_map(|v| {
        let z = |k: usize| c(v[2 * k], v[2 * k + 1]);
        QuadExpPrefix {
            m: CMatrix::from_rows(&[&[z(0), z(1)], &[z(1), z(2)]]),
            g: CVector::from_vec(vec![z(3), z(4)]),
            c: z(5),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exponential_form_has_unit_trace(st in regular_state()) {
        let tr = exponential_matrix(&st, 150).unwrap().trace();
        prop_assert!((tr - cr(1.0)).norm() < 1e-9, "trace {tr}");
    }

    #[test]
    fn exponential_form_round_trip(st in regular_state()) {
        let back = from_exponential_form(&to_exponential_form(&st).unwrap()).unwrap();
        prop_assert!((back.mean() - st.mean()).camax() < 1e-10);
        prop_assert!((back.cov() - st.cov()).max_abs() < 1e-10);
    }

    #[test]
    fn derivative_prefix_matches_central_differences(st in regular_state()) {
        let h = 1e-5;
        let l = ModeLayout::new(1);
        let rho = padded(&st);
        for (dm, dc) in hermitian_directions() {
            let at = |s: f64| {
                let shifted = st.with_params(st.mean() + &dm.map(|z| z * s), st.cov() + &dc.scale_re(s)).unwrap();
                padded(&shifted)
            };
            let fd = (&at(h) - &at(-h)).scale_re(0.5 / h);
            let p = polynomial_matrix(&derivative_prefix_dir(&st, &dm, &dc).unwrap().to_polynomial(l), padded_cutoff(CUTOFF)).unwrap();
            let analytic = p.matrix() * &rho;
            let err = (&leading_block(&fd, CUTOFF) - &leading_block(&analytic, CUTOFF)).max_abs();
            prop_assert!(err < 1e-4, "finite-difference mismatch {err}");
        }
    }

    #[test]
    fn prefix_passes_through_the_state(st in regular_state(), q in prefix()) {
        let l = ModeLayout::new(1);
        let big = padded_cutoff(CUTOFF);
        let rho = padded(&st);
        let q2 = commute_through(&st, &q).unwrap();
        let right = &rho * polynomial_matrix(&q.to_polynomial(l), big).unwrap().matrix();
        let left = polynomial_matrix(&q2.to_polynomial(l), big).unwrap().matrix() * &rho;
        let err = (&leading_block(&right, CUTOFF) - &leading_block(&left, CUTOFF)).frobenius_norm();
        prop_assert!(err < 1e-8, "pass-through residual {err}");
    }

    #[test]
    fn square_is_a_weighted_gaussian(st in regular_state()) {
        let rho = padded(&st);
        let (w, sq) = square_state(&st).unwrap();
        let want = padded(&sq).scale(w);
        let err = (&leading_block(&(&rho * &rho), CUTOFF) - &leading_block(&want, CUTOFF)).frobenius_norm();
        prop_assert!(err < 1e-8, "square residual {err}");
    }

    #[test]
    fn thermal_purity_is_one_over_two_nbar_plus_one(nbar in 0.05..5.0f64) {
        let (w, sq) = square_state(&GaussianState::thermal(nbar)).unwrap();
        prop_assert!((w - cr(1.0 / (2.0 * nbar + 1.0))).norm() < 1e-12);
        // ρ² ∝ thermal state at n̄² / (2n̄ + 1)
        let want = nbar * nbar / (2.0 * nbar + 1.0);
        prop_assert!((sq.cov()[(0, 1)] - cr(want + 0.5)).norm() < 1e-10);
    }
}

#[test]
fn thermal_one_has_weight_one_third() {
    let (w, _) = square_state(&GaussianState::thermal(1.0)).unwrap();
    assert!((w - cr(1.0 / 3.0)).norm() < 1e-12);
}

#[test]
fn pure_states_have_no_exponential_form() {
    assert!(to_exponential_form(&GaussianState::vacuum(1)).is_err());
}
