mod common;

use common::kerr_params;
use gaussian_tcl::fock::{apply_superpoly, liouvillian_adjoint_apply, liouvillian_apply, FockOperator};
use gaussian_tcl::kerr::{generator_split, KerrModel};
use gaussian_tcl::liouville::FieldRegime;
use gaussian_tcl::matfun::c;
use gaussian_tcl::CMatrix;
use proptest::prelude::*;

const CUTOFF: usize = 20;
/// Random matrices live on levels `≤ SUPPORT` so that ladder letters never
/// reach the truncation edge.
const SUPPORT: usize = 16;

fn low_matrix(hermitian: bool) -> impl Strategy<Value = FockOperator> {
    proptest::collection::vec(-1.0..1.0f64, 2 * (SUPPORT + 1) * (SUPPORT + 1)).prop_map(move |v| {
        let k = SUPPORT + 1;
        let raw = CMatrix::from_fn(CUTOFF + 1, CUTOFF + 1, |i, j| {
            if i < k && j < k {
                c(v[2 * (i * k + j)], v[2 * (i * k + j) + 1])
            } else {
                c(0.0, 0.0)
            }
        });
        let m = if hermitian { (&raw + &raw.adjoint()).scale_re(0.5) } else { raw };
        FockOperator::new(m).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heisenberg_generator_is_dual(p in kerr_params(), rho in low_matrix(true), x in low_matrix(false)) {
        let lhs = x.trace_product(&liouvillian_apply(&rho, &p).unwrap());
        let rhs = liouvillian_adjoint_apply(&x, &p).unwrap().trace_product(&rho);
        let scale = lhs.norm().max(1.0);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn split_generator_reproduces_the_master_equation(p in kerr_params(), rho in low_matrix(true)) {
        let (free, inter) = generator_split(&p).unwrap();
        let total = free.to_superpoly().add(&inter.scale(c(p.lambda, 0.0)));
        let via_poly = apply_superpoly(&total, &rho).unwrap();
        let direct = liouvillian_apply(&rho, &p).unwrap();
        let err = (via_poly.matrix() - direct.matrix()).max_abs();
        prop_assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn adjoint_superpoly_is_dual(p in kerr_params(), rho in low_matrix(true), x in low_matrix(false)) {
        let (free, inter) = generator_split(&p).unwrap();
        let total = free.to_superpoly().add(&inter.scale(c(p.lambda, 0.0)));
        let lhs = x.trace_product(&apply_superpoly(&total, &rho).unwrap());
        let rhs = apply_superpoly(&total.adjoint(), &x).unwrap().trace_product(&rho);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn interaction_image_is_dual_at_time_zero(p in kerr_params(), rho in low_matrix(true), x in low_matrix(false)) {
        let model = KerrModel::new(p, FieldRegime::Full).unwrap();
        let inter = model.interaction_at(0.0).unwrap();
        let adj = model.adjoint_at(0.0).unwrap();
        let lhs = x.trace_product(&apply_superpoly(&inter, &rho).unwrap());
        let rhs = apply_superpoly(&adj, &x).unwrap().trace_product(&rho);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
    }
}
