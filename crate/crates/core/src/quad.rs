//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

use crate::error::{Error, Result};
use crate::matfun::C64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-13, max_intervals: 400 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<C64>,
    err: f64,
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize) -> Result<Panel>
where
    F: FnMut(f64) -> Result<Vec<C64>>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let zero = C64::new(0.0, 0.0);
    let mut kron = vec![zero; dim];
    let mut gauss = vec![zero; dim];
    let mut accumulate = |x: f64, wk: f64, wg: f64, kron: &mut Vec<C64>, gauss: &mut Vec<C64>| -> Result<()> {
        let v = f(x)?;
        if v.len() != dim {
            return Err(Error::Dimension(format!("integrand returned {} values, expected {dim}", v.len())));
        }
        for (i, z) in v.into_iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Quadrature { a, b, err: f64::INFINITY });
            }
            kron[i] += z * wk;
            if wg != 0.0 {
                gauss[i] += z * wg;
            }
        }
        Ok(())
    };
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        if x == 0.0 {
            accumulate(center, wk, wg, &mut kron, &mut gauss)?;
        } else {
            accumulate(center - half * x, wk, wg, &mut kron, &mut gauss)?;
            accumulate(center + half * x, wk, wg, &mut kron, &mut gauss)?;
        }
    }
    let mut err = 0.0f64;
    for i in 0..dim {
        kron[i] *= half;
        gauss[i] *= half;
        err = err.max((kron[i] - gauss[i]).norm());
    }
    Ok(Panel { a, b, value: kron, err })
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Integrates `f` over `[a, b]` componentwise. The error estimate is the
/// max-norm Kronrod–Gauss difference, refined by bisecting the worst panel
/// until it drops below `max(atol, rtol·‖I‖∞)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, opts: QuadOptions) -> Result<Vec<C64>>
where
    F: FnMut(f64) -> Result<Vec<C64>>,
{
    if a == b {
        return Ok(vec![C64::new(0.0, 0.0); dim]);
    }
    let mut panels = vec![gk15(&mut f, a, b, dim)?];
    loop {
        let mut total = vec![C64::new(0.0, 0.0); dim];
        let mut err = 0.0;
        for p in &panels {
            for (t, v) in total.iter_mut().zip(&p.value) {
                *t += v;
            }
            err += p.err;
        }
        let tol = opts.atol.max(opts.rtol * max_norm(&total));
        if err <= tol {
            return Ok(total);
        }
        if panels.len() >= opts.max_intervals {
            return Err(Error::Quadrature { a, b, err });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("non-empty panel list");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Quadrature { a, b, err });
        }
        panels.push(gk15(&mut f, p.a, mid, dim)?);
        panels.push(gk15(&mut f, mid, p.b, dim)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::{c, cr};

    #[test]
    fn polynomials_of_degree_22_are_exact_on_one_panel() {
        let v = integrate(|x| Ok(vec![cr(x.powi(22)), cr(1.0)]), -1.0, 1.0, 2, QuadOptions::default()).unwrap();
        assert!((v[0].re - 2.0 / 23.0).abs() < 1e-15);
        assert!((v[1].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_complex_exponential() {
        let w = c(-0.3, 7.0);
        let v = integrate(|x| Ok(vec![(w * x).exp()]), 0.0, 10.0, 1, QuadOptions::default()).unwrap();
        let exact = ((w * 10.0).exp() - cr(1.0)) / w;
        assert!((v[0] - exact).norm() <= 1e-9 * exact.norm());
    }

    #[test]
    fn empty_interval() {
        let v = integrate(|_| Ok(vec![cr(1.0)]), 2.0, 2.0, 1, QuadOptions::default()).unwrap();
        assert_eq!(v[0], cr(0.0));
    }

    #[test]
    fn singular_integrand_reports_failure() {
        let opts = QuadOptions { max_intervals: 20, ..Default::default() };
        let r = integrate(|x| Ok(vec![cr(1.0 / x.abs().sqrt().max(1e-300)).powi(3)]), -1.0, 1.0, 1, opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
