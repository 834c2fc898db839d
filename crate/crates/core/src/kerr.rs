//! Driven dissipative Kerr oscillator.
//!
//! `ℒρ = −i[H_λ, ρ] + (γ/2)(aρa† − ½{a†a, ρ})` with
//! `H_λ = −Δa†a + (λχ/2)a†a†aa − iF(a − a†)`. The quadratic part and the drive
//! form the free generator; the Kerr commutator is the interaction, with `λ`
//! kept outside as the perturbation knob.

use crate::error::{Error, Result};
use crate::gaussian::{ModeLayout, OperatorPolynomial};
use crate::liouville::{AffinePropagator, FieldRegime, ImageTemplate, QuadraticGenerator, SuperPolynomial, SuperWord};
use crate::matfun::{c, cr, CMatrix, CVector, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KerrParams {
    pub delta: f64,
    pub gamma: f64,
    pub chi: f64,
    pub lambda: f64,
    pub drive: f64,
}

impl KerrParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.delta, self.gamma, self.chi, self.lambda, self.drive];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("Kerr parameters must be finite".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams(format!("decay rate γ = {} is negative", self.gamma)));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidParams(format!("λ = {} is negative", self.lambda)));
        }
        Ok(())
    }

    pub fn layout(&self) -> ModeLayout {
        ModeLayout::new(1)
    }
}

/// `(ℒ₀, ℒ_I)`; `ℒ_I = −i(χ/2)[a†a†aa, ·]` without the factor `λ`.
pub fn generator_split(p: &KerrParams) -> Result<(QuadraticGenerator, SuperPolynomial)> {
    p.validate()?;
    let l = p.layout();
    let h = l.e().scale_re(-p.delta);
    let gamma = CMatrix::from_real_rows(&[&[0.0, p.gamma / 2.0], &[0.0, 0.0]]);
    let f = CVector::from_vec(vec![c(0.0, -p.drive), c(0.0, p.drive)]);
    let free = QuadraticGenerator::new(l, h, gamma, f)?;
    let kerr = OperatorPolynomial::monomial(l, &[1, 1, 0, 0], cr(p.chi / 2.0));
    Ok((free, SuperPolynomial::commutator(&kerr, cr(1.0))?))
}

/// Closed-form letter propagation coefficients:
/// `(a·)(t) = α₁(a·) + β₁`, `(a†·)(t) = α₂₁(a†·) + α₂₂(·a†) + β₂`,
/// `(·a†)(t) = α₃(·a†) + β₃`, `(·a)(t) = α₄₁(·a) + α₄₂(a·) + β₄`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaBeta {
    pub a1: C64,
    pub a21: C64,
    pub a22: C64,
    pub a3: C64,
    pub a41: C64,
    pub a42: C64,
    pub b1: C64,
    pub b2: C64,
    pub b3: C64,
    pub b4: C64,
}

/// `∫₀ᵗ e^{zs} ds`, continuous through `z = 0`.
fn phi1(z: C64, t: f64) -> C64 {
    let zt = z * t;
    if zt.norm() < 1e-5 {
        cr(t) * (cr(1.0) + zt / 2.0 + zt * zt / 6.0)
    } else {
        (zt.exp() - cr(1.0)) / z
    }
}

impl AlphaBeta {
    pub fn at(t: f64, p: &KerrParams) -> Self {
        let (g, d, f) = (p.gamma, p.delta, p.drive);
        let minus = c(-g / 4.0, d); // −γ/4 + iΔ
        let plus = c(-g / 4.0, -d); // −γ/4 − iΔ
        let sinh = (g * t / 4.0).sinh();
        Self {
            a1: (minus * t).exp(),
            a21: (-minus * t).exp(),
            a22: c(0.0, -d * t).exp() * (-2.0 * sinh),
            a3: (plus * t).exp(),
            a41: (-plus * t).exp(),
            a42: c(0.0, d * t).exp() * (-2.0 * sinh),
            b1: phi1(minus, t) * f,
            b2: phi1(plus, t) * f,
            b3: phi1(plus, t) * f,
            b4: phi1(minus, t) * f,
        }
    }

    /// The same numbers as printed (the `β` entries written as ratios).
    pub fn printed(t: f64, p: &KerrParams) -> Self {
        let (g, d, f) = (p.gamma, p.delta, p.drive);
        let mut ab = Self::at(t, p);
        let em = c(-g * t / 4.0, d * t).exp();
        let ep = c(-g * t / 4.0, -d * t).exp();
        ab.b1 = (cr(4.0) - em * 4.0) * f / c(g, -4.0 * d);
        ab.b2 = (cr(4.0) - ep * 4.0) * f / c(g, 4.0 * d);
        ab.b3 = (cr(4.0) - ep * 4.0) * f / c(g, 4.0 * d);
        ab.b4 = (cr(1.0) - em) * f / c(g / 4.0, -d);
        ab
    }
}

/// Kerr generator with its propagator and interaction-image template,
/// ready to produce `ℒ*(t)` coefficient vectors.
#[derive(Clone, Debug)]
pub struct KerrModel {
    pub params: KerrParams,
    pub free: QuadraticGenerator,
    pub interaction: SuperPolynomial,
    pub regime: FieldRegime,
    propagator: AffinePropagator,
    template: ImageTemplate,
    adjoint_keys: Vec<SuperWord>,
}

impl KerrModel {
    pub fn new(params: KerrParams, regime: FieldRegime) -> Result<Self> {
        let (free, interaction) = generator_split(&params)?;
        let propagator = AffinePropagator::new(&free)?;
        let template = ImageTemplate::new(&interaction, &propagator, regime)?;
        let adjoint_keys = template
            .keys()
            .iter()
            .map(|w| {
                let mut one = SuperPolynomial::zero(params.layout());
                one.add_term(w, cr(1.0)).expect("template words respect the cap");
                one.adjoint().terms().next().map(|(k, _)| k.clone()).expect("single word")
            })
            .collect();
        Ok(Self { params, free, interaction, regime, propagator, template, adjoint_keys })
    }

    pub fn layout(&self) -> ModeLayout {
        self.params.layout()
    }

    pub fn propagator(&self) -> &AffinePropagator {
        &self.propagator
    }

    /// Words of `ℒ*(t)`; coefficients come from [`KerrModel::adjoint_coefficients`].
    pub fn adjoint_keys(&self) -> &[SuperWord] {
        &self.adjoint_keys
    }

    pub fn adjoint_coefficients(&self, t: f64) -> Result<Vec<C64>> {
        self.template.coefficients(t)
    }

    pub fn assemble_adjoint(&self, coeffs: &[C64]) -> SuperPolynomial {
        let mut sp = SuperPolynomial::zero(self.layout());
        for (w, &v) in self.adjoint_keys.iter().zip(coeffs) {
            sp.add_term(w, v).expect("template words respect the cap");
        }
        sp
    }

    /// `ℒ(t) = e^{−ℒ₀t}ℒ_I e^{ℒ₀t}`.
    pub fn interaction_at(&self, t: f64) -> Result<SuperPolynomial> {
        self.template.image(t)
    }

    /// `ℒ*(t)`.
    pub fn adjoint_at(&self, t: f64) -> Result<SuperPolynomial> {
        Ok(self.assemble_adjoint(&self.adjoint_coefficients(t)?))
    }
}

/// `ℒ*(t) a†ⁿaᵐ`, normal ordered, computed from the mechanical interaction
/// image with drive terms filtered by `regime`.
pub fn adjoint_action(t: f64, n: usize, m: usize, p: &KerrParams, regime: FieldRegime) -> Result<OperatorPolynomial> {
    let model = KerrModel::new(*p, regime)?;
    let l = p.layout();
    let x = OperatorPolynomial::creation_annihilation(l, n, m);
    Ok(model.adjoint_at(t)?.apply(&x).normal_ordered())
}

/// Normal-ordered coefficients of `ℒ*(t) a†ⁿaᵐ` divided by `−iχ/2`,
/// keyed by `(powers of a†, powers of a)`.
pub fn adjoint_table(
    t: f64,
    n: usize,
    m: usize,
    p: &KerrParams,
    regime: FieldRegime,
) -> Result<std::collections::BTreeMap<(usize, usize), C64>> {
    let poly = adjoint_action(t, n, m, p, regime)?;
    let scale = c(0.0, -p.chi / 2.0);
    let mut table = poly.normal_table();
    for v in table.values_mut() {
        *v /= scale;
    }
    table.retain(|_, v| v.norm() > 0.0);
    Ok(table)
}

/// Largest deviation between a mechanical table for `a†ⁿaᵐ` and printed
/// offsets, relative to `1 + |printed|`. Keys missing on either side count
/// as zero.
pub fn table_deviation(
    table: &std::collections::BTreeMap<(usize, usize), C64>,
    printed: &[((i64, i64), C64)],
    n: usize,
    m: usize,
) -> f64 {
    let mut worst = 0.0f64;
    for (&(kn, km), &v) in table {
        let off = (kn as i64 - n as i64, km as i64 - m as i64);
        let want = printed.iter().find(|(o, _)| *o == off).map(|(_, x)| *x).unwrap_or_default();
        worst = worst.max((v - want).norm() / (1.0 + want.norm()));
    }
    for &(off, want) in printed {
        let key = (n as i64 + off.0, m as i64 + off.1);
        if key.0 >= 0 && key.1 >= 0 && !table.contains_key(&(key.0 as usize, key.1 as usize)) {
            worst = worst.max(want.norm());
        }
    }
    worst
}

/// Printed coefficients without drive: `c₀₀` on `a†ⁿaᵐ` and `c₁₁` on
/// `a†ⁿ⁺¹aᵐ⁺¹`.
pub fn undriven_coeffs(t: f64, n: usize, m: usize, p: &KerrParams) -> [((i64, i64), C64); 2] {
    let (nf, mf) = (n as f64, m as f64);
    [((0, 0), cr(mf * (mf - 1.0) - nf * (nf - 1.0))), ((1, 1), cr(2.0 * (mf - nf) * (-p.gamma * t / 2.0).exp()))]
}

/// Printed weak-field coefficients, first order in the drive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakFieldCoeffs {
    pub c00: C64,
    pub c11: C64,
    pub c01: C64,
    pub c12: C64,
    pub c0m1: C64,
    pub cm10: C64,
    pub c10: C64,
    pub c21: C64,
}

impl WeakFieldCoeffs {
    /// `((Δn_dagger, Δn_a), coefficient)` offsets relative to `a†ⁿaᵐ`.
    pub fn offsets(&self) -> [((i64, i64), C64); 8] {
        [
            ((0, 0), self.c00),
            ((1, 1), self.c11),
            ((0, 1), self.c01),
            ((1, 2), self.c12),
            ((0, -1), self.c0m1),
            ((-1, 0), self.cm10),
            ((1, 0), self.c10),
            ((2, 1), self.c21),
        ]
    }
}

pub fn weak_field_coeffs(t: f64, n: usize, m: usize, p: &KerrParams) -> WeakFieldCoeffs {
    let ab = AlphaBeta::printed(t, p);
    let (nf, mf) = (n as f64, m as f64);
    let AlphaBeta { a1, a21, a22, a3, a41, a42, b1, b2, b3, b4 } = ab;
    WeakFieldCoeffs {
        c00: cr(mf * (mf - 1.0) - nf * (nf - 1.0)),
        c11: cr(2.0 * (mf - nf) * (-p.gamma * t / 2.0).exp()),
        c01: a1 * a1 * a21 * b2 * (2.0 * mf) - a3 * a41 * b3 * (a41 + a42) * (4.0 * nf),
        c12: a1 * a1 * (a21 + a22) * b2 * 2.0 - a3 * a42 * a42 * b3 * 2.0 - a3 * a41 * b3 * (a41 + a42 * 2.0) * 2.0,
        c0m1: a1 * a21 * a21 * b1 * (2.0 * mf * (mf - 1.0)),
        cm10: -a3 * a41 * a41 * b3 * (2.0 * nf * (nf - 1.0)),
        c10: a1 * a21 * b1 * (a21 + a22) * (4.0 * mf) - a3 * a3 * a41 * b4 * (2.0 * nf),
        // read as 2α₁α₂₁β₁(α₂₁+2α₂₂) + 2(α₁α₂₂²β₁ − α₃²α₄₂β₄) − 2α₃²α₄₁β₄
        c21: a1 * a21 * b1 * (a21 + a22 * 2.0) * 2.0 + (a1 * a22 * a22 * b1 - a3 * a3 * a42 * b4) * 2.0
            - a3 * a3 * a41 * b4 * 2.0,
    }
}

/// Printed strong-field coefficients, third order in the drive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrongFieldCoeffs {
    pub c1: C64,
    pub c2: C64,
    pub c3: C64,
    pub c4: C64,
}

impl StrongFieldCoeffs {
    pub fn offsets(&self) -> [((i64, i64), C64); 4] {
        [((0, 1), self.c1), ((1, 0), self.c2), ((0, -1), self.c3), ((-1, 0), self.c4)]
    }
}

pub fn strong_field_coeffs(t: f64, n: usize, m: usize, p: &KerrParams) -> StrongFieldCoeffs {
    let AlphaBeta { a1, a21, a22, a3, a41, a42, b1, b2, b3, b4 } = AlphaBeta::printed(t, p);
    let (nf, mf) = (n as f64, m as f64);
    StrongFieldCoeffs {
        c1: b2 * b2 * b1 * a1 * 2.0 - b3 * b3 * b4 * a42 * 2.0 - b3 * b3 * b4 * a41 * 2.0,
        c2: b1 * b1 * b2 * a22 * 2.0 - b4 * b4 * b3 * a3 * 2.0 + b1 * b1 * b2 * a21 * 2.0,
        c3: b1 * b1 * b2 * a21 * (2.0 * mf),
        // read as −2n β₃² β₄ α₄₁
        c4: -(b3 * b3 * b4 * a41) * (2.0 * nf),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(drive: f64) -> KerrParams {
        KerrParams { delta: 0.7, gamma: 1.3, chi: 0.9, lambda: 0.1, drive }
    }

    #[test]
    fn chi_zero_has_empty_interaction() {
        let (_, li) = generator_split(&KerrParams { chi: 0.0, ..params(1.0) }).unwrap();
        assert!(li.is_empty());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(generator_split(&KerrParams { gamma: -1.0, ..params(0.0) }).is_err());
        assert!(generator_split(&KerrParams { lambda: f64::NAN, ..params(0.0) }).is_err());
    }

    #[test]
    fn alpha_beta_matches_propagator() {
        let p = params(0.8);
        let (free, _) = generator_split(&p).unwrap();
        let prop = AffinePropagator::new(&free).unwrap();
        for t in [0.0, 0.3, 1.7, 4.0] {
            let (a, b) = prop.at(t).unwrap();
            let ab = AlphaBeta::at(t, &p);
            let pairs = [
                (a[(0, 0)], ab.a1),
                (a[(1, 1)], ab.a21),
                (a[(1, 2)], ab.a22),
                (a[(2, 2)], ab.a3),
                (a[(3, 3)], ab.a41),
                (a[(3, 0)], ab.a42),
                (b[0], ab.b1),
                (b[1], ab.b2),
                (b[2], ab.b3),
                (b[3], ab.b4),
            ];
            for (i, (x, y)) in pairs.iter().enumerate() {
                assert!((x - y).norm() < 1e-12 * (1.0 + y.norm()), "t={t} entry {i}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn printed_beta_agree_with_integral_form() {
        let p = params(1.1);
        let a = AlphaBeta::at(2.3, &p);
        let b = AlphaBeta::printed(2.3, &p);
        for (x, y) in [(a.b1, b.b1), (a.b2, b.b2), (a.b3, b.b3), (a.b4, b.b4)] {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn alpha_identities() {
        let p = params(0.0);
        for t in [0.1, 1.0, 5.0] {
            let ab = AlphaBeta::at(t, &p);
            assert!((ab.a1 * ab.a3 - cr((-p.gamma * t / 2.0).exp())).norm() < 1e-14);
            assert_eq!(ab.b1.norm() + ab.b2.norm() + ab.b3.norm() + ab.b4.norm(), 0.0);
        }
    }

    #[test]
    fn number_operator_conserved_without_drive() {
        for t in [0.0, 0.5, 2.0] {
            let poly = adjoint_action(t, 1, 1, &params(0.0), FieldRegime::Full).unwrap();
            assert!(poly.pruned(1e-14).is_empty(), "{poly:?}");
        }
    }

    #[test]
    fn undriven_table() {
        let p = params(0.0);
        for (n, m) in [(0, 1), (2, 1), (3, 3), (1, 4)] {
            let t = 0.8;
            let table = adjoint_table(t, n, m, &p, FieldRegime::Full).unwrap();
            let (nf, mf) = (n as f64, m as f64);
            let c00 = cr(mf * mf - mf - nf * nf + nf);
            let c11 = cr(2.0 * (mf - nf) * (-p.gamma * t / 2.0).exp());
            let got00 = table.get(&(n, m)).copied().unwrap_or_default();
            let got11 = table.get(&(n + 1, m + 1)).copied().unwrap_or_default();
            assert!((got00 - c00).norm() < 1e-12);
            assert!((got11 - c11).norm() < 1e-12);
            assert!(table.iter().all(|(k, v)| *k == (n, m) || *k == (n + 1, m + 1) || v.norm() < 1e-12), "{table:?}");
        }
    }

    #[test]
    fn image_at_zero_is_interaction() {
        let p = params(1.5);
        let model = KerrModel::new(p, FieldRegime::Full).unwrap();
        let img = model.interaction_at(0.0).unwrap();
        assert_eq!(img, model.interaction);
    }

    #[test]
    fn strong_coefficients_vanish_at_zero() {
        let s = strong_field_coeffs(0.0, 3, 2, &params(2.0));
        assert_eq!(s.c1.norm() + s.c2.norm() + s.c3.norm() + s.c4.norm(), 0.0);
    }

    #[test]
    fn weak_coefficients_reduce_without_drive() {
        let w = weak_field_coeffs(1.2, 2, 3, &params(0.0));
        for z in [w.c01, w.c12, w.c0m1, w.cm10, w.c10, w.c21] {
            assert_eq!(z.norm(), 0.0);
        }
        assert_eq!(weak_field_coeffs(0.0, 1, 1, &params(0.0)).c11, cr(0.0));
        assert_eq!(weak_field_coeffs(0.0, 2, 5, &params(0.0)).c11, cr(6.0));
    }

    #[test]
    fn weak_and_strong_tables_match_mechanical() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(40);
        for _ in 0..20 {
            let p = KerrParams {
                delta: rng.gen_range(-2.0..2.0),
                gamma: rng.gen_range(0.1..3.0),
                chi: rng.gen_range(0.2..1.5),
                lambda: 0.1,
                drive: rng.gen_range(0.1..2.0),
            };
            let (t, n, m) = (rng.gen_range(0.0..3.0), rng.gen_range(0..6usize), rng.gen_range(0..6usize));
            let weak = adjoint_table(t, n, m, &p, FieldRegime::Weak).unwrap();
            let err = table_deviation(&weak, &weak_field_coeffs(t, n, m, &p).offsets(), n, m);
            assert!(err < 1e-9, "weak t={t} n={n} m={m}: {err}");
            let strong = adjoint_table(t, n, m, &p, FieldRegime::Strong).unwrap();
            let err = table_deviation(&strong, &strong_field_coeffs(t, n, m, &p).offsets(), n, m);
            assert!(err < 1e-9, "strong t={t} n={n} m={m}: {err}");
        }
    }
}
