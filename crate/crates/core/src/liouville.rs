//! Superoperators as polynomials in left/right multiplication letters.
//!
//! Letter `j < 2d` is left multiplication by `𝔞_j`; letter `2d + k` is right
//! multiplication by `(E𝔞)_k`. For one mode this is `𝔅 = (a·, a†·, ·a†, ·a)`.
//! A word `s₁s₂…s_k` is the composition `s₁∘s₂∘…∘s_k`, so `s_k` acts first.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::gaussian::{ModeLayout, OperatorPolynomial, Word};
use crate::matfun::{c, cr, mat_exp, CMatrix, CVector, C64};

/// Longest super-word the expansion machinery accepts.
pub const DEGREE_CAP: usize = 4;

pub type SuperWord = SmallVec<[u8; 8]>;

/// `ℒ₀ρ = −i[½𝔞ᵀH𝔞 + fᵀ𝔞, ρ] + 𝔞ᵀρΓ𝔞 − {½𝔞ᵀΓᵀ𝔞, ρ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticGenerator {
    pub layout: ModeLayout,
    pub h: CMatrix,
    pub gamma: CMatrix,
    pub f: CVector,
}

impl QuadraticGenerator {
    pub fn new(layout: ModeLayout, h: CMatrix, gamma: CMatrix, f: CVector) -> Result<Self> {
        let n = layout.dim();
        if h.rows() != n || h.cols() != n || gamma.rows() != n || gamma.cols() != n || f.len() != n {
            return Err(Error::Dimension(format!("quadratic generator blocks must be {n}×{n} and length {n}")));
        }
        if (&h - &h.transpose()).max_abs() > 0.0 {
            return Err(Error::InvalidParams("H must be symmetric".into()));
        }
        Ok(Self { layout, h, gamma, f })
    }

    pub fn zero(layout: ModeLayout) -> Self {
        let n = layout.dim();
        Self { layout, h: CMatrix::zeros(n, n), gamma: CMatrix::zeros(n, n), f: CVector::zeros(n) }
    }

    /// The generator as a super-polynomial of degree ≤ 2.
    pub fn to_superpoly(&self) -> SuperPolynomial {
        let l = self.layout;
        let n = l.dim();
        let mut sp = SuperPolynomial::zero(l);
        let minus_i = c(0.0, -1.0);
        for i in 0..n {
            sp.push(&[left(i)], minus_i * self.f[i]);
            sp.push(&[right(l, i)], -minus_i * self.f[i]);
            for j in 0..n {
                let hij = self.h[(i, j)] * 0.5;
                let gji = self.gamma[(j, i)] * 0.5;
                // 𝔞_i𝔞_j ρ and ρ 𝔞_i𝔞_j
                sp.push(&[left(i), left(j)], minus_i * hij - gji);
                sp.push(&[right(l, j), right(l, i)], -minus_i * hij - gji);
                sp.push(&[left(i), right(l, j)], self.gamma[(i, j)]);
            }
        }
        sp
    }
}

/// Super letter of left multiplication by `𝔞_i`.
pub fn left(i: usize) -> u8 {
    i as u8
}

/// Super letter of right multiplication by `𝔞_i`.
pub fn right(layout: ModeLayout, i: usize) -> u8 {
    (layout.dim() + layout.swap(i)) as u8
}

/// `(is_left, mode letter)` for a super letter.
pub fn decode(layout: ModeLayout, s: u8) -> (bool, usize) {
    let n = layout.dim();
    let s = s as usize;
    if s < n {
        (true, s)
    } else {
        (false, layout.swap(s - n))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuperPolynomial {
    layout: ModeLayout,
    terms: BTreeMap<SuperWord, C64>,
}

impl SuperPolynomial {
    pub fn zero(layout: ModeLayout) -> Self {
        Self { layout, terms: BTreeMap::new() }
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    /// Adds `coeff · word`, merging like words.
    pub fn add_term(&mut self, word: &[u8], coeff: C64) -> Result<()> {
        if word.len() > DEGREE_CAP {
            return Err(Error::DegreeCap { len: word.len(), cap: DEGREE_CAP });
        }
        let size = 2 * self.layout.dim();
        if let Some(&s) = word.iter().find(|&&s| s as usize >= size) {
            return Err(Error::LetterRange { letter: s as usize, size });
        }
        self.push(word, coeff);
        Ok(())
    }

    fn push(&mut self, word: &[u8], coeff: C64) {
        if coeff == C64::new(0.0, 0.0) {
            return;
        }
        let e = self.terms.entry(SuperWord::from_slice(word)).or_insert(C64::new(0.0, 0.0));
        *e += coeff;
        if *e == C64::new(0.0, 0.0) {
            self.terms.remove(word);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SuperWord, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &[u8]) -> C64 {
        self.terms.get(word).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero(self.layout);
        for (w, &v) in &self.terms {
            out.push(w, v * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, &v) in &other.terms {
            out.push(w, v);
        }
        out
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `−i·coeff·[h, ·]` for an operator polynomial `h`.
    pub fn commutator(h: &OperatorPolynomial, coeff: C64) -> Result<Self> {
        let l = h.layout();
        let mut sp = Self::zero(l);
        let k = c(0.0, -1.0) * coeff;
        for (w, &v) in h.terms() {
            let lw: SuperWord = w.iter().map(|&x| left(x as usize)).collect();
            let rw: SuperWord = w.iter().rev().map(|&x| right(l, x as usize)).collect();
            sp.add_term(&lw, k * v)?;
            sp.add_term(&rw, -k * v)?;
        }
        Ok(sp)
    }

    /// Trace dual: `Tr(X·𝒮ρ) = Tr((𝒮*X)·ρ)`. Reverses each word and swaps
    /// left and right multiplication by the same mode letter.
    pub fn adjoint(&self) -> Self {
        let l = self.layout;
        let mut out = Self::zero(l);
        for (w, &v) in &self.terms {
            let aw: SuperWord = w
                .iter()
                .rev()
                .map(|&s| {
                    let (is_left, x) = decode(l, s);
                    if is_left {
                        right(l, x)
                    } else {
                        left(x)
                    }
                })
                .collect();
            out.push(&aw, v);
        }
        out
    }

    /// Applies the superoperator to an operator polynomial: left letters
    /// prepend in word order, right letters append in reverse order.
    pub fn apply(&self, x: &OperatorPolynomial) -> OperatorPolynomial {
        let l = self.layout;
        let mut out = OperatorPolynomial::zero(l);
        for (sw, &sv) in &self.terms {
            let (pre, post) = split_word(l, sw);
            for (xw, &xv) in x.terms() {
                let mut w: Word = Word::with_capacity(pre.len() + xw.len() + post.len());
                w.extend_from_slice(&pre);
                w.extend_from_slice(xw);
                w.extend_from_slice(&post);
                out.add_term(w, sv * xv);
            }
        }
        out
    }

    /// `[𝔅_j, 𝒮]` for a degree ≤ 2 superoperator, as `(row of Λ, φ_j)` with
    /// `[𝔅_j, 𝒮] = Σ_k Λ_jk 𝔅_k + φ_j`.
    fn commutator_row(&self, j: usize) -> Result<(Vec<C64>, C64)> {
        let l = self.layout;
        let size = 2 * l.dim();
        let mut row = vec![C64::new(0.0, 0.0); size];
        let mut constant = C64::new(0.0, 0.0);
        for (w, &v) in &self.terms {
            if w.len() > 2 {
                return Err(Error::InvalidParams("free generator must be at most quadratic".into()));
            }
            for p in 0..w.len() {
                let kappa = letter_commutator(l, j as u8, w[p]);
                if kappa == C64::new(0.0, 0.0) {
                    continue;
                }
                match w.len() {
                    1 => constant += v * kappa,
                    _ => row[w[1 - p] as usize] += v * kappa,
                }
            }
        }
        Ok((row, constant))
    }
}

/// Left-prefix and right-suffix mode words of a super-word.
pub fn split_word(l: ModeLayout, sw: &[u8]) -> (Word, Word) {
    let mut pre = Word::new();
    let mut post = Word::new();
    for &s in sw {
        let (is_left, x) = decode(l, s);
        if is_left {
            pre.push(x as u8);
        }
    }
    for &s in sw.iter().rev() {
        let (is_left, x) = decode(l, s);
        if !is_left {
            post.push(x as u8);
        }
    }
    (pre, post)
}

/// `[s, t]` as a multiple of the identity superoperator.
fn letter_commutator(l: ModeLayout, s: u8, t: u8) -> C64 {
    let (ls, xs) = decode(l, s);
    let (lt, xt) = decode(l, t);
    if ls != lt {
        return cr(0.0);
    }
    // [𝔞_x, 𝔞_y] = (J⁻¹)_xy = −J_xy
    let jinv = -l.j()[(xs, xt)];
    if ls {
        jinv
    } else {
        -jinv
    }
}

/// The super letter vector obeys `d𝔅(t)/dt = Λ𝔅(t) + φ` for
/// `𝔅(t) = e^{−ℒ₀t}𝔅e^{ℒ₀t}`; `(Λ, φ)` are read off `[𝔅_j, ℒ₀]`.
pub fn heisenberg_system(gen: &QuadraticGenerator) -> Result<(CMatrix, CVector)> {
    let sp = gen.to_superpoly();
    let size = 2 * gen.layout.dim();
    let mut lam = CMatrix::zeros(size, size);
    let mut phi = CVector::zeros(size);
    for j in 0..size {
        let (row, constant) = sp.commutator_row(j)?;
        for (k, v) in row.into_iter().enumerate() {
            lam[(j, k)] = v;
        }
        phi[j] = constant;
    }
    Ok((lam, phi))
}

/// The block matrices `(L, J₂, F)` as printed for the letter vector 𝔅.
pub fn build_superoperator_matrices(gen: &QuadraticGenerator) -> (CMatrix, CMatrix, CVector) {
    let l = gen.layout;
    let n = l.dim();
    let e = l.e();
    let j = l.j();
    let i = c(0.0, 1.0);
    let sym = (&gen.gamma.transpose() + &gen.gamma).scale_re(0.5);
    let b11 = &gen.h.scale(-i) - &sym;
    let b12 = &gen.gamma * &e;
    let b21 = &e * &gen.gamma.transpose();
    let b22 = &(&(&e * &gen.h) * &e).scale(i) - &(&(&e * &sym) * &e);
    let mut big_l = CMatrix::zeros(2 * n, 2 * n);
    let mut j2 = CMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for col in 0..n {
            big_l[(r, col)] = b11[(r, col)];
            big_l[(r, col + n)] = b12[(r, col)];
            big_l[(r + n, col)] = b21[(r, col)];
            big_l[(r + n, col + n)] = b22[(r, col)];
            j2[(r, col)] = -j[(r, col)];
            j2[(r + n, col + n)] = -j[(r, col)];
        }
    }
    let ef = e.mul_vec(&gen.f);
    let mut f = CVector::zeros(2 * n);
    for r in 0..n {
        f[r] = -i * gen.f[r];
        f[r + n] = i * ef[r];
    }
    (big_l, j2, f)
}

/// `𝔅(t) = A(t)𝔅 + b(t)` with `A = e^{Λt}` and `b = ∫₀ᵗ e^{Λs} ds φ`,
/// both taken from one augmented exponential so singular `Λ` is harmless.
/// Evaluations are memoised per time.
#[derive(Debug)]
pub struct AffinePropagator {
    lam: CMatrix,
    phi: CVector,
    memo: Mutex<HashMap<u64, (CMatrix, CVector)>>,
}

impl Clone for AffinePropagator {
    fn clone(&self) -> Self {
        Self::from_system(self.lam.clone(), self.phi.clone())
    }
}

const MEMO_LIMIT: usize = 4096;

impl AffinePropagator {
    pub fn new(gen: &QuadraticGenerator) -> Result<Self> {
        let (lam, phi) = heisenberg_system(gen)?;
        Ok(Self::from_system(lam, phi))
    }

    pub fn from_system(lam: CMatrix, phi: CVector) -> Self {
        Self { lam, phi, memo: Mutex::new(HashMap::new()) }
    }

    pub fn identity(layout: ModeLayout) -> Self {
        let n = 2 * layout.dim();
        Self::from_system(CMatrix::zeros(n, n), CVector::zeros(n))
    }

    pub fn generator(&self) -> (&CMatrix, &CVector) {
        (&self.lam, &self.phi)
    }

    pub fn size(&self) -> usize {
        self.phi.len()
    }

    pub fn at(&self, t: f64) -> Result<(CMatrix, CVector)> {
        if !t.is_finite() {
            return Err(Error::NonFinite("propagation time".into()));
        }
        let key = t.to_bits();
        if let Some(v) = self.memo.lock().expect("propagator memo").get(&key) {
            return Ok(v.clone());
        }
        let n = self.size();
        let mut aug = CMatrix::zeros(n + 1, n + 1);
        for r in 0..n {
            for col in 0..n {
                aug[(r, col)] = self.lam[(r, col)] * t;
            }
            aug[(r, n)] = self.phi[r] * t;
        }
        let ex = mat_exp(&aug)?;
        let a = CMatrix::from_fn(n, n, |r, col| ex[(r, col)]);
        let b = CVector::from_fn(n, |r, _| ex[(r, n)]);
        let mut memo = self.memo.lock().expect("propagator memo");
        if memo.len() >= MEMO_LIMIT {
            memo.clear();
        }
        memo.insert(key, (a.clone(), b.clone()));
        Ok((a, b))
    }
}

/// `(A(t), b(t))` for the generator's letter propagation.
pub fn propagate_b(gen: &QuadraticGenerator, t: f64) -> Result<(CMatrix, CVector)> {
    AffinePropagator::new(gen)?.at(t)
}

/// Substitutes `𝔅_j ↦ Σ_k A_jk 𝔅_k + b_j` letter by letter.
pub fn interaction_image(gen_i: &SuperPolynomial, prop: &AffinePropagator, t: f64) -> Result<SuperPolynomial> {
    let template = ImageTemplate::new(gen_i, prop, FieldRegime::Full)?;
    template.image(t)
}

/// Which powers of the drive shift `b` survive in an interaction image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldRegime {
    /// Every term.
    Full,
    /// At most one drive factor.
    Weak,
    /// Exactly three drive factors, the leading strong-drive order of a
    /// quartic interaction.
    Strong,
    /// Exactly the given number of drive factors.
    DrivePower(usize),
}

impl FieldRegime {
    pub fn admits(&self, drive_power: usize) -> bool {
        match self {
            FieldRegime::Full => true,
            FieldRegime::Weak => drive_power <= 1,
            FieldRegime::Strong => drive_power == 3,
            FieldRegime::DrivePower(k) => drive_power == *k,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Factor {
    A(u8, u8),
    B(u8),
}

#[derive(Clone, Debug)]
struct TemplateTerm {
    key: usize,
    coeff: C64,
    factors: SmallVec<[Factor; 4]>,
}

/// Precomputed letter substitution for a fixed super-polynomial. Entries of
/// `A` and `b` that vanish identically are pruned by probing two generic
/// times, so evaluation is a flat sum of short products.
#[derive(Clone, Debug)]
pub struct ImageTemplate {
    layout: ModeLayout,
    keys: Vec<SuperWord>,
    terms: Vec<TemplateTerm>,
    prop: AffinePropagator,
}

impl ImageTemplate {
    pub fn new(sp: &SuperPolynomial, prop: &AffinePropagator, regime: FieldRegime) -> Result<Self> {
        let size = prop.size();
        let mut a_live = vec![vec![false; size]; size];
        let mut b_live = vec![false; size];
        for probe in [0.731_f64, 1.618_f64] {
            let (a, b) = prop.at(probe)?;
            for j in 0..size {
                b_live[j] |= b[j] != C64::new(0.0, 0.0);
                for k in 0..size {
                    a_live[j][k] |= a[(j, k)] != C64::new(0.0, 0.0);
                }
            }
        }
        let mut key_index: BTreeMap<SuperWord, usize> = BTreeMap::new();
        let mut terms = Vec::new();
        for (w, &v) in sp.terms() {
            let mut partial: Vec<(SuperWord, SmallVec<[Factor; 4]>, usize)> =
                vec![(SuperWord::new(), SmallVec::new(), 0)];
            for &s in w.iter() {
                let j = s as usize;
                let mut next = Vec::new();
                for (pw, pf, pow) in &partial {
                    for k in 0..size {
                        if a_live[j][k] {
                            let mut nw = pw.clone();
                            nw.push(k as u8);
                            let mut nf = pf.clone();
                            nf.push(Factor::A(j as u8, k as u8));
                            next.push((nw, nf, *pow));
                        }
                    }
                    if b_live[j] {
                        let mut nf = pf.clone();
                        nf.push(Factor::B(j as u8));
                        next.push((pw.clone(), nf, pow + 1));
                    }
                }
                partial = next;
            }
            for (nw, nf, pow) in partial {
                if !regime.admits(pow) {
                    continue;
                }
                let next_key = key_index.len();
                let key = *key_index.entry(nw).or_insert(next_key);
                terms.push(TemplateTerm { key, coeff: v, factors: nf });
            }
        }
        let mut keys = vec![SuperWord::new(); key_index.len()];
        for (w, i) in key_index {
            keys[i] = w;
        }
        Ok(Self { layout: sp.layout(), keys, terms, prop: prop.clone() })
    }

    pub fn keys(&self) -> &[SuperWord] {
        &self.keys
    }

    /// Coefficients aligned with [`ImageTemplate::keys`].
    pub fn coefficients(&self, t: f64) -> Result<Vec<C64>> {
        let (a, b) = self.prop.at(t)?;
        let mut out = vec![C64::new(0.0, 0.0); self.keys.len()];
        for term in &self.terms {
            let mut v = term.coeff;
            for f in &term.factors {
                v *= match *f {
                    Factor::A(j, k) => a[(j as usize, k as usize)],
                    Factor::B(j) => b[j as usize],
                };
            }
            out[term.key] += v;
        }
        Ok(out)
    }

    /// Rebuilds a super-polynomial from coefficients aligned with the keys.
    pub fn assemble(&self, coeffs: &[C64]) -> SuperPolynomial {
        let mut sp = SuperPolynomial::zero(self.layout);
        for (w, &v) in self.keys.iter().zip(coeffs) {
            sp.push(w, v);
        }
        sp
    }

    pub fn image(&self, t: f64) -> Result<SuperPolynomial> {
        Ok(self.assemble(&self.coefficients(t)?))
    }
}
