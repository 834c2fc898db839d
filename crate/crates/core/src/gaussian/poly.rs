//! Formal sums of ordered words in the mode letters `a₁…a_d, a₁†…a_d†`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use smallvec::SmallVec;

use super::ModeLayout;
use crate::matfun::{cr, C64};

/// Ordered product of mode letters; letter `i < d` is `a_{i+1}`, letter
/// `i ≥ d` is `a_{i-d+1}†`.
pub type Word = SmallVec<[u8; 16]>;

/// Complex-weighted sum of ordered words. Words are never reordered with the
/// commutation relations unless [`OperatorPolynomial::normal_ordered`] is
/// called explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorPolynomial {
    layout: ModeLayout,
    terms: BTreeMap<Word, C64>,
}

impl OperatorPolynomial {
    pub fn zero(layout: ModeLayout) -> Self {
        Self { layout, terms: BTreeMap::new() }
    }

    pub fn scalar(layout: ModeLayout, value: C64) -> Self {
        let mut p = Self::zero(layout);
        p.add_term(Word::new(), value);
        p
    }

    pub fn letter(layout: ModeLayout, letter: usize) -> Self {
        let mut p = Self::zero(layout);
        p.add_term(Word::from_slice(&[letter as u8]), cr(1.0));
        p
    }

    pub fn monomial(layout: ModeLayout, word: &[u8], coeff: C64) -> Self {
        let mut p = Self::zero(layout);
        p.add_term(Word::from_slice(word), coeff);
        p
    }

    /// `a†ⁿ aᵐ` for a single mode.
    pub fn creation_annihilation(layout: ModeLayout, n: usize, m: usize) -> Self {
        assert_eq!(layout.modes(), 1, "a†ⁿaᵐ monomials are single-mode");
        let mut w = Word::new();
        w.extend(std::iter::repeat_n(1u8, n));
        w.extend(std::iter::repeat_n(0u8, m));
        let mut p = Self::zero(layout);
        p.add_term(w, cr(1.0));
        p
    }

    pub fn layout(&self) -> ModeLayout {
        self.layout
    }

    pub fn add_term(&mut self, word: Word, coeff: C64) {
        if coeff == C64::new(0.0, 0.0) {
            return;
        }
        debug_assert!(word.iter().all(|&l| (l as usize) < self.layout.dim()));
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = *e.get() + coeff;
                if v == C64::new(0.0, 0.0) {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
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

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero(self.layout);
        for (w, &v) in &self.terms {
            out.add_term(w.clone(), v * s);
        }
        out
    }

    /// Drops terms with `|coeff| <= tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            layout: self.layout,
            terms: self.terms.iter().filter(|(_, v)| v.norm() > tol).map(|(w, v)| (w.clone(), *v)).collect(),
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, v| a.max(v.norm()))
    }

    /// Rewrites every word with creation letters to the left of annihilation
    /// letters, using `[a_i, a_j†] = δ_ij`.
    pub fn normal_ordered(&self) -> Self {
        let mut out = Self::zero(self.layout);
        let d = self.layout.modes() as u8;
        let mut stack: Vec<(Word, C64)> = self.terms.iter().map(|(w, v)| (w.clone(), *v)).collect();
        while let Some((w, v)) = stack.pop() {
            // first annihilator immediately followed by a creator
            let pos = w.windows(2).position(|p| p[0] < d && p[1] >= d);
            match pos {
                None => out.add_term(w, v),
                Some(k) => {
                    let mut swapped = w.clone();
                    swapped.swap(k, k + 1);
                    stack.push((swapped, v));
                    if w[k + 1] - d == w[k] {
                        let mut contracted = Word::new();
                        contracted.extend_from_slice(&w[..k]);
                        contracted.extend_from_slice(&w[k + 2..]);
                        stack.push((contracted, v));
                    }
                }
            }
        }
        out
    }

    /// Single-mode normal-ordered coefficient table `(n, m) ↦ coeff of a†ⁿaᵐ`.
    pub fn normal_table(&self) -> BTreeMap<(usize, usize), C64> {
        assert_eq!(self.layout.modes(), 1);
        let mut table = BTreeMap::new();
        for (w, v) in self.normal_ordered().terms() {
            let n = w.iter().filter(|&&l| l == 1).count();
            let m = w.len() - n;
            *table.entry((n, m)).or_insert(C64::new(0.0, 0.0)) += *v;
        }
        table
    }
}

impl Add for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn add(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        let mut out = self.clone();
        for (w, &v) in &rhs.terms {
            out.add_term(w.clone(), v);
        }
        out
    }
}

impl Mul for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    /// Operator product: words concatenate.
    fn mul(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        let mut out = OperatorPolynomial::zero(self.layout);
        for (w1, &v1) in &self.terms {
            for (w2, &v2) in &rhs.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                out.add_term(w, v1 * v2);
            }
        }
        out
    }
}
