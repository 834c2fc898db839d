//! Gaussian expectation values of ordered words.
//!
//! For `ρ_ans(m, C)` the expectation of `𝔞_{i₁}⋯𝔞_{i_k}` is the sum over all
//! partitions of the positions into singletons and ordered pairs `p < q`,
//! each singleton contributing `m_{i_p}` and each pair `D_{i_p i_q}` with
//! `D = C − J/2`.

use std::collections::HashMap;

use super::poly::{OperatorPolynomial, Word};
use super::GaussianState;
use crate::error::{Error, Result};
use crate::matfun::{cr, CMatrix, C64};

fn check_letters(state: &GaussianState, word: &[u8]) -> Result<()> {
    let size = state.layout().dim();
    match word.iter().find(|&&l| l as usize >= size) {
        Some(&l) => Err(Error::LetterRange { letter: l as usize, size }),
        None => Ok(()),
    }
}

fn expand(mean: &[C64], contraction: &CMatrix, word: &[u8]) -> C64 {
    let Some((&first, rest)) = word.split_first() else {
        return cr(1.0);
    };
    let mut total = mean[first as usize] * expand(mean, contraction, rest);
    for q in 0..rest.len() {
        let d = contraction[(first as usize, rest[q] as usize)];
        if d == C64::new(0.0, 0.0) {
            continue;
        }
        let mut reduced: Word = Word::with_capacity(rest.len() - 1);
        reduced.extend_from_slice(&rest[..q]);
        reduced.extend_from_slice(&rest[q + 1..]);
        total += d * expand(mean, contraction, &reduced);
    }
    total
}

/// `Tr(𝔞_{i₁}⋯𝔞_{i_k} ρ_ans(m, C))`; the empty word gives 1.
pub fn wick_moment(state: &GaussianState, word: &[u8]) -> Result<C64> {
    check_letters(state, word)?;
    let mean: Vec<C64> = state.mean().iter().copied().collect();
    Ok(expand(&mean, &state.contraction(), word))
}

/// Memoising Wick evaluator bound to one state. Every sub-word reached by the
/// recursion is cached, so long polynomials over a small alphabet cost little
/// more than their number of distinct words.
pub struct WickEvaluator {
    mean: Vec<C64>,
    contraction: CMatrix,
    size: usize,
    memo: HashMap<Word, C64>,
}

impl WickEvaluator {
    pub fn new(state: &GaussianState) -> Self {
        Self {
            mean: state.mean().iter().copied().collect(),
            contraction: state.contraction(),
            size: state.layout().dim(),
            memo: HashMap::new(),
        }
    }

    pub fn moment(&mut self, word: &[u8]) -> C64 {
        debug_assert!(word.iter().all(|&l| (l as usize) < self.size));
        if word.is_empty() {
            return cr(1.0);
        }
        if let Some(v) = self.memo.get(word) {
            return *v;
        }
        let first = word[0] as usize;
        let rest = &word[1..];
        let mut total = self.mean[first] * self.moment(rest);
        for q in 0..rest.len() {
            let d = self.contraction[(first, rest[q] as usize)];
            if d == C64::new(0.0, 0.0) {
                continue;
            }
            let mut reduced: Word = Word::with_capacity(rest.len() - 1);
            reduced.extend_from_slice(&rest[..q]);
            reduced.extend_from_slice(&rest[q + 1..]);
            total += d * self.moment(&reduced);
        }
        self.memo.insert(Word::from_slice(word), total);
        total
    }

    /// Moment of the concatenation `left · middle · right` without allocating
    /// when the result is cached.
    pub fn moment_concat(&mut self, left: &[u8], middle: &[u8], right: &[u8]) -> C64 {
        let mut w: Word = Word::with_capacity(left.len() + middle.len() + right.len());
        w.extend_from_slice(left);
        w.extend_from_slice(middle);
        w.extend_from_slice(right);
        self.moment(&w)
    }

    /// Expectation of a polynomial (linear in its terms).
    pub fn expect(&mut self, poly: &OperatorPolynomial) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (w, &v) in poly.terms() {
            acc += v * self.moment(w);
        }
        acc
    }
}

/// Expectation of a polynomial under `state`.
pub fn expect(state: &GaussianState, poly: &OperatorPolynomial) -> C64 {
    WickEvaluator::new(state).expect(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::c;

    #[test]
    fn vacuum_ccr() {
        let vac = GaussianState::vacuum(1);
        assert_eq!(wick_moment(&vac, &[0, 1]).unwrap(), cr(1.0));
        assert_eq!(wick_moment(&vac, &[1, 0]).unwrap(), cr(0.0));
        assert_eq!(wick_moment(&vac, &[]).unwrap(), cr(1.0));
    }

    #[test]
    fn thermal_number() {
        let th = GaussianState::thermal(2.0);
        assert!((wick_moment(&th, &[1, 0]).unwrap() - cr(2.0)).norm() < 1e-15);
    }

    #[test]
    fn coherent_eigenrelation() {
        let alpha = c(1.0, 0.5);
        let st = GaussianState::single_mode(alpha, 0.0, cr(0.0)).unwrap();
        let v = wick_moment(&st, &[1, 0, 0]).unwrap();
        assert!((v - c(1.25, 0.625)).norm() < 1e-15);
    }

    #[test]
    fn out_of_range_letter() {
        let vac = GaussianState::vacuum(1);
        assert!(matches!(wick_moment(&vac, &[2]), Err(Error::LetterRange { .. })));
    }

    #[test]
    fn memo_matches_direct() {
        let st = GaussianState::single_mode(c(0.3, -0.2), 0.7, c(0.1, 0.2)).unwrap();
        let mut ev = WickEvaluator::new(&st);
        for w in [&[0u8, 1, 1, 0, 1][..], &[1, 1, 0, 0], &[0, 0, 0, 1, 1, 1]] {
            let a = ev.moment(w);
            let b = wick_moment(&st, w).unwrap();
            assert!((a - b).norm() < 1e-14);
        }
    }
}
