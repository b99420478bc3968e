//! Linear combinations of ladder operators and their vacuum expectations.
//!
//! Only expressions linear in the ladder symbols are represented. The fourth
//! order correlation is handled upstream by factorizing into products of
//! second order moments, so `⟨0|X Y|0⟩` with `X`, `Y` linear is all that is
//! ever needed.

use std::fmt;

use crate::optics::{ComplexAmplitude, Detector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Signal,
    /// Idler mode at one of the four idler detectors.
    Idler(Detector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LadderKind {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LadderSymbol {
    pub mode: Mode,
    pub kind: LadderKind,
}

impl LadderSymbol {
    pub fn create(mode: Mode) -> Self {
        Self {
            mode,
            kind: LadderKind::Create,
        }
    }

    pub fn annihilate(mode: Mode) -> Self {
        Self {
            mode,
            kind: LadderKind::Annihilate,
        }
    }

    /// `a ↔ a†`.
    pub fn dagger(self) -> Self {
        let kind = match self.kind {
            LadderKind::Create => LadderKind::Annihilate,
            LadderKind::Annihilate => LadderKind::Create,
        };
        Self { kind, ..self }
    }
}

impl fmt::Display for LadderSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Signal => "s".to_string(),
            Mode::Idler(d) => (d.index() + 1).to_string(),
        };
        match self.kind {
            LadderKind::Create => write!(f, "a†_{mode}"),
            LadderKind::Annihilate => write!(f, "a_{mode}"),
        }
    }
}

/// `Σ c_k · symbol_k`. Terms are kept as pushed; like symbols are not merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LadderExpression {
    terms: Vec<(ComplexAmplitude, LadderSymbol)>,
}

impl LadderExpression {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(coefficient: ComplexAmplitude, symbol: LadderSymbol) -> Self {
        Self {
            terms: vec![(coefficient, symbol)],
        }
    }

    pub fn push(&mut self, coefficient: ComplexAmplitude, symbol: LadderSymbol) {
        self.terms.push((coefficient, symbol));
    }

    pub fn with(mut self, coefficient: ComplexAmplitude, symbol: LadderSymbol) -> Self {
        self.push(coefficient, symbol);
        self
    }

    /// Appends all terms of `other`.
    pub fn extend(&mut self, other: &LadderExpression) {
        self.terms.extend_from_slice(&other.terms);
    }

    pub fn scaled(&self, factor: ComplexAmplitude) -> Self {
        Self {
            terms: self.terms.iter().map(|&(c, s)| (c * factor, s)).collect(),
        }
    }

    pub fn terms(&self) -> &[(ComplexAmplitude, LadderSymbol)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of the coefficients attached to `symbol`.
    pub fn coefficient(&self, symbol: LadderSymbol) -> ComplexAmplitude {
        self.terms.iter().filter(|(_, s)| *s == symbol).map(|(c, _)| *c).sum()
    }

    /// Hermitian conjugate: conjugate each coefficient and swap create and
    /// annihilate. This is how `E^{(−)}` is obtained from `E^{(+)}`.
    pub fn conjugate(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|&(c, s)| (c.conj(), s.dagger())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|(c, _)| c.is_finite())
    }
}

/// `⟨0| X Y |0⟩` for linear `X` (left) and `Y` (right).
///
/// On the vacuum the only surviving pairs are an annihilator in `X` against a
/// creator of the same mode in `Y`, each giving `⟨a_m a_m†⟩ = 1`.
pub fn vacuum_expectation(left: &LadderExpression, right: &LadderExpression) -> ComplexAmplitude {
    let mut sum = ComplexAmplitude::new(0.0, 0.0);
    for &(cl, sl) in left.terms() {
        if sl.kind != LadderKind::Annihilate {
            continue;
        }
        for &(cr, sr) in right.terms() {
            if sr.kind == LadderKind::Create && sr.mode == sl.mode {
                sum += cl * cr;
            }
        }
    }
    sum
}

/// `Σ |c_l c_r|` over the pairs that survive in [`vacuum_expectation`]: the
/// size of the contributions before any cancellation, which sets the rounding
/// scale of the result.
pub fn vacuum_expectation_bound(left: &LadderExpression, right: &LadderExpression) -> f64 {
    let mut sum = 0.0;
    for &(cl, sl) in left.terms() {
        if sl.kind != LadderKind::Annihilate {
            continue;
        }
        for &(cr, sr) in right.terms() {
            if sr.kind == LadderKind::Create && sr.mode == sl.mode {
                sum += cl.norm() * cr.norm();
            }
        }
    }
    sum
}
