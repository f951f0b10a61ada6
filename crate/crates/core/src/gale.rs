//! s-gales over exact rationals.
//!
//! An s-gale `d` satisfies `d(w0) + d(w1) = 2^s · d(w)` at every node. The
//! exponent is carried as the rational `2^s`, so the condition is checked
//! with exact equality.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{self, int, parse_ratio, pow, two_pow_neg, RationalParseError};
use crate::seqcore::BitString;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaleError {
    #[error("2^s must be a positive rational, got {0}")]
    NonPositiveExponent(BigRational),
    #[error("members of a combination must share one exponent")]
    MixedExponents,
    #[error(
        "cannot certify precision: omitted member {index} is not known to be at most 1 on prefixes of length {length}"
    )]
    PrecisionUnsound { index: usize, length: usize },
    #[error("the combination has infinitely many members and no exact value")]
    InfiniteFamily,
    #[error("gale evaluation failed: {0}")]
    Evaluation(String),
    #[error(transparent)]
    Parse(#[from] RationalParseError),
}

/// The exponent `s` of an s-gale, held as the exact rational `2^s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaleExponent {
    two_to_s: BigRational,
}

impl GaleExponent {
    pub fn new(two_to_s: BigRational) -> Result<Self, GaleError> {
        if !two_to_s.is_positive() {
            return Err(GaleError::NonPositiveExponent(two_to_s));
        }
        Ok(Self { two_to_s })
    }

    /// `s = 1`
    pub fn martingale() -> Self {
        Self { two_to_s: int(2) }
    }

    pub fn parse(two_to_s: &str) -> Result<Self, GaleError> {
        Self::new(parse_ratio(two_to_s)?)
    }

    pub fn two_to_s(&self) -> &BigRational {
        &self.two_to_s
    }

    /// `2^(s-1)`, the per-child factor of a flat bet.
    pub fn flat_factor(&self) -> BigRational {
        &self.two_to_s / int(2)
    }

    pub fn s(&self) -> f64 {
        rational::log2(&self.two_to_s)
    }
}

impl fmt::Display for GaleExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^s={} (s≈{:.6})", self.two_to_s, self.s())
    }
}

/// How the capital at a prefix was wagered on the bit that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bet {
    /// The empty prefix: nothing wagered yet.
    Start,
    /// Capital split evenly between both continuations.
    Flat,
    /// The larger share was placed on this bit.
    Favor(bool),
}

impl fmt::Display for Bet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bet::Start => f.write_str("none"),
            Bet::Flat => f.write_str("flat"),
            Bet::Favor(b) => write!(f, "{}", *b as u8),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub prefix_length: usize,
    pub capital: BigRational,
    /// Bet placed on bit `prefix_length - 1`.
    pub bet: Bet,
    pub learner_predicted: Option<bool>,
    pub mistake: Option<bool>,
}

/// Exact capital at every prefix of a bit sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CapitalTrace {
    pub entries: Vec<TraceEntry>,
}

impl CapitalTrace {
    pub fn push(&mut self, entry: TraceEntry) {
        self.entries.push(entry);
    }

    pub fn final_capital(&self) -> Option<&BigRational> {
        self.entries.last().map(|e| &e.capital)
    }

    /// First position attaining the maximum capital, with that capital.
    pub fn argmax(&self) -> Option<(usize, &BigRational)> {
        let mut best: Option<(usize, &BigRational)> = None;
        for e in &self.entries {
            if best.is_none_or(|(_, c)| e.capital > *c) {
                best = Some((e.prefix_length, &e.capital));
            }
        }
        best
    }

    pub fn max_capital(&self) -> Option<&BigRational> {
        self.argmax().map(|(_, c)| c)
    }

    pub fn mistakes(&self) -> usize {
        self.entries.iter().filter(|e| e.mistake == Some(true)).count()
    }

    pub fn capitals(&self) -> impl Iterator<Item = &BigRational> {
        self.entries.iter().map(|e| &e.capital)
    }
}

/// An s-gale evaluator.
pub trait SGale: Send + Sync {
    fn exponent(&self) -> &GaleExponent;

    fn value(&self, w: &[bool]) -> Result<BigRational, GaleError>;

    /// A bound on `value(w)` valid for every `w` of length `len`, when one
    /// is known without evaluating.
    fn value_bound(&self, _len: usize) -> Option<BigRational> {
        None
    }

    /// Capital at every prefix of `bits`. Implementations may override this
    /// with an incremental pass; the result must equal the default.
    fn trace(&self, bits: &[bool]) -> Result<CapitalTrace, GaleError> {
        let mut trace = CapitalTrace::default();
        for len in 0..=bits.len() {
            trace.push(TraceEntry {
                prefix_length: len,
                capital: self.value(&bits[..len])?,
                bet: if len == 0 { Bet::Start } else { Bet::Flat },
                learner_predicted: None,
                mistake: None,
            });
        }
        Ok(trace)
    }
}

impl<G: SGale + ?Sized> SGale for Arc<G> {
    fn exponent(&self) -> &GaleExponent {
        (**self).exponent()
    }
    fn value(&self, w: &[bool]) -> Result<BigRational, GaleError> {
        (**self).value(w)
    }
    fn value_bound(&self, len: usize) -> Option<BigRational> {
        (**self).value_bound(len)
    }
    fn trace(&self, bits: &[bool]) -> Result<CapitalTrace, GaleError> {
        (**self).trace(bits)
    }
}

pub fn evaluate_trace(d: &dyn SGale, bits: &[bool]) -> Result<CapitalTrace, GaleError> {
    d.trace(bits)
}

/// Exact check of `d(w0) + d(w1) = 2^s · d(w)`.
pub fn verify_gale_condition(d: &dyn SGale, w: &[bool]) -> Result<bool, GaleError> {
    let mut child = w.to_vec();
    child.push(false);
    let zero = d.value(&child)?;
    *child.last_mut().unwrap() = true;
    let one = d.value(&child)?;
    Ok(zero + one == d.value(w)? * d.exponent().two_to_s())
}

/// Checks the gale condition at every node `w` with `|w| <= depth`.
/// Returns the first failing node in canonical order, if any.
pub fn verify_gale_tree(d: &dyn SGale, depth: usize) -> Result<Option<BitString>, GaleError> {
    let factor = d.exponent().two_to_s().clone();
    let mut level = vec![(Vec::<bool>::new(), d.value(&[])?)];
    for _ in 0..=depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for (w, v) in level {
            let mut w0 = w.clone();
            w0.push(false);
            let mut w1 = w.clone();
            w1.push(true);
            let v0 = d.value(&w0)?;
            let v1 = d.value(&w1)?;
            if &v0 + &v1 != &v * &factor {
                return Ok(Some(BitString::from_bits(w)));
            }
            next.push((w0, v0));
            next.push((w1, v1));
        }
        level = next;
    }
    Ok(None)
}

/// Checks the gale condition at every proper prefix of `bits`.
pub fn verify_along(d: &dyn SGale, bits: &[bool]) -> Result<Option<usize>, GaleError> {
    for len in 0..bits.len() {
        if !verify_gale_condition(d, &bits[..len])? {
            return Ok(Some(len));
        }
    }
    Ok(None)
}

/// `d(w) = c · 2^((s-1)|w|)`: bets nothing, pays the handicap.
#[derive(Debug, Clone)]
pub struct FlatGale {
    exponent: GaleExponent,
    initial: BigRational,
}

impl FlatGale {
    pub fn new(exponent: GaleExponent) -> Self {
        Self { exponent, initial: BigRational::one() }
    }

    pub fn with_initial(exponent: GaleExponent, initial: BigRational) -> Self {
        Self { exponent, initial }
    }
}

pub fn flat_gale(exponent: GaleExponent) -> FlatGale {
    FlatGale::new(exponent)
}

impl SGale for FlatGale {
    fn exponent(&self) -> &GaleExponent {
        &self.exponent
    }

    fn value(&self, w: &[bool]) -> Result<BigRational, GaleError> {
        Ok(&self.initial * pow(&self.exponent.flat_factor(), w.len() as u64))
    }

    fn value_bound(&self, len: usize) -> Option<BigRational> {
        Some(&self.initial * pow(&self.exponent.flat_factor(), len as u64))
    }
}

/// `c · d` for a positive rational `c`.
#[derive(Debug, Clone)]
pub struct ScaledGale<G> {
    inner: G,
    factor: BigRational,
}

impl<G: SGale> ScaledGale<G> {
    pub fn new(inner: G, factor: BigRational) -> Self {
        assert!(factor.is_positive(), "scaling factor must be positive");
        Self { inner, factor }
    }
}

impl<G: SGale> SGale for ScaledGale<G> {
    fn exponent(&self) -> &GaleExponent {
        self.inner.exponent()
    }

    fn value(&self, w: &[bool]) -> Result<BigRational, GaleError> {
        Ok(self.inner.value(w)? * &self.factor)
    }

    fn value_bound(&self, len: usize) -> Option<BigRational> {
        self.inner.value_bound(len).map(|b| b * &self.factor)
    }

    fn trace(&self, bits: &[bool]) -> Result<CapitalTrace, GaleError> {
        let mut trace = self.inner.trace(bits)?;
        for e in &mut trace.entries {
            e.capital *= &self.factor;
        }
        Ok(trace)
    }
}

/// `d = Σ_{n>=1} 2^-n · d_n`. Indices without a listed member use `tail`
/// when present and contribute zero otherwise.
#[derive(Clone)]
pub struct CombinedGale {
    exponent: GaleExponent,
    members: BTreeMap<usize, Arc<dyn SGale>>,
    tail: Option<Arc<dyn SGale>>,
}

impl CombinedGale {
    pub fn new(exponent: GaleExponent) -> Self {
        Self { exponent, members: BTreeMap::new(), tail: None }
    }

    /// Every index `n >= 1` not explicitly set uses `member`.
    pub fn with_tail(mut self, member: Arc<dyn SGale>) -> Result<Self, GaleError> {
        if member.exponent() != &self.exponent {
            return Err(GaleError::MixedExponents);
        }
        self.tail = Some(member);
        Ok(self)
    }

    pub fn insert(&mut self, index: usize, member: Arc<dyn SGale>) -> Result<(), GaleError> {
        assert!(index >= 1, "combination indices start at 1");
        if member.exponent() != &self.exponent {
            return Err(GaleError::MixedExponents);
        }
        self.members.insert(index, member);
        Ok(())
    }

    pub fn member(&self, index: usize) -> Option<&Arc<dyn SGale>> {
        self.members.get(&index).or(self.tail.as_ref())
    }

    pub fn members(&self) -> impl Iterator<Item = (usize, &Arc<dyn SGale>)> {
        self.members.iter().map(|(&n, g)| (n, g))
    }

    /// `Σ_{n=1}^{terms} 2^-n · d_n(w)`
    pub fn truncated(&self, w: &[bool], terms: usize) -> Result<BigRational, GaleError> {
        let mut sum = BigRational::zero();
        for n in 1..=terms {
            if let Some(d) = self.member(n) {
                sum += d.value(w)? * two_pow_neg(n as u64);
            }
        }
        Ok(sum)
    }

    /// Confirms every term beyond the first `terms` is at most 1 at `w`,
    /// which bounds the omitted mass by `2^-terms`.
    fn certify_tail(&self, w: &[bool], terms: usize) -> Result<(), GaleError> {
        let one = BigRational::one();
        for (&n, d) in self.members.range(terms + 1..) {
            let bounded = match d.value_bound(w.len()) {
                Some(b) => b <= one,
                None => d.value(w)? <= one,
            };
            if !bounded {
                return Err(GaleError::PrecisionUnsound { index: n, length: w.len() });
            }
        }
        if let Some(tail) = &self.tail {
            if tail.value_bound(w.len()).is_none_or(|b| b > one) {
                let index = (terms + 1..).find(|n| !self.members.contains_key(n)).unwrap();
                return Err(GaleError::PrecisionUnsound { index, length: w.len() });
            }
        }
        Ok(())
    }
}

/// Sum of the first `|w| + r` weighted terms, guaranteed within `2^-r` of
/// the full combination.
pub fn combine_and_approximate(c: &CombinedGale, w: &[bool], r: usize) -> Result<BigRational, GaleError> {
    let terms = w.len() + r;
    c.certify_tail(w, terms)?;
    c.truncated(w, terms)
}

impl SGale for CombinedGale {
    fn exponent(&self) -> &GaleExponent {
        &self.exponent
    }

    fn value(&self, w: &[bool]) -> Result<BigRational, GaleError> {
        if self.tail.is_some() {
            return Err(GaleError::InfiniteFamily);
        }
        let mut sum = BigRational::zero();
        for (&n, d) in &self.members {
            sum += d.value(w)? * two_pow_neg(n as u64);
        }
        Ok(sum)
    }
}
