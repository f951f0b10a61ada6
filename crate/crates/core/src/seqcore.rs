//! Bit strings in length-then-lexicographic order, and language oracles
//! with their characteristic prefixes.
//!
//! The order λ, 0, 1, 00, 01, 10, 11, 000, … is the single canonical
//! enumeration used throughout the crate. Position `i` of every
//! characteristic prefix is the membership bit of the `i`-th string in it.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::BigRational;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{parse_ratio, to_f64, RationalParseError};
use crate::rng;

/// Default cap on exhaustive enumeration lengths.
pub const DEFAULT_LENGTH_CAP: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error("oracle `{oracle}` is declared up to length {bound}, queried at length {length}")]
    BeyondDeclaredBound { oracle: String, bound: usize, length: usize },
    #[error("exhaustive enumeration up to length {requested} exceeds the cap {cap}")]
    ResourceCap { requested: usize, cap: usize },
    #[error("unsatisfiable density target: {0}")]
    Unsatisfiable(String),
    #[error("invalid bit string `{0}`")]
    BadBitString(String),
    #[error(transparent)]
    Rational(#[from] RationalParseError),
}

/// A finite binary string. Ordered by length first, then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn ones(n: usize) -> Self {
        Self { bits: vec![true; n] }
    }

    /// The `len`-bit big-endian representation of `value`.
    pub fn from_value(value: u64, len: usize) -> Self {
        debug_assert!(len == 64 || len < 64 && value >> len == 0);
        let bits = (0..len).rev().map(|k| (value >> k) & 1 == 1).collect();
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn first(&self) -> Option<bool> {
        self.bits.first().copied()
    }

    /// `b·self`
    pub fn prepend(&self, b: bool) -> Self {
        let mut bits = Vec::with_capacity(self.len() + 1);
        bits.push(b);
        bits.extend_from_slice(&self.bits);
        Self { bits }
    }

    /// `self·b`
    pub fn append(&self, b: bool) -> Self {
        let mut bits = self.bits.clone();
        bits.push(b);
        Self { bits }
    }

    pub fn concat(&self, other: &BitString) -> Self {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }

    pub fn tail(&self) -> Self {
        Self { bits: self.bits.iter().skip(1).copied().collect() }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Value of the bits read as a big-endian binary number.
    pub fn value(&self) -> u64 {
        assert!(self.len() <= 64, "bit string too long for a u64 value");
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn index(&self) -> LexIndex {
        string_to_index(self)
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.is_empty() {
            return f.write_str("λ");
        }
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = SeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "λ" {
            return Ok(Self::empty());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(SeqError::BadBitString(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from_bits)
    }
}

impl From<&[bool]> for BitString {
    fn from(bits: &[bool]) -> Self {
        Self { bits: bits.to_vec() }
    }
}

/// Position in the standard enumeration of `{0,1}*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LexIndex(pub u64);

impl LexIndex {
    /// Index of `0^n`, the first string of length `n`.
    pub fn first_of_length(n: usize) -> Self {
        LexIndex((1u64 << n) - 1)
    }
}

pub fn index_to_string(i: LexIndex) -> BitString {
    let shifted = i.0 + 1;
    let len = 63 - shifted.leading_zeros() as usize;
    BitString::from_value(shifted - (1u64 << len), len)
}

/// Panics on strings longer than 62 bits, whose index does not fit a `u64`.
pub fn string_to_index(x: &BitString) -> LexIndex {
    assert!(x.len() < 63, "string too long to index: {} bits", x.len());
    LexIndex((1u64 << x.len()) - 1 + x.value())
}

/// Number of strings of length at most `n`: `2^(n+1) - 1`.
pub fn count_up_to(n: usize) -> u64 {
    (1u64 << (n + 1)) - 1
}

pub fn strings_of_length(n: usize) -> impl Iterator<Item = BitString> {
    (0..1u64 << n).map(move |v| BitString::from_value(v, n))
}

pub fn strings_up_to(n: usize) -> impl Iterator<Item = BitString> {
    (0..=n).flat_map(strings_of_length)
}

type MembershipFn = Arc<dyn Fn(&BitString) -> bool + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Empty,
    Full,
    Tally,
    EvenLength,
    Set(Arc<BTreeSet<BitString>>),
    DisjointUnion(Arc<LanguageOracle>),
    Func(MembershipFn),
}

/// A decidable language over `{0,1}*`, consultable up to an optional
/// declared length bound.
#[derive(Clone)]
pub struct LanguageOracle {
    name: String,
    bound: Option<usize>,
    repr: Repr,
    generated_counts: Option<Vec<u64>>,
}

impl fmt::Debug for LanguageOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LanguageOracle").field("name", &self.name).field("bound", &self.bound).finish_non_exhaustive()
    }
}

impl LanguageOracle {
    fn new(name: impl Into<String>, bound: Option<usize>, repr: Repr) -> Self {
        Self { name: name.into(), bound, repr, generated_counts: None }
    }

    pub fn empty() -> Self {
        Self::new("empty", None, Repr::Empty)
    }

    pub fn full() -> Self {
        Self::new("full", None, Repr::Full)
    }

    /// `{0^n : n >= 0}`
    pub fn tally() -> Self {
        Self::new("tally", None, Repr::Tally)
    }

    /// Strings of even length.
    pub fn even_length() -> Self {
        Self::new("even-length", None, Repr::EvenLength)
    }

    /// A finite language. Its declared bound defaults to its longest member.
    pub fn from_set(name: impl Into<String>, members: BTreeSet<BitString>) -> Self {
        Self::new(name, None, Repr::Set(Arc::new(members)))
    }

    pub fn from_fn(name: impl Into<String>, membership: impl Fn(&BitString) -> bool + Send + Sync + 'static) -> Self {
        Self::new(name, None, Repr::Func(Arc::new(membership)))
    }

    pub fn with_bound(mut self, bound: usize) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn declared_bound(&self) -> Option<usize> {
        self.bound
    }

    /// Per-length member counts recorded by a pseudo-random generator.
    pub fn generated_counts(&self) -> Option<&[u64]> {
        self.generated_counts.as_deref()
    }

    /// Finite member set, when the oracle is backed by one.
    pub fn members(&self) -> Option<&BTreeSet<BitString>> {
        match &self.repr {
            Repr::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn check_length(&self, length: usize) -> Result<(), SeqError> {
        match self.bound {
            Some(bound) if length > bound => {
                Err(SeqError::BeyondDeclaredBound { oracle: self.name.clone(), bound, length })
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, x: &BitString) -> Result<bool, SeqError> {
        self.check_length(x.len())?;
        Ok(match &self.repr {
            Repr::Empty => false,
            Repr::Full => true,
            Repr::Tally => x.bits().iter().all(|&b| !b),
            Repr::EvenLength => x.len().is_multiple_of(2),
            Repr::Set(s) => s.contains(x),
            Repr::DisjointUnion(inner) => match x.first() {
                None => false,
                Some(false) => !inner.contains(&x.tail())?,
                Some(true) => inner.contains(&x.tail())?,
            },
            Repr::Func(f) => f(x),
        })
    }

    /// Pseudo-random language with exactly `counts[n]` members of length `n`,
    /// each length sampled uniformly without replacement.
    pub fn random_with_counts(seed: u64, counts: &[u64]) -> Result<Self, SeqError> {
        let mut members = BTreeSet::new();
        for (n, &count) in counts.iter().enumerate() {
            if n > 62 || count > 1u64 << n {
                return Err(SeqError::Unsatisfiable(format!("{count} members requested at length {n}")));
            }
            let mut rng = rng::rng(rng::derive(seed, &[0xC0_u64, n as u64]));
            let picks = index::sample(&mut rng, 1usize << n, count as usize);
            members.extend(picks.into_iter().map(|v| BitString::from_value(v as u64, n)));
        }
        let max_len = counts.len().saturating_sub(1);
        let mut oracle = Self::from_set(format!("random-counts[{seed}]"), members).with_bound(max_len);
        oracle.generated_counts = Some(counts.to_vec());
        Ok(oracle)
    }

    /// Each string of length at most `max_len` is a member independently
    /// with probability `density`.
    pub fn bernoulli(seed: u64, density: f64, max_len: usize) -> Self {
        let mut members = BTreeSet::new();
        let mut counts = vec![0u64; max_len + 1];
        let mut rng = rng::rng(rng::derive(seed, &[0xBE]));
        for x in strings_up_to(max_len) {
            if rng.gen_bool(density.clamp(0.0, 1.0)) {
                counts[x.len()] += 1;
                members.insert(x);
            }
        }
        let mut oracle = Self::from_set(format!("bernoulli[{seed}]"), members).with_bound(max_len);
        oracle.generated_counts = Some(counts);
        oracle
    }

    /// A language whose cumulative census satisfies `bound` at exactly the
    /// lengths in `good` (among `0..=max_len`) and violates it elsewhere.
    pub fn with_good_lengths(
        seed: u64,
        max_len: usize,
        bound: &DensityBound,
        good: &BTreeSet<usize>,
    ) -> Result<Self, SeqError> {
        if max_len > 62 {
            return Err(SeqError::ResourceCap { requested: max_len, cap: 62 });
        }
        let mut counts = Vec::with_capacity(max_len + 1);
        let mut cumulative = 0u64;
        for n in 0..=max_len {
            let limit = bound.max_cumulative(n);
            let fresh = 1u64 << n;
            let target = if good.contains(&n) {
                if cumulative > limit {
                    return Err(SeqError::Unsatisfiable(format!(
                        "length {n} must be good but {cumulative} members precede it (limit {limit})"
                    )));
                }
                limit.min(cumulative + fresh)
            } else {
                let want = limit.saturating_add(1).max(cumulative);
                if want - cumulative > fresh {
                    return Err(SeqError::Unsatisfiable(format!(
                        "length {n} must be bad but needs {} > {fresh} new members",
                        want - cumulative
                    )));
                }
                want
            };
            counts.push(target - cumulative);
            cumulative = target;
        }
        let mut oracle = Self::random_with_counts(seed, &counts)?;
        oracle.name = format!("good-lengths[{seed}]");
        Ok(oracle)
    }
}

/// `{0x | x ∉ S} ∪ {1x | x ∈ S}`. λ is not a member.
pub fn disjoint_union_oracle(s: &LanguageOracle) -> LanguageOracle {
    LanguageOracle::new(format!("dual({})", s.name), s.bound.map(|b| b + 1), Repr::DisjointUnion(Arc::new(s.clone())))
}

/// The first `len` bits of the characteristic sequence of `lang`.
pub fn characteristic_prefix(lang: &LanguageOracle, len: u64) -> Result<Vec<bool>, SeqError> {
    (0..len).map(|i| lang.contains(&index_to_string(LexIndex(i)))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub length: usize,
    /// `|L_{=n}|`
    pub count: u64,
    /// `|L_{<=n}|`
    pub cumulative: u64,
}

pub fn density_census(lang: &LanguageOracle, n: usize) -> Result<Vec<DensityRecord>, SeqError> {
    density_census_with_cap(lang, n, DEFAULT_LENGTH_CAP)
}

pub fn density_census_with_cap(lang: &LanguageOracle, n: usize, cap: usize) -> Result<Vec<DensityRecord>, SeqError> {
    if n > cap {
        return Err(SeqError::ResourceCap { requested: n, cap });
    }
    lang.check_length(n)?;
    let mut records = Vec::with_capacity(n + 1);
    let mut cumulative = 0;
    for length in 0..=n {
        let mut count = 0;
        for x in strings_of_length(length) {
            count += lang.contains(&x)? as u64;
        }
        cumulative += count;
        records.push(DensityRecord { length, count, cumulative });
    }
    Ok(records)
}

/// Polynomial with natural coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<u64>);

impl Poly {
    pub fn identity() -> Self {
        Poly(vec![0, 1])
    }

    pub fn constant(c: u64) -> Self {
        Poly(vec![c])
    }

    /// `n + c`
    pub fn shift(c: u64) -> Self {
        Poly(vec![c, 1])
    }

    pub fn eval(&self, n: usize) -> u64 {
        self.0.iter().rev().fold(0u64, |acc, &c| acc.saturating_mul(n as u64).saturating_add(c))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &c)| c != 0)
            .map(|(d, &c)| match (d, c) {
                (0, c) => c.to_string(),
                (1, 1) => "n".to_string(),
                (1, c) => format!("{c}n"),
                (d, 1) => format!("n^{d}"),
                (d, c) => format!("{c}n^{d}"),
            })
            .collect();
        if terms.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&terms.join("+"))
        }
    }
}

/// The finite-length density inequality checked by [`check_density_bound`].
#[derive(Debug, Clone, PartialEq)]
pub enum DensityBound {
    /// `|L_{<=n}| <= p(n)`
    Poly(Poly),
    /// `|L_{<=p(n)}| <= 2^(n^eps)`
    Subexp { epsilon: BigRational, query_len: Poly },
}

impl DensityBound {
    pub fn subexp(epsilon: BigRational) -> Self {
        DensityBound::Subexp { epsilon, query_len: Poly::identity() }
    }

    pub fn parse_subexp(epsilon: &str) -> Result<Self, SeqError> {
        Ok(Self::subexp(parse_ratio(epsilon)?))
    }

    /// The census length whose cumulative count is compared at length `n`.
    pub fn census_length(&self, n: usize) -> usize {
        match self {
            DensityBound::Poly(_) => n,
            DensityBound::Subexp { query_len, .. } => query_len.eval(n) as usize,
        }
    }

    pub fn admits(&self, n: usize, cumulative: u64) -> bool {
        match self {
            DensityBound::Poly(p) => cumulative <= p.eval(n),
            DensityBound::Subexp { epsilon, .. } => within_subexp(cumulative, n, to_f64(epsilon)),
        }
    }

    /// Largest cumulative count admitted at length `n`.
    pub fn max_cumulative(&self, n: usize) -> u64 {
        match self {
            DensityBound::Poly(p) => p.eval(n),
            DensityBound::Subexp { epsilon, .. } => {
                let exponent = (n as f64).powf(to_f64(epsilon));
                if exponent >= 63.0 {
                    return u64::MAX;
                }
                let mut c = exponent.exp2().floor() as u64;
                while c > 0 && !self.admits(n, c) {
                    c -= 1;
                }
                while self.admits(n, c + 1) {
                    c += 1;
                }
                c
            }
        }
    }
}

/// `count <= 2^(n^eps)`, compared in log space with a 1e-12 guard.
pub fn within_subexp(count: u64, n: usize, epsilon: f64) -> bool {
    count <= 1 || (count as f64).log2() <= (n as f64).powf(epsilon) + 1e-12
}

/// Lengths `n` (with census data available at the compared length) where
/// the bound holds.
pub fn check_density_bound(records: &[DensityRecord], bound: &DensityBound) -> BTreeSet<usize> {
    records
        .iter()
        .map(|r| r.length)
        .filter(|&n| {
            let m = bound.census_length(n);
            records.get(m).is_some_and(|r| bound.admits(n, r.cumulative))
        })
        .collect()
}

/// Serializable description of an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleSpec {
    Empty,
    Full,
    Tally,
    EvenLength,
    Explicit {
        strings: Vec<String>,
    },
    Bernoulli {
        seed: u64,
        /// Membership probability as `"p/q"`.
        density: String,
        max_len: usize,
    },
    Counts {
        seed: u64,
        counts: Vec<u64>,
    },
    /// Subexponential density bound `2^(n^eps)` met exactly at the listed lengths.
    GoodLengths {
        seed: u64,
        max_len: usize,
        epsilon: String,
        good: Vec<usize>,
    },
}

impl OracleSpec {
    pub fn build(&self) -> Result<LanguageOracle, SeqError> {
        Ok(match self {
            OracleSpec::Empty => LanguageOracle::empty(),
            OracleSpec::Full => LanguageOracle::full(),
            OracleSpec::Tally => LanguageOracle::tally(),
            OracleSpec::EvenLength => LanguageOracle::even_length(),
            OracleSpec::Explicit { strings } => {
                let members = strings.iter().map(|s| s.parse()).collect::<Result<BTreeSet<BitString>, _>>()?;
                LanguageOracle::from_set("explicit", members)
            }
            OracleSpec::Bernoulli { seed, density, max_len } => {
                let p = to_f64(&parse_ratio(density)?);
                LanguageOracle::bernoulli(*seed, p, *max_len)
            }
            OracleSpec::Counts { seed, counts } => LanguageOracle::random_with_counts(*seed, counts)?,
            OracleSpec::GoodLengths { seed, max_len, epsilon, good } => {
                let bound = DensityBound::parse_subexp(epsilon)?;
                LanguageOracle::with_good_lengths(*seed, *max_len, &bound, &good.iter().copied().collect())?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;
    use rand::Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    /// Independent enumeration: generate strings length by length by
    /// appending bits to the previous level.
    fn brute_enumeration(count: usize) -> Vec<BitString> {
        let mut out = vec![BitString::empty()];
        let mut level = vec![BitString::empty()];
        while out.len() < count {
            let next: Vec<BitString> = level.iter().flat_map(|x| [x.append(false), x.append(true)]).collect();
            out.extend(next.iter().cloned());
            level = next;
        }
        out.truncate(count);
        out
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(index_to_string(LexIndex(0)), BitString::empty());
        assert_eq!(index_to_string(LexIndex(1)), bs("0"));
        assert_eq!(index_to_string(LexIndex(2)), bs("1"));
        for n in 1..=3 {
            assert_eq!(index_to_string(LexIndex::first_of_length(n)), BitString::zeros(n));
        }
        assert_eq!(string_to_index(&BitString::empty()), LexIndex(0));
        assert_eq!(string_to_index(&bs("00")), LexIndex(3));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (i, x) in brute_enumeration(2047).into_iter().enumerate() {
            assert_eq!(index_to_string(LexIndex(i as u64)), x);
        }
    }

    #[test]
    fn enumeration_bijection_first_million() {
        for i in 0..1_000_000u64 {
            assert_eq!(string_to_index(&index_to_string(LexIndex(i))), LexIndex(i));
        }
    }

    #[test]
    fn ordering_is_length_major() {
        let mut v = vec![bs("1"), bs("00"), BitString::empty(), bs("0"), bs("11"), bs("01")];
        v.sort();
        assert_eq!(v, vec![BitString::empty(), bs("0"), bs("1"), bs("00"), bs("01"), bs("11")]);
    }

    proptest! {
        #[test]
        fn string_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..40)) {
            let x = BitString::from_bits(bits);
            prop_assert_eq!(index_to_string(string_to_index(&x)), x.clone());
            prop_assert_eq!(x.to_string().parse::<BitString>().unwrap(), x);
        }
    }

    #[test]
    fn characteristic_prefix_examples() {
        let f = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        assert_eq!(f(&characteristic_prefix(&LanguageOracle::empty(), 7).unwrap()), "0000000");
        assert_eq!(f(&characteristic_prefix(&LanguageOracle::full(), 3).unwrap()), "111");
        // λ, 0, 1, 00, 01, 10, 11
        assert_eq!(f(&characteristic_prefix(&LanguageOracle::even_length(), 7).unwrap()), "1001111");
    }

    #[test]
    fn characteristic_prefix_respects_bound() {
        let lang = LanguageOracle::full().with_bound(1);
        assert!(characteristic_prefix(&lang, 3).is_ok());
        assert!(matches!(characteristic_prefix(&lang, 4), Err(SeqError::BeyondDeclaredBound { length: 2, .. })));
    }

    #[test]
    fn census_examples() {
        let tally = density_census(&LanguageOracle::tally(), 5).unwrap();
        assert_eq!(tally.last().unwrap().cumulative, 6);
        let full = density_census(&LanguageOracle::full(), 3).unwrap();
        assert_eq!(full.last().unwrap().cumulative, 15);
        assert!(matches!(
            density_census(&LanguageOracle::full(), 15),
            Err(SeqError::ResourceCap { requested: 15, cap: 14 })
        ));
    }

    #[test]
    fn census_matches_generator_bookkeeping() {
        let counts = [1, 0, 2, 3, 1, 7, 0, 12, 40];
        let lang = LanguageOracle::random_with_counts(11, &counts).unwrap();
        let records = density_census(&lang, 8).unwrap();
        let recorded = lang.generated_counts().unwrap();
        for r in &records {
            assert_eq!(r.count, recorded[r.length]);
        }
        assert_eq!(records[8].cumulative, counts.iter().sum::<u64>());

        let bern = LanguageOracle::bernoulli(5, 0.3, 8);
        let records = density_census(&bern, 8).unwrap();
        for r in &records {
            assert_eq!(r.count, bern.generated_counts().unwrap()[r.length]);
        }
    }

    #[test]
    fn prefix_popcount_matches_census() {
        let langs = [
            LanguageOracle::tally(),
            LanguageOracle::even_length(),
            LanguageOracle::bernoulli(3, 0.5, 10),
            LanguageOracle::random_with_counts(9, &[1, 1, 2, 0, 5, 3, 9, 2, 30, 1, 4]).unwrap(),
        ];
        for lang in &langs {
            let records = density_census(lang, 10).unwrap();
            for (n, record) in records.iter().enumerate() {
                let prefix = characteristic_prefix(lang, count_up_to(n)).unwrap();
                let ones = prefix.iter().filter(|&&b| b).count() as u64;
                assert_eq!(ones, record.cumulative, "{} at n={n}", lang.name());
            }
        }
    }

    #[test]
    fn density_bound_examples() {
        let tally = density_census(&LanguageOracle::tally(), 10).unwrap();
        let all: BTreeSet<usize> = (0..=10).collect();
        assert_eq!(check_density_bound(&tally, &DensityBound::Poly(Poly::shift(1))), all);

        // 2^(n+1)-1 <= 2^sqrt(n) only at n = 0.
        let full = density_census(&LanguageOracle::full(), 10).unwrap();
        let good = check_density_bound(&full, &DensityBound::subexp(ratio(1, 2)));
        assert_eq!(good, BTreeSet::from([0]));
        for n in 0..=10usize {
            let lhs = (1u64 << (n + 1)) - 1;
            let rhs = (n as f64).sqrt().exp2();
            assert_eq!(good.contains(&n), lhs as f64 <= rhs);
        }
    }

    #[test]
    fn good_length_generator_hits_even_lengths() {
        let bound = DensityBound::subexp(ratio(1, 1));
        let even: BTreeSet<usize> = (0..=10).filter(|n| n % 2 == 0).collect();
        let lang = LanguageOracle::with_good_lengths(4, 10, &bound, &even).unwrap();
        let records = density_census(&lang, 10).unwrap();
        assert_eq!(check_density_bound(&records, &bound), even);
    }

    #[test]
    fn good_length_generator_reports_unsatisfiable() {
        // With eps = 1/2 the bound grows too slowly to alternate at small n.
        let bound = DensityBound::subexp(ratio(1, 2));
        let even: BTreeSet<usize> = (0..=6).filter(|n| n % 2 == 0).collect();
        assert!(matches!(LanguageOracle::with_good_lengths(4, 6, &bound, &even), Err(SeqError::Unsatisfiable(_))));
    }

    #[test]
    fn disjoint_union_examples() {
        let du_empty = disjoint_union_oracle(&LanguageOracle::empty());
        let du_full = disjoint_union_oracle(&LanguageOracle::full());
        assert!(!du_empty.contains(&BitString::empty()).unwrap());
        for x in strings_up_to(5) {
            assert!(du_empty.contains(&x.prepend(false)).unwrap());
            assert!(!du_empty.contains(&x.prepend(true)).unwrap());
            assert!(du_full.contains(&x.prepend(true)).unwrap());
            assert!(!du_full.contains(&x.prepend(false)).unwrap());
        }
    }

    #[test]
    fn disjoint_union_partition() {
        let s = LanguageOracle::bernoulli(21, 0.5, 12);
        let du = disjoint_union_oracle(&s);
        assert_eq!(du.declared_bound(), Some(13));
        let mut rng = rng::rng(99);
        for _ in 0..200 {
            let len = rng.gen_range(0..=12);
            let x = BitString::from_value(rng.gen_range(0..1u64 << len), len);
            let zero = du.contains(&x.prepend(false)).unwrap();
            let one = du.contains(&x.prepend(true)).unwrap();
            assert!(zero ^ one);
            assert_eq!(one, s.contains(&x).unwrap());
        }
    }

    #[test]
    fn oracle_specs_build() {
        let spec: OracleSpec = serde_json::from_str(r#"{"kind":"explicit","strings":["0","11"]}"#).unwrap();
        let lang = spec.build().unwrap();
        assert!(lang.contains(&bs("11")).unwrap());
        assert!(!lang.contains(&bs("1")).unwrap());
        let spec = OracleSpec::Counts { seed: 3, counts: vec![0, 3] };
        assert!(matches!(spec.build(), Err(SeqError::Unsatisfiable(_))));
    }

    #[test]
    fn poly_display_and_eval() {
        assert_eq!(Poly(vec![1, 0, 2]).to_string(), "2n^2+1");
        assert_eq!(Poly(vec![1, 0, 2]).eval(3), 19);
        assert_eq!(Poly::shift(2).to_string(), "n+2");
    }
}
