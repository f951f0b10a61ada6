//! Compiles a reduction-to-concepts plus an online learner into an s-gale.
//!
//! For a length `n` with `N = 2^(n+1) - 1` and `N0 = ⌊2^(n/2)⌋`, the gale
//! `d_n` bets flat on the first `N0` positions, then on each position
//! `i < N` asks a learner (replayed on positions `N0..i` with the labels
//! read from `w`) to predict the label of `f(s_i)`, placing `1 - ε` of the
//! stake on the predicted bit. Past position `N` it bets flat again.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::gale::{Bet, CapitalTrace, CombinedGale, GaleError, GaleExponent, SGale, TraceEntry};
use crate::learn::{teach_labelled, Concept, Example, LearnError, MistakeLog, OnlineLearner};
use crate::rational::{self, pow};
use crate::seqcore::{
    characteristic_prefix, count_up_to, index_to_string, strings_of_length, BitString, LanguageOracle, LexIndex,
    SeqError, DEFAULT_LENGTH_CAP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("invalid compiler parameter: {0}")]
    Parameter(String),
    #[error("length {requested} exceeds the desk-scale cap {cap}")]
    Cap { requested: usize, cap: usize },
    #[error("the reduction has no instance prepared for length {0}")]
    NotPrepared(usize),
    #[error("reduction contract violated: {0}")]
    Contract(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Gale(#[from] GaleError),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

impl From<CompileError> for GaleError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::Gale(g) => g,
            other => GaleError::Evaluation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionMode {
    /// Agreement on all of `{0,1}^{<=n}` at infinitely many (good) lengths.
    Weak,
    /// Agreement on `{0,1}^n` at almost every length.
    Strong,
}

/// A language reduced to a concept class family: per length `n`, an
/// example map `x ↦ f(n, x)` and an optional target concept `c_n`.
pub trait ConceptReduction: Send + Sync {
    type Example: Example + Clone + Send + Sync;
    type Target: Concept<Self::Example>;

    fn mode(&self) -> ReductionMode;

    /// `f(0^n, x)` in weak mode, `f(x)` with `|x| = n` in strong mode.
    fn example(&self, n: usize, x: &BitString) -> Result<Self::Example, CompileError>;

    fn target(&self, n: usize) -> Option<&Self::Target>;

    /// Lengths where the target concept exists within its class.
    fn good_lengths(&self) -> BTreeSet<usize>;

    fn is_good_length(&self, n: usize) -> bool {
        self.good_lengths().contains(&n)
    }
}

/// `⌊2^(n/2)⌋`
pub fn flat_prefix_len(n: usize) -> u64 {
    (1u64 << n).sqrt()
}

/// Parameters for one compiled length.
#[derive(Debug, Clone, PartialEq)]
pub struct CompilerParams {
    pub exponent: GaleExponent,
    pub epsilon: BigRational,
    /// Time-exponent bookkeeping; reported, never used.
    pub c: u32,
    pub n: usize,
    /// `2^(n+1) - 1`
    pub big_n: u64,
    /// `⌊2^(n/2)⌋`
    pub n0: u64,
}

impl CompilerParams {
    pub fn new(exponent: GaleExponent, epsilon: BigRational, n: usize) -> Result<Self, CompileError> {
        if n > DEFAULT_LENGTH_CAP {
            return Err(CompileError::Cap { requested: n, cap: DEFAULT_LENGTH_CAP });
        }
        validate_epsilon(&exponent, &epsilon)?;
        let params = Self { exponent, epsilon, c: 2, n, big_n: count_up_to(n), n0: flat_prefix_len(n) };
        if params.n0 >= params.big_n {
            return Err(CompileError::Parameter(format!(
                "N0 = {} must be below N = {} (n = {n})",
                params.n0, params.big_n
            )));
        }
        Ok(params)
    }

    pub fn with_c(mut self, c: u32) -> Self {
        self.c = c;
        self
    }

    /// `s - log2(1/(1-ε))`, the asymptotic growth rate per position.
    pub fn margin(&self) -> f64 {
        self.exponent.s() - loss_rate(&self.epsilon)
    }

    /// A growth-rate certificate: half the margin.
    pub fn delta(&self) -> f64 {
        self.margin() / 2.0
    }
}

/// `log2(1/(1-ε))`
fn loss_rate(epsilon: &BigRational) -> f64 {
    -rational::log2(&(BigRational::one() - epsilon))
}

pub fn validate_epsilon(exponent: &GaleExponent, epsilon: &BigRational) -> Result<(), CompileError> {
    if !(epsilon > &BigRational::zero() && epsilon <= &rational::ratio(1, 2)) {
        return Err(CompileError::Parameter(format!("ε = {epsilon} must lie in (0, 1/2]")));
    }
    if loss_rate(epsilon) >= exponent.s() {
        return Err(CompileError::Parameter(format!(
            "log2(1/(1-ε)) = {:.6} must be below s = {:.6}",
            loss_rate(epsilon),
            exponent.s()
        )));
    }
    Ok(())
}

/// Required gap between `s` and `log2(1/(1-ε))` for the default choice.
pub const EPSILON_MARGIN: f64 = 0.01;

/// Largest `ε ∈ {1/2, 1/4, …, 1/2^20}` with `s - log2(1/(1-ε)) >= 0.01`.
pub fn choose_epsilon(exponent: &GaleExponent) -> Result<BigRational, CompileError> {
    let s = exponent.s();
    (1..=20u64)
        .map(rational::two_pow_neg)
        .find(|eps| s - loss_rate(eps) >= EPSILON_MARGIN)
        .ok_or_else(|| CompileError::Parameter(format!("s = {s:.6} is too small for any ε ≥ 2^-20")))
}

/// Multipliers applied to the capital for one position.
#[derive(Debug, Clone)]
struct Factors {
    flat: BigRational,
    right: BigRational,
    wrong: BigRational,
}

impl Factors {
    fn new(exponent: &GaleExponent, epsilon: &BigRational) -> Self {
        let t = exponent.two_to_s();
        Self { flat: exponent.flat_factor(), right: t * (BigRational::one() - epsilon), wrong: t * epsilon }
    }
}

/// The compiled gale `d_n` for one length.
pub struct CompiledGale<R: ConceptReduction, L, F> {
    reduction: Arc<R>,
    factory: F,
    params: CompilerParams,
    factors: Factors,
    /// `f(s_i)` for `N0 <= i < N`.
    examples: Vec<R::Example>,
    _learner: std::marker::PhantomData<fn() -> L>,
}

pub fn compile_gale<R, L, F>(
    reduction: Arc<R>,
    factory: F,
    params: CompilerParams,
) -> Result<CompiledGale<R, L, F>, CompileError>
where
    R: ConceptReduction,
    L: OnlineLearner<Example = R::Example>,
    F: Fn(usize) -> L + Send + Sync,
{
    if reduction.mode() != ReductionMode::Weak {
        return Err(CompileError::Parameter("compile_gale needs a weak-mode reduction".into()));
    }
    let examples = (params.n0..params.big_n)
        .map(|i| reduction.example(params.n, &index_to_string(LexIndex(i))))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(first) = examples.first() {
        factory(params.n).predict(first)?;
    }
    let factors = Factors::new(&params.exponent, &params.epsilon);
    Ok(CompiledGale { reduction, factory, params, factors, examples, _learner: Default::default() })
}

impl<R, L, F> CompiledGale<R, L, F>
where
    R: ConceptReduction,
    L: OnlineLearner<Example = R::Example>,
    F: Fn(usize) -> L + Send + Sync,
{
    pub fn params(&self) -> &CompilerParams {
        &self.params
    }

    pub fn reduction(&self) -> &Arc<R> {
        &self.reduction
    }

    /// Examples shown to the learner, for positions `N0..N`.
    pub fn learner_examples(&self) -> &[R::Example] {
        &self.examples
    }

    /// Single pass over `w`, optionally recording every prefix.
    fn walk(&self, w: &[bool], mut trace: Option<&mut CapitalTrace>) -> Result<BigRational, CompileError> {
        let n0 = self.params.n0 as usize;
        let big_n = self.params.big_n as usize;
        let mut learner = (self.factory)(self.params.n);
        let mut capital = BigRational::one();
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceEntry {
                prefix_length: 0,
                capital: capital.clone(),
                bet: Bet::Start,
                learner_predicted: None,
                mistake: None,
            });
        }
        for (i, &bit) in w.iter().enumerate() {
            let (bet, predicted, mistake) = if i < n0 || i >= big_n {
                capital *= &self.factors.flat;
                (Bet::Flat, None, None)
            } else {
                let x = &self.examples[i - n0];
                let prediction = learner.predict(x)?;
                capital *= if prediction == bit { &self.factors.right } else { &self.factors.wrong };
                learner.observe(x, bit)?;
                (Bet::Favor(prediction), Some(prediction), Some(prediction != bit))
            };
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceEntry {
                    prefix_length: i + 1,
                    capital: capital.clone(),
                    bet,
                    learner_predicted: predicted,
                    mistake,
                });
            }
        }
        Ok(capital)
    }

    /// Teaches a fresh learner the positions `N0..N` of `prefix` and
    /// returns its log: `m_n` is `log.mistakes()`.
    pub fn mistake_log(&self, prefix: &[bool]) -> Result<MistakeLog, CompileError> {
        let n0 = self.params.n0 as usize;
        let end = (self.params.big_n as usize).min(prefix.len());
        let mut learner = (self.factory)(self.params.n);
        let labels = if end > n0 { &prefix[n0..end] } else { &[][..] };
        Ok(teach_labelled(&mut learner, &self.examples[..labels.len()], labels)?)
    }
}

impl<R, L, F> SGale for CompiledGale<R, L, F>
where
    R: ConceptReduction,
    L: OnlineLearner<Example = R::Example>,
    F: Fn(usize) -> L + Send + Sync,
{
    fn exponent(&self) -> &GaleExponent {
        &self.params.exponent
    }

    fn value(&self, w: &[bool]) -> Result<BigRational, GaleError> {
        Ok(self.walk(w, None)?)
    }

    fn value_bound(&self, len: usize) -> Option<BigRational> {
        (len as u64 <= self.params.n0).then(|| pow(&self.factors.flat, len as u64))
    }

    fn trace(&self, bits: &[bool]) -> Result<CapitalTrace, GaleError> {
        let mut trace = CapitalTrace::default();
        self.walk(bits, Some(&mut trace))?;
        Ok(trace)
    }
}

/// `2^(s(N-N0)) · (1-ε)^(N-N0-m) · ε^m · 2^((s-1)N0)`
pub fn closed_form_capital(params: &CompilerParams, mistakes: u64) -> BigRational {
    block_factor(&params.exponent, &params.epsilon, params.big_n, params.n0, mistakes)
}

/// Capital multiplier over a run of `len` positions whose first `flat`
/// positions are bet flat and the rest by a learner making `mistakes`.
pub fn block_factor(exponent: &GaleExponent, epsilon: &BigRational, len: u64, flat: u64, mistakes: u64) -> BigRational {
    let bets = len - flat;
    assert!(mistakes <= bets, "more mistakes than bets");
    pow(exponent.two_to_s(), bets)
        * pow(&(BigRational::one() - epsilon), bets - mistakes)
        * pow(epsilon, mistakes)
        * pow(&exponent.flat_factor(), flat)
}

/// Exact equality of the trace's final capital with the closed form.
pub fn capital_identity_check(trace: &CapitalTrace, params: &CompilerParams, mistakes: u64) -> bool {
    trace.entries.len() as u64 == params.big_n + 1
        && mistakes <= params.big_n - params.n0
        && trace.final_capital() == Some(&closed_form_capital(params, mistakes))
}

/// `sN - N·log2(1/(1-ε)) - m·log2((1-ε)/ε) - N0`
pub fn growth_exponent(s: f64, epsilon: f64, big_n: u64, n0: u64, mistakes: u64) -> f64 {
    let (big_n, n0, m) = (big_n as f64, n0 as f64, mistakes as f64);
    s * big_n - big_n * (1.0 / (1.0 - epsilon)).log2() - m * ((1.0 - epsilon) / epsilon).log2() - n0
}

/// Tolerance for the floating-point lower bound, in log2 units.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCertificate {
    pub lower_bound: f64,
    pub final_log2: f64,
    pub delta: f64,
    /// `final_log2 >= lower_bound - 1e-6`
    pub meets_lower_bound: bool,
    /// `final_log2 >= delta · N`
    pub exceeds_delta: bool,
}

pub fn growth_certificate(params: &CompilerParams, mistakes: u64, final_capital: &BigRational) -> GrowthCertificate {
    let lower_bound =
        growth_exponent(params.exponent.s(), rational::to_f64(&params.epsilon), params.big_n, params.n0, mistakes);
    let final_log2 = rational::log2(final_capital);
    let delta = params.delta();
    GrowthCertificate {
        lower_bound,
        final_log2,
        delta,
        meets_lower_bound: final_log2 >= lower_bound - CERTIFICATE_TOLERANCE,
        exceeds_delta: final_log2 >= delta * params.big_n as f64,
    }
}

/// Everything measured on one compiled length along the true prefix.
#[derive(Debug, Clone)]
pub struct LengthRun {
    pub params: CompilerParams,
    pub good: bool,
    pub prefix: Vec<bool>,
    pub trace: CapitalTrace,
    pub log: MistakeLog,
    pub labels_consistent: bool,
    pub identity_ok: bool,
    pub certificate: GrowthCertificate,
}

impl LengthRun {
    pub fn mistakes(&self) -> u64 {
        self.log.mistakes() as u64
    }
}

/// Along the true prefix at a good length, the label of position `i` must
/// equal the target's verdict on `f(s_i)`, for every `i < N`.
pub fn labels_consistent<R: ConceptReduction>(reduction: &R, n: usize, prefix: &[bool]) -> Result<bool, CompileError> {
    let Some(target) = reduction.target(n) else {
        return Ok(false);
    };
    for (i, &bit) in prefix.iter().enumerate().take(count_up_to(n) as usize) {
        let x = index_to_string(LexIndex(i as u64));
        if target.contains(&reduction.example(n, &x)?) != bit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compiles `d_n`, evaluates it on the length-`N` prefix of `language`,
/// teaches an independent learner for `m_n`, and checks the identity and
/// the growth certificate.
pub fn run_length<R, L, F>(gale: &CompiledGale<R, L, F>, language: &LanguageOracle) -> Result<LengthRun, CompileError>
where
    R: ConceptReduction,
    L: OnlineLearner<Example = R::Example>,
    F: Fn(usize) -> L + Send + Sync,
{
    let params = gale.params.clone();
    let prefix = characteristic_prefix(language, params.big_n)?;
    let trace = gale.trace(&prefix)?;
    let log = gale.mistake_log(&prefix)?;
    let mistakes = log.mistakes() as u64;
    let good = gale.reduction.is_good_length(params.n);
    let labels_consistent = good && labels_consistent(gale.reduction.as_ref(), params.n, &prefix)?;
    let identity_ok = capital_identity_check(&trace, &params, mistakes) && trace.mistakes() as u64 == mistakes;
    let certificate = growth_certificate(&params, mistakes, trace.final_capital().expect("non-empty trace"));
    Ok(LengthRun { params, good, prefix, trace, log, labels_consistent, identity_ok, certificate })
}

/// `d = Σ 2^-n d_n` over `lengths`.
pub fn compile_family<R, L, F>(
    reduction: Arc<R>,
    factory: F,
    exponent: GaleExponent,
    epsilon: BigRational,
    lengths: impl IntoIterator<Item = usize>,
) -> Result<CombinedGale, CompileError>
where
    R: ConceptReduction + 'static,
    L: OnlineLearner<Example = R::Example> + 'static,
    F: Fn(usize) -> L + Send + Sync + Clone + 'static,
{
    let mut combined = CombinedGale::new(exponent.clone());
    for n in lengths {
        if n == 0 {
            return Err(CompileError::Parameter("combination indices start at 1".into()));
        }
        let params = CompilerParams::new(exponent.clone(), epsilon.clone(), n)?;
        let gale = compile_gale(reduction.clone(), factory.clone(), params)?;
        combined.insert(n, Arc::new(gale))?;
    }
    Ok(combined)
}

struct Block<E> {
    n: usize,
    start: u64,
    len: u64,
    n0: u64,
    /// Examples for block offsets `n0..len`.
    examples: Vec<E>,
}

/// Strong-mode gale: a fresh learner per length block `{0,1}^n`, flat bets
/// on each block's first `⌊2^(n/2)⌋` positions and outside the compiled
/// lengths, capital compounding across blocks.
pub struct StrongCompiledGale<R: ConceptReduction, L, F> {
    reduction: Arc<R>,
    factory: F,
    exponent: GaleExponent,
    factors: Factors,
    blocks: BTreeMap<u64, Block<R::Example>>,
    _learner: std::marker::PhantomData<fn() -> L>,
}

pub fn compile_strong<R, L, F>(
    reduction: Arc<R>,
    factory: F,
    exponent: GaleExponent,
    epsilon: BigRational,
    lengths: impl IntoIterator<Item = usize>,
) -> Result<StrongCompiledGale<R, L, F>, CompileError>
where
    R: ConceptReduction,
    L: OnlineLearner<Example = R::Example>,
    F: Fn(usize) -> L + Send + Sync,
{
    if reduction.mode() != ReductionMode::Strong {
        return Err(CompileError::Parameter("compile_strong needs a strong-mode reduction".into()));
    }
    validate_epsilon(&exponent, &epsilon)?;
    let mut blocks = BTreeMap::new();
    for n in lengths {
        if n > DEFAULT_LENGTH_CAP {
            return Err(CompileError::Cap { requested: n, cap: DEFAULT_LENGTH_CAP });
        }
        let len = 1u64 << n;
        let n0 = flat_prefix_len(n).min(len);
        let examples =
            strings_of_length(n).skip(n0 as usize).map(|x| reduction.example(n, &x)).collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = examples.first() {
            factory(n).predict(first)?;
        }
        let start = LexIndex::first_of_length(n).0;
        blocks.insert(start, Block { n, start, len, n0, examples });
    }
    let factors = Factors::new(&exponent, &epsilon);
    Ok(StrongCompiledGale { reduction, factory, exponent, factors, blocks, _learner: Default::default() })
}

impl<R, L, F> StrongCompiledGale<R, L, F>
where
    R: ConceptReduction,
    L: OnlineLearner<Example = R::Example>,
    F: Fn(usize) -> L + Send + Sync,
{
    pub fn reduction(&self) -> &Arc<R> {
        &self.reduction
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.values().map(|b| b.n)
    }

    /// `(start position, length, flat prefix)` of the block for length `n`.
    pub fn block_span(&self, n: usize) -> Option<(u64, u64, u64)> {
        self.blocks.get(&LexIndex::first_of_length(n).0).map(|b| (b.start, b.len, b.n0))
    }

    /// Teaches a fresh learner the non-flat part of block `n` with labels
    /// from `prefix`.
    pub fn block_mistakes(&self, n: usize, prefix: &[bool]) -> Result<MistakeLog, CompileError> {
        let block = self.blocks.get(&LexIndex::first_of_length(n).0).ok_or(CompileError::NotPrepared(n))?;
        let from = (block.start + block.n0) as usize;
        let to = ((block.start + block.len) as usize).min(prefix.len());
        let labels = if to > from { &prefix[from..to] } else { &[][..] };
        let mut learner = (self.factory)(n);
        Ok(teach_labelled(&mut learner, &block.examples[..labels.len()], labels)?)
    }

    fn walk(&self, w: &[bool], mut trace: Option<&mut CapitalTrace>) -> Result<BigRational, CompileError> {
        let mut capital = BigRational::one();
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceEntry {
                prefix_length: 0,
                capital: capital.clone(),
                bet: Bet::Start,
                learner_predicted: None,
                mistake: None,
            });
        }
        let mut active: Option<(&Block<R::Example>, L)> = None;
        for (i, &bit) in w.iter().enumerate() {
            let pos = i as u64;
            if let Some(block) = self.blocks.get(&pos) {
                active = Some((block, (self.factory)(block.n)));
            }
            if active.as_ref().is_some_and(|(b, _)| pos >= b.start + b.len) {
                active = None;
            }
            let (bet, predicted, mistake) = match active.as_mut() {
                Some((block, learner)) if pos >= block.start + block.n0 => {
                    let x = &block.examples[(pos - block.start - block.n0) as usize];
                    let prediction = learner.predict(x)?;
                    capital *= if prediction == bit { &self.factors.right } else { &self.factors.wrong };
                    learner.observe(x, bit)?;
                    (Bet::Favor(prediction), Some(prediction), Some(prediction != bit))
                }
                _ => {
                    capital *= &self.factors.flat;
                    (Bet::Flat, None, None)
                }
            };
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceEntry {
                    prefix_length: i + 1,
                    capital: capital.clone(),
                    bet,
                    learner_predicted: predicted,
                    mistake,
                });
            }
        }
        Ok(capital)
    }
}

impl<R, L, F> SGale for StrongCompiledGale<R, L, F>
where
    R: ConceptReduction,
    L: OnlineLearner<Example = R::Example>,
    F: Fn(usize) -> L + Send + Sync,
{
    fn exponent(&self) -> &GaleExponent {
        &self.exponent
    }

    fn value(&self, w: &[bool]) -> Result<BigRational, GaleError> {
        Ok(self.walk(w, None)?)
    }

    fn trace(&self, bits: &[bool]) -> Result<CapitalTrace, GaleError> {
        let mut trace = CapitalTrace::default();
        self.walk(bits, Some(&mut trace))?;
        Ok(trace)
    }
}

/// Closed-form capital of a strong gale after `total` positions, given the
/// per-block mistake counts (blocks must lie entirely within `total`).
pub fn strong_closed_form(
    exponent: &GaleExponent,
    epsilon: &BigRational,
    total: u64,
    blocks: &[(u64, u64, u64)],
    mistakes: &[u64],
) -> BigRational {
    let mut capital = BigRational::one();
    let mut covered = 0;
    for (&(_, len, n0), &m) in blocks.iter().zip(mistakes) {
        capital *= block_factor(exponent, epsilon, len, n0, m);
        covered += len;
    }
    capital * pow(&exponent.flat_factor(), total - covered)
}

/// Convenience for tests and harnesses: `2^s` as `p/q`, `ε` as `p/q`.
pub fn params_from_strings(two_to_s: &str, epsilon: &str, n: usize) -> Result<CompilerParams, CompileError> {
    let exponent = GaleExponent::parse(two_to_s)?;
    let epsilon = rational::parse_ratio(epsilon).map_err(GaleError::from)?;
    CompilerParams::new(exponent, epsilon, n)
}

/// `m_n`-free sanity value: the final capital if every bet were right.
pub fn best_case_capital(params: &CompilerParams) -> BigRational {
    closed_form_capital(params, 0)
}
