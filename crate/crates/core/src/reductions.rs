//! Reductions to sparse or nondense sets, turned into concept-class
//! reductions the compiler can consume.
//!
//! Disjunctive reductions become monotone disjunctions over the query
//! universe `Q_n`; conjunctive ones become subset concepts. Bounded-query
//! Turing reductions go through the answer-path expansion: every answer
//! string `z` is replayed, accepting ones form `Z_x`, each query `w_j` is
//! mapped through a disjunctive reduction `g` from `S^c ⊕ S` to a set `U`,
//! and membership becomes `H_x ∩ A_n ≠ ∅`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compile::{CompileError, ConceptReduction, ReductionMode};
use crate::learn::{winnow_bound, LearnError, MonotoneDisjunction, QuerySet, SparseExample, SubsetConcept};
use crate::rational::{parse_ratio, to_f64};
use crate::rng;
use crate::seqcore::{
    disjoint_union_oracle, string_to_index, strings_of_length, strings_up_to, BitString, LanguageOracle, LexIndex,
    OracleSpec, Poly, SeqError, DEFAULT_LENGTH_CAP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("{reduction} maps {input} to {output}, longer than the bound {bound}")]
    LengthBound { reduction: String, input: BitString, output: BitString, bound: u64 },
    #[error("{reduction} maps {input} to {count} strings, more than the bound {bound}")]
    CountBound { reduction: String, input: BitString, count: usize, bound: u64 },
    #[error("{machine} on input {x} with answers {z} asks more than {bound} queries")]
    QueryBound { machine: String, x: BitString, z: BitString, bound: usize },
    #[error("{machine} on input {x} with answers {z} asks {query}, longer than the bound {bound}")]
    QueryLength { machine: String, x: BitString, z: BitString, query: BitString, bound: usize },
    #[error("{what} has {size} elements, above the bound {bound}")]
    SizeBound { what: String, size: u128, bound: u128 },
    #[error("{what} would need {size} elements, above the cap {cap}")]
    Cap { what: String, size: u128, cap: u128 },
    #[error("scenario is inconsistent: {0}")]
    Inconsistent(String),
    #[error("invalid scenario parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

impl From<ReductionError> for CompileError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Seq(s) => CompileError::Seq(s),
            ReductionError::Learn(l) => CompileError::Learn(l),
            other => CompileError::Contract(other.to_string()),
        }
    }
}

/// Largest tuple or universe set the expansion will materialize.
pub const EXPANSION_CAP: u128 = 1 << 22;

/// Longest answer string enumerated by [`answer_paths`].
pub const ANSWER_BITS_CAP: usize = 16;

type SetMap = Arc<dyn Fn(&BitString) -> Result<BTreeSet<BitString>, SeqError> + Send + Sync>;

/// A set-valued map `f : {0,1}* → P({0,1}*)` with a declared bound `p(n)` on
/// the length of outputs for inputs of length at most `n`, and optionally
/// on their number.
#[derive(Clone)]
pub struct SetValuedReduction {
    name: String,
    map: SetMap,
    length_bound: Poly,
    count_bound: Option<Poly>,
}

impl fmt::Debug for SetValuedReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetValuedReduction")
            .field("name", &self.name)
            .field("length_bound", &self.length_bound)
            .field("count_bound", &self.count_bound)
            .finish_non_exhaustive()
    }
}

impl SetValuedReduction {
    pub fn new(
        name: impl Into<String>,
        length_bound: Poly,
        map: impl Fn(&BitString) -> Result<BTreeSet<BitString>, SeqError> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), map: Arc::new(map), length_bound, count_bound: None }
    }

    pub fn with_count_bound(mut self, bound: Poly) -> Self {
        self.count_bound = Some(bound);
        self
    }

    /// `x ↦ {x}`
    pub fn identity() -> Self {
        Self::new("identity", Poly::identity(), |x| Ok(BTreeSet::from([x.clone()]))).with_count_bound(Poly::constant(1))
    }

    /// `x ↦ {0^|x|}`
    pub fn zero_pad() -> Self {
        Self::new("zero-pad", Poly::identity(), |x| Ok(BTreeSet::from([BitString::zeros(x.len())])))
            .with_count_bound(Poly::constant(1))
    }

    pub fn empty() -> Self {
        Self::new("empty", Poly::constant(0), |_| Ok(BTreeSet::new())).with_count_bound(Poly::constant(0))
    }

    /// Up to `max_count` pseudo-random strings of length at most
    /// `|x| + extra_len`, a pure function of `(seed, x)`.
    pub fn random_subsets(seed: u64, max_count: usize, extra_len: usize) -> Self {
        Self::new(format!("random-subsets[{seed}]"), Poly::shift(extra_len as u64), move |x| {
            let mut r = rng::rng(rng::derive_bits(seed, 0x5E75, x.bits()));
            let count = r.gen_range(0..=max_count);
            Ok((0..count)
                .map(|_| {
                    let len = r.gen_range(0..=x.len() + extra_len);
                    BitString::from_value(r.gen_range(0..1u64 << len), len)
                })
                .collect())
        })
        .with_count_bound(Poly::constant(max_count as u64))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn length_bound(&self) -> &Poly {
        &self.length_bound
    }

    pub fn count_bound(&self) -> Option<&Poly> {
        self.count_bound.as_ref()
    }

    /// `f(x)`, checked against the declared bounds.
    pub fn apply(&self, x: &BitString) -> Result<BTreeSet<BitString>, ReductionError> {
        let out = (self.map)(x)?;
        let bound = self.length_bound.eval(x.len());
        if let Some(y) = out.iter().find(|y| y.len() as u64 > bound) {
            return Err(ReductionError::LengthBound {
                reduction: self.name.clone(),
                input: x.clone(),
                output: y.clone(),
                bound,
            });
        }
        if let Some(p) = &self.count_bound {
            let bound = p.eval(x.len());
            if out.len() as u64 > bound {
                return Err(ReductionError::CountBound {
                    reduction: self.name.clone(),
                    input: x.clone(),
                    count: out.len(),
                    bound,
                });
            }
        }
        Ok(out)
    }
}

/// Serializable choice of a built-in set-valued reduction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReductionSpec {
    Identity,
    ZeroPad,
    Empty,
    RandomSubsets { seed: u64, max_count: usize, extra_len: usize },
}

impl ReductionSpec {
    pub fn build(&self) -> SetValuedReduction {
        match *self {
            ReductionSpec::Identity => SetValuedReduction::identity(),
            ReductionSpec::ZeroPad => SetValuedReduction::zero_pad(),
            ReductionSpec::Empty => SetValuedReduction::empty(),
            ReductionSpec::RandomSubsets { seed, max_count, extra_len } => {
                SetValuedReduction::random_subsets(seed, max_count, extra_len)
            }
        }
    }
}

/// A canonically ordered, duplicate-free list of strings with positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryUniverse {
    pub n: usize,
    queries: Vec<BitString>,
    index: HashMap<BitString, u64>,
}

impl QueryUniverse {
    pub fn new(n: usize, members: BTreeSet<BitString>) -> Self {
        let queries: Vec<BitString> = members.into_iter().collect();
        let index = queries.iter().enumerate().map(|(i, q)| (q.clone(), i as u64)).collect();
        Self { n, queries, index }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn queries(&self) -> &[BitString] {
        &self.queries
    }

    pub fn position(&self, q: &BitString) -> Option<u64> {
        self.index.get(q).copied()
    }

    /// `χ_R` over this universe as a sparse example.
    pub fn characteristic<'a>(
        &self,
        members: impl IntoIterator<Item = &'a BitString>,
    ) -> Result<SparseExample, ReductionError> {
        let mut on = Vec::new();
        for q in members {
            let i = self
                .position(q)
                .ok_or_else(|| ReductionError::Inconsistent(format!("{q} is not in the enumerated universe")))?;
            on.push(i);
        }
        on.sort_unstable();
        on.dedup();
        Ok(SparseExample::new(self.len() as u64, on)?)
    }
}

fn checked_pow(base: u128, exp: usize) -> u128 {
    base.checked_pow(exp as u32).unwrap_or(u128::MAX)
}

/// `Q_n = ⋃_{|x|<=n} f(x)`, checking `|Q_n| <= 2^(n+1) p(n)`.
pub fn enumerate_queries(f: &SetValuedReduction, n: usize) -> Result<QueryUniverse, ReductionError> {
    if n > DEFAULT_LENGTH_CAP {
        return Err(SeqError::ResourceCap { requested: n, cap: DEFAULT_LENGTH_CAP }.into());
    }
    let mut all = BTreeSet::new();
    for x in strings_up_to(n) {
        all.extend(f.apply(&x)?);
    }
    let p = f.length_bound.eval(n).max(f.count_bound.as_ref().map_or(0, |c| c.eval(n)));
    let bound = (1u128 << (n + 1)).saturating_mul(p as u128);
    if all.len() as u128 > bound {
        return Err(ReductionError::SizeBound { what: format!("Q_{n}"), size: all.len() as u128, bound });
    }
    Ok(QueryUniverse::new(n, all))
}

/// `2^(n^eps)`, the literal budget at length `n`.
pub fn literal_budget(n: usize, epsilon: f64) -> f64 {
    (n as f64).powf(epsilon).exp2()
}

/// One length of a disjunctive or conjunctive reduction.
#[derive(Debug, Clone)]
pub struct SetInstance {
    pub n: usize,
    pub universe: QueryUniverse,
    /// `S ∩ Q_n`
    pub hits: BTreeSet<BitString>,
    pub literal_budget: f64,
    pub good: bool,
}

impl SetInstance {
    fn build(f: &SetValuedReduction, s: &LanguageOracle, n: usize, epsilon: f64) -> Result<Self, ReductionError> {
        let universe = enumerate_queries(f, n)?;
        let mut hits = BTreeSet::new();
        for q in universe.queries() {
            if s.contains(q)? {
                hits.insert(q.clone());
            }
        }
        let literal_budget = literal_budget(n, epsilon);
        let good = hits.len() as f64 <= literal_budget;
        Ok(Self { n, universe, hits, literal_budget, good })
    }

    pub fn k(&self) -> u64 {
        self.hits.len() as u64
    }
}

/// Members of `{0,1}^{<=max_len}` satisfying `pred`, as a bounded oracle.
fn tabulate(
    name: String,
    max_len: usize,
    mut pred: impl FnMut(&BitString) -> Result<bool, ReductionError>,
) -> Result<LanguageOracle, ReductionError> {
    let mut members = BTreeSet::new();
    for x in strings_up_to(max_len) {
        if pred(&x)? {
            members.insert(x);
        }
    }
    Ok(LanguageOracle::from_set(name, members).with_bound(max_len))
}

/// `A ≤_d S` via `f` turned into monotone disjunctions over `Q_n`.
pub struct DisjunctiveReduction {
    f: SetValuedReduction,
    s: LanguageOracle,
    epsilon: f64,
    instances: BTreeMap<usize, (SetInstance, MonotoneDisjunction)>,
}

pub fn disjunctive_to_concept(
    f: SetValuedReduction,
    s: LanguageOracle,
    lengths: impl IntoIterator<Item = usize>,
    epsilon: f64,
) -> Result<DisjunctiveReduction, ReductionError> {
    let mut instances = BTreeMap::new();
    for n in lengths {
        let inst = SetInstance::build(&f, &s, n, epsilon)?;
        let vars = inst.hits.iter().map(|q| inst.universe.position(q).unwrap()).collect();
        let target = MonotoneDisjunction::new(inst.universe.len() as u64, vars)?;
        instances.insert(n, (inst, target));
    }
    Ok(DisjunctiveReduction { f, s, epsilon, instances })
}

impl DisjunctiveReduction {
    pub fn instance(&self, n: usize) -> Option<&SetInstance> {
        self.instances.get(&n).map(|(i, _)| i)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `f(x) ∩ S ≠ ∅`
    pub fn direct_membership(&self, x: &BitString) -> Result<bool, ReductionError> {
        for q in self.f.apply(x)? {
            if self.s.contains(&q)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// The reduced language `A`, tabulated up to `max_len`.
    pub fn language(&self, max_len: usize) -> Result<LanguageOracle, ReductionError> {
        tabulate(format!("disjunctive({})", self.f.name), max_len, |x| self.direct_membership(x))
    }

    /// `⌈2k log2 |Q_n|⌉ + 2`
    pub fn mistake_bound(&self, n: usize) -> Option<u64> {
        self.instance(n).map(|i| winnow_bound(i.k(), i.universe.len() as u64))
    }
}

impl ConceptReduction for DisjunctiveReduction {
    type Example = SparseExample;
    type Target = MonotoneDisjunction;

    fn mode(&self) -> ReductionMode {
        ReductionMode::Weak
    }

    fn example(&self, n: usize, x: &BitString) -> Result<SparseExample, CompileError> {
        let (inst, _) = self.instances.get(&n).ok_or(CompileError::NotPrepared(n))?;
        Ok(inst.universe.characteristic(&self.f.apply(x)?)?)
    }

    fn target(&self, n: usize) -> Option<&MonotoneDisjunction> {
        self.instances.get(&n).map(|(_, t)| t)
    }

    fn good_lengths(&self) -> BTreeSet<usize> {
        self.instances.iter().filter(|(_, (i, _))| i.good).map(|(&n, _)| n).collect()
    }
}

/// `A ≤_c S` via `f` turned into subset concepts `P(S ∩ Q_n)`.
pub struct ConjunctiveReduction {
    f: SetValuedReduction,
    s: LanguageOracle,
    epsilon: f64,
    instances: BTreeMap<usize, (SetInstance, SubsetConcept)>,
}

pub fn conjunctive_to_concept(
    f: SetValuedReduction,
    s: LanguageOracle,
    lengths: impl IntoIterator<Item = usize>,
    epsilon: f64,
) -> Result<ConjunctiveReduction, ReductionError> {
    let mut instances = BTreeMap::new();
    for n in lengths {
        let inst = SetInstance::build(&f, &s, n, epsilon)?;
        let target = SubsetConcept::new(inst.hits.clone());
        instances.insert(n, (inst, target));
    }
    Ok(ConjunctiveReduction { f, s, epsilon, instances })
}

impl ConjunctiveReduction {
    pub fn instance(&self, n: usize) -> Option<&SetInstance> {
        self.instances.get(&n).map(|(i, _)| i)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `f(x) ⊆ S`
    pub fn direct_membership(&self, x: &BitString) -> Result<bool, ReductionError> {
        for q in self.f.apply(x)? {
            if !self.s.contains(&q)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn language(&self, max_len: usize) -> Result<LanguageOracle, ReductionError> {
        tabulate(format!("conjunctive({})", self.f.name), max_len, |x| self.direct_membership(x))
    }

    /// `|S ∩ Q_n|`
    pub fn mistake_bound(&self, n: usize) -> Option<u64> {
        self.instance(n).map(SetInstance::k)
    }
}

impl ConceptReduction for ConjunctiveReduction {
    type Example = QuerySet;
    type Target = SubsetConcept;

    fn mode(&self) -> ReductionMode {
        ReductionMode::Weak
    }

    fn example(&self, n: usize, x: &BitString) -> Result<QuerySet, CompileError> {
        if !self.instances.contains_key(&n) {
            return Err(CompileError::NotPrepared(n));
        }
        Ok(self.f.apply(x)?)
    }

    fn target(&self, n: usize) -> Option<&SubsetConcept> {
        self.instances.get(&n).map(|(_, t)| t)
    }

    fn good_lengths(&self) -> BTreeSet<usize> {
        self.instances.iter().filter(|(_, (i, _))| i.good).map(|(&n, _)| n).collect()
    }
}

/// One move of an oracle machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Query(BitString),
    Decide(bool),
}

/// A deterministic oracle machine given as a step function over the
/// queries asked so far and the answers received.
pub trait OracleMachine: Send + Sync {
    fn name(&self) -> String;

    /// `q(n)`: most queries on inputs of length `n`.
    fn query_bound(&self, n: usize) -> usize;

    /// Longest query on inputs of length at most `n`.
    fn query_length_bound(&self, n: usize) -> usize;

    fn step(&self, x: &BitString, history: &[(BitString, bool)]) -> Step;
}

/// Ignores the oracle; accepts iff `x` starts with 1.
#[derive(Debug, Clone, Copy)]
pub struct OracleIgnoring {
    pub q: usize,
}

impl OracleMachine for OracleIgnoring {
    fn name(&self) -> String {
        format!("oracle-ignoring(q={})", self.q)
    }
    fn query_bound(&self, _n: usize) -> usize {
        self.q
    }
    fn query_length_bound(&self, _n: usize) -> usize {
        0
    }
    fn step(&self, x: &BitString, _history: &[(BitString, bool)]) -> Step {
        Step::Decide(x.first() == Some(true))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AlwaysReject {
    pub q: usize,
}

impl OracleMachine for AlwaysReject {
    fn name(&self) -> String {
        format!("always-reject(q={})", self.q)
    }
    fn query_bound(&self, _n: usize) -> usize {
        self.q
    }
    fn query_length_bound(&self, _n: usize) -> usize {
        0
    }
    fn step(&self, _x: &BitString, _history: &[(BitString, bool)]) -> Step {
        Step::Decide(false)
    }
}

/// Asks `x` and accepts iff the answer is yes.
#[derive(Debug, Clone, Copy)]
pub struct SelfQuery;

impl OracleMachine for SelfQuery {
    fn name(&self) -> String {
        "self-query".into()
    }
    fn query_bound(&self, _n: usize) -> usize {
        1
    }
    fn query_length_bound(&self, n: usize) -> usize {
        n
    }
    fn step(&self, x: &BitString, history: &[(BitString, bool)]) -> Step {
        match history.first() {
            None => Step::Query(x.clone()),
            Some(&(_, a)) => Step::Decide(a),
        }
    }
}

/// Asks `w_0 = x`, then `w_{j+1} = w_j a_j`. Rejects early after two
/// consecutive no answers; otherwise accepts iff an odd number of answers
/// were yes.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveChain {
    pub q: usize,
}

impl OracleMachine for AdaptiveChain {
    fn name(&self) -> String {
        format!("adaptive-chain(q={})", self.q)
    }
    fn query_bound(&self, _n: usize) -> usize {
        self.q
    }
    fn query_length_bound(&self, n: usize) -> usize {
        n + self.q.saturating_sub(1)
    }
    fn step(&self, x: &BitString, history: &[(BitString, bool)]) -> Step {
        let answers: Vec<bool> = history.iter().map(|&(_, a)| a).collect();
        if answers.ends_with(&[false, false]) {
            return Step::Decide(false);
        }
        match history.last() {
            _ if history.len() == self.q => Step::Decide(answers.iter().filter(|&&a| a).count() % 2 == 1),
            None => Step::Query(x.clone()),
            Some((w, a)) => Step::Query(w.append(*a)),
        }
    }
}

/// Asks `0^j 1 x` for `j < q` and accepts iff a strict majority say yes.
#[derive(Debug, Clone, Copy)]
pub struct Majority {
    pub q: usize,
}

impl OracleMachine for Majority {
    fn name(&self) -> String {
        format!("majority(q={})", self.q)
    }
    fn query_bound(&self, _n: usize) -> usize {
        self.q
    }
    fn query_length_bound(&self, n: usize) -> usize {
        n + self.q
    }
    fn step(&self, x: &BitString, history: &[(BitString, bool)]) -> Step {
        let j = history.len();
        if j == self.q {
            let yes = history.iter().filter(|&&(_, a)| a).count();
            return Step::Decide(2 * yes > self.q);
        }
        Step::Query(BitString::zeros(j).append(true).concat(x))
    }
}

/// A pseudo-random adaptive decision tree: each node's query (of length
/// between `|x|` and `|x| + extra_len`) and its chance to stop early are
/// hashed from `(seed, x, answers so far)`.
#[derive(Debug, Clone, Copy)]
pub struct RandomDecisionTree {
    pub seed: u64,
    pub q: usize,
    pub extra_len: usize,
}

impl OracleMachine for RandomDecisionTree {
    fn name(&self) -> String {
        format!("random-tree[{}](q={},extra={})", self.seed, self.q, self.extra_len)
    }
    fn query_bound(&self, _n: usize) -> usize {
        self.q
    }
    fn query_length_bound(&self, n: usize) -> usize {
        n + self.extra_len
    }
    fn step(&self, x: &BitString, history: &[(BitString, bool)]) -> Step {
        let mut key = x.bits().to_vec();
        key.push(true);
        key.extend(history.iter().map(|&(_, a)| a));
        let mut r = rng::rng(rng::derive_bits(self.seed, 0x7EE, &key));
        let stop = history.len() == self.q || r.gen_ratio(1, 5);
        let verdict = r.gen_bool(0.5);
        if stop {
            return Step::Decide(verdict);
        }
        let len = x.len() + r.gen_range(0..=self.extra_len);
        Step::Query(BitString::from_value(r.gen_range(0..1u64 << len), len))
    }
}

/// Serializable choice of a built-in machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MachineSpec {
    OracleIgnoring { q: usize },
    AlwaysReject { q: usize },
    SelfQuery,
    AdaptiveChain { q: usize },
    Majority { q: usize },
    RandomTree { seed: u64, q: usize, extra_len: usize },
}

impl MachineSpec {
    pub fn build(&self) -> Arc<dyn OracleMachine> {
        match *self {
            MachineSpec::OracleIgnoring { q } => Arc::new(OracleIgnoring { q }),
            MachineSpec::AlwaysReject { q } => Arc::new(AlwaysReject { q }),
            MachineSpec::SelfQuery => Arc::new(SelfQuery),
            MachineSpec::AdaptiveChain { q } => Arc::new(AdaptiveChain { q }),
            MachineSpec::Majority { q } => Arc::new(Majority { q }),
            MachineSpec::RandomTree { seed, q, extra_len } => Arc::new(RandomDecisionTree { seed, q, extra_len }),
        }
    }
}

/// One run of a machine along a fixed answer string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerPath {
    pub z: BitString,
    pub queries: Vec<BitString>,
    pub accept: bool,
}

/// Runs `machine` on `x`, answering query `j` with `answer(j, w_j)`.
fn run_machine(
    machine: &dyn OracleMachine,
    x: &BitString,
    z_label: impl Fn() -> BitString,
    mut answer: impl FnMut(usize, &BitString) -> Result<bool, ReductionError>,
) -> Result<(Vec<(BitString, bool)>, bool), ReductionError> {
    let bound = machine.query_bound(x.len());
    let max_len = machine.query_length_bound(x.len());
    let mut history = Vec::new();
    loop {
        match machine.step(x, &history) {
            Step::Decide(accept) => return Ok((history, accept)),
            Step::Query(w) => {
                if history.len() == bound {
                    return Err(ReductionError::QueryBound {
                        machine: machine.name(),
                        x: x.clone(),
                        z: z_label(),
                        bound,
                    });
                }
                if w.len() > max_len {
                    return Err(ReductionError::QueryLength {
                        machine: machine.name(),
                        x: x.clone(),
                        z: z_label(),
                        query: w,
                        bound: max_len,
                    });
                }
                let a = answer(history.len(), &w)?;
                history.push((w, a));
            }
        }
    }
}

/// Feeds every `z ∈ {0,1}^q(|x|)` as the answer sequence, in lexicographic
/// order of `z`.
pub fn answer_paths(machine: &dyn OracleMachine, x: &BitString) -> Result<Vec<AnswerPath>, ReductionError> {
    let q = machine.query_bound(x.len());
    if q > ANSWER_BITS_CAP {
        return Err(ReductionError::Cap {
            what: "answer strings".into(),
            size: 1 << q.min(127),
            cap: 1 << ANSWER_BITS_CAP,
        });
    }
    strings_of_length(q)
        .map(|z| {
            let (history, accept) = run_machine(machine, x, || z.clone(), |j, _| Ok(z.bits()[j]))?;
            Ok(AnswerPath { queries: history.into_iter().map(|(w, _)| w).collect(), z, accept })
        })
        .collect()
}

/// `Z_x`
pub fn accepting_set(paths: &[AnswerPath]) -> Vec<BitString> {
    paths.iter().filter(|p| p.accept).map(|p| p.z.clone()).collect()
}

/// `M^S(x)` with truthful answers from `S`.
pub fn brute_force_oracle_run(
    machine: &dyn OracleMachine,
    s: &LanguageOracle,
    x: &BitString,
) -> Result<bool, ReductionError> {
    let (_, accept) = run_machine(machine, x, BitString::empty, |_, w| Ok(s.contains(w)?))?;
    Ok(accept)
}

/// `⟨u_0, …, u_k⟩` as `1^|u_0| 0 u_0 … 1^|u_k| 0 u_k`.
pub fn encode_tuple(parts: &[BitString]) -> BitString {
    let mut bits = Vec::with_capacity(parts.iter().map(|u| 2 * u.len() + 1).sum());
    for u in parts {
        bits.extend(std::iter::repeat_n(true, u.len()));
        bits.push(false);
        bits.extend_from_slice(u.bits());
    }
    BitString::from_bits(bits)
}

pub fn decode_tuple(code: &BitString) -> Option<Vec<BitString>> {
    let bits = code.bits();
    let mut parts = Vec::new();
    let mut i = 0;
    while i < bits.len() {
        let len = bits[i..].iter().take_while(|&&b| b).count();
        let start = i + len + 1;
        if start + len > bits.len() {
            return None;
        }
        parts.push(BitString::from_bits(bits[start..start + len].to_vec()));
        i = start + len;
    }
    Some(parts)
}

fn cartesian(sets: &[Vec<BitString>], out: &mut BTreeSet<BitString>) {
    let mut idx = vec![0usize; sets.len()];
    if sets.iter().any(Vec::is_empty) {
        return;
    }
    loop {
        let tuple: Vec<BitString> = idx.iter().zip(sets).map(|(&i, s)| s[i].clone()).collect();
        out.insert(encode_tuple(&tuple));
        let mut j = sets.len();
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < sets[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// `H_x = ⋃_{z ∈ Z_x} H_{x,z}`, where `H_{x,z}` is the product of the sets
/// `g(z[j] w_j)`.
pub fn build_h_x(paths: &[AnswerPath], g: &SetValuedReduction) -> Result<BTreeSet<BitString>, ReductionError> {
    let mut h = BTreeSet::new();
    for path in paths.iter().filter(|p| p.accept) {
        let sets = path
            .queries
            .iter()
            .enumerate()
            .map(|(j, w)| Ok(g.apply(&w.prepend(path.z.bits()[j]))?.into_iter().collect()))
            .collect::<Result<Vec<Vec<BitString>>, ReductionError>>()?;
        let size = sets.iter().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
        if size > EXPANSION_CAP {
            return Err(ReductionError::Cap { what: format!("H_(x,{})", path.z), size, cap: EXPANSION_CAP });
        }
        cartesian(&sets, &mut h);
    }
    Ok(h)
}

/// `|Z_x| · r^q`
pub fn h_x_bound(z_count: usize, q: usize, r: usize) -> u128 {
    (z_count as u128).saturating_mul(checked_pow(r as u128, q))
}

/// `2^(q(1 + log2 r))`
pub fn h_x_log_bound(q: usize, r: usize) -> f64 {
    q as f64 * (1.0 + (r as f64).log2())
}

/// `U_{<=r}` in canonical order.
pub fn census_members(u: &LanguageOracle, r: usize) -> Result<Vec<BitString>, ReductionError> {
    if r > DEFAULT_LENGTH_CAP + 4 {
        return Err(SeqError::ResourceCap { requested: r, cap: DEFAULT_LENGTH_CAP + 4 }.into());
    }
    let mut out = Vec::new();
    for x in strings_up_to(r) {
        if u.contains(&x)? {
            out.push(x);
        }
    }
    Ok(out)
}

/// `A_n`: every tuple of at most `q` components from `U_{<=r}`, including
/// the empty tuple (the image of an accepting path that asks nothing).
pub fn build_a_n(u: &LanguageOracle, q: usize, r: usize) -> Result<BTreeSet<BitString>, ReductionError> {
    let members = census_members(u, r)?;
    let size: u128 = (0..=q).map(|k| checked_pow(members.len() as u128, k)).fold(0u128, u128::saturating_add);
    if size > EXPANSION_CAP {
        return Err(ReductionError::Cap { what: "A_n".into(), size, cap: EXPANSION_CAP });
    }
    let mut a = BTreeSet::new();
    for k in 0..=q {
        cartesian(&vec![members.clone(); k], &mut a);
    }
    let bound = a_n_bound(q, members.len());
    if a.len() as u128 > bound {
        return Err(ReductionError::SizeBound { what: "A_n".into(), size: a.len() as u128, bound });
    }
    Ok(a)
}

/// `1 + q·|U_{<=r}|^q`, counting the empty tuple separately.
pub fn a_n_bound(q: usize, census: usize) -> u128 {
    (q as u128).saturating_mul(checked_pow(census as u128, q)).saturating_add(1)
}

/// Membership in `A_n` decided from the definition, without building it.
pub fn in_a_n(u: &LanguageOracle, q: usize, r: usize, tuple: &BitString) -> Result<bool, ReductionError> {
    let Some(parts) = decode_tuple(tuple) else {
        return Ok(false);
    };
    if parts.len() > q {
        return Ok(false);
    }
    for p in &parts {
        if p.len() > r || !u.contains(p)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `H_x ∩ A_n ≠ ∅`
pub fn membership_via_expansion(h_x: &BTreeSet<BitString>, a_n: &BTreeSet<BitString>) -> bool {
    if h_x.len() <= a_n.len() {
        h_x.iter().any(|h| a_n.contains(h))
    } else {
        a_n.iter().any(|a| h_x.contains(a))
    }
}

/// Designated member of `U` at length `m >= 2`.
pub fn designated_member(seed: u64, m: usize) -> BitString {
    let v = rng::derive(seed, &[0xD5, m as u64]) & ((1u64 << m) - 1);
    BitString::from_value(v, m)
}

/// The `j`-th designated non-member of `U` at length `m >= 2`.
pub fn designated_non_member(seed: u64, m: usize, j: usize) -> BitString {
    let u = designated_member(seed, m).value();
    let span = (1u64 << m) - 1;
    BitString::from_value((u + 1 + (j as u64 % span)) & ((1u64 << m) - 1), m)
}

/// The bounded-query Turing scenario: `L = L(M^S)` and `S^c ⊕ S ≤_d U` via
/// `g`, with `U` sparse.
#[derive(Clone)]
pub struct TuringScenario {
    pub seed: u64,
    pub machine: Arc<dyn OracleMachine>,
    pub s: LanguageOracle,
    pub u: LanguageOracle,
    pub g: SetValuedReduction,
    /// Declared census polynomial: `|U_{<=m}| <= census(m)`.
    pub census: Poly,
    pub fanout: usize,
    pub max_input_len: usize,
}

impl fmt::Debug for TuringScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TuringScenario")
            .field("seed", &self.seed)
            .field("machine", &self.machine.name())
            .field("s", &self.s)
            .field("fanout", &self.fanout)
            .field("max_input_len", &self.max_input_len)
            .finish_non_exhaustive()
    }
}

impl TuringScenario {
    /// `S` is Bernoulli up to the machine's query length. `U` has one
    /// designated member per length `>= 2`; each `g` image holds one string
    /// plus `fanout` extra non-members.
    pub fn new(
        seed: u64,
        machine: Arc<dyn OracleMachine>,
        s_density: f64,
        fanout: usize,
        max_input_len: usize,
    ) -> Result<Self, ReductionError> {
        let max_query = machine.query_length_bound(max_input_len);
        if max_query + 1 > 62 {
            return Err(ReductionError::Parameter(format!("query length {max_query} too long")));
        }
        let s = LanguageOracle::bernoulli(rng::derive(seed, &[0x5]), s_density, max_query);
        let useed = rng::derive(seed, &[0x0]);
        let u = LanguageOracle::from_fn(format!("designated[{useed}]"), move |x| {
            x.len() >= 2 && *x == designated_member(useed, x.len())
        });
        if fanout + 1 >= 4 {
            return Err(ReductionError::Parameter(format!("fanout {fanout} leaves no room at length 2")));
        }
        let dual = disjoint_union_oracle(&s);
        let g = SetValuedReduction::new("designated-singleton", Poly::shift(1), move |y| {
            if y.is_empty() {
                return Ok(BTreeSet::new());
            }
            let m = y.len() + 1;
            let mut out: BTreeSet<BitString> = (0..fanout).map(|j| designated_non_member(useed, m, j + 1)).collect();
            out.insert(if dual.contains(y)? {
                designated_member(useed, m)
            } else {
                designated_non_member(useed, m, 0)
            });
            Ok(out)
        })
        .with_count_bound(Poly::constant(fanout as u64 + 1));
        let scenario = Self { seed, machine, s, u, g, census: Poly::identity(), fanout, max_input_len };
        scenario.check_consistency()?;
        Ok(scenario)
    }

    /// Longest `g`-input: `z[j] w_j` with `|w_j|` at the query length bound.
    pub fn max_g_input(&self) -> usize {
        self.machine.query_length_bound(self.max_input_len) + 1
    }

    /// `q(n)`
    pub fn q(&self, n: usize) -> usize {
        self.machine.query_bound(n)
    }

    /// `r(n)`: bounds both the size and the length of every `g` image on
    /// inputs `z[j] w_j` with `|x| <= n`.
    pub fn r(&self, n: usize) -> usize {
        let input = self.machine.query_length_bound(n) + 1;
        let len = self.g.length_bound().eval(input);
        let count = self.g.count_bound().map_or(0, |c| c.eval(input));
        len.max(count) as usize
    }

    /// Exhaustively checks `g(y) ∩ U ≠ ∅ ⟺ y ∈ S^c ⊕ S` for `|y| <= max_g_input`.
    pub fn check_consistency(&self) -> Result<(), ReductionError> {
        let dual = disjoint_union_oracle(&self.s);
        for y in strings_up_to(self.max_g_input()) {
            let mut hit = false;
            for v in self.g.apply(&y)? {
                hit |= self.u.contains(&v)?;
            }
            if hit != dual.contains(&y)? {
                return Err(ReductionError::Inconsistent(format!("g({y}) meets U is {hit}")));
            }
        }
        Ok(())
    }

    /// `M^S(x)`
    pub fn brute_force(&self, x: &BitString) -> Result<bool, ReductionError> {
        brute_force_oracle_run(self.machine.as_ref(), &self.s, x)
    }

    pub fn language(&self) -> Result<LanguageOracle, ReductionError> {
        tabulate(format!("L({}^S)", self.machine.name()), self.max_input_len, |x| self.brute_force(x))
    }

    /// Expands a single input against `A_{|x|}`, which must be supplied.
    pub fn expand(&self, x: &BitString, a_n: &BTreeSet<BitString>) -> Result<InputExpansion, ReductionError> {
        let paths = answer_paths(self.machine.as_ref(), x)?;
        let z_x = accepting_set(&paths);
        let h_x = build_h_x(&paths, &self.g)?;
        let (q, r) = (self.q(x.len()), self.r(x.len()));
        let bound = h_x_bound(z_x.len(), q, r);
        if h_x.len() as u128 > bound || (h_x.len() as f64).log2() > h_x_log_bound(q, r) + 1e-9 {
            return Err(ReductionError::SizeBound { what: format!("H_{x}"), size: h_x.len() as u128, bound });
        }
        let via_expansion = membership_via_expansion(&h_x, a_n);
        let brute_force = self.brute_force(x)?;
        Ok(InputExpansion { x: x.clone(), z_count: z_x.len(), h_x, h_bound: bound, via_expansion, brute_force })
    }

    /// Expands every `x` with `|x| <= max_len`, each against `A_{|x|}`.
    pub fn expand_all(&self, max_len: usize) -> Result<Vec<InputExpansion>, ReductionError> {
        let mut rows = Vec::new();
        for n in 0..=max_len {
            let a_n = build_a_n(&self.u, self.q(n), self.r(n))?;
            for x in strings_of_length(n) {
                rows.push(self.expand(&x, &a_n)?);
            }
        }
        Ok(rows)
    }
}

/// Per-input expansion record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputExpansion {
    pub x: BitString,
    /// `|Z_x|`
    pub z_count: usize,
    pub h_x: BTreeSet<BitString>,
    /// `|Z_x| · r(n)^q(n)`
    pub h_bound: u128,
    pub via_expansion: bool,
    pub brute_force: bool,
}

impl InputExpansion {
    pub fn agrees(&self) -> bool {
        self.via_expansion == self.brute_force
    }
}

/// One length of a Turing reduction.
#[derive(Debug, Clone)]
pub struct TuringInstance {
    pub n: usize,
    /// `H_n` in canonical order.
    pub universe: QueryUniverse,
    /// `χ_{H_x}` for the inputs of this length range, in canonical order.
    pub examples: Vec<SparseExample>,
    /// Positions `i` with `h_i ∈ A_n`.
    pub literals: BTreeSet<u64>,
    pub literal_budget: f64,
    pub good: bool,
    /// `|H_n| <= 2^(2n)`; asymptotic, reported only.
    pub within_square: bool,
    pub q: usize,
    pub r: usize,
}

impl TuringInstance {
    /// `2 · budget · log2 |H_n| + 2`
    pub fn budget_mistake_bound(&self) -> f64 {
        2.0 * self.literal_budget * (self.universe.len().max(1) as f64).log2() + 2.0
    }

    pub fn mistake_bound(&self) -> u64 {
        winnow_bound(self.literals.len() as u64, self.universe.len() as u64)
    }
}

/// How the literal budget of a Turing instance is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiteralBudget {
    /// `2^(n^delta)`, weak mode.
    Subexp { delta: f64 },
    /// `2^v(n)` with `v(n) = f(n) log2 q(n) + log2 f(n)`, where `f` is the
    /// query bound and `q(n)` the census polynomial at `r(n)`.
    Census,
}

pub struct TuringReduction {
    scenario: Arc<TuringScenario>,
    mode: ReductionMode,
    instances: BTreeMap<usize, (TuringInstance, MonotoneDisjunction)>,
}

pub fn turing_to_concept(
    scenario: Arc<TuringScenario>,
    mode: ReductionMode,
    lengths: impl IntoIterator<Item = usize>,
    budget: LiteralBudget,
) -> Result<TuringReduction, ReductionError> {
    let mut instances = BTreeMap::new();
    for n in lengths {
        if n > scenario.max_input_len {
            return Err(ReductionError::Parameter(format!(
                "length {n} beyond the scenario's {}",
                scenario.max_input_len
            )));
        }
        let inputs: Vec<BitString> = match mode {
            ReductionMode::Weak => strings_up_to(n).collect(),
            ReductionMode::Strong => strings_of_length(n).collect(),
        };
        let mut h_sets = Vec::with_capacity(inputs.len());
        let mut h_n = BTreeSet::new();
        for x in &inputs {
            let paths = answer_paths(scenario.machine.as_ref(), x)?;
            let h_x = build_h_x(&paths, &scenario.g)?;
            h_n.extend(h_x.iter().cloned());
            h_sets.push(h_x);
        }
        if h_n.len() as u128 > EXPANSION_CAP {
            return Err(ReductionError::Cap { what: format!("H_{n}"), size: h_n.len() as u128, cap: EXPANSION_CAP });
        }
        let universe = QueryUniverse::new(n, h_n);
        let examples = h_sets.iter().map(|h| universe.characteristic(h)).collect::<Result<Vec<_>, _>>()?;
        let (q, r) = (scenario.q(n), scenario.r(n));
        let mut literals = BTreeSet::new();
        for (i, h) in universe.queries().iter().enumerate() {
            if in_a_n(&scenario.u, q, r, h)? {
                literals.insert(i as u64);
            }
        }
        let literal_budget = match budget {
            LiteralBudget::Subexp { delta } => literal_budget(n, delta),
            LiteralBudget::Census => {
                let census = scenario.census.eval(r).max(1) as f64;
                let f = q.max(1) as f64;
                (f * census.log2() + f.log2()).exp2()
            }
        };
        let within_square = (universe.len() as u128) <= 1u128 << (2 * n);
        let good = literals.len() as f64 <= literal_budget;
        let target = MonotoneDisjunction::new(universe.len() as u64, literals.clone())?;
        let inst = TuringInstance { n, universe, examples, literals, literal_budget, good, within_square, q, r };
        instances.insert(n, (inst, target));
    }
    Ok(TuringReduction { scenario, mode, instances })
}

impl TuringReduction {
    pub fn scenario(&self) -> &Arc<TuringScenario> {
        &self.scenario
    }

    pub fn instance(&self, n: usize) -> Option<&TuringInstance> {
        self.instances.get(&n).map(|(i, _)| i)
    }

    pub fn instances(&self) -> impl Iterator<Item = &TuringInstance> {
        self.instances.values().map(|(i, _)| i)
    }

    fn slot(&self, n: usize, x: &BitString) -> Option<usize> {
        match self.mode {
            ReductionMode::Weak if x.len() <= n => Some(string_to_index(x).0 as usize),
            ReductionMode::Strong if x.len() == n => {
                Some((string_to_index(x).0 - LexIndex::first_of_length(n).0) as usize)
            }
            _ => None,
        }
    }
}

impl ConceptReduction for TuringReduction {
    type Example = SparseExample;
    type Target = MonotoneDisjunction;

    fn mode(&self) -> ReductionMode {
        self.mode
    }

    fn example(&self, n: usize, x: &BitString) -> Result<SparseExample, CompileError> {
        let (inst, _) = self.instances.get(&n).ok_or(CompileError::NotPrepared(n))?;
        let slot = self
            .slot(n, x)
            .ok_or_else(|| CompileError::Contract(format!("input {x} is outside the range for length {n}")))?;
        Ok(inst.examples[slot].clone())
    }

    fn target(&self, n: usize) -> Option<&MonotoneDisjunction> {
        self.instances.get(&n).map(|(_, t)| t)
    }

    fn good_lengths(&self) -> BTreeSet<usize> {
        self.instances.iter().filter(|(_, (i, _))| i.good).map(|(&n, _)| n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Disjunctive,
    Conjunctive,
    Turing,
}

/// Knobs for [`synthesize_scenario`]. Set-valued kinds use `f`, `s_counts`
/// and `literal_epsilon`; the Turing kind uses `machine`, `s_density`,
/// `fanout` and `max_input_len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    /// Per-length member counts for a sparse `S`.
    pub s_counts: Vec<u64>,
    pub max_count: usize,
    pub extra_len: usize,
    /// Literal budget exponent, `"p/q"`.
    pub literal_epsilon: String,
    pub machine: Option<MachineSpec>,
    /// Membership probability of `S`, `"p/q"`.
    pub s_density: String,
    pub fanout: usize,
    pub max_input_len: usize,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            s_counts: vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1],
            max_count: 2,
            extra_len: 1,
            literal_epsilon: "1/2".into(),
            machine: None,
            s_density: "1/2".into(),
            fanout: 0,
            max_input_len: 6,
        }
    }
}

/// `f` and a sparse `S` for the disjunctive and conjunctive kinds.
#[derive(Debug, Clone)]
pub struct SetScenario {
    pub seed: u64,
    pub f: SetValuedReduction,
    pub s: LanguageOracle,
    pub literal_epsilon: f64,
}

#[derive(Debug, Clone)]
pub enum SyntheticScenario {
    Disjunctive(SetScenario),
    Conjunctive(SetScenario),
    Turing(Arc<TuringScenario>),
}

pub fn synthesize_scenario(
    seed: u64,
    kind: ScenarioKind,
    params: &ScenarioParams,
) -> Result<SyntheticScenario, ReductionError> {
    let rational =
        |text: &str| parse_ratio(text).map(|r| to_f64(&r)).map_err(|e| ReductionError::Parameter(e.to_string()));
    match kind {
        ScenarioKind::Disjunctive | ScenarioKind::Conjunctive => {
            let f = ReductionSpec::RandomSubsets {
                seed: rng::derive(seed, &[0xF]),
                max_count: params.max_count,
                extra_len: params.extra_len,
            }
            .build();
            let s = OracleSpec::Counts { seed: rng::derive(seed, &[0x5]), counts: params.s_counts.clone() }.build()?;
            let set = SetScenario { seed, f, s, literal_epsilon: rational(&params.literal_epsilon)? };
            Ok(if kind == ScenarioKind::Disjunctive {
                SyntheticScenario::Disjunctive(set)
            } else {
                SyntheticScenario::Conjunctive(set)
            })
        }
        ScenarioKind::Turing => {
            let spec = params.machine.clone().unwrap_or(MachineSpec::RandomTree {
                seed: rng::derive(seed, &[0x3]),
                q: 2,
                extra_len: 1,
            });
            let density = rational(&params.s_density)?;
            let scenario = TuringScenario::new(seed, spec.build(), density, params.fanout, params.max_input_len)?;
            Ok(SyntheticScenario::Turing(Arc::new(scenario)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{Concept, OnlineLearner, UnionLearner, Winnow};
    use proptest::prelude::*;
    use rand::Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<BitString> {
        items.iter().map(|s| bs(s)).collect()
    }

    #[test]
    fn enumerate_queries_examples() {
        let q = enumerate_queries(&SetValuedReduction::identity(), 2).unwrap();
        assert_eq!(
            q.queries(),
            set(&["", "0", "1", "00", "01", "10", "11"]).into_iter().collect::<Vec<_>>().as_slice()
        );
        let q = enumerate_queries(&SetValuedReduction::zero_pad(), 3).unwrap();
        assert_eq!(q.queries(), [bs(""), bs("0"), bs("00"), bs("000")]);
        assert!(enumerate_queries(&SetValuedReduction::empty(), 5).unwrap().is_empty());
    }

    #[test]
    fn length_bound_violation_is_a_contract_error() {
        let bad = SetValuedReduction::new("too-long", Poly::identity(), |x| Ok(BTreeSet::from([x.append(true)])));
        assert!(matches!(enumerate_queries(&bad, 2), Err(ReductionError::LengthBound { .. })));
    }

    #[test]
    fn disjunctive_with_no_hits_is_all_negative() {
        let r = disjunctive_to_concept(SetValuedReduction::identity(), LanguageOracle::empty(), [4], 0.5).unwrap();
        let t = r.target(4).unwrap();
        assert_eq!(t.k(), 0);
        for x in strings_up_to(4) {
            assert!(!t.contains(&r.example(4, &x).unwrap()));
        }
    }

    #[test]
    fn disjunctive_identity_recovers_s() {
        let s = LanguageOracle::bernoulli(3, 0.3, 8);
        let r = disjunctive_to_concept(SetValuedReduction::identity(), s.clone(), [8], 0.5).unwrap();
        let t = r.target(8).unwrap();
        let mut rng = rng::rng(11);
        for _ in 0..100 {
            let len = rng.gen_range(0..=8);
            let x = BitString::from_value(rng.gen_range(0..1u64 << len), len);
            assert_eq!(t.contains(&r.example(8, &x).unwrap()), s.contains(&x).unwrap());
        }
    }

    #[test]
    fn disjunctive_concept_matches_direct_evaluation() {
        let f = SetValuedReduction::random_subsets(5, 3, 1);
        let s = LanguageOracle::random_with_counts(9, &[0, 1, 1, 1, 1, 1, 1, 1, 1, 1]).unwrap();
        let r = disjunctive_to_concept(f.clone(), s.clone(), [8], 0.5).unwrap();
        let t = r.target(8).unwrap();
        for x in strings_up_to(8) {
            let direct = f.apply(&x).unwrap().iter().any(|q| s.contains(q).unwrap());
            assert_eq!(t.contains(&r.example(8, &x).unwrap()), direct, "{x}");
        }
    }

    #[test]
    fn conjunctive_examples() {
        let f = SetValuedReduction::empty();
        let r = conjunctive_to_concept(f, LanguageOracle::empty(), [3], 0.5).unwrap();
        assert!(r.target(3).unwrap().contains(&r.example(3, &bs("101")).unwrap()));

        let s = LanguageOracle::bernoulli(4, 0.5, 6);
        let r = conjunctive_to_concept(SetValuedReduction::identity(), s.clone(), [6], 0.5).unwrap();
        for x in strings_up_to(6) {
            assert_eq!(r.target(6).unwrap().contains(&r.example(6, &x).unwrap()), s.contains(&x).unwrap());
        }

        let f = SetValuedReduction::random_subsets(6, 3, 1);
        let s = LanguageOracle::random_with_counts(2, &[1, 1, 2, 2, 2, 2, 2, 2, 2, 2]).unwrap();
        let r = conjunctive_to_concept(f.clone(), s.clone(), [8], 0.5).unwrap();
        for x in strings_up_to(8) {
            let direct = f.apply(&x).unwrap().iter().all(|q| s.contains(q).unwrap());
            assert_eq!(r.target(8).unwrap().contains(&r.example(8, &x).unwrap()), direct);
        }
    }

    #[test]
    fn oracle_ignoring_paths() {
        let m = OracleIgnoring { q: 2 };
        let paths = answer_paths(&m, &bs("10")).unwrap();
        assert_eq!(paths.len(), 4);
        assert!(paths.iter().all(|p| p.queries.is_empty() && p.accept));
        assert_eq!(accepting_set(&paths).len(), 4);
        assert!(answer_paths(&m, &bs("01")).unwrap().iter().all(|p| !p.accept));
    }

    #[test]
    fn self_query_paths() {
        let paths = answer_paths(&SelfQuery, &bs("011")).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0], AnswerPath { z: bs("0"), queries: vec![bs("011")], accept: false });
        assert_eq!(paths[1], AnswerPath { z: bs("1"), queries: vec![bs("011")], accept: true });
        assert_eq!(accepting_set(&paths), vec![bs("1")]);
    }

    #[test]
    fn adaptive_chain_paths_differ() {
        let paths = answer_paths(&AdaptiveChain { q: 2 }, &bs("1")).unwrap();
        assert_eq!(paths.len(), 4);
        let second: Vec<&BitString> = paths.iter().map(|p| &p.queries[1]).collect();
        assert_eq!(second, [&bs("10"), &bs("10"), &bs("11"), &bs("11")]);
        assert_eq!(paths.iter().map(|p| p.accept).collect::<Vec<_>>(), [false, true, true, false]);
        assert!(accepting_set(&answer_paths(&AlwaysReject { q: 3 }, &bs("1")).unwrap()).is_empty());
    }

    struct Chatty;
    impl OracleMachine for Chatty {
        fn name(&self) -> String {
            "chatty".into()
        }
        fn query_bound(&self, _n: usize) -> usize {
            1
        }
        fn query_length_bound(&self, n: usize) -> usize {
            n
        }
        fn step(&self, x: &BitString, history: &[(BitString, bool)]) -> Step {
            if history.len() < 2 {
                Step::Query(x.clone())
            } else {
                Step::Decide(true)
            }
        }
    }

    #[test]
    fn query_bound_is_enforced() {
        assert!(matches!(answer_paths(&Chatty, &bs("0")), Err(ReductionError::QueryBound { .. })));
        assert!(matches!(
            brute_force_oracle_run(&Chatty, &LanguageOracle::full(), &bs("0")),
            Err(ReductionError::QueryBound { .. })
        ));
    }

    #[test]
    fn brute_force_examples() {
        assert!(brute_force_oracle_run(&OracleIgnoring { q: 1 }, &LanguageOracle::empty(), &bs("1")).unwrap());
        for x in strings_up_to(4) {
            assert!(brute_force_oracle_run(&SelfQuery, &LanguageOracle::full(), &x).unwrap());
        }
    }

    #[test]
    fn tuple_encoding_round_trips() {
        let t = vec![bs("01"), bs(""), bs("1")];
        assert_eq!(encode_tuple(&t), bs("110010101"));
        assert_eq!(decode_tuple(&encode_tuple(&t)).unwrap(), t);
        assert_eq!(decode_tuple(&BitString::empty()).unwrap(), Vec::<BitString>::new());
        assert!(decode_tuple(&bs("1")).is_none());
    }

    proptest! {
        #[test]
        fn tuple_encoding_is_injective(
            a in prop::collection::vec(prop::collection::vec(any::<bool>(), 0..5), 0..4),
            b in prop::collection::vec(prop::collection::vec(any::<bool>(), 0..5), 0..4),
        ) {
            let a: Vec<BitString> = a.into_iter().map(BitString::from_bits).collect();
            let b: Vec<BitString> = b.into_iter().map(BitString::from_bits).collect();
            prop_assert_eq!(decode_tuple(&encode_tuple(&a)).unwrap(), a.clone());
            prop_assert_eq!(encode_tuple(&a) == encode_tuple(&b), a == b);
        }
    }

    fn pair_g() -> SetValuedReduction {
        SetValuedReduction::new("pair", Poly::shift(1), |y| Ok(BTreeSet::from([y.append(false), y.append(true)])))
    }

    #[test]
    fn build_h_x_examples() {
        let paths = answer_paths(&AlwaysReject { q: 2 }, &bs("1")).unwrap();
        assert!(build_h_x(&paths, &pair_g()).unwrap().is_empty());

        let one = vec![AnswerPath { z: bs("10"), queries: vec![bs("0"), bs("1")], accept: true }];
        assert_eq!(build_h_x(&one, &pair_g()).unwrap().len(), 4);

        let constant = SetValuedReduction::new("const", Poly::constant(2), |_| Ok(BTreeSet::from([bs("11")])));
        let two = vec![
            AnswerPath { z: bs("0"), queries: vec![bs("0")], accept: true },
            AnswerPath { z: bs("1"), queries: vec![bs("1")], accept: true },
        ];
        assert_eq!(build_h_x(&two, &constant).unwrap(), BTreeSet::from([encode_tuple(&[bs("11")])]));
    }

    #[test]
    fn build_a_n_examples() {
        assert_eq!(build_a_n(&LanguageOracle::empty(), 2, 4).unwrap(), BTreeSet::from([BitString::empty()]));
        let u = LanguageOracle::from_set("u", set(&["01", "110"]));
        let a = build_a_n(&u, 2, 3).unwrap();
        assert_eq!(a.len(), 1 + 2 + 4);
        assert!(a.len() as u128 <= a_n_bound(2, 2));
        let mut r = rng::rng(1);
        for _ in 0..200 {
            let k = r.gen_range(0..4);
            let parts: Vec<BitString> = (0..k)
                .map(|_| {
                    let len = r.gen_range(2..=3);
                    BitString::from_value(r.gen_range(0..1u64 << len), len)
                })
                .collect();
            let t = encode_tuple(&parts);
            let expect = parts.len() <= 2 && parts.iter().all(|p| u.contains(p).unwrap());
            assert_eq!(a.contains(&t), expect);
            assert_eq!(in_a_n(&u, 2, 3, &t).unwrap(), expect);
        }
    }

    #[test]
    fn membership_via_expansion_examples() {
        assert!(!membership_via_expansion(&BTreeSet::new(), &set(&["0"])));
        let sc = TuringScenario::new(4, Arc::new(SelfQuery), 0.5, 0, 4).unwrap();
        for x in strings_up_to(4) {
            let a_n = build_a_n(&sc.u, 1, sc.r(x.len())).unwrap();
            let e = sc.expand(&x, &a_n).unwrap();
            assert!(e.agrees());
            if e.via_expansion {
                let witness = e.h_x.iter().find(|h| a_n.contains(*h)).unwrap();
                for u in decode_tuple(witness).unwrap() {
                    assert!(sc.u.contains(&u).unwrap());
                }
            }
        }
    }

    #[test]
    fn expansion_agrees_with_brute_force_on_builtins() {
        let machines: Vec<Arc<dyn OracleMachine>> = vec![
            Arc::new(OracleIgnoring { q: 2 }),
            Arc::new(AlwaysReject { q: 1 }),
            Arc::new(SelfQuery),
            Arc::new(AdaptiveChain { q: 3 }),
            Arc::new(Majority { q: 3 }),
            Arc::new(RandomDecisionTree { seed: 8, q: 3, extra_len: 2 }),
        ];
        for (i, m) in machines.into_iter().enumerate() {
            let sc = TuringScenario::new(i as u64, m, 0.5, 1, 5).unwrap();
            for e in sc.expand_all(5).unwrap() {
                assert!(e.agrees(), "{} on {}", sc.machine.name(), e.x);
                assert!(e.h_x.len() as u128 <= e.h_bound);
            }
        }
    }

    #[test]
    fn always_reject_expands_to_nothing() {
        let sc = TuringScenario::new(2, Arc::new(AlwaysReject { q: 2 }), 0.5, 0, 4).unwrap();
        for e in sc.expand_all(4).unwrap() {
            assert!(e.h_x.is_empty() && !e.via_expansion && !e.brute_force);
        }
    }

    #[test]
    fn scenario_u_is_sparse_and_g_consistent() {
        let sc = TuringScenario::new(12, Arc::new(Majority { q: 2 }), 0.5, 2, 5).unwrap();
        sc.check_consistency().unwrap();
        let census = crate::seqcore::density_census(&sc.u, 10).unwrap();
        for rec in census {
            assert!(rec.cumulative <= sc.census.eval(rec.length));
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let p = ScenarioParams::default();
        let a = match synthesize_scenario(7, ScenarioKind::Turing, &p).unwrap() {
            SyntheticScenario::Turing(t) => t,
            _ => unreachable!(),
        };
        let b = match synthesize_scenario(7, ScenarioKind::Turing, &p).unwrap() {
            SyntheticScenario::Turing(t) => t,
            _ => unreachable!(),
        };
        assert_eq!(a.s.members(), b.s.members());
        assert_eq!(a.expand_all(4).unwrap(), b.expand_all(4).unwrap());
        let SyntheticScenario::Disjunctive(x) = synthesize_scenario(7, ScenarioKind::Disjunctive, &p).unwrap() else {
            unreachable!()
        };
        let SyntheticScenario::Disjunctive(y) = synthesize_scenario(7, ScenarioKind::Disjunctive, &p).unwrap() else {
            unreachable!()
        };
        assert_eq!(x.s.members(), y.s.members());
        for w in strings_up_to(6) {
            assert_eq!(x.f.apply(&w).unwrap(), y.f.apply(&w).unwrap());
        }
    }

    #[test]
    fn turing_concept_matches_expansion() {
        let sc = Arc::new(TuringScenario::new(5, Arc::new(AdaptiveChain { q: 2 }), 0.5, 1, 5).unwrap());
        let red =
            turing_to_concept(sc.clone(), ReductionMode::Weak, [5], LiteralBudget::Subexp { delta: 0.9 }).unwrap();
        let inst = red.instance(5).unwrap();
        let a_n = build_a_n(&sc.u, inst.q, inst.r).unwrap();
        let t = red.target(5).unwrap();
        for x in strings_up_to(5) {
            let h_x = build_h_x(&answer_paths(sc.machine.as_ref(), &x).unwrap(), &sc.g).unwrap();
            let via = membership_via_expansion(&h_x, &a_n);
            assert_eq!(t.contains(&red.example(5, &x).unwrap()), via);
            assert_eq!(via, sc.brute_force(&x).unwrap());
        }
        let mut w = Winnow::standard(inst.universe.len() as u64);
        for (x, e) in strings_up_to(5).zip(&inst.examples) {
            w.observe(e, sc.brute_force(&x).unwrap()).unwrap();
        }
        assert!(w.mistakes() as u64 <= inst.mistake_bound());
        assert!(w.mistakes() as f64 <= inst.budget_mistake_bound());
    }

    #[test]
    fn strong_mode_uses_one_length() {
        let sc = Arc::new(TuringScenario::new(5, Arc::new(SelfQuery), 0.5, 0, 4).unwrap());
        let red = turing_to_concept(sc, ReductionMode::Strong, [3, 4], LiteralBudget::Census).unwrap();
        assert_eq!(red.instance(3).unwrap().examples.len(), 8);
        assert!(red.example(3, &bs("01")).is_err());
        assert_eq!(red.good_lengths(), BTreeSet::from([3, 4]));
    }

    #[test]
    fn union_learner_on_conjunctive_instance() {
        let f = SetValuedReduction::random_subsets(1, 2, 1);
        let s = LanguageOracle::random_with_counts(3, &[1, 2, 2, 3, 3, 3, 3, 3]).unwrap();
        let r = conjunctive_to_concept(f, s, [6], 0.5).unwrap();
        let mut l = UnionLearner::new();
        for x in strings_up_to(6) {
            let e = r.example(6, &x).unwrap();
            let truth = r.target(6).unwrap().contains(&e);
            l.observe(&e, truth).unwrap();
        }
        assert!(l.mistakes() as u64 <= r.mistake_bound(6).unwrap());
    }
}
