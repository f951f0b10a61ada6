//! Online learners in the mistake-bound model, with teaching harnesses.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::rational::{int, pow};
use crate::seqcore::BitString;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("example over a universe of {found} positions given to a learner over {expected}")]
    UniverseMismatch { expected: u64, found: u64 },
    #[error("position {index} is outside a universe of {universe}")]
    OutOfRange { index: u64, universe: u64 },
    #[error("positions must be strictly increasing")]
    Unsorted,
    #[error("invalid learner parameter: {0}")]
    Parameter(String),
}

/// Anything a learner can be shown; `popcount` is its size for logging.
pub trait Example {
    fn popcount(&self) -> usize;
}

/// A target concept over examples of type `E`.
pub trait Concept<E> {
    fn contains(&self, example: &E) -> bool;
}

pub trait OnlineLearner {
    type Example;

    fn predict(&self, x: &Self::Example) -> Result<bool, LearnError>;

    /// Reveals the true label. Returns whether the prediction was a mistake.
    fn observe(&mut self, x: &Self::Example, truth: bool) -> Result<bool, LearnError>;

    fn mistakes(&self) -> usize;
}

/// A point of `{0,1}^N` stored by its on-positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseExample {
    universe: u64,
    on: Vec<u64>,
}

impl SparseExample {
    pub fn new(universe: u64, on: Vec<u64>) -> Result<Self, LearnError> {
        if on.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LearnError::Unsorted);
        }
        if let Some(&index) = on.last().filter(|&&i| i >= universe) {
            return Err(LearnError::OutOfRange { index, universe });
        }
        Ok(Self { universe, on })
    }

    /// Sorts and deduplicates `positions` first.
    pub fn from_positions(universe: u64, positions: impl IntoIterator<Item = u64>) -> Result<Self, LearnError> {
        let mut on: Vec<u64> = positions.into_iter().collect();
        on.sort_unstable();
        on.dedup();
        Self::new(universe, on)
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn on_positions(&self) -> &[u64] {
        &self.on
    }
}

impl Example for SparseExample {
    fn popcount(&self) -> usize {
        self.on.len()
    }
}

/// A finite set of strings, shown whole to the union learner.
pub type QuerySet = BTreeSet<BitString>;

impl Example for QuerySet {
    fn popcount(&self) -> usize {
        self.len()
    }
}

/// `φ_V = ⋁_{i ∈ V} x_i`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneDisjunction {
    universe: u64,
    variables: BTreeSet<u64>,
}

impl MonotoneDisjunction {
    pub fn new(universe: u64, variables: BTreeSet<u64>) -> Result<Self, LearnError> {
        if let Some(&index) = variables.iter().next_back().filter(|&&i| i >= universe) {
            return Err(LearnError::OutOfRange { index, universe });
        }
        Ok(Self { universe, variables })
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn variables(&self) -> &BTreeSet<u64> {
        &self.variables
    }

    /// Number of literals.
    pub fn k(&self) -> usize {
        self.variables.len()
    }
}

impl Concept<SparseExample> for MonotoneDisjunction {
    fn contains(&self, x: &SparseExample) -> bool {
        x.on.iter().any(|i| self.variables.contains(i))
    }
}

/// The concept `𝒫(X)`: a set of strings is a member iff it is a subset of `X`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubsetConcept {
    x: BTreeSet<BitString>,
}

impl SubsetConcept {
    pub fn new(x: BTreeSet<BitString>) -> Self {
        Self { x }
    }

    pub fn generators(&self) -> &BTreeSet<BitString> {
        &self.x
    }
}

impl Concept<QuerySet> for SubsetConcept {
    fn contains(&self, q: &QuerySet) -> bool {
        q.is_subset(&self.x)
    }
}

/// Weight of a touched variable: 0 or `alpha^j` with `j >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weight {
    Zero,
    Power(u32),
}

/// Littlestone's Winnow with exact rational weights. `weights` grows up to
/// the largest touched index; `Power(0)` is the initial weight 1.
#[derive(Debug, Clone)]
pub struct Winnow {
    universe: u64,
    alpha: BigRational,
    theta: BigRational,
    powers: Vec<BigRational>,
    weights: Vec<Weight>,
    mistakes: usize,
}

impl Winnow {
    pub fn new(universe: u64, alpha: BigRational, theta: BigRational) -> Result<Self, LearnError> {
        if alpha <= BigRational::one() {
            return Err(LearnError::Parameter(format!("alpha must exceed 1, got {alpha}")));
        }
        Ok(Self {
            universe,
            powers: vec![BigRational::one(), alpha.clone()],
            alpha,
            theta,
            weights: Vec::new(),
            mistakes: 0,
        })
    }

    /// `alpha = 2`, `theta = N/2`: the setting with the certified bound.
    pub fn standard(universe: u64) -> Self {
        Self::new(universe, int(2), BigRational::new(universe.into(), 2.into())).unwrap()
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn alpha(&self) -> &BigRational {
        &self.alpha
    }

    pub fn theta(&self) -> &BigRational {
        &self.theta
    }

    pub fn weight(&self, i: u64) -> BigRational {
        match self.weights.get(i as usize) {
            None | Some(Weight::Power(0)) => BigRational::one(),
            Some(Weight::Zero) => BigRational::zero(),
            Some(&Weight::Power(j)) => pow(&self.alpha, j as u64),
        }
    }

    /// Variables whose weight differs from 1, in index order.
    pub fn stored_weights(&self) -> Vec<(u64, BigRational)> {
        (0..self.weights.len() as u64)
            .filter(|&i| self.weights[i as usize] != Weight::Power(0))
            .map(|i| (i, self.weight(i)))
            .collect()
    }

    fn check(&self, x: &SparseExample) -> Result<(), LearnError> {
        if x.universe != self.universe {
            return Err(LearnError::UniverseMismatch { expected: self.universe, found: x.universe });
        }
        Ok(())
    }

    fn slot(&mut self, i: u64) -> &mut Weight {
        let i = i as usize;
        if self.weights.len() <= i {
            self.weights.resize(i + 1, Weight::Power(0));
        }
        &mut self.weights[i]
    }

    fn power(&mut self, j: u32) -> &BigRational {
        while self.powers.len() <= j as usize {
            let next = self.powers.last().unwrap() * &self.alpha;
            self.powers.push(next);
        }
        &self.powers[j as usize]
    }

    /// `Σ_{i on} w_i`, grouping on-positions by exponent.
    pub fn weighted_sum(&self, x: &SparseExample) -> Result<BigRational, LearnError> {
        self.check(x)?;
        let mut by_power: Vec<u64> = Vec::new();
        let mut unit = 0u64;
        for i in &x.on {
            match self.weights.get(*i as usize) {
                None | Some(Weight::Power(0)) => unit += 1,
                Some(Weight::Zero) => {}
                Some(&Weight::Power(j)) => {
                    let j = j as usize;
                    if by_power.len() <= j {
                        by_power.resize(j + 1, 0);
                    }
                    by_power[j] += 1;
                }
            }
        }
        let mut sum = int(unit);
        for (j, &count) in by_power.iter().enumerate().filter(|(_, &c)| c > 0) {
            let term = match self.powers.get(j) {
                Some(p) => p.clone(),
                None => pow(&self.alpha, j as u64),
            };
            sum += term * int(count);
        }
        Ok(sum)
    }
}

impl OnlineLearner for Winnow {
    type Example = SparseExample;

    /// Positive iff the weighted sum strictly exceeds `theta`.
    fn predict(&self, x: &SparseExample) -> Result<bool, LearnError> {
        Ok(self.weighted_sum(x)? > self.theta)
    }

    fn observe(&mut self, x: &SparseExample, truth: bool) -> Result<bool, LearnError> {
        let predicted = self.predict(x)?;
        if predicted == truth {
            return Ok(false);
        }
        self.mistakes += 1;
        if predicted {
            for &i in &x.on {
                *self.slot(i) = Weight::Zero;
            }
        } else {
            let mut top = 0;
            for &i in &x.on {
                if let Weight::Power(j) = self.slot(i) {
                    *j += 1;
                    top = top.max(*j);
                }
            }
            self.power(top);
        }
        Ok(true)
    }

    fn mistakes(&self) -> usize {
        self.mistakes
    }
}

/// Littlestone's ceiling for `alpha = 2`, `theta = N/2`: `⌈2k·log₂N⌉ + 2`.
pub fn winnow_bound(k: u64, universe: u64) -> u64 {
    if k == 0 || universe <= 1 {
        return 2;
    }
    let raw = 2.0 * k as f64 * (universe as f64).log2();
    let rounded = raw.round();
    let ceiling = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    ceiling as u64 + 2
}

/// Learns `𝒫(X)` by keeping the union of all positive examples seen.
#[derive(Debug, Clone, Default)]
pub struct UnionLearner {
    hypothesis: BTreeSet<BitString>,
    mistakes: usize,
}

impl UnionLearner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hypothesis(&self) -> &BTreeSet<BitString> {
        &self.hypothesis
    }
}

impl OnlineLearner for UnionLearner {
    type Example = QuerySet;

    fn predict(&self, q: &QuerySet) -> Result<bool, LearnError> {
        Ok(q.is_subset(&self.hypothesis))
    }

    fn observe(&mut self, q: &QuerySet, truth: bool) -> Result<bool, LearnError> {
        let predicted = self.predict(q)?;
        if predicted == truth {
            return Ok(false);
        }
        self.mistakes += 1;
        if truth {
            self.hypothesis.extend(q.iter().cloned());
        }
        Ok(true)
    }

    fn mistakes(&self) -> usize {
        self.mistakes
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MistakeRecord {
    pub example_id: usize,
    pub popcount: usize,
    pub prediction: bool,
    pub truth: bool,
    pub cumulative_mistakes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MistakeLog {
    pub records: Vec<MistakeRecord>,
}

impl MistakeLog {
    pub fn mistakes(&self) -> usize {
        self.records.last().map_or(0, |r| r.cumulative_mistakes)
    }

    pub fn mistakes_on_negatives(&self) -> usize {
        self.records.iter().filter(|r| !r.truth && r.prediction).count()
    }
}

/// Shows `examples` in order, labelled by `target`.
pub fn teach<L, C>(learner: &mut L, target: &C, examples: &[L::Example]) -> Result<MistakeLog, LearnError>
where
    L: OnlineLearner,
    L::Example: Example,
    C: Concept<L::Example>,
{
    let labelled: Vec<bool> = examples.iter().map(|x| target.contains(x)).collect();
    teach_labelled(learner, examples, &labelled)
}

/// Shows `examples` with explicit labels.
pub fn teach_labelled<L>(learner: &mut L, examples: &[L::Example], labels: &[bool]) -> Result<MistakeLog, LearnError>
where
    L: OnlineLearner,
    L::Example: Example,
{
    assert_eq!(examples.len(), labels.len(), "one label per example");
    let mut log = MistakeLog::default();
    let mut cumulative = 0;
    for (example_id, (x, &truth)) in examples.iter().zip(labels).enumerate() {
        let prediction = learner.predict(x)?;
        learner.observe(x, truth)?;
        cumulative += (prediction != truth) as usize;
        log.records.push(MistakeRecord {
            example_id,
            popcount: x.popcount(),
            prediction,
            truth,
            cumulative_mistakes: cumulative,
        });
    }
    Ok(log)
}

/// Default number of candidates the adversary examines per step.
pub const DEFAULT_POOL: usize = 256;

/// Consecutive fruitless steps after which the adversary stops searching.
pub const STALL_LIMIT: usize = 8;

/// Greedy adversary: at each step draws up to `pool` candidates and picks
/// the first one a simulated copy of `learner` misclassifies, falling back
/// to the first candidate when none is misclassified. After [`STALL_LIMIT`]
/// fallbacks in a row the remaining steps draw a single candidate each.
pub fn adversarial_sequence<L, C, R, G>(
    target: &C,
    learner: &L,
    budget: usize,
    pool: usize,
    rng: &mut R,
    mut candidate: G,
) -> Result<Vec<L::Example>, LearnError>
where
    L: OnlineLearner + Clone,
    L::Example: Clone,
    C: Concept<L::Example>,
    R: Rng,
    G: FnMut(&mut R) -> L::Example,
{
    let mut sim = learner.clone();
    let mut sequence = Vec::with_capacity(budget);
    let mut stalled = 0;
    for _ in 0..budget {
        let mut fallback = None;
        let mut chosen = None;
        let draws = if stalled >= STALL_LIMIT { 1 } else { pool.max(1) };
        for _ in 0..draws {
            let x = candidate(rng);
            if sim.predict(&x)? != target.contains(&x) {
                chosen = Some(x);
                break;
            }
            fallback.get_or_insert(x);
        }
        stalled = if chosen.is_some() { 0 } else { stalled + 1 };
        let x = chosen.or(fallback).expect("pool is never empty");
        sim.observe(&x, target.contains(&x))?;
        sequence.push(x);
    }
    Ok(sequence)
}

/// Candidate generator for Winnow stress runs. Draws either a few positions,
/// often including a target variable, or a random subset; one draw in three
/// is a large subset avoiding the target.
pub fn winnow_candidate<R: Rng>(rng: &mut R, universe: u64, target: &MonotoneDisjunction) -> SparseExample {
    let n = universe as usize;
    let vars: Vec<u64> = target.variables().iter().copied().collect();
    let mut on: Vec<u64> = match rng.gen_range(0..3) {
        0 => {
            let m = rng.gen_range(1..=3.min(n));
            let mut picks: Vec<u64> = index::sample(rng, n, m).into_iter().map(|i| i as u64).collect();
            if !vars.is_empty() && rng.gen_bool(0.5) {
                picks[0] = vars[rng.gen_range(0..vars.len())];
            }
            picks
        }
        1 => {
            let m = rng.gen_range(1..=n);
            index::sample(rng, n, m).into_iter().map(|i| i as u64).collect()
        }
        _ => {
            let free = n - vars.len();
            if free == 0 {
                return SparseExample::new(universe, vec![]).unwrap();
            }
            let m = rng.gen_range(free.div_ceil(2)..=free);
            index::sample(rng, n, m).into_iter().map(|i| i as u64).filter(|i| !target.variables().contains(i)).collect()
        }
    };
    on.sort_unstable();
    on.dedup();
    SparseExample::new(universe, on).unwrap()
}

/// Candidate generator for union-learner runs: random subsets of `universe`.
pub fn subset_candidate<R: Rng>(rng: &mut R, universe: &[BitString], max_size: usize) -> QuerySet {
    if universe.is_empty() {
        return QuerySet::new();
    }
    let m = rng.gen_range(0..=max_size.min(universe.len()));
    index::sample(rng, universe.len(), m).into_iter().map(|i| universe[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn ex(n: u64, on: &[u64]) -> SparseExample {
        SparseExample::new(n, on.to_vec()).unwrap()
    }

    fn set(items: &[&str]) -> QuerySet {
        items.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn sparse_example_validation() {
        assert_eq!(SparseExample::new(4, vec![2, 1]), Err(LearnError::Unsorted));
        assert_eq!(SparseExample::new(4, vec![1, 1]), Err(LearnError::Unsorted));
        assert_eq!(SparseExample::new(4, vec![4]), Err(LearnError::OutOfRange { index: 4, universe: 4 }));
        assert_eq!(SparseExample::from_positions(4, [3, 1, 3]).unwrap(), ex(4, &[1, 3]));
    }

    #[test]
    fn winnow_predict_examples() {
        let w = Winnow::new(8, int(2), int(4)).unwrap();
        assert!(!w.predict(&ex(8, &[0, 3, 5])).unwrap());
        assert!(w.predict(&ex(8, &[0, 1, 2, 3, 5])).unwrap());
        assert!(!w.predict(&ex(8, &[])).unwrap());
        // Exactly theta: ties are negative.
        assert!(!w.predict(&ex(8, &[0, 1, 2, 3])).unwrap());
        assert_eq!(w.predict(&ex(9, &[0])), Err(LearnError::UniverseMismatch { expected: 8, found: 9 }));
        assert!(Winnow::new(8, int(1), int(4)).is_err());
    }

    #[test]
    fn winnow_update_examples() {
        let mut w = Winnow::new(8, int(2), int(4)).unwrap();
        assert!(w.observe(&ex(8, &[0, 1]), true).unwrap());
        assert_eq!(w.stored_weights(), vec![(0, int(2)), (1, int(2))]);
        assert_eq!(w.weight(5), int(1));

        // sum = 2 + 2 + 1 + 1 = 6 > 4: a false positive.
        let x = ex(8, &[1, 2, 3, 4]);
        assert!(w.predict(&x).unwrap());
        assert!(w.observe(&x, false).unwrap());
        assert_eq!(w.weight(0), int(2));
        for i in 1..=4 {
            assert_eq!(w.weight(i), int(0));
        }
        assert_eq!(w.mistakes(), 2);

        let before = w.stored_weights();
        assert!(!w.observe(&ex(8, &[5]), false).unwrap());
        assert_eq!(w.stored_weights(), before);
        assert_eq!(w.mistakes(), 2);
    }

    #[test]
    fn winnow_rational_parameters() {
        let mut w = Winnow::new(5, ratio(3, 2), int(5)).unwrap();
        assert!(w.observe(&ex(5, &[0, 1]), true).unwrap());
        assert!(w.observe(&ex(5, &[0, 1]), true).unwrap());
        assert_eq!(w.weight(0), ratio(9, 4));
        assert_eq!(w.weighted_sum(&ex(5, &[0, 1, 2])).unwrap(), ratio(11, 2));
    }

    #[test]
    fn winnow_bound_examples() {
        assert_eq!(winnow_bound(0, 1024), 2);
        assert_eq!(winnow_bound(2, 64), 26);
        assert_eq!(winnow_bound(1, 16), 10);
        assert_eq!(winnow_bound(1, 3), 6); // ⌈2·1.585⌉ + 2
    }

    #[test]
    fn union_learner_examples() {
        let mut u = UnionLearner::new();
        assert!(u.predict(&set(&[])).unwrap());
        assert!(!u.predict(&set(&["0"])).unwrap());
        assert!(u.observe(&set(&["0", "1"]), true).unwrap());
        assert_eq!(u.hypothesis(), &set(&["0", "1"]));
        assert!(u.predict(&set(&["0"])).unwrap());
        assert!(!u.observe(&set(&["00"]), false).unwrap());
        assert_eq!(u.hypothesis(), &set(&["0", "1"]));
        assert_eq!(u.mistakes(), 1);
    }

    #[test]
    fn teach_winnow_empty_target() {
        let target = MonotoneDisjunction::new(32, BTreeSet::new()).unwrap();
        let mut r = rng::rng(4);
        let examples: Vec<_> = (0..300).map(|_| winnow_candidate(&mut r, 32, &target)).collect();
        let mut w = Winnow::standard(32);
        let log = teach(&mut w, &target, &examples).unwrap();
        assert!(log.mistakes() <= 2);
        assert_eq!(log.mistakes(), w.mistakes());
    }

    #[test]
    fn adversary_budget_zero_is_empty() {
        let target = MonotoneDisjunction::new(16, BTreeSet::from([3])).unwrap();
        let mut r = rng::rng(1);
        let seq =
            adversarial_sequence(&target, &Winnow::standard(16), 0, 16, &mut r, |r| winnow_candidate(r, 16, &target))
                .unwrap();
        assert!(seq.is_empty());
    }

    #[test]
    fn adversary_against_empty_target_forces_at_most_the_first() {
        for seed in 0..20 {
            let target = MonotoneDisjunction::new(16, BTreeSet::new()).unwrap();
            let mut r = rng::rng(seed);
            let seq = adversarial_sequence(&target, &Winnow::standard(16), 40, DEFAULT_POOL, &mut r, |r| {
                winnow_candidate(r, 16, &target)
            })
            .unwrap();
            let log = teach(&mut Winnow::standard(16), &target, &seq).unwrap();
            assert!(log.mistakes() <= 1, "seed {seed}: {}", log.mistakes());
            assert!(log.records.iter().skip(1).all(|r| r.prediction == r.truth));
        }
    }

    #[test]
    fn adversary_k1_n16_respects_bound() {
        for seed in 0..100u64 {
            let mut r = rng::rng(rng::derive(seed, &[16, 1]));
            let v = r.gen_range(0..16);
            let target = MonotoneDisjunction::new(16, BTreeSet::from([v])).unwrap();
            let seq = adversarial_sequence(&target, &Winnow::standard(16), 60, DEFAULT_POOL, &mut r, |r| {
                winnow_candidate(r, 16, &target)
            })
            .unwrap();
            let log = teach(&mut Winnow::standard(16), &target, &seq).unwrap();
            assert!(log.mistakes() as u64 <= winnow_bound(1, 16), "seed {seed}");
        }
    }

    #[test]
    fn union_learner_teaching_bound() {
        for seed in 0..50u64 {
            let mut r = rng::rng(seed);
            let universe: Vec<BitString> = crate::seqcore::strings_up_to(3).collect();
            let x: BTreeSet<BitString> =
                index::sample(&mut r, universe.len(), 5).into_iter().map(|i| universe[i].clone()).collect();
            let target = SubsetConcept::new(x.clone());
            let examples: Vec<QuerySet> = (0..200).map(|_| subset_candidate(&mut r, &universe, 3)).collect();
            let mut u = UnionLearner::new();
            let log = teach(&mut u, &target, &examples).unwrap();
            assert!(log.mistakes() <= 5);
            assert_eq!(log.mistakes_on_negatives(), 0);
            assert!(u.hypothesis().is_subset(&x));
        }
    }

    fn arb_run() -> impl Strategy<Value = (u64, BTreeSet<u64>, u64)> {
        (2u64..200).prop_flat_map(|n| {
            (Just(n), proptest::collection::btree_set(0..n, 0..6usize.min(n as usize)), any::<u64>())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn winnow_mistake_bound_and_weight_shape((n, vars, seed) in arb_run()) {
            let target = MonotoneDisjunction::new(n, vars.clone()).unwrap();
            let mut r = rng::rng(seed);
            let seq = adversarial_sequence(&target, &Winnow::standard(n), 80, 32, &mut r, |r| {
                winnow_candidate(r, n, &target)
            }).unwrap();
            let mut w = Winnow::standard(n);
            let mut zeroed = BTreeSet::new();
            for x in &seq {
                w.observe(x, target.contains(x)).unwrap();
                for (i, wt) in w.stored_weights() {
                    if wt.is_zero() {
                        zeroed.insert(i);
                    } else {
                        prop_assert!(!zeroed.contains(&i), "zeroed weight revived");
                        // 2^j with j >= 1
                        prop_assert!(wt.is_integer());
                        let v = wt.to_integer();
                        prop_assert!(v > 1.into() && (&v & (&v - 1)) == 0.into());
                    }
                }
            }
            prop_assert!(w.mistakes() as u64 <= winnow_bound(vars.len() as u64, n));
        }

        #[test]
        fn teaching_is_deterministic((n, vars, seed) in arb_run()) {
            let target = MonotoneDisjunction::new(n, vars).unwrap();
            let run = || {
                let mut r = rng::rng(seed);
                let seq = adversarial_sequence(&target, &Winnow::standard(n), 30, 16, &mut r, |r| {
                    winnow_candidate(r, n, &target)
                }).unwrap();
                let mut w = Winnow::standard(n);
                let log = teach(&mut w, &target, &seq).unwrap();
                (log, w.stored_weights())
            };
            prop_assert_eq!(run(), run());
        }
    }
}
