//! Cross-module properties on randomly drawn scenarios.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;
use winnowgale_core::compile::{compile_family, compile_gale, CompilerParams, ConceptReduction, ReductionMode};
use winnowgale_core::gale::{verify_gale_condition, FlatGale, GaleExponent, SGale};
use winnowgale_core::learn::{
    Concept, MonotoneDisjunction, OnlineLearner, SparseExample, SubsetConcept, UnionLearner, Winnow,
};
use winnowgale_core::reductions::{
    build_a_n, census_members, conjunctive_to_concept, disjunctive_to_concept, enumerate_queries, synthesize_scenario,
    turing_to_concept, LiteralBudget, MachineSpec, ScenarioKind, ScenarioParams, SyntheticScenario, TuringScenario,
};
use winnowgale_core::rng;
use winnowgale_core::seqcore::{
    characteristic_prefix, density_census, disjoint_union_oracle, strings_of_length, strings_up_to, BitString,
    LanguageOracle,
};

fn bits(max: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), 0..=max)
}

fn set_scenario(seed: u64, kind: ScenarioKind) -> winnowgale_core::reductions::SetScenario {
    match synthesize_scenario(seed, kind, &ScenarioParams::default()).unwrap() {
        SyntheticScenario::Disjunctive(s) | SyntheticScenario::Conjunctive(s) => s,
        SyntheticScenario::Turing(_) => unreachable!(),
    }
}

fn three_halves() -> GaleExponent {
    GaleExponent::parse("3/2").unwrap()
}

fn quarter() -> BigRational {
    BigRational::new(1.into(), 4.into())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prefix_popcount_matches_census(seed in any::<u64>(), counts in proptest::collection::vec(0u64..4, 1..9)) {
        let counts: Vec<u64> = counts.iter().enumerate().map(|(n, &c)| c.min(1 << n)).collect();
        let lang = LanguageOracle::random_with_counts(seed, &counts).unwrap();
        let records = density_census(&lang, counts.len() - 1).unwrap();
        for r in &records {
            let prefix = characteristic_prefix(&lang, (1u64 << (r.length + 1)) - 1).unwrap();
            prop_assert_eq!(prefix.iter().filter(|&&b| b).count() as u64, r.cumulative);
        }
    }

    #[test]
    fn disjoint_union_is_total(seed in any::<u64>(), density in 0.0f64..1.0, x in bits(8)) {
        let s = LanguageOracle::bernoulli(seed, density, 8);
        let du = disjoint_union_oracle(&s);
        let x = BitString::from_bits(x);
        let zero = du.contains(&x.prepend(false)).unwrap();
        let one = du.contains(&x.prepend(true)).unwrap();
        prop_assert!(zero != one);
    }

    #[test]
    fn union_hypothesis_stays_inside_target(seed in any::<u64>(), size in 0usize..8, steps in 1usize..40) {
        let universe: Vec<BitString> = strings_up_to(4).collect();
        let mut g = rng::rng(seed);
        let target: BTreeSet<BitString> =
            rand::seq::index::sample(&mut g, universe.len(), size).into_iter().map(|i| universe[i].clone()).collect();
        let concept = SubsetConcept::new(target.clone());
        let mut learner = UnionLearner::new();
        for _ in 0..steps {
            let pool: Vec<BitString> = if g.gen_bool(0.5) { target.iter().cloned().collect() } else { universe.clone() };
            let m = g.gen_range(0..=3.min(pool.len()));
            let q: BTreeSet<BitString> =
                rand::seq::index::sample(&mut g, pool.len(), m).into_iter().map(|i| pool[i].clone()).collect();
            let truth = concept.contains(&q);
            let predicted = learner.predict(&q).unwrap();
            learner.observe(&q, truth).unwrap();
            prop_assert!(!(predicted && !truth));
            prop_assert!(learner.hypothesis().is_subset(&target));
        }
        prop_assert!(learner.mistakes() <= size);
    }

    #[test]
    fn zero_weights_are_permanent(seed in any::<u64>(), n in 4u64..40, steps in 1usize..60) {
        let mut g = rng::rng(seed);
        let k = g.gen_range(0..=3.min(n as usize));
        let vars = rand::seq::index::sample(&mut g, n as usize, k).into_iter().map(|i| i as u64).collect();
        let target = MonotoneDisjunction::new(n, vars).unwrap();
        let mut w = Winnow::standard(n);
        let mut zeroed = BTreeSet::new();
        for _ in 0..steps {
            let m = g.gen_range(1..=n as usize);
            let mut on: Vec<u64> = rand::seq::index::sample(&mut g, n as usize, m).into_iter().map(|i| i as u64).collect();
            on.sort_unstable();
            let x = SparseExample::new(n, on).unwrap();
            w.observe(&x, target.contains(&x)).unwrap();
            for &i in &zeroed {
                prop_assert!(w.weight(i).is_zero());
            }
            for (i, weight) in w.stored_weights() {
                if weight.is_zero() {
                    zeroed.insert(i);
                }
            }
        }
    }

    #[test]
    fn compiled_gales_obey_the_condition_and_replay(seed in any::<u64>(), n in 2usize..=6, w in bits(130), conj in any::<bool>()) {
        let kind = if conj { ScenarioKind::Conjunctive } else { ScenarioKind::Disjunctive };
        let set = set_scenario(seed, kind);
        let params = CompilerParams::new(three_halves(), quarter(), n).unwrap();
        let w = &w[..w.len().min(params.big_n as usize + 2)];
        let (holds, first, second) = if conj {
            let red = Arc::new(conjunctive_to_concept(set.f, set.s, [n], set.literal_epsilon).unwrap());
            let d = compile_gale(red, |_| UnionLearner::new(), params).unwrap();
            (verify_gale_condition(&d, w).unwrap(), d.value(w).unwrap(), d.value(w).unwrap())
        } else {
            let red = Arc::new(disjunctive_to_concept(set.f, set.s, [n], set.literal_epsilon).unwrap());
            let size = red.instance(n).unwrap().universe.len() as u64;
            let d = compile_gale(red, move |_| Winnow::standard(size), params).unwrap();
            (verify_gale_condition(&d, w).unwrap(), d.value(w).unwrap(), d.value(w).unwrap())
        };
        prop_assert!(holds);
        prop_assert_eq!(first, second);
    }

    #[test]
    fn fair_exponent_gives_martingales(seed in any::<u64>(), n in 2usize..=5, w in bits(64)) {
        let set = set_scenario(seed, ScenarioKind::Disjunctive);
        let red = Arc::new(disjunctive_to_concept(set.f, set.s, [n], set.literal_epsilon).unwrap());
        let size = red.instance(n).unwrap().universe.len() as u64;
        let params = CompilerParams::new(GaleExponent::martingale(), quarter(), n).unwrap();
        let d = compile_gale(red, move |_| Winnow::standard(size), params).unwrap();
        let mut w0 = w.clone();
        w0.push(false);
        let mut w1 = w.clone();
        w1.push(true);
        let mean = (d.value(&w0).unwrap() + d.value(&w1).unwrap()) / BigRational::from_integer(2.into());
        prop_assert_eq!(mean, d.value(&w).unwrap());
    }

    #[test]
    fn set_encodings_match_membership(seed in any::<u64>(), n in 1usize..=7) {
        let set = set_scenario(seed, ScenarioKind::Disjunctive);
        let dis = disjunctive_to_concept(set.f.clone(), set.s.clone(), [n], set.literal_epsilon).unwrap();
        let conj = conjunctive_to_concept(set.f.clone(), set.s.clone(), [n], set.literal_epsilon).unwrap();
        for x in strings_up_to(n) {
            let image = set.f.apply(&x).unwrap();
            let hits = image.iter().filter(|y| set.s.contains(y).unwrap()).count();
            if dis.is_good_length(n) {
                let e = dis.example(n, &x).unwrap();
                prop_assert_eq!(dis.target(n).unwrap().contains(&e), hits > 0);
            }
            if conj.is_good_length(n) {
                let e = conj.example(n, &x).unwrap();
                prop_assert_eq!(conj.target(n).unwrap().contains(&e), hits == image.len());
            }
        }
    }

    #[test]
    fn query_universe_is_canonical(seed in any::<u64>(), n in 0usize..=7) {
        let set = set_scenario(seed, ScenarioKind::Disjunctive);
        let a = enumerate_queries(&set.f, n).unwrap();
        let b = enumerate_queries(&set.f, n).unwrap();
        prop_assert_eq!(a.queries(), b.queries());
        prop_assert!(a.queries().windows(2).all(|p| p[0].index() < p[1].index()));
        let mut expected = BTreeSet::new();
        for x in strings_up_to(n) {
            expected.extend(set.f.apply(&x).unwrap());
        }
        prop_assert_eq!(a.len(), expected.len());
    }

    #[test]
    fn combination_dominates_its_members(seed in any::<u64>(), w in bits(40)) {
        let set = set_scenario(seed, ScenarioKind::Disjunctive);
        let lengths = 1..=6;
        let red = Arc::new(disjunctive_to_concept(set.f, set.s, lengths.clone(), set.literal_epsilon).unwrap());
        let factory = {
            let red = red.clone();
            move |n: usize| Winnow::standard(red.instance(n).map_or(0, |i| i.universe.len() as u64))
        };
        let family = compile_family(red, factory, three_halves(), quarter(), lengths).unwrap();
        let total = family.value(&w).unwrap();
        for (n, member) in family.members() {
            let weighted = member.value(&w).unwrap() / BigRational::from_integer(num_bigint::BigInt::one() << n);
            prop_assert!(total >= weighted);
        }
        let tailed = family.with_tail(Arc::new(FlatGale::new(three_halves()))).unwrap();
        prop_assert!(tailed.truncated(&w, 6).unwrap() == total);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expansion_is_sound_and_small(seed in any::<u64>(), q in 1usize..=3, density in 0.1f64..0.9, fanout in 0usize..3) {
        let machine = MachineSpec::RandomTree { seed, q, extra_len: (seed % 2) as usize }.build();
        let sc = TuringScenario::new(seed, machine, density, fanout, 4).unwrap();
        for e in sc.expand_all(4).unwrap() {
            let n = e.x.len();
            prop_assert_eq!(e.via_expansion, e.brute_force);
            let (q, r) = (sc.q(n) as u32, sc.r(n) as u128);
            prop_assert!(e.h_x.len() as u128 <= e.z_count as u128 * r.pow(q));
            prop_assert!((e.h_x.len() as f64).log2() <= q as f64 * (1.0 + (r as f64).log2()) + 1e-9 || e.h_x.is_empty());
        }
        for n in 0..=4 {
            let (q, r) = (sc.q(n), sc.r(n));
            let census = census_members(&sc.u, r).unwrap().len() as u128;
            prop_assert!(build_a_n(&sc.u, q, r).unwrap().len() as u128 <= 1 + q as u128 * census.pow(q as u32));
        }
    }

    #[test]
    fn turing_encoding_matches_language_at_good_lengths(seed in any::<u64>(), q in 1usize..=3) {
        let machine = MachineSpec::RandomTree { seed, q, extra_len: 1 }.build();
        let sc = Arc::new(TuringScenario::new(seed, machine, 0.5, 0, 5).unwrap());
        let lang = sc.language().unwrap();
        let red = turing_to_concept(sc, ReductionMode::Weak, 1..=5, LiteralBudget::Subexp { delta: 0.9 }).unwrap();
        for n in red.good_lengths() {
            for x in (0..=n).flat_map(strings_of_length) {
                let e = red.example(n, &x).unwrap();
                prop_assert_eq!(red.target(n).unwrap().contains(&e), lang.contains(&x).unwrap());
            }
        }
    }
}

#[test]
fn disjoint_union_of_extremes() {
    let x = BitString::from_bits(vec![true, false]);
    let du = disjoint_union_oracle(&LanguageOracle::full());
    assert!(du.contains(&x.prepend(true)).unwrap());
    assert!(!du.contains(&x.prepend(false)).unwrap());
}
