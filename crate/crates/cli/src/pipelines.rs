//! The subcommands: each reads a manifest and writes one output directory.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use winnowgale_core::compile::ReductionMode;
use winnowgale_core::compile::{
    block_factor, compile_family, compile_gale, compile_strong, flat_prefix_len, growth_exponent, run_length,
    strong_closed_form, CompileError, CompilerParams, ConceptReduction, LengthRun,
};
use winnowgale_core::gale::{combine_and_approximate, FlatGale, SGale};
use winnowgale_core::learn::{
    adversarial_sequence, subset_candidate, teach, winnow_bound, winnow_candidate, MistakeLog, MonotoneDisjunction,
    SubsetConcept, UnionLearner, Winnow,
};
use winnowgale_core::rational::{int, log2, to_f64, two_pow_neg};
use winnowgale_core::reductions::{
    a_n_bound, build_a_n, census_members, conjunctive_to_concept, disjunctive_to_concept, h_x_log_bound,
    synthesize_scenario, turing_to_concept, LiteralBudget, ReductionError, ScenarioKind, SetScenario,
    SyntheticScenario, TuringReduction, TuringScenario,
};
use winnowgale_core::rng;
use winnowgale_core::seqcore::{
    characteristic_prefix, check_density_bound, count_up_to, density_census_with_cap, strings_up_to, BitString,
    LanguageOracle, DEFAULT_LENGTH_CAP,
};

use crate::manifest::{Command, LearnerKind, ModeSpec, RunManifest};
use crate::output::{self, exact, flag, float, OutputDir};
use crate::{RunError, UsageError};

/// What a run found.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub schema_version: u32,
    pub subcommand: &'static str,
    pub seed: u64,
    pub ok: bool,
    pub checks: BTreeMap<String, bool>,
    pub notes: BTreeMap<String, String>,
}

impl RunOutcome {
    fn new(command: Command, manifest: &RunManifest) -> Self {
        Self {
            schema_version: crate::manifest::SCHEMA_VERSION,
            subcommand: command.name(),
            seed: manifest.seed,
            ok: true,
            checks: BTreeMap::new(),
            notes: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.ok &= ok;
        self.checks.insert(name.into(), ok);
    }

    fn note(&mut self, name: impl Into<String>, value: impl ToString) {
        self.notes.insert(name.into(), value.to_string());
    }
}

fn runtime(e: impl Into<anyhow::Error>) -> RunError {
    RunError::Runtime(e.into())
}

fn from_reduction(e: ReductionError) -> RunError {
    match e {
        ReductionError::SizeBound { .. }
        | ReductionError::QueryBound { .. }
        | ReductionError::QueryLength { .. }
        | ReductionError::LengthBound { .. }
        | ReductionError::CountBound { .. }
        | ReductionError::Inconsistent(_) => RunError::Violation(e.to_string()),
        ReductionError::Parameter(p) => RunError::Usage(UsageError(p)),
        other => runtime(other),
    }
}

fn from_compile(e: CompileError) -> RunError {
    match e {
        CompileError::Parameter(p) => RunError::Usage(UsageError(p)),
        CompileError::Contract(c) => RunError::Violation(c),
        other => runtime(other),
    }
}

/// Runs `command` and writes its outputs under `out`.
pub fn execute(command: Command, manifest: &RunManifest, out: &std::path::Path) -> Result<RunOutcome, RunError> {
    manifest.check_command(command)?;
    manifest.validate()?;
    let mut dir = OutputDir::create(out).map_err(RunError::Runtime)?;
    let mut outcome = RunOutcome::new(command, manifest);
    match command {
        Command::Learn => learn(manifest, &mut dir, &mut outcome)?,
        Command::Gale => {
            let kind = manifest
                .scenario
                .kind
                .ok_or_else(|| UsageError("field `scenario.kind`: required for `gale`".into()))?;
            gale(manifest, kind, false, &mut dir, &mut outcome)?
        }
        Command::Expand => expand(manifest, &mut dir, &mut outcome)?,
        Command::Census => census(manifest, &mut dir, &mut outcome)?,
        Command::DemoDisjunctive => gale(manifest, ScenarioKind::Disjunctive, true, &mut dir, &mut outcome)?,
        Command::DemoConjunctive => gale(manifest, ScenarioKind::Conjunctive, true, &mut dir, &mut outcome)?,
        Command::DemoTuring => {
            expand(manifest, &mut dir, &mut outcome)?;
            gale(manifest, ScenarioKind::Turing, true, &mut dir, &mut outcome)?
        }
    }
    dir.json("run.json", &outcome).map_err(RunError::Runtime)?;
    Ok(outcome)
}

fn timing(manifest: &RunManifest, start: Instant) -> String {
    if manifest.record_timing {
        start.elapsed().as_millis().to_string()
    } else {
        String::new()
    }
}

#[derive(Debug, Clone)]
struct LearnRow {
    run_id: usize,
    universe: u64,
    k: u64,
    examples: usize,
    mistakes: usize,
    negative_mistakes: usize,
    bound: Option<u64>,
    ok: bool,
    log: MistakeLog,
    runtime: String,
}

fn learn(manifest: &RunManifest, dir: &mut OutputDir, outcome: &mut RunOutcome) -> Result<(), RunError> {
    let kind = manifest.learner.kind.unwrap_or(LearnerKind::Winnow);
    let section = &manifest.learn;
    let rows: Vec<LearnRow> = match kind {
        LearnerKind::Winnow => {
            let alpha = match &manifest.learner.alpha {
                Some(a) => crate::manifest::parse_rational_field("learner.alpha", a)?,
                None => int(2),
            };
            let theta = manifest
                .learner
                .theta
                .as_ref()
                .map(|t| crate::manifest::parse_rational_field("learner.theta", t))
                .transpose()?;
            let cells: Vec<(u64, u64, usize)> = section
                .universes
                .iter()
                .flat_map(|&n| {
                    section
                        .ks
                        .iter()
                        .filter(move |&&k| k <= n)
                        .flat_map(move |&k| (0..section.runs).map(move |r| (n, k, r)))
                })
                .collect();
            cells
                .par_iter()
                .enumerate()
                .map(|(run_id, &(n, k, r))| {
                    let start = Instant::now();
                    let mut g = rng::rng(rng::derive(manifest.seed, &[0x1EA, n, k, r as u64]));
                    let vars = rand::seq::index::sample(&mut g, n as usize, k as usize)
                        .into_iter()
                        .map(|i| i as u64)
                        .collect();
                    let target = MonotoneDisjunction::new(n, vars)?;
                    let theta = theta.clone().unwrap_or_else(|| BigRational::new(n.into(), 2.into()));
                    let certified = alpha == int(2) && theta == BigRational::new(n.into(), 2.into());
                    let learner = Winnow::new(n, alpha.clone(), theta)?;
                    let bound = winnow_bound(k, n);
                    let budget = section.budget.unwrap_or(2 * bound as usize + 20);
                    let seq = adversarial_sequence(&target, &learner, budget, section.pool, &mut g, |g| {
                        winnow_candidate(g, n, &target)
                    })?;
                    let mut learner = learner;
                    let log = teach(&mut learner, &target, &seq)?;
                    let mistakes = log.mistakes();
                    Ok(LearnRow {
                        run_id,
                        universe: n,
                        k,
                        examples: seq.len(),
                        mistakes,
                        negative_mistakes: log.mistakes_on_negatives(),
                        bound: certified.then_some(bound),
                        ok: !certified || mistakes as u64 <= bound,
                        log,
                        runtime: timing(manifest, start),
                    })
                })
                .collect::<Result<Vec<_>, winnowgale_core::learn::LearnError>>()
                .map_err(runtime)?
        }
        LearnerKind::Union => {
            let universe: Vec<BitString> = strings_up_to(section.universe_len.min(DEFAULT_LENGTH_CAP)).collect();
            let cells: Vec<(usize, usize)> = section
                .target_sizes
                .iter()
                .filter(|&&x| x <= universe.len())
                .flat_map(|&x| (0..section.runs).map(move |r| (x, r)))
                .collect();
            cells
                .par_iter()
                .enumerate()
                .map(|(run_id, &(size, r))| {
                    let start = Instant::now();
                    let mut g = rng::rng(rng::derive(manifest.seed, &[0x0A1, size as u64, r as u64]));
                    let picks = rand::seq::index::sample(&mut g, universe.len(), size);
                    let members: Vec<BitString> = picks.into_iter().map(|i| universe[i].clone()).collect();
                    let target = SubsetConcept::new(members.iter().cloned().collect());
                    let budget = section.budget.unwrap_or(2 * size + 20);
                    let max = section.max_example_size;
                    let learner = UnionLearner::new();
                    let seq = adversarial_sequence(&target, &learner, budget, section.pool, &mut g, |g| {
                        if g.gen_bool(0.5) {
                            subset_candidate(g, &members, max)
                        } else {
                            subset_candidate(g, &universe, max)
                        }
                    })?;
                    let mut learner = learner;
                    let log = teach(&mut learner, &target, &seq)?;
                    let mistakes = log.mistakes();
                    let negative_mistakes = log.mistakes_on_negatives();
                    Ok(LearnRow {
                        run_id,
                        universe: universe.len() as u64,
                        k: size as u64,
                        examples: seq.len(),
                        mistakes,
                        negative_mistakes,
                        bound: Some(size as u64),
                        ok: mistakes <= size && negative_mistakes == 0,
                        log,
                        runtime: timing(manifest, start),
                    })
                })
                .collect::<Result<Vec<_>, winnowgale_core::learn::LearnError>>()
                .map_err(runtime)?
        }
    };

    let mut header = vec!["run_id", "universe", "k"];
    header.extend(output::MISTAKE_HEADER);
    let log_rows = rows.iter().flat_map(|row| {
        output::mistake_rows(&row.log).map(move |mut r| {
            let mut full = vec![row.run_id.to_string(), row.universe.to_string(), row.k.to_string()];
            full.append(&mut r);
            full
        })
    });
    dir.csv("mistakes.csv", &header, log_rows).map_err(RunError::Runtime)?;
    dir.csv(
        "summary.csv",
        &[
            "run_id",
            "learner",
            "universe",
            "k",
            "examples",
            "mistakes",
            "negative_mistakes",
            "bound",
            "ok",
            "runtime_ms",
        ],
        rows.iter().map(|r| {
            vec![
                r.run_id.to_string(),
                format!("{kind:?}").to_lowercase(),
                r.universe.to_string(),
                r.k.to_string(),
                r.examples.to_string(),
                r.mistakes.to_string(),
                r.negative_mistakes.to_string(),
                r.bound.map_or(String::new(), |b| b.to_string()),
                flag(r.ok).to_string(),
                r.runtime.clone(),
            ]
        }),
    )
    .map_err(RunError::Runtime)?;
    outcome.note("runs", rows.len());
    outcome.note("max_mistakes", rows.iter().map(|r| r.mistakes).max().unwrap_or(0));
    outcome.note("uncertified_runs", rows.iter().filter(|r| r.bound.is_none()).count());
    outcome.check("mistake_bounds", rows.iter().all(|r| r.ok));
    Ok(())
}

/// One row of a gale pipeline summary.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub pipeline: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: u64,
    #[serde(rename = "N0")]
    pub n0: u64,
    pub universe: u64,
    pub k: u64,
    pub literal_budget: f64,
    pub good: bool,
    pub mistakes: u64,
    pub bound: u64,
    pub final_log2: f64,
    pub final_exact: String,
    pub lower_bound: f64,
    pub delta: f64,
    pub identity_ok: bool,
    pub certificate_ok: bool,
    pub delta_ok: bool,
    pub labels_consistent: bool,
    pub bound_ok: bool,
    pub status: String,
    pub runtime_ms: String,
}

pub const SUMMARY_HEADER: [&str; 21] = [
    "pipeline",
    "n",
    "N",
    "N0",
    "universe",
    "k",
    "literal_budget",
    "good",
    "mistakes",
    "bound",
    "final_log2",
    "final_exact",
    "lower_bound",
    "delta",
    "identity_ok",
    "certificate_ok",
    "delta_ok",
    "labels_consistent",
    "bound_ok",
    "status",
    "runtime_ms",
];

impl SummaryRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.pipeline.clone(),
            self.n.to_string(),
            self.big_n.to_string(),
            self.n0.to_string(),
            self.universe.to_string(),
            self.k.to_string(),
            float(self.literal_budget),
            flag(self.good).into(),
            self.mistakes.to_string(),
            self.bound.to_string(),
            float(self.final_log2),
            self.final_exact.clone(),
            float(self.lower_bound),
            float(self.delta),
            flag(self.identity_ok).into(),
            flag(self.certificate_ok).into(),
            flag(self.delta_ok).into(),
            flag(self.labels_consistent).into(),
            flag(self.bound_ok).into(),
            self.status.clone(),
            self.runtime_ms.clone(),
        ]
    }

    /// Whether the row's asserted identities and bounds held.
    pub fn passed(&self) -> bool {
        self.status != "violated"
    }

    fn from_run(
        pipeline: &str,
        run: &LengthRun,
        universe: u64,
        k: u64,
        budget: f64,
        bound: u64,
        runtime_ms: String,
    ) -> Self {
        let m = run.mistakes();
        let bound_ok = m <= bound;
        let status = if !run.good {
            "skipped"
        } else if run.identity_ok && run.certificate.meets_lower_bound && run.labels_consistent && bound_ok {
            "ok"
        } else {
            "violated"
        };
        let capital = run.trace.final_capital().expect("non-empty trace");
        SummaryRow {
            pipeline: pipeline.into(),
            n: run.params.n,
            big_n: run.params.big_n,
            n0: run.params.n0,
            universe,
            k,
            literal_budget: budget,
            good: run.good,
            mistakes: m,
            bound,
            final_log2: run.certificate.final_log2,
            final_exact: exact(capital),
            lower_bound: run.certificate.lower_bound,
            delta: run.certificate.delta,
            identity_ok: run.identity_ok,
            certificate_ok: run.certificate.meets_lower_bound,
            delta_ok: run.certificate.exceeds_delta,
            labels_consistent: run.labels_consistent,
            bound_ok,
            status: status.into(),
            runtime_ms,
        }
    }
}

enum Built {
    Disjunctive(SetScenario),
    Conjunctive(SetScenario),
    Turing(Arc<TuringScenario>),
}

fn build_scenario(manifest: &RunManifest, kind: ScenarioKind, synthesized: bool) -> Result<Built, RunError> {
    let sc = &manifest.scenario;
    let explicit = !synthesized && (sc.reduction.is_some() || sc.oracle.is_some());
    if explicit && kind != ScenarioKind::Turing {
        let base = match synthesize_scenario(manifest.seed, kind, &sc.params).map_err(from_reduction)? {
            SyntheticScenario::Disjunctive(s) | SyntheticScenario::Conjunctive(s) => s,
            SyntheticScenario::Turing(_) => unreachable!(),
        };
        let set = SetScenario {
            seed: manifest.seed,
            f: sc.reduction.as_ref().map_or(base.f, |r| r.build()),
            s: match &sc.oracle {
                Some(o) => o.build().map_err(runtime)?,
                None => base.s,
            },
            literal_epsilon: base.literal_epsilon,
        };
        return Ok(if kind == ScenarioKind::Disjunctive { Built::Disjunctive(set) } else { Built::Conjunctive(set) });
    }
    Ok(match synthesize_scenario(manifest.seed, kind, &sc.params).map_err(from_reduction)? {
        SyntheticScenario::Disjunctive(s) => Built::Disjunctive(s),
        SyntheticScenario::Conjunctive(s) => Built::Conjunctive(s),
        SyntheticScenario::Turing(t) => Built::Turing(t),
    })
}

fn max_length(lengths: &[usize]) -> usize {
    lengths.iter().copied().max().unwrap_or(0)
}

fn gale(
    manifest: &RunManifest,
    kind: ScenarioKind,
    synthesized: bool,
    dir: &mut OutputDir,
    outcome: &mut RunOutcome,
) -> Result<(), RunError> {
    let compiler = manifest.resolve_compiler()?;
    let lengths = compiler.lengths.clone();
    let built = build_scenario(manifest, kind, synthesized)?;
    let learner = manifest.learner.kind;
    let expect_learner = |wanted: LearnerKind| -> Result<(), RunError> {
        match learner {
            Some(k) if k != wanted => {
                Err(UsageError(format!("field `learner.kind`: this pipeline uses the {wanted:?} learner, not {k:?}"))
                    .into())
            }
            _ => Ok(()),
        }
    };
    let params_for = |n: usize| CompilerParams::new(compiler.exponent.clone(), compiler.epsilon.clone(), n);
    let pipeline = format!("{kind:?}").to_lowercase();
    let (rows, traces): (Vec<SummaryRow>, Vec<(String, winnowgale_core::gale::CapitalTrace)>) = match built {
        Built::Disjunctive(set) => {
            expect_learner(LearnerKind::Winnow)?;
            let red = Arc::new(
                disjunctive_to_concept(set.f.clone(), set.s.clone(), lengths.iter().copied(), set.literal_epsilon)
                    .map_err(from_reduction)?,
            );
            let lang = red.language(max_length(&lengths)).map_err(from_reduction)?;
            let factory = {
                let red = red.clone();
                move |n: usize| Winnow::standard(red.instance(n).map_or(0, |i| i.universe.len() as u64))
            };
            let results = lengths
                .par_iter()
                .map(|&n| {
                    let start = Instant::now();
                    let gale = compile_gale(red.clone(), factory.clone(), params_for(n)?)?;
                    let run = run_length(&gale, &lang)?;
                    let inst = red.instance(n).unwrap();
                    let bound = red.mistake_bound(n).unwrap();
                    let row = SummaryRow::from_run(
                        &pipeline,
                        &run,
                        inst.universe.len() as u64,
                        inst.k(),
                        inst.literal_budget,
                        bound,
                        timing(manifest, start),
                    );
                    Ok((row, (format!("trace_n{n}.csv"), run.trace)))
                })
                .collect::<Result<Vec<_>, CompileError>>()
                .map_err(from_compile)?;
            if let Some(r) = manifest.compiler.precision {
                precision_check(manifest, &set, &compiler, r, dir, outcome)?;
            }
            results.into_iter().unzip()
        }
        Built::Conjunctive(set) => {
            expect_learner(LearnerKind::Union)?;
            let red = Arc::new(
                conjunctive_to_concept(set.f.clone(), set.s.clone(), lengths.iter().copied(), set.literal_epsilon)
                    .map_err(from_reduction)?,
            );
            let lang = red.language(max_length(&lengths)).map_err(from_reduction)?;
            let results = lengths
                .par_iter()
                .map(|&n| {
                    let start = Instant::now();
                    let gale = compile_gale(red.clone(), |_| UnionLearner::new(), params_for(n)?)?;
                    let run = run_length(&gale, &lang)?;
                    let inst = red.instance(n).unwrap();
                    let mut row = SummaryRow::from_run(
                        &pipeline,
                        &run,
                        inst.universe.len() as u64,
                        inst.k(),
                        inst.literal_budget,
                        inst.k(),
                        timing(manifest, start),
                    );
                    if run.log.mistakes_on_negatives() > 0 {
                        row.bound_ok = false;
                        row.status = "violated".into();
                    }
                    Ok((row, (format!("trace_n{n}.csv"), run.trace)))
                })
                .collect::<Result<Vec<_>, CompileError>>()
                .map_err(from_compile)?;
            results.into_iter().unzip()
        }
        Built::Turing(sc) => {
            expect_learner(LearnerKind::Winnow)?;
            if let Some(&n) = lengths.iter().find(|&&n| n > sc.max_input_len) {
                return Err(UsageError(format!(
                    "field `compiler.lengths`: {n} exceeds scenario.params.max_input_len = {}",
                    sc.max_input_len
                ))
                .into());
            }
            match manifest.scenario.mode {
                ModeSpec::Weak => turing_weak(manifest, &sc, &lengths, &compiler, &pipeline)?,
                ModeSpec::Strong => turing_strong(manifest, &sc, &lengths, &compiler, &pipeline)?,
            }
        }
    };

    for (name, trace) in &traces {
        dir.csv(name, &output::TRACE_HEADER, output::trace_rows(trace)).map_err(RunError::Runtime)?;
    }
    dir.csv("summary.csv", &SUMMARY_HEADER, rows.iter().map(SummaryRow::record)).map_err(RunError::Runtime)?;
    for row in &rows {
        outcome.check(format!("{}_n{}", row.pipeline, row.n), row.passed());
    }
    outcome.note("good_lengths", rows.iter().filter(|r| r.good).map(|r| r.n.to_string()).collect::<Vec<_>>().join(" "));
    outcome.note("epsilon", exact(&compiler.epsilon));
    outcome.note("two_to_s", exact(compiler.exponent.two_to_s()));
    Ok(())
}

type GaleOutput = (Vec<SummaryRow>, Vec<(String, winnowgale_core::gale::CapitalTrace)>);

fn turing_weak(
    manifest: &RunManifest,
    sc: &Arc<TuringScenario>,
    lengths: &[usize],
    compiler: &crate::manifest::ResolvedCompiler,
    pipeline: &str,
) -> Result<GaleOutput, RunError> {
    let delta = manifest.delta()?;
    let red: Arc<TuringReduction> = Arc::new(
        turing_to_concept(sc.clone(), ReductionMode::Weak, lengths.iter().copied(), LiteralBudget::Subexp { delta })
            .map_err(from_reduction)?,
    );
    let lang = sc.language().map_err(from_reduction)?;
    let factory = {
        let red = red.clone();
        move |n: usize| Winnow::standard(red.instance(n).map_or(0, |i| i.universe.len() as u64))
    };
    let results = lengths
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let params = CompilerParams::new(compiler.exponent.clone(), compiler.epsilon.clone(), n)?;
            let gale = compile_gale(red.clone(), factory.clone(), params)?;
            let run = run_length(&gale, &lang)?;
            let inst = red.instance(n).unwrap();
            let row = SummaryRow::from_run(
                pipeline,
                &run,
                inst.universe.len() as u64,
                inst.literals.len() as u64,
                inst.literal_budget,
                inst.mistake_bound(),
                timing(manifest, start),
            );
            Ok((row, (format!("trace_n{n}.csv"), run.trace)))
        })
        .collect::<Result<Vec<_>, CompileError>>()
        .map_err(from_compile)?;
    Ok(results.into_iter().unzip())
}

fn turing_strong(
    manifest: &RunManifest,
    sc: &Arc<TuringScenario>,
    lengths: &[usize],
    compiler: &crate::manifest::ResolvedCompiler,
    pipeline: &str,
) -> Result<GaleOutput, RunError> {
    let start = Instant::now();
    let red = Arc::new(
        turing_to_concept(sc.clone(), ReductionMode::Strong, lengths.iter().copied(), LiteralBudget::Census)
            .map_err(from_reduction)?,
    );
    let factory = {
        let red = red.clone();
        move |n: usize| Winnow::standard(red.instance(n).map_or(0, |i| i.universe.len() as u64))
    };
    let gale = compile_strong(
        red.clone(),
        factory,
        compiler.exponent.clone(),
        compiler.epsilon.clone(),
        lengths.iter().copied(),
    )
    .map_err(from_compile)?;
    let lang = sc.language().map_err(from_reduction)?;
    let total = count_up_to(max_length(lengths));
    let prefix = characteristic_prefix(&lang, total).map_err(runtime)?;
    let trace = gale.trace(&prefix).map_err(runtime)?;
    let s = compiler.exponent.s();
    let eps = to_f64(&compiler.epsilon);
    let mut rows = Vec::new();
    let mut spans = Vec::new();
    let mut block_mistakes = Vec::new();
    for &n in lengths {
        let (start_pos, len, n0) = gale.block_span(n).expect("compiled block");
        let log = gale.block_mistakes(n, &prefix).map_err(from_compile)?;
        let m = log.mistakes() as u64;
        let before = &trace.entries[start_pos as usize].capital;
        let after = &trace.entries[(start_pos + len) as usize].capital;
        let ratio = after / before;
        let identity_ok = ratio == block_factor(&compiler.exponent, &compiler.epsilon, len, n0, m);
        let lower = growth_exponent(s, eps, len, n0, m);
        let final_log2 = log2(&ratio);
        let inst = red.instance(n).unwrap();
        let labels_consistent = labels_consistent_block(red.as_ref(), n, &prefix, start_pos)?;
        let bound = inst.mistake_bound();
        let certificate_ok = final_log2 >= lower - winnowgale_core::compile::CERTIFICATE_TOLERANCE;
        let delta = (s - (1.0 / (1.0 - eps)).log2()) / 2.0;
        let ok = identity_ok && certificate_ok && labels_consistent && m <= bound;
        rows.push(SummaryRow {
            pipeline: format!("{pipeline}-strong"),
            n,
            big_n: len,
            n0,
            universe: inst.universe.len() as u64,
            k: inst.literals.len() as u64,
            literal_budget: inst.literal_budget,
            good: inst.good,
            mistakes: m,
            bound,
            final_log2,
            final_exact: exact(&ratio),
            lower_bound: lower,
            delta,
            identity_ok,
            certificate_ok,
            delta_ok: final_log2 >= delta * len as f64,
            labels_consistent,
            bound_ok: m <= bound,
            status: if ok { "ok" } else { "violated" }.into(),
            runtime_ms: String::new(),
        });
        spans.push((start_pos, len, n0));
        block_mistakes.push(m);
    }
    let final_capital = trace.final_capital().expect("non-empty trace").clone();
    let total_ok =
        final_capital == strong_closed_form(&compiler.exponent, &compiler.epsilon, total, &spans, &block_mistakes);
    let m_total: u64 = block_mistakes.iter().sum();
    rows.push(SummaryRow {
        pipeline: format!("{pipeline}-strong-total"),
        n: max_length(lengths),
        big_n: total,
        n0: total - spans.iter().map(|&(_, l, n0)| l - n0).sum::<u64>(),
        universe: 0,
        k: 0,
        literal_budget: 0.0,
        good: true,
        mistakes: m_total,
        bound: rows.iter().map(|r| r.bound).sum(),
        final_log2: log2(&final_capital),
        final_exact: exact(&final_capital),
        lower_bound: f64::NAN,
        delta: f64::NAN,
        identity_ok: total_ok,
        certificate_ok: true,
        delta_ok: false,
        labels_consistent: rows.iter().all(|r| r.labels_consistent),
        bound_ok: rows.iter().all(|r| r.bound_ok),
        status: if total_ok { "ok" } else { "violated" }.into(),
        runtime_ms: timing(manifest, start),
    });
    Ok((rows, vec![("trace_strong.csv".into(), trace)]))
}

fn labels_consistent_block(red: &TuringReduction, n: usize, prefix: &[bool], start: u64) -> Result<bool, RunError> {
    use winnowgale_core::learn::Concept;
    let target = red.target(n).expect("prepared length");
    for (i, x) in winnowgale_core::seqcore::strings_of_length(n).enumerate() {
        let e = red.example(n, &x).map_err(from_compile)?;
        if target.contains(&e) != prefix[start as usize + i] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest member index compiled explicitly for the precision check;
/// members beyond it are flat on every prefix shorter than `⌊2^(13/2)⌋`.
pub const PRECISION_MEMBERS: usize = 12;

fn precision_check(
    manifest: &RunManifest,
    set: &SetScenario,
    compiler: &crate::manifest::ResolvedCompiler,
    r: usize,
    dir: &mut OutputDir,
    outcome: &mut RunOutcome,
) -> Result<(), RunError> {
    let rows = precision_rows(manifest.seed, set, compiler, r, manifest.compiler.precision_samples)?;
    let all_ok = rows.iter().all(|row| row.ok);
    dir.csv(
        &format!("precision_r{r}.csv"),
        &["sample", "prefix_length", "approx_log2", "difference_log2", "ok"],
        rows.iter().map(|row| {
            vec![
                row.sample.to_string(),
                row.prefix_length.to_string(),
                float(row.approx_log2),
                float(row.difference_log2),
                flag(row.ok).into(),
            ]
        }),
    )
    .map_err(RunError::Runtime)?;
    outcome.check(format!("precision_r{r}"), all_ok);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionRow {
    pub sample: usize,
    pub prefix_length: usize,
    pub approx_log2: f64,
    pub difference_log2: f64,
    pub ok: bool,
}

/// Compares the `|w| + r` truncation of `Σ 2^-n d_n` with the `|w| + r + 20`
/// truncation on seeded random prefixes.
pub fn precision_rows(
    seed: u64,
    set: &SetScenario,
    compiler: &crate::manifest::ResolvedCompiler,
    r: usize,
    samples: usize,
) -> Result<Vec<PrecisionRow>, RunError> {
    let lengths = 1..=PRECISION_MEMBERS;
    let red = Arc::new(
        disjunctive_to_concept(set.f.clone(), set.s.clone(), lengths.clone(), set.literal_epsilon)
            .map_err(from_reduction)?,
    );
    let factory = {
        let red = red.clone();
        move |n: usize| Winnow::standard(red.instance(n).map_or(0, |i| i.universe.len() as u64))
    };
    let family = compile_family(red, factory, compiler.exponent.clone(), compiler.epsilon.clone(), lengths)
        .map_err(from_compile)?
        .with_tail(Arc::new(FlatGale::new(compiler.exponent.clone())))
        .map_err(runtime)?;
    let max_len = flat_prefix_len(PRECISION_MEMBERS + 1) as usize - 1;
    let tolerance = two_pow_neg(r as u64);
    (0..samples)
        .into_par_iter()
        .map(|sample| {
            let mut g = rng::rng(rng::derive(seed, &[0x9E, r as u64, sample as u64]));
            let len = g.gen_range(0..=max_len);
            let w: Vec<bool> = (0..len).map(|_| g.gen_bool(0.5)).collect();
            let approx = combine_and_approximate(&family, &w, r).map_err(runtime)?;
            let finer = family.truncated(&w, len + r + 20).map_err(runtime)?;
            let diff = if finer >= approx { &finer - &approx } else { &approx - &finer };
            Ok(PrecisionRow {
                sample,
                prefix_length: len,
                approx_log2: log2(&approx),
                difference_log2: log2(&diff),
                ok: diff <= tolerance,
            })
        })
        .collect()
}

fn expand(manifest: &RunManifest, dir: &mut OutputDir, outcome: &mut RunOutcome) -> Result<(), RunError> {
    let sc = match build_scenario(manifest, ScenarioKind::Turing, true)? {
        Built::Turing(t) => t,
        _ => unreachable!(),
    };
    let max_len = manifest.scenario.expand_len.min(sc.max_input_len);
    let a_sizes: Vec<(usize, usize, usize, usize, usize, u128)> = (0..=max_len)
        .map(|n| {
            let (q, r) = (sc.q(n), sc.r(n));
            let census = census_members(&sc.u, r)?.len();
            let a = build_a_n(&sc.u, q, r)?;
            Ok((n, q, r, census, a.len(), a_n_bound(q, census)))
        })
        .collect::<Result<_, ReductionError>>()
        .map_err(from_reduction)?;
    let rows = sc.expand_all(max_len).map_err(from_reduction)?;
    let agree = rows.iter().filter(|e| e.agrees()).count();
    let sizes_ok = rows.iter().all(|e| e.h_x.len() as u128 <= e.h_bound) && a_sizes.iter().all(|a| a.4 as u128 <= a.5);
    dir.csv(
        "expansion.csv",
        &["x", "z_count", "h_x_size", "h_x_bound", "h_x_log2_bound", "via_expansion", "brute_force", "agree"],
        rows.iter().map(|e| {
            let n = e.x.len();
            vec![
                e.x.to_string(),
                e.z_count.to_string(),
                e.h_x.len().to_string(),
                e.h_bound.to_string(),
                float(h_x_log_bound(sc.q(n), sc.r(n))),
                flag(e.via_expansion).into(),
                flag(e.brute_force).into(),
                flag(e.agrees()).into(),
            ]
        }),
    )
    .map_err(RunError::Runtime)?;
    dir.csv(
        "a_n.csv",
        &["n", "q", "r", "census", "a_n_size", "a_n_bound"],
        a_sizes.iter().map(|&(n, q, r, c, size, bound)| {
            vec![n.to_string(), q.to_string(), r.to_string(), c.to_string(), size.to_string(), bound.to_string()]
        }),
    )
    .map_err(RunError::Runtime)?;
    outcome.note("machine", sc.machine.name());
    outcome.note("inputs", rows.len());
    outcome.note("agreement_percent", float(100.0 * agree as f64 / rows.len().max(1) as f64));
    outcome.check("expansion_agreement", agree == rows.len());
    outcome.check("expansion_size_bounds", sizes_ok);
    Ok(())
}

fn census(manifest: &RunManifest, dir: &mut OutputDir, outcome: &mut RunOutcome) -> Result<(), RunError> {
    let section = &manifest.census;
    let oracle: LanguageOracle = section.oracle.build().map_err(runtime)?;
    let bound = manifest.density_bound()?;
    let records = density_census_with_cap(&oracle, section.max_len, DEFAULT_LENGTH_CAP).map_err(runtime)?;
    let good = check_density_bound(&records, &bound);
    dir.csv(
        "census.csv",
        &["length", "count", "cumulative", "compared_length", "good"],
        records.iter().map(|r| {
            let m = bound.census_length(r.length);
            vec![
                r.length.to_string(),
                r.count.to_string(),
                r.cumulative.to_string(),
                if m <= section.max_len { m.to_string() } else { String::new() },
                flag(good.contains(&r.length)).into(),
            ]
        }),
    )
    .map_err(RunError::Runtime)?;
    outcome.note("oracle", oracle.name());
    outcome.note("good_lengths", good.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "));
    if let Some(expected) = &section.expected_good {
        let expected: std::collections::BTreeSet<usize> = expected.iter().copied().collect();
        outcome.check("expected_good_lengths", expected == good);
    }
    Ok(())
}
