//! Run manifests: one TOML file describes one run.

use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use winnowgale_core::compile::{choose_epsilon, validate_epsilon};
use winnowgale_core::gale::GaleExponent;
use winnowgale_core::rational::{parse_ratio, to_f64};
use winnowgale_core::reductions::{ReductionSpec, ScenarioKind, ScenarioParams};
use winnowgale_core::seqcore::{DensityBound, OracleSpec, Poly, DEFAULT_LENGTH_CAP};

use crate::UsageError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Learn,
    Gale,
    Expand,
    Census,
    DemoDisjunctive,
    DemoConjunctive,
    DemoTuring,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Learn => "learn",
            Command::Gale => "gale",
            Command::Expand => "expand",
            Command::Census => "census",
            Command::DemoDisjunctive => "demo-disjunctive",
            Command::DemoConjunctive => "demo-conjunctive",
            Command::DemoTuring => "demo-turing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    /// When present, must agree with the subcommand on the command line.
    #[serde(default)]
    pub subcommand: Option<Command>,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Adds wall-clock columns, which makes outputs differ between runs.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub compiler: CompilerSection,
    #[serde(default)]
    pub learner: LearnerSection,
    #[serde(default)]
    pub learn: LearnSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub census: CensusSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompilerSection {
    /// `2^s` as `"p/q"`.
    pub two_to_s: String,
    /// `ε` as `"p/q"`; chosen from the exponent when absent.
    pub epsilon: Option<String>,
    pub lengths: Vec<usize>,
    /// Precision `r` for the combined gale; skipped when absent.
    pub precision: Option<usize>,
    /// Number of prefixes checked for the precision guarantee.
    pub precision_samples: usize,
}

impl Default for CompilerSection {
    fn default() -> Self {
        Self { two_to_s: "3/2".into(), epsilon: None, lengths: vec![4, 6, 8], precision: None, precision_samples: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Winnow,
    Union,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSection {
    pub kind: Option<LearnerKind>,
    /// Winnow promotion factor, `"p/q"`; the mistake bound is certified only for 2.
    pub alpha: Option<String>,
    /// Winnow threshold, `"p/q"`; defaults to `N/2`.
    pub theta: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnSection {
    pub universes: Vec<u64>,
    pub ks: Vec<u64>,
    pub runs: usize,
    /// Examples per run; defaults to twice the mistake bound plus 20.
    pub budget: Option<usize>,
    pub pool: usize,
    /// Union learner: target sizes `|X|`.
    pub target_sizes: Vec<usize>,
    /// Union learner: the universe is `{0,1}^{<=universe_len}`.
    pub universe_len: usize,
    pub max_example_size: usize,
}

impl Default for LearnSection {
    fn default() -> Self {
        Self {
            universes: vec![64, 256, 1024],
            ks: vec![0, 1, 2, 4, 8],
            runs: 34,
            budget: None,
            pool: winnowgale_core::learn::DEFAULT_POOL,
            target_sizes: vec![0, 1, 3, 5, 8],
            universe_len: 6,
            max_example_size: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    Weak,
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: Option<ScenarioKind>,
    pub mode: ModeSpec,
    /// Literal-budget exponent for weak Turing instances, `"p/q"`.
    pub delta: String,
    /// Explicit `f` for set-valued kinds; synthesized when absent.
    pub reduction: Option<ReductionSpec>,
    /// Explicit `S` for set-valued kinds; synthesized when absent.
    pub oracle: Option<OracleSpec>,
    /// Largest input length for `expand`.
    pub expand_len: usize,
    pub params: ScenarioParams,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            kind: None,
            mode: ModeSpec::Weak,
            delta: "9/10".into(),
            reduction: None,
            oracle: None,
            expand_len: 6,
            params: ScenarioParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundSpec {
    /// `|L_{<=n}| <= p(n)`
    Poly { coefficients: Vec<u64> },
    /// `|L_{<=n}| <= 2^(n^epsilon)`
    Subexp { epsilon: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusSection {
    pub oracle: OracleSpec,
    pub max_len: usize,
    pub bound: BoundSpec,
    /// When present, the run fails unless exactly these lengths are good.
    pub expected_good: Option<Vec<usize>>,
}

impl Default for CensusSection {
    fn default() -> Self {
        Self {
            oracle: OracleSpec::Tally,
            max_len: 10,
            bound: BoundSpec::Poly { coefficients: vec![1, 1] },
            expected_good: None,
        }
    }
}

/// Compiler parameters after parsing and validation.
#[derive(Debug, Clone)]
pub struct ResolvedCompiler {
    pub exponent: GaleExponent,
    pub epsilon: BigRational,
    pub lengths: Vec<usize>,
}

fn field_error(field: &str, message: impl std::fmt::Display) -> UsageError {
    UsageError(format!("field `{field}`: {message}"))
}

pub fn parse_rational_field(field: &str, text: &str) -> Result<BigRational, UsageError> {
    parse_ratio(text).map_err(|e| field_error(field, e))
}

impl RunManifest {
    pub fn from_toml(text: &str) -> Result<Self, UsageError> {
        let manifest: RunManifest = toml::from_str(text).map_err(|e| UsageError(format!("manifest: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read manifest {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| UsageError(format!("{}: {}", path.display(), e.0)))
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<(), UsageError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_error(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        self.resolve_compiler()?;
        if let Some(alpha) = &self.learner.alpha {
            parse_rational_field("learner.alpha", alpha)?;
        }
        if let Some(theta) = &self.learner.theta {
            parse_rational_field("learner.theta", theta)?;
        }
        self.delta()?;
        parse_rational_field("scenario.params.literal_epsilon", &self.scenario.params.literal_epsilon)?;
        parse_rational_field("scenario.params.s_density", &self.scenario.params.s_density)?;
        if self.scenario.expand_len > 10 {
            return Err(field_error("scenario.expand_len", "at most 10"));
        }
        self.density_bound()?;
        if self.census.max_len > DEFAULT_LENGTH_CAP {
            return Err(field_error("census.max_len", format!("at most {DEFAULT_LENGTH_CAP}")));
        }
        if self.learn.universes.contains(&0) {
            return Err(field_error("learn.universes", "universe sizes must be positive"));
        }
        Ok(())
    }

    pub fn resolve_compiler(&self) -> Result<ResolvedCompiler, UsageError> {
        let c = &self.compiler;
        let exponent = GaleExponent::new(parse_rational_field("compiler.two_to_s", &c.two_to_s)?)
            .map_err(|e| field_error("compiler.two_to_s", e))?;
        let epsilon = match &c.epsilon {
            Some(text) => {
                let eps = parse_rational_field("compiler.epsilon", text)?;
                validate_epsilon(&exponent, &eps).map_err(|e| field_error("compiler.epsilon", e))?;
                eps
            }
            None => choose_epsilon(&exponent).map_err(|e| field_error("compiler.two_to_s", e))?,
        };
        if let Some(&n) = c.lengths.iter().find(|&&n| n == 0 || n > DEFAULT_LENGTH_CAP) {
            return Err(field_error("compiler.lengths", format!("{n} is outside 1..={DEFAULT_LENGTH_CAP}")));
        }
        let mut lengths = c.lengths.clone();
        lengths.sort_unstable();
        lengths.dedup();
        Ok(ResolvedCompiler { exponent, epsilon, lengths })
    }

    pub fn delta(&self) -> Result<f64, UsageError> {
        let d = parse_rational_field("scenario.delta", &self.scenario.delta)?;
        let d = to_f64(&d);
        if !(0.0..=1.0).contains(&d) || d == 0.0 {
            return Err(field_error("scenario.delta", "must lie in (0, 1]"));
        }
        Ok(d)
    }

    pub fn density_bound(&self) -> Result<DensityBound, UsageError> {
        Ok(match &self.census.bound {
            BoundSpec::Poly { coefficients } => DensityBound::Poly(Poly(coefficients.clone())),
            BoundSpec::Subexp { epsilon } => {
                DensityBound::subexp(parse_rational_field("census.bound.epsilon", epsilon)?)
            }
        })
    }

    /// Fails when the manifest names a different subcommand.
    pub fn check_command(&self, command: Command) -> Result<(), UsageError> {
        match self.subcommand {
            Some(c) if c != command => Err(field_error(
                "subcommand",
                format!("manifest is for `{}` but `{}` was requested", c.name(), command.name()),
            )),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_manifest_uses_defaults() {
        let m = RunManifest::from_toml("schema_version = 1\nseed = 7\n").unwrap();
        assert_eq!(m.seed, 7);
        let c = m.resolve_compiler().unwrap();
        assert_eq!(c.epsilon, parse_ratio("1/4").unwrap());
        assert_eq!(c.lengths, vec![4, 6, 8]);
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(RunManifest::from_toml("schema_version = 1\n").is_err());
    }

    #[test]
    fn malformed_epsilon_is_a_usage_error() {
        let e = RunManifest::from_toml("schema_version = 1\nseed = 1\n[compiler]\nepsilon = \"0\"\n").unwrap_err();
        assert!(e.0.contains("compiler.epsilon"), "{}", e.0);
        let e = RunManifest::from_toml("schema_version = 1\nseed = 1\n[compiler]\nepsilon = \"2/4\"\n").unwrap_err();
        assert!(e.0.contains("lowest terms"), "{}", e.0);
    }

    #[test]
    fn unknown_fields_are_rejected_with_location() {
        let e = RunManifest::from_toml("schema_version = 1\nseed = 1\n[compiler]\nlenghts = [4]\n").unwrap_err();
        assert!(e.0.contains("lenghts") && e.0.contains("line"), "{}", e.0);
    }

    #[test]
    fn subcommand_must_match() {
        let m = RunManifest::from_toml("schema_version = 1\nseed = 1\nsubcommand = \"census\"\n").unwrap();
        assert!(m.check_command(Command::Census).is_ok());
        assert!(m.check_command(Command::Learn).is_err());
    }

    #[test]
    fn scenario_tables_parse() {
        let text = r#"
schema_version = 1
seed = 3
[scenario]
kind = "turing"
mode = "strong"
[scenario.params]
max_input_len = 5
machine = { kind = "adaptive-chain", q = 2 }
[census]
oracle = { kind = "good-lengths", seed = 1, max_len = 8, epsilon = "1", good = [0, 2, 4, 6, 8] }
bound = { kind = "subexp", epsilon = "1" }
"#;
        let m = RunManifest::from_toml(text).unwrap();
        assert_eq!(m.scenario.kind, Some(ScenarioKind::Turing));
        assert_eq!(m.scenario.params.max_input_len, 5);
        assert!(matches!(m.density_bound().unwrap(), DensityBound::Subexp { .. }));
    }
}
