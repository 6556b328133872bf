//! Scenario configuration: the who/when/where/how of an experiment.
//!
//! Scenarios are TOML documents with top-level sections `context`, `agents`,
//! `clock`, `run`, `backend` and `metrics`. See `docs/scenario-format.md` for
//! the full grammar.

mod clock;
mod generate;
mod validate;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::analytics::MetricSpec;
use crate::llm::BackendSettings;

pub use clock::{Anniversary, SimClock, Timestamp, TimestampParseError};
pub use generate::{generate_formative_ages, generate_traits, randomize_characteristics};
pub use validate::{validate_scenario, ValidationReport, Violation};

pub const FORMAT_VERSION: u32 = 1;
pub const TRAIT_MIN: u32 = 1;
pub const TRAIT_MAX: u32 = 10;
pub const FORMATIVE_AGE_MIN: u32 = 5;
pub const FORMATIVE_AGE_MAX: u32 = 40;
pub const FORMATIVE_AGE_COUNT: usize = 5;

/// Big Five levels, each an integer in `1..=10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraitVector {
    pub extraversion: u32,
    pub neuroticism: u32,
    pub openness: u32,
    pub conscientiousness: u32,
    pub agreeableness: u32,
}

impl TraitVector {
    pub const NAMES: [&'static str; 5] = [
        "extraversion",
        "neuroticism",
        "openness",
        "conscientiousness",
        "agreeableness",
    ];

    pub fn new(values: [u32; 5]) -> Self {
        let [extraversion, neuroticism, openness, conscientiousness, agreeableness] = values;
        Self {
            extraversion,
            neuroticism,
            openness,
            conscientiousness,
            agreeableness,
        }
    }

    /// Values in extraversion, neuroticism, openness, conscientiousness,
    /// agreeableness order.
    pub fn values(&self) -> [u32; 5] {
        [
            self.extraversion,
            self.neuroticism,
            self.openness,
            self.conscientiousness,
            self.agreeableness,
        ]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, u32)> {
        Self::NAMES.into_iter().zip(self.values())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentProfile {
    pub name: String,
    pub gender: String,
    pub goal: String,
    pub context: String,
    pub traits: TraitVector,
    pub formative_ages: Vec<u32>,
}

impl AgentProfile {
    /// The agent's age at the start of the simulation: its last formative age.
    pub fn current_age(&self) -> u32 {
        self.formative_ages.iter().copied().max().unwrap_or(0)
    }
}

/// The environment description every agent shares.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharedContext {
    /// Completes "There is a ..." to state that the environment exists,
    /// e.g. `social media platform called ConnectNet`.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub environment: String,
    pub statements: Vec<String>,
    /// Filled in by [`crate::engine::summarize_context`] before agents are built.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub summary: String,
}

impl SharedContext {
    pub fn existence_statement(&self) -> Option<String> {
        let env = self.environment.trim();
        (!env.is_empty()).then(|| format!("There is a {env}."))
    }
}

fn default_embedding_dim() -> usize {
    64
}

fn default_retrieval_k() -> usize {
    8
}

fn default_similarity_weight() -> f64 {
    1.0
}

fn default_recency_tau() -> f64 {
    86_400.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_default_dim(v: &usize) -> bool {
    *v == default_embedding_dim()
}

fn is_default_k(v: &usize) -> bool {
    *v == default_retrieval_k()
}

fn is_default_weight(v: &f64) -> bool {
    *v == default_similarity_weight()
}

fn is_default_tau(v: &f64) -> bool {
    *v == default_recency_tau()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub rounds: u32,
    #[serde(serialize_with = "ser_seed", deserialize_with = "de_seed")]
    pub seed: u64,
    #[serde(default = "default_embedding_dim", skip_serializing_if = "is_default_dim")]
    pub embedding_dim: usize,
    /// Memories retrieved per prompt.
    #[serde(default = "default_retrieval_k", skip_serializing_if = "is_default_k")]
    pub retrieval_k: usize,
    /// Weight of similarity against recency in retrieval scoring.
    #[serde(default = "default_similarity_weight", skip_serializing_if = "is_default_weight")]
    pub similarity_weight: f64,
    #[serde(default = "default_recency_tau", skip_serializing_if = "is_default_tau")]
    pub recency_tau_seconds: f64,
    /// Regenerate every agent's traits and formative ages from `seed` before
    /// the run.
    #[serde(default, skip_serializing_if = "is_false")]
    pub randomize_characteristics: bool,
}

impl RunSettings {
    pub fn new(rounds: u32, seed: u64) -> Self {
        Self {
            rounds,
            seed,
            embedding_dim: default_embedding_dim(),
            retrieval_k: default_retrieval_k(),
            similarity_weight: default_similarity_weight(),
            recency_tau_seconds: default_recency_tau(),
            randomize_characteristics: false,
        }
    }
}

// TOML integers are signed 64-bit, so seeds above i64::MAX travel as strings.
fn ser_seed<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
    match i64::try_from(*seed) {
        Ok(v) => s.serialize_i64(v),
        Err(_) => s.collect_str(seed),
    }
}

fn de_seed<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Str(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(v) => u64::try_from(v).map_err(|_| serde::de::Error::custom("seed must be non-negative")),
        Raw::Str(s) => s
            .parse()
            .map_err(|_| serde::de::Error::custom(format!("invalid seed {s:?}"))),
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub format_version: u32,
    pub name: String,
    pub context: SharedContext,
    pub clock: SimClock,
    pub run: RunSettings,
    pub backend: BackendSettings,
    pub agents: Vec<AgentProfile>,
    #[serde(default)]
    pub metrics: Vec<MetricSpec>,
}

impl ScenarioConfig {
    pub fn agent_names(&self) -> Vec<&str> {
        self.agents.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn agent(&self, name: &str) -> Option<&AgentProfile> {
        self.agents.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(ValidationReport),
    #[error("cannot serialize scenario: {0}")]
    Serialize(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|span| line_col(text, span.start)).unwrap_or((1, 1));
        ScenarioError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let report = validate_scenario(&config);
    if report.is_valid() {
        Ok(config)
    } else {
        Err(ScenarioError::Invalid(report))
    }
}

pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn serialize_scenario(config: &ScenarioConfig) -> Result<String, ScenarioError> {
    toml::to_string_pretty(config).map_err(|e| ScenarioError::Serialize(e.to_string()))
}

/// 1-based line and column of a byte offset.
pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let prefix = &text[..offset.min(text.len())];
    let line = prefix.matches('\n').count() + 1;
    let column = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
