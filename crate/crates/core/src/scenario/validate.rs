use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{
    ScenarioConfig, FORMATIVE_AGE_COUNT, FORMATIVE_AGE_MAX, FORMATIVE_AGE_MIN, FORMAT_VERSION, TRAIT_MAX, TRAIT_MIN,
};

/// One broken constraint, addressed by a field path such as
/// `agents[2].traits.openness`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn is_safe_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !name.starts_with('.')
}

/// Collect every constraint violation in `config`.
pub fn validate_scenario(config: &ScenarioConfig) -> ValidationReport {
    let mut v = Vec::new();

    if config.format_version != FORMAT_VERSION {
        v.push(Violation::new(
            "format_version",
            format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                config.format_version
            ),
        ));
    }
    if !is_safe_name(&config.name) {
        v.push(Violation::new(
            "name",
            "must be non-empty and use only letters, digits, '-', '_' or '.'",
        ));
    }

    if config.context.statements.is_empty() {
        v.push(Violation::new(
            "context.statements",
            "at least one statement is required",
        ));
    }
    for (i, s) in config.context.statements.iter().enumerate() {
        if s.trim().is_empty() {
            v.push(Violation::new(format!("context.statements[{i}]"), "statement is empty"));
        }
    }

    if config.clock.round_step_seconds == 0 {
        v.push(Violation::new("clock.round_step_seconds", "must be greater than 0"));
    }

    let run = &config.run;
    if run.rounds == 0 {
        v.push(Violation::new("run.rounds", "must be at least 1"));
    }
    if run.embedding_dim == 0 {
        v.push(Violation::new("run.embedding_dim", "must be at least 1"));
    }
    if run.retrieval_k == 0 {
        v.push(Violation::new("run.retrieval_k", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&run.similarity_weight) {
        v.push(Violation::new("run.similarity_weight", "must be within [0, 1]"));
    }
    if !(run.recency_tau_seconds > 0.0 && run.recency_tau_seconds.is_finite()) {
        v.push(Violation::new("run.recency_tau_seconds", "must be a positive number"));
    }

    for (path, message) in config.backend.violations() {
        v.push(Violation::new(format!("backend.{path}"), message));
    }

    if config.agents.is_empty() {
        v.push(Violation::new("agents", "at least one agent is required"));
    }
    let mut seen = HashSet::new();
    for (i, agent) in config.agents.iter().enumerate() {
        let at = |field: &str| format!("agents[{i}].{field}");
        if agent.name.trim().is_empty() {
            v.push(Violation::new(at("name"), "name is empty"));
        } else if !seen.insert(agent.name.as_str()) {
            v.push(Violation::new(
                at("name"),
                format!("duplicate agent name {:?}", agent.name),
            ));
        }
        if agent.goal.trim().is_empty() {
            v.push(Violation::new(at("goal"), "goal is empty"));
        }
        if agent.context.trim().is_empty() {
            v.push(Violation::new(at("context"), "context is empty"));
        }
        for (trait_name, value) in agent.traits.named() {
            if !(TRAIT_MIN..=TRAIT_MAX).contains(&value) {
                v.push(Violation::new(
                    at(&format!("traits.{trait_name}")),
                    format!("{value} is outside [{TRAIT_MIN}, {TRAIT_MAX}]"),
                ));
            }
        }
        let ages = &agent.formative_ages;
        if ages.len() != FORMATIVE_AGE_COUNT {
            v.push(Violation::new(
                at("formative_ages"),
                format!("expected {FORMATIVE_AGE_COUNT} ages, found {}", ages.len()),
            ));
        }
        for (j, age) in ages.iter().enumerate() {
            if !(FORMATIVE_AGE_MIN..=FORMATIVE_AGE_MAX).contains(age) {
                v.push(Violation::new(
                    at(&format!("formative_ages[{j}]")),
                    format!("{age} is outside [{FORMATIVE_AGE_MIN}, {FORMATIVE_AGE_MAX}]"),
                ));
            }
        }
        if ages.windows(2).any(|w| w[0] > w[1]) {
            v.push(Violation::new(
                at("formative_ages"),
                "ages must be sorted non-decreasing",
            ));
        }
        if let Some(&last) = ages.iter().max() {
            if config.clock.formative_timestamp(last) >= config.clock.start {
                v.push(Violation::new(
                    at("formative_ages"),
                    format!(
                        "episode at age {last} would be dated {}, not before clock.start",
                        config.clock.formative_timestamp(last)
                    ),
                ));
            }
        }
    }

    let names: Vec<&str> = config.agent_names();
    let mut metric_names = HashSet::new();
    for (i, metric) in config.metrics.iter().enumerate() {
        if !metric_names.insert(metric.name.as_str()) {
            v.push(Violation::new(
                format!("metrics[{i}].name"),
                format!("duplicate metric name {:?}", metric.name),
            ));
        }
        for (path, message) in metric.violations(&names) {
            v.push(Violation::new(format!("metrics[{i}].{path}"), message));
        }
    }

    ValidationReport { violations: v }
}
