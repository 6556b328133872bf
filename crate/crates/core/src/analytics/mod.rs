//! Per-round metrics and the multi-run reliability harness.

mod multi;
mod reference;
mod stats;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::engine::{AgentState, ResolvedEvent};
use crate::llm::{Backend, BackendSettings, CompletionRequest, LlmError};
use crate::memory::RetrievalParams;
use crate::scenario::Timestamp;
use crate::templates;

pub use multi::{run_many, summarize_runs, MultiRunSummary, RunFailure, RunOutcome};
pub use reference::{split_reference, ReferenceDataset, ReferenceError, ReferenceRecord};
pub use stats::{
    aggregate, compare, ComparisonReport, MetricComparison, MetricStat, MetricSummary, RunStatistics, StatsError,
    Tolerances,
};

pub const ANY: &str = "*";
/// Attempts per opinion sample before it is recorded as missing.
pub const OPINION_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// How the subject feels about the target, 0 (strongly negative) to 9.
    Opinion,
    /// Cumulative number of events by the subject whose narrative names the
    /// target.
    EventCount,
}

fn any() -> String {
    ANY.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub name: String,
    pub kind: MetricKind,
    #[serde(default = "any")]
    pub subject: String,
    #[serde(default = "any")]
    pub target: String,
    /// Opinion question; `{subject}` and `{target}` are substituted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_template: Option<String>,
}

impl MetricSpec {
    pub fn violations(&self, agents: &[&str]) -> Vec<(String, String)> {
        let mut v = Vec::new();
        if self.name.trim().is_empty() || self.name.contains(':') {
            v.push(("name".into(), "must be non-empty and must not contain ':'".into()));
        }
        for (field, value) in [("subject", &self.subject), ("target", &self.target)] {
            if value != ANY && !agents.contains(&value.as_str()) {
                v.push((field.into(), format!("{value:?} is neither \"*\" nor an agent name")));
            }
        }
        match self.kind {
            MetricKind::Opinion => {
                if self.subject != ANY && self.subject == self.target {
                    v.push((
                        "target".into(),
                        "an opinion needs a target other than the subject".into(),
                    ));
                }
                if self.question_template.as_ref().is_some_and(|t| t.trim().is_empty()) {
                    v.push(("question_template".into(), "template is empty".into()));
                }
            }
            MetricKind::EventCount => {
                if self.question_template.is_some() {
                    v.push(("question_template".into(), "only opinion metrics ask questions".into()));
                }
            }
        }
        v
    }

    /// Concrete (subject, target) pairs this metric samples, in agent order.
    pub fn pairs(&self, agents: &[String]) -> Vec<(String, String)> {
        match self.kind {
            MetricKind::EventCount => vec![(self.subject.clone(), self.target.clone())],
            MetricKind::Opinion => {
                let pick = |sel: &str| -> Vec<String> {
                    if sel == ANY {
                        agents.to_vec()
                    } else {
                        vec![sel.to_string()]
                    }
                };
                let targets = pick(&self.target);
                let mut out = Vec::new();
                for s in pick(&self.subject) {
                    out.extend(targets.iter().filter(|t| **t != s).map(|t| (s.clone(), t.clone())));
                }
                out
            }
        }
    }

    /// Name under which a pair's values are aggregated: the metric name when
    /// the metric has a single pair, `name:subject:target` otherwise.
    pub fn stat_key(&self, subject: &str, target: &str) -> String {
        let single = self.kind == MetricKind::EventCount || (self.subject != ANY && self.target != ANY);
        if single {
            self.name.clone()
        } else {
            format!("{}:{subject}:{target}", self.name)
        }
    }

    pub fn question(&self) -> &str {
        self.question_template
            .as_deref()
            .unwrap_or(templates::DEFAULT_OPINION_QUESTION)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub metric: String,
    pub round: u32,
    pub subject: String,
    pub target: String,
    /// Opinion 0..=9 or a count; 0 when `missing`.
    pub value: f64,
    pub missing: bool,
}

impl MetricSample {
    pub fn key(&self, spec: &MetricSpec) -> String {
        spec.stat_key(&self.subject, &self.target)
    }
}

/// Read an opinion reply: optional leading whitespace, then exactly one
/// ASCII digit that is not followed by another digit. Anything after that
/// digit is ignored, so `" 9 - deeply admires"` reads as 9 and `"10"` is
/// rejected.
pub fn parse_opinion(reply: &str) -> Option<u8> {
    let mut chars = reply.trim_start().chars();
    let first = chars.next()?.to_digit(10)?;
    if chars.next().is_some_and(|c| c.is_ascii_digit()) {
        return None;
    }
    Some(first as u8)
}

/// Ask `subject` for its opinion of `target`. Unreadable replies are re-asked
/// until [`OPINION_ATTEMPTS`] calls have been made, then the sample is
/// marked missing.
#[allow(clippy::too_many_arguments)]
pub fn sample_opinion(
    spec: &MetricSpec,
    subject: &AgentState,
    target: &str,
    backend: &dyn Backend,
    settings: &BackendSettings,
    round: u32,
    now: Timestamp,
    k: usize,
    params: RetrievalParams,
) -> Result<MetricSample, LlmError> {
    assert_ne!(subject.profile.name, target, "opinion subject and target must differ");
    let question = spec.question();
    let memories: Vec<String> = subject
        .memory
        .retrieve_with(&format!("{target} {question}"), k, now, params)
        .iter()
        .map(|r| r.entry.render())
        .collect();
    let (system, user) = templates::opinion_question(question, &subject.profile.name, target, &memories);

    let mut sample = MetricSample {
        metric: spec.name.clone(),
        round,
        subject: subject.profile.name.clone(),
        target: target.to_string(),
        value: 0.0,
        missing: true,
    };
    for attempt in 0..OPINION_ATTEMPTS {
        let mut prompt = user.clone();
        if attempt > 0 {
            prompt.push_str("Your previous reply could not be read. Reply with one digit from 0 to 9.\n");
        }
        let reply = backend.complete(&CompletionRequest::new(
            settings,
            templates::TAG_OPINION,
            &system,
            prompt,
        ))?;
        if let Some(v) = parse_opinion(&reply) {
            sample.value = f64::from(v);
            sample.missing = false;
            break;
        }
    }
    Ok(sample)
}

/// Events so far by `spec.subject` (any actor for `*`) whose narrative names
/// `spec.target` as a whole word (any narrative for `*`).
pub fn count_events(spec: &MetricSpec, events: &[ResolvedEvent], round: u32) -> MetricSample {
    let mention = (spec.target != ANY)
        .then(|| Regex::new(&format!(r"\b{}\b", regex::escape(&spec.target))).expect("escaped name"));
    let count = events
        .iter()
        .filter(|e| spec.subject == ANY || e.actor == spec.subject)
        .filter(|e| mention.as_ref().is_none_or(|re| re.is_match(&e.narrative)))
        .count();
    MetricSample {
        metric: spec.name.clone(),
        round,
        subject: spec.subject.clone(),
        target: spec.target.clone(),
        value: count as f64,
        missing: false,
    }
}

/// Columnar export: `metric,run,round,subject,target,value,missing`, RFC 4180
/// quoting.
pub fn metrics_csv<'a>(runs: impl IntoIterator<Item = (usize, &'a [MetricSample])>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "run", "round", "subject", "target", "value", "missing"])
        .expect("in-memory write");
    for (run, samples) in runs {
        for s in samples {
            let value = if s.missing {
                String::new()
            } else {
                format!("{}", s.value)
            };
            w.write_record([
                s.metric.as_str(),
                &run.to_string(),
                &s.round.to_string(),
                &s.subject,
                &s.target,
                &value,
                if s.missing { "true" } else { "false" },
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
