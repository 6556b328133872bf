//! Agent runtime and game master loop.

mod agent;
mod episode;
mod gm;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::analytics::{MetricSample, MetricSpec};
use crate::llm::{LlmError, TranscriptEntry};
use crate::memory::{MemoryError, MemoryStore, RetrievalParams};
use crate::scenario::{AgentProfile, RunSettings, Timestamp};

pub use agent::agent_act;
pub use episode::{config_digest, run_episode};
pub use gm::{gm_resolve, route_observations, summarize_context, Visibility};

pub const LOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub profile: AgentProfile,
    pub memory: MemoryStore,
    pub current_age: u32,
}

impl AgentState {
    pub fn new(profile: AgentProfile, memory: MemoryStore) -> Self {
        let current_age = profile.current_age();
        Self {
            profile,
            memory,
            current_age,
        }
    }
}

/// What an agent means to do, in its own words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionIntent {
    pub actor: String,
    pub round: u32,
    pub timestamp: Timestamp,
    pub text: String,
}

/// The game master's account of what an intent led to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedEvent {
    pub timestamp: Timestamp,
    pub round: u32,
    pub actor: String,
    pub intent: String,
    pub narrative: String,
    /// What each agent perceives, keyed by agent name in scenario order.
    pub observations: IndexMap<String, String>,
}

impl ResolvedEvent {
    /// `Actor -- narrative`, the form stored in memories.
    pub fn headline(&self) -> String {
        format!("{} -- {}", self.actor, self.narrative)
    }
}

/// Everything a run produced. Serialized as JSON with a fixed field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub format_version: u32,
    pub template_version: String,
    pub scenario_name: String,
    pub config_digest: String,
    pub seed: u64,
    pub start: Timestamp,
    pub rounds: u32,
    pub agents: Vec<String>,
    pub shared_summary: String,
    pub metric_specs: Vec<MetricSpec>,
    pub events: Vec<ResolvedEvent>,
    pub gm_memory: MemoryStore,
    pub agent_memories: IndexMap<String, MemoryStore>,
    pub completion_transcript: Vec<TranscriptEntry>,
    pub metrics: Vec<MetricSample>,
    /// Set on partial logs written after a failed run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EpisodeLog {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("episode logs always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Observations routed to `agent`, in event order.
    pub fn observations_of<'a>(&'a self, agent: &'a str) -> impl Iterator<Item = (&'a ResolvedEvent, &'a str)> + 'a {
        self.events
            .iter()
            .filter_map(move |e| e.observations.get(agent).map(|o| (e, o.as_str())))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

/// A failed run, with the log up to the point of failure.
#[derive(Debug, thiserror::Error)]
#[error("episode aborted: {source}")]
pub struct EpisodeError {
    #[source]
    pub source: EngineError,
    pub partial: Box<EpisodeLog>,
}

/// Retrieval settings shared by every prompt in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalConfig {
    pub k: usize,
    pub params: RetrievalParams,
}

impl RetrievalConfig {
    pub fn from_run(run: &RunSettings) -> Self {
        Self {
            k: run.retrieval_k,
            params: RetrievalParams {
                similarity_weight: run.similarity_weight,
                recency_tau_seconds: run.recency_tau_seconds,
            },
        }
    }
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: 8,
            params: RetrievalParams::default(),
        }
    }
}
