//! Generative agent-based modeling engine.
//!
//! The crate follows the four stages of a GABM experiment:
//!
//! 1. **Conceptualization**: a [`scenario::ScenarioConfig`] records who the
//!    agents are, when and where the simulation happens and how it is run.
//! 2. **Tool selection**: [`llm`] exposes one completion interface over a
//!    chat-completion HTTP API or a deterministic scripted backend.
//! 3. **Agent and environment design**: [`memory`] builds each agent's
//!    formative memory and serves associative retrieval during the run.
//! 4. **Execution**: [`engine`] drives agents through the three-question
//!    action pipeline while a game master resolves intents into events.
//!
//! [`analytics`] adds per-round metrics and the multi-run reliability harness,
//! and [`reporting`] turns an [`engine::EpisodeLog`] into summaries and a
//! self-contained HTML log.

pub mod analytics;
pub mod engine;
pub mod fixtures;
pub mod hash;
pub mod llm;
pub mod memory;
pub mod reporting;
pub mod rng;
pub mod scenario;
pub mod templates;

pub use analytics::{MetricSample, MetricSpec, RunStatistics};
pub use engine::{run_episode, EpisodeLog, ResolvedEvent};
pub use llm::{Backend, BackendSettings, CompletionRequest, LlmError};
pub use memory::{MemoryEntry, MemoryKind, MemoryStore};
pub use scenario::{parse_scenario, AgentProfile, ScenarioConfig, ScenarioError, TraitVector};
