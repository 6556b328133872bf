use indexmap::IndexMap;

use super::{ActionIntent, EngineError, ResolvedEvent, RetrievalConfig};
use crate::llm::{Backend, BackendSettings, CompletionRequest};
use crate::memory::{MemoryKind, MemoryStore};
use crate::scenario::SharedContext;
use crate::templates;

/// Ask the backend to summarize the shared statements; the completion is
/// returned verbatim.
pub fn summarize_context(
    shared: &SharedContext,
    backend: &dyn Backend,
    settings: &BackendSettings,
) -> Result<String, EngineError> {
    if shared.statements.is_empty() {
        return Err(EngineError::Precondition("shared context has no statements".into()));
    }
    let (system, user) = templates::context_summary(&shared.statements);
    Ok(backend.complete(&CompletionRequest::new(
        settings,
        templates::TAG_CONTEXT_SUMMARY,
        system,
        user,
    ))?)
}

/// Who gets to see an event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Visibility {
    /// Every agent, including the actor, sees the full narrative.
    #[default]
    Broadcast,
}

pub fn route_observations(
    visibility: Visibility,
    actor: &str,
    narrative: &str,
    agents: &[String],
) -> IndexMap<String, String> {
    match visibility {
        Visibility::Broadcast => {
            let text = format!("{actor} -- {narrative}");
            agents.iter().map(|a| (a.clone(), text.clone())).collect()
        }
    }
}

/// Turn an intent into an event: one backend call whose prompt holds the
/// shared summary, the game master's most relevant memories and the intent.
/// The narrative is broadcast and appended to the game master's memory.
pub fn gm_resolve(
    intent: &ActionIntent,
    gm_memory: &mut MemoryStore,
    shared: &SharedContext,
    agents: &[String],
    backend: &dyn Backend,
    settings: &BackendSettings,
    retrieval: RetrievalConfig,
) -> Result<ResolvedEvent, EngineError> {
    if intent.text.trim().is_empty() {
        return Err(EngineError::Precondition("intent text is empty".into()));
    }
    if !agents.contains(&intent.actor) {
        return Err(EngineError::Precondition(format!("unknown actor {:?}", intent.actor)));
    }
    let now = intent.timestamp;
    let memories: Vec<String> = gm_memory
        .retrieve_with(&intent.text, retrieval.k, now, retrieval.params)
        .iter()
        .map(|r| r.entry.render())
        .collect();
    let (system, user) = templates::gm_resolve(&shared.summary, &memories, &intent.actor, &intent.text);
    let narrative = backend.complete(&CompletionRequest::new(settings, templates::TAG_RESOLVE, system, user))?;
    let event = ResolvedEvent {
        timestamp: now,
        round: intent.round,
        actor: intent.actor.clone(),
        intent: intent.text.clone(),
        observations: route_observations(Visibility::Broadcast, &intent.actor, &narrative, agents),
        narrative,
    };
    gm_memory.add(now, &event.headline(), MemoryKind::Observation)?;
    Ok(event)
}
