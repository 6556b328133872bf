use super::{ActionIntent, AgentState, EngineError, RetrievalConfig};
use crate::llm::{Backend, BackendSettings, CompletionRequest};
use crate::memory::MemoryKind;
use crate::scenario::Timestamp;
use crate::templates::{self, QUESTIONS, QUESTION_TAGS};

/// Answer the three questions in order, each prompt carrying the situation,
/// the memories retrieved for that question and the earlier answers. The
/// last answer is the intent. Afterwards the situation and the intent are
/// both remembered as observations.
pub fn agent_act(
    state: &mut AgentState,
    situation: &str,
    backend: &dyn Backend,
    settings: &BackendSettings,
    now: Timestamp,
    round: u32,
    retrieval: RetrievalConfig,
) -> Result<ActionIntent, EngineError> {
    if situation.trim().is_empty() {
        return Err(EngineError::Precondition("situation is empty".into()));
    }
    let mut answers: Vec<(&str, String)> = Vec::with_capacity(QUESTIONS.len());
    for (i, question) in QUESTIONS.iter().enumerate() {
        let memories: Vec<String> = state
            .memory
            .retrieve_with(&format!("{question} {situation}"), retrieval.k, now, retrieval.params)
            .iter()
            .map(|r| r.entry.render())
            .collect();
        let (system, user) = templates::agent_question(&state.profile, i, situation, &memories, &answers);
        let answer = backend.complete(&CompletionRequest::new(settings, QUESTION_TAGS[i], system, user))?;
        answers.push((question, answer));
    }
    let (_, text) = answers.pop().expect("three answers");
    state.memory.add(now, situation, MemoryKind::Observation)?;
    state.memory.add(now, &text, MemoryKind::Observation)?;
    Ok(ActionIntent {
        actor: state.profile.name.clone(),
        round,
        timestamp: now,
        text,
    })
}
