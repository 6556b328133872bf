use super::{MemoryEntry, MemoryKind};
use crate::llm::{Backend, BackendSettings, CompletionRequest, LlmError};
use crate::scenario::{AgentProfile, SharedContext, SimClock};
use crate::templates;

/// Build an agent's initial memories, in this order:
///
/// 1. one formative episode per formative age (one backend call each),
///    dated on the birth anniversary of the year the agent had that age;
/// 2. a backend-written summary of who the agent is now;
/// 3. the environment's existence statement, then each shared statement;
/// 4. the shared summary followed by the agent's own context;
/// 5. the agent's goal.
///
/// Everything after step 1 is dated at `clock.start`.
pub fn build_formative_memories(
    profile: &AgentProfile,
    shared: &SharedContext,
    backend: &dyn Backend,
    settings: &BackendSettings,
    clock: &SimClock,
    dim: usize,
) -> Result<Vec<MemoryEntry>, LlmError> {
    let now = clock.start;
    let mut out = Vec::new();
    let mut episodes = Vec::with_capacity(profile.formative_ages.len());

    for &age in &profile.formative_ages {
        let (system, user) = templates::formative_episode(profile, &shared.summary, age);
        let text = backend.complete(&CompletionRequest::new(
            settings,
            templates::TAG_FORMATIVE,
            system,
            user,
        ))?;
        out.push(MemoryEntry::new(
            clock.formative_timestamp(age),
            &text,
            MemoryKind::Formative,
            dim,
        ));
        episodes.push(text);
    }

    let (system, user) = templates::self_summary(profile, &shared.summary, &episodes);
    let summary = backend.complete(&CompletionRequest::new(
        settings,
        templates::TAG_SELF_SUMMARY,
        system,
        user,
    ))?;
    out.push(MemoryEntry::new(now, summary, MemoryKind::SelfSummary, dim));

    let statements = shared
        .existence_statement()
        .into_iter()
        .chain(shared.statements.iter().cloned());
    for statement in statements {
        out.push(MemoryEntry::new(now, statement, MemoryKind::Context, dim));
    }

    let role = if shared.summary.is_empty() {
        profile.context.clone()
    } else {
        format!("{} {}", shared.summary, profile.context)
    };
    out.push(MemoryEntry::new(now, role, MemoryKind::Context, dim));
    out.push(MemoryEntry::new(now, &profile.goal, MemoryKind::Goal, dim));
    Ok(out)
}
