//! Every prompt the engine sends, in one place so experiments can be audited.
//! Bump [`TEMPLATE_VERSION`] whenever wording changes; it is recorded in each
//! episode log.

use crate::scenario::AgentProfile;

pub const TEMPLATE_VERSION: &str = "1";

pub const TAG_CONTEXT_SUMMARY: &str = "context.summary";
pub const TAG_FORMATIVE: &str = "memory.formative";
pub const TAG_SELF_SUMMARY: &str = "memory.self_summary";
pub const TAG_SITUATION: &str = "agent.situation";
pub const TAG_PERSON: &str = "agent.person";
pub const TAG_ACTION: &str = "agent.action";
pub const TAG_RESOLVE: &str = "gm.resolve";
pub const TAG_OPINION: &str = "metric.opinion";
pub const TAG_NEWS: &str = "report.news";
pub const TAG_AGENT_REPORT: &str = "report.agent";

pub const SUMMARIZE_INSTRUCTION: &str = "Summarize the characteristics in a concise and insightful fashion";

/// The three questions an agent answers, in order, before acting.
pub const QUESTIONS: [&str; 3] = [
    "What kind of situation is this?",
    "What kind of person am I?",
    "What does a person like me do in a situation like this?",
];

pub const QUESTION_TAGS: [&str; 3] = [TAG_SITUATION, TAG_PERSON, TAG_ACTION];

pub const DEFAULT_OPINION_QUESTION: &str = "What is {subject}'s opinion of {target}?";

fn bullet_list<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str("- ");
        out.push_str(item);
        out.push('\n');
    }
    if out.is_empty() {
        out.push_str("- (none)\n");
    }
    out
}

fn character_sheet(profile: &AgentProfile) -> String {
    let t = profile.traits;
    format!(
        "Character: {} ({}).\n\
         Personality on a 1-10 scale: extraversion {}, neuroticism {}, openness {}, \
         conscientiousness {}, agreeableness {}.\n\
         Role: {}\n\
         Goal: {}\n",
        profile.name,
        profile.gender,
        t.extraversion,
        t.neuroticism,
        t.openness,
        t.conscientiousness,
        t.agreeableness,
        profile.context,
        profile.goal,
    )
}

pub fn context_summary(statements: &[String]) -> (String, String) {
    let system = "You describe simulated environments.".to_string();
    let user = format!(
        "{}\n\n{SUMMARIZE_INSTRUCTION}.\n",
        bullet_list(statements.iter().map(String::as_str)).trim_end()
    );
    (system, user)
}

pub fn formative_episode(profile: &AgentProfile, shared_summary: &str, age: u32) -> (String, String) {
    let system = "You write the formative memories of characters in a social simulation.".to_string();
    let user = format!(
        "{}Shared context: {shared_summary}\n\n\
         Write one short paragraph in the third person about a formative episode that \
         happened when {} was {age} years old. Keep it consistent with the personality, \
         role and goal above.\n",
        character_sheet(profile),
        profile.name,
    );
    (system, user)
}

pub fn self_summary(profile: &AgentProfile, shared_summary: &str, episodes: &[String]) -> (String, String) {
    let system = "You write the formative memories of characters in a social simulation.".to_string();
    let user = format!(
        "{}Shared context: {shared_summary}\n\nFormative episodes:\n{}\n\
         Describe who {} is today, at {} years old, in one paragraph.\n",
        character_sheet(profile),
        bullet_list(episodes.iter().map(String::as_str)),
        profile.name,
        profile.current_age(),
    );
    (system, user)
}

pub fn agent_question(
    profile: &AgentProfile,
    question_index: usize,
    situation: &str,
    memories: &[String],
    prior_answers: &[(&str, String)],
) -> (String, String) {
    let system = format!(
        "You are {}, a participant in a social simulation. Answer in the first person.",
        profile.name
    );
    let mut user = format!(
        "Situation:\n{situation}\n\nRelevant memories:\n{}",
        bullet_list(memories.iter().map(String::as_str))
    );
    for (question, answer) in prior_answers {
        user.push_str(&format!("\nQ: {question}\nA: {answer}\n"));
    }
    user.push_str(&format!("\nQ: {}\n", QUESTIONS[question_index]));
    if question_index == QUESTIONS.len() - 1 {
        user.push_str("Answer with what you do next, as one concrete intention.\n");
    }
    (system, user)
}

pub fn gm_resolve(shared_summary: &str, memories: &[String], actor: &str, intent: &str) -> (String, String) {
    let system = "You are the game master of a social simulation. You decide what actually \
                  happens when a participant acts, and narrate it in the third person."
        .to_string();
    let user = format!(
        "World: {shared_summary}\n\nRecent events and facts:\n{}\n\
         {actor} intends: {intent}\n\n\
         Describe in the third person what happens as a result of {actor}'s attempt.\n",
        bullet_list(memories.iter().map(String::as_str)),
    );
    (system, user)
}

pub fn opinion_question(template: &str, subject: &str, target: &str, memories: &[String]) -> (String, String) {
    let system = format!("You are {subject}, a participant in a social simulation.");
    let question = template.replace("{subject}", subject).replace("{target}", target);
    let user = format!(
        "Relevant memories:\n{}\n{question}\n\
         Reply with a single digit from 0 to 9, where 0 = strongly negative and \
         9 = strongly positive about {target}.\n",
        bullet_list(memories.iter().map(String::as_str)),
    );
    (system, user)
}

pub fn news_report(gm_memories: &[String]) -> (String, String) {
    let system = "You are a journalist covering events in a social simulation.".to_string();
    let user = format!(
        "Everything the game master recorded:\n{}\n\
         Write a news report about this episode.\n",
        bullet_list(gm_memories.iter().map(String::as_str)),
    );
    (system, user)
}

pub fn agent_report(name: &str, observations: &[String]) -> (String, String) {
    let system = format!("You are {name}, a participant in a social simulation.");
    let user = format!(
        "What you observed:\n{}\nNarrate the episode from your own perspective.\n",
        bullet_list(observations.iter().map(String::as_str)),
    );
    (system, user)
}
