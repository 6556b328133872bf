//! Episode summaries and the self-contained HTML log.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::engine::EpisodeLog;
use crate::llm::{Backend, BackendSettings, CompletionRequest, LlmError};
use crate::memory::{MemoryEntry, MemoryKind};
use crate::templates;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub news_report: String,
    /// Keyed by agent name in scenario order.
    pub per_agent: IndexMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("the episode has no events to summarize")]
    NoEvents,
    #[error(transparent)]
    Backend(#[from] LlmError),
}

/// One news-report call over the game master's memory, then one call per
/// agent over the observations routed to it.
pub fn summarize_episode(
    log: &EpisodeLog,
    backend: &dyn Backend,
    settings: &BackendSettings,
) -> Result<EpisodeSummary, ReportError> {
    if log.events.is_empty() {
        return Err(ReportError::NoEvents);
    }
    let gm: Vec<String> = log.gm_memory.entries().iter().map(MemoryEntry::render).collect();
    let (system, user) = templates::news_report(&gm);
    let news_report = backend.complete(&CompletionRequest::new(settings, templates::TAG_NEWS, system, user))?;

    let mut per_agent = IndexMap::new();
    for name in &log.agents {
        let seen: Vec<String> = log
            .observations_of(name)
            .map(|(e, o)| format!("{} {o}", e.timestamp.bracketed()))
            .collect();
        let (system, user) = templates::agent_report(name, &seen);
        let text = backend.complete(&CompletionRequest::new(
            settings,
            templates::TAG_AGENT_REPORT,
            system,
            user,
        ))?;
        per_agent.insert(name.clone(), text);
    }
    Ok(EpisodeSummary { news_report, per_agent })
}

/// Escape text for use in element content and double-quoted attributes.
pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn kind_label(kind: MemoryKind) -> &'static str {
    match kind {
        MemoryKind::Formative => "formative",
        MemoryKind::Context => "context",
        MemoryKind::Observation => "observation",
        MemoryKind::SelfSummary => "self_summary",
        MemoryKind::Goal => "goal",
    }
}

/// Anchor id for an agent's section. Names may hold any characters, so the
/// id uses the agent's position instead.
fn agent_anchor(index: usize) -> String {
    format!("agent-{index}")
}

const STYLE: &str = "\
body{font-family:system-ui,sans-serif;margin:2rem auto;max-width:70rem;padding:0 1rem;color:#222}
h1,h2,h3{font-weight:600}
table{border-collapse:collapse;width:100%}
th,td{border:1px solid #ccc;padding:.35rem .5rem;text-align:left;vertical-align:top}
th{background:#f2f2f2}
td.ts,td.actor{white-space:nowrap}
ol.memory{font-family:ui-monospace,monospace;font-size:.9em}
.kind{color:#777}
.summary{background:#f7f7f2;border-left:4px solid #bba;padding:.5rem 1rem;white-space:pre-wrap}
.error{color:#a00}
dl{display:grid;grid-template-columns:max-content auto;gap:.2rem 1rem}
dt{font-weight:600}
";

/// Render the full log as one HTML5 document with inline CSS and no
/// scripts. Sections: header, event table, game master memory and one
/// perspective per agent. Pure function of its inputs.
pub fn render_html(log: &EpisodeLog, summary: Option<&EpisodeSummary>) -> String {
    let mut h = String::new();
    let title = escape(&log.scenario_name);
    // Writing into a String cannot fail.
    let _ = write!(
        h,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n\
         <title>{title} episode log</title>\n<style>\n{STYLE}</style>\n</head>\n<body>\n"
    );

    h.push_str("<header id=\"scenario\">\n");
    let _ = writeln!(h, "<h1>{title}</h1>");
    h.push_str("<dl>\n");
    let agents = log.agents.iter().map(|a| escape(a)).collect::<Vec<_>>().join(", ");
    for (label, value) in [
        ("Config digest", format!("<code>{}</code>", escape(&log.config_digest))),
        ("Seed", log.seed.to_string()),
        ("Start", escape(&log.start.bracketed())),
        ("Rounds", log.rounds.to_string()),
        ("Agents", agents),
        ("Events", log.events.len().to_string()),
        ("Template version", escape(&log.template_version)),
    ] {
        let _ = writeln!(h, "<dt>{label}</dt><dd>{value}</dd>");
    }
    h.push_str("</dl>\n");
    if let Some(err) = &log.error {
        let _ = writeln!(h, "<p class=\"error\">Run aborted: {}</p>", escape(err));
    }
    if !log.shared_summary.is_empty() {
        let _ = writeln!(h, "<p class=\"summary\">{}</p>", escape(&log.shared_summary));
    }
    if let Some(s) = summary {
        let _ = writeln!(
            h,
            "<h2>News report</h2>\n<div class=\"summary\">{}</div>",
            escape(&s.news_report)
        );
    }
    h.push_str("</header>\n");

    h.push_str("<main>\n<section id=\"events\">\n<h2>Events</h2>\n<table>\n<thead><tr><th>#</th><th>Time</th><th>Round</th><th>Actor</th><th>Narrative</th></tr></thead>\n<tbody>\n");
    for (i, e) in log.events.iter().enumerate() {
        let _ = writeln!(
            h,
            "<tr><td>{}</td><td class=\"ts\">{}</td><td>{}</td><td class=\"actor\">{}</td><td class=\"narrative\">{}</td></tr>",
            i + 1,
            escape(&e.timestamp.bracketed()),
            e.round + 1,
            escape(&e.actor),
            escape(&e.narrative),
        );
    }
    h.push_str("</tbody>\n</table>\n</section>\n");

    h.push_str("<section id=\"gm-memory\">\n<h2>Game master memory</h2>\n");
    memory_list(&mut h, log.gm_memory.entries());
    h.push_str("</section>\n");

    h.push_str("<section id=\"perspectives\">\n<h2>Agent perspectives</h2>\n");
    for (i, name) in log.agents.iter().enumerate() {
        let _ = writeln!(
            h,
            "<section class=\"agent\" id=\"{}\">\n<h3>{}</h3>",
            agent_anchor(i),
            escape(name)
        );
        if let Some(text) = summary.and_then(|s| s.per_agent.get(name)) {
            let _ = writeln!(h, "<div class=\"summary\">{}</div>", escape(text));
        }
        // Observations are listed by event number; the narrative itself
        // lives in the event table.
        let seen: Vec<usize> = log
            .events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.observations.contains_key(name))
            .map(|(j, _)| j + 1)
            .collect();
        if seen.is_empty() {
            h.push_str("<p>No observations.</p>\n");
        } else {
            h.push_str("<h4>Observed events</h4>\n<ul class=\"observed\">\n");
            for j in seen {
                let e = &log.events[j - 1];
                let _ = writeln!(
                    h,
                    "<li>#{j} {} {}</li>",
                    escape(&e.timestamp.bracketed()),
                    escape(&e.actor)
                );
            }
            h.push_str("</ul>\n");
        }
        if let Some(store) = log.agent_memories.get(name) {
            let _ = writeln!(h, "<details>\n<summary>Memory ({} entries)</summary>", store.len());
            memory_list(&mut h, store.entries());
            h.push_str("</details>\n");
        }
        h.push_str("</section>\n");
    }
    h.push_str("</section>\n</main>\n</body>\n</html>\n");
    h
}

fn memory_list(h: &mut String, entries: &[MemoryEntry]) {
    if entries.is_empty() {
        h.push_str("<p>Empty.</p>\n");
        return;
    }
    h.push_str("<ol class=\"memory\">\n");
    for e in entries {
        let _ = writeln!(
            h,
            "<li><span class=\"kind\">{}</span> {}</li>",
            kind_label(e.kind),
            escape(&e.render())
        );
    }
    h.push_str("</ol>\n");
}
