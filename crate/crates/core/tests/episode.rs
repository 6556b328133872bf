use std::path::PathBuf;

use gabm_core::analytics::MetricKind;
use gabm_core::engine::config_digest;
use gabm_core::fixtures::{CONNECTNET_SCENARIO, CONNECTNET_SCRIPT};
use gabm_core::llm::{ExhaustionMode, LlmError, ScriptedBackend};
use gabm_core::reporting::{render_html, summarize_episode};
use gabm_core::scenario::Timestamp;
use gabm_core::{parse_scenario, run_episode, BackendSettings, EpisodeLog, MemoryKind, ScenarioConfig};

fn config() -> ScenarioConfig {
    parse_scenario(CONNECTNET_SCENARIO).unwrap()
}

fn script() -> ScriptedBackend {
    ScriptedBackend::parse(CONNECTNET_SCRIPT, ExhaustionMode::Error).unwrap()
}

fn run() -> EpisodeLog {
    run_episode(&config(), &script()).unwrap()
}

fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric())
}

#[test]
fn fifteen_events_in_turn_order() {
    let log = run();
    assert_eq!(log.events.len(), 15);
    let order: Vec<&str> = log.events.iter().map(|e| e.actor.as_str()).collect();
    let names = ["Alice", "Bob", "Charlie", "Dana", "Evan"];
    assert_eq!(order, names.repeat(3));
    for pair in log.events.windows(2) {
        assert!(pair[0].timestamp < pair[1].timestamp);
    }
    let start: Timestamp = "01 Oct 2024 20:00:00".parse().unwrap();
    for (t, e) in log.events.iter().enumerate() {
        assert_eq!(e.timestamp.seconds_since(&start), 10 * (t as i64 + 1));
        assert_eq!(e.round as usize, t / 5);
    }
    assert_eq!(log.events[14].timestamp.to_string(), "01 Oct 2024 20:02:30");
}

#[test]
fn transcript_accounting() {
    let log = run();
    // 1 summary, 5 x (5 formative + 1 self summary), 15 turns x 4 calls,
    // 12 opinion samples of which one needed a second ask.
    assert_eq!(log.completion_transcript.len(), 1 + 30 + 60 + 13);
    let count = |tag: &str| log.completion_transcript.iter().filter(|t| t.tag == tag).count();
    assert_eq!(count("context.summary"), 1);
    assert_eq!(count("memory.formative"), 25);
    assert_eq!(count("memory.self_summary"), 5);
    for tag in ["agent.situation", "agent.person", "agent.action", "gm.resolve"] {
        assert_eq!(count(tag), 15, "{tag}");
    }
    assert_eq!(count("metric.opinion"), 13);
    assert!(log.completion_transcript.iter().all(|t| t.prompt_hash.len() == 16));
}

#[test]
fn memory_growth() {
    let log = run();
    for (name, store) in &log.agent_memories {
        // 18 initial entries, then per round 2 own entries and 5 observations.
        assert_eq!(store.len(), 18 + 3 * (2 + 5), "{name}");
        let observed = store
            .entries()
            .iter()
            .filter(|e| e.kind == MemoryKind::Observation)
            .count();
        assert_eq!(observed, 21);
    }
    // existence statement + 9 statements + summary, then one per event.
    assert_eq!(log.gm_memory.len(), 11 + 15);
    assert!(log.gm_memory.entries()[11].text.starts_with("Alice -- "));
}

#[test]
fn dana_memory_matches_listing() {
    let log = run();
    let dana = &log.agent_memories["Dana"];
    let ts: Vec<String> = dana.entries()[..6].iter().map(|e| e.timestamp.bracketed()).collect();
    assert_eq!(
        ts,
        [
            "[03 Jul 1990 00:00:00]",
            "[03 Jul 2000 00:00:00]",
            "[03 Jul 2011 00:00:00]",
            "[03 Jul 2012 00:00:00]",
            "[03 Jul 2022 00:00:00]",
            "[01 Oct 2024 20:00:00]",
        ]
    );
    assert!(dana.entries()[0].text.starts_with("When Dana was 6 years old"));
    assert!(dana.entries()[4]
        .text
        .starts_with("At 38, Dana faced a wave of misinformation"));
    assert_eq!(dana.entries()[5].kind, MemoryKind::SelfSummary);
    assert!(dana.entries()[5]
        .text
        .starts_with("Dana is 38 years old and works at a news outlet."));
    let kinds: Vec<MemoryKind> = dana.entries()[..18].iter().map(|e| e.kind).collect();
    assert_eq!(kinds.iter().filter(|k| **k == MemoryKind::Context).count(), 11);
    assert_eq!(kinds[17], MemoryKind::Goal);
    assert_eq!(
        dana.entries()[6].text,
        "There is a social media platform called ConnectNet."
    );
}

#[test]
fn situations_follow_observations() {
    let log = run();
    let alice = &log.agent_memories["Alice"];
    // Round 2 situation for Alice: every narrative broadcast since her first turn.
    let round2 = alice
        .entries()
        .iter()
        .find(|e| e.timestamp.to_string() == "01 Oct 2024 20:01:00" && e.text.contains('\n'))
        .expect("alice round-2 situation");
    let lines: Vec<&str> = round2.text.lines().collect();
    let expected: Vec<String> = log.events[..5].iter().map(|e| e.headline()).collect();
    assert_eq!(lines, expected);
}

#[test]
fn metrics_per_round() {
    let log = run();
    let opinions: Vec<(u32, &str, f64)> = log
        .metrics
        .iter()
        .filter(|m| m.metric == "opinion_of_alice")
        .map(|m| (m.round, m.subject.as_str(), m.value))
        .collect();
    assert_eq!(opinions.len(), 12);
    assert!(log.metrics.iter().all(|m| !m.missing));
    assert_eq!(
        &opinions[8..],
        [(2, "Bob", 8.0), (2, "Charlie", 0.0), (2, "Dana", 7.0), (2, "Evan", 8.0)]
    );

    // Independent recount: whole-word "Alice" in narratives up to each round.
    let mentions: Vec<f64> = log
        .metrics
        .iter()
        .filter(|m| m.metric == "alice_mentions")
        .map(|m| m.value)
        .collect();
    let expected: Vec<f64> = (0..3)
        .map(|r| {
            log.events
                .iter()
                .filter(|e| e.round <= r && words(&e.narrative).any(|w| w == "Alice"))
                .count() as f64
        })
        .collect();
    assert_eq!(mentions, expected);
    assert_eq!(log.metric_specs[1].kind, MetricKind::EventCount);
}

#[test]
fn byte_identical_reruns() {
    let a = run();
    let b = run();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(render_html(&a, None), render_html(&b, None));
    assert_eq!(EpisodeLog::from_json(&a.to_json()).unwrap(), a);
    assert_eq!(a.config_digest, config_digest(&config()));
}

#[test]
fn exhausted_script_yields_partial_log() {
    let text: String = CONNECTNET_SCRIPT
        .lines()
        .take_while(|l| !l.contains("Game master"))
        .collect::<Vec<_>>()
        .join("\n");
    let backend = ScriptedBackend::parse(&text, ExhaustionMode::Error).unwrap();
    let err = run_episode(&config(), &backend).unwrap_err();
    assert!(matches!(
        err.source,
        gabm_core::engine::EngineError::Backend(LlmError::ScriptExhausted { .. })
    ));
    let partial = err.partial;
    assert!(partial.error.is_some());
    assert!(partial.events.is_empty());
    // 1 summary + 30 formative + 3 questions for Alice's first turn.
    assert_eq!(partial.completion_transcript.len(), 34);
}

#[test]
fn echo_backend_runs_any_scenario() {
    let backend = ScriptedBackend::new(Vec::new(), ExhaustionMode::Echo);
    let mut cfg = config();
    cfg.metrics.clear();
    let log = run_episode(&cfg, &backend).unwrap();
    assert_eq!(log.events.len(), 15);
    assert!(log.events.iter().all(|e| e.narrative.starts_with("ECHO:")));
}

#[test]
fn summaries_use_report_tags() {
    let log = run();
    let backend = script();
    let settings = BackendSettings::scripted(None, ExhaustionMode::Error);
    let summary = summarize_episode(&log, &backend, &settings).unwrap();
    assert_eq!(backend.calls(), 6);
    assert!(summary.news_report.starts_with("Misinformation campaign"));
    assert_eq!(
        summary.per_agent.keys().collect::<Vec<_>>(),
        ["Alice", "Bob", "Charlie", "Dana", "Evan"]
    );
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/connectnet.html")
}

/// Set UPDATE_GOLDEN=1 to rewrite the golden file after an intended change.
#[test]
fn html_matches_golden() {
    let log = run();
    let summary = summarize_episode(&log, &script(), &BackendSettings::scripted(None, ExhaustionMode::Error)).unwrap();
    let html = render_html(&log, Some(&summary));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_path().parent().unwrap()).unwrap();
        std::fs::write(golden_path(), &html).unwrap();
    }
    let golden = std::fs::read_to_string(golden_path()).expect("golden file; run with UPDATE_GOLDEN=1 to create it");
    assert!(html == golden, "HTML differs from {}", golden_path().display());
}
