//! Dana's initial memory rebuilt from the published listing.

use gabm_core::fixtures::{CONNECTNET_SCENARIO, DANA_LISTING};
use gabm_core::llm::{ExhaustionMode, ScriptedBackend};
use gabm_core::memory::{build_formative_memories, dump_entries};
use gabm_core::{parse_scenario, MemoryKind};

fn listing() -> Vec<(&'static str, &'static str)> {
    DANA_LISTING
        .lines()
        .map(|l| {
            let (ts, text) = l.split_once("] ").unwrap();
            (&ts[1..], text)
        })
        .collect()
}

#[test]
fn listing_is_reproduced() {
    let listing = listing();
    assert_eq!(listing.len(), 18);
    let mut config = parse_scenario(CONNECTNET_SCENARIO).unwrap();
    let dana = config.agent("Dana").unwrap().clone();

    // The summary+role entry is the shared summary followed by Dana's context.
    let role = listing.iter().find(|(_, t)| t.ends_with(&dana.context)).unwrap().1;
    config.context.summary = role[..role.len() - dana.context.len() - 1].to_string();

    let replies = listing[..6].iter().map(|(_, t)| *t);
    let backend = ScriptedBackend::from_responses(replies, ExhaustionMode::Error);
    let entries =
        build_formative_memories(&dana, &config.context, &backend, &config.backend, &config.clock, 64).unwrap();
    assert_eq!(backend.remaining(), 0);
    assert_eq!(entries.len(), 18);

    let dump = dump_entries(&entries);
    let mut got: Vec<&str> = dump.lines().collect();
    let mut want: Vec<String> = listing.iter().map(|(ts, t)| format!("[{ts}] {t}")).collect();

    // First six lines come out in the published order.
    assert_eq!(&got[..6], &want[..6]);

    // The published goal line words the goal differently from the agent
    // table; the rebuilt entry carries the table's wording.
    let goal = entries.iter().position(|e| e.kind == MemoryKind::Goal).unwrap();
    assert_eq!(got.remove(goal), format!("[01 Oct 2024 20:00:00] {}", dana.goal));
    let published_goal = want
        .iter()
        .position(|l| l.contains("Engage with interesting content daily"))
        .unwrap();
    want.remove(published_goal);

    // Entries sharing the start timestamp are listed in no particular order.
    got.sort_unstable();
    want.sort_unstable();
    assert_eq!(got, want);
}
