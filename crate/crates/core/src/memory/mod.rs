//! Two-tier agent memory. Formative (long-term) memories are written when an
//! agent is created; associative (working) memories accumulate during the run.
//! Both live in one append-only [`MemoryStore`] and differ only by
//! [`MemoryKind`].

mod embed;
mod formative;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scenario::Timestamp;

pub use embed::{embed, token_slot, tokenize, Embedding};
pub use formative::build_formative_memories;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Formative,
    Context,
    Observation,
    SelfSummary,
    Goal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub timestamp: Timestamp,
    pub text: String,
    pub kind: MemoryKind,
    pub embedding: Embedding,
}

impl MemoryEntry {
    pub fn new(timestamp: Timestamp, text: impl Into<String>, kind: MemoryKind, dim: usize) -> Self {
        let text = text.into();
        let embedding = embed(&text, dim);
        Self {
            timestamp,
            text,
            kind,
            embedding,
        }
    }

    /// `[DD Mon YYYY HH:MM:SS] text`
    pub fn render(&self) -> String {
        format!("{} {}", self.timestamp.bracketed(), self.text)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MemoryError {
    #[error("memory text is empty")]
    EmptyText,
    #[error("embedding has dimension {got}, store expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Retrieval scoring knobs: `score = w * cosine + (1 - w) * exp(-age / tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalParams {
    pub similarity_weight: f64,
    pub recency_tau_seconds: f64,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        Self {
            similarity_weight: 1.0,
            recency_tau_seconds: 86_400.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved<'a> {
    pub id: usize,
    pub score: f64,
    pub entry: &'a MemoryEntry,
}

/// Best first: higher score, then newer timestamp, then higher id.
fn rank(a: (f64, Timestamp, usize), b: (f64, Timestamp, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
}

#[derive(PartialEq)]
struct Candidate(f64, Timestamp, usize);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        rank((self.0, self.1, self.2), (other.0, other.1, other.2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryStore {
    dim: usize,
    entries: Vec<MemoryEntry>,
}

impl MemoryStore {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "embedding dimension must be positive");
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> Option<&MemoryEntry> {
        self.entries.get(id)
    }

    /// Embed and append `text`; ids count up from 0.
    pub fn add(&mut self, timestamp: Timestamp, text: &str, kind: MemoryKind) -> Result<usize, MemoryError> {
        if text.trim().is_empty() {
            return Err(MemoryError::EmptyText);
        }
        self.push(MemoryEntry::new(timestamp, text, kind, self.dim))
    }

    /// Append a pre-built entry.
    pub fn push(&mut self, entry: MemoryEntry) -> Result<usize, MemoryError> {
        if entry.text.trim().is_empty() {
            return Err(MemoryError::EmptyText);
        }
        if entry.embedding.dim() != self.dim {
            return Err(MemoryError::DimensionMismatch {
                expected: self.dim,
                got: entry.embedding.dim(),
            });
        }
        self.entries.push(entry);
        Ok(self.entries.len() - 1)
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = MemoryEntry>) -> Result<(), MemoryError> {
        for e in entries {
            self.push(e)?;
        }
        Ok(())
    }

    /// Top `k` entries by cosine similarity to `query`.
    pub fn retrieve(&self, query: &str, k: usize, now: Timestamp) -> Vec<Retrieved<'_>> {
        self.retrieve_with(query, k, now, RetrievalParams::default())
    }

    pub fn retrieve_with(&self, query: &str, k: usize, now: Timestamp, params: RetrievalParams) -> Vec<Retrieved<'_>> {
        if k == 0 || self.entries.is_empty() {
            return Vec::new();
        }
        let q = embed(query, self.dim);
        let w = params.similarity_weight;
        let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(k + 1);
        for (id, entry) in self.entries.iter().enumerate() {
            let mut score = q.cosine(&entry.embedding);
            if w < 1.0 {
                let age = now.seconds_since(&entry.timestamp).max(0) as f64;
                score = w * score + (1.0 - w) * (-age / params.recency_tau_seconds).exp();
            }
            let candidate = Candidate(score, entry.timestamp, id);
            if heap.len() < k {
                heap.push(Reverse(candidate));
            } else if heap.peek().is_some_and(|Reverse(worst)| candidate > *worst) {
                heap.pop();
                heap.push(Reverse(candidate));
            }
        }
        let mut best: Vec<Candidate> = heap.into_iter().map(|Reverse(c)| c).collect();
        best.sort_by(|a, b| b.cmp(a));
        best.into_iter()
            .map(|Candidate(score, _, id)| Retrieved {
                id,
                score,
                entry: &self.entries[id],
            })
            .collect()
    }

    /// One `[timestamp] text` line per entry, in insertion order.
    pub fn dump(&self) -> String {
        dump_entries(&self.entries)
    }
}

pub fn dump_entries<'a>(entries: impl IntoIterator<Item = &'a MemoryEntry>) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&e.render());
        out.push('\n');
    }
    out
}

// Embeddings are derived data: logs carry timestamp, kind and text only, and
// loading re-embeds.
#[derive(Serialize, Deserialize)]
struct StoredEntry {
    timestamp: Timestamp,
    kind: MemoryKind,
    text: String,
}

#[derive(Serialize, Deserialize)]
struct StoredMemory {
    dim: usize,
    entries: Vec<StoredEntry>,
}

impl Serialize for MemoryStore {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        StoredMemory {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|e| StoredEntry {
                    timestamp: e.timestamp,
                    kind: e.kind,
                    text: e.text.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MemoryStore {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let stored = StoredMemory::deserialize(deserializer)?;
        if stored.dim == 0 {
            return Err(serde::de::Error::custom("memory dimension must be positive"));
        }
        let mut store = MemoryStore::new(stored.dim);
        for e in stored.entries {
            store
                .add(e.timestamp, &e.text, e.kind)
                .map_err(serde::de::Error::custom)?;
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        s.parse().unwrap()
    }

    fn t0() -> Timestamp {
        ts("01 Oct 2024 20:00:00")
    }

    #[test]
    fn ids_are_consecutive() {
        let mut store = MemoryStore::new(16);
        assert_eq!(store.add(t0(), "first", MemoryKind::Observation).unwrap(), 0);
        assert_eq!(store.len(), 1);
        assert_eq!(store.add(t0(), "second", MemoryKind::Observation).unwrap(), 1);
        assert_eq!(store.get(0).unwrap().text, "first");
    }

    #[test]
    fn empty_text_rejected() {
        let mut store = MemoryStore::new(16);
        assert_eq!(store.add(t0(), " ", MemoryKind::Goal), Err(MemoryError::EmptyText));
        assert!(store.is_empty());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut store = MemoryStore::new(16);
        let entry = MemoryEntry::new(t0(), "x", MemoryKind::Goal, 8);
        assert!(matches!(store.push(entry), Err(MemoryError::DimensionMismatch { .. })));
    }

    #[test]
    fn single_entry_always_returned() {
        let mut store = MemoryStore::new(16);
        store.add(t0(), "alpha beta", MemoryKind::Context).unwrap();
        let got = store.retrieve("completely unrelated", 3, t0());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].id, 0);
        assert!(store.retrieve("q", 3, t0()).len() == 1);
        assert!(MemoryStore::new(4).retrieve("q", 3, t0()).is_empty());
    }

    #[test]
    fn exact_text_ranks_first() {
        let mut store = MemoryStore::new(64);
        for text in [
            "Users on ConnectNet often follow trends based on viral content.",
            "The platform has features like posts, comments, likes, and shares.",
            "There are no official fact-checkers on ConnectNet, so misinformation can spread quickly.",
        ] {
            store.add(t0(), text, MemoryKind::Context).unwrap();
        }
        let got = store.retrieve(
            "The platform has features like posts, comments, likes, and shares.",
            2,
            t0(),
        );
        assert_eq!(got[0].id, 1);
        assert!((got[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_newer_then_higher_id() {
        let mut store = MemoryStore::new(16);
        store
            .add(ts("01 Oct 2024 20:00:00"), "same words", MemoryKind::Observation)
            .unwrap();
        store
            .add(ts("01 Oct 2024 20:00:10"), "same words", MemoryKind::Observation)
            .unwrap();
        store
            .add(ts("01 Oct 2024 20:00:00"), "same words", MemoryKind::Observation)
            .unwrap();
        let ids: Vec<usize> = store.retrieve("same words", 3, t0()).iter().map(|r| r.id).collect();
        assert_eq!(ids, [1, 2, 0]);
    }

    #[test]
    fn recency_weight_favours_recent_entries() {
        let mut store = MemoryStore::new(16);
        store
            .add(ts("01 Oct 2024 08:00:00"), "old note", MemoryKind::Observation)
            .unwrap();
        store
            .add(ts("01 Oct 2024 19:59:00"), "new note", MemoryKind::Observation)
            .unwrap();
        let params = RetrievalParams {
            similarity_weight: 0.0,
            recency_tau_seconds: 3_600.0,
        };
        let got = store.retrieve_with("old note", 1, t0(), params);
        assert_eq!(got[0].id, 1);
        assert!((got[0].score - (-60.0f64 / 3600.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn dump_uses_bracketed_timestamps() {
        let mut store = MemoryStore::new(8);
        store
            .add(ts("03 Jul 1990 00:00:00"), "When Dana was 6", MemoryKind::Formative)
            .unwrap();
        assert_eq!(store.dump(), "[03 Jul 1990 00:00:00] When Dana was 6\n");
    }

    #[test]
    fn serde_round_trip_re_embeds() {
        let mut store = MemoryStore::new(8);
        store.add(t0(), "hello there", MemoryKind::Goal).unwrap();
        let json = serde_json::to_string(&store).unwrap();
        assert!(!json.contains("embedding"));
        let back: MemoryStore = serde_json::from_str(&json).unwrap();
        assert_eq!(back, store);
    }
}
