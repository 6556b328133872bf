//! Deterministic backend that replays authored responses.
//!
//! Script files are TOML with one `[[entry]]` table per response:
//!
//! ```toml
//! [[entry]]
//! response = "served in order"
//!
//! [[entry]]
//! match = "^gm\\.resolve$"   # regex tried against the tag, then user_text
//! response = "served whenever a request matches"
//! repeat = false             # keep the entry after use
//! ```
//!
//! For each request the first unused matching `match` entry (file order)
//! wins; otherwise the next unused unconditional entry is served.

use std::path::Path;
use std::sync::Mutex;

use regex::Regex;
use serde::Deserialize;

use super::{Backend, CompletionRequest, ExhaustionMode, LlmError};
use crate::hash::fnv1a64_hex;
use crate::scenario::line_col;

/// Reply used once a script in echo mode runs dry.
pub fn echo_placeholder(user_text: &str) -> String {
    format!("ECHO:{}", fnv1a64_hex(user_text))
}

#[derive(Debug, Clone)]
pub struct ScriptEntry {
    pub matcher: Option<Regex>,
    pub response: String,
    pub repeat: bool,
}

impl ScriptEntry {
    pub fn unconditional(response: impl Into<String>) -> Self {
        Self {
            matcher: None,
            response: response.into(),
            repeat: false,
        }
    }

    pub fn matching(pattern: &str, response: impl Into<String>) -> Result<Self, regex::Error> {
        Ok(Self {
            matcher: Some(Regex::new(pattern)?),
            response: response.into(),
            repeat: false,
        })
    }

    fn matches(&self, request: &CompletionRequest) -> bool {
        self.matcher
            .as_ref()
            .is_some_and(|re| re.is_match(&request.tag) || re.is_match(&request.user_text))
    }
}

#[derive(Debug)]
struct State {
    entries: Vec<ScriptEntry>,
    used: Vec<bool>,
    calls: usize,
}

#[derive(Debug)]
pub struct ScriptedBackend {
    state: Mutex<State>,
    mode: ExhaustionMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    #[serde(default)]
    entry: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    #[serde(rename = "match")]
    matcher: Option<toml::Spanned<String>>,
    response: toml::Spanned<String>,
    #[serde(default)]
    repeat: bool,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptEntry>, mode: ExhaustionMode) -> Self {
        let used = vec![false; entries.len()];
        Self {
            state: Mutex::new(State {
                entries,
                used,
                calls: 0,
            }),
            mode,
        }
    }

    pub fn from_responses<I, S>(responses: I, mode: ExhaustionMode) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(responses.into_iter().map(ScriptEntry::unconditional).collect(), mode)
    }

    pub fn parse(text: &str, mode: ExhaustionMode) -> Result<Self, LlmError> {
        let file: ScriptFile = toml::from_str(text).map_err(|e| LlmError::Script {
            line: e.span().map_or(1, |s| line_col(text, s.start).0),
            message: e.message().to_string(),
        })?;
        let mut entries = Vec::with_capacity(file.entry.len());
        for raw in file.entry {
            if raw.response.get_ref().is_empty() {
                return Err(LlmError::Script {
                    line: line_col(text, raw.response.span().start).0,
                    message: "response is empty".into(),
                });
            }
            let matcher = match raw.matcher {
                Some(pattern) => Some(Regex::new(pattern.get_ref()).map_err(|e| LlmError::Script {
                    line: line_col(text, pattern.span().start).0,
                    message: format!("invalid match pattern: {e}"),
                })?),
                None => None,
            };
            entries.push(ScriptEntry {
                matcher,
                response: raw.response.into_inner(),
                repeat: raw.repeat,
            });
        }
        Ok(Self::new(entries, mode))
    }

    pub fn load(path: &Path, mode: ExhaustionMode) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|source| LlmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, mode)
    }

    /// Entries not yet consumed.
    pub fn remaining(&self) -> usize {
        let state = self.state.lock().expect("script lock");
        state.used.iter().filter(|u| !**u).count()
    }

    pub fn calls(&self) -> usize {
        self.state.lock().expect("script lock").calls
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let mut state = self.state.lock().expect("script lock");
        state.calls += 1;
        let State { entries, used, calls } = &mut *state;

        let pick = entries
            .iter()
            .enumerate()
            .find(|(i, e)| !used[*i] && e.matches(request))
            .or_else(|| {
                entries
                    .iter()
                    .enumerate()
                    .find(|(i, e)| !used[*i] && e.matcher.is_none())
            })
            .map(|(i, _)| i);

        match pick {
            Some(i) => {
                if !entries[i].repeat {
                    used[i] = true;
                }
                Ok(entries[i].response.clone())
            }
            None => match self.mode {
                ExhaustionMode::Echo => Ok(echo_placeholder(&request.user_text)),
                ExhaustionMode::Error => Err(LlmError::ScriptExhausted { calls: *calls - 1 }),
            },
        }
    }
}
