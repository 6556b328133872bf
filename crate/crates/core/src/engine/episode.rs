use indexmap::IndexMap;
use sha2::{Digest, Sha256};
use tracing::{debug, info};

use super::{
    agent_act, gm_resolve, summarize_context, AgentState, EngineError, EpisodeError, EpisodeLog, ResolvedEvent,
    RetrievalConfig, LOG_FORMAT_VERSION,
};
use crate::analytics::{count_events, sample_opinion, MetricKind, MetricSample};
use crate::llm::{Backend, Recorder};
use crate::memory::{build_formative_memories, MemoryKind, MemoryStore};
use crate::scenario::{randomize_characteristics, serialize_scenario, ScenarioConfig};
use crate::templates::TEMPLATE_VERSION;

/// SHA-256 of the scenario's canonical TOML serialization, hex encoded.
pub fn config_digest(config: &ScenarioConfig) -> String {
    let canonical = serialize_scenario(config).expect("validated scenarios serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

struct Episode<'a> {
    config: ScenarioConfig,
    digest: String,
    backend: Recorder<'a>,
    retrieval: RetrievalConfig,
    names: Vec<String>,
    agents: Vec<AgentState>,
    gm_memory: MemoryStore,
    events: Vec<ResolvedEvent>,
    samples: Vec<MetricSample>,
    /// Observations each agent received since its last turn.
    pending: Vec<Vec<String>>,
}

impl<'a> Episode<'a> {
    fn new(config: &ScenarioConfig, backend: &'a dyn Backend) -> Self {
        let digest = config_digest(config);
        let mut config = config.clone();
        if config.run.randomize_characteristics {
            randomize_characteristics(&mut config);
        }
        let dim = config.run.embedding_dim;
        let names: Vec<String> = config.agents.iter().map(|a| a.name.clone()).collect();
        let agents = config
            .agents
            .iter()
            .map(|p| AgentState::new(p.clone(), MemoryStore::new(dim)))
            .collect();
        Self {
            retrieval: RetrievalConfig::from_run(&config.run),
            pending: vec![Vec::new(); names.len()],
            names,
            agents,
            gm_memory: MemoryStore::new(dim),
            events: Vec::new(),
            samples: Vec::new(),
            digest,
            backend: Recorder::new(backend),
            config,
        }
    }

    fn run(&mut self) -> Result<(), EngineError> {
        let settings = self.config.backend.clone();
        let clock = self.config.clock.clone();
        let dim = self.config.run.embedding_dim;

        if self.config.context.summary.is_empty() {
            self.config.context.summary = summarize_context(&self.config.context, &self.backend, &settings)?;
        }
        let shared = self.config.context.clone();

        for statement in shared.existence_statement().iter().chain(&shared.statements) {
            self.gm_memory.add(clock.start, statement, MemoryKind::Context)?;
        }
        self.gm_memory.add(clock.start, &shared.summary, MemoryKind::Context)?;

        for agent in &mut self.agents {
            let entries = build_formative_memories(&agent.profile, &shared, &self.backend, &settings, &clock, dim)?;
            agent.memory.extend(entries)?;
        }
        info!(
            agents = self.agents.len(),
            rounds = self.config.run.rounds,
            "agents ready"
        );

        let n = self.agents.len() as u64;
        for round in 0..self.config.run.rounds {
            for idx in 0..self.agents.len() {
                let now = clock.turn_time(u64::from(round) * n + idx as u64 + 1);
                let situation = if round == 0 || self.pending[idx].is_empty() {
                    shared.summary.clone()
                } else {
                    self.pending[idx].join("\n")
                };
                self.pending[idx].clear();

                let intent = agent_act(
                    &mut self.agents[idx],
                    &situation,
                    &self.backend,
                    &settings,
                    now,
                    round,
                    self.retrieval,
                )?;
                let event = gm_resolve(
                    &intent,
                    &mut self.gm_memory,
                    &shared,
                    &self.names,
                    &self.backend,
                    &settings,
                    self.retrieval,
                )?;
                debug!(%now, actor = %event.actor, "event resolved");
                for (i, agent) in self.agents.iter_mut().enumerate() {
                    if let Some(text) = event.observations.get(&agent.profile.name) {
                        agent.memory.add(now, text, MemoryKind::Observation)?;
                        self.pending[i].push(text.clone());
                    }
                }
                self.events.push(event);
            }
            self.sample_metrics(round)?;
        }
        Ok(())
    }

    fn sample_metrics(&mut self, round: u32) -> Result<(), EngineError> {
        let n = self.agents.len() as u64;
        let now = self.config.clock.turn_time((u64::from(round) + 1) * n);
        for spec in &self.config.metrics {
            match spec.kind {
                MetricKind::EventCount => self.samples.push(count_events(spec, &self.events, round)),
                MetricKind::Opinion => {
                    for (subject, target) in spec.pairs(&self.names) {
                        let state = self
                            .agents
                            .iter()
                            .find(|a| a.profile.name == subject)
                            .expect("metric subjects validated against agents");
                        let sample = sample_opinion(
                            spec,
                            state,
                            &target,
                            &self.backend,
                            &self.config.backend,
                            round,
                            now,
                            self.retrieval.k,
                            self.retrieval.params,
                        )?;
                        self.samples.push(sample);
                    }
                }
            }
        }
        Ok(())
    }

    fn into_log(self, error: Option<String>) -> EpisodeLog {
        EpisodeLog {
            format_version: LOG_FORMAT_VERSION,
            template_version: TEMPLATE_VERSION.to_string(),
            scenario_name: self.config.name.clone(),
            config_digest: self.digest,
            seed: self.config.run.seed,
            start: self.config.clock.start,
            rounds: self.config.run.rounds,
            agents: self.names,
            shared_summary: self.config.context.summary.clone(),
            metric_specs: self.config.metrics.clone(),
            events: self.events,
            gm_memory: self.gm_memory,
            agent_memories: self
                .agents
                .into_iter()
                .map(|a| (a.profile.name, a.memory))
                .collect::<IndexMap<_, _>>(),
            completion_transcript: self.backend.transcript(),
            metrics: self.samples,
            error,
        }
    }
}

/// Run one episode: summarize the shared context, build every agent's
/// formative memories, then play `rounds` rounds in which each agent (in
/// scenario order) acts and the game master resolves the intent. Turn `t`
/// (counting from 1 across rounds) happens at `clock.start + t * round_step`.
/// Metrics are sampled at the end of every round.
///
/// Any failure aborts the run; the error carries the partial log.
pub fn run_episode(config: &ScenarioConfig, backend: &dyn Backend) -> Result<EpisodeLog, EpisodeError> {
    let report = crate::scenario::validate_scenario(config);
    let mut episode = Episode::new(config, backend);
    if !report.is_valid() {
        let source = EngineError::Precondition(format!("invalid scenario: {report}"));
        return Err(EpisodeError {
            partial: Box::new(episode.into_log(Some(source.to_string()))),
            source,
        });
    }
    match episode.run() {
        Ok(()) => Ok(episode.into_log(None)),
        Err(source) => Err(EpisodeError {
            partial: Box::new(episode.into_log(Some(source.to_string()))),
            source,
        }),
    }
}
