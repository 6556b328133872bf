use rayon::prelude::*;
use serde::Serialize;

use super::stats::{aggregate, RunStatistics, StatsError};
use crate::engine::{run_episode, EpisodeLog};
use crate::llm::{Backend, LlmError};
use crate::scenario::ScenarioConfig;

#[derive(Debug)]
pub struct RunOutcome {
    pub index: usize,
    pub seed: u64,
    pub result: Result<EpisodeLog, String>,
}

/// Run `n_runs` independent episodes; run `i` uses seed `base_seed + i` and a
/// fresh backend from `factory(i, seed)`. Results are ordered by `i` whether
/// or not `parallel` is set.
pub fn run_many<F>(
    config: &ScenarioConfig,
    factory: F,
    n_runs: usize,
    base_seed: u64,
    parallel: bool,
) -> Vec<RunOutcome>
where
    F: Fn(usize, u64) -> Result<Box<dyn Backend>, LlmError> + Sync,
{
    let one = |index: usize| {
        let seed = base_seed.wrapping_add(index as u64);
        let mut run_config = config.clone();
        run_config.run.seed = seed;
        let result = factory(index, seed)
            .map_err(|e| format!("backend setup failed: {e}"))
            .and_then(|backend| run_episode(&run_config, backend.as_ref()).map_err(|e| e.to_string()));
        RunOutcome { index, seed, result }
    };
    if parallel {
        (0..n_runs).into_par_iter().map(one).collect()
    } else {
        (0..n_runs).map(one).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunFailure {
    pub index: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiRunSummary {
    pub runs: usize,
    pub succeeded: usize,
    pub failures: Vec<RunFailure>,
    pub statistics: RunStatistics,
}

/// Aggregate the successful runs; failed runs are listed, not counted.
pub fn summarize_runs(outcomes: &[RunOutcome]) -> Result<MultiRunSummary, StatsError> {
    let logs: Vec<EpisodeLog> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok().cloned())
        .collect();
    let failures = outcomes
        .iter()
        .filter_map(|o| {
            o.result.as_ref().err().map(|e| RunFailure {
                index: o.index,
                seed: o.seed,
                error: e.clone(),
            })
        })
        .collect();
    let statistics = aggregate(&logs)?;
    Ok(MultiRunSummary {
        runs: outcomes.len(),
        succeeded: logs.len(),
        failures,
        statistics,
    })
}
