use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::engine::EpisodeLog;

/// Summary of one metric over runs. `stddev` uses the n-1 denominator and is
/// 0 for a single value, which is flagged `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub degenerate: bool,
}

impl MetricStat {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Rounding can push the mean a hair outside [min, max].
        let mean = mean.clamp(min, max);
        Some(Self {
            mean,
            stddev,
            min,
            max,
            n,
            degenerate: n == 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MetricSummary {
    Values(MetricStat),
    /// Declared metric with no usable sample in any run.
    Empty,
}

impl MetricSummary {
    pub fn stat(&self) -> Option<&MetricStat> {
        match self {
            MetricSummary::Values(s) => Some(s),
            MetricSummary::Empty => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub metrics: IndexMap<String, MetricSummary>,
}

impl RunStatistics {
    pub fn get(&self, key: &str) -> Option<&MetricSummary> {
        self.metrics.get(key)
    }

    /// Statistics straight from per-metric value lists.
    pub fn from_values<'a>(groups: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> Self {
        let metrics = groups
            .into_iter()
            .map(|(k, values)| {
                let summary = MetricStat::from_values(values).map_or(MetricSummary::Empty, MetricSummary::Values);
                (k.to_string(), summary)
            })
            .collect();
        Self { metrics }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("no successful runs to aggregate")]
    NoRuns,
}

/// Per metric key, the final-round value of every run where it was not
/// missing. Keys come from the logs' declared metrics, so a metric that never
/// produced a value shows up as [`MetricSummary::Empty`].
pub fn aggregate(logs: &[EpisodeLog]) -> Result<RunStatistics, StatsError> {
    if logs.is_empty() {
        return Err(StatsError::NoRuns);
    }
    let mut values: IndexMap<String, Vec<f64>> = IndexMap::new();
    for log in logs {
        for spec in &log.metric_specs {
            for (subject, target) in spec.pairs(&log.agents) {
                values.entry(spec.stat_key(&subject, &target)).or_default();
            }
        }
    }
    for log in logs {
        let mut last: IndexMap<String, (u32, Option<f64>)> = IndexMap::new();
        for spec in &log.metric_specs {
            for s in log.metrics.iter().filter(|s| s.metric == spec.name) {
                let key = s.key(spec);
                let slot = last.entry(key).or_insert((s.round, None));
                if s.round >= slot.0 {
                    *slot = (s.round, (!s.missing).then_some(s.value));
                }
            }
        }
        for (key, (_, value)) in last {
            if let Some(v) = value {
                values.entry(key).or_default().push(v);
            }
        }
    }
    Ok(RunStatistics::from_values(
        values.iter().map(|(k, v)| (k.as_str(), v.as_slice())),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub default: f64,
    #[serde(default)]
    pub per_metric: IndexMap<String, f64>,
}

impl Tolerances {
    pub fn uniform(default: f64) -> Self {
        Self {
            default,
            per_metric: IndexMap::new(),
        }
    }

    pub fn for_metric(&self, key: &str) -> f64 {
        self.per_metric.get(key).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub achieved_mean: Option<f64>,
    pub reference_mean: f64,
    pub abs_deviation: Option<f64>,
    /// Deviation relative to the reference mean; absent when that is 0.
    pub rel_deviation: Option<f64>,
    /// `(achieved - reference) / sqrt(s_a^2/n_a + s_r^2/n_r)`, when both
    /// sides have a non-degenerate spread.
    pub standardized_difference: Option<f64>,
    pub n: usize,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metrics: Vec<MetricComparison>,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn failing(&self) -> impl Iterator<Item = &MetricComparison> {
        self.metrics.iter().filter(|m| !m.pass)
    }

    /// Plain-text table, one line per compared metric.
    pub fn render(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
        let mut out = String::from("metric\tn\tachieved\treference\tabs_dev\trel_dev\tz\ttolerance\tresult\n");
        for m in &self.metrics {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\t{}{}\n",
                m.metric,
                m.n,
                fmt(m.achieved_mean),
                m.reference_mean,
                fmt(m.abs_deviation),
                fmt(m.rel_deviation),
                fmt(m.standardized_difference),
                m.tolerance,
                if m.pass { "PASS" } else { "FAIL" },
                m.note.as_ref().map_or(String::new(), |n| format!(" ({n})")),
            ));
        }
        out.push_str(if self.pass {
            "overall: PASS\n"
        } else {
            "overall: FAIL\n"
        });
        out
    }
}

/// Compare achieved means against every metric in `reference`.
pub fn compare(stats: &RunStatistics, reference: &RunStatistics, tolerances: &Tolerances) -> ComparisonReport {
    let mut metrics = Vec::new();
    for (key, ref_summary) in &reference.metrics {
        let Some(r) = ref_summary.stat() else { continue };
        let tolerance = tolerances.for_metric(key);
        let achieved = stats.get(key);
        let comparison = match achieved.and_then(MetricSummary::stat) {
            Some(a) => {
                let diff = a.mean - r.mean;
                let abs = diff.abs();
                let rel = (r.mean != 0.0).then(|| abs / r.mean.abs());
                let z = (!a.degenerate && !r.degenerate)
                    .then(|| (a.stddev.powi(2) / a.n as f64 + r.stddev.powi(2) / r.n as f64).sqrt())
                    .filter(|se| *se > 0.0)
                    .map(|se| diff / se);
                MetricComparison {
                    metric: key.clone(),
                    achieved_mean: Some(a.mean),
                    reference_mean: r.mean,
                    abs_deviation: Some(abs),
                    rel_deviation: rel,
                    standardized_difference: z,
                    n: a.n,
                    tolerance,
                    pass: abs <= tolerance,
                    note: None,
                }
            }
            None => MetricComparison {
                metric: key.clone(),
                achieved_mean: None,
                reference_mean: r.mean,
                abs_deviation: None,
                rel_deviation: None,
                standardized_difference: None,
                n: 0,
                tolerance,
                pass: false,
                note: Some(
                    if achieved.is_some() {
                        "empty metric"
                    } else {
                        "missing metric"
                    }
                    .into(),
                ),
            },
        };
        metrics.push(comparison);
    }
    let pass = metrics.iter().all(|m| m.pass);
    ComparisonReport { metrics, pass }
}
