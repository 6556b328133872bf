use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::stats::RunStatistics;
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub metric: String,
    pub value: f64,
}

/// Outcomes of earlier experiments, one record per experimental unit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDataset {
    pub records: Vec<ReferenceRecord>,
    /// Seed of the split that produced this subset, 0 for loaded data.
    pub split_seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ReferenceError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("reference dataset is empty")]
    Empty,
    #[error("split fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("{records} records cannot be split at fraction {fraction} with both subsets non-empty")]
    TooFewRecords { records: usize, fraction: f64 },
}

impl ReferenceDataset {
    /// Parse `metric,value` lines. Lines starting with `#` are comments and a
    /// leading `metric,value` header is skipped; fields follow RFC 4180
    /// quoting and surrounding whitespace is trimmed.
    pub fn parse(text: &str) -> Result<Self, ReferenceError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| ReferenceError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = row.position().map_or(0, |p| p.line());
            if row.len() != 2 {
                return Err(ReferenceError::Parse {
                    line,
                    message: format!("expected 2 fields (metric,value), found {}", row.len()),
                });
            }
            if i == 0 && &row[0] == "metric" && &row[1] == "value" {
                continue;
            }
            let value: f64 = row[1].parse().map_err(|_| ReferenceError::Parse {
                line,
                message: format!("{:?} is not a number", &row[1]),
            })?;
            if row[0].is_empty() || !value.is_finite() {
                return Err(ReferenceError::Parse {
                    line,
                    message: "metric name must be non-empty and value finite".into(),
                });
            }
            records.push(ReferenceRecord {
                metric: row[0].to_string(),
                value,
            });
        }
        if records.is_empty() {
            return Err(ReferenceError::Empty);
        }
        Ok(Self { records, split_seed: 0 })
    }

    /// Per-metric statistics over the records, metrics in first-seen order.
    pub fn statistics(&self) -> RunStatistics {
        let mut groups: IndexMap<&str, Vec<f64>> = IndexMap::new();
        for r in &self.records {
            groups.entry(r.metric.as_str()).or_default().push(r.value);
        }
        RunStatistics::from_values(groups.iter().map(|(k, v)| (*k, v.as_slice())))
    }
}

/// Shuffle with a stream seeded by `seed`, then cut: the calibration subset
/// takes the first `floor(len * fraction)` records, validation the rest.
pub fn split_reference(
    dataset: &ReferenceDataset,
    fraction: f64,
    seed: u64,
) -> Result<(ReferenceDataset, ReferenceDataset), ReferenceError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ReferenceError::BadFraction(fraction));
    }
    let n = dataset.records.len();
    let cut = (n as f64 * fraction).floor() as usize;
    if cut == 0 || cut == n {
        return Err(ReferenceError::TooFewRecords { records: n, fraction });
    }
    let mut order: Vec<usize> = (0..n).collect();
    SimRng::new(seed).shuffle(&mut order);
    let pick = |ids: &[usize]| ReferenceDataset {
        records: ids.iter().map(|&i| dataset.records[i].clone()).collect(),
        split_seed: seed,
    };
    Ok((pick(&order[..cut]), pick(&order[cut..])))
}
