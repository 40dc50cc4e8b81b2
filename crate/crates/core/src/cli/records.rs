//! Trajectory records: one JSON object per line.

use serde::{Deserialize, Serialize};

use crate::discrete::FrequencyRun;
use crate::error::{ConfigIssue, Error, Result};
use crate::scaling::JumpEvent;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Events {
    Outcomes(Vec<usize>),
    Jumps(Vec<JumpEvent>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseRecord {
    pub time: f64,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub schema_version: u32,
    pub scenario: String,
    pub trajectory_id: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_alpha: Option<usize>,
    #[serde(default)]
    pub times: Vec<f64>,
    /// `Q` or `diag(ρ)` at each time.
    #[serde(default)]
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Events>,
    /// Outcome counts at the end of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    #[serde(default)]
    pub collapse: Option<CollapseRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrajectoryRecord {
    pub fn failed(scenario: &str, trajectory_id: u64, seed: u64, error: &Error) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.to_string(),
            trajectory_id,
            seed,
            sampled_alpha: None,
            times: Vec::new(),
            values: Vec::new(),
            events: None,
            counts: None,
            collapse: None,
            error: Some(error.to_string()),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// First recorded time at which `max_α value ≥ threshold`.
pub fn first_collapse(times: &[f64], values: &[Vec<f64>], threshold: f64) -> Option<CollapseRecord> {
    times.iter().zip(values).find_map(|(&time, q)| {
        let (target, w) = q
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (a, w)| if w > best.1 { (a, w) } else { best });
        (w >= threshold).then_some(CollapseRecord { time, target })
    })
}

/// Only the fields needed to recover outcome frequencies.
#[derive(Debug, Deserialize)]
struct CountsOnly {
    schema_version: u32,
    #[serde(default)]
    counts: Option<Vec<u64>>,
}

/// Reads the outcome counts of every record in a JSON-lines stream. Blank
/// lines are skipped; records without counts yield `None`. Malformed lines
/// are reported as `{source}:{line}` issues.
pub fn parse_run_records(source: &str, text: &str) -> Result<Vec<Option<FrequencyRun>>> {
    let mut runs = Vec::new();
    let mut issues = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let location = format!("{source}:{}", index + 1);
        match serde_json::from_str::<CountsOnly>(line) {
            Ok(record) if record.schema_version != SCHEMA_VERSION => issues.push(ConfigIssue::new(
                location,
                format!("schema version {} is not supported", record.schema_version),
            )),
            Ok(record) => runs.push(record.counts.map(|counts| FrequencyRun { counts })),
            Err(e) => issues.push(ConfigIssue::new(location, e.to_string())),
        }
    }
    if issues.is_empty() {
        Ok(runs)
    } else {
        Err(Error::Config(issues))
    }
}
