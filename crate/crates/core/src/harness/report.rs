use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::planner::EpisodeRecord;

use super::HarnessError;

/// Scores of all runs of one backend on one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvScore {
    pub env: String,
    pub backend: String,
    pub mean: f64,
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized: Option<f64>,
    pub runs: Vec<EpisodeRecord>,
}

impl EnvScore {
    pub fn from_runs(env: &str, backend: &str, runs: Vec<EpisodeRecord>) -> Self {
        let scores: Vec<f64> = runs.iter().map(|r| r.score).collect();
        Self {
            env: env.to_string(),
            backend: backend.to_string(),
            mean: mean(&scores),
            scores,
            normalized: None,
            runs,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub entries: Vec<EnvScore>,
}

/// One CSV row per episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub env: String,
    pub backend: String,
    pub seed: u64,
    pub score: f64,
    pub actions: usize,
    pub mean_expanded: f64,
    pub mean_depth: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// `100 * (score - random) / (human - random)`.
pub fn normalize_score(score: f64, random_score: f64, human_score: f64) -> Result<f64, HarnessError> {
    let denom = human_score - random_score;
    if denom == 0.0 {
        return Err(HarnessError::Config(
            "human and random reference scores coincide".into(),
        ));
    }
    Ok(100.0 * (score - random_score) / denom)
}

impl ScoreReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.entries
            .iter()
            .flat_map(|e| {
                e.runs.iter().map(|r| CsvRow {
                    env: e.env.clone(),
                    backend: e.backend.clone(),
                    seed: r.seed,
                    score: r.score,
                    actions: r.actions,
                    mean_expanded: r.mean_expanded(),
                    mean_depth: r.mean_depth(),
                })
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.csv_rows() {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(s)?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` next to `path`.
    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path.with_extension("csv"), self.to_csv()?)?;
        fs::write(path.with_extension("json"), self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&fs::read_to_string(path.with_extension("json"))?)
    }

    /// Fills `normalized` for each entry from per-environment references.
    pub fn normalize(&mut self, random_score: f64, human_score: f64) -> Result<(), HarnessError> {
        for e in &mut self.entries {
            e.normalized = Some(normalize_score(e.mean, random_score, human_score)?);
        }
        Ok(())
    }
}
