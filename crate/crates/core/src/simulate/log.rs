use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::strategy::StrategyConfig;
use crate::error::{ensure, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything needed to replay an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub strategy: StrategyConfig,
    pub n_iters: usize,
    pub initial_ids: Vec<u64>,
    pub pool_size: usize,
    pub n_lat: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_size: Option<usize>,
}

/// State after one iteration's queries were annotated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub queried_ids: Vec<u64>,
    pub n_annotated: usize,
    pub entropy: Option<f64>,
    pub g_an_mean: Option<Vec<f64>>,
    pub g_an_std: Option<Vec<f64>>,
    pub mmd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dice: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msd: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentLog {
    pub schema_version: u32,
    pub config: RunConfig,
    /// Set when the pool ran out before `n_iters` iterations completed.
    pub exhausted: bool,
    pub iterations: Vec<IterationRecord>,
}

impl ExperimentLog {
    pub fn strategy_name(&self) -> &'static str {
        self.config.strategy.kind.name()
    }

    /// Entropy series, with undefined entries skipped.
    pub fn entropy_series(&self) -> Vec<f64> {
        self.iterations.iter().filter_map(|r| r.entropy).collect()
    }

    /// Checks the structural guarantees of a log: contiguous iteration
    /// numbers from 0, strictly growing annotated counts, and no id queried
    /// twice.
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.schema_version == SCHEMA_VERSION,
            Format,
            "log schema version {} is not supported (expected {SCHEMA_VERSION})",
            self.schema_version
        );
        let mut seen = std::collections::HashSet::new();
        for (k, rec) in self.iterations.iter().enumerate() {
            ensure!(rec.iter == k, Format, "iteration {k} is numbered {}", rec.iter);
            if k > 0 {
                ensure!(
                    rec.n_annotated > self.iterations[k - 1].n_annotated,
                    Format,
                    "annotated count does not grow at iteration {k}"
                );
            }
            for id in &rec.queried_ids {
                ensure!(seen.insert(*id), Format, "id {id} queried twice");
            }
            ensure!(
                seen.len() == rec.n_annotated,
                Format,
                "iteration {k}: {} ids queried so far but n_annotated = {}",
                seen.len(),
                rec.n_annotated
            );
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("schema_version").and_then(|v| v.as_u64());
        ensure!(
            version == Some(u64::from(SCHEMA_VERSION)),
            Format,
            "log schema version {version:?} is not supported (expected {SCHEMA_VERSION})"
        );
        let log: ExperimentLog = serde_json::from_value(value)?;
        log.validate()?;
        Ok(log)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }
}
