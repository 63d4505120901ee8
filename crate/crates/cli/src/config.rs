//! Run configuration: a JSON file mirroring the tunable flags. Precedence is
//! flags > environment (DENTALSCAN_* ) > config file > built-in defaults.
//! Unknown keys in the file are rejected; the effective values are echoed
//! into every report.

use std::path::Path;

use dentalscan_core::instances::SizeDefinition;
use dentalscan_core::metrics::TsaAveraging;
use dentalscan_core::preprocess::DEFAULT_VERTEX_MERGE_TOLERANCE;
use serde::{Deserialize, Serialize};

use crate::io::{read_bytes, CliError, CliResult};

pub const ENV_PREFIX: &str = "DENTALSCAN_";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub merge_tolerance: Option<f64>,
    pub size_definition: Option<SizeDefinition>,
    pub tsa_averaging: Option<TsaAveraging>,
    pub workers: Option<usize>,
    pub team: Option<String>,
    pub eps: Option<f64>,
    pub min_pts: Option<usize>,
    pub cutoff_distance: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub iou_threshold: Option<f64>,
    pub cell_size: Option<f64>,
    pub iterations: Option<usize>,
    pub min_island_faces: Option<usize>,
}

/// The fully resolved values a run actually used, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub merge_tolerance: f64,
    pub size_definition: SizeDefinition,
    pub tsa_averaging: TsaAveraging,
    pub workers: usize,
    pub team: String,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => {
                let bytes = read_bytes(p)?;
                serde_json::from_slice(&bytes).map_err(|e| {
                    CliError::domain("CONFIG_PARSE", format!("{}: {e}", p.display()))
                })?
            }
            None => RunConfig::default(),
        };
        cfg.apply_env()?;
        Ok(cfg)
    }

    fn apply_env(&mut self) -> CliResult<()> {
        fn parse<T: std::str::FromStr>(key: &str, raw: &str) -> CliResult<T>
        where
            T::Err: std::fmt::Display,
        {
            raw.parse().map_err(|e| {
                CliError::Usage(format!("{ENV_PREFIX}{key}={raw:?} is invalid: {e}"))
            })
        }
        if let Ok(v) = std::env::var(format!("{ENV_PREFIX}WORKERS")) {
            self.workers = Some(parse("WORKERS", &v)?);
        }
        if let Ok(v) = std::env::var(format!("{ENV_PREFIX}MERGE_TOLERANCE")) {
            self.merge_tolerance = Some(parse("MERGE_TOLERANCE", &v)?);
        }
        if let Ok(v) = std::env::var(format!("{ENV_PREFIX}TEAM")) {
            self.team = Some(v);
        }
        Ok(())
    }

    pub fn effective(&self) -> EffectiveConfig {
        EffectiveConfig {
            merge_tolerance: self.merge_tolerance.unwrap_or(DEFAULT_VERTEX_MERGE_TOLERANCE),
            size_definition: self.size_definition.unwrap_or_default(),
            tsa_averaging: self.tsa_averaging.unwrap_or_default(),
            workers: self
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            team: self.team.clone().unwrap_or_else(|| "unnamed".to_string()),
        }
    }
}
