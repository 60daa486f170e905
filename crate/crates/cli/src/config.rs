use std::fs;
use std::path::Path;

use anyhow::Context;
use lidar_mot::clustering::ClusteringParams;
use lidar_mot::detection::{BoxLimits, DetectorConfig};
use lidar_mot::evaluation::DEFAULT_MATCH_DISTANCE;
use lidar_mot::preprocess::PreprocessConfig;
use lidar_mot::tracking::TrackerConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::exit::{CliError, CliResult};

/// Every tunable of the pipeline; missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub clustering: ClusteringParams,
    pub limits: BoxLimits,
    pub tracker: TrackerConfig,
    /// BEV centroid gate for evaluation, meters.
    pub match_distance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            clustering: ClusteringParams::default(),
            limits: BoxLimits::default(),
            tracker: TrackerConfig::default(),
            match_distance: DEFAULT_MATCH_DISTANCE,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> lidar_mot::Result<()> {
        self.detector().validate()?;
        self.tracker.validate()?;
        if !(self.match_distance > 0.0) || !self.match_distance.is_finite() {
            return Err(lidar_mot::Error::InvalidArgument(format!(
                "match_distance must be > 0, got {}",
                self.match_distance
            )));
        }
        Ok(())
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            preprocess: self.preprocess.clone(),
            clustering: self.clustering,
            limits: self.limits,
        }
    }
}

/// Reads a JSON config, or the defaults when `path` is `None`.
/// All failures are configuration errors.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))
        .map_err(CliError::usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid config {}", path.display()))
        .map_err(CliError::usage)
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("config types serialize infallibly");
    s.push('\n');
    s
}
