//! TOML run configuration.
//!
//! Every section and key is optional; omitted keys take their defaults.
//! Command-line flags, where given, win over values from the file.
//!
//! ```toml
//! seed = 7
//! algorithms = ["iknn", "inb"]
//!
//! [pipeline]
//! normalize = "signal"          # signal | features | off
//! window = { size = 40, rate_hz = 20.0 }
//! features = { autocorr_lag = 1, sma = "absolute" }
//! learner = { knn_k = 5, knn_capacity = 2000 }
//!
//! [scenario]
//! kind = "three-round"          # three-round | script
//! activities = 5
//! profiles = "separated"        # separated | catalog | identical | custom
//! jitter_s = 0.0
//!
//! [[scenario.segments]]         # used when kind = "script"
//! activity = "Walking"
//! duration_s = 60
//!
//! [serve]
//! addr = "127.0.0.1"
//! port = 8080
//! tcp_port = 8081
//! inbox = 4096
//!
//! [batch]
//! epochs = 1
//! test_fraction = 0.2
//! ```

use std::path::Path;

use har_core::synth::{
    catalog_profiles, identical_profiles, three_round_scenario, well_separated_profiles, ActivityProfile, ScenarioScript, Segment,
    SynthError,
};
use har_core::{Algorithm, PipelineConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] SynthError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarConfig {
    pub seed: Option<u64>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub pipeline: PipelineConfig,
    pub scenario: ScenarioConfig,
    pub serve: ServeConfig,
    pub batch: BatchConfig,
}

impl HarConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Three rounds over every activity: two minutes, one minute, one minute.
    #[default]
    #[value(alias = "paper")]
    ThreeRound,
    /// The explicit `segments` list.
    Script,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileSet {
    /// Five activities with dominant frequencies 2 Hz apart.
    #[default]
    Separated,
    /// Twenty closely spaced activities.
    Catalog,
    /// Copies of one activity under different names.
    Identical,
    /// The `profile` tables of the config file.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub activities: usize,
    pub profiles: ProfileSet,
    pub jitter_s: f64,
    pub rate_hz: f64,
    pub segments: Vec<Segment>,
    #[serde(rename = "profile")]
    pub custom_profiles: Vec<ActivityProfile>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::ThreeRound,
            activities: 5,
            profiles: ProfileSet::Separated,
            jitter_s: 0.0,
            rate_hz: 20.0,
            segments: Vec::new(),
            custom_profiles: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn profiles(&self) -> Vec<ActivityProfile> {
        match self.profiles {
            ProfileSet::Separated => well_separated_profiles(),
            ProfileSet::Catalog => catalog_profiles(),
            ProfileSet::Identical => identical_profiles(self.activities.max(1)),
            ProfileSet::Custom => self.custom_profiles.clone(),
        }
    }

    /// Builds the seeded script. A positive jitter moves segment boundaries
    /// off the window grid.
    pub fn script(&self, seed: u64) -> Result<ScenarioScript, ConfigError> {
        let profiles = self.profiles();
        let mut script = match self.kind {
            ScenarioKind::ThreeRound => {
                let mut s = three_round_scenario(&profiles, self.activities, seed)?;
                s.rate_hz = self.rate_hz;
                s
            }
            ScenarioKind::Script => {
                if self.segments.is_empty() {
                    return Err(ConfigError::Invalid("scenario kind \"script\" needs at least one segment".into()));
                }
                ScenarioScript {
                    segments: self.segments.clone(),
                    rate_hz: self.rate_hz,
                    seed,
                }
            }
        };
        if self.jitter_s > 0.0 {
            script = script.jittered(self.jitter_s, seed ^ 0x6a09_e667);
        }
        Ok(script)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub addr: String,
    pub port: u16,
    pub tcp_port: Option<u16>,
    pub inbox: usize,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1".into(),
            port: 8080,
            tcp_port: None,
            inbox: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    pub epochs: usize,
    pub test_fraction: f64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            test_fraction: 0.2,
        }
    }
}
