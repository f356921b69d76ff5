//! Run configuration read from a TOML or JSON file.
//!
//! Every field is optional; command-line flags override whatever the file
//! sets. Unknown keys are rejected so that typos fail loudly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mix::{MixError, RATIO_TOLERANCE};
use super::TaskMix;
use crate::error::Error;
use crate::position_token::TimeRepresentation;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub seed: Option<u64>,
    pub time_repr: Option<TimeRepresentation>,
    pub jobs: Option<usize>,
    /// Template bank replacing the built-in one.
    pub templates: Option<PathBuf>,
    pub image: ImageSection,
    pub clip: ClipSection,
    pub mix: MixSection,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSection {
    pub source: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub n_instances: Option<u64>,
    pub seq_len: Option<usize>,
    pub max_targets: Option<usize>,
    pub task_mix: Option<TaskMix>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClipSection {
    pub source: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub n_instances: Option<u64>,
    pub clip_range: Option<[usize; 2]>,
    pub total_frames: Option<usize>,
    pub rate_range: Option<[f64; 2]>,
    pub task_mix: Option<TaskMix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixInput {
    pub path: PathBuf,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixSection {
    pub inputs: Vec<MixInput>,
    pub total: Option<u64>,
    pub replacement: Option<bool>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub f1_thresholds: Option<Vec<f64>>,
    pub r1_thresholds: Option<Vec<f64>>,
}

impl CorpusConfig {
    /// Reads `path` as JSON when it ends in `.json`, as TOML otherwise.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let config: Self = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        config
            .validate()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    /// Checks mix ratios; task mixes are already checked while parsing.
    pub fn validate(&self) -> Result<(), MixError> {
        if self.mix.inputs.is_empty() {
            return Ok(());
        }
        let mut sum = 0.0;
        for input in &self.mix.inputs {
            if !(input.ratio.is_finite() && input.ratio >= 0.0) {
                return Err(MixError::InvalidRatio {
                    name: input.path.display().to_string(),
                    ratio: input.ratio,
                });
            }
            sum += input.ratio;
        }
        if (sum - 1.0).abs() > RATIO_TOLERANCE {
            return Err(MixError::BadSum(sum));
        }
        Ok(())
    }
}
