use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::position_token::TimeRepresentation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    /// Image index grounding.
    #[serde(rename = "IIG")]
    Iig,
    /// Indexed image captioning.
    #[serde(rename = "IIC")]
    Iic,
    /// Adjacent location reasoning.
    #[serde(rename = "ALR")]
    Alr,
    /// Dense video captioning.
    #[serde(rename = "DVC")]
    Dvc,
    /// Temporal video grounding.
    #[serde(rename = "TVG")]
    Tvg,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Iig, Task::Iic, Task::Alr, Task::Dvc, Task::Tvg];
    pub const IMAGE: [Task; 3] = [Task::Iig, Task::Iic, Task::Alr];
    pub const CLIP: [Task; 2] = [Task::Dvc, Task::Tvg];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Iig => "IIG",
            Task::Iic => "IIC",
            Task::Alr => "ALR",
            Task::Dvc => "DVC",
            Task::Tvg => "TVG",
        }
    }

    pub fn is_image_task(self) -> bool {
        Self::IMAGE.contains(&self)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown task {s:?} (expected one of IIG, IIC, ALR, DVC, TVG)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Before,
    After,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Before => "before",
            Direction::After => "after",
        }
    }

    /// `-1` for before, `+1` for after.
    pub fn offset(self) -> i64 {
        match self {
            Direction::Before => -1,
            Direction::After => 1,
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "before" => Ok(Direction::Before),
            "after" => Ok(Direction::After),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

/// Generation metadata carried alongside each question/answer pair.
///
/// Field order is the serialization order. Image records fill `seq_len`,
/// `targets` and (ALR only) `anchor`/`direction`; clip records fill the
/// frame and interval fields. `targets` holds 1-based positions: answer image
/// indices for image tasks, the chosen clip for TVG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// Event spans in seconds of the pseudo-video, `[start, end]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_factors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_ids: Option<Vec<String>>,
    pub time_repr: TimeRepresentation,
    pub seed: u64,
    pub ordinal: u64,
    pub question_template: usize,
    pub answer_template: usize,
}

impl RecordMeta {
    pub fn new(time_repr: TimeRepresentation, stamp: RecordStamp) -> Self {
        Self {
            seq_len: None,
            total_frames: None,
            targets: None,
            anchor: None,
            direction: None,
            intervals: None,
            frame_counts: None,
            rate_factors: None,
            pseudo_duration_s: None,
            clip_ids: None,
            time_repr,
            seed: stamp.seed,
            ordinal: stamp.ordinal,
            question_template: 0,
            answer_template: 0,
        }
    }
}

/// One question/answer training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub id: String,
    pub media: Vec<String>,
    pub task: Task,
    pub question: String,
    pub answer: String,
    pub meta: RecordMeta,
}

/// Identity of a record within a corpus run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordStamp {
    pub seed: u64,
    pub ordinal: u64,
}

impl RecordStamp {
    pub fn new(seed: u64, ordinal: u64) -> Self {
        Self { seed, ordinal }
    }

    pub fn record_id(&self, prefix: &str) -> String {
        format!("{prefix}-{}-{:07}", self.seed, self.ordinal)
    }
}
