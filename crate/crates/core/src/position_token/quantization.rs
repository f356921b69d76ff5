//! Temporal error introduced by 4-digit position codes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{encode_relative, CODE_SPACE};

/// Grid size for the rounding-only sweep.
pub const ROUNDING_GRID_POINTS: usize = 1_200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModel {
    /// Only the 4-decimal rounding of `t / D`; independent of frame rate.
    RoundingOnly,
    /// Every source frame time is matched to the nearest of the uniformly
    /// sampled frames, each reconstructed through its code.
    FrameSampling,
}

impl std::str::FromStr for ErrorModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rounding-only" | "rounding" => Ok(Self::RoundingOnly),
            "frame-sampling" | "frames" => Ok(Self::FrameSampling),
            other => Err(format!(
                "unknown error model {other:?} (expected rounding-only or frame-sampling)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationErrorReport {
    pub model: ErrorModel,
    pub video_duration_s: f64,
    pub fps: f64,
    pub sampled_frames: usize,
    pub targets: usize,
    pub mean_abs_error_s: f64,
    pub mean_relative_error_pct: f64,
    pub max_abs_error_s: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizationError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("duration {duration_s} s at {fps} fps contains no source frames")]
    NoSourceFrames { duration_s: f64, fps: f64 },
}

pub fn quantization_error_report(
    model: ErrorModel,
    video_duration_s: f64,
    fps: f64,
    sampled_frames: usize,
) -> Result<QuantizationErrorReport, QuantizationError> {
    for (name, value) in [
        ("video duration", video_duration_s),
        ("fps", fps),
        ("sampled frames", sampled_frames as f64),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(QuantizationError::NonPositive { name, value });
        }
    }
    let (targets, sum, max) = match model {
        ErrorModel::RoundingOnly => rounding_only(video_duration_s),
        ErrorModel::FrameSampling => frame_sampling(video_duration_s, fps, sampled_frames)?,
    };
    let mean = sum / targets as f64;
    Ok(QuantizationErrorReport {
        model,
        video_duration_s,
        fps,
        sampled_frames,
        targets,
        mean_abs_error_s: mean,
        mean_relative_error_pct: 100.0 * mean / video_duration_s,
        max_abs_error_s: max,
    })
}

// Midpoint grid over [0, D). The quantizer is the unclamped nearest 4-decimal
// value; the 0.9999 clamp only concerns the last index of a sequence.
fn rounding_only(duration: f64) -> (usize, f64, f64) {
    let n = ROUNDING_GRID_POINTS;
    let scale = f64::from(CODE_SPACE);
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for k in 0..n {
        let t = (k as f64 + 0.5) * duration / n as f64;
        let recon = (t / duration * scale).round() * duration / scale;
        let err = (t - recon).abs();
        sum += err;
        max = max.max(err);
    }
    (n, sum, max)
}

fn frame_sampling(duration: f64, fps: f64, frames: usize) -> Result<(usize, f64, f64), QuantizationError> {
    let source_frames = (duration * fps).round() as usize;
    if source_frames == 0 {
        return Err(QuantizationError::NoSourceFrames {
            duration_s: duration,
            fps,
        });
    }
    let recon: Vec<f64> = (1..=frames)
        .map(|k| {
            let code = encode_relative(k, frames).expect("1 <= k <= frames");
            code.seconds(duration).expect("duration checked")
        })
        .collect();
    // recon is non-decreasing, so a single forward cursor finds the nearest point.
    let mut cursor = 0;
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for j in 0..source_frames {
        let t = j as f64 / fps;
        while cursor + 1 < recon.len() && (recon[cursor + 1] - t).abs() <= (recon[cursor] - t).abs() {
            cursor += 1;
        }
        let err = (recon[cursor] - t).abs();
        sum += err;
        max = max.max(err);
    }
    Ok((source_frames, sum, max))
}
