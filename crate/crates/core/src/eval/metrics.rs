//! Temporal and lexical metrics.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::position_token::TimeInterval;

/// Thresholds for temporal F1.
pub const F1_THRESHOLDS: [f64; 4] = [0.3, 0.5, 0.7, 0.9];
/// Thresholds for R@1.
pub const R1_THRESHOLDS: [f64; 2] = [0.5, 0.7];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("no queries to score; R@1 is undefined on an empty set")]
    EmptyQuerySet,
    #[error("{predictions} predictions for {ground_truth} ground-truth queries")]
    LengthMismatch { predictions: usize, ground_truth: usize },
    #[error("IoU threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("captions contain no tokens; type-token ratio is undefined")]
    NoTokens,
}

/// Values keyed by IoU threshold, serialized as `{"0.5": x, ...}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerThreshold(pub Vec<(f64, f64)>);

impl PerThreshold {
    pub fn get(&self, threshold: f64) -> Option<f64> {
        self.0.iter().find(|(t, _)| *t == threshold).map(|(_, v)| *v)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|(_, v)| *v)
    }
}

impl Serialize for PerThreshold {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (t, v) in &self.0 {
            map.serialize_entry(&t.to_string(), v)?;
        }
        map.end()
    }
}

pub fn check_thresholds(thresholds: &[f64]) -> Result<(), MetricError> {
    match thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        Some(&t) => Err(MetricError::InvalidThreshold(t)),
        None => Ok(()),
    }
}

/// Intersection over union of two spans in the same unit; 0 when the union
/// has zero length.
pub fn iou(a: &TimeInterval, b: &TimeInterval) -> f64 {
    debug_assert_eq!(a.unit(), b.unit());
    let inter = (a.end().min(b.end()) - a.start().max(b.start())).max(0.0);
    let union = a.length() + b.length() - inter;
    if union > 0.0 {
        (inter / union).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Fraction of queries whose prediction reaches each threshold. A missing
/// prediction (`None`) counts as a miss.
pub fn recall_at_1(
    predictions: &[Option<TimeInterval>],
    ground_truth: &[TimeInterval],
    thresholds: &[f64],
) -> Result<PerThreshold, MetricError> {
    check_thresholds(thresholds)?;
    if predictions.len() != ground_truth.len() {
        return Err(MetricError::LengthMismatch {
            predictions: predictions.len(),
            ground_truth: ground_truth.len(),
        });
    }
    if ground_truth.is_empty() {
        return Err(MetricError::EmptyQuerySet);
    }
    let ious: Vec<f64> = predictions
        .iter()
        .zip(ground_truth)
        .map(|(p, g)| p.as_ref().map_or(0.0, |p| iou(p, g)))
        .collect();
    let n = ious.len() as f64;
    Ok(PerThreshold(
        thresholds
            .iter()
            .map(|&t| (t, ious.iter().filter(|&&x| x >= t).count() as f64 / n))
            .collect(),
    ))
}

/// A largest one-to-one matching between predicted and ground-truth events
/// where a pair may match only if its IoU reaches `threshold`.
///
/// Pairs are first taken greedily in descending IoU order (ties by lower
/// prediction, then lower ground-truth index); augmenting paths then grow the
/// greedy matching until it is maximum, since greedy alone can strand a
/// prediction whose only partner was taken by a prediction with other options.
/// Returns `(pred, gt)` index pairs sorted by prediction.
pub fn match_events(pred: &[TimeInterval], gt: &[TimeInterval], threshold: f64) -> Vec<(usize, usize)> {
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); pred.len()];
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let v = iou(p, g);
            if v >= threshold && v > 0.0 {
                edges.push((v, i, j));
                adj[i].push(j);
            }
        }
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pred_to: Vec<Option<usize>> = vec![None; pred.len()];
    let mut gt_to: Vec<Option<usize>> = vec![None; gt.len()];
    for &(_, i, j) in &edges {
        if pred_to[i].is_none() && gt_to[j].is_none() {
            pred_to[i] = Some(j);
            gt_to[j] = Some(i);
        }
    }
    for i in 0..pred.len() {
        if pred_to[i].is_none() {
            let mut seen = vec![false; gt.len()];
            augment(i, &adj, &mut seen, &mut pred_to, &mut gt_to);
        }
    }
    pred_to
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect()
}

fn augment(
    i: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    pred_to: &mut [Option<usize>],
    gt_to: &mut [Option<usize>],
) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if gt_to[j].is_none() || augment(gt_to[j].expect("checked"), adj, seen, pred_to, gt_to) {
            pred_to[i] = Some(j);
            gt_to[j] = Some(i);
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdScore {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Temporal F1 of one video.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VideoF1 {
    pub per_threshold: Vec<ThresholdScore>,
    /// Mean of the per-threshold F1 values.
    pub f1: f64,
}

/// Precision is 0 with no predictions, recall is 0 with no ground truth, and
/// F1 is 0 whenever either is 0.
pub fn temporal_f1(pred: &[TimeInterval], gt: &[TimeInterval], thresholds: &[f64]) -> Result<VideoF1, MetricError> {
    check_thresholds(thresholds)?;
    if thresholds.is_empty() {
        return Err(MetricError::InvalidThreshold(f64::NAN));
    }
    let per_threshold: Vec<ThresholdScore> = thresholds
        .iter()
        .map(|&threshold| {
            let matched = match_events(pred, gt, threshold).len() as f64;
            let precision = if pred.is_empty() {
                0.0
            } else {
                matched / pred.len() as f64
            };
            let recall = if gt.is_empty() { 0.0 } else { matched / gt.len() as f64 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ThresholdScore {
                threshold,
                precision,
                recall,
                f1,
            }
        })
        .collect();
    let f1 = per_threshold.iter().map(|s| s.f1).sum::<f64>() / per_threshold.len() as f64;
    Ok(VideoF1 { per_threshold, f1 })
}

/// Description of [`tokenize`], recorded in reports.
pub const TOKENIZER: &str = "lowercase, split on runs of non-alphanumeric characters";

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Richness {
    /// Mean tokens per caption over all captions.
    pub l_avg: f64,
    /// Per-video type-token ratio averaged over videos that have tokens.
    pub ttr: f64,
}

/// Caption length and lexical diversity over `videos`, each a list of captions.
pub fn richness<S: AsRef<str>>(videos: &[Vec<S>]) -> Result<Richness, MetricError> {
    let mut captions = 0usize;
    let mut tokens = 0usize;
    let mut ttr_sum = 0.0;
    let mut ttr_videos = 0usize;
    for video in videos {
        let mut types = std::collections::HashSet::new();
        let mut video_tokens = 0usize;
        for caption in video {
            let t = tokenize(caption.as_ref());
            captions += 1;
            video_tokens += t.len();
            types.extend(t);
        }
        tokens += video_tokens;
        if video_tokens > 0 {
            ttr_sum += types.len() as f64 / video_tokens as f64;
            ttr_videos += 1;
        }
    }
    if tokens == 0 {
        return Err(MetricError::NoTokens);
    }
    Ok(Richness {
        l_avg: tokens as f64 / captions as f64,
        ttr: ttr_sum / ttr_videos as f64,
    })
}
