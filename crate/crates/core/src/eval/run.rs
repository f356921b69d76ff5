//! Batch evaluation over prediction and ground-truth files.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{self, MetricError, PerThreshold, Richness, F1_THRESHOLDS, R1_THRESHOLDS, TOKENIZER};
use super::parse::{parse_interval, parse_predictions, EventPrediction};
use crate::dataset_io::{InstructionRecord, Task};
use crate::position_token::{TimeInterval, TimeRepresentation};
use crate::templates::{Arity, Slot, TemplateBank};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("{path}: video {video_id:?} appears on lines {first_line} and {second_line}")]
    DuplicateVideo {
        path: String,
        video_id: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("video ids differ: missing predictions for {missing_predictions:?}; no ground truth for {unexpected_predictions:?}")]
    IdMismatch {
        missing_predictions: Vec<String>,
        unexpected_predictions: Vec<String>,
    },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub video_id: String,
    pub output: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEvent {
    pub start: f64,
    pub end: f64,
    pub caption: String,
}

/// One line of a ground-truth file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthVideo {
    pub video_id: String,
    pub events: Vec<GroundTruthEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub time_repr: TimeRepresentation,
    pub f1_thresholds: Vec<f64>,
    pub r1_thresholds: Vec<f64>,
}

impl EvalOptions {
    pub fn new(time_repr: TimeRepresentation) -> Self {
        Self {
            time_repr,
            f1_thresholds: F1_THRESHOLDS.to_vec(),
            r1_thresholds: R1_THRESHOLDS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub videos: usize,
    pub time_repr: TimeRepresentation,
    /// First predicted span against the first ground-truth event.
    pub r_at_1: PerThreshold,
    /// Per-video mean over thresholds, then mean over videos.
    pub temporal_f1: f64,
    pub f1: PerThreshold,
    pub precision: PerThreshold,
    pub recall: PerThreshold,
    /// Mean number of predicted events per video.
    pub n_pred: f64,
    /// Absent when predicted captions carry no tokens.
    pub l_avg: Option<f64>,
    pub ttr: Option<f64>,
    pub tokenizer: &'static str,
    pub skipped_lines: usize,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>, EvalError> {
    let origin = path.display().to_string();
    let file = File::open(path).map_err(|source| EvalError::Io {
        path: origin.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io {
            path: origin.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| EvalError::Malformed {
            path: origin.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionLine>, EvalError> {
    let path = path.as_ref();
    let rows: Vec<(usize, PredictionLine)> = read_jsonl(path)?;
    check_unique(path, rows.iter().map(|(l, p)| (*l, p.video_id.as_str())))?;
    Ok(rows.into_iter().map(|(_, p)| p).collect())
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruthVideo>, EvalError> {
    let path = path.as_ref();
    let rows: Vec<(usize, GroundTruthVideo)> = read_jsonl(path)?;
    check_unique(path, rows.iter().map(|(l, g)| (*l, g.video_id.as_str())))?;
    for (line, video) in &rows {
        for e in &video.events {
            TimeInterval::seconds(e.start, e.end).map_err(|err| EvalError::Malformed {
                path: path.display().to_string(),
                line: *line,
                message: err.to_string(),
            })?;
        }
    }
    Ok(rows.into_iter().map(|(_, g)| g).collect())
}

fn check_unique<'a>(path: &Path, ids: impl Iterator<Item = (usize, &'a str)>) -> Result<(), EvalError> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (line, id) in ids {
        if let Some(&first_line) = seen.get(id) {
            return Err(EvalError::DuplicateVideo {
                path: path.display().to_string(),
                video_id: id.to_string(),
                first_line,
                second_line: line,
            });
        }
        seen.insert(id, line);
    }
    Ok(())
}

/// Events read from a model output: one per matching line, or failing that,
/// the first span found anywhere in the text with an empty caption.
pub fn predicted_events(output: &str, time_repr: TimeRepresentation, duration_s: f64) -> (Vec<EventPrediction>, usize) {
    let parsed = parse_predictions(output, time_repr, duration_s);
    if !parsed.events.is_empty() {
        return (parsed.events, parsed.skipped);
    }
    match parse_interval(output, time_repr, duration_s) {
        Some(interval) => (
            vec![EventPrediction {
                interval,
                caption: String::new(),
            }],
            0,
        ),
        None => (Vec::new(), parsed.skipped),
    }
}

struct VideoScore {
    first_pred: Option<TimeInterval>,
    first_gt: Option<TimeInterval>,
    f1: metrics::VideoF1,
    n_pred: usize,
    skipped: usize,
    captions: Vec<String>,
}

/// Scores predictions against ground truth. Video ids must match exactly.
pub fn evaluate(
    predictions: &[PredictionLine],
    ground_truth: &[GroundTruthVideo],
    options: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    metrics::check_thresholds(&options.f1_thresholds)?;
    metrics::check_thresholds(&options.r1_thresholds)?;
    let pred_ids: BTreeSet<&str> = predictions.iter().map(|p| p.video_id.as_str()).collect();
    let gt_ids: BTreeSet<&str> = ground_truth.iter().map(|g| g.video_id.as_str()).collect();
    if pred_ids != gt_ids {
        return Err(EvalError::IdMismatch {
            missing_predictions: gt_ids.difference(&pred_ids).map(|s| s.to_string()).collect(),
            unexpected_predictions: pred_ids.difference(&gt_ids).map(|s| s.to_string()).collect(),
        });
    }
    if ground_truth.is_empty() {
        return Err(MetricError::EmptyQuerySet.into());
    }
    let by_id: HashMap<&str, &PredictionLine> = predictions.iter().map(|p| (p.video_id.as_str(), p)).collect();
    let scores: Vec<VideoScore> = ground_truth
        .par_iter()
        .map(|gt| {
            let pred = by_id[gt.video_id.as_str()];
            let (events, skipped) = predicted_events(&pred.output, options.time_repr, pred.duration_s);
            let pred_spans: Vec<TimeInterval> = events.iter().map(|e| e.interval).collect();
            let gt_spans: Vec<TimeInterval> = gt
                .events
                .iter()
                .map(|e| TimeInterval::seconds(e.start, e.end).expect("validated on read"))
                .collect();
            Ok(VideoScore {
                first_pred: pred_spans.first().copied(),
                first_gt: gt_spans.first().copied(),
                f1: metrics::temporal_f1(&pred_spans, &gt_spans, &options.f1_thresholds)?,
                n_pred: events.len(),
                skipped,
                captions: events
                    .into_iter()
                    .map(|e| e.caption)
                    .filter(|c| !c.is_empty())
                    .collect(),
            })
        })
        .collect::<Result<_, MetricError>>()?;

    let n = scores.len() as f64;
    let (firsts, gts): (Vec<Option<TimeInterval>>, Vec<TimeInterval>) = scores
        .iter()
        .filter_map(|s| s.first_gt.map(|g| (s.first_pred, g)))
        .unzip();
    let r_at_1 = if gts.is_empty() {
        PerThreshold(options.r1_thresholds.iter().map(|&t| (t, 0.0)).collect())
    } else {
        metrics::recall_at_1(&firsts, &gts, &options.r1_thresholds)?
    };
    let mean_at = |k: usize, pick: fn(&metrics::ThresholdScore) -> f64| {
        scores.iter().map(|s| pick(&s.f1.per_threshold[k])).sum::<f64>() / n
    };
    let per = |pick: fn(&metrics::ThresholdScore) -> f64| {
        PerThreshold(
            options
                .f1_thresholds
                .iter()
                .enumerate()
                .map(|(k, &t)| (t, mean_at(k, pick)))
                .collect(),
        )
    };
    let captions: Vec<Vec<String>> = scores.iter().map(|s| s.captions.clone()).collect();
    let richness: Option<Richness> = match metrics::richness(&captions) {
        Ok(r) => Some(r),
        Err(MetricError::NoTokens) => {
            log::warn!("predicted captions contain no tokens; L_avg and TTR are left out");
            None
        }
        Err(e) => return Err(e.into()),
    };
    Ok(MetricsReport {
        videos: scores.len(),
        time_repr: options.time_repr,
        r_at_1,
        temporal_f1: scores.iter().map(|s| s.f1.f1).sum::<f64>() / n,
        f1: per(|s| s.f1),
        precision: per(|s| s.precision),
        recall: per(|s| s.recall),
        n_pred: scores.iter().map(|s| s.n_pred as f64).sum::<f64>() / n,
        l_avg: richness.map(|r| r.l_avg),
        ttr: richness.map(|r| r.ttr),
        tokenizer: TOKENIZER,
        skipped_lines: scores.iter().map(|s| s.skipped).sum(),
    })
}

/// Reads both files and scores them.
pub fn evaluate_run(
    pred_path: impl AsRef<Path>,
    gt_path: impl AsRef<Path>,
    options: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    let predictions = read_predictions(pred_path)?;
    let ground_truth = read_ground_truth(gt_path)?;
    evaluate(&predictions, &ground_truth, options)
}

/// Ground truth and "perfect" predictions for the clip records of `task` in a
/// generated corpus. The predictions are the records' own answers.
///
/// Ground-truth times are the exact frame-derived spans. TVG events carry the
/// query caption read back from the question.
pub fn eval_files_from_records(
    records: &[InstructionRecord],
    task: Task,
    bank: &TemplateBank,
) -> (Vec<GroundTruthVideo>, Vec<PredictionLine>) {
    let mut gt = Vec::new();
    let mut pred = Vec::new();
    for record in records.iter().filter(|r| r.task == task) {
        let meta = &record.meta;
        let (Some(intervals), Some(duration)) = (meta.intervals.as_ref(), meta.pseudo_duration_s) else {
            continue;
        };
        let events = match task {
            Task::Dvc => {
                let parsed = parse_predictions(&record.answer, meta.time_repr, duration);
                intervals
                    .iter()
                    .enumerate()
                    .map(|(i, [start, end])| GroundTruthEvent {
                        start: *start,
                        end: *end,
                        caption: parsed.events.get(i).map(|e| e.caption.clone()).unwrap_or_default(),
                    })
                    .collect()
            }
            Task::Tvg => {
                let Some(&target) = meta.targets.as_ref().and_then(|t| t.first()) else {
                    continue;
                };
                let Some([start, end]) = intervals.get(target.wrapping_sub(1)) else {
                    continue;
                };
                let caption = bank
                    .set(Task::Tvg, Arity::Single)
                    .questions
                    .get(meta.question_template)
                    .and_then(|t| t.match_text(&record.question))
                    .and_then(|v| {
                        v.into_iter()
                            .find(|(s, _)| *s == Slot::Caption)
                            .map(|(_, c)| c.to_string())
                    })
                    .unwrap_or_default();
                vec![GroundTruthEvent {
                    start: *start,
                    end: *end,
                    caption,
                }]
            }
            _ => continue,
        };
        gt.push(GroundTruthVideo {
            video_id: record.id.clone(),
            events,
        });
        pred.push(PredictionLine {
            video_id: record.id.clone(),
            output: record.answer.clone(),
            duration_s: duration,
        });
    }
    (gt, pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FF: TimeRepresentation = TimeRepresentation::FreeFormSeconds;

    fn gt(id: &str, events: &[(f64, f64, &str)]) -> GroundTruthVideo {
        GroundTruthVideo {
            video_id: id.into(),
            events: events
                .iter()
                .map(|&(start, end, c)| GroundTruthEvent {
                    start,
                    end,
                    caption: c.into(),
                })
                .collect(),
        }
    }

    fn pred(id: &str, output: &str) -> PredictionLine {
        PredictionLine {
            video_id: id.into(),
            output: output.into(),
            duration_s: 100.0,
        }
    }

    #[test]
    fn three_video_fixture() {
        let gts = vec![
            gt("a", &[(0.0, 10.0, "x"), (10.0, 20.0, "y")]),
            gt("b", &[(0.0, 10.0, "z")]),
            gt("c", &[(50.0, 60.0, "w")]),
        ];
        let preds = vec![
            pred("a", "0.0 - 10.0 seconds, the cat sat\n10.0 - 20.0 seconds, on the mat"),
            // IoU 0.6 with its ground truth.
            pred("b", "0.0 - 6.0 seconds, a a a a"),
            pred("c", "nothing useful here"),
        ];
        let r = evaluate(&preds, &gts, &EvalOptions::new(FF)).unwrap();
        assert_eq!(r.videos, 3);
        // R@0.5: a and b hit; R@0.7: only a.
        assert!((r.r_at_1.get(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.r_at_1.get(0.7).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        // Video F1: a = 1; b = (1 + 1 + 0 + 0) / 4 = 0.5; c = 0.
        assert!((r.temporal_f1 - 0.5).abs() < 1e-12);
        assert!((r.f1.get(0.3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1.get(0.9).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.n_pred - 1.0).abs() < 1e-12);
        assert_eq!(r.skipped_lines, 1);
        // Tokens: a has 6 tokens with 5 types, b has 4 with 1 type.
        assert!((r.l_avg.unwrap() - 10.0 / 3.0).abs() < 1e-12);
        assert!((r.ttr.unwrap() - (5.0 / 6.0 + 0.25) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn captions_do_not_move_temporal_metrics() {
        let gts = vec![gt("a", &[(0.0, 10.0, "x"), (12.0, 20.0, "y")])];
        let a = evaluate(
            &[pred("a", "0.0 - 9.0 seconds, one\n12.0 - 19.0 seconds, two")],
            &gts,
            &EvalOptions::new(FF),
        )
        .unwrap();
        let b = evaluate(
            &[pred("a", "0.0 - 9.0 seconds, two\n12.0 - 19.0 seconds, one")],
            &gts,
            &EvalOptions::new(FF),
        )
        .unwrap();
        assert_eq!((a.temporal_f1, a.r_at_1.clone()), (b.temporal_f1, b.r_at_1.clone()));
    }

    #[test]
    fn id_mismatch_lists_both_sides() {
        let err = evaluate(
            &[pred("a", ""), pred("q", "")],
            &[gt("a", &[]), gt("b", &[])],
            &EvalOptions::new(FF),
        )
        .unwrap_err();
        match err {
            EvalError::IdMismatch {
                missing_predictions,
                unexpected_predictions,
            } => {
                assert_eq!(missing_predictions, vec!["b"]);
                assert_eq!(unexpected_predictions, vec!["q"]);
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            evaluate(&[], &[], &EvalOptions::new(FF)),
            Err(EvalError::Metric(MetricError::EmptyQuerySet))
        ));
    }

    #[test]
    fn grounding_answer_sentence_is_a_prediction() {
        let (events, _) = predicted_events("The event happens at 5.0 - 20.0 seconds.", FF, 20.0);
        assert_eq!(events.len(), 1);
        assert_eq!((events[0].interval.start(), events[0].interval.end()), (5.0, 20.0));
    }

    #[test]
    fn files_round_trip_and_duplicates_fail() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.jsonl");
        let g = dir.path().join("g.jsonl");
        std::fs::write(
            &p,
            serde_json::to_string(&pred("a", "0.0 - 1.0 seconds, x")).unwrap() + "\n",
        )
        .unwrap();
        std::fs::write(&g, serde_json::to_string(&gt("a", &[(0.0, 1.0, "x")])).unwrap() + "\n").unwrap();
        let r = evaluate_run(&p, &g, &EvalOptions::new(FF)).unwrap();
        assert_eq!(r.temporal_f1, 1.0);
        let line = serde_json::to_string(&pred("a", "")).unwrap();
        std::fs::write(&p, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(
            read_predictions(&p),
            Err(EvalError::DuplicateVideo {
                first_line: 1,
                second_line: 2,
                ..
            })
        ));
        std::fs::write(
            &g,
            "{\"video_id\": \"a\", \"events\": [{\"start\": 5, \"end\": 1, \"caption\": \"\"}]}\n",
        )
        .unwrap();
        assert!(matches!(
            read_ground_truth(&g),
            Err(EvalError::Malformed { line: 1, .. })
        ));
    }
}
