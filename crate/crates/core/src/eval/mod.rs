//! Parsing timed model outputs and scoring them.

mod metrics;
mod parse;
mod run;

pub use metrics::{
    check_thresholds, iou, match_events, recall_at_1, richness, temporal_f1, tokenize, MetricError, PerThreshold,
    Richness, ThresholdScore, VideoF1, F1_THRESHOLDS, R1_THRESHOLDS, TOKENIZER,
};
pub use parse::{
    parse_codes, parse_event_line, parse_indices, parse_interval, parse_predictions, EventPrediction, ParsedPredictions,
};
pub use run::{
    eval_files_from_records, evaluate, evaluate_run, predicted_events, read_ground_truth, read_predictions, EvalError,
    EvalOptions, GroundTruthEvent, GroundTruthVideo, MetricsReport, PredictionLine,
};
