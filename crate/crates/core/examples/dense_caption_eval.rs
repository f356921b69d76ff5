// Score a model's dense captions against reference events.

use seqtime::eval::{
    evaluate, iou, match_events, predicted_events, EvalOptions, GroundTruthEvent, GroundTruthVideo, PredictionLine,
};
use seqtime::{TimeInterval, TimeRepresentation};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let gt = vec![GroundTruthVideo {
        video_id: "v1".into(),
        events: vec![
            GroundTruthEvent {
                start: 0.0,
                end: 12.0,
                caption: "a man opens the door".into(),
            },
            GroundTruthEvent {
                start: 12.0,
                end: 30.0,
                caption: "he walks the dog".into(),
            },
        ],
    }];
    let output = "0.0 - 11.5 seconds, a man opens a door\n13.0 - 29.0 seconds, he walks his dog outside";
    let preds = vec![PredictionLine {
        video_id: "v1".into(),
        output: output.into(),
        duration_s: 30.0,
    }];

    let (events, skipped) = predicted_events(output, TimeRepresentation::FreeFormSeconds, 30.0);
    println!("{} events parsed, {skipped} lines skipped", events.len());

    let spans: Vec<TimeInterval> = events.iter().map(|e| e.interval).collect();
    let refs = [TimeInterval::seconds(0.0, 12.0)?, TimeInterval::seconds(12.0, 30.0)?];
    println!("IoU of first pair: {:.3}", iou(&spans[0], &refs[0]));
    println!("matches at 0.9: {:?}", match_events(&spans, &refs, 0.9));

    let report = evaluate(&preds, &gt, &EvalOptions::new(TimeRepresentation::FreeFormSeconds))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
