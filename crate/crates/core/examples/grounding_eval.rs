// Recall at rank one for grounding answers written as position codes.

use seqtime::eval::{parse_interval, recall_at_1, R1_THRESHOLDS};
use seqtime::{TimeInterval, TimeRepresentation};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let duration = 40.0;
    let answers = [
        "It happens at <2><5><0><0><5><0><0><0>.",
        "<0><0><0><0><1><0><0><0>",
        "no idea",
    ];
    let truth = [
        TimeInterval::seconds(10.0, 20.0)?,
        TimeInterval::seconds(20.0, 30.0)?,
        TimeInterval::seconds(0.0, 5.0)?,
    ];
    let predicted: Vec<Option<TimeInterval>> = answers
        .iter()
        .map(|a| parse_interval(a, TimeRepresentation::RelativePositionTokens, duration))
        .collect();
    for (a, p) in answers.iter().zip(&predicted) {
        println!("{a:45} -> {p:?}");
    }
    let r1 = recall_at_1(&predicted, &truth, &R1_THRESHOLDS)?;
    for (t, v) in r1.0 {
        println!("R@1 IoU={t}: {v:.3}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
