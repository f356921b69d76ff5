// How much time the four-digit grid loses, with and without frame sampling.

use seqtime::position_token::{quantization_error_report, ErrorModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for model in [ErrorModel::RoundingOnly, ErrorModel::FrameSampling] {
        let r = quantization_error_report(model, 60.0, 30.0, 96)?;
        println!(
            "{:?}: mean {:.5} s ({:.4}%), max {:.5} s over {} targets",
            r.model, r.mean_abs_error_s, r.mean_relative_error_pct, r.max_abs_error_s, r.targets
        );
        assert!(r.mean_abs_error_s >= 0.0);
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
