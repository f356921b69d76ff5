// Stitch captioned clips into pseudo-videos and emit DVC/TVG records.

use seqtime::clip_sequence::{
    compose_sequence, derive_annotations, generate_clip_record, verify_clip_record, ClipCorpusConfig,
};
use seqtime::dataset_io::load_clip_captions;
use seqtime::pipeline::record_rng;
use seqtime::templates::TemplateBank;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let pool = load_clip_captions(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample_clips.jsonl"))?;
    let config = ClipCorpusConfig {
        n_instances: 40,
        seed: 5,
        ..ClipCorpusConfig::default()
    };

    let mut rng = record_rng(config.seed, 0);
    let sample = compose_sequence(&pool, 4, config.total_frames, config.rate_range, &mut rng)?;
    println!(
        "pseudo-video of {:.2} s, frames {:?}",
        sample.pseudo_duration_s, sample.frame_counts
    );
    for event in derive_annotations(&sample) {
        let s = event.seconds(sample.pseudo_duration_s);
        println!("  {:6.2} - {:6.2} s  {}", s.start(), s.end(), event.caption);
    }

    let bank = TemplateBank::builtin();
    for ordinal in 0..config.n_instances {
        let (record, _) = generate_clip_record(&config, &pool, &bank, ordinal)?;
        verify_clip_record(&record)?;
        if ordinal < 2 {
            println!("[{}] {}\n{}", record.task, record.question, record.answer);
        }
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
