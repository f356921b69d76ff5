// Build a small IIG/IIC/ALR corpus from the bundled image captions and check
// that every record reads back to the sample it came from.

use seqtime::dataset_io::{load_image_captions, CorpusStats};
use seqtime::image_sequence::{generate_image_record, verify_image_record, ImageCorpusConfig};
use seqtime::templates::TemplateBank;
use seqtime::TimeRepresentation;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let pool = load_image_captions(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample_images.jsonl"))?;
    let bank = TemplateBank::builtin();
    let config = ImageCorpusConfig {
        n_instances: 60,
        seed: 11,
        ..ImageCorpusConfig::default()
    };
    config.validate()?;

    let mut stats = CorpusStats::default();
    for ordinal in 0..config.n_instances {
        let (record, sample) = generate_image_record(&config, &pool, &bank, ordinal)?;
        verify_image_record(&record, &bank, &sample.images)?;
        if ordinal < 3 {
            println!(
                "[{}] {}\n  Q: {}\n  A: {}",
                record.task,
                record.id,
                first_line(&record.question),
                first_line(&record.answer)
            );
        }
        stats.add(&record);
    }
    println!("{}", serde_json::to_string_pretty(&stats)?);

    // Same ordinal, plain numbers instead of codes.
    let ff = ImageCorpusConfig {
        time_repr: TimeRepresentation::FreeFormSeconds,
        ..config
    };
    let (record, _) = generate_image_record(&ff, &pool, &bank, 0)?;
    println!("free-form: {}", first_line(&record.answer));
    Ok(())
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
