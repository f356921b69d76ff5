// Write two corpora to disk, then interleave them by ratio.

use seqtime::clip_sequence::{build_clip_corpus, ClipCorpusConfig};
use seqtime::dataset_io::{
    corpus_stats, load_clip_captions, load_image_captions, mix_corpora, read_records, write_jsonl, MixSource,
};
use seqtime::image_sequence::{build_image_corpus, ImageCorpusConfig};
use seqtime::templates::TemplateBank;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("seqtime-mix-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let bank = TemplateBank::builtin();

    let images = load_image_captions(format!("{data}/sample_images.jsonl"))?;
    let image_cfg = ImageCorpusConfig {
        n_instances: 80,
        ..ImageCorpusConfig::default()
    };
    let image_records = build_image_corpus(&image_cfg, &images, &bank)?.collect::<Result<Vec<_>, _>>()?;
    write_jsonl(image_records, dir.join("image.jsonl"))?;

    let clips = load_clip_captions(format!("{data}/sample_clips.jsonl"))?;
    let clip_cfg = ClipCorpusConfig {
        n_instances: 80,
        ..ClipCorpusConfig::default()
    };
    let clip_records = build_clip_corpus(&clip_cfg, &clips, &bank)?.collect::<Result<Vec<_>, _>>()?;
    write_jsonl(clip_records, dir.join("clip.jsonl"))?;

    let sources = vec![
        MixSource::new("image", 0.25, read_records(dir.join("image.jsonl"))?),
        MixSource::new("clip", 0.75, read_records(dir.join("clip.jsonl"))?),
    ];
    let mixed = mix_corpora(&sources, 100, 3, false)?;
    write_jsonl(mixed, dir.join("mixed.jsonl"))?;

    let stats = corpus_stats(dir.join("mixed.jsonl"))?;
    for (task, s) in &stats.tasks {
        println!("{task}: {}", s.count);
    }
    assert_eq!(stats.records, 100);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
