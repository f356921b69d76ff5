//! Caption sources, corpus mixing, and JSON-lines serialization.

mod caption_service;
mod config;
mod jsonl;
mod mix;
mod record;
mod sources;

pub use caption_service::{fetch_clip_captions, CaptionServiceConfig, CaptionServiceError, ClipFailure, FetchReport};
pub use config::{ClipSection, CorpusConfig, EvalSection, ImageSection, MixInput, MixSection};
pub use jsonl::{corpus_stats, read_records, write_jsonl, CorpusStats, JsonlWriter, TaskStats};
pub use mix::{mix_corpora, parse_weight_list, MixError, MixSource, TaskMix, RATIO_TOLERANCE};
pub use record::{Direction, InstructionRecord, RecordMeta, RecordStamp, Task};
pub use sources::{
    load_clip_captions, load_image_captions, load_uncaptioned_clips, read_clip_captions, read_image_captions,
    LoadError, UncaptionedClip,
};
