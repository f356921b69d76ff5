//! Image sequences and their three pretext tasks.
//!
//! A sample is `seq_len` distinct captioned images in random order plus up to
//! `max_targets` target positions. From a sample we generate:
//!
//! * IIG (image index grounding): captions in the question, indices in the answer.
//! * IIC (indexed image captioning): indices in the question, index and caption
//!   pairs in the answer.
//! * ALR (adjacent location reasoning): an anchor caption and a direction in the
//!   question, the neighbour's index and caption in the answer.
//!
//! Indices are rendered as relative position codes over `seq_len`, or as bare
//! 1-based integers in free-form mode.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::seq::index;
use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{Direction, InstructionRecord, RecordMeta, RecordStamp, Task, TaskMix};
use crate::error::{GenerationError, InvariantViolation};
use crate::eval::parse_indices;
use crate::pipeline::record_rng;
use crate::position_token::{encode_relative, TimeRepresentation};
use crate::templates::{Arity, Slot, Template, TemplateBank};

/// Images per sequence.
pub const DEFAULT_SEQ_LEN: usize = 96;
/// Upper bound on targets per IIG/IIC instance.
pub const DEFAULT_MAX_TARGETS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionedImage {
    pub id: String,
    #[serde(rename = "image")]
    pub media_ref: String,
    pub caption: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PretextTask {
    Iig,
    Iic,
    Alr,
}

impl PretextTask {
    pub fn task(self) -> Task {
        match self {
            PretextTask::Iig => Task::Iig,
            PretextTask::Iic => Task::Iic,
            PretextTask::Alr => Task::Alr,
        }
    }

    pub fn from_task(task: Task) -> Option<Self> {
        match task {
            Task::Iig => Some(PretextTask::Iig),
            Task::Iic => Some(PretextTask::Iic),
            Task::Alr => Some(PretextTask::Alr),
            Task::Dvc | Task::Tvg => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageSequenceSample<'a> {
    pub images: Vec<&'a CaptionedImage>,
    /// 1-based, strictly increasing.
    pub targets: Vec<usize>,
}

impl<'a> ImageSequenceSample<'a> {
    pub fn seq_len(&self) -> usize {
        self.images.len()
    }

    pub fn caption(&self, index: usize) -> &'a str {
        &self.images[index - 1].caption
    }
}

/// Draws `seq_len` distinct images uniformly without replacement, in draw
/// order, and between 1 and `max_targets` target positions.
pub fn sample_sequence<'a, R: Rng + ?Sized>(
    pool: &'a [CaptionedImage],
    seq_len: usize,
    max_targets: usize,
    rng: &mut R,
) -> Result<ImageSequenceSample<'a>, GenerationError> {
    if seq_len == 0 {
        return Err(GenerationError::InvalidConfig(
            "sequence length must be at least 1".into(),
        ));
    }
    if max_targets == 0 || max_targets > seq_len {
        return Err(GenerationError::InvalidConfig(format!(
            "max_targets must be in 1..={seq_len}, got {max_targets}"
        )));
    }
    if pool.len() < seq_len {
        return Err(GenerationError::PoolTooSmall {
            available: pool.len(),
            required: seq_len,
        });
    }
    let images = index::sample(rng, pool.len(), seq_len)
        .into_iter()
        .map(|i| &pool[i])
        .collect();
    let count = rng.gen_range(1..=max_targets);
    let mut targets: Vec<usize> = index::sample(rng, seq_len, count).into_iter().map(|i| i + 1).collect();
    targets.sort_unstable();
    Ok(ImageSequenceSample { images, targets })
}

/// An index as it appears in text: a 4-token code or a bare integer.
pub fn render_index(index: usize, seq_len: usize, time_repr: TimeRepresentation) -> Result<String, GenerationError> {
    Ok(match time_repr {
        TimeRepresentation::RelativePositionTokens => encode_relative(index, seq_len)?.to_string(),
        TimeRepresentation::FreeFormSeconds => {
            encode_relative(index, seq_len)?;
            index.to_string()
        }
    })
}

fn render_index_list(
    indices: &[usize],
    seq_len: usize,
    time_repr: TimeRepresentation,
) -> Result<String, GenerationError> {
    let parts = indices
        .iter()
        .map(|&i| render_index(i, seq_len, time_repr))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.join(", "))
}

/// `(1) first\n(2) second...`
fn caption_list(captions: &[&str]) -> String {
    captions
        .iter()
        .enumerate()
        .map(|(i, c)| format!("({}) {c}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

fn check_targets(sample: &ImageSequenceSample<'_>) -> Result<(), GenerationError> {
    let ok = !sample.targets.is_empty()
        && sample.targets.windows(2).all(|w| w[0] < w[1])
        && sample.targets.iter().all(|&t| (1..=sample.seq_len()).contains(&t));
    if ok {
        Ok(())
    } else {
        Err(GenerationError::InvalidConfig(format!(
            "targets {:?} must be non-empty, strictly increasing and within 1..={}",
            sample.targets,
            sample.seq_len()
        )))
    }
}

fn image_record(
    sample: &ImageSequenceSample<'_>,
    task: Task,
    question: String,
    answer: String,
    meta: RecordMeta,
    stamp: RecordStamp,
) -> InstructionRecord {
    InstructionRecord {
        id: stamp.record_id("is"),
        media: sample.images.iter().map(|img| img.media_ref.clone()).collect(),
        task,
        question,
        answer,
        meta,
    }
}

fn base_meta(sample: &ImageSequenceSample<'_>, time_repr: TimeRepresentation, stamp: RecordStamp) -> RecordMeta {
    let mut meta = RecordMeta::new(time_repr, stamp);
    meta.seq_len = Some(sample.seq_len());
    meta
}

pub fn gen_iig<R: Rng + ?Sized>(
    sample: &ImageSequenceSample<'_>,
    bank: &TemplateBank,
    time_repr: TimeRepresentation,
    rng: &mut R,
    stamp: RecordStamp,
) -> Result<InstructionRecord, GenerationError> {
    check_targets(sample)?;
    let set = bank.set(Task::Iig, Arity::for_count(sample.targets.len()));
    let choice = set.choose(rng);
    let captions: Vec<&str> = sample.targets.iter().map(|&t| sample.caption(t)).collect();
    let caption_text = if captions.len() == 1 {
        captions[0].to_string()
    } else {
        caption_list(&captions)
    };
    let index_text = render_index_list(&sample.targets, sample.seq_len(), time_repr)?;
    let question = choice
        .question
        .render(|s| (s == Slot::Caption).then_some(caption_text.as_str()))?;
    let answer = choice
        .answer
        .render(|s| (s == Slot::Index).then_some(index_text.as_str()))?;
    let mut meta = base_meta(sample, time_repr, stamp);
    meta.targets = Some(sample.targets.clone());
    meta.question_template = choice.question_id;
    meta.answer_template = choice.answer_id;
    Ok(image_record(sample, Task::Iig, question, answer, meta, stamp))
}

pub fn gen_iic<R: Rng + ?Sized>(
    sample: &ImageSequenceSample<'_>,
    bank: &TemplateBank,
    time_repr: TimeRepresentation,
    rng: &mut R,
    stamp: RecordStamp,
) -> Result<InstructionRecord, GenerationError> {
    check_targets(sample)?;
    let set = bank.set(Task::Iic, Arity::for_count(sample.targets.len()));
    let choice = set.choose(rng);
    let index_text = render_index_list(&sample.targets, sample.seq_len(), time_repr)?;
    let question = choice
        .question
        .render(|s| (s == Slot::Index).then_some(index_text.as_str()))?;
    let items = sample
        .targets
        .iter()
        .map(|&t| {
            let index = render_index(t, sample.seq_len(), time_repr)?;
            let caption = sample.caption(t);
            Ok(choice.answer.render(|s| match s {
                Slot::Index => Some(index.as_str()),
                Slot::Caption => Some(caption),
                _ => None,
            })?)
        })
        .collect::<Result<Vec<_>, GenerationError>>()?;
    let mut meta = base_meta(sample, time_repr, stamp);
    meta.targets = Some(sample.targets.clone());
    meta.question_template = choice.question_id;
    meta.answer_template = choice.answer_id;
    Ok(image_record(sample, Task::Iic, question, items.join("\n"), meta, stamp))
}

/// Draws an anchor uniformly among positions that have a neighbour in
/// `direction` (boundary draws are rejected and redrawn) and asks for that
/// neighbour.
pub fn gen_alr<R: Rng + ?Sized>(
    sample: &ImageSequenceSample<'_>,
    bank: &TemplateBank,
    direction: Direction,
    time_repr: TimeRepresentation,
    rng: &mut R,
    stamp: RecordStamp,
) -> Result<InstructionRecord, GenerationError> {
    let seq_len = sample.seq_len();
    if seq_len < 2 {
        return Err(GenerationError::InvalidConfig(format!(
            "adjacent location reasoning needs at least 2 images, sequence has {seq_len}"
        )));
    }
    let anchor = loop {
        let a = rng.gen_range(1..=seq_len);
        let valid = match direction {
            Direction::Before => a > 1,
            Direction::After => a < seq_len,
        };
        if valid {
            break a;
        }
    };
    let neighbour = match direction {
        Direction::Before => anchor - 1,
        Direction::After => anchor + 1,
    };
    let choice = bank.set(Task::Alr, Arity::Single).choose(rng);
    let index_text = render_index(neighbour, seq_len, time_repr)?;
    let question = choice.question.render(|s| match s {
        Slot::Direction => Some(direction.as_str()),
        Slot::Caption1 => Some(sample.caption(anchor)),
        _ => None,
    })?;
    let answer = choice.answer.render(|s| match s {
        Slot::Index => Some(index_text.as_str()),
        Slot::Caption2 => Some(sample.caption(neighbour)),
        _ => None,
    })?;
    let mut meta = base_meta(sample, time_repr, stamp);
    meta.targets = Some(vec![neighbour]);
    meta.anchor = Some(anchor);
    meta.direction = Some(direction);
    meta.question_template = choice.question_id;
    meta.answer_template = choice.answer_id;
    Ok(image_record(sample, Task::Alr, question, answer, meta, stamp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImageCorpusConfig {
    pub n_instances: u64,
    pub seq_len: usize,
    pub max_targets: usize,
    pub task_mix: TaskMix,
    pub seed: u64,
    pub time_repr: TimeRepresentation,
}

impl Default for ImageCorpusConfig {
    fn default() -> Self {
        Self {
            n_instances: 300_000,
            seq_len: DEFAULT_SEQ_LEN,
            max_targets: DEFAULT_MAX_TARGETS,
            task_mix: TaskMix::uniform(&Task::IMAGE),
            seed: 0,
            time_repr: TimeRepresentation::RelativePositionTokens,
        }
    }
}

impl ImageCorpusConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.seq_len < 2 {
            return Err(GenerationError::InvalidConfig(format!(
                "seq_len must be at least 2, got {}",
                self.seq_len
            )));
        }
        if self.max_targets == 0 || self.max_targets > self.seq_len {
            return Err(GenerationError::InvalidConfig(format!(
                "max_targets must be in 1..={}, got {}",
                self.seq_len, self.max_targets
            )));
        }
        if let Some((task, _)) = self
            .task_mix
            .entries()
            .iter()
            .find(|(t, p)| !t.is_image_task() && *p > 0.0)
        {
            return Err(GenerationError::InvalidConfig(format!(
                "{task} is not an image-sequence task"
            )));
        }
        Ok(())
    }
}

/// Record `ordinal` of an image corpus together with the sample it was built from.
pub fn generate_image_record<'a>(
    config: &ImageCorpusConfig,
    pool: &'a [CaptionedImage],
    bank: &TemplateBank,
    ordinal: u64,
) -> Result<(InstructionRecord, ImageSequenceSample<'a>), GenerationError> {
    let mut rng = record_rng(config.seed, ordinal);
    let stamp = RecordStamp::new(config.seed, ordinal);
    let task = config.task_mix.sample(&mut rng);
    let sample = sample_sequence(pool, config.seq_len, config.max_targets, &mut rng)?;
    let record = match PretextTask::from_task(task) {
        Some(PretextTask::Iig) => gen_iig(&sample, bank, config.time_repr, &mut rng, stamp)?,
        Some(PretextTask::Iic) => gen_iic(&sample, bank, config.time_repr, &mut rng, stamp)?,
        Some(PretextTask::Alr) => {
            let direction = if rng.gen::<bool>() {
                Direction::Before
            } else {
                Direction::After
            };
            gen_alr(&sample, bank, direction, config.time_repr, &mut rng, stamp)?
        }
        None => {
            return Err(GenerationError::InvalidConfig(format!(
                "{task} is not an image-sequence task"
            )))
        }
    };
    Ok((record, sample))
}

/// Sequential stream of `config.n_instances` records.
pub fn build_image_corpus<'a>(
    config: &'a ImageCorpusConfig,
    pool: &'a [CaptionedImage],
    bank: &'a TemplateBank,
) -> Result<impl Iterator<Item = Result<InstructionRecord, GenerationError>> + 'a, GenerationError> {
    config.validate()?;
    if pool.len() < config.seq_len {
        return Err(GenerationError::PoolTooSmall {
            available: pool.len(),
            required: config.seq_len,
        });
    }
    Ok((0..config.n_instances).map(move |o| generate_image_record(config, pool, bank, o).map(|(r, _)| r)))
}

/// What an image record says once read back from its text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedImageRecord {
    /// Indices named in the answer, in order.
    pub indices: Vec<usize>,
    /// Indices named in the question (IIC only).
    pub question_indices: Vec<usize>,
    /// Captions aligned with `indices`.
    pub captions: Vec<String>,
    /// ALR anchor caption and direction from the question.
    pub anchor_caption: Option<String>,
    pub direction: Option<Direction>,
}

/// Reads indices and captions back from a generated image record using the
/// template variants recorded in its metadata.
pub fn parse_image_record(
    record: &InstructionRecord,
    bank: &TemplateBank,
) -> Result<ParsedImageRecord, InvariantViolation> {
    let fail = |msg: String| InvariantViolation::new(&record.id, msg);
    let meta = &record.meta;
    let seq_len = meta.seq_len.ok_or_else(|| fail("missing seq_len".into()))?;
    let targets = meta.targets.as_ref().ok_or_else(|| fail("missing targets".into()))?;
    let set = bank.set(record.task, Arity::for_count(targets.len()));
    let choice = set
        .pick(meta.question_template, meta.answer_template)
        .ok_or_else(|| fail("template ids out of range".into()))?;
    let q = choice
        .question
        .match_text(&record.question)
        .ok_or_else(|| fail("question does not match its template".into()))?;
    let repr = meta.time_repr;
    let slot = |values: &[(Slot, &str)], slot: Slot| -> Result<String, InvariantViolation> {
        values
            .iter()
            .find(|(s, _)| *s == slot)
            .map(|(_, v)| v.to_string())
            .ok_or_else(|| fail(format!("slot {slot} not found")))
    };
    match record.task {
        Task::Iig => {
            let a = choice
                .answer
                .match_text(&record.answer)
                .ok_or_else(|| fail("answer does not match its template".into()))?;
            let indices = parse_indices(&slot(&a, Slot::Index)?, repr, seq_len);
            let caption_text = slot(&q, Slot::Caption)?;
            let captions = if indices.len() == 1 {
                vec![caption_text]
            } else {
                split_caption_list(&caption_text, indices.len()).ok_or_else(|| fail("caption list malformed".into()))?
            };
            Ok(ParsedImageRecord {
                indices,
                question_indices: vec![],
                captions,
                anchor_caption: None,
                direction: None,
            })
        }
        Task::Iic => {
            let question_indices = parse_indices(&slot(&q, Slot::Index)?, repr, seq_len);
            let items = match_repeated(choice.answer, &record.answer, question_indices.len().max(1))
                .ok_or_else(|| fail("answer does not match its item template".into()))?;
            let mut indices = Vec::new();
            let mut captions = Vec::new();
            for item in &items {
                indices.extend(parse_indices(&slot(item, Slot::Index)?, repr, seq_len));
                captions.push(slot(item, Slot::Caption)?);
            }
            Ok(ParsedImageRecord {
                indices,
                question_indices,
                captions,
                anchor_caption: None,
                direction: None,
            })
        }
        Task::Alr => {
            let a = choice
                .answer
                .match_text(&record.answer)
                .ok_or_else(|| fail("answer does not match its template".into()))?;
            let direction = slot(&q, Slot::Direction)?.parse().map_err(fail)?;
            Ok(ParsedImageRecord {
                indices: parse_indices(&slot(&a, Slot::Index)?, repr, seq_len),
                question_indices: vec![],
                captions: vec![slot(&a, Slot::Caption2)?],
                anchor_caption: Some(slot(&q, Slot::Caption1)?),
                direction: Some(direction),
            })
        }
        other => Err(fail(format!("{other} is not an image-sequence task"))),
    }
}

/// Checks a generated record against the images it was built from: every
/// index is in range and matches the metadata, every caption is the stored
/// caption of its index, and ALR answers are exactly one step from the anchor.
pub fn verify_image_record(
    record: &InstructionRecord,
    bank: &TemplateBank,
    images: &[&CaptionedImage],
) -> Result<ParsedImageRecord, InvariantViolation> {
    let fail = |msg: String| InvariantViolation::new(&record.id, msg);
    let parsed = parse_image_record(record, bank)?;
    let seq_len = record.meta.seq_len.unwrap_or(0);
    if images.len() != seq_len || record.media.len() != seq_len {
        return Err(fail(format!(
            "sequence length {seq_len} disagrees with {} media / {} images",
            record.media.len(),
            images.len()
        )));
    }
    let targets = record.meta.targets.clone().unwrap_or_default();
    if parsed.indices != targets {
        return Err(fail(format!(
            "answer indices {:?} differ from targets {:?}",
            parsed.indices, targets
        )));
    }
    if !targets.windows(2).all(|w| w[0] < w[1]) {
        return Err(fail(format!("targets {targets:?} not strictly increasing")));
    }
    if parsed.captions.len() != parsed.indices.len() {
        return Err(fail("caption count differs from index count".into()));
    }
    for (&i, caption) in parsed.indices.iter().zip(&parsed.captions) {
        if !(1..=seq_len).contains(&i) {
            return Err(fail(format!("index {i} outside 1..={seq_len}")));
        }
        if images[i - 1].caption != *caption {
            return Err(fail(format!("caption for index {i} is not the stored caption")));
        }
    }
    if record.task == Task::Iic && parsed.question_indices != parsed.indices {
        return Err(fail("question and answer indices differ".into()));
    }
    if record.task == Task::Alr {
        let anchor = record.meta.anchor.ok_or_else(|| fail("missing anchor".into()))?;
        let direction = parsed.direction.ok_or_else(|| fail("missing direction".into()))?;
        if Some(direction) != record.meta.direction {
            return Err(fail("direction differs from metadata".into()));
        }
        if !(1..=seq_len).contains(&anchor)
            || parsed.anchor_caption.as_deref() != Some(images[anchor - 1].caption.as_str())
        {
            return Err(fail(format!("anchor caption is not the caption of image {anchor}")));
        }
        let answer = parsed.indices[0] as i64;
        if answer - anchor as i64 != direction.offset() {
            return Err(fail(format!(
                "answer {answer} is not {} anchor {anchor}",
                direction.as_str()
            )));
        }
    }
    Ok(parsed)
}

fn split_caption_list(text: &str, count: usize) -> Option<Vec<String>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Regex>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().ok()?;
    let re = cache.entry(count).or_insert_with(|| {
        let body: Vec<String> = (1..=count).map(|i| format!(r"\({i}\) (.+?)")).collect();
        Regex::new(&format!("(?s)^{}$", body.join("\n"))).expect("generated regex")
    });
    let caps = re.captures(text)?;
    Some((1..=count).map(|i| caps[i].to_string()).collect())
}

fn match_repeated<'t>(template: &Template, text: &'t str, count: usize) -> Option<Vec<Vec<(Slot, &'t str)>>> {
    if count == 1 {
        return template.match_text(text).map(|v| vec![v]);
    }
    // Items are separated by newlines; captions may not contain the exact
    // item prefix, so a lazy left-to-right split recovers them.
    template.match_repeated(text, count, "\n")
}
