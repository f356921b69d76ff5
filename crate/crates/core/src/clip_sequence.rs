//! Pseudo-long videos stitched from captioned short clips.
//!
//! Each sample draws 2 to 10 clips, gives each a random playback-rate factor,
//! and splits a fixed frame budget across the clips in proportion to
//! `duration * rate`. Event boundaries then follow from frame positions: clip
//! `j` spans `[S(j-1) / N, S(j) / N]` where `S` is the running frame count.
//! The absolute timeline of the pseudo video is the sum of the real clip
//! durations.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{InstructionRecord, RecordMeta, RecordStamp, Task, TaskMix};
use crate::error::{GenerationError, InvariantViolation};
use crate::eval::{parse_interval, parse_predictions};
use crate::pipeline::record_rng;
use crate::position_token::{encode_ratio, format_seconds, TimeInterval, TimeRepresentation, QUANTUM};
use crate::templates::{Arity, Slot, TemplateBank};

pub const MIN_CLIPS: usize = 2;
pub const MAX_CLIPS: usize = 10;
pub const DEFAULT_TOTAL_FRAMES: usize = 96;

/// Rejected draws before label distinctness is relaxed, per clip requested.
const DISTINCT_LABEL_ATTEMPTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionedClip {
    pub id: String,
    #[serde(rename = "video")]
    pub media_ref: String,
    #[serde(rename = "label")]
    pub action_label: String,
    pub caption: String,
    pub duration_s: f64,
    pub fps: f64,
}

/// Closed range of playback-rate factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct RateRange {
    min: f64,
    max: f64,
}

impl RateRange {
    pub fn new(min: f64, max: f64) -> Result<Self, GenerationError> {
        if !(min > 0.0 && min.is_finite() && max.is_finite() && min <= max) {
            return Err(GenerationError::InvalidConfig(format!(
                "rate range [{min}, {max}] must be positive and ordered"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }
}

impl Default for RateRange {
    fn default() -> Self {
        Self { min: 0.5, max: 2.0 }
    }
}

impl TryFrom<[f64; 2]> for RateRange {
    type Error = GenerationError;

    fn try_from([min, max]: [f64; 2]) -> Result<Self, Self::Error> {
        Self::new(min, max)
    }
}

impl From<RateRange> for [f64; 2] {
    fn from(r: RateRange) -> Self {
        [r.min, r.max]
    }
}

#[derive(Debug, Clone)]
pub struct ClipSequenceSample<'a> {
    pub clips: Vec<&'a CaptionedClip>,
    pub rate_factors: Vec<f64>,
    pub frame_counts: Vec<usize>,
    pub total_frames: usize,
    pub pseudo_duration_s: f64,
}

impl ClipSequenceSample<'_> {
    /// Frame index at which each clip starts, plus the final boundary `N`.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.frame_counts.len() + 1);
        let mut acc = 0;
        out.push(0);
        for &n in &self.frame_counts {
            acc += n;
            out.push(acc);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventAnnotation {
    /// Relative span of the pseudo video.
    pub interval: TimeInterval,
    /// Boundary frames `(first, one past last)` out of `total_frames`.
    pub frames: (usize, usize),
    pub caption: String,
    pub clip_id: String,
}

impl EventAnnotation {
    pub fn seconds(&self, pseudo_duration_s: f64) -> TimeInterval {
        self.interval
            .to_seconds(pseudo_duration_s)
            .expect("relative interval and positive duration")
    }
}

/// Splits `total` into integer parts proportional to `weights` by largest
/// remainder, then tops up any part below `min_each` by taking units from the
/// largest parts. Ties go to the lower index.
pub fn apportion(total: usize, weights: &[f64], min_each: usize) -> Result<Vec<usize>, GenerationError> {
    if weights.is_empty() {
        return Err(GenerationError::InvalidConfig("nothing to apportion".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(GenerationError::InvalidConfig(format!(
            "apportionment weight {w} must be positive"
        )));
    }
    if total < min_each * weights.len() {
        return Err(GenerationError::InvalidConfig(format!(
            "{total} frames cannot give {} clips at least {min_each} each",
            weights.len()
        )));
    }
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut parts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = parts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    // Float floors can leave the sum off by more than len in pathological
    // inputs; cycling keeps the total exact either way.
    let mut k = 0;
    let mut remaining = total.saturating_sub(assigned);
    while remaining > 0 {
        parts[order[k % order.len()]] += 1;
        remaining -= 1;
        k += 1;
    }
    for i in 0..parts.len() {
        while parts[i] < min_each {
            let donor = (0..parts.len())
                .filter(|&j| parts[j] > min_each)
                .max_by(|&a, &b| parts[a].cmp(&parts[b]).then(b.cmp(&a)))
                .expect("total covers the floor");
            parts[donor] -= 1;
            parts[i] += 1;
        }
    }
    Ok(parts)
}

/// Draws `n_clips` distinct clips, preferring distinct action labels and, when
/// the pool lacks variety, at least different labels for neighbours. Rates and
/// frame counts are assigned afterwards.
pub fn compose_sequence<'a, R: Rng + ?Sized>(
    pool: &'a [CaptionedClip],
    n_clips: usize,
    total_frames: usize,
    rate_range: RateRange,
    rng: &mut R,
) -> Result<ClipSequenceSample<'a>, GenerationError> {
    if !(MIN_CLIPS..=MAX_CLIPS).contains(&n_clips) {
        return Err(GenerationError::InvalidConfig(format!(
            "a clip sequence needs {MIN_CLIPS} to {MAX_CLIPS} clips, got {n_clips}"
        )));
    }
    if pool.len() < n_clips {
        return Err(GenerationError::PoolTooSmall {
            available: pool.len(),
            required: n_clips,
        });
    }
    if total_frames < n_clips {
        return Err(GenerationError::InvalidConfig(format!(
            "total_frames {total_frames} is smaller than the {n_clips} clips it must cover"
        )));
    }
    let mut used = HashSet::with_capacity(n_clips);
    let mut labels = HashSet::with_capacity(n_clips);
    let mut clips: Vec<&CaptionedClip> = Vec::with_capacity(n_clips);
    for _ in 0..n_clips {
        let prev = clips.last().map(|c| c.action_label.as_str());
        let fresh_label = |i: usize| !used.contains(&i) && !labels.contains(pool[i].action_label.as_str());
        let not_adjacent = |i: usize| !used.contains(&i) && Some(pool[i].action_label.as_str()) != prev;
        let unused = |i: usize| !used.contains(&i);
        let pick = (0..DISTINCT_LABEL_ATTEMPTS)
            .map(|_| rng.gen_range(0..pool.len()))
            .find(|&i| fresh_label(i))
            .or_else(|| pick_where(pool.len(), fresh_label, rng))
            .or_else(|| pick_where(pool.len(), not_adjacent, rng))
            .or_else(|| pick_where(pool.len(), unused, rng))
            .expect("pool holds at least n_clips clips");
        used.insert(pick);
        labels.insert(pool[pick].action_label.as_str());
        clips.push(&pool[pick]);
    }
    let rate_factors: Vec<f64> = (0..n_clips).map(|_| rate_range.sample(rng)).collect();
    let weights: Vec<f64> = clips.iter().zip(&rate_factors).map(|(c, r)| c.duration_s * r).collect();
    let frame_counts = apportion(total_frames, &weights, 1)?;
    let pseudo_duration_s = clips.iter().map(|c| c.duration_s).sum();
    Ok(ClipSequenceSample {
        clips,
        rate_factors,
        frame_counts,
        total_frames,
        pseudo_duration_s,
    })
}

fn pick_where<R: Rng + ?Sized>(n: usize, keep: impl Fn(usize) -> bool, rng: &mut R) -> Option<usize> {
    let candidates: Vec<usize> = (0..n).filter(|&i| keep(i)).collect();
    (!candidates.is_empty()).then(|| candidates[rng.gen_range(0..candidates.len())])
}

pub fn derive_annotations(sample: &ClipSequenceSample<'_>) -> Vec<EventAnnotation> {
    let n = sample.total_frames as f64;
    let bounds = sample.boundaries();
    sample
        .clips
        .iter()
        .zip(bounds.windows(2))
        .map(|(clip, w)| EventAnnotation {
            interval: TimeInterval::relative(w[0] as f64 / n, w[1] as f64 / n).expect("boundaries within 0..=N"),
            frames: (w[0], w[1]),
            caption: clip.caption.clone(),
            clip_id: clip.id.clone(),
        })
        .collect()
}

/// Collapses whitespace so a caption always fits on one line.
pub fn flatten_caption(caption: &str) -> String {
    caption.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// An event span as it appears in text.
pub fn render_interval(
    event: &EventAnnotation,
    total_frames: usize,
    pseudo_duration_s: f64,
    time_repr: TimeRepresentation,
) -> Result<String, GenerationError> {
    Ok(match time_repr {
        TimeRepresentation::RelativePositionTokens => {
            format!(
                "{}{}",
                encode_ratio(event.frames.0, total_frames)?,
                encode_ratio(event.frames.1, total_frames)?
            )
        }
        TimeRepresentation::FreeFormSeconds => {
            let s = event.seconds(pseudo_duration_s);
            format!("{} - {} seconds", format_seconds(s.start()), format_seconds(s.end()))
        }
    })
}

fn render_event_line(
    event: &EventAnnotation,
    sample: &ClipSequenceSample<'_>,
    time_repr: TimeRepresentation,
) -> Result<String, GenerationError> {
    let span = render_interval(event, sample.total_frames, sample.pseudo_duration_s, time_repr)?;
    let caption = flatten_caption(&event.caption);
    Ok(match time_repr {
        TimeRepresentation::RelativePositionTokens => format!("{span} {caption}"),
        TimeRepresentation::FreeFormSeconds => format!("{span}, {caption}"),
    })
}

fn check_sample(sample: &ClipSequenceSample<'_>) -> Result<(), GenerationError> {
    let k = sample.clips.len();
    let ok = (MIN_CLIPS..=MAX_CLIPS).contains(&k)
        && sample.frame_counts.len() == k
        && sample.frame_counts.iter().all(|&n| n >= 1)
        && sample.frame_counts.iter().sum::<usize>() == sample.total_frames
        && sample.pseudo_duration_s > 0.0;
    if ok {
        Ok(())
    } else {
        Err(GenerationError::InvalidConfig(format!(
            "clip sample with {k} clips and frame counts {:?} does not cover {} frames",
            sample.frame_counts, sample.total_frames
        )))
    }
}

fn clip_meta(
    sample: &ClipSequenceSample<'_>,
    annotations: &[EventAnnotation],
    time_repr: TimeRepresentation,
    stamp: RecordStamp,
) -> RecordMeta {
    let mut meta = RecordMeta::new(time_repr, stamp);
    meta.total_frames = Some(sample.total_frames);
    meta.intervals = Some(
        annotations
            .iter()
            .map(|a| {
                let s = a.seconds(sample.pseudo_duration_s);
                [s.start(), s.end()]
            })
            .collect(),
    );
    meta.frame_counts = Some(sample.frame_counts.clone());
    meta.rate_factors = Some(sample.rate_factors.clone());
    meta.pseudo_duration_s = Some(sample.pseudo_duration_s);
    meta.clip_ids = Some(sample.clips.iter().map(|c| c.id.clone()).collect());
    meta
}

fn clip_record(
    sample: &ClipSequenceSample<'_>,
    task: Task,
    question: String,
    answer: String,
    meta: RecordMeta,
    stamp: RecordStamp,
) -> InstructionRecord {
    InstructionRecord {
        id: stamp.record_id("cs"),
        media: sample.clips.iter().map(|c| c.media_ref.clone()).collect(),
        task,
        question,
        answer,
        meta,
    }
}

/// Every clip as one `span caption` line, in temporal order.
pub fn gen_dvc<R: Rng + ?Sized>(
    sample: &ClipSequenceSample<'_>,
    bank: &TemplateBank,
    time_repr: TimeRepresentation,
    rng: &mut R,
    stamp: RecordStamp,
) -> Result<InstructionRecord, GenerationError> {
    check_sample(sample)?;
    let annotations = derive_annotations(sample);
    let lines = annotations
        .iter()
        .map(|a| render_event_line(a, sample, time_repr))
        .collect::<Result<Vec<_>, _>>()?;
    let events = lines.join("\n");
    let choice = bank.set(Task::Dvc, Arity::Single).choose(rng);
    let question = choice.question.render(|_| None)?;
    let answer = choice
        .answer
        .render(|s| (s == Slot::Events).then_some(events.as_str()))?;
    let mut meta = clip_meta(sample, &annotations, time_repr, stamp);
    meta.question_template = choice.question_id;
    meta.answer_template = choice.answer_id;
    Ok(clip_record(sample, Task::Dvc, question, answer, meta, stamp))
}

/// Grounds one uniformly chosen clip.
pub fn gen_tvg<R: Rng + ?Sized>(
    sample: &ClipSequenceSample<'_>,
    bank: &TemplateBank,
    time_repr: TimeRepresentation,
    rng: &mut R,
    stamp: RecordStamp,
) -> Result<InstructionRecord, GenerationError> {
    check_sample(sample)?;
    let annotations = derive_annotations(sample);
    let chosen = rng.gen_range(0..annotations.len());
    let event = &annotations[chosen];
    let span = render_interval(event, sample.total_frames, sample.pseudo_duration_s, time_repr)?;
    let caption = flatten_caption(&event.caption);
    let choice = bank.set(Task::Tvg, Arity::Single).choose(rng);
    let question = choice
        .question
        .render(|s| (s == Slot::Caption).then_some(caption.as_str()))?;
    let answer = choice
        .answer
        .render(|s| (s == Slot::Interval).then_some(span.as_str()))?;
    let mut meta = clip_meta(sample, &annotations, time_repr, stamp);
    meta.targets = Some(vec![chosen + 1]);
    meta.question_template = choice.question_id;
    meta.answer_template = choice.answer_id;
    Ok(clip_record(sample, Task::Tvg, question, answer, meta, stamp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClipCorpusConfig {
    pub n_instances: u64,
    /// Inclusive bounds on clips per sequence.
    pub clip_range: [usize; 2],
    pub total_frames: usize,
    pub rate_range: RateRange,
    pub task_mix: TaskMix,
    pub seed: u64,
    pub time_repr: TimeRepresentation,
}

impl Default for ClipCorpusConfig {
    fn default() -> Self {
        Self {
            n_instances: 100_000,
            clip_range: [MIN_CLIPS, MAX_CLIPS],
            total_frames: DEFAULT_TOTAL_FRAMES,
            rate_range: RateRange::default(),
            task_mix: TaskMix::uniform(&Task::CLIP),
            seed: 0,
            time_repr: TimeRepresentation::RelativePositionTokens,
        }
    }
}

impl ClipCorpusConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        let [lo, hi] = self.clip_range;
        if lo < MIN_CLIPS || hi > MAX_CLIPS || lo > hi {
            return Err(GenerationError::InvalidConfig(format!(
                "clip_range [{lo}, {hi}] must lie within [{MIN_CLIPS}, {MAX_CLIPS}]"
            )));
        }
        if self.total_frames < hi {
            return Err(GenerationError::InvalidConfig(format!(
                "total_frames {} is smaller than the largest clip count {hi}",
                self.total_frames
            )));
        }
        if let Some((task, _)) = self
            .task_mix
            .entries()
            .iter()
            .find(|(t, p)| t.is_image_task() && *p > 0.0)
        {
            return Err(GenerationError::InvalidConfig(format!(
                "{task} is not a clip-sequence task"
            )));
        }
        Ok(())
    }
}

/// Record `ordinal` of a clip corpus together with the sample it was built from.
pub fn generate_clip_record<'a>(
    config: &ClipCorpusConfig,
    pool: &'a [CaptionedClip],
    bank: &TemplateBank,
    ordinal: u64,
) -> Result<(InstructionRecord, ClipSequenceSample<'a>), GenerationError> {
    let mut rng = record_rng(config.seed, ordinal);
    let stamp = RecordStamp::new(config.seed, ordinal);
    let task = config.task_mix.sample(&mut rng);
    let n_clips = rng.gen_range(config.clip_range[0]..=config.clip_range[1]);
    let sample = compose_sequence(pool, n_clips, config.total_frames, config.rate_range, &mut rng)?;
    let record = match task {
        Task::Dvc => gen_dvc(&sample, bank, config.time_repr, &mut rng, stamp)?,
        Task::Tvg => gen_tvg(&sample, bank, config.time_repr, &mut rng, stamp)?,
        other => {
            return Err(GenerationError::InvalidConfig(format!(
                "{other} is not a clip-sequence task"
            )))
        }
    };
    Ok((record, sample))
}

/// Sequential stream of `config.n_instances` records.
pub fn build_clip_corpus<'a>(
    config: &'a ClipCorpusConfig,
    pool: &'a [CaptionedClip],
    bank: &'a TemplateBank,
) -> Result<impl Iterator<Item = Result<InstructionRecord, GenerationError>> + 'a, GenerationError> {
    config.validate()?;
    if pool.len() < config.clip_range[1] {
        return Err(GenerationError::PoolTooSmall {
            available: pool.len(),
            required: config.clip_range[1],
        });
    }
    Ok((0..config.n_instances).map(move |o| generate_clip_record(config, pool, bank, o).map(|(r, _)| r)))
}

/// How far a parsed span may sit from the true one: one code quantum of the
/// pseudo duration for RPT, half the display precision for free-form.
pub fn recovery_tolerance_s(time_repr: TimeRepresentation, pseudo_duration_s: f64) -> f64 {
    let slack = 1e-9 * pseudo_duration_s.max(1.0);
    match time_repr {
        TimeRepresentation::RelativePositionTokens => QUANTUM * pseudo_duration_s + slack,
        TimeRepresentation::FreeFormSeconds => 0.05 + slack,
    }
}

/// Checks a clip record against its metadata: frame counts cover the budget,
/// intervals tile the pseudo video, and the spans in the answer read back
/// within [`recovery_tolerance_s`].
pub fn verify_clip_record(record: &InstructionRecord) -> Result<(), InvariantViolation> {
    let fail = |msg: String| InvariantViolation::new(&record.id, msg);
    let meta = &record.meta;
    let total = meta.total_frames.ok_or_else(|| fail("missing total_frames".into()))?;
    let counts = meta
        .frame_counts
        .as_ref()
        .ok_or_else(|| fail("missing frame_counts".into()))?;
    let intervals = meta
        .intervals
        .as_ref()
        .ok_or_else(|| fail("missing intervals".into()))?;
    let duration = meta
        .pseudo_duration_s
        .ok_or_else(|| fail("missing pseudo_duration_s".into()))?;
    if !(MIN_CLIPS..=MAX_CLIPS).contains(&counts.len()) {
        return Err(fail(format!(
            "{} events, expected {MIN_CLIPS} to {MAX_CLIPS}",
            counts.len()
        )));
    }
    if counts.iter().sum::<usize>() != total || counts.contains(&0) {
        return Err(fail(format!("frame counts {counts:?} do not partition {total} frames")));
    }
    if intervals.len() != counts.len() || record.media.len() != counts.len() {
        return Err(fail("event, clip and media counts differ".into()));
    }
    let mut acc = 0;
    for (i, (&n, span)) in counts.iter().zip(intervals).enumerate() {
        let expected = [
            acc as f64 / total as f64 * duration,
            (acc + n) as f64 / total as f64 * duration,
        ];
        if *span != expected {
            return Err(fail(format!(
                "interval {i} is {span:?}, frame positions give {expected:?}"
            )));
        }
        acc += n;
    }
    let tol = recovery_tolerance_s(meta.time_repr, duration);
    let close = |got: &TimeInterval, want: &[f64; 2]| {
        (got.start() - want[0]).abs() <= tol && (got.end() - want[1]).abs() <= tol
    };
    match record.task {
        Task::Dvc => {
            let parsed = parse_predictions(&record.answer, meta.time_repr, duration);
            if parsed.events.len() != intervals.len() {
                return Err(fail(format!(
                    "answer has {} events, expected {}",
                    parsed.events.len(),
                    intervals.len()
                )));
            }
            for (i, (event, want)) in parsed.events.iter().zip(intervals).enumerate() {
                if !close(&event.interval, want) {
                    return Err(fail(format!(
                        "event {i} reads back as {:?}, expected {want:?}",
                        event.interval
                    )));
                }
            }
        }
        Task::Tvg => {
            let target = meta
                .targets
                .as_ref()
                .and_then(|t| t.first().copied())
                .ok_or_else(|| fail("missing target".into()))?;
            let want = intervals
                .get(target.wrapping_sub(1))
                .ok_or_else(|| fail(format!("target {target} out of range")))?;
            let got = parse_interval(&record.answer, meta.time_repr, duration)
                .ok_or_else(|| fail("answer carries no interval".into()))?;
            if !close(&got, want) {
                return Err(fail(format!("answer reads back as {got:?}, expected {want:?}")));
            }
        }
        other => return Err(fail(format!("{other} is not a clip-sequence task"))),
    }
    Ok(())
}
