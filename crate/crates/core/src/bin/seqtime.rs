//! Command-line driver.
//!
//! Exit codes: 0 success, 2 usage or configuration (including unreadable
//! inputs), 3 a generated record failed its read-back check, 4 output I/O.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use seqtime::clip_sequence::{generate_clip_record, verify_clip_record, ClipCorpusConfig, RateRange};
use seqtime::dataset_io::{
    corpus_stats, fetch_clip_captions, load_clip_captions, load_image_captions, load_uncaptioned_clips, mix_corpora,
    read_records, write_jsonl, CaptionServiceConfig, CorpusConfig, CorpusStats, InstructionRecord, JsonlWriter,
    MixSource, Task, TaskMix,
};
use seqtime::error::Error;
use seqtime::eval::{eval_files_from_records, evaluate_run, EvalOptions, MetricsReport};
use seqtime::image_sequence::{generate_image_record, verify_image_record, ImageCorpusConfig, DEFAULT_MAX_TARGETS};
use seqtime::pipeline::{default_jobs, run_ordered};
use seqtime::position_token::{
    encode_relative, quantization_error_report, split_tokens, tokens_to_code, ErrorModel, TimeRepresentation,
};
use seqtime::templates::TemplateBank;

const CONFIG_ENV: &str = "SEQ2TIME_CONFIG";

#[derive(Parser, Debug)]
#[command(
    name = "seqtime",
    version,
    about = "Build time-sensitive instruction corpora and score temporal outputs"
)]
struct Cli {
    /// TOML or JSON config file; falls back to $SEQ2TIME_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: available cores). Output order is unaffected.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More logging; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate IIG/IIC/ALR records from an image-caption file.
    BuildImageSeq(BuildImageArgs),
    /// Generate DVC/TVG records from a clip-caption file.
    BuildClipSeq(BuildClipArgs),
    /// Interleave corpus files i.i.d. by ratio.
    Mix(MixArgs),
    /// Print the position code of INDEX out of LENGTH.
    Tokenize { index: usize, length: usize },
    /// Print the fraction (or seconds, with --duration) a code stands for.
    Detokenize {
        code: String,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Report the temporal error of 4-digit codes.
    AnalyzeQuantization(QuantArgs),
    /// Score dense captioning predictions (temporal F1, R@1, L_avg, TTR).
    EvalDvc(EvalArgs),
    /// Score grounding predictions (R@1).
    EvalTvg(EvalArgs),
    /// Per-task counts and mean lengths of a corpus file.
    Stats { path: PathBuf },
}

#[derive(Args, Debug)]
struct BuildImageArgs {
    /// Image captions, JSON lines of {"id", "image", "caption"}.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "n")]
    n: Option<u64>,
    #[arg(long)]
    seq_len: Option<usize>,
    #[arg(long)]
    max_targets: Option<usize>,
    /// Permit settings outside the published setup, such as more than 5 targets.
    #[arg(long)]
    allow_nonpaper: bool,
    /// e.g. "IIG=1,IIC=1,ALR=1"
    #[arg(long)]
    task_mix: Option<TaskMix>,
    #[arg(long)]
    time_repr: Option<TimeRepresentation>,
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildClipArgs {
    /// Clip captions, JSON lines of {"id", "video", "label", "caption", "duration_s", "fps"}.
    #[arg(long)]
    clips: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "n")]
    n: Option<u64>,
    /// Inclusive clip count range, e.g. "2,10".
    #[arg(long, value_delimiter = ',', num_args = 2)]
    clip_range: Option<Vec<usize>>,
    #[arg(long)]
    total_frames: Option<usize>,
    /// Playback-rate factor range, e.g. "0.5,2.0".
    #[arg(long, value_delimiter = ',', num_args = 2)]
    rate_range: Option<Vec<f64>>,
    #[arg(long)]
    task_mix: Option<TaskMix>,
    #[arg(long)]
    time_repr: Option<TimeRepresentation>,
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Caption the clips through this service first; `caption` fields in the input are ignored.
    #[arg(long)]
    caption_endpoint: Option<String>,
    /// Also write {dvc,tvg}_gt.jsonl and {dvc,tvg}_gt_as_pred.jsonl here.
    #[arg(long)]
    eval_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MixArgs {
    /// PATH=RATIO, repeatable.
    #[arg(long = "input")]
    inputs: Vec<String>,
    #[arg(long)]
    total: Option<u64>,
    /// Restart an exhausted input instead of failing.
    #[arg(long)]
    replacement: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QuantArgs {
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long, default_value_t = 96)]
    frames: usize,
    /// rounding-only or frame-sampling
    #[arg(long, default_value = "frame-sampling")]
    model: ErrorModel,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// JSON lines of {"video_id", "output", "duration_s"}.
    #[arg(long)]
    pred: PathBuf,
    /// JSON lines of {"video_id", "events": [{"start", "end", "caption"}]}.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    time_repr: Option<TimeRepresentation>,
    /// IoU thresholds: F1 thresholds for eval-dvc, R@1 thresholds for eval-tvg.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    /// Write the JSON report here as well.
    #[arg(long)]
    report: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Invariant(String),
    Output(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Output(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invariant(m) | Failure::Output(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn output(e: impl std::fmt::Display) -> Failure {
    Failure::Output(e.to_string())
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant(_) => Failure::Invariant(e.to_string()),
            Error::Io { .. } => Failure::Output(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

struct Ctx {
    json: bool,
    seed: u64,
    jobs: usize,
    file: CorpusConfig,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config_path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let file = match &config_path {
        Some(p) => CorpusConfig::load(p).map_err(usage)?,
        None => CorpusConfig::default(),
    };
    let ctx = Ctx {
        json: cli.json,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        jobs: cli.jobs.or(file.jobs).unwrap_or_else(default_jobs).max(1),
        file,
    };
    if let Some(p) = &config_path {
        log::info!("config file: {}", p.display());
    }
    match cli.command {
        Command::BuildImageSeq(args) => build_image(&ctx, args),
        Command::BuildClipSeq(args) => build_clip(&ctx, args),
        Command::Mix(args) => mix(&ctx, args),
        Command::Tokenize { index, length } => tokenize(&ctx, index, length),
        Command::Detokenize { code, duration } => detokenize(&ctx, &code, duration),
        Command::AnalyzeQuantization(args) => analyze(args),
        Command::EvalDvc(args) => eval(&ctx, args, true),
        Command::EvalTvg(args) => eval(&ctx, args, false),
        Command::Stats { path } => stats(&ctx, &path),
    }
}

fn log_resolved(name: &str, value: &impl Serialize) {
    log::info!(
        "{name} resolved config: {}",
        serde_json::to_string(value).unwrap_or_default()
    );
}

fn load_bank(flag: Option<PathBuf>, file: &CorpusConfig) -> Result<TemplateBank, Failure> {
    match flag.or_else(|| file.templates.clone()) {
        Some(p) => TemplateBank::load(p).map_err(usage),
        None => Ok(TemplateBank::builtin()),
    }
}

fn required(value: Option<PathBuf>, flag: &str) -> Result<PathBuf, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("{flag} is required (flag or config file)")))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| output(format!("{}: {e}", path.display())))
}

/// Generates `n` records in parallel, checks each one, and streams them to `out`.
fn write_generated<P>(out: &Path, n: u64, jobs: usize, produce: P) -> Result<CorpusStats, Failure>
where
    P: Fn(u64) -> Result<InstructionRecord, Failure> + Sync,
{
    let mut writer = JsonlWriter::new(create(out)?);
    let mut stats = CorpusStats::default();
    run_ordered(n, jobs, produce, |record| {
        stats.add(&record);
        writer
            .write(&record)
            .map_err(|e| output(format!("{}: {e}", out.display())))
    })?;
    writer.finish().map_err(|e| output(format!("{}: {e}", out.display())))?;
    Ok(stats)
}

fn write_stats_sidecar(out: &Path, stats: &CorpusStats) -> Result<PathBuf, Failure> {
    let mut name = out.as_os_str().to_owned();
    name.push(".stats.json");
    let path = PathBuf::from(name);
    let text = serde_json::to_string_pretty(stats).expect("stats serialize");
    std::fs::write(&path, text + "\n").map_err(|e| output(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn print_stats(ctx: &Ctx, out: Option<&Path>, stats: &CorpusStats) {
    if ctx.json {
        let value = json!({ "output": out.map(|p| p.display().to_string()), "stats": stats });
        println!("{value}");
        return;
    }
    if let Some(p) = out {
        println!("wrote {} records to {}", stats.records, p.display());
    } else {
        println!("{} records", stats.records);
    }
    for (task, s) in &stats.tasks {
        println!(
            "  {task}: {} records, mean question {:.1} chars, mean answer {:.1} chars",
            s.count, s.mean_question_len, s.mean_answer_len
        );
    }
}

fn build_image(ctx: &Ctx, args: BuildImageArgs) -> Result<(), Failure> {
    let section = &ctx.file.image;
    let defaults = ImageCorpusConfig::default();
    let config = ImageCorpusConfig {
        n_instances: args.n.or(section.n_instances).unwrap_or(defaults.n_instances),
        seq_len: args.seq_len.or(section.seq_len).unwrap_or(defaults.seq_len),
        max_targets: args.max_targets.or(section.max_targets).unwrap_or(defaults.max_targets),
        task_mix: args
            .task_mix
            .or_else(|| section.task_mix.clone())
            .unwrap_or(defaults.task_mix),
        seed: ctx.seed,
        time_repr: args.time_repr.or(ctx.file.time_repr).unwrap_or(defaults.time_repr),
    };
    if config.max_targets > DEFAULT_MAX_TARGETS && !args.allow_nonpaper {
        return Err(Failure::Usage(format!(
            "--max-targets {} exceeds the published cap of {DEFAULT_MAX_TARGETS}; pass --allow-nonpaper to override",
            config.max_targets
        )));
    }
    config.validate().map_err(usage)?;
    let images = required(args.images.or_else(|| section.source.clone()), "--images")?;
    let out = required(args.out.or_else(|| section.output.clone()), "--out")?;
    log_resolved(
        "build-image-seq",
        &json!({ "images": images, "out": out, "jobs": ctx.jobs, "corpus": config }),
    );
    let pool = load_image_captions(&images).map_err(usage)?;
    let bank = load_bank(args.templates, &ctx.file)?;
    if pool.len() < config.seq_len {
        return Err(Failure::Usage(format!(
            "{} holds {} images, a sequence needs {}",
            images.display(),
            pool.len(),
            config.seq_len
        )));
    }
    let stats = write_generated(&out, config.n_instances, ctx.jobs, |ordinal| {
        let (record, sample) = generate_image_record(&config, &pool, &bank, ordinal).map_err(usage)?;
        verify_image_record(&record, &bank, &sample.images).map_err(|e| Failure::Invariant(e.to_string()))?;
        Ok(record)
    })?;
    write_stats_sidecar(&out, &stats)?;
    print_stats(ctx, Some(&out), &stats);
    Ok(())
}

fn build_clip(ctx: &Ctx, args: BuildClipArgs) -> Result<(), Failure> {
    let section = &ctx.file.clip;
    let defaults = ClipCorpusConfig::default();
    let clip_range = match args.clip_range.as_deref() {
        Some(&[lo, hi]) => [lo, hi],
        _ => section.clip_range.unwrap_or(defaults.clip_range),
    };
    let rate_range = match args.rate_range.as_deref() {
        Some(&[lo, hi]) => RateRange::new(lo, hi).map_err(usage)?,
        _ => match section.rate_range {
            Some([lo, hi]) => RateRange::new(lo, hi).map_err(usage)?,
            None => defaults.rate_range,
        },
    };
    let config = ClipCorpusConfig {
        n_instances: args.n.or(section.n_instances).unwrap_or(defaults.n_instances),
        clip_range,
        total_frames: args
            .total_frames
            .or(section.total_frames)
            .unwrap_or(defaults.total_frames),
        rate_range,
        task_mix: args
            .task_mix
            .or_else(|| section.task_mix.clone())
            .unwrap_or(defaults.task_mix),
        seed: ctx.seed,
        time_repr: args.time_repr.or(ctx.file.time_repr).unwrap_or(defaults.time_repr),
    };
    config.validate().map_err(usage)?;
    let clips = required(args.clips.or_else(|| section.source.clone()), "--clips")?;
    let out = required(args.out.or_else(|| section.output.clone()), "--out")?;
    log_resolved(
        "build-clip-seq",
        &json!({ "clips": clips, "out": out, "jobs": ctx.jobs, "caption_endpoint": args.caption_endpoint, "corpus": config }),
    );
    let pool = match &args.caption_endpoint {
        None => load_clip_captions(&clips).map_err(usage)?,
        Some(endpoint) => {
            let uncaptioned = load_uncaptioned_clips(&clips).map_err(usage)?;
            let report =
                fetch_clip_captions(&CaptionServiceConfig::new(endpoint.clone()), &uncaptioned).map_err(usage)?;
            for failure in &report.failures {
                eprintln!("caption failed: {}", failure.error);
            }
            log::info!("captioned {} of {} clips", report.captioned.len(), uncaptioned.len());
            report.captioned
        }
    };
    let bank = load_bank(args.templates, &ctx.file)?;
    if pool.len() < config.clip_range[1] {
        return Err(Failure::Usage(format!(
            "{} usable clips, sequences need up to {}",
            pool.len(),
            config.clip_range[1]
        )));
    }
    let stats = write_generated(&out, config.n_instances, ctx.jobs, |ordinal| {
        let (record, _) = generate_clip_record(&config, &pool, &bank, ordinal).map_err(usage)?;
        verify_clip_record(&record).map_err(|e| Failure::Invariant(e.to_string()))?;
        Ok(record)
    })?;
    write_stats_sidecar(&out, &stats)?;
    if let Some(dir) = &args.eval_dir {
        write_eval_files(&out, dir, &bank)?;
    }
    print_stats(ctx, Some(&out), &stats);
    Ok(())
}

fn write_eval_files(corpus: &Path, dir: &Path, bank: &TemplateBank) -> Result<(), Failure> {
    let records = read_records(corpus)?;
    std::fs::create_dir_all(dir).map_err(|e| output(format!("{}: {e}", dir.display())))?;
    for (task, stem) in [(Task::Dvc, "dvc"), (Task::Tvg, "tvg")] {
        let (gt, pred) = eval_files_from_records(&records, task, bank);
        write_lines(&dir.join(format!("{stem}_gt.jsonl")), &gt)?;
        write_lines(&dir.join(format!("{stem}_gt_as_pred.jsonl")), &pred)?;
    }
    Ok(())
}

fn write_lines<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let mut w = create(path)?;
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(output)?;
        w.write_all(b"\n")
            .map_err(|e| output(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| output(format!("{}: {e}", path.display())))
}

fn mix(ctx: &Ctx, args: MixArgs) -> Result<(), Failure> {
    let section = &ctx.file.mix;
    let inputs: Vec<(PathBuf, f64)> = if args.inputs.is_empty() {
        section.inputs.iter().map(|i| (i.path.clone(), i.ratio)).collect()
    } else {
        args.inputs
            .iter()
            .map(|spec| {
                let (path, ratio) = spec
                    .rsplit_once('=')
                    .ok_or_else(|| Failure::Usage(format!("--input {spec:?} must be PATH=RATIO")))?;
                let ratio = ratio
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Failure::Usage(format!("bad ratio in {spec:?}")))?;
                Ok((PathBuf::from(path), ratio))
            })
            .collect::<Result<_, Failure>>()?
    };
    if inputs.is_empty() {
        return Err(Failure::Usage("mix needs at least one --input PATH=RATIO".into()));
    }
    let out = required(args.out.or_else(|| section.output.clone()), "--out")?;
    let replacement = args.replacement || section.replacement.unwrap_or(false);
    let mut sources = Vec::with_capacity(inputs.len());
    for (path, ratio) in &inputs {
        let records = read_records(path).map_err(|e| match e {
            Error::Io { .. } | Error::Format { .. } => usage(e),
            other => Failure::from(other),
        })?;
        sources.push(MixSource::new(path.display().to_string(), *ratio, records));
    }
    let available: u64 = sources.iter().map(|s| s.items.len() as u64).sum();
    let total = args.total.or(section.total).unwrap_or(available);
    log_resolved(
        "mix",
        &json!({ "inputs": inputs, "total": total, "replacement": replacement, "seed": ctx.seed, "out": out }),
    );
    let mixed = mix_corpora(&sources, total as usize, ctx.seed, replacement).map_err(usage)?;
    let mut stats = CorpusStats::default();
    mixed.iter().for_each(|r| stats.add(r));
    write_jsonl(mixed, &out)?;
    write_stats_sidecar(&out, &stats)?;
    print_stats(ctx, Some(&out), &stats);
    Ok(())
}

fn tokenize(ctx: &Ctx, index: usize, length: usize) -> Result<(), Failure> {
    let code = encode_relative(index, length).map_err(usage)?;
    if ctx.json {
        println!(
            "{}",
            json!({ "index": index, "length": length, "value": code.value(), "tokens": code.to_string() })
        );
    } else {
        println!("{code}");
    }
    Ok(())
}

/// Shortest decimal form, at most six places.
fn trim_decimal(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

fn detokenize(ctx: &Ctx, code: &str, duration: Option<f64>) -> Result<(), Failure> {
    let code = tokens_to_code(&split_tokens(code)).map_err(usage)?;
    let seconds = duration.map(|d| code.seconds(d)).transpose().map_err(usage)?;
    if ctx.json {
        println!(
            "{}",
            json!({ "tokens": code.to_string(), "value": code.value(), "seconds": seconds })
        );
    } else {
        println!("{}", trim_decimal(seconds.unwrap_or(code.value())));
    }
    Ok(())
}

fn analyze(args: QuantArgs) -> Result<(), Failure> {
    let report = quantization_error_report(args.model, args.duration, args.fps, args.frames).map_err(usage)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn eval(ctx: &Ctx, args: EvalArgs, dense: bool) -> Result<(), Failure> {
    let mut options = EvalOptions::new(args.time_repr.or(ctx.file.time_repr).unwrap_or_default());
    if let Some(f1) = &ctx.file.eval.f1_thresholds {
        options.f1_thresholds = f1.clone();
    }
    if let Some(r1) = &ctx.file.eval.r1_thresholds {
        options.r1_thresholds = r1.clone();
    }
    if let Some(t) = args.thresholds {
        if dense {
            options.f1_thresholds = t;
        } else {
            options.r1_thresholds = t;
        }
    }
    log_resolved(
        if dense { "eval-dvc" } else { "eval-tvg" },
        &json!({
            "pred": args.pred, "gt": args.gt, "time_repr": options.time_repr,
            "f1_thresholds": options.f1_thresholds, "r1_thresholds": options.r1_thresholds,
        }),
    );
    let report = evaluate_run(&args.pred, &args.gt, &options).map_err(usage)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = &args.report {
        std::fs::write(path, format!("{text}\n")).map_err(|e| output(format!("{}: {e}", path.display())))?;
    }
    if ctx.json {
        println!("{}", serde_json::to_string(&report).expect("report serializes"));
    } else {
        print_report(&report, dense);
    }
    Ok(())
}

fn print_report(r: &MetricsReport, dense: bool) {
    println!("videos: {}", r.videos);
    if dense {
        println!("temporal F1: {:.4}", r.temporal_f1);
        for (t, f1) in &r.f1.0 {
            println!(
                "  IoU {t}: P {:.4} R {:.4} F1 {f1:.4}",
                r.precision.get(*t).unwrap_or(0.0),
                r.recall.get(*t).unwrap_or(0.0)
            );
        }
        println!("events per video: {:.2}", r.n_pred);
        if let (Some(l), Some(ttr)) = (r.l_avg, r.ttr) {
            println!("L_avg: {l:.2}  TTR: {ttr:.4}");
        }
    }
    for (t, v) in &r.r_at_1.0 {
        println!("R@1 IoU={t}: {v:.4}");
    }
    if r.skipped_lines > 0 {
        println!("unparsed lines: {}", r.skipped_lines);
    }
}

fn stats(ctx: &Ctx, path: &Path) -> Result<(), Failure> {
    let stats = corpus_stats(path).map_err(usage)?;
    print_stats(ctx, None, &stats);
    Ok(())
}
