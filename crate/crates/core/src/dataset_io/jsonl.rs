use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{InstructionRecord, Task};
use crate::error::Error;

/// Writes one record per line. Serialization goes through serde's derived
/// field order, so identical records always produce identical bytes.
pub struct JsonlWriter<W: Write> {
    out: W,
    count: u64,
    buf: Vec<u8>,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            count: 0,
            buf: Vec::with_capacity(4096),
        }
    }

    pub fn write(&mut self, record: &InstructionRecord) -> std::io::Result<()> {
        self.buf.clear();
        serde_json::to_writer(&mut self.buf, record).map_err(std::io::Error::from)?;
        self.buf.push(b'\n');
        self.out.write_all(&self.buf)?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> std::io::Result<(W, u64)> {
        self.out.flush()?;
        Ok((self.out, self.count))
    }
}

/// Writes `records` to `path` and returns how many were written.
pub fn write_jsonl<I>(records: I, path: impl AsRef<Path>) -> Result<u64, Error>
where
    I: IntoIterator<Item = InstructionRecord>,
{
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = JsonlWriter::new(BufWriter::new(file));
    for record in records {
        writer.write(&record).map_err(|e| Error::io(path, e))?;
    }
    let (_, count) = writer.finish().map_err(|e| Error::io(path, e))?;
    Ok(count)
}

fn for_each_record(path: &Path, mut f: impl FnMut(InstructionRecord)) -> Result<(), Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.display().to_string(),
            message: format!("line {}: {e}", i + 1),
        })?;
        f(record);
    }
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<InstructionRecord>, Error> {
    let mut out = Vec::new();
    for_each_record(path.as_ref(), |r| out.push(r))?;
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TaskStats {
    pub count: u64,
    /// Mean length in characters.
    pub mean_question_len: f64,
    pub mean_answer_len: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub records: u64,
    pub tasks: BTreeMap<Task, TaskStats>,
}

impl CorpusStats {
    pub fn add(&mut self, record: &InstructionRecord) {
        self.records += 1;
        let s = self.tasks.entry(record.task).or_default();
        s.count += 1;
        let n = s.count as f64;
        s.mean_question_len += (record.question.chars().count() as f64 - s.mean_question_len) / n;
        s.mean_answer_len += (record.answer.chars().count() as f64 - s.mean_answer_len) / n;
    }
}

/// Streams a corpus file and summarizes it per task.
pub fn corpus_stats(path: impl AsRef<Path>) -> Result<CorpusStats, Error> {
    let mut stats = CorpusStats::default();
    for_each_record(path.as_ref(), |r| stats.add(&r))?;
    Ok(stats)
}
