//! JSON-lines caption sources.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::clip_sequence::CaptionedClip;
use crate::image_sequence::CaptionedImage;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: missing field {field}")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: field {field} {reason}")]
    InvalidField {
        line: usize,
        field: &'static str,
        reason: String,
    },
    #[error("duplicate id {id:?} on lines {first_line} and {second_line}")]
    DuplicateId {
        id: String,
        first_line: usize,
        second_line: usize,
    },
}

impl LoadError {
    /// True when the file itself could not be opened or read.
    pub fn is_io(&self) -> bool {
        matches!(self, LoadError::Io { .. })
    }
}

/// Clip metadata before captioning, sent to the caption service.
#[derive(Debug, Clone, PartialEq)]
pub struct UncaptionedClip {
    pub id: String,
    pub media_ref: String,
    pub action_label: String,
    pub duration_s: f64,
    pub fps: f64,
}

pub fn load_image_captions(path: impl AsRef<Path>) -> Result<Vec<CaptionedImage>, LoadError> {
    let path = path.as_ref();
    read_image_captions(open(path)?, &path.display().to_string())
}

pub fn read_image_captions(reader: impl BufRead, origin: &str) -> Result<Vec<CaptionedImage>, LoadError> {
    load_objects(reader, origin, |line, obj| {
        Ok(CaptionedImage {
            id: string_field(line, obj, "id")?,
            media_ref: string_field(line, obj, "image")?,
            caption: caption_field(line, obj)?,
        })
    })
}

pub fn load_clip_captions(path: impl AsRef<Path>) -> Result<Vec<CaptionedClip>, LoadError> {
    let path = path.as_ref();
    read_clip_captions(open(path)?, &path.display().to_string())
}

pub fn read_clip_captions(reader: impl BufRead, origin: &str) -> Result<Vec<CaptionedClip>, LoadError> {
    load_objects(reader, origin, |line, obj| {
        Ok(CaptionedClip {
            id: string_field(line, obj, "id")?,
            media_ref: string_field(line, obj, "video")?,
            action_label: string_field(line, obj, "label")?,
            caption: caption_field(line, obj)?,
            duration_s: positive_field(line, obj, "duration_s")?,
            fps: positive_field(line, obj, "fps")?,
        })
    })
}

/// Loads clips that still need captions; a `caption` field, if present, is ignored.
pub fn load_uncaptioned_clips(path: impl AsRef<Path>) -> Result<Vec<UncaptionedClip>, LoadError> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    load_objects(open(path)?, &origin, |line, obj| {
        Ok(UncaptionedClip {
            id: string_field(line, obj, "id")?,
            media_ref: string_field(line, obj, "video")?,
            action_label: string_field(line, obj, "label")?,
            duration_s: positive_field(line, obj, "duration_s")?,
            fps: positive_field(line, obj, "fps")?,
        })
    })
}

trait HasId {
    fn id(&self) -> &str;
}

impl HasId for CaptionedImage {
    fn id(&self) -> &str {
        &self.id
    }
}

impl HasId for CaptionedClip {
    fn id(&self) -> &str {
        &self.id
    }
}

impl HasId for UncaptionedClip {
    fn id(&self) -> &str {
        &self.id
    }
}

fn open(path: &Path) -> Result<BufReader<File>, LoadError> {
    File::open(path).map(BufReader::new).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_objects<T: HasId>(
    reader: impl BufRead,
    origin: &str,
    mut convert: impl FnMut(usize, &Map<String, Value>) -> Result<T, LoadError>,
) -> Result<Vec<T>, LoadError> {
    let mut out = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| LoadError::Io {
            path: origin.to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| LoadError::Malformed {
            line: line_no,
            message: format!("invalid JSON: {e}"),
        })?;
        let obj = value.as_object().ok_or_else(|| LoadError::Malformed {
            line: line_no,
            message: "expected a JSON object".into(),
        })?;
        let item = convert(line_no, obj)?;
        if let Some(&first_line) = seen.get(item.id()) {
            return Err(LoadError::DuplicateId {
                id: item.id().to_string(),
                first_line,
                second_line: line_no,
            });
        }
        seen.insert(item.id().to_string(), line_no);
        out.push(item);
    }
    Ok(out)
}

fn string_field(line: usize, obj: &Map<String, Value>, field: &'static str) -> Result<String, LoadError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(LoadError::MissingField { line, field }),
        Some(Value::String(s)) if s.trim().is_empty() => Err(LoadError::InvalidField {
            line,
            field,
            reason: "is empty".into(),
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(LoadError::InvalidField {
            line,
            field,
            reason: format!("must be a string, found {other}"),
        }),
    }
}

fn caption_field(line: usize, obj: &Map<String, Value>) -> Result<String, LoadError> {
    string_field(line, obj, "caption")
}

fn positive_field(line: usize, obj: &Map<String, Value>, field: &'static str) -> Result<f64, LoadError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(LoadError::MissingField { line, field }),
        Some(Value::Number(n)) => {
            let v = n.as_f64().unwrap_or(f64::NAN);
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(LoadError::InvalidField {
                    line,
                    field,
                    reason: format!("must be positive, found {v}"),
                })
            }
        }
        Some(other) => Err(LoadError::InvalidField {
            line,
            field,
            reason: format!("must be a number, found {other}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(text: &str) -> Result<Vec<CaptionedImage>, LoadError> {
        read_image_captions(text.as_bytes(), "test")
    }

    #[test]
    fn loads_three_images() {
        let text = r#"{"id": "a", "image": "a.jpg", "caption": "A cat."}
{"id": "b", "image": "b.jpg", "caption": "A dog."}

{"id": "c", "image": "c.jpg", "caption": "A bird."}
"#;
        let got = images(text).unwrap();
        assert_eq!(got.len(), 3);
        assert_eq!(
            got[2],
            CaptionedImage {
                id: "c".into(),
                media_ref: "c.jpg".into(),
                caption: "A bird.".into()
            }
        );
    }

    #[test]
    fn missing_caption_names_line_and_field() {
        let text = "{\"id\": \"a\", \"image\": \"a.jpg\", \"caption\": \"x\"}\n{\"id\": \"b\", \"image\": \"b.jpg\"}\n";
        let err = images(text).unwrap_err();
        assert_eq!(err.to_string(), "line 2: missing field caption");
    }

    #[test]
    fn duplicate_ids_name_both_lines() {
        let text = r#"{"id": "a", "image": "a.jpg", "caption": "x"}
{"id": "b", "image": "b.jpg", "caption": "y"}
{"id": "a", "image": "c.jpg", "caption": "z"}"#;
        match images(text).unwrap_err() {
            LoadError::DuplicateId {
                id,
                first_line,
                second_line,
            } => {
                assert_eq!((id.as_str(), first_line, second_line), ("a", 1, 3));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn blank_caption_and_bad_json_are_rejected() {
        let err = images(r#"{"id": "a", "image": "a.jpg", "caption": "   "}"#).unwrap_err();
        assert!(matches!(
            err,
            LoadError::InvalidField {
                line: 1,
                field: "caption",
                ..
            }
        ));
        let err = images("{not json").unwrap_err();
        assert!(matches!(err, LoadError::Malformed { line: 1, .. }));
        let err = images("[1, 2]").unwrap_err();
        assert!(matches!(err, LoadError::Malformed { line: 1, .. }));
    }

    #[test]
    fn clip_fields_are_validated() {
        let ok = r#"{"id": "k1", "video": "k1.mp4", "label": "juggling", "caption": "A man juggles.", "duration_s": 10.0, "fps": 30}"#;
        let clips = read_clip_captions(ok.as_bytes(), "t").unwrap();
        assert_eq!(clips[0].fps, 30.0);
        assert_eq!(clips[0].action_label, "juggling");
        let bad = ok.replace("10.0", "0");
        let err = read_clip_captions(bad.as_bytes(), "t").unwrap_err();
        assert!(
            matches!(
                err,
                LoadError::InvalidField {
                    field: "duration_s",
                    ..
                }
            ),
            "{err}"
        );
        let missing = r#"{"id": "k1", "video": "k1.mp4", "caption": "x", "duration_s": 1, "fps": 1}"#;
        assert_eq!(
            read_clip_captions(missing.as_bytes(), "t").unwrap_err().to_string(),
            "line 1: missing field label"
        );
    }

    #[test]
    fn missing_file_is_io_error_with_path() {
        let err = load_image_captions("/nonexistent/captions.jsonl").unwrap_err();
        assert!(err.is_io());
        assert!(err.to_string().contains("/nonexistent/captions.jsonl"));
    }
}
