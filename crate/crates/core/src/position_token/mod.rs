//! Relative position tokens.
//!
//! A sequence position `i` out of `L` is normalized to `round(i / L, 4)` and
//! written as four decimal digit tokens, `<0>` through `<9>`. The same code
//! addresses an image in an image sequence, a frame boundary in a clip
//! sequence, or a point in a real video once multiplied by its duration.
//!
//! Rounding is half away from zero on the fourth decimal. A fraction that
//! rounds to `1.0000` does not fit in four digits and is clamped to `0.9999`,
//! so the last position of any sequence maps to the largest code.

mod quantization;

pub use quantization::{quantization_error_report, ErrorModel, QuantizationError, QuantizationErrorReport};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of distinct codes (`0000` ..= `9999`).
pub const CODE_SPACE: u16 = 10_000;
/// Largest representable code value.
pub const MAX_CODE: u16 = CODE_SPACE - 1;
/// Width of one code step as a fraction.
pub const QUANTUM: f64 = 1e-4;
/// Number of digit tokens per code.
pub const CODE_WIDTH: usize = 4;

const VOCABULARY: [&str; 10] = ["<0>", "<1>", "<2>", "<3>", "<4>", "<5>", "<6>", "<7>", "<8>", "<9>"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("position {index} is outside the sequence of length {length} (positions are 1-based)")]
    IndexOutOfRange { index: usize, length: usize },
    #[error("sequence length must be at least 1")]
    EmptySequence,
    #[error("ratio {numerator}/{denominator} is outside [0, 1]")]
    RatioOutOfRange { numerator: usize, denominator: usize },
    #[error("fraction {0} is outside [0, 1]")]
    FractionOutOfRange(f64),
    #[error("video duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("expected {CODE_WIDTH} position tokens, found {0}")]
    WrongArity(usize),
    #[error("unknown position token {token:?} at token {position}")]
    UnknownToken { token: String, position: usize },
    #[error("code value {0} exceeds 9999")]
    CodeOverflow(u16),
}

/// A 4-digit normalized sequence position `0.d1d2d3d4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelativePositionCode(u16);

impl RelativePositionCode {
    pub const ZERO: Self = Self(0);
    pub const MAX: Self = Self(MAX_CODE);

    pub fn new(value: u16) -> Result<Self, CodecError> {
        if value > MAX_CODE {
            return Err(CodecError::CodeOverflow(value));
        }
        Ok(Self(value))
    }

    pub fn from_digits(digits: [u8; 4]) -> Result<Self, CodecError> {
        let mut value = 0u16;
        for d in digits {
            if d > 9 {
                return Err(CodecError::CodeOverflow(u16::from(d)));
            }
            value = value * 10 + u16::from(d);
        }
        Ok(Self(value))
    }

    /// The integer `d1d2d3d4`.
    pub fn raw(self) -> u16 {
        self.0
    }

    pub fn digits(self) -> [u8; 4] {
        let v = self.0;
        [
            (v / 1000) as u8,
            (v / 100 % 10) as u8,
            (v / 10 % 10) as u8,
            (v % 10) as u8,
        ]
    }

    /// The fraction `raw / 10000`.
    pub fn value(self) -> f64 {
        f64::from(self.0) / f64::from(CODE_SPACE)
    }

    /// `value() * duration`, computed as `raw * duration / 10000` so that
    /// exact decimal products such as `0.0729 * 60` stay exact.
    pub fn seconds(self, video_duration_s: f64) -> Result<f64, CodecError> {
        check_duration(video_duration_s)?;
        Ok(f64::from(self.0) * video_duration_s / f64::from(CODE_SPACE))
    }

    pub fn tokens(self) -> [&'static str; 4] {
        self.digits().map(|d| VOCABULARY[d as usize])
    }
}

impl fmt::Display for RelativePositionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.tokens() {
            f.write_str(t)?;
        }
        Ok(())
    }
}

impl FromStr for RelativePositionCode {
    type Err = CodecError;

    /// Parses the compact form `"<0><7><2><9>"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens = split_tokens(s);
        tokens_to_code(&tokens)
    }
}

/// How generators render time and how parsers read it back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum TimeRepresentation {
    /// Four digit tokens per position.
    #[default]
    #[serde(rename = "rpt", alias = "relative-position-tokens")]
    RelativePositionTokens,
    /// Plain numbers: image indices as integers, video times as seconds.
    #[serde(rename = "free-form", alias = "free-form-seconds")]
    FreeFormSeconds,
}

impl TimeRepresentation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::RelativePositionTokens => "rpt",
            Self::FreeFormSeconds => "free-form",
        }
    }
}

impl fmt::Display for TimeRepresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TimeRepresentation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rpt" | "relative-position-tokens" => Ok(Self::RelativePositionTokens),
            "free-form" | "free-form-seconds" | "freeform" => Ok(Self::FreeFormSeconds),
            other => Err(format!(
                "unknown time representation {other:?} (expected rpt or free-form)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Relative,
    Seconds,
}

/// A closed `[start, end]` span, either as a fraction of the sequence or in
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    start: f64,
    end: f64,
    unit: TimeUnit,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid interval [{start}, {end}] ({unit:?}): {reason}")]
pub struct IntervalError {
    pub start: f64,
    pub end: f64,
    pub unit: TimeUnit,
    pub reason: &'static str,
}

impl TimeInterval {
    pub fn new(start: f64, end: f64, unit: TimeUnit) -> Result<Self, IntervalError> {
        let err = |reason| IntervalError {
            start,
            end,
            unit,
            reason,
        };
        if !start.is_finite() || !end.is_finite() {
            return Err(err("bounds must be finite"));
        }
        if start < 0.0 {
            return Err(err("start is negative"));
        }
        if start > end {
            return Err(err("start is after end"));
        }
        if unit == TimeUnit::Relative && end > 1.0 {
            return Err(err("relative end exceeds 1"));
        }
        Ok(Self { start, end, unit })
    }

    pub fn seconds(start: f64, end: f64) -> Result<Self, IntervalError> {
        Self::new(start, end, TimeUnit::Seconds)
    }

    pub fn relative(start: f64, end: f64) -> Result<Self, IntervalError> {
        Self::new(start, end, TimeUnit::Relative)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn unit(&self) -> TimeUnit {
        self.unit
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Converts a relative interval to seconds; seconds intervals are returned unchanged.
    pub fn to_seconds(&self, video_duration_s: f64) -> Result<Self, CodecError> {
        match self.unit {
            TimeUnit::Seconds => Ok(*self),
            TimeUnit::Relative => Ok(Self {
                start: to_timestamp(self.start, video_duration_s)?,
                end: to_timestamp(self.end, video_duration_s)?,
                unit: TimeUnit::Seconds,
            }),
        }
    }
}

/// The ten position tokens, `<0>` through `<9>`.
pub fn vocabulary() -> [&'static str; 10] {
    VOCABULARY
}

/// Encodes the 1-based `index` of a sequence of `length` items.
pub fn encode_relative(index: usize, length: usize) -> Result<RelativePositionCode, CodecError> {
    if length == 0 {
        return Err(CodecError::EmptySequence);
    }
    if index == 0 || index > length {
        return Err(CodecError::IndexOutOfRange { index, length });
    }
    encode_ratio(index, length)
}

/// Encodes `numerator / denominator` for `0 <= numerator <= denominator`.
///
/// Integer arithmetic throughout: `round(n / d, 4) * 10^4` equals
/// `floor((2 * 10^4 * n + d) / (2 * d))` for non-negative `n`.
pub fn encode_ratio(numerator: usize, denominator: usize) -> Result<RelativePositionCode, CodecError> {
    if denominator == 0 {
        return Err(CodecError::EmptySequence);
    }
    if numerator > denominator {
        return Err(CodecError::RatioOutOfRange { numerator, denominator });
    }
    let n = numerator as u128;
    let d = denominator as u128;
    let scaled = (2 * u128::from(CODE_SPACE) * n + d) / (2 * d);
    Ok(RelativePositionCode(scaled.min(u128::from(MAX_CODE)) as u16))
}

/// Encodes an arbitrary fraction in `[0, 1]`, clamping `1.0000` to `0.9999`.
pub fn encode_fraction(fraction: f64) -> Result<RelativePositionCode, CodecError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CodecError::FractionOutOfRange(fraction));
    }
    let scaled = (fraction * f64::from(CODE_SPACE)).round();
    Ok(RelativePositionCode((scaled as u16).min(MAX_CODE)))
}

pub fn decode_relative(code: RelativePositionCode) -> f64 {
    code.value()
}

/// Recovers the 1-based index in a sequence of `length` that encodes to `code`.
///
/// Returns `None` when no index produces this code, which happens for codes a
/// generator would never emit (for example `<0><0><0><0>`). Codes are unique
/// per index only while `length` stays below about 6600; past that, neighbours
/// can share a code and the smallest matching index is returned.
pub fn decode_index(code: RelativePositionCode, length: usize) -> Option<usize> {
    if length == 0 {
        return None;
    }
    let guess = ((f64::from(code.raw()) * length as f64) / f64::from(CODE_SPACE)).round() as i64;
    (guess - 1..=guess + 1)
        .filter(|&i| i >= 1 && i as usize <= length)
        .map(|i| i as usize)
        .find(|&i| encode_relative(i, length).map(|c| c == code).unwrap_or(false))
}

pub fn code_to_tokens(code: RelativePositionCode) -> Vec<String> {
    code.tokens().iter().map(|t| t.to_string()).collect()
}

pub fn tokens_to_code<S: AsRef<str>>(tokens: &[S]) -> Result<RelativePositionCode, CodecError> {
    if tokens.len() != CODE_WIDTH {
        // Report the first bad token before complaining about arity, it is the
        // more useful message for a garbled code.
        if let Some(err) = first_unknown_token(tokens) {
            return Err(err);
        }
        return Err(CodecError::WrongArity(tokens.len()));
    }
    if let Some(err) = first_unknown_token(tokens) {
        return Err(err);
    }
    let mut digits = [0u8; 4];
    for (slot, token) in digits.iter_mut().zip(tokens) {
        *slot = token_digit(token.as_ref()).expect("validated above");
    }
    RelativePositionCode::from_digits(digits)
}

fn first_unknown_token<S: AsRef<str>>(tokens: &[S]) -> Option<CodecError> {
    tokens.iter().enumerate().find_map(|(i, t)| {
        token_digit(t.as_ref()).is_none().then(|| CodecError::UnknownToken {
            token: t.as_ref().to_string(),
            position: i + 1,
        })
    })
}

fn token_digit(token: &str) -> Option<u8> {
    VOCABULARY.iter().position(|v| *v == token).map(|d| d as u8)
}

/// Splits `"<0><7><2><9>"` into `["<0>", "<7>", "<2>", "<9>"]`. Text outside
/// angle brackets is kept as its own token so that it is reported as unknown.
pub fn split_tokens(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let end = if rest.starts_with('<') {
            rest.find('>').map(|p| p + 1).unwrap_or(rest.len())
        } else {
            rest.find('<').unwrap_or(rest.len())
        };
        out.push(&rest[..end]);
        rest = &rest[end..];
    }
    out
}

/// `fraction * duration` at full precision.
pub fn to_timestamp(fraction: f64, video_duration_s: f64) -> Result<f64, CodecError> {
    check_duration(video_duration_s)?;
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CodecError::FractionOutOfRange(fraction));
    }
    Ok(fraction * video_duration_s)
}

/// Seconds rendered at display precision (0.1 s), e.g. `34.8`.
pub fn format_seconds(seconds: f64) -> String {
    format!("{seconds:.1}")
}

fn check_duration(video_duration_s: f64) -> Result<(), CodecError> {
    if video_duration_s > 0.0 && video_duration_s.is_finite() {
        Ok(())
    } else {
        Err(CodecError::NonPositiveDuration(video_duration_s))
    }
}
