//! Reading timed events back out of model (or generator) text.
//!
//! Free-form lines look like `34.8 - 76.4 seconds, water is added`; RPT lines
//! carry two 4-token codes, `<0><2><5><0><0><5><0><0> mixing`.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::position_token::{decode_index, RelativePositionCode, TimeInterval, TimeRepresentation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPrediction {
    pub interval: TimeInterval,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedPredictions {
    pub events: Vec<EventPrediction>,
    /// Non-blank lines that did not match the grammar.
    pub skipped: usize,
}

const CODE: &str = r"(?:<\d>){4}";

fn free_form_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*(\d+(?:\.\d+)?)\s*-\s*(\d+(?:\.\d+)?)\s*seconds?\s*[,:]?\s*(.*?)\s*$").expect("static regex")
    })
}

fn rpt_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(r"^\s*({CODE})\s*(?:-\s*)?({CODE})\s*[,:]?\s*(.*?)\s*$")).expect("static regex")
    })
}

fn free_form_span() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(\d+(?:\.\d+)?)\s*-\s*(\d+(?:\.\d+)?)\s*seconds?").expect("static regex"))
}

fn rpt_span() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(&format!(r"({CODE})\s*(?:-\s*)?({CODE})")).expect("static regex"))
}

fn rpt_code() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(CODE).expect("static regex"))
}

fn integer() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+").expect("static regex"))
}

/// Parses one event per line. Blank lines are ignored; other lines that do
/// not match are counted in `skipped`. RPT codes are turned into seconds with
/// `video_duration_s`; a non-positive duration makes every RPT line unparseable.
pub fn parse_predictions(text: &str, time_repr: TimeRepresentation, video_duration_s: f64) -> ParsedPredictions {
    let mut out = ParsedPredictions::default();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_event_line(line, time_repr, video_duration_s) {
            Some(event) => out.events.push(event),
            None => out.skipped += 1,
        }
    }
    out
}

pub fn parse_event_line(line: &str, time_repr: TimeRepresentation, video_duration_s: f64) -> Option<EventPrediction> {
    let (interval, caption) = match time_repr {
        TimeRepresentation::FreeFormSeconds => {
            let caps = free_form_line().captures(line)?;
            (seconds_span(&caps[1], &caps[2])?, caps[3].to_string())
        }
        TimeRepresentation::RelativePositionTokens => {
            let caps = rpt_line().captures(line)?;
            (code_span(&caps[1], &caps[2], video_duration_s)?, caps[3].to_string())
        }
    };
    Some(EventPrediction { interval, caption })
}

/// First time span anywhere in `text`, in seconds.
pub fn parse_interval(text: &str, time_repr: TimeRepresentation, video_duration_s: f64) -> Option<TimeInterval> {
    match time_repr {
        TimeRepresentation::FreeFormSeconds => free_form_span()
            .captures_iter(text)
            .find_map(|caps| seconds_span(&caps[1], &caps[2])),
        TimeRepresentation::RelativePositionTokens => rpt_span()
            .captures_iter(text)
            .find_map(|caps| code_span(&caps[1], &caps[2], video_duration_s)),
    }
}

/// Every index mentioned in `text`, in order of appearance. RPT codes that
/// no position of a `seq_len` sequence produces are dropped.
pub fn parse_indices(text: &str, time_repr: TimeRepresentation, seq_len: usize) -> Vec<usize> {
    match time_repr {
        TimeRepresentation::RelativePositionTokens => rpt_code()
            .find_iter(text)
            .filter_map(|m| m.as_str().parse::<RelativePositionCode>().ok())
            .filter_map(|code| decode_index(code, seq_len))
            .collect(),
        TimeRepresentation::FreeFormSeconds => integer()
            .find_iter(text)
            .filter_map(|m| m.as_str().parse::<usize>().ok())
            .collect(),
    }
}

/// Every 4-token code in `text`, in order.
pub fn parse_codes(text: &str) -> Vec<RelativePositionCode> {
    rpt_code()
        .find_iter(text)
        .filter_map(|m| m.as_str().parse().ok())
        .collect()
}

fn seconds_span(start: &str, end: &str) -> Option<TimeInterval> {
    TimeInterval::seconds(start.parse().ok()?, end.parse().ok()?).ok()
}

fn code_span(start: &str, end: &str, duration: f64) -> Option<TimeInterval> {
    let start: RelativePositionCode = start.parse().ok()?;
    let end: RelativePositionCode = end.parse().ok()?;
    TimeInterval::seconds(start.seconds(duration).ok()?, end.seconds(duration).ok()?).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FF: TimeRepresentation = TimeRepresentation::FreeFormSeconds;
    const RPT: TimeRepresentation = TimeRepresentation::RelativePositionTokens;

    #[test]
    fn free_form_line_with_caption() {
        let got = parse_predictions("34.8 - 76.4 seconds, water and salt are added into the bowl", FF, 200.0);
        assert_eq!(got.skipped, 0);
        assert_eq!(got.events.len(), 1);
        let e = &got.events[0];
        assert_eq!((e.interval.start(), e.interval.end()), (34.8, 76.4));
        assert_eq!(e.caption, "water and salt are added into the bowl");
    }

    #[test]
    fn free_form_is_whitespace_tolerant() {
        let got = parse_predictions("  0 -5.0 second:  a man  \n\n12.5-20 seconds b\n", FF, 1.0);
        assert_eq!(got.skipped, 0);
        assert_eq!(got.events[0].interval.end(), 5.0);
        assert_eq!(got.events[0].caption, "a man");
        assert_eq!(got.events[1].interval.start(), 12.5);
        assert_eq!(got.events[1].caption, "b");
    }

    #[test]
    fn rpt_line_decodes_with_duration() {
        let got = parse_predictions("<0><2><5><0><0><5><0><0> mixing", RPT, 100.0);
        assert_eq!(got.skipped, 0);
        let e = &got.events[0];
        assert_eq!((e.interval.start(), e.interval.end()), (2.5, 5.0));
        assert_eq!(e.caption, "mixing");
    }

    #[test]
    fn garbage_is_skipped() {
        let got = parse_predictions("the video shows a dog", FF, 10.0);
        assert!(got.events.is_empty());
        assert_eq!(got.skipped, 1);
        let got = parse_predictions("<0><2><x><0><0><5><0><0> mixing", RPT, 10.0);
        assert_eq!(got.skipped, 1);
        // Reversed spans are not events.
        assert_eq!(parse_predictions("9.0 - 3.0 seconds, x", FF, 10.0).skipped, 1);
        // RPT without a usable duration cannot be placed in time.
        assert_eq!(parse_predictions("<0><2><5><0><0><5><0><0> x", RPT, 0.0).skipped, 1);
    }

    #[test]
    fn interval_search_inside_sentence() {
        let i = parse_interval("The event happens at 5.0 - 20.0 seconds.", FF, 20.0).unwrap();
        assert_eq!((i.start(), i.end()), (5.0, 20.0));
        let i = parse_interval("It occurs during <2><5><0><0><9><9><9><9>.", RPT, 20.0).unwrap();
        assert_eq!((i.start(), i.end()), (5.0, 19.998));
        assert!(parse_interval("no times here", FF, 20.0).is_none());
    }

    #[test]
    fn indices_in_both_representations() {
        assert_eq!(
            parse_indices("The image indices are 3, 17, 96", FF, 96),
            vec![3, 17, 96]
        );
        assert_eq!(
            parse_indices("index <0><7><2><9> and <9><9><9><9>", RPT, 96),
            vec![7, 96]
        );
    }
}
