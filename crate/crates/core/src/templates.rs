//! Question/answer template bank with `<SLOT>` placeholders.
//!
//! A bank is a JSON object keyed `task -> arity -> {"questions", "answers"}`.
//! Every template is checked at load time: it must use exactly the slots its
//! task needs, may not contain literal ASCII digits (those would be confused
//! with rendered indices and times), and may not mention unknown slots.
//!
//! For multi-target IIC the answer template is an item template: it is
//! rendered once per target and the items are joined with newlines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

use crate::dataset_io::Task;

const BUILTIN_BANK: &str = include_str!("../data/templates.json");

/// Minimum number of variants per side for every task and arity.
pub const MIN_VARIANTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Caption,
    Caption1,
    Caption2,
    Index,
    Direction,
    Events,
    Interval,
}

impl Slot {
    const ALL: [Slot; 7] = [
        Slot::Caption,
        Slot::Caption1,
        Slot::Caption2,
        Slot::Index,
        Slot::Direction,
        Slot::Events,
        Slot::Interval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::Caption => "CAPTION",
            Slot::Caption1 => "CAPTION1",
            Slot::Caption2 => "CAPTION2",
            Slot::Index => "INDEX",
            Slot::Direction => "DIRECTION",
            Slot::Events => "EVENTS",
            Slot::Interval => "INTERVAL",
        }
    }

    fn from_name(name: &str) -> Option<Slot> {
        Slot::ALL.into_iter().find(|s| s.name() == name)
    }

    fn pattern(self) -> &'static str {
        match self {
            Slot::Caption | Slot::Caption1 | Slot::Caption2 | Slot::Interval => "(.+?)",
            Slot::Index => r"((?:<\d>){4}(?:, (?:<\d>){4})*|\d+(?:, \d+)*)",
            Slot::Direction => "(before|after)",
            Slot::Events => "(.+)",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arity {
    Single,
    Multi,
}

impl Arity {
    pub fn for_count(n: usize) -> Self {
        if n > 1 {
            Arity::Multi
        } else {
            Arity::Single
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Arity::Single => "single",
            Arity::Multi => "multi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Question,
    Answer,
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template {context}: unknown slot <{name}>")]
    UnknownSlot { context: String, name: String },
    #[error("template {context}: contains a position token or digit ({found:?}), which would be ambiguous with rendered times")]
    LiteralDigit { context: String, found: String },
    #[error("template {context}: missing required slot {slot}")]
    MissingSlot { context: String, slot: Slot },
    #[error("template {context}: slot {slot} is not allowed here")]
    UnexpectedSlot { context: String, slot: Slot },
    #[error("template bank has no {side} templates for {task}/{arity}")]
    MissingSet {
        task: Task,
        arity: &'static str,
        side: &'static str,
    },
    #[error("template bank has {found} {side} templates for {task}/{arity}, at least {MIN_VARIANTS} are required")]
    TooFewVariants {
        task: Task,
        arity: &'static str,
        side: &'static str,
        found: usize,
    },
    #[error("no value supplied for slot {0}")]
    UnfilledSlot(Slot),
    #[error("template bank is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("failed to read template bank {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Slot(Slot),
}

#[derive(Debug, Clone)]
pub struct Template {
    text: String,
    pieces: Vec<Piece>,
    /// Unanchored pattern for one rendering of the template.
    body: String,
    matcher: Regex,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        Self::parse_with_context(text, text)
    }

    fn parse_with_context(text: &str, context: &str) -> Result<Self, TemplateError> {
        let slot_syntax = Regex::new(r"<([A-Z][A-Z0-9_]*)>").expect("static regex");
        if let Some(m) = Regex::new(r"<\d>|\d")
            .expect("static regex")
            .find(&strip_slots(text, &slot_syntax))
        {
            return Err(TemplateError::LiteralDigit {
                context: context.to_string(),
                found: m.as_str().to_string(),
            });
        }
        let mut pieces = Vec::new();
        let mut last = 0;
        for caps in slot_syntax.captures_iter(text) {
            let whole = caps.get(0).expect("group 0");
            let name = &caps[1];
            let slot = Slot::from_name(name).ok_or_else(|| TemplateError::UnknownSlot {
                context: context.to_string(),
                name: name.to_string(),
            })?;
            if whole.start() > last {
                pieces.push(Piece::Literal(text[last..whole.start()].to_string()));
            }
            pieces.push(Piece::Slot(slot));
            last = whole.end();
        }
        if last < text.len() {
            pieces.push(Piece::Literal(text[last..].to_string()));
        }
        let mut body = String::new();
        for piece in &pieces {
            match piece {
                Piece::Literal(s) => body.push_str(&regex::escape(s)),
                Piece::Slot(slot) => body.push_str(slot.pattern()),
            }
        }
        let matcher = Regex::new(&format!("(?s)^{body}$")).expect("escaped literals and fixed slot patterns");
        Ok(Self {
            text: text.to_string(),
            pieces,
            body,
            matcher,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn slots(&self) -> BTreeSet<Slot> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(*s),
                Piece::Literal(_) => None,
            })
            .collect()
    }

    /// Substitutes every slot in one pass; inserted values are never rescanned.
    pub fn render<'v>(&self, mut value: impl FnMut(Slot) -> Option<&'v str>) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.text.len() + 64);
        for piece in &self.pieces {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot(slot) => out.push_str(value(*slot).ok_or(TemplateError::UnfilledSlot(*slot))?),
            }
        }
        Ok(out)
    }

    /// Matches `text` against the whole template and returns the slot values
    /// in template order.
    pub fn match_text<'t>(&self, text: &'t str) -> Option<Vec<(Slot, &'t str)>> {
        let caps = self.matcher.captures(text)?;
        Some(
            self.slot_sequence()
                .zip(caps.iter().skip(1))
                .filter_map(|(s, m)| m.map(|m| (s, m.as_str())))
                .collect(),
        )
    }

    /// Matches `count` renderings of the template joined by `sep` and returns
    /// the slot values of each item.
    pub fn match_repeated<'t>(&self, text: &'t str, count: usize, sep: &str) -> Option<Vec<Vec<(Slot, &'t str)>>> {
        if count == 0 {
            return None;
        }
        let item = format!("(?:{})", self.body);
        let mut pattern = format!("(?s)^{item}");
        for _ in 1..count {
            pattern.push_str(&regex::escape(sep));
            pattern.push_str(&item);
        }
        pattern.push('$');
        let re = Regex::new(&pattern).ok()?;
        let caps = re.captures(text)?;
        let slots: Vec<Slot> = self.slot_sequence().collect();
        let mut groups = caps.iter().skip(1);
        let mut items = Vec::with_capacity(count);
        for _ in 0..count {
            let mut values = Vec::with_capacity(slots.len());
            for &slot in &slots {
                values.push((slot, groups.next()??.as_str()));
            }
            items.push(values);
        }
        Some(items)
    }

    fn slot_sequence(&self) -> impl Iterator<Item = Slot> + '_ {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Slot(s) => Some(*s),
            Piece::Literal(_) => None,
        })
    }
}

fn strip_slots(text: &str, slot_syntax: &Regex) -> String {
    slot_syntax.replace_all(text, "").into_owned()
}

/// Slots a template must contain, per task and side. Any other slot is rejected.
pub fn required_slots(task: Task, side: Side) -> &'static [Slot] {
    match (task, side) {
        (Task::Iig, Side::Question) => &[Slot::Caption],
        (Task::Iig, Side::Answer) => &[Slot::Index],
        (Task::Iic, Side::Question) => &[Slot::Index],
        (Task::Iic, Side::Answer) => &[Slot::Index, Slot::Caption],
        (Task::Alr, Side::Question) => &[Slot::Direction, Slot::Caption1],
        (Task::Alr, Side::Answer) => &[Slot::Index, Slot::Caption2],
        (Task::Dvc, Side::Question) => &[],
        (Task::Dvc, Side::Answer) => &[Slot::Events],
        (Task::Tvg, Side::Question) => &[Slot::Caption],
        (Task::Tvg, Side::Answer) => &[Slot::Interval],
    }
}

/// Which arities a complete bank must provide for each task.
pub fn required_arities(task: Task) -> &'static [Arity] {
    match task {
        Task::Iig | Task::Iic => &[Arity::Single, Arity::Multi],
        Task::Alr | Task::Dvc | Task::Tvg => &[Arity::Single],
    }
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub questions: Vec<Template>,
    pub answers: Vec<Template>,
}

/// A pair of drawn template variants.
#[derive(Debug, Clone, Copy)]
pub struct TemplateChoice<'b> {
    pub question_id: usize,
    pub answer_id: usize,
    pub question: &'b Template,
    pub answer: &'b Template,
}

impl TemplateSet {
    /// Draws a question and an answer variant independently and uniformly.
    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> TemplateChoice<'_> {
        let question_id = rng.gen_range(0..self.questions.len());
        let answer_id = rng.gen_range(0..self.answers.len());
        self.pick(question_id, answer_id).expect("ids drawn in range")
    }

    pub fn pick(&self, question_id: usize, answer_id: usize) -> Option<TemplateChoice<'_>> {
        Some(TemplateChoice {
            question_id,
            answer_id,
            question: self.questions.get(question_id)?,
            answer: self.answers.get(answer_id)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TemplateBank {
    sets: BTreeMap<(Task, Arity), TemplateSet>,
}

#[derive(Deserialize)]
struct RawSet {
    questions: Vec<String>,
    answers: Vec<String>,
}

impl TemplateBank {
    /// The bank shipped in `data/templates.json`.
    pub fn builtin() -> Self {
        Self::from_json_str(BUILTIN_BANK).expect("builtin template bank is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(json: &str) -> Result<Self, TemplateError> {
        let raw: BTreeMap<Task, BTreeMap<Arity, RawSet>> = serde_json::from_str(json)?;
        let mut sets = BTreeMap::new();
        for task in Task::ALL {
            for &arity in required_arities(task) {
                let set =
                    raw.get(&task)
                        .and_then(|by_arity| by_arity.get(&arity))
                        .ok_or(TemplateError::MissingSet {
                            task,
                            arity: arity.as_str(),
                            side: "question/answer",
                        })?;
                let questions = Self::validate_side(task, arity, Side::Question, &set.questions)?;
                let answers = Self::validate_side(task, arity, Side::Answer, &set.answers)?;
                sets.insert((task, arity), TemplateSet { questions, answers });
            }
        }
        Ok(Self { sets })
    }

    fn validate_side(task: Task, arity: Arity, side: Side, texts: &[String]) -> Result<Vec<Template>, TemplateError> {
        let side_name = match side {
            Side::Question => "question",
            Side::Answer => "answer",
        };
        if texts.len() < MIN_VARIANTS {
            return Err(TemplateError::TooFewVariants {
                task,
                arity: arity.as_str(),
                side: side_name,
                found: texts.len(),
            });
        }
        let required: BTreeSet<Slot> = required_slots(task, side).iter().copied().collect();
        texts
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let context = format!("{task}/{}/{side_name}[{i}]", arity.as_str());
                let template = Template::parse_with_context(text, &context)?;
                let present = template.slots();
                if let Some(&slot) = required.difference(&present).next() {
                    return Err(TemplateError::MissingSlot { context, slot });
                }
                if let Some(&slot) = present.difference(&required).next() {
                    return Err(TemplateError::UnexpectedSlot { context, slot });
                }
                Ok(template)
            })
            .collect()
    }

    pub fn set(&self, task: Task, arity: Arity) -> &TemplateSet {
        // Construction guarantees every required (task, arity); multi falls
        // back to single for tasks that only have one arity.
        self.sets
            .get(&(task, arity))
            .or_else(|| self.sets.get(&(task, Arity::Single)))
            .expect("validated bank covers every task")
    }
}

impl Default for TemplateBank {
    fn default() -> Self {
        Self::builtin()
    }
}
