//! Categorical task selection and i.i.d. interleaving of sub-corpora.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Task;

/// Tolerance on `sum(ratios) == 1`.
pub const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixError {
    #[error("mix has no entries")]
    Empty,
    #[error("ratio for {name} is {ratio}; ratios must be finite and non-negative")]
    InvalidRatio { name: String, ratio: f64 },
    #[error("ratios sum to {0}, expected 1")]
    BadSum(f64),
    #[error("{0} appears more than once in the mix")]
    Duplicate(String),
    #[error("cannot parse mix entry {0:?} (expected NAME=WEIGHT)")]
    Syntax(String),
    #[error("stream {name} ran out after {available} items; allow replacement or lower its ratio")]
    Exhausted { name: String, available: usize },
}

/// Probabilities over tasks that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Task, f64>", into = "BTreeMap<Task, f64>")]
pub struct TaskMix {
    entries: Vec<(Task, f64)>,
    cumulative: Vec<f64>,
}

impl TaskMix {
    pub fn new(entries: Vec<(Task, f64)>) -> Result<Self, MixError> {
        check_ratios(entries.iter().map(|(t, r)| (t.as_str().to_string(), *r)))?;
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = 0.0;
        for (_, r) in &entries {
            acc += r;
            cumulative.push(acc);
        }
        Ok(Self { entries, cumulative })
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_weights(entries: Vec<(Task, f64)>) -> Result<Self, MixError> {
        let total: f64 = entries.iter().map(|(_, w)| *w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(MixError::BadSum(total));
        }
        Self::new(entries.into_iter().map(|(t, w)| (t, w / total)).collect())
    }

    pub fn uniform(tasks: &[Task]) -> Self {
        let p = 1.0 / tasks.len() as f64;
        Self::from_weights(tasks.iter().map(|t| (*t, p)).collect()).expect("uniform weights are valid")
    }

    pub fn entries(&self) -> &[(Task, f64)] {
        &self.entries
    }

    pub fn probability(&self, task: Task) -> f64 {
        self.entries.iter().find(|(t, _)| *t == task).map_or(0.0, |(_, p)| *p)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Task {
        let total = *self.cumulative.last().expect("non-empty mix");
        let u = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        // u < total, so i is in range unless trailing entries have zero weight.
        let i = i.min(self.entries.len() - 1);
        self.entries[i].0
    }
}

impl TryFrom<BTreeMap<Task, f64>> for TaskMix {
    type Error = MixError;

    fn try_from(entries: BTreeMap<Task, f64>) -> Result<Self, Self::Error> {
        Self::new(entries.into_iter().collect())
    }
}

impl From<TaskMix> for BTreeMap<Task, f64> {
    fn from(mix: TaskMix) -> Self {
        mix.entries.into_iter().collect()
    }
}

impl FromStr for TaskMix {
    type Err = MixError;

    /// `"IIG=1,IIC=1,ALR=1"`; weights are normalized.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let entries = parse_weight_list(s)?
            .into_iter()
            .map(|(name, w)| name.parse::<Task>().map(|t| (t, w)).map_err(|_| MixError::Syntax(name)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_weights(entries)
    }
}

/// Parses `NAME=WEIGHT[,NAME=WEIGHT...]`.
pub fn parse_weight_list(s: &str) -> Result<Vec<(String, f64)>, MixError> {
    s.split(',')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            let (name, weight) = part
                .rsplit_once('=')
                .ok_or_else(|| MixError::Syntax(part.to_string()))?;
            let weight: f64 = weight.trim().parse().map_err(|_| MixError::Syntax(part.to_string()))?;
            Ok((name.trim().to_string(), weight))
        })
        .collect()
}

fn check_ratios(entries: impl Iterator<Item = (String, f64)>) -> Result<(), MixError> {
    let mut names = Vec::new();
    let mut sum = 0.0;
    for (name, ratio) in entries {
        if !(ratio.is_finite() && ratio >= 0.0) {
            return Err(MixError::InvalidRatio { name, ratio });
        }
        if names.contains(&name) {
            return Err(MixError::Duplicate(name));
        }
        sum += ratio;
        names.push(name);
    }
    if names.is_empty() {
        return Err(MixError::Empty);
    }
    if (sum - 1.0).abs() > RATIO_TOLERANCE {
        return Err(MixError::BadSum(sum));
    }
    Ok(())
}

/// One input of [`mix_corpora`].
#[derive(Debug, Clone)]
pub struct MixSource<T> {
    pub name: String,
    pub ratio: f64,
    pub items: Vec<T>,
}

impl<T> MixSource<T> {
    pub fn new(name: impl Into<String>, ratio: f64, items: Vec<T>) -> Self {
        Self {
            name: name.into(),
            ratio,
            items,
        }
    }
}

/// Draws `total_n` items; each draw picks a source i.i.d. by ratio and takes
/// that source's next item, so every source keeps its internal order. With
/// `replacement`, an exhausted source starts over from its first item.
pub fn mix_corpora<T: Clone>(
    sources: &[MixSource<T>],
    total_n: usize,
    seed: u64,
    replacement: bool,
) -> Result<Vec<T>, MixError> {
    check_ratios(sources.iter().map(|s| (s.name.clone(), s.ratio)))?;
    let mut cumulative = Vec::with_capacity(sources.len());
    let mut acc = 0.0;
    for s in sources {
        acc += s.ratio;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cursors = vec![0usize; sources.len()];
    let mut out = Vec::with_capacity(total_n);
    for _ in 0..total_n {
        let u = rng.gen::<f64>() * acc;
        let i = cumulative.partition_point(|&c| c <= u).min(sources.len() - 1);
        let source = &sources[i];
        if cursors[i] >= source.items.len() {
            if !replacement || source.items.is_empty() {
                return Err(MixError::Exhausted {
                    name: source.name.clone(),
                    available: source.items.len(),
                });
            }
            cursors[i] = 0;
        }
        out.push(source.items[cursors[i]].clone());
        cursors[i] += 1;
    }
    Ok(out)
}
