//! Dataset synthesis.
//!
//! [`build_dataset`] draws inputs from a task's input distribution and
//! splits them into word-disjoint train and eval sets; [`seq_sample`]
//! draws word sequences for sequential tasks; [`build_balanced_union`]
//! builds the equal-count training sets for unions of two relations.
//! Everything is driven by ChaCha8 streams derived from the config seed,
//! so identical inputs give byte-identical files.

mod balanced;
mod build;
mod io;
mod sequence;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{Level, TaskKind};
use crate::knowledge::StoreError;

pub use balanced::build_balanced_union;
pub use build::{build_dataset, subsample_fewshot, with_separators};
pub use io::{digest_bytes, export_dataset, import_dataset, render_jsonl, DatasetEntry, Manifest};
pub use sequence::{seq_pools, seq_sample, seq_sample_from, SeqPools};

pub const DEFAULT_SEPARATOR: &str = "#";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub seed: u64,
    pub train_size: usize,
    pub eval_size: usize,
    /// Tasks with fewer surviving examples are rejected.
    pub min_examples: usize,
    /// Input length `n` of sequential examples.
    pub seq_len: usize,
    /// Output length `m`; `None` draws it uniformly from `1..=n` per
    /// example (always `n` when the filter is constant-true).
    pub seq_out_len: Option<usize>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig { seed: 0, train_size: 1000, eval_size: 500, min_examples: 100, seq_len: 8, seq_out_len: None }
    }
}

impl GenerationConfig {
    pub fn total(&self) -> usize {
        self.train_size + self.eval_size
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Eval => "eval",
        })
    }
}

/// Answer set of one example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answers {
    /// Output words of a word-level relation.
    Set(Vec<String>),
    /// Sequential output: every sequence choosing one word per slot.
    Product(Vec<Vec<String>>),
    /// Truth value of a predicate.
    Bool(bool),
}

impl Answers {
    pub fn is_empty(&self) -> bool {
        match self {
            Answers::Set(s) => s.is_empty(),
            Answers::Product(slots) => slots.iter().any(Vec::is_empty),
            Answers::Bool(_) => false,
        }
    }

    /// Whether `label` (a word list) is one of the answers.
    pub fn contains(&self, label: &[String]) -> bool {
        match self {
            Answers::Set(s) => label.len() == 1 && s.contains(&label[0]),
            Answers::Product(slots) => {
                label.len() == slots.len() && label.iter().zip(slots).all(|(w, slot)| slot.contains(w))
            }
            Answers::Bool(b) => label.len() == 1 && label[0] == bool_word(*b),
        }
    }
}

/// Text of a predicate answer.
pub fn bool_word(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub split: Split,
    /// Input words; entities are single multi-token words.
    pub input: Vec<String>,
    pub answers: Answers,
    /// One answer drawn uniformly, as a word list.
    pub sampled_label: Vec<String>,
    /// Task that produced the label, in balanced union datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_source: Option<String>,
}

/// Token spans `[start, end)` of each word in the space-joined text.
pub fn spans(words: &[String]) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(words.len());
    let mut at = 0;
    for w in words {
        let len = w.split_whitespace().count();
        out.push((at, at + len));
        at += len;
    }
    out
}

/// Words joined by spaces, or by ` sep ` when a separator is given.
pub fn render(words: &[String], separator: Option<&str>) -> String {
    match separator {
        Some(sep) => words.join(&format!(" {sep} ")),
        None => words.join(" "),
    }
}

impl Example {
    pub fn input_spans(&self) -> Vec<(usize, usize)> {
        spans(&self.input)
    }

    pub fn input_text(&self, separator: Option<&str>) -> String {
        render(&self.input, separator)
    }

    pub fn label_text(&self, separator: Option<&str>) -> String {
        render(&self.sampled_label, separator)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    /// Canonical DSL of the task.
    pub task: String,
    pub kind: TaskKind,
    pub level: Level,
    pub config: GenerationConfig,
    /// Word boundary marker used when rendering sequential text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separator: Option<String>,
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &Example> {
        self.examples.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum RejectReason {
    /// Fewer examples survived than the configured minimum.
    TooFewExamples { survivors: usize, min: usize },
    /// The sequence sampler cannot satisfy its constraints.
    Infeasible { detail: String },
    /// Balanced union of two relations whose domains do not overlap.
    EmptyIntersection,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::TooFewExamples { survivors, min } => {
                write!(f, "only {survivors} examples survive, fewer than {min}")
            }
            RejectReason::Infeasible { detail } => write!(f, "infeasible sampler: {detail}"),
            RejectReason::EmptyIntersection => f.write_str("the two domains do not intersect"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub task: String,
    #[serde(flatten)]
    pub reason: RejectReason,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.task, self.reason)
    }
}

/// Result of a build: rejection is an ordinary outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Accepted(Dataset),
    Rejected(Rejection),
}

impl Outcome {
    pub fn accepted(self) -> Option<Dataset> {
        match self {
            Outcome::Accepted(d) => Some(d),
            Outcome::Rejected(_) => None,
        }
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            Outcome::Accepted(_) => None,
            Outcome::Rejected(r) => Some(r),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ForgeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("type error: {0}")]
    Type(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Independent stream for `(seed, purpose)`.
pub(crate) fn rng_for(seed: u64, purpose: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
